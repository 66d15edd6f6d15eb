//! The direct image `M = (pi_* V)_0` as a module over `C[[x, y]]`, its dual,
//! double dual, and `l(Q) = dim coker(M -> M^vv)`.
//!
//! The blow-down is `x = u`, `y = z u`, so `x^a y^b` is the function
//! `z^b u^(a+b)` and the ring embeds in [`BiLaurent`]. Module elements (the
//! sections of `V` as well as vectors over the ring) are stored in that
//! embedded form and multiplied by monomials as plain shifts.
//!
//! Everything is exact linear algebra bounded by a filtration degree. For a
//! vector `e` with per-component shifts `w_k` the degree is
//! `max_k (udeg e_k + w_k)`; multiplying by `x` or `y` raises it by one.
//! Sections use shifts `(-m, 0)` with `m` the u-multiplicity of `p`, which
//! puts the generators of the worked examples in degree zero.

use std::fmt;

use num_traits::One;

use crate::algebra::{parse::write_term, BiLaurent, Monomial, Rational};
use crate::bundle::{u_multiplicity, BundleV, Multiplicity};
use crate::cech::{self, CechError};
use crate::linalg::{self, Echelon, Indexer, SparseVec};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DirImgError {
    #[error("direct image did not stabilize over degree caps {caps:?} (generators, relations, l(Q)) = {values:?}")]
    NonStabilized {
        caps: Vec<u32>,
        values: Vec<(usize, usize, i64)>,
    },
    #[error("negative cokernel length {0} at degree cap {1}")]
    NegativeLength(i64, u32),
    #[error(transparent)]
    Cech(#[from] CechError),
}

/// Power series in `x, y` with every term of total degree above `maxdeg`
/// dropped.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TruncRing {
    pub maxdeg: u32,
}

impl TruncRing {
    /// Monomials `x^a y^b` with `a + b = d`, ordered by decreasing `a`.
    pub fn monomials_of_degree(d: u32) -> impl Iterator<Item = (u32, u32)> {
        (0..=d).rev().map(move |a| (a, d - a))
    }

    pub fn truncate(&self, f: &XYPoly) -> XYPoly {
        XYPoly(f.0.truncate_udeg(self.maxdeg))
    }

    pub fn mul(&self, f: &XYPoly, g: &XYPoly) -> XYPoly {
        self.truncate(&XYPoly(&f.0 * &g.0))
    }

    /// Number of monomials of degree `<= maxdeg`.
    pub fn dim(&self) -> usize {
        let d = self.maxdeg as usize;
        (d + 1) * (d + 2) / 2
    }
}

/// Polynomial in `x, y`, stored through the embedding `x^a y^b -> z^b u^(a+b)`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct XYPoly(BiLaurent);

fn xy_monomial(a: u32, b: u32) -> Monomial {
    Monomial::new(b as i64, a + b)
}

impl XYPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        XYPoly(BiLaurent::one())
    }

    pub fn monomial(c: Rational, a: u32, b: u32) -> Self {
        XYPoly(BiLaurent::monomial(c, xy_monomial(a, b)))
    }

    pub fn x() -> Self {
        Self::monomial(Rational::one(), 1, 0)
    }

    pub fn y() -> Self {
        Self::monomial(Rational::one(), 0, 1)
    }

    /// The pulled-back function on the `U` chart, or `None` if `q` is not a
    /// polynomial in `u` and `z u`.
    pub fn from_function(q: &BiLaurent) -> Option<Self> {
        q.monomials()
            .all(|m| 0 <= m.zexp && m.zexp <= m.udeg as i64)
            .then(|| XYPoly(q.clone()))
    }

    pub fn as_function(&self) -> &BiLaurent {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn coeff(&self, a: u32, b: u32) -> Rational {
        self.0.coeff(xy_monomial(a, b))
    }

    /// `(a, b, coefficient)` triples.
    pub fn terms(&self) -> impl Iterator<Item = (u32, u32, &Rational)> {
        self.0
            .terms()
            .map(|(m, c)| (m.udeg - m.zexp as u32, m.zexp as u32, c))
    }

    pub fn total_degree(&self) -> Option<u32> {
        self.0.max_udeg()
    }

    pub fn order(&self) -> Option<u32> {
        self.0.min_udeg()
    }
}

impl fmt::Display for XYPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_zero() {
            return f.write_str("0");
        }
        for (idx, (a, b, c)) in self.terms().enumerate() {
            let mut factors = Vec::new();
            for (name, e) in [("x", a), ("y", b)] {
                match e {
                    0 => {}
                    1 => factors.push(name.to_string()),
                    e => factors.push(format!("{name}^{e}")),
                }
            }
            write_term(f, idx == 0, c, &factors)?;
        }
        Ok(())
    }
}

type Elem = Vec<BiLaurent>;

fn mul_xy(e: &[BiLaurent], a: u32, b: u32) -> Elem {
    let m = xy_monomial(a, b);
    e.iter().map(|c| c.shift(m)).collect()
}

fn degree(e: &[BiLaurent], shifts: &[i64]) -> Option<i64> {
    e.iter()
        .zip(shifts)
        .filter_map(|(c, w)| c.max_udeg().map(|d| d as i64 + w))
        .max()
}

fn flatten(e: &[BiLaurent], ix: &mut Indexer<(usize, Monomial)>) -> SparseVec {
    let entries: Vec<(usize, Rational)> = e
        .iter()
        .enumerate()
        .flat_map(|(k, c)| c.terms().map(move |(m, x)| ((k, *m), x.clone())))
        .map(|(key, x)| (ix.intern(key), x))
        .collect();
    linalg::from_rationals(entries)
}

/// Picks generators degree by degree: a candidate is kept iff it is not in
/// the span of the ring multiples (of degree at most its own) of the
/// generators kept so far. `candidates` must be sorted by degree.
fn minimal_generators(candidates: &[(Elem, i64)], shifts: &[i64], dmax: i64) -> Vec<(Elem, i64)> {
    let mut chosen: Vec<(Elem, i64)> = Vec::new();
    let Some(dmin) = candidates.iter().map(|(_, d)| *d).min() else {
        return chosen;
    };
    let mut ix = Indexer::new();
    let mut ech = Echelon::new();
    let mut next = 0;
    for d in dmin..=dmax {
        for (g, e) in &chosen {
            let k = (d - e) as u32;
            for (a, b) in TruncRing::monomials_of_degree(k) {
                ech.insert(flatten(&mul_xy(g, a, b), &mut ix));
            }
        }
        while next < candidates.len() && candidates[next].1 == d {
            let (c, _) = &candidates[next];
            debug_assert_eq!(degree(c, shifts), Some(d));
            if ech.insert(flatten(c, &mut ix)) {
                chosen.push((c.clone(), d));
            }
            next += 1;
        }
    }
    chosen
}

/// Minimal generators (by degree) of the relations `r` with
/// `sum_k r_k elements[k] = 0`, where component `k` of a relation carries the
/// shift `shifts[k]` and only relations of degree `<= dhi` are searched.
fn filtered_syzygies(elements: &[Elem], shifts: &[i64], dhi: i64) -> Vec<(Elem, i64)> {
    let n = elements.len();
    let mut unknowns: Vec<(i64, usize, u32, u32)> = Vec::new();
    for (k, w) in shifts.iter().enumerate() {
        if dhi < *w {
            continue;
        }
        for t in 0..=(dhi - w) as u32 {
            for (a, b) in TruncRing::monomials_of_degree(t) {
                unknowns.push((w + t as i64, k, a, b));
            }
        }
    }
    unknowns.sort();
    let mut ix: Indexer<(usize, Monomial)> = Indexer::new();
    let images: Vec<Vec<(usize, Rational)>> = unknowns
        .iter()
        .map(|(_, k, a, b)| {
            let e = mul_xy(&elements[*k], *a, *b);
            let mut out = Vec::new();
            for (comp, c) in e.iter().enumerate() {
                for (m, x) in c.terms() {
                    out.push((ix.intern((comp, *m)), x.clone()));
                }
            }
            out
        })
        .collect();
    let candidates: Vec<(Elem, i64)> = linalg::kernel_rational(images)
        .into_iter()
        .map(|(f, rel)| {
            let mut r = vec![BiLaurent::zero(); n];
            for (idx, c) in rel {
                let (_, k, a, b) = unknowns[idx];
                r[k].add_term(xy_monomial(a, b), c);
            }
            (r, unknowns[f].0)
        })
        .collect();
    minimal_generators(&candidates, shifts, dhi)
}

/// Generator degrees and relation columns of a finitely presented module.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Presentation {
    pub degrees: Vec<i64>,
    /// Each relation is a vector of ring elements, one per generator, with
    /// its filtration degree.
    pub rels: Vec<(Vec<XYPoly>, i64)>,
}

impl Presentation {
    pub fn num_gens(&self) -> usize {
        self.degrees.len()
    }

    pub fn num_rels(&self) -> usize {
        self.rels.len()
    }
}

/// `M` realized by explicit sections, with the cap it was computed at.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModulePresentation {
    pub sections: Vec<Vec<BiLaurent>>,
    pub presentation: Presentation,
    pub cap: TruncRing,
}

impl ModulePresentation {
    /// Presentation of the submodule generated by `sections` (with the given
    /// filtration degrees), relations searched up to degree `cap + 2`.
    pub fn from_generators(
        sections: Vec<Vec<BiLaurent>>,
        degrees: Vec<i64>,
        cap: TruncRing,
    ) -> Self {
        let dhi = cap.maxdeg as i64 + 2;
        let rels = filtered_syzygies(&sections, &degrees, dhi)
            .into_iter()
            .map(|(r, d)| (r.into_iter().map(XYPoly).collect(), d))
            .collect();
        ModulePresentation {
            sections,
            presentation: Presentation { degrees, rels },
            cap,
        }
    }

    pub fn num_gens(&self) -> usize {
        self.sections.len()
    }

    /// Substitutes the sections into every relation.
    pub fn relations_hold(&self) -> bool {
        self.presentation.rels.iter().all(|(r, _)| {
            let rank = self.sections.first().map_or(0, Vec::len);
            let mut total = vec![BiLaurent::zero(); rank];
            for (coef, s) in r.iter().zip(&self.sections) {
                for (t, c) in total.iter_mut().zip(s) {
                    *t += &(coef.as_function() * c);
                }
            }
            total.iter().all(BiLaurent::is_zero)
        })
    }
}

fn section_shifts(b: &BundleV) -> Vec<i64> {
    let m = match u_multiplicity(b.p()) {
        Multiplicity::Finite(m) => m as i64,
        Multiplicity::Split => 0,
    };
    vec![-m, 0]
}

/// Sections of `V` of filtration degree `<= dmax`, as a degree-sorted basis.
fn filtered_sections(b: &BundleV, shifts: &[i64], dmax: i64) -> Vec<(Elem, i64)> {
    let j = b.j() as i64;
    let mut unknowns: Vec<(i64, usize, u32, i64)> = Vec::new();
    for (k, w) in shifts.iter().enumerate() {
        if dmax < *w {
            continue;
        }
        for i in 0..=(dmax - w) as u32 {
            for l in 0..=(i as i64 + j) {
                unknowns.push((i as i64 + w, k, i, l));
            }
        }
    }
    unknowns.sort();
    let keys: Vec<(usize, Monomial)> = unknowns
        .iter()
        .map(|(_, k, i, l)| (*k, Monomial::new(*l, *i)))
        .collect();
    cech::section_kernel(b.transition(), &keys)
        .into_iter()
        .map(|s| {
            let d = degree(&s, shifts).expect("kernel vectors are nonzero");
            (s, d)
        })
        .collect()
}

/// `M` at degree cap `D`: minimal generators among sections of degree
/// `<= D` and their relations up to degree `D + 2`.
pub fn presentation_at(b: &BundleV, cap: TruncRing) -> ModulePresentation {
    let shifts = section_shifts(b);
    let sections = filtered_sections(b, &shifts, cap.maxdeg as i64);
    let gens = minimal_generators(&sections, &shifts, cap.maxdeg as i64);
    let (sections, degrees): (Vec<_>, Vec<_>) = gens.into_iter().unzip();
    ModulePresentation::from_generators(sections, degrees, cap)
}

/// [`presentation_at`] checked against the cap `D + 2`.
pub fn pushforward_module(b: &BundleV, cap: TruncRing) -> Result<ModulePresentation, DirImgError> {
    let here = presentation_at(b, cap);
    let there = presentation_at(
        b,
        TruncRing {
            maxdeg: cap.maxdeg + 2,
        },
    );
    if here.num_gens() != there.num_gens() {
        return Err(DirImgError::NonStabilized {
            caps: vec![cap.maxdeg, cap.maxdeg + 2],
            values: vec![
                (here.num_gens(), here.presentation.num_rels(), -1),
                (there.num_gens(), there.presentation.num_rels(), -1),
            ],
        });
    }
    Ok(here)
}

/// `Hom(M, R)`: each element is the vector of images of the generators.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DualModule {
    pub elements: Vec<Vec<XYPoly>>,
    pub presentation: Presentation,
}

impl DualModule {
    /// Every element kills every relation of `of`.
    pub fn annihilates(&self, of: &Presentation) -> bool {
        self.elements.iter().all(|phi| {
            of.rels.iter().all(|(r, _)| {
                let mut acc = BiLaurent::zero();
                for (a, b) in phi.iter().zip(r) {
                    acc += &(a.as_function() * b.as_function());
                }
                acc.is_zero()
            })
        })
    }
}

fn embed(v: &[XYPoly]) -> Elem {
    v.iter().map(|f| f.0.clone()).collect()
}

/// Generators of `{phi in R^g : phi . rels = 0}` up to degree `dhi`, where
/// component `k` has shift `-deg(g_k)`, together with their own relations.
pub fn dualize(m: &Presentation, dhi: i64) -> DualModule {
    let g = m.num_gens();
    let rows: Vec<Elem> = (0..g)
        .map(|k| m.rels.iter().map(|(r, _)| r[k].0.clone()).collect())
        .collect();
    let shifts: Vec<i64> = m.degrees.iter().map(|d| -d).collect();
    let gens = filtered_syzygies(&rows, &shifts, dhi);
    let degrees: Vec<i64> = gens.iter().map(|(_, d)| *d).collect();
    let elems: Vec<Elem> = gens.into_iter().map(|(e, _)| e).collect();
    let rels = filtered_syzygies(&elems, &degrees, dhi + 2)
        .into_iter()
        .map(|(r, d)| (r.into_iter().map(XYPoly).collect(), d))
        .collect();
    DualModule {
        elements: elems
            .into_iter()
            .map(|e| e.into_iter().map(XYPoly).collect())
            .collect(),
        presentation: Presentation { degrees, rels },
    }
}

/// `rho: M -> M^vv`; row `i` is the image of generator `i` of `M`, written
/// in the coordinates of `R^h` (`h` = number of generators of `M^v`), i.e.
/// `rows[i][k] = psi_k(g_i)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EvalMap {
    pub rows: Vec<Vec<XYPoly>>,
}

pub fn eval_map(m: &Presentation, dual: &DualModule) -> EvalMap {
    EvalMap {
        rows: (0..m.num_gens())
            .map(|i| dual.elements.iter().map(|psi| psi[i].clone()).collect())
            .collect(),
    }
}

/// `dim (N + m^K) / m^K` for the submodule `N` of `R^h` spanned by `vectors`.
fn truncated_span_dim(vectors: &[Elem], k: u32) -> usize {
    let mut ix = Indexer::new();
    let mut ech = Echelon::new();
    for v in vectors {
        let Some(ord) = v.iter().filter_map(BiLaurent::min_udeg).min() else {
            continue;
        };
        for t in 0..k.saturating_sub(ord) {
            for (a, b) in TruncRing::monomials_of_degree(t) {
                let w: Elem = mul_xy(v, a, b)
                    .into_iter()
                    .map(|c| c.truncate_udeg(k - 1))
                    .collect();
                ech.insert(flatten(&w, &mut ix));
            }
        }
    }
    ech.rank()
}

/// Everything computed at one degree cap.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LqComputation {
    pub cap: TruncRing,
    pub module: ModulePresentation,
    pub dual: DualModule,
    pub double_dual: DualModule,
    pub rho: EvalMap,
    pub lq: i64,
}

impl LqComputation {
    fn signature(&self) -> (usize, usize, i64) {
        (
            self.module.num_gens(),
            self.module.presentation.num_rels(),
            self.lq,
        )
    }
}

/// Dual, double dual, `rho` and the cokernel length for a given `M`.
pub fn lq_of_module(module: ModulePresentation) -> LqComputation {
    let cap = module.cap;
    let dhi = cap.maxdeg as i64;
    let dual = dualize(&module.presentation, dhi);
    let double_dual = dualize(&dual.presentation, dhi);
    let rho = eval_map(&module.presentation, &dual);
    let k = cap.maxdeg + 1;
    let n1: Vec<Elem> = double_dual.elements.iter().map(|v| embed(v)).collect();
    let n2: Vec<Elem> = rho.rows.iter().map(|v| embed(v)).collect();
    let lq = truncated_span_dim(&n1, k) as i64 - truncated_span_dim(&n2, k) as i64;
    LqComputation {
        cap,
        module,
        dual,
        double_dual,
        rho,
        lq,
    }
}

/// Result of the degree-cap schedule.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LqResult {
    pub lq: usize,
    pub degree_cap: u32,
    pub caps_tried: Vec<u32>,
    pub computation: LqComputation,
}

/// Degree-cap schedule: start at `2j + 2`, step 2, accept a cap when the
/// generator count, relation count and `l(Q)` agree with the next cap.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CapSchedule {
    pub step: u32,
    pub max_steps: usize,
}

impl Default for CapSchedule {
    fn default() -> Self {
        CapSchedule {
            step: 2,
            max_steps: 5,
        }
    }
}

pub fn default_cap(j: u32) -> u32 {
    2 * j + 2
}

pub fn lq_detail(
    b: &BundleV,
    start: Option<u32>,
    schedule: CapSchedule,
) -> Result<LqResult, DirImgError> {
    let mut cap = start.unwrap_or_else(|| default_cap(b.j()));
    let mut caps = vec![cap];
    let mut prev = lq_of_module(presentation_at(b, TruncRing { maxdeg: cap }));
    let mut values = vec![prev.signature()];
    for _ in 0..schedule.max_steps {
        cap += schedule.step;
        let next = lq_of_module(presentation_at(b, TruncRing { maxdeg: cap }));
        caps.push(cap);
        values.push(next.signature());
        if next.signature() == prev.signature() {
            if prev.lq < 0 {
                return Err(DirImgError::NegativeLength(prev.lq, prev.cap.maxdeg));
            }
            return Ok(LqResult {
                lq: prev.lq as usize,
                degree_cap: prev.cap.maxdeg,
                caps_tried: caps,
                computation: prev,
            });
        }
        prev = next;
    }
    Err(DirImgError::NonStabilized { caps, values })
}

pub fn lq_oracle(b: &BundleV) -> Result<usize, DirImgError> {
    Ok(lq_detail(b, None, CapSchedule::default())?.lq)
}

/// Local charge `l(Q) + l(R^1)`.
pub fn charge(b: &BundleV) -> Result<usize, DirImgError> {
    Ok(lq_oracle(b)? + cech::r1_oracle(b)?)
}
