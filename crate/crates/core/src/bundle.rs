//! Rank-2 bundles in canonical extension form.
//!
//! `V(j, p)` is glued by `s_V = T s_U` with `T = [[z^j, p], [0, z^-j]]`,
//! where `p` is supported on the canonical index set
//! `1 <= i <= 2j-2`, `i-j+1 <= l <= j-1` (monomials `z^l u^i`).

use std::fmt;

use crate::algebra::{BiLaurent, MatrixBL, Monomial};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BundleError {
    #[error("monomial {monomial} lies outside the canonical support for j = {j}")]
    CanonicalSupportViolation { j: u32, monomial: String },
}

/// The pair `(j, p)`; `p` is already known to lie on the canonical support.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ExtensionClass {
    j: u32,
    p: BiLaurent,
}

impl ExtensionClass {
    pub fn new(j: u32, p: BiLaurent) -> Result<Self, BundleError> {
        if let Some(m) = p.monomials().find(|m| !in_canonical_support(j, *m)) {
            return Err(BundleError::CanonicalSupportViolation {
                j,
                monomial: BiLaurent::zu(m.zexp, m.udeg).to_string(),
            });
        }
        Ok(ExtensionClass { j, p })
    }

    pub fn split(j: u32) -> Self {
        ExtensionClass {
            j,
            p: BiLaurent::zero(),
        }
    }

    pub fn j(&self) -> u32 {
        self.j
    }

    pub fn p(&self) -> &BiLaurent {
        &self.p
    }
}

impl fmt::Display for ExtensionClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "j={} p={}", self.j, self.p)
    }
}

pub fn in_canonical_support(j: u32, m: Monomial) -> bool {
    let (j, i, l) = (j as i64, m.udeg as i64, m.zexp);
    (1..=2 * j - 2).contains(&i) && (i - j + 1..j).contains(&l)
}

/// Canonical monomials for `j`, ordered by u-degree then z-exponent.
pub fn canonical_support(j: u32) -> Vec<Monomial> {
    let jj = j as i64;
    let mut out = Vec::new();
    for i in 1..=(2 * jj - 2) {
        for l in (i - jj + 1)..=(jj - 1) {
            out.push(Monomial::new(l, i as u32));
        }
    }
    out
}

/// A validated bundle together with its transition matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BundleV {
    ext: ExtensionClass,
    t: MatrixBL,
}

impl BundleV {
    pub fn from_class(ext: ExtensionClass) -> Self {
        let j = ext.j as i64;
        let t = MatrixBL::from_rows(vec![
            vec![BiLaurent::zu(j, 0), ext.p.clone()],
            vec![BiLaurent::zero(), BiLaurent::zu(-j, 0)],
        ]);
        BundleV { ext, t }
    }

    pub fn ext(&self) -> &ExtensionClass {
        &self.ext
    }

    pub fn j(&self) -> u32 {
        self.ext.j
    }

    pub fn p(&self) -> &BiLaurent {
        &self.ext.p
    }

    pub fn transition(&self) -> &MatrixBL {
        &self.t
    }

    pub fn is_split(&self) -> bool {
        self.ext.p.is_zero()
    }
}

pub fn make_bundle(j: u32, p: BiLaurent) -> Result<BundleV, BundleError> {
    Ok(BundleV::from_class(ExtensionClass::new(j, p)?))
}

/// Largest power of `u` dividing `p`, or `Split` for `p = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Multiplicity {
    Finite(u32),
    Split,
}

impl fmt::Display for Multiplicity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Multiplicity::Finite(m) => write!(f, "{m}"),
            Multiplicity::Split => f.write_str("SPLIT"),
        }
    }
}

pub fn u_multiplicity(p: &BiLaurent) -> Multiplicity {
    match p.min_udeg() {
        Some(m) => Multiplicity::Finite(m),
        None => Multiplicity::Split,
    }
}

pub fn splitting_type(b: &BundleV) -> u32 {
    b.j()
}

/// Transition matrix of `End V` acting on `vec(M) = (b, a, d, c)` for
/// `M = [[a, b], [c, d]]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EndBundleT {
    pub t_end: MatrixBL,
}

pub fn end_transition(b: &BundleV) -> EndBundleT {
    let j = b.j() as i64;
    let p = b.p();
    let zero = BiLaurent::zero;
    let one = BiLaurent::one;
    let t_end = MatrixBL::from_rows(vec![
        vec![
            BiLaurent::zu(2 * j, 0),
            -p.shift(Monomial::new(j, 0)),
            p.shift(Monomial::new(j, 0)),
            -(p * p),
        ],
        vec![zero(), one(), zero(), p.shift(Monomial::new(-j, 0))],
        vec![zero(), zero(), one(), -p.shift(Monomial::new(-j, 0))],
        vec![zero(), zero(), zero(), BiLaurent::zu(-2 * j, 0)],
    ]);
    EndBundleT { t_end }
}

/// `[[a, b], [c, d]] -> [b, a, d, c]`.
pub fn vectorize(m: &MatrixBL) -> Vec<BiLaurent> {
    vec![
        m.get(0, 1).clone(),
        m.get(0, 0).clone(),
        m.get(1, 1).clone(),
        m.get(1, 0).clone(),
    ]
}

/// Inverse of [`vectorize`].
pub fn unvectorize(v: &[BiLaurent]) -> MatrixBL {
    MatrixBL::from_rows(vec![
        vec![v[1].clone(), v[0].clone()],
        vec![v[3].clone(), v[2].clone()],
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::parse_polynomial;

    fn p(s: &str) -> BiLaurent {
        parse_polynomial(s).unwrap()
    }

    #[test]
    fn canonical_transition() {
        let b = make_bundle(2, p("z*u")).unwrap();
        assert_eq!(b.transition().get(0, 0), &p("z^2"));
        assert_eq!(b.transition().get(0, 1), &p("z*u"));
        assert_eq!(b.transition().get(1, 1), &p("z^-2"));
        assert_eq!(b.transition().det().unwrap(), BiLaurent::one());

        let b = make_bundle(1, p("0")).unwrap();
        assert_eq!(b.transition().get(0, 0), &p("z"));
        assert!(b.transition().get(0, 1).is_zero());
    }

    #[test]
    fn support_violations() {
        let e = make_bundle(2, p("u^3")).unwrap_err();
        assert_eq!(
            e,
            BundleError::CanonicalSupportViolation {
                j: 2,
                monomial: "u^3".into()
            }
        );
        assert!(make_bundle(1, p("u")).is_err());
        assert!(make_bundle(0, p("u")).is_err());
        assert!(make_bundle(2, p("z^-1*u")).is_err());
        assert!(make_bundle(3, p("z^-1*u + z^2*u")).is_ok());
    }

    #[test]
    fn support_counts() {
        assert_eq!(canonical_support(0), vec![]);
        assert_eq!(canonical_support(1), vec![]);
        assert_eq!(
            canonical_support(2),
            vec![
                Monomial::new(0, 1),
                Monomial::new(1, 1),
                Monomial::new(1, 2)
            ]
        );
        for j in 0..6u32 {
            let n = (2 * j as i64 - 2).max(0) * (2 * j as i64 - 1).max(0) / 2;
            assert_eq!(canonical_support(j).len() as i64, n);
        }
    }

    #[test]
    fn multiplicity() {
        assert_eq!(u_multiplicity(&p("z*u")), Multiplicity::Finite(1));
        assert_eq!(u_multiplicity(&p("z^2*u^3 + u^2")), Multiplicity::Finite(2));
        assert_eq!(u_multiplicity(&p("0")), Multiplicity::Split);
        assert_eq!(splitting_type(&make_bundle(3, p("u^2")).unwrap()), 3);
    }

    #[test]
    fn end_matrix_entries() {
        let t = end_transition(&make_bundle(1, p("0")).unwrap()).t_end;
        for i in 0..4 {
            for k in 0..4 {
                let want = match (i, k) {
                    (0, 0) => p("z^2"),
                    (1, 1) | (2, 2) => p("1"),
                    (3, 3) => p("z^-2"),
                    _ => BiLaurent::zero(),
                };
                assert_eq!(t.get(i, k), &want);
            }
        }
        let t = end_transition(&make_bundle(2, p("u")).unwrap()).t_end;
        assert_eq!(t.get(0, 1), &p("-z^2*u"));
        assert_eq!(t.get(1, 3), &p("z^-2*u"));
        assert_eq!(t.det().unwrap(), BiLaurent::one());
    }

    #[test]
    fn conjugation_identity() {
        for (j, q) in [(2, "u"), (3, "z^2*u + z*u^3 - 2*z^-1*u"), (1, "0")] {
            let b = make_bundle(j, p(q)).unwrap();
            let t = b.transition();
            let tinv = t.inverse().unwrap();
            let te = end_transition(&b).t_end;
            for k in 0..4 {
                let mut basis = vec![BiLaurent::zero(); 4];
                basis[k] = BiLaurent::one();
                let m = unvectorize(&basis);
                let conj = &(t * &m) * &tinv;
                assert_eq!(te.apply(&basis), vectorize(&conj), "j={j} p={q} k={k}");
            }
        }
    }
}
