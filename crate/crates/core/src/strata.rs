//! Sweeps over extension classes: which charges and which `(l(Q), l(R^1))`
//! pairs occur for a given splitting type, each with a witness.

use std::collections::{BTreeMap, HashSet};

use num_traits::One;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::algebra::{rat, BiLaurent, Monomial, Rational};
use crate::bundle::{canonical_support, BundleV, ExtensionClass};
use crate::invariants::{choose2, compute_report, InvariantReport, ReportOptions};

/// Environment variable overriding [`default_budget`].
pub const BUDGET_ENV: &str = "BLOWUP_BUDGET";

pub fn default_budget(j: u32) -> usize {
    if let Some(b) = std::env::var(BUDGET_ENV).ok().and_then(|s| s.parse().ok()) {
        return b;
    }
    if j <= 3 {
        500
    } else {
        2000
    }
}

fn class(j: u32, p: BiLaurent) -> ExtensionClass {
    ExtensionClass::new(j, p).expect("candidates are built from the canonical support")
}

fn term(c: Rational, m: Monomial) -> BiLaurent {
    BiLaurent::monomial(c, m)
}

/// Deterministic enumeration of up to `budget` distinct classes: zero, every
/// canonical monomial, every two-term sum `m1 +- m2`, then seeded random
/// sparse classes.
pub fn candidate_stream(j: u32, budget: usize, seed: u64) -> Vec<ExtensionClass> {
    let support = canonical_support(j);
    let mut seen: HashSet<BiLaurent> = HashSet::new();
    let mut out = Vec::new();
    let mut push = |p: BiLaurent, out: &mut Vec<ExtensionClass>| {
        if out.len() < budget && seen.insert(p.clone()) {
            out.push(class(j, p));
        }
    };
    push(BiLaurent::zero(), &mut out);
    for m in &support {
        push(term(Rational::one(), *m), &mut out);
    }
    for (a, ma) in support.iter().enumerate() {
        for mb in &support[a + 1..] {
            for sign in [1, -1] {
                push(
                    &term(Rational::one(), *ma) + &term(rat(sign), *mb),
                    &mut out,
                );
            }
        }
    }
    if support.is_empty() {
        return out;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Bounded so that a tiny support cannot loop forever.
    for _ in 0..budget.saturating_mul(20) {
        if out.len() >= budget {
            break;
        }
        push(random_polynomial(&mut rng, &support, 1), &mut out);
    }
    out
}

fn random_polynomial(rng: &mut ChaCha8Rng, support: &[Monomial], min_terms: usize) -> BiLaurent {
    let max_terms = support.len().min(5);
    let k = rng.gen_range(min_terms.min(max_terms)..=max_terms);
    let mut p = BiLaurent::zero();
    for m in support.choose_multiple(rng, k) {
        let c = [-2, -1, 1, 2, 3][rng.gen_range(0..5)];
        p.add_term(*m, rat(c));
    }
    p
}

/// Up to `n` distinct seeded classes with at least two terms (fewer when
/// the support is too small to supply them).
pub fn random_classes(j: u32, n: usize, seed: u64) -> Vec<ExtensionClass> {
    let support = canonical_support(j);
    if support.len() < 2 {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for _ in 0..n.saturating_mul(20) {
        if out.len() >= n {
            break;
        }
        let p = random_polynomial(&mut rng, &support, 2);
        if p.len() >= 2 && seen.insert(p.clone()) {
            out.push(class(j, p));
        }
    }
    out
}

/// Outcome of evaluating one candidate.
#[derive(Clone, Debug)]
pub struct Evaluated {
    pub class: ExtensionClass,
    pub report: Result<InvariantReport, String>,
}

/// Reports for every candidate, in stream order.
pub fn evaluate(candidates: &[ExtensionClass], opts: ReportOptions) -> Vec<Evaluated> {
    candidates
        .par_iter()
        .map(|c| Evaluated {
            class: c.clone(),
            report: compute_report(&BundleV::from_class(c.clone()), opts)
                .map_err(|e| e.to_string()),
        })
        .collect()
}

/// First witness per charge; every `k` in `[j, j^2]` has an entry.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Spectrum {
    pub j: u32,
    pub witnesses: BTreeMap<u64, Option<ExtensionClass>>,
    pub candidates: usize,
    pub failures: Vec<(ExtensionClass, String)>,
}

impl Spectrum {
    pub fn missing(&self) -> Vec<u64> {
        self.witnesses
            .iter()
            .filter(|(_, w)| w.is_none())
            .map(|(k, _)| *k)
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StrataTable {
    pub j: u32,
    /// Cells of the box `h in [j-1, C(j,2)]`, `w in [1, C(j+1,2)]`, keyed
    /// by `(w, h)`.
    pub cells: BTreeMap<(u64, u64), Option<ExtensionClass>>,
    /// Pairs seen outside that box, with their first witness.
    pub outside_box: BTreeMap<(u64, u64), ExtensionClass>,
    pub spectrum: Spectrum,
    /// Non-split candidates reaching the maximal cell.
    pub max_cell_review: Vec<ExtensionClass>,
}

impl StrataTable {
    pub fn unfilled(&self) -> Vec<(u64, u64)> {
        self.cells
            .iter()
            .filter(|(_, w)| w.is_none())
            .map(|(c, _)| *c)
            .collect()
    }

    /// Every observed pair with its witness, box cells first.
    pub fn rows(&self) -> Vec<((u64, u64), &ExtensionClass)> {
        let mut rows: Vec<_> = self
            .cells
            .iter()
            .filter_map(|(c, w)| w.as_ref().map(|w| (*c, w)))
            .chain(self.outside_box.iter().map(|(c, w)| (*c, w)))
            .collect();
        rows.sort_by_key(|(c, _)| *c);
        rows
    }
}

pub fn box_limits(j: u32) -> ((u64, u64), (u64, u64)) {
    let jj = j as i64;
    let h = ((j as u64).saturating_sub(1), choose2(jj));
    let w = (if j == 0 { 0 } else { 1 }, choose2(jj + 1));
    (w, h)
}

fn charge_range(j: u32) -> std::ops::RangeInclusive<u64> {
    let j = j as u64;
    j..=j * j
}

fn collect(j: u32, evaluated: &[Evaluated]) -> StrataTable {
    let ((wlo, whi), (hlo, hhi)) = box_limits(j);
    let mut cells: BTreeMap<(u64, u64), Option<ExtensionClass>> = BTreeMap::new();
    for w in wlo..=whi {
        for h in hlo..=hhi {
            cells.insert((w, h), None);
        }
    }
    let mut witnesses: BTreeMap<u64, Option<ExtensionClass>> =
        charge_range(j).map(|k| (k, None)).collect();
    let mut outside_box = BTreeMap::new();
    let mut failures = Vec::new();
    let mut max_cell_review = Vec::new();
    for e in evaluated {
        let r = match &e.report {
            Ok(r) => r,
            Err(msg) => {
                failures.push((e.class.clone(), msg.clone()));
                continue;
            }
        };
        let cell = r.cell();
        match cells.get_mut(&cell) {
            Some(slot) => {
                slot.get_or_insert_with(|| e.class.clone());
            }
            None => {
                outside_box.entry(cell).or_insert_with(|| e.class.clone());
            }
        }
        witnesses
            .entry(r.charge)
            .or_insert(None)
            .get_or_insert_with(|| e.class.clone());
        if cell == (whi, hhi) && !e.class.p().is_zero() {
            max_cell_review.push(e.class.clone());
        }
    }
    StrataTable {
        j,
        cells,
        outside_box,
        spectrum: Spectrum {
            j,
            witnesses,
            candidates: evaluated.len(),
            failures,
        },
        max_cell_review,
    }
}

pub fn strata_survey(j: u32, budget: usize, seed: u64) -> StrataTable {
    let stream = candidate_stream(j, budget, seed);
    collect(j, &evaluate(&stream, ReportOptions::default()))
}

pub fn charge_spectrum(j: u32, budget: usize, seed: u64) -> Spectrum {
    strata_survey(j, budget, seed).spectrum
}

/// First class in stream order with `l(Q) = lq` and `l(R^1) = lr1`.
pub fn witness(j: u32, lq: u64, lr1: u64, budget: usize, seed: u64) -> Option<ExtensionClass> {
    let stream = candidate_stream(j, budget, seed);
    for chunk in stream.chunks(64) {
        let hit = evaluate(chunk, ReportOptions::default())
            .into_iter()
            .find(|e| matches!(&e.report, Ok(r) if r.cell() == (lq, lr1)));
        if let Some(e) = hit {
            return Some(e.class);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stream_order() {
        let s = candidate_stream(2, 10, 0);
        let ps: Vec<String> = s.iter().map(|c| c.p().to_string()).collect();
        assert_eq!(&ps[..4], ["0", "u", "z*u", "z*u^2"]);
        assert_eq!(ps[4], "u + z*u");
        assert_eq!(ps.len(), 10);
        assert_eq!(candidate_stream(1, 50, 0).len(), 1);
        assert_eq!(candidate_stream(3, 10, 0), candidate_stream(3, 40, 0)[..10]);
        let distinct: HashSet<_> = candidate_stream(3, 200, 5).into_iter().collect();
        assert_eq!(distinct.len(), 200);
    }

    #[test]
    fn random_classes_are_multi_term() {
        let r = random_classes(3, 30, 1);
        assert_eq!(r.len(), 30);
        assert!(r.iter().all(|c| c.p().len() >= 2));
        assert_eq!(r, random_classes(3, 30, 1));
        assert!(random_classes(1, 5, 0).is_empty());
    }

    #[test]
    fn seeded_tail_is_reproducible() {
        assert_eq!(candidate_stream(3, 300, 9), candidate_stream(3, 300, 9));
        assert_ne!(candidate_stream(3, 300, 9), candidate_stream(3, 300, 10));
    }

    #[test]
    fn small_surveys() {
        let t = strata_survey(1, 10, 0);
        assert_eq!(t.spectrum.witnesses.len(), 1);
        assert!(t.spectrum.witnesses[&1].as_ref().unwrap().p().is_zero());

        let t = strata_survey(2, 40, 0);
        assert_eq!(t.cells.len(), 3);
        assert!(t.unfilled().is_empty());
        assert!(t.cells[&(3, 1)].as_ref().unwrap().p().is_zero());
        assert!(t.spectrum.missing().is_empty());
        assert!(t.max_cell_review.is_empty());
    }

    #[test]
    fn witness_search() {
        let w = witness(2, 3, 1, 50, 0).unwrap();
        assert!(w.p().is_zero());
        assert!(witness(2, 9, 9, 20, 0).is_none());
    }
}
