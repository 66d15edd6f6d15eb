use proptest::prelude::*;

use blowup::algebra::{parse_polynomial, ratio, BiLaurent, Monomial, Window};
use blowup::bundle::{
    canonical_support, end_transition, unvectorize, vectorize, BundleV, ExtensionClass,
};
use blowup::cech::{self, default_window, Enlargement};
use blowup::cli::{parse_report_json, render_json, ReportJson};
use blowup::dirimg::{self, lq_of_module, presentation_at, ModulePresentation, TruncRing};
use blowup::invariants::{bounds_check, compute_report, ReportOptions};
use blowup::linalg::{self, SparseVec};

fn poly() -> impl Strategy<Value = BiLaurent> {
    prop::collection::vec((-3i64..=3, 0u32..=3, -4i64..=4, 1i64..=3), 0..5).prop_map(|terms| {
        BiLaurent::from_terms(
            terms
                .into_iter()
                .map(|(l, i, n, d)| (Monomial::new(l, i), ratio(n, d))),
        )
    })
}

/// A class on the canonical support with small integer coefficients.
fn class(jmin: u32, jmax: u32) -> impl Strategy<Value = ExtensionClass> {
    (jmin..=jmax)
        .prop_flat_map(|j| {
            let n = canonical_support(j).len();
            (Just(j), prop::collection::vec(-2i64..=2, n))
        })
        .prop_map(|(j, coeffs)| {
            let p = BiLaurent::from_terms(
                canonical_support(j)
                    .into_iter()
                    .zip(coeffs)
                    .filter(|(_, c)| *c != 0)
                    .map(|(m, c)| (m, ratio(c, 1))),
            );
            ExtensionClass::new(j, p).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ring_axioms(a in poly(), b in poly(), c in poly()) {
        prop_assert_eq!(&a + &b, &b + &a);
        prop_assert_eq!(&a * &b, &b * &a);
        prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
        prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
        prop_assert!((&a - &a).is_zero());
        prop_assert_eq!(&a * &BiLaurent::one(), a.clone());
    }

    #[test]
    fn display_parses_back(a in poly()) {
        prop_assert_eq!(parse_polynomial(&a.to_string()).unwrap(), a);
    }

    #[test]
    fn truncation_is_idempotent(a in poly(), umax in 0u32..4, zmin in -3i64..0, zmax in 0i64..3) {
        let w = Window::new(umax, zmin, zmax).unwrap();
        let once = a.truncate(&w);
        prop_assert_eq!(once.truncate(&w), once.clone());
        prop_assert!(once.monomials().all(|m| w.contains(&m)));
    }

    #[test]
    fn v_chart_round_trip(a in poly()) {
        prop_assert_eq!(a.to_v_chart().to_u_chart(), a.clone());
        prop_assert_eq!(a.to_v_chart().is_holomorphic(), a.is_holomorphic_v());
    }

    #[test]
    fn kernel_relations_vanish(rows in prop::collection::vec(prop::collection::vec((0usize..6, -3i64..=3), 0..4), 1..8)) {
        let images: Vec<SparseVec> = rows
            .iter()
            .map(|r| {
                let entries = r.iter().map(|(i, x)| (*i, ratio(*x, 1)));
                linalg::from_rationals(entries)
            })
            .collect();
        let rank = linalg::rank(images.clone());
        let kernel = linalg::kernel(images.clone());
        prop_assert_eq!(rank + kernel.len(), images.len());
        for (f, rel) in kernel {
            prop_assert_eq!(rel.last().map(|e| e.0), Some(f));
            let mut sum = std::collections::BTreeMap::new();
            for (idx, c) in &rel {
                for (col, x) in &images[*idx] {
                    *sum.entry(*col).or_insert_with(num_bigint::BigInt::default) += c * x;
                }
            }
            prop_assert!(sum.values().all(|v| *v == num_bigint::BigInt::default()));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn transition_is_unimodular(c in class(0, 4)) {
        let b = BundleV::from_class(c);
        prop_assert_eq!(b.transition().det().unwrap(), BiLaurent::one());
        prop_assert_eq!(end_transition(&b).t_end.det().unwrap(), BiLaurent::one());
    }

    #[test]
    fn end_transition_is_conjugation(c in class(1, 4), k in 0usize..4) {
        let b = BundleV::from_class(c);
        let t = b.transition();
        let mut basis = vec![BiLaurent::zero(); 4];
        basis[k] = BiLaurent::one();
        let conj = &(t * &unvectorize(&basis)) * &t.inverse().unwrap();
        prop_assert_eq!(end_transition(&b).t_end.apply(&basis), vectorize(&conj));
    }

    #[test]
    fn r1_within_bounds_and_stable(c in class(1, 4)) {
        let b = BundleV::from_class(c);
        let j = b.j() as usize;
        let s = cech::r1_detail(&b).unwrap();
        let r1 = s.result.dim;
        prop_assert!(j - 1 <= r1 && r1 <= j * (j - 1) / 2);
        // One more enlargement leaves the dimension alone.
        let bigger = s.windows.last().unwrap().enlarged(2, 2);
        prop_assert_eq!(cech::h1(b.transition(), bigger).unwrap().dim, r1);
    }

    #[test]
    fn sections_are_sections(c in class(1, 3)) {
        let b = BundleV::from_class(c);
        let w = default_window(b.j());
        let h0 = cech::h0(b.transition(), w).unwrap();
        for s in &h0.representatives {
            prop_assert!(s.iter().all(BiLaurent::is_holomorphic_u));
            prop_assert!(b.transition().apply(s).iter().all(BiLaurent::is_holomorphic_v));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn charge_within_bounds(c in class(1, 3)) {
        let r = compute_report(&BundleV::from_class(c), ReportOptions::default()).unwrap();
        prop_assert_eq!(r.charge, r.lr1_oracle + r.lq_oracle);
        prop_assert!(r.bounds.fatal_ok(), "{:?}", r.bounds);
        prop_assert_eq!(bounds_check(r.j(), r.lr1_oracle, r.lq_oracle, r.charge), r.bounds);
    }

    #[test]
    fn lq_ignores_generator_order(c in class(2, 3), seed in any::<u64>()) {
        let b = BundleV::from_class(c);
        let res = dirimg::lq_detail(&b, None, Default::default()).unwrap();
        let m = presentation_at(&b, TruncRing { maxdeg: res.degree_cap });
        let mut order: Vec<usize> = (0..m.num_gens()).collect();
        let mut state = seed;
        for i in (1..order.len()).rev() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            order.swap(i, (state >> 33) as usize % (i + 1));
        }
        let sections = order.iter().map(|&i| m.sections[i].clone()).collect();
        let degrees = order.iter().map(|&i| m.presentation.degrees[i]).collect();
        let permuted = ModulePresentation::from_generators(sections, degrees, m.cap);
        prop_assert!(permuted.relations_hold());
        prop_assert_eq!(lq_of_module(permuted).lq, res.lq as i64);
    }

    #[test]
    fn lq_stable_under_larger_cap(c in class(1, 3)) {
        let b = BundleV::from_class(c);
        let res = dirimg::lq_detail(&b, None, Default::default()).unwrap();
        let bigger = presentation_at(&b, TruncRing { maxdeg: res.degree_cap + 4 });
        prop_assert_eq!(lq_of_module(bigger).lq, res.lq as i64);
    }

    #[test]
    fn dual_annihilates_relations(c in class(1, 3)) {
        let b = BundleV::from_class(c);
        let cap = TruncRing { maxdeg: dirimg::default_cap(b.j()) };
        let m = presentation_at(&b, cap);
        prop_assert!(m.relations_hold());
        let d = dirimg::dualize(&m.presentation, cap.maxdeg as i64);
        prop_assert!(d.annihilates(&m.presentation));
    }

    #[test]
    fn report_json_round_trips(c in class(0, 3)) {
        let b = BundleV::from_class(c);
        let r = compute_report(&b, ReportOptions::default()).unwrap();
        let text = render_json(&ReportJson::from(&r));
        let parsed = parse_report_json(&text).unwrap();
        prop_assert_eq!(render_json(&parsed), text);
        prop_assert_eq!(compute_report(&b, ReportOptions::default()).unwrap(), r);
    }
}

#[test]
fn double_dual_of_free_module_is_free() {
    for rank in 1..=3usize {
        for cap in [2u32, 4, 6] {
            let p = dirimg::Presentation {
                degrees: (0..rank as i64).collect(),
                rels: vec![],
            };
            let d = dirimg::dualize(&p, cap as i64);
            let dd = dirimg::dualize(&d.presentation, cap as i64);
            assert_eq!(d.elements.len(), rank);
            assert_eq!(dd.elements.len(), rank);
            assert!(dd.presentation.rels.is_empty());
        }
    }
}

#[test]
fn enlargement_policy_is_fixed() {
    let e = Enlargement::default();
    assert_eq!((e.du, e.dz, e.max_steps), (2, 2, 6));
}
