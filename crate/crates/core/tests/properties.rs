//! Property tests for the invariants of each layer.

use std::sync::Arc;

use proptest::prelude::*;

use specnorm::construction::{ConstructionConfig, ConstructionState, Trace};
use specnorm::hom::{BaseHom, PartialHom};
use specnorm::lattice::{small_distributive_lattices, FiniteLattice, LatticeDoc};
use specnorm::opminus::{Clause, Term};
use specnorm::polyhedral::{entails_basic, feasible_mixed, feasible_mixed_int, fm_oracle, Certificate};
use specnorm::rational::{format_scalar, parse_scalar, ratio, Coordinate, RationalVector, Scalar};

fn vector(dim: usize) -> impl Strategy<Value = RationalVector> {
    prop::collection::vec(-5i64..=5, dim).prop_map(|xs| RationalVector::ground_ints(&xs))
}

fn vectors(dim: usize, lo: usize, hi: usize) -> impl Strategy<Value = Vec<RationalVector>> {
    prop::collection::vec(vector(dim), lo..=hi)
}

/// `(A, B, A′, B′)` over one shared dimension.
fn instance() -> impl Strategy<Value = (Vec<RationalVector>, Vec<RationalVector>, Vec<RationalVector>, Vec<RationalVector>)> {
    (1usize..=3).prop_flat_map(|d| (vectors(d, 1, 3), vectors(d, 0, 3), vectors(d, 0, 2), vectors(d, 0, 2)))
}

fn scalar() -> impl Strategy<Value = Scalar> {
    (-50i64..=50, 1i64..=20).prop_map(|(p, q)| ratio(p, q))
}

fn term(dim: usize) -> impl Strategy<Value = Term> {
    prop::collection::vec(prop::collection::vec(vector(dim), 1..=2), 0..=2)
        .prop_map(|cs| Term::from_clauses(cs.into_iter().filter_map(Clause::new)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn exactly_one_certificate_kind((a, b, _, _) in instance()) {
        let lp = feasible_mixed(&a, &b);
        prop_assert!(lp.verify(&a, &b) || matches!(&lp, Certificate::Witness(w) if w.separates(&a, &b)));
        let fm = fm_oracle(&a, &b).unwrap();
        prop_assert_eq!(lp.is_farkas(), !fm.is_feasible());
    }

    #[test]
    fn integer_route_matches_rational_route((a, b, _, _) in instance()) {
        let ai: Vec<_> = a.iter().map(RationalVector::int_ray).collect();
        let bi: Vec<_> = b.iter().map(RationalVector::int_ray).collect();
        let int = feasible_mixed_int(&ai.iter().collect::<Vec<_>>(), &bi.iter().collect::<Vec<_>>());
        prop_assert_eq!(int.is_farkas(), feasible_mixed(&a, &b).is_farkas());
        match &int {
            Certificate::Farkas(f) => prop_assert!(f.verify(&a, &b)),
            Certificate::Witness(w) => prop_assert!(w.separates(&a, &b)),
        }
    }

    #[test]
    fn entailment_is_monotone((a, b, a2, b2) in instance()) {
        if entails_basic(&a, &b).holds {
            let wider_b: Vec<_> = b.iter().chain(&b2).cloned().collect();
            let wider_a: Vec<_> = a.iter().chain(&a2).cloned().collect();
            prop_assert!(entails_basic(&a, &wider_b).holds);
            prop_assert!(entails_basic(&wider_a, &b).holds);
        }
    }

    #[test]
    fn entailment_ignores_positive_scaling((a, b, _, _) in instance(), k in 1i64..=7, d in 1i64..=7, i in 0usize..3) {
        let mut scaled = a.clone();
        let i = i % scaled.len();
        scaled[i] = scaled[i].scale(&ratio(k, d));
        let (r1, r2) = (entails_basic(&a, &b), entails_basic(&scaled, &b));
        prop_assert_eq!(r1.holds, r2.holds);
        prop_assert!(r2.verify(&scaled, &b));
    }

    #[test]
    fn scalars_round_trip_through_strings(x in scalar()) {
        prop_assert_eq!(parse_scalar(&format_scalar(&x)).unwrap(), x);
    }

    #[test]
    fn vectors_round_trip_through_json(v in vector(3), w in vector(2)) {
        let v = v.add(&w.scale(&ratio(1, 3)));
        let s = serde_json::to_string(&v).unwrap();
        prop_assert_eq!(serde_json::from_str::<RationalVector>(&s).unwrap(), v);
    }

    #[test]
    fn normalize_fixes_the_top_entry(v in vector(2), o in -4i64..=4) {
        let top = Coordinate::Distinguished;
        let u = v.add(&RationalVector::basis(top.clone()).scale(&ratio(o, 1)));
        let n = u.normalize(&top);
        prop_assert!(n.is_normalized(&top));
        prop_assert_eq!(n.ray(), u.ray());
    }

    #[test]
    fn canonical_form_is_equivalent(t in term(2)) {
        let c = t.canonicalize().unwrap();
        prop_assert!(c.sem_eq(&t).unwrap());
        prop_assert_eq!(c.canonicalize().unwrap(), c.clone());
    }

    #[test]
    fn term_lattice_laws(s in term(2), t in term(2), x in vector(2)) {
        let j = s.join(&t);
        let m = s.meet(&t);
        prop_assert!(s.leq_bool(&j).unwrap() && t.leq_bool(&j).unwrap());
        prop_assert!(m.leq_bool(&s).unwrap() && m.leq_bool(&t).unwrap());
        prop_assert_eq!(j.contains_point(&x), s.contains_point(&x) || t.contains_point(&x));
        prop_assert_eq!(m.contains_point(&x), s.contains_point(&x) && t.contains_point(&x));
    }

    #[test]
    fn containment_witness_separates(s in term(2), t in term(2)) {
        let c = s.leq(&t).unwrap();
        if let Some(w) = &c.witness {
            prop_assert!(!c.holds);
            prop_assert!(s.contains_point(w) && !t.contains_point(w));
        } else {
            prop_assert!(c.holds);
        }
    }
}

#[test]
fn lattice_documents_round_trip() {
    for l in small_distributive_lattices(6) {
        let doc = l.to_doc();
        let text = serde_json::to_string(&doc).unwrap();
        let back: LatticeDoc = serde_json::from_str(&text).unwrap();
        let l2 = back.to_lattice().unwrap();
        assert_eq!(l2.labels(), l.labels());
        for x in l.elements() {
            for y in l.elements() {
                assert_eq!(l.leq(x, y), l2.leq(x, y));
            }
        }
        assert_eq!(l2.to_doc(), doc);
    }
}

#[test]
fn lattice_operations_satisfy_the_axioms() {
    for l in small_distributive_lattices(7) {
        for x in l.elements() {
            assert_eq!(l.join(x, l.zero()), x);
            for y in l.elements() {
                assert_eq!(l.join(x, y), l.join(y, x));
                assert_eq!(l.join(x, l.meet(x, y)), x);
                assert_eq!(l.leq(x, y), l.join(x, y) == y);
                for z in l.elements() {
                    assert_eq!(l.meet(x, l.join(y, z)), l.join(l.meet(x, y), l.meet(x, z)));
                }
            }
            let r = |a, b| l.residual(a, b);
            for y in l.elements() {
                assert!(l.leq(x, l.join(y, r(x, y))));
            }
        }
    }
}

fn run(l: FiniteLattice, stages: usize, seed: u64) -> ConstructionState {
    let config = ConstructionConfig { stages, seed, ..Default::default() };
    let mut st = ConstructionState::new(Arc::new(l), None, BaseHom::trivial(), config).unwrap();
    st.run();
    st
}

#[test]
fn identical_inputs_give_identical_traces() {
    for seed in [0, 3, 11] {
        let a = run(FiniteLattice::boolean(2).unwrap(), 40, seed).trace().to_jsonl();
        let b = run(FiniteLattice::boolean(2).unwrap(), 40, seed).trace().to_jsonl();
        assert_eq!(a, b);
    }
}

#[test]
fn values_never_change_once_assigned() {
    let l = Arc::new(FiniteLattice::chain(4));
    let config = ConstructionConfig { stages: 60, ..Default::default() };
    let mut st = ConstructionState::new(l, None, BaseHom::trivial(), config).unwrap();
    let mut seen: Vec<PartialHom> = Vec::new();
    for _ in 0..60 {
        st.run_stage();
        for old in &seen {
            for (g, &x) in old.generators() {
                assert_eq!(st.hom().eval_literal(g).unwrap(), x);
            }
        }
        seen.push(st.hom().clone());
        assert!(st.hom().is_coherent());
    }
}

#[test]
fn image_grows_one_value_per_value_step() {
    let l = FiniteLattice::chain(4);
    let n = l.len();
    let config = ConstructionConfig { stages: 4 * n, ..Default::default() };
    let mut st = ConstructionState::new(Arc::new(l), None, BaseHom::trivial(), config).unwrap();
    for _ in 0..4 * n {
        st.run_stage();
        let k = st.values_assigned();
        let range = st.hom().range();
        for &e in &st.enumeration()[..k] {
            assert!(range.contains(&e));
        }
    }
    assert_eq!(st.values_assigned(), n - 1);
}

#[test]
fn traces_survive_serialization() {
    let st = run(FiniteLattice::chain(3), 30, 5);
    let text = st.trace().to_jsonl();
    let back = Trace::from_jsonl(&text).unwrap();
    assert_eq!(&back, st.trace());
    let report = specnorm::construction::verify_trace(&back);
    assert!(report.ok() && report.surjective, "{report:?}");
}
