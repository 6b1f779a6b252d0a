use eqcohom::abcheck::{condition_report, exactness_report, ABSequence, Position, ReportOptions, ShortSequence, Verdict};
use eqcohom::corpus::{self, random_ecw, random_module, random_trivial_ecw};
use eqcohom::ecw::{cohomology, validate, CochainModel, Coefficients, EquivariantCW};
use eqcohom::grmod::{extended, tensor_with_z, try_extended_witness, GradedAbelianGroup};
use eqcohom::intlinalg::{
    cokernel, inverse_unimodular, kernel_basis, reduce_mod_orders, smith_normal_form, AbelianPresentation, IntMatrix,
};
use eqcohom::koszul::{coordinate_forms, tor, tor_table, KoszulSlice};
use eqcohom::polyring::Poly;
use num_bigint::BigInt;
use num_traits::Zero;
use proptest::prelude::*;

fn matrix() -> impl Strategy<Value = IntMatrix> {
    (0usize..5, 0usize..5).prop_flat_map(|(r, c)| {
        proptest::collection::vec(proptest::collection::vec(-12i64..=12, c), r)
            .prop_map(move |rows| IntMatrix::from_rows_with_cols(&rows, c).unwrap())
    })
}

fn poly() -> impl Strategy<Value = Poly> {
    proptest::collection::vec(((0u32..3, 0u32..3), -6i64..=6), 0..5).prop_map(|terms| {
        let mut p = Poly::zero(2);
        for ((a, b), c) in terms {
            p.add_term(vec![a, b], BigInt::from(c));
        }
        p
    })
}

fn graded_group() -> impl Strategy<Value = GradedAbelianGroup> {
    proptest::collection::vec(proptest::collection::vec(prop_oneof![Just(0i64), 2i64..=6], 0..3), 4..7).prop_map(|gs| {
        let groups = gs
            .iter()
            .map(|os| AbelianPresentation::from_orders(&os.iter().map(|&o| BigInt::from(o)).collect::<Vec<_>>()))
            .collect();
        GradedAbelianGroup::new(0, groups)
    })
}

fn complexes(seed: u64) -> EquivariantCW {
    random_ecw(seed, 1 + (seed % 2) as usize, 6)
}

fn is_zero_mod(col: &mut [BigInt], orders: &[BigInt]) -> bool {
    reduce_mod_orders(col, orders);
    col.iter().all(Zero::is_zero)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn smith_form_is_a_factorisation(m in matrix()) {
        let (u, d, v) = smith_normal_form(&m);
        prop_assert_eq!(u.mul(&m).mul(&v), d.clone());
        prop_assert!(inverse_unimodular(&u).is_some());
        prop_assert!(inverse_unimodular(&v).is_some());
        let diag: Vec<BigInt> = (0..d.rows().min(d.cols())).map(|i| d.get(i, i).clone()).collect();
        for w in diag.windows(2) {
            if !w[0].is_zero() {
                prop_assert!((&w[1] % &w[0]).is_zero());
            } else {
                prop_assert!(w[1].is_zero());
            }
        }
        for i in 0..d.rows() {
            for j in 0..d.cols() {
                if i != j {
                    prop_assert!(d.get(i, j).is_zero());
                }
            }
        }
    }

    #[test]
    fn kernel_basis_spans_a_saturated_kernel(m in matrix()) {
        let k = kernel_basis(&m);
        prop_assert!(m.mul(&k).is_zero());
        prop_assert_eq!(k.cols() + rank(&m), m.cols());
        // Z^cols / ker is torsion-free, so the kernel is a direct summand.
        if k.cols() > 0 {
            prop_assert!(cokernel(&k).torsion.is_empty());
        }
    }

    #[test]
    fn ring_axioms(a in poly(), b in poly(), c in poly()) {
        let ab = a.checked_mul(&b).unwrap();
        prop_assert_eq!(ab.clone(), b.checked_mul(&a).unwrap());
        prop_assert_eq!(ab.checked_mul(&c).unwrap(), a.checked_mul(&b.checked_mul(&c).unwrap()).unwrap());
        let lhs = a.checked_mul(&b.checked_add(&c).unwrap()).unwrap();
        let rhs = ab.checked_add(&a.checked_mul(&c).unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
        prop_assert!(a.checked_sub(&a).unwrap().is_zero());
        prop_assert_eq!(a.checked_mul(&Poly::one(2)).unwrap(), a.clone());
        prop_assert_eq!(ab.augmentation(), a.augmentation() * b.augmentation());
    }

    #[test]
    fn polynomial_text_round_trips(a in poly()) {
        let s = a.to_string_with('t');
        prop_assert_eq!(Poly::parse(&s, 2, 't').unwrap(), a);
    }

    #[test]
    fn extended_modules_are_witnessed(nn in graded_group(), n in 1usize..=2) {
        let m = extended(&nn, n, 8);
        prop_assert!(m.check_invariants().is_ok());
        prop_assert_eq!(try_extended_witness(&m).verdict(), "yes");
        let top = m.d_max();
        prop_assert_eq!(tensor_with_z(&m).restrict(0, top), nn.restrict(0, top));
        for j in 1..=n {
            prop_assert!(tor(&m, &coordinate_forms(n), j).unwrap().is_zero());
        }
    }
}

fn rank(m: &IntMatrix) -> usize {
    if m.rows() == 0 || m.cols() == 0 {
        return 0;
    }
    let (_, d, _) = smith_normal_form(m);
    (0..d.rows().min(d.cols())).filter(|&i| !d.get(i, i).is_zero()).count()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_modules_satisfy_invariants(seed in any::<u64>()) {
        let n = 1 + (seed % 3) as usize;
        let m = random_module(seed, n, 3, 10);
        prop_assert!(m.check_invariants().is_ok());
        let k = KoszulSlice::new(&m, &coordinate_forms(n)).unwrap();
        for j in 2..=n {
            for d in 0..=10 {
                prop_assert_ne!(k.check_d_squared(j, d), Some(false));
            }
        }
    }

    #[test]
    fn higher_tor_needs_tor1(seed in any::<u64>()) {
        let n = 1 + (seed % 3) as usize;
        let m = random_module(seed, n, 3, 10);
        let table = tor_table(&m, &coordinate_forms(n), n).unwrap();
        if table.row_vanishes(1) {
            for j in 2..=n {
                prop_assert!(table.row_vanishes(j));
            }
        }
    }

    #[test]
    fn tor1_survives_dropping_a_form(seed in any::<u64>()) {
        let n = 2 + (seed % 2) as usize;
        let m = random_module(seed, n, 3, 10);
        let forms = coordinate_forms(n);
        if tor(&m, &forms, 1).unwrap().is_zero() {
            prop_assert!(tor(&m, &forms[..n - 1], 1).unwrap().is_zero());
        }
    }

    #[test]
    fn cochain_differential_squares_to_zero(seed in any::<u64>()) {
        let e = complexes(seed);
        prop_assert!(validate(&e).is_ok());
        let model = CochainModel::new(&e, 8).unwrap();
        let all = model.mask(-1, e.n as i64);
        for k in 0..7 {
            let comp = model.differential(k + 1, &all, &all).mul(&model.differential(k, &all, &all));
            let orders = model.orders(k + 2, &all);
            for c in 0..comp.cols() {
                prop_assert!(is_zero_mod(&mut comp.column(c), &orders));
            }
        }
    }

    #[test]
    fn cohomology_modules_satisfy_invariants(seed in any::<u64>()) {
        let m = cohomology(&complexes(seed), 8).unwrap();
        prop_assert!(m.check_invariants().is_ok());
        prop_assert_eq!(m.window(), (0, 8));
    }

    #[test]
    fn sequence_composites_vanish(seed in any::<u64>()) {
        let seq = ABSequence::build(&complexes(seed), 8).unwrap();
        prop_assert!(seq.zero_composite_violations().is_empty());
    }

    #[test]
    fn triples_give_long_exact_sequences(seed in any::<u64>()) {
        let e = complexes(seed);
        let seq = ABSequence::build(&e, 8).unwrap();
        for i in 0..=e.n {
            let s = ShortSequence::new(&seq, i);
            for k in 0..8 {
                for g in s.long_exact_defects(k) {
                    prop_assert!(g.is_trivial(), "level {} degree {}: {}", i, k, g);
                }
            }
        }
    }

    #[test]
    fn levels_have_bounded_tor_dimension(seed in any::<u64>()) {
        let e = complexes(seed);
        let seq = ABSequence::build(&e, 10).unwrap();
        let forms = coordinate_forms(e.n);
        for i in 0..=e.n {
            let m = seq.model().module(&seq.interval(i as i64 - 1, i as i64)).unwrap();
            for j in i + 1..=e.n {
                prop_assert!(tor(&m, &forms, j).unwrap().is_zero(), "level {} Tor_{}", i, j);
            }
        }
    }

    #[test]
    fn iv_and_v_agree(seed in any::<u64>()) {
        let r = condition_report(&complexes(seed), 8, &ReportOptions::default()).unwrap();
        let (iv, v) = (r.conditions.iv, r.conditions.v);
        if iv != Verdict::Indeterminate && v != Verdict::Indeterminate {
            prop_assert_eq!(iv, v);
        }
        if v == Verdict::Holds {
            prop_assert_ne!(r.conditions.iii, Verdict::Fails);
        }
    }

    #[test]
    fn trivial_actions_give_free_extended_cohomology(seed in any::<u64>()) {
        let n = 1 + (seed % 2) as usize;
        let e = random_trivial_ecw(seed, n, 5);
        let m = cohomology(&e, 8).unwrap();
        prop_assert_eq!(try_extended_witness(&m).verdict(), "yes");
        let seq = ABSequence::build(&e, 8).unwrap();
        let rep = exactness_report(&seq);
        prop_assert_ne!(rep.verdict_at(Position::Aug), Verdict::Fails);
        for j in 1..=n {
            prop_assert!(tor(&m, &coordinate_forms(n), j).unwrap().is_zero());
        }
    }

    #[test]
    fn generators_are_deterministic(seed in any::<u64>()) {
        prop_assert_eq!(complexes(seed), complexes(seed));
        prop_assert_eq!(random_module(seed, 2, 3, 8), random_module(seed, 2, 3, 8));
        let e = complexes(seed);
        prop_assert_eq!(EquivariantCW::from_json_str(&e.to_json_string()).unwrap(), e);
    }

    #[test]
    fn resolved_model_agrees_on_cyclic_isotropy(seed in any::<u64>()) {
        let e = complexes(seed);
        let a = CochainModel::with_coefficients(&e, 8, Coefficients::Cyclic).unwrap();
        let b = CochainModel::with_coefficients(&e, 8, Coefficients::Resolved).unwrap();
        let all_a = a.mask(-1, e.n as i64);
        let all_b = b.mask(-1, e.n as i64);
        let ha = a.module(&a.subset_cohomology(&all_a).unwrap()).unwrap().underlying();
        let hb = b.module(&b.subset_cohomology(&all_b).unwrap()).unwrap().underlying();
        prop_assert_eq!(ha, hb);
    }
}

#[test]
fn fixture_sequences_are_long_exact() {
    for name in corpus::list().into_iter().filter(|s| *s != "sigma-t") {
        let e = corpus::load(name).unwrap().ecw;
        let seq = ABSequence::build(&e, 10).unwrap();
        assert!(seq.zero_composite_violations().is_empty(), "{name}");
        for i in 0..=e.n {
            let s = ShortSequence::new(&seq, i);
            for k in 0..10 {
                for g in s.long_exact_defects(k) {
                    assert!(g.is_trivial(), "{name} level {i} degree {k}: {g}");
                }
            }
        }
    }
}
