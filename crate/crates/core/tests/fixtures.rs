use eqcohom::abcheck::{
    condition_report, max_torsion_order, restriction_order_drop, ABSequence, Position, ReportOptions,
    SpotVerdict,
};
use eqcohom::corpus::{self, load, load_with, mismatches};
use eqcohom::ecw::{cohomology, product, validate, EquivariantCW};
use eqcohom::grmod::{default_candidates, linear_annihilator_probe, try_extended_witness};
use eqcohom::intlinalg::AbelianPresentation;
use num_bigint::BigInt;

fn all_fixtures() -> Vec<corpus::Fixture> {
    let mut out: Vec<corpus::Fixture> = corpus::list()
        .into_iter()
        .filter(|s| *s != "sigma-t")
        .map(|s| load(s).unwrap())
        .collect();
    out.extend((1..=3).map(|n| load_with("sigma-t", Some(n)).unwrap()));
    out
}

fn free(r: usize) -> AbelianPresentation {
    AbelianPresentation::free(r)
}

#[test]
fn fixtures_match_expected_tables() {
    for f in all_fixtures() {
        assert!(validate(&f.ecw).is_ok(), "{}", f.name);
        let opts = ReportOptions {
            hx: f.hx.clone(),
            probe_candidates: None,
        };
        let r = condition_report(&f.ecw, 12, &opts).unwrap();
        assert_eq!(mismatches(&f, &r), Vec::<String>::new(), "{}", f.name);
    }
}

#[test]
fn expectations_name_oracles_for_derived_values() {
    for f in all_fixtures() {
        for g in &f.expected.cohomology {
            if g.source == corpus::Source::Derived {
                assert!(g.oracle.is_some(), "{} degree {}", f.name, g.degree);
            }
        }
        for v in &f.expected.verdicts {
            if v.source == corpus::Source::Derived {
                assert!(v.oracle.is_some(), "{} {}", f.name, v.key);
            }
        }
    }
}

#[test]
fn fixture_json_round_trips() {
    for f in all_fixtures() {
        let back = EquivariantCW::from_json_str(&f.ecw.to_json_string()).unwrap();
        assert_eq!(back, f.ecw, "{}", f.name);
    }
}

#[test]
fn stored_example4_is_the_product() {
    let x = load("example2").unwrap().ecw;
    let s = load("s2-double-rotation").unwrap().ecw;
    assert_eq!(product(&x, &s), load("example4").unwrap().ecw);
}

#[test]
fn kunneth_for_rotation_squared() {
    let s = load("s2-rotation").unwrap().ecw;
    let h = cohomology(&product(&s, &s), 10).unwrap().underlying();
    // H_{S^1}(S^2) has ranks 1, 2, 2, ... in even degrees; the product is free over Z.
    let factor = |d: i64| if d % 2 != 0 { 0 } else if d == 0 { 1 } else { 2 };
    for d in 0..=10 {
        let want: usize = (0..=d).map(|a| factor(a) * factor(d - a)).sum();
        assert_eq!(h.get(d), Some(&free(want)), "degree {d}");
    }
}

#[test]
fn rp2_is_extended_and_probe_finds_nothing() {
    let f = load("rp2").unwrap();
    let m = cohomology(&f.ecw, 10).unwrap();
    assert_eq!(try_extended_witness(&m).verdict(), "yes");
    assert_eq!(linear_annihilator_probe(&m, &default_candidates(1)).unwrap(), None);
}

#[test]
fn example2_obstruction_in_degree_4() {
    let m = cohomology(&load("example2").unwrap().ecw, 12).unwrap();
    match try_extended_witness(&m) {
        eqcohom::grmod::WitnessResult::No { degree, .. } => assert_eq!(degree, 4),
        other => panic!("expected no, got {}", other.verdict()),
    }
}

#[test]
fn example4_relative_groups() {
    let seq = ABSequence::build(&load("example4").unwrap().ecw, 12).unwrap();
    let rel = |lo, hi| seq.model().module(&seq.interval(lo, hi)).unwrap();
    let full = rel(0, 2);
    let g5 = full.group(5).unwrap();
    assert!(g5.torsion.contains(&BigInt::from(4)), "{g5}");
    assert_eq!(max_torsion_order(&rel(0, 1)), BigInt::from(2));
    let drop = restriction_order_drop(&seq, 1, 4).unwrap();
    assert_eq!((drop.degree, drop.image_order.as_str()), (5, "2"));
    assert!(drop.kernel_element.iter().any(|x| x != "0"));
}

#[test]
fn s2xs2_fails_where_the_two_factor_class_lives() {
    let f = load("s2xs2-double").unwrap();
    let seq = ABSequence::build(&f.ecw, 12).unwrap();
    // H^5(Y_2, Y_1) carries the degree-3 class of B(Z/2 x Z/2); level 1 is zero in degree 4.
    let top = seq.model().module(&seq.interval(1, 2)).unwrap();
    assert_eq!(top.group(5).unwrap().to_string(), "Z/2");
    let r = condition_report(&f.ecw, 12, &ReportOptions::default()).unwrap();
    let spot = r.positions.spots(Position::Level(2)).iter().find(|s| s.degree == 3).unwrap().clone();
    assert_eq!(spot.verdict, SpotVerdict::Inexact);
    assert_eq!(spot.defect.unwrap().to_string(), "Z/2");
    // Kunneth: both factors are free over Z.
    let h = cohomology(&f.ecw, 8).unwrap().underlying();
    assert_eq!(h.get(4), Some(&free(8)));
    assert_eq!(h.get(5), Some(&free(0)));
}

#[test]
fn sigma_t_tor1_location() {
    let m = cohomology(&corpus::sigma_t(2), 12).unwrap();
    let t = eqcohom::koszul::tor(&m, &eqcohom::koszul::coordinate_forms(2), 1).unwrap();
    for (d, g) in t.iter() {
        let want = if d == 4 { free(1) } else { free(0) };
        assert_eq!(*g, want, "degree {d}");
    }
}

#[test]
fn s2_double_rotation_is_free_over_z() {
    let m = cohomology(&load("s2-double-rotation").unwrap().ecw, 12).unwrap();
    assert!(m.underlying().iter().all(|(_, g)| g.torsion.is_empty()));
    assert_eq!(try_extended_witness(&m).verdict(), "yes");
}
