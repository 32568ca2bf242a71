mod common;

use common::*;
use enn_core::belief::{BeliefError, MassFunction, SubsetMask};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

const TOL: f64 = 1e-12;

fn assert_close(a: &MassFunction, b: &MassFunction, tol: f64) {
    for s in a.frame().subsets() {
        assert!((a.mass(s) - b.mass(s)).abs() < tol, "{s}: {} vs {}", a.mass(s), b.mass(s));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn bel_pl_duality_and_order(seed in any::<u64>(), k in 2usize..=4) {
        let f = frame(k);
        let m = random_mass(&mut rng(seed), &f);
        for a in f.subsets() {
            let bel = m.bel(a).unwrap();
            let pl = m.pl(a).unwrap();
            prop_assert!((pl - (1.0 - m.bel(f.complement(a)).unwrap())).abs() < TOL);
            prop_assert!(bel <= pl + TOL);
            prop_assert!((0.0..=1.0 + TOL).contains(&bel));
        }
        prop_assert!((m.bel(f.omega()).unwrap() - 1.0).abs() < TOL);
        prop_assert!((m.pl(f.omega()).unwrap() - 1.0).abs() < TOL);
    }

    #[test]
    fn bel_and_pl_are_monotone(seed in any::<u64>(), k in 2usize..=4) {
        let f = frame(k);
        let m = random_mass(&mut rng(seed), &f);
        for a in f.subsets() {
            for b in f.subsets().filter(|b| a.is_subset_of(*b)) {
                prop_assert!(m.bel(a).unwrap() <= m.bel(b).unwrap() + TOL);
                prop_assert!(m.pl(a).unwrap() <= m.pl(b).unwrap() + TOL);
            }
        }
    }

    #[test]
    fn combination_matches_oracle(seed in any::<u64>(), k in 2usize..=4) {
        let mut r = rng(seed);
        let f = frame(k);
        let (m1, m2) = (random_mass(&mut r, &f), random_mass(&mut r, &f));
        match brute_force_dempster(&dense(&m1), &dense(&m2)) {
            Some((oracle, kappa)) => {
                let c = m1.combine(&m2).unwrap();
                for (v, o) in dense(&c).iter().zip(&oracle) {
                    prop_assert!((v - o).abs() < TOL);
                }
                prop_assert!((m1.conflict(&m2).unwrap() - kappa).abs() < TOL);
            }
            None => prop_assert!(matches!(m1.combine(&m2), Err(BeliefError::TotalConflict(_)))),
        }
    }

    #[test]
    fn vacuous_is_neutral(seed in any::<u64>(), k in 2usize..=4) {
        let f = frame(k);
        let m = random_mass(&mut rng(seed), &f);
        let c = m.combine(&MassFunction::vacuous(f.clone())).unwrap();
        assert_close(&c, &m, TOL);
    }
}

#[test]
fn commutative_and_associative_on_random_triples() {
    let mut r = rng(31);
    let mut checked = 0;
    for i in 0..1000 {
        let f = frame(2 + i % 3);
        let (a, b, c) = (random_mass(&mut r, &f), random_mass(&mut r, &f), random_mass(&mut r, &f));
        if let (Ok(ab), Ok(ba)) = (a.combine(&b), b.combine(&a)) {
            assert_close(&ab, &ba, TOL);
            if let (Ok(ab_c), Ok(bc)) = (ab.combine(&c), b.combine(&c)) {
                let a_bc = a.combine(&bc).unwrap();
                assert_close(&ab_c, &a_bc, 1e-10);
                checked += 1;
            }
        }
    }
    assert!(checked > 500, "only {checked} triples without total conflict");
}

#[test]
fn combine_all_matches_triple_sum() {
    let mut r = rng(32);
    for i in 0..300 {
        let f = frame(2 + i % 3);
        let ms: Vec<MassFunction> = (0..3).map(|_| random_mass(&mut r, &f)).collect();
        let Some(oracle) = brute_force_triple(&dense(&ms[0]), &dense(&ms[1]), &dense(&ms[2])) else {
            continue;
        };
        if let Ok(c) = MassFunction::combine_all(&ms) {
            for (v, o) in dense(&c).iter().zip(&oracle) {
                assert!((v - o).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn combine_all_is_order_independent() {
    let mut r = rng(33);
    for _ in 0..200 {
        let f = frame(3);
        let mut ms: Vec<MassFunction> = (0..r.random_range(2..6)).map(|_| random_mass(&mut r, &f)).collect();
        let Ok(first) = MassFunction::combine_all(&ms) else { continue };
        ms.shuffle(&mut r);
        let second = MassFunction::combine_all(&ms).unwrap();
        assert_close(&first, &second, 1e-10);
    }
}

#[test]
fn rejects_invalid_inputs() {
    let f = frame(2);
    assert!(matches!(
        MassFunction::new(f.clone(), [(SubsetMask(0b01), 0.5)]),
        Err(BeliefError::NotNormalized(_))
    ));
    assert!(MassFunction::new(f.clone(), [(SubsetMask::EMPTY, 1.0)]).is_err());
    assert!(MassFunction::new(f.clone(), [(SubsetMask(0b100), 1.0)]).is_err());
    assert!(MassFunction::new(f.clone(), [(SubsetMask(0b01), 1.2), (SubsetMask(0b10), -0.2)]).is_err());
    let other = frame(3);
    assert!(matches!(
        MassFunction::vacuous(f).combine(&MassFunction::vacuous(other)),
        Err(BeliefError::FrameMismatch)
    ));
    assert!(matches!(MassFunction::combine_all(&[] as &[MassFunction]), Err(BeliefError::EmptyList)));
}
