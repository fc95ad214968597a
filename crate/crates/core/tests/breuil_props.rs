use proptest::prelude::*;
use ramify_core::breuil::{pure_lattice_data, required_t};
use ramify_core::oracle::{fractional_element_suite, random_eisenstein};
use ramify_core::{
    example3_identity, prop1_classify, snf_mod_ut, verify_inclusion_p_s, BreuilModule, Precision,
    SeriesMatrix, Valuation,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn module(p: u64, n: u32, e: usize, d: usize, h: usize, seed: u64) -> BreuilModule {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eis = random_eisenstein(p, e, n, &mut rng);
    let prec = Precision::new(p, n, (2 * e).max(h * e) + 3).unwrap();
    BreuilModule::build_bt_module(&prec, &eis, d, h, seed).unwrap()
}

#[test]
fn fractional_elements_small_batch() {
    for p in [2u64, 3] {
        for n in [1u32, 2] {
            let r = fractional_element_suite(p, n, 0..10, 20).unwrap();
            assert_eq!(r.violations, 0, "{r:?}");
            assert!(r.accepted > 0);
        }
    }
}

#[test]
fn pure_uniformizer_identity_and_inclusion() {
    for p in [2u64, 3, 5] {
        for n in 1..=6 {
            assert!(example3_identity(p, n).unwrap().holds());
        }
        for n in 1..=3 {
            let (m, gens) = pure_lattice_data(p, n).unwrap();
            assert!(verify_inclusion_p_s(&gens, n));
            assert!(!verify_inclusion_p_s(&gens, n - 1));
            let image = m.apply_phi(&gens[1]).unwrap();
            assert!(image.pole() <= gens[1].pole() * p as usize);
        }
    }
}

#[test]
fn apply_phi_rejects_large_poles() {
    let m = module(2, 1, 2, 1, 2, 7);
    let x = ramify_core::FractionalElement::basis(m.prec(), 2, 0, m.prec().t()).unwrap();
    assert!(m.apply_phi(&x).is_err());
    assert!(required_t(2, 3, 2) > 6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn snf_reconstructs_and_counts_det(p in prop::sample::select(vec![2u64, 3, 5]), size in 1usize..4, cols in 1usize..4, seed: u64) {
        let prec = Precision::new(p, 1, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = SeriesMatrix::random(&prec, size, cols, &mut rng);
        let snf = snf_mod_ut(&a).unwrap();
        prop_assert_eq!(snf.reconstruct(), a.clone());
        prop_assert_eq!(snf.exponents.len(), size.min(cols));
        if size == cols {
            match a.det().ord_u() {
                Valuation::Finite(v) => {
                    let sum: u32 = snf.exponents.iter().map(|x| x.finite().unwrap()).sum();
                    prop_assert_eq!(sum, v);
                }
                Valuation::AtLeast(_) => prop_assert!(snf.exponents.iter().any(|x| !x.is_finite()) ||
                    snf.exponents.iter().filter_map(|x| x.finite()).sum::<u32>() >= 8),
            }
        }
    }

    #[test]
    fn morphism_verdicts_follow_shape(p in prop::sample::select(vec![2u64, 3]), rows in 1usize..4, cols in 1usize..4, seed: u64) {
        let prec = Precision::new(p, 1, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = SeriesMatrix::random(&prec, rows, cols, &mut rng);
        let v = prop1_classify(&g).unwrap();
        prop_assert_eq!(v.isomorphism, v.closed_embedding && v.epimorphism);
        if v.closed_embedding { prop_assert!(rows <= cols); }
        if v.epimorphism { prop_assert!(cols <= rows); }
        if v.isomorphism { prop_assert!(g.det().ord_u().is_finite()); }
    }

    #[test]
    fn generator_counts(p in prop::sample::select(vec![2u64, 3]), e in 1usize..4, h in 1usize..4, dpick: prop::sample::Index, seed: u64) {
        let d = dpick.index(h + 1);
        let m = module(p, 1, e, d, h, seed);
        prop_assert!(m.h3() as u64 <= m.order());
        prop_assert_eq!(m.h4().unwrap(), h - d);
        let back = BreuilModule::from_json(&m.to_json()).unwrap();
        prop_assert_eq!(back.phi(), m.phi());
        prop_assert_eq!(back.rank(), m.rank());
        prop_assert_eq!(back.normal_decomposition().map(|x| x.d), Some(d));
    }

    #[test]
    fn phi_determinant_has_valuation_d_e(p in prop::sample::select(vec![2u64, 3]), e in 1usize..4, h in 1usize..4, dpick: prop::sample::Index, seed: u64) {
        let d = dpick.index(h + 1);
        let m = module(p, 1, e, d, h, seed);
        prop_assert_eq!(m.phi().det().ord_u(), Valuation::Finite((d * e) as u32));
        let again = BreuilModule::from_phi(m.prec(), m.eisenstein(), m.phi().clone()).unwrap();
        prop_assert_eq!(again.h4().unwrap(), h - d);
    }

    #[test]
    fn extensions_are_additive(p in prop::sample::select(vec![2u64, 3]), e in 1usize..3, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let eis = random_eisenstein(p, e, 1, &mut rng);
        let prec = Precision::new(p, 1, 2 * e + 3).unwrap();
        let a = BreuilModule::build_bt_module(&prec, &eis, 1, 2, seed).unwrap();
        let b = BreuilModule::build_bt_module(&prec, &eis, 0, 1, seed ^ 1).unwrap();
        let x = BreuilModule::extension(&a, &b, seed).unwrap();
        prop_assert_eq!(x.order(), a.order() + b.order());
        prop_assert!(x.h3() <= a.h3() + b.h3());
        prop_assert!(x.h4().unwrap() <= a.h4().unwrap() + b.h4().unwrap());
    }
}
