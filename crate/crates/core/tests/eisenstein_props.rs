use num_bigint::BigInt;
use proptest::prelude::*;
use ramify_core::eisenstein::ramification_m;
use ramify_core::{tau_v_search, EisensteinPolynomial, Tau, UniformizerChange};

/// Eisenstein polynomials with coefficients `p j`, `j` small and signed.
fn eisenstein_from(min_degree: usize) -> impl Strategy<Value = EisensteinPolynomial> {
    (prop::sample::select(vec![2u64, 3, 5]), min_degree..=6).prop_flat_map(|(p, e)| {
        let p2 = p as i64;
        (prop::collection::vec(-6i64..=6, e), 1i64..p2, any::<bool>()).prop_map(
            move |(js, unit, negate)| {
                let unit = if negate { -unit } else { unit };
                let mut c: Vec<BigInt> = js.iter().map(|&j| BigInt::from(j * p2)).collect();
                c[0] = BigInt::from(unit * p2 + p2 * p2 * js[0]);
                EisensteinPolynomial::new(p, c).unwrap()
            },
        )
    })
}

fn eisenstein() -> impl Strategy<Value = EisensteinPolynomial> {
    eisenstein_from(1)
}

/// Degree at least 2, so that `pi + c p` is again a uniformizer.
fn ramified_enough() -> impl Strategy<Value = EisensteinPolynomial> {
    eisenstein_from(2)
}

proptest! {
    #[test]
    fn split_recombines(e in eisenstein()) {
        let s = e.split();
        let p = e.p() as usize;
        for (i, (a, b)) in s.e0.iter().zip(&s.e1).enumerate() {
            prop_assert_eq!(a + b, e.dense()[i].clone());
            if i % p == 0 { prop_assert!(b == &BigInt::from(0)); } else { prop_assert!(a == &BigInt::from(0)); }
        }
    }

    #[test]
    fn invariants_are_consistent(e in eisenstein()) {
        let inv = e.invariants();
        let p = e.p();
        prop_assert_eq!(inv.m, ramification_m(p, e.degree()));
        if inv.m == 0 {
            prop_assert_eq!((inv.tau, inv.iota), (Tau::Finite(1), Some(0)));
        } else if let Some(tau) = inv.tau.finite() {
            let iota = inv.iota.unwrap();
            prop_assert!(iota >= 1 && iota < e.degree() && iota % p as usize != 0);
            prop_assert_eq!(ramify_core::ring::ord_p_int(&e.coeffs()[iota], p), Some(tau));
            prop_assert_eq!(inv.t_pi, Some((tau as u64 * e.degree() as u64 + iota as u64) / (p - 1)));
        } else {
            prop_assert_eq!((inv.iota, inv.t_pi), (None, None));
        }
    }

    #[test]
    fn ceiling_pair(e in eisenstein()) {
        let (_, inv) = e.finite_tau_uniformizer().unwrap();
        prop_assert!(inv.tau.finite().unwrap() <= e.m() + 1);
    }

    #[test]
    fn charpoly_route_matches_shift(e in ramified_enough(), c0 in -4i64..=4, n in 2u32..=6) {
        let c0 = BigInt::from(c0);
        let via_matrix = e.substitute(&UniformizerChange::translation(c0.clone()), n).unwrap();
        let via_shift = e.translate(&(&c0 * BigInt::from(e.p()))).unwrap().reduce(n).unwrap();
        prop_assert_eq!(via_matrix, via_shift);
    }

    #[test]
    fn opposite_shifts_cancel(e in ramified_enough(), c0 in 1i64..=4, n in 2u32..=6) {
        let fwd = e.translate(&BigInt::from(c0 * e.p() as i64)).unwrap();
        let back = fwd.substitute(&UniformizerChange::translation(BigInt::from(-c0)), n).unwrap();
        prop_assert_eq!(back, e.reduce(n).unwrap());
    }

    #[test]
    fn tau_ignores_e0(e in eisenstein(), unit in 1i64..=4) {
        let p = e.p() as i64;
        prop_assume!(unit % p != 0);
        let c: Vec<BigInt> = e.coeffs().iter().enumerate()
            .map(|(i, a)| if i % p as usize == 0 && i > 0 { a * BigInt::from(unit) } else { a.clone() })
            .collect();
        let scaled = EisensteinPolynomial::new(e.p(), c).unwrap();
        prop_assert_eq!(scaled.invariants().tau, e.invariants().tau);
    }
}

#[test]
fn search_witnesses_reproduce_their_tau() {
    let polys: [(u64, &[i64]); 4] = [
        (2, &[-2, 0, 1]),
        (2, &[2, 2, 1]),
        (3, &[-3, 0, 0, 1]),
        (2, &[2, 0, 0, 0, 1]),
    ];
    for (p, dense) in polys {
        let d: Vec<BigInt> = dense.iter().map(|&x| BigInt::from(x)).collect();
        let e = EisensteinPolynomial::from_dense(p, &d).unwrap();
        let n = e.m() + 3;
        let out = tau_v_search(&e, 1, n, None).unwrap();
        let again = e.substitute(&out.witness, n).unwrap().invariants();
        assert_eq!((again.tau, again.iota), (out.tau, out.iota));
        assert!(out.tau.finite().unwrap() <= out.ceiling);
    }
}

#[test]
fn search_on_pure_polynomials() {
    for p in [2u64, 3] {
        let e = EisensteinPolynomial::pure(p, p as usize).unwrap();
        assert_eq!(e.invariants().tau, Tau::Infinite);
        let out = tau_v_search(&e, 2, 4, None).unwrap();
        assert_eq!(out.tau, Tau::Finite(2), "p = {p}");
    }
}
