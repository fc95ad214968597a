//! Shared inputs for the benchmarks.

use ramify_core::{EisensteinPolynomial, Precision, TruncatedSeries};

pub fn dense_series(prec: &Precision, seed: u64) -> TruncatedSeries {
    let mut x = seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) | 1;
    let coeffs = (0..prec.t())
        .map(|_| {
            x ^= x << 13;
            x ^= x >> 7;
            x ^= x << 17;
            x
        })
        .collect::<Vec<u64>>();
    TruncatedSeries::from_u64s(prec, &coeffs)
}

pub fn pure(p: u64, e: usize) -> EisensteinPolynomial {
    EisensteinPolynomial::pure(p, e).expect("valid degree")
}
