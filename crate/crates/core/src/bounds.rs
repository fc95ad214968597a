//! The recursive bound `s` on kernels and cokernels, its closed forms, and
//! the height bounds derived from it.

use num_bigint::BigUint;
use num_rational::Ratio;
use num_traits::{One, Pow};
use serde::Serialize;
use thiserror::Error;

use crate::eisenstein::{ramification_m, Tau};
use crate::ring::is_prime;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BoundsError {
    #[error("{0} is not a prime")]
    NotPrime(u64),
    #[error("e must be at least 1")]
    ZeroDegree,
    #[error("tau = {0} is not finite; pick a uniformizer with finite tau first")]
    NonFiniteTau(Tau),
    #[error("tau must be at least 1")]
    ZeroTau,
    #[error("iota = {iota} is not admissible for p = {p}, e = {e}, m = {m}, tau = {tau}")]
    InconsistentIota {
        p: u64,
        e: u64,
        m: u32,
        tau: u32,
        iota: u64,
    },
    #[error("p = {p} divides e = {e}")]
    PDividesE { p: u64, e: u64 },
    #[error("p = {p} does not divide e = {e}")]
    PDoesNotDivideE { p: u64, e: u64 },
}

pub type Result<T> = std::result::Result<T, BoundsError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Stop as soon as `t - floor(t/p) <= tau + eps`.
    Standard,
    /// Stop only when `t - floor(t/p) < tau + eps`.
    Modified,
}

impl std::str::FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "standard" => Ok(Variant::Standard),
            "modified" => Ok(Variant::Modified),
            other => Err(format!(
                "unknown variant '{other}' (expected standard or modified)"
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BoundTrace {
    pub p: u64,
    pub e: u64,
    pub tau: u32,
    pub iota: u64,
    pub m: u32,
    pub epsilon: u32,
    /// `(t_j, s_j)` for `j = 0..=z`.
    pub pairs: Vec<(u64, u64)>,
    pub z: usize,
    pub s: u64,
    pub variant: Variant,
}

impl BoundTrace {
    /// True when `t_j + s_j` strictly decreases along the trace.
    pub fn strictly_decreasing(&self) -> bool {
        self.pairs
            .windows(2)
            .all(|w| w[1].0 + w[1].1 < w[0].0 + w[0].1)
    }

    /// True when `t_j + s_j` never increases along the trace.
    pub fn non_increasing(&self) -> bool {
        self.pairs
            .windows(2)
            .all(|w| w[1].0 + w[1].1 <= w[0].0 + w[0].1)
    }
}

fn check_prime(p: u64) -> Result<()> {
    if is_prime(p) {
        Ok(())
    } else {
        Err(BoundsError::NotPrime(p))
    }
}

/// Checks `(tau, iota)` against the admissible range for `(p, e)` and returns `m`.
pub fn check_invariants(p: u64, e: u64, tau: Tau, iota: u64) -> Result<(u32, u32)> {
    check_prime(p)?;
    if e == 0 {
        return Err(BoundsError::ZeroDegree);
    }
    let tau = tau.finite().ok_or(BoundsError::NonFiniteTau(tau))?;
    if tau == 0 {
        return Err(BoundsError::ZeroTau);
    }
    let m = ramification_m(p, e as usize);
    let ok = if m == 0 {
        tau == 1 && iota == 0
    } else {
        (1..e).contains(&iota) && !iota.is_multiple_of(p)
    };
    if !ok {
        return Err(BoundsError::InconsistentIota { p, e, m, tau, iota });
    }
    Ok((m, tau))
}

/// Runs the descent recursion from `t_0 = floor((tau e + iota)/(p-1))`, `s_0 = 0`.
pub fn compute_s(p: u64, e: u64, tau: Tau, iota: u64, variant: Variant) -> Result<BoundTrace> {
    let (m, tau) = check_invariants(p, e, tau, iota)?;
    let epsilon = u32::from(m >= 1);
    let threshold = u64::from(tau + epsilon);
    let mut t = (u64::from(tau) * e + iota) / (p - 1);
    let mut s = 0u64;
    let mut pairs = vec![(t, s)];
    loop {
        let gap = t - t / p;
        let stop = match variant {
            Variant::Standard => gap <= threshold,
            Variant::Modified => gap < threshold,
        };
        if stop {
            break;
        }
        t /= p;
        s += threshold;
        pairs.push((t, s));
    }
    Ok(BoundTrace {
        p,
        e,
        tau,
        iota,
        m,
        epsilon,
        z: pairs.len() - 1,
        s: t + s,
        pairs,
        variant,
    })
}

/// Largest `v` with `p^v <= x`; `x >= 1`.
fn floor_log(p: u64, x: u64) -> u32 {
    let mut v = 0;
    let mut pow = p;
    while pow <= x {
        v += 1;
        match pow.checked_mul(p) {
            Some(next) => pow = next,
            None => break,
        }
    }
    v
}

/// `1 + floor(log_p(e/(p-1)))` when `p` does not divide `e`; `0` for `e <= p-2`.
pub fn s_closed_form_unramified(p: u64, e: u64) -> Result<u64> {
    check_prime(p)?;
    if e == 0 {
        return Err(BoundsError::ZeroDegree);
    }
    if e.is_multiple_of(p) {
        return Err(BoundsError::PDividesE { p, e });
    }
    Ok(log_reference_bound(p, e))
}

/// `1 + floor(log_p(e/(p-1)))` for any `e` (`0` when `e < p-1`); shown for comparison only.
pub fn log_reference_bound(p: u64, e: u64) -> u64 {
    let q = e / (p - 1);
    if q == 0 {
        0
    } else {
        1 + u64::from(floor_log(p, q))
    }
}

/// `(2e - 1 + e m)/(p-1)` exactly.
pub fn bound_f11(p: u64, e: u64) -> Result<Ratio<u64>> {
    check_prime(p)?;
    if e == 0 {
        return Err(BoundsError::ZeroDegree);
    }
    let m = u64::from(ramification_m(p, e as usize));
    Ok(Ratio::new(2 * e - 1 + e * m, p - 1))
}

/// `(log_p e + m + 2)(m + 2) - 1` for `p | e`, evaluated by exact comparisons.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct LogDegreeBound {
    pub p: u64,
    pub e: u64,
    pub m: u32,
}

impl LogDegreeBound {
    pub fn new(p: u64, e: u64) -> Result<Self> {
        check_prime(p)?;
        if e == 0 {
            return Err(BoundsError::ZeroDegree);
        }
        let m = ramification_m(p, e as usize);
        if m == 0 {
            return Err(BoundsError::PDoesNotDivideE { p, e });
        }
        Ok(Self { p, e, m })
    }

    /// `s < (log_p e + m + 2)(m + 2) - 1`, decided as `p^{s + 1 - (m+2)^2} < e^{m+2}`.
    pub fn exceeds(&self, s: u64) -> bool {
        let k2 = u64::from(self.m + 2);
        let k = i128::from(s) + 1 - i128::from(k2 * k2);
        if k <= 0 {
            return true;
        }
        let lhs = Pow::pow(BigUint::from(self.p), k as u64);
        let rhs = Pow::pow(BigUint::from(self.e), k2);
        lhs < rhs
    }

    /// The largest integer `s` with `exceeds(s)`.
    pub fn max_s(&self) -> u64 {
        let k2 = u64::from(self.m + 2);
        // exceeds(s) holds iff s + 1 - k2^2 < (m + 2) log_p e, so step through k.
        let mut s = k2 * k2 - 1;
        while self.exceeds(s + 1) {
            s += 1;
        }
        s
    }

    /// The bound itself when `e` is a power of `p` (then it is an integer).
    pub fn exact_value(&self) -> Option<u64> {
        let mut pow = BigUint::one();
        let target = BigUint::from(self.e);
        let mut log = 0u64;
        while pow < target {
            pow *= self.p;
            log += 1;
        }
        (pow == target).then(|| {
            let k2 = u64::from(self.m + 2);
            (log + k2) * k2 - 1
        })
    }
}

/// The log-degree bound for `p | e`.
pub fn bound_example4(p: u64, e: u64) -> Result<LogDegreeBound> {
    LogDegreeBound::new(p, e)
}

/// `((2s+1) r, (4s+2) r)`: the bounds on `h_3` and on `max(h_1, h_2, h_3)`.
pub fn prop3_height_bounds(s: u64, r: u64) -> (u64, u64) {
    ((2 * s + 1) * r, (4 * s + 2) * r)
}

/// Every admissible `(tau, iota)` with `tau <= m + 1` for the given `(p, e)`.
pub fn admissible_pairs(p: u64, e: u64) -> Vec<(u32, u64)> {
    let m = ramification_m(p, e as usize);
    if m == 0 {
        return vec![(1, 0)];
    }
    (1..=m + 1)
        .flat_map(|tau| (1..e).filter(move |i| i % p != 0).map(move |i| (tau, i)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(p: u64, e: u64, tau: u32, iota: u64) -> BoundTrace {
        compute_s(p, e, Tau::Finite(tau), iota, Variant::Standard).unwrap()
    }

    #[test]
    fn compute_s_examples() {
        let tr = s(5, 3, 1, 0);
        assert_eq!((tr.pairs.clone(), tr.z, tr.s), (vec![(0, 0)], 0, 0));
        let tr = s(2, 2, 2, 1);
        assert_eq!((tr.epsilon, tr.pairs.clone(), tr.s), (1, vec![(5, 0)], 5));
        let tr = s(2, 4, 3, 1);
        assert_eq!(
            (tr.pairs.clone(), tr.z, tr.s),
            (vec![(13, 0), (6, 4)], 1, 10)
        );
        assert!(tr.strictly_decreasing());
    }

    #[test]
    fn compute_s_errors() {
        assert_eq!(
            compute_s(2, 2, Tau::Infinite, 1, Variant::Standard),
            Err(BoundsError::NonFiniteTau(Tau::Infinite))
        );
        assert!(matches!(
            compute_s(2, 4, Tau::Finite(1), 2, Variant::Standard),
            Err(BoundsError::InconsistentIota { .. })
        ));
        assert!(matches!(
            compute_s(5, 3, Tau::Finite(2), 0, Variant::Standard),
            Err(BoundsError::InconsistentIota { .. })
        ));
        assert_eq!(
            compute_s(6, 3, Tau::Finite(1), 0, Variant::Standard),
            Err(BoundsError::NotPrime(6))
        );
    }

    #[test]
    fn modified_variant_takes_equality_steps() {
        let std = compute_s(2, 5, Tau::Finite(1), 0, Variant::Standard).unwrap();
        let modi = compute_s(2, 5, Tau::Finite(1), 0, Variant::Modified).unwrap();
        assert_eq!(std.pairs, vec![(5, 0), (2, 1)]);
        assert_eq!(modi.pairs, vec![(5, 0), (2, 1), (1, 2), (0, 3)]);
        assert_eq!((std.s, modi.s), (3, 3));
        assert!(modi.non_increasing());
    }

    #[test]
    fn closed_form_examples() {
        assert_eq!(s_closed_form_unramified(3, 4), Ok(1));
        assert_eq!(s_closed_form_unramified(2, 1), Ok(1));
        assert_eq!(s_closed_form_unramified(2, 5), Ok(3));
        assert_eq!(s_closed_form_unramified(3, 1), Ok(0));
        assert_eq!(
            s_closed_form_unramified(3, 6),
            Err(BoundsError::PDividesE { p: 3, e: 6 })
        );
    }

    #[test]
    fn linear_bound_examples() {
        assert_eq!(bound_f11(2, 2), Ok(Ratio::from_integer(5)));
        assert_eq!(bound_f11(3, 2), Ok(Ratio::new(3, 2)));
        assert_eq!(bound_f11(2, 4), Ok(Ratio::from_integer(15)));
    }

    #[test]
    fn log_degree_bound_examples() {
        for (p, e, v) in [(2, 2, 11), (2, 4, 23), (3, 3, 11)] {
            let b = LogDegreeBound::new(p, e).unwrap();
            assert_eq!(b.exact_value(), Some(v));
            assert_eq!(b.max_s(), v - 1);
            assert!(b.exceeds(v - 1));
            assert!(!b.exceeds(v));
        }
        assert_eq!(
            LogDegreeBound::new(3, 2),
            Err(BoundsError::PDoesNotDivideE { p: 3, e: 2 })
        );
        // e = 6, p = 2: (log_2 6 + 3) * 3 - 1 = 15.75...
        let b = LogDegreeBound::new(2, 6).unwrap();
        assert_eq!(b.exact_value(), None);
        assert_eq!(b.max_s(), 15);
    }

    #[test]
    fn height_bound_examples() {
        assert_eq!(prop3_height_bounds(0, 4), (4, 8));
        assert_eq!(prop3_height_bounds(5, 2), (22, 44));
        assert_eq!(prop3_height_bounds(1, 1), (3, 6));
    }

    #[test]
    fn admissible_pairs_cover_ceiling() {
        assert_eq!(admissible_pairs(3, 2), vec![(1, 0)]);
        assert_eq!(
            admissible_pairs(2, 4),
            vec![(1, 1), (1, 3), (2, 1), (2, 3), (3, 1), (3, 3)]
        );
    }
}
