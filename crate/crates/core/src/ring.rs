//! Exact arithmetic in the truncated ring `(Z/p^n)[u]/(u^T)`.
//!
//! Coefficients are kept as canonical residues in `[0, p^n)`. Every value
//! carries its [`Precision`]; binary operations on values of different
//! precision are rejected. The Frobenius lift fixes coefficients (the residue
//! field is `F_p`) and sends `u` to `u^p`.

use std::fmt;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RingError {
    #[error("{0} is not a prime")]
    NotPrime(u64),
    #[error("p-adic precision must be at least 1")]
    ZeroPAdicPrecision,
    #[error("u-adic precision must be at least 1")]
    ZeroUPrecision,
    #[error("precision mismatch: {left} vs {right}")]
    PrecisionMismatch { left: Precision, right: Precision },
    #[error("cannot decide membership in (u^{t}, p^{n}) at working precision {prec}")]
    InsufficientPrecision { t: usize, n: u32, prec: Precision },
    #[error("Weierstrass preparation of the zero series")]
    ZeroSeries,
}

pub type Result<T> = std::result::Result<T, RingError>;

pub(crate) fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2u64;
    while d.saturating_mul(d) <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Exact p-adic valuation of a nonzero integer.
pub fn ord_p_int(x: &BigInt, p: u64) -> Option<u32> {
    if x.is_zero() {
        return None;
    }
    let p = BigInt::from(p);
    let mut v = 0;
    let mut y = x.clone();
    loop {
        let (q, r) = y.div_rem(&p);
        if !r.is_zero() {
            return Some(v);
        }
        y = q;
        v += 1;
    }
}

/// p-adic valuation of a residue modulo `p^n`, capped at `n` (returned for zero).
pub fn ord_p_residue(x: &BigUint, p: u64, n: u32) -> u32 {
    if x.is_zero() {
        return n;
    }
    let p = BigUint::from(p);
    let mut v = 0;
    let mut y = x.clone();
    while v < n {
        let (q, r) = y.div_rem(&p);
        if !r.is_zero() {
            break;
        }
        y = q;
        v += 1;
    }
    v
}

/// Inverse of `x` modulo `m`, if it exists.
pub fn inverse_mod(x: &BigUint, m: &BigUint) -> Option<BigUint> {
    let a = BigInt::from_biguint(Sign::Plus, x.clone());
    let m_int = BigInt::from_biguint(Sign::Plus, m.clone());
    let egcd = a.extended_gcd(&m_int);
    if !egcd.gcd.is_one() {
        return None;
    }
    egcd.x.mod_floor(&m_int).to_biguint()
}

/// A valuation that may only be known to exceed the working precision.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Valuation {
    Finite(u32),
    /// Every visible digit vanishes; the true value is at least this bound.
    AtLeast(u32),
}

impl Valuation {
    pub fn finite(self) -> Option<u32> {
        match self {
            Valuation::Finite(v) => Some(v),
            Valuation::AtLeast(_) => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Valuation::Finite(_))
    }

    /// The largest value the valuation is known to reach.
    pub fn lower_bound(self) -> u32 {
        match self {
            Valuation::Finite(v) | Valuation::AtLeast(v) => v,
        }
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Valuation::Finite(v) => write!(f, "{v}"),
            Valuation::AtLeast(v) => write!(f, ">={v}"),
        }
    }
}

/// Working precision `(p, n, T)`: arithmetic modulo `p^n` and `u^T`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Precision {
    p: u64,
    n: u32,
    t: usize,
    modulus: BigUint,
}

impl Precision {
    pub fn new(p: u64, n: u32, t: usize) -> Result<Self> {
        if !is_prime(p) {
            return Err(RingError::NotPrime(p));
        }
        if n == 0 {
            return Err(RingError::ZeroPAdicPrecision);
        }
        if t == 0 {
            return Err(RingError::ZeroUPrecision);
        }
        Ok(Self {
            p,
            n,
            t,
            modulus: BigUint::from(p).pow(n),
        })
    }

    /// The coefficient ring `Z/p^n` viewed as series truncated at `u^1`.
    pub fn scalars(p: u64, n: u32) -> Result<Self> {
        Self::new(p, n, 1)
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn t(&self) -> usize {
        self.t
    }

    /// `p^n`.
    pub fn modulus(&self) -> &BigUint {
        &self.modulus
    }

    pub fn p_pow(&self, k: u32) -> BigUint {
        BigUint::from(self.p).pow(k)
    }

    pub fn with_t(&self, t: usize) -> Result<Self> {
        Self::new(self.p, self.n, t)
    }

    pub fn with_n(&self, n: u32) -> Result<Self> {
        Self::new(self.p, n, self.t)
    }

    /// Smallest input u-precision whose Frobenius image determines the output modulo `u^t_out`.
    pub fn frobenius_input_t(&self, t_out: usize) -> usize {
        t_out.div_ceil(self.p as usize)
    }

    fn reduce(&self, x: BigUint) -> BigUint {
        if x < self.modulus {
            x
        } else {
            x % &self.modulus
        }
    }

    fn reduce_signed(&self, x: &BigInt) -> BigUint {
        let m = BigInt::from_biguint(Sign::Plus, self.modulus.clone());
        x.mod_floor(&m)
            .to_biguint()
            .expect("mod_floor is non-negative")
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(p={}, n={}, T={})", self.p, self.n, self.t)
    }
}

/// An element of `(Z/p^n)[u]/(u^T)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TruncatedSeries {
    prec: Precision,
    coeffs: Vec<BigUint>,
}

impl TruncatedSeries {
    pub fn zero(prec: &Precision) -> Self {
        Self {
            coeffs: vec![BigUint::zero(); prec.t],
            prec: prec.clone(),
        }
    }

    pub fn one(prec: &Precision) -> Self {
        Self::monomial(prec, BigUint::one(), 0)
    }

    /// `c * u^k`, truncated to zero when `k >= T`.
    pub fn monomial(prec: &Precision, c: impl Into<BigUint>, k: usize) -> Self {
        let mut s = Self::zero(prec);
        if k < prec.t {
            s.coeffs[k] = prec.reduce(c.into());
        }
        s
    }

    /// Builds a series from signed integer coefficients (constant term first);
    /// coefficients are reduced modulo `p^n` and terms at or beyond `u^T` dropped.
    pub fn from_ints(prec: &Precision, coeffs: &[BigInt]) -> Self {
        let mut s = Self::zero(prec);
        for (slot, c) in s.coeffs.iter_mut().zip(coeffs) {
            *slot = prec.reduce_signed(c);
        }
        s
    }

    pub fn from_u64s(prec: &Precision, coeffs: &[u64]) -> Self {
        let mut s = Self::zero(prec);
        for (slot, &c) in s.coeffs.iter_mut().zip(coeffs) {
            *slot = prec.reduce(BigUint::from(c));
        }
        s
    }

    pub fn from_residues(prec: &Precision, coeffs: Vec<BigUint>) -> Self {
        let mut s = Self::zero(prec);
        for (slot, c) in s.coeffs.iter_mut().zip(coeffs) {
            *slot = prec.reduce(c);
        }
        s
    }

    pub fn prec(&self) -> &Precision {
        &self.prec
    }

    pub fn coeffs(&self) -> &[BigUint] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> &BigUint {
        &self.coeffs[i]
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    /// Index of the highest nonzero coefficient.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.iter().rposition(|c| !c.is_zero())
    }

    /// True when the constant term is a unit modulo `p`.
    pub fn is_unit(&self) -> bool {
        !(&self.coeffs[0] % BigUint::from(self.prec.p)).is_zero()
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.prec != other.prec {
            return Err(RingError::PrecisionMismatch {
                left: self.prec.clone(),
                right: other.prec.clone(),
            });
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| self.prec.reduce(a + b))
            .collect();
        Ok(Self {
            prec: self.prec.clone(),
            coeffs,
        })
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let m = &self.prec.modulus;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| if a >= b { a - b } else { m - (b - a) })
            .collect();
        Ok(Self {
            prec: self.prec.clone(),
            coeffs,
        })
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let t = self.prec.t;
        let mut acc = vec![BigUint::zero(); t];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs[..t - i].iter().enumerate() {
                if !b.is_zero() {
                    acc[i + j] += a * b;
                }
            }
        }
        let coeffs = acc.into_iter().map(|c| self.prec.reduce(c)).collect();
        Ok(Self {
            prec: self.prec.clone(),
            coeffs,
        })
    }

    pub fn neg(&self) -> Self {
        let m = &self.prec.modulus;
        let coeffs = self
            .coeffs
            .iter()
            .map(|c| if c.is_zero() { c.clone() } else { m - c })
            .collect();
        Self {
            prec: self.prec.clone(),
            coeffs,
        }
    }

    pub fn scale(&self, c: &BigUint) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .map(|a| self.prec.reduce(a * c))
            .collect();
        Self {
            prec: self.prec.clone(),
            coeffs,
        }
    }

    pub fn scale_int(&self, c: &BigInt) -> Self {
        self.scale(&self.prec.reduce_signed(c))
    }

    /// Multiplication by `p^k`.
    pub fn mul_p_pow(&self, k: u32) -> Self {
        if k >= self.prec.n {
            return Self::zero(&self.prec);
        }
        self.scale(&self.prec.p_pow(k))
    }

    /// Multiplication by `u^k`.
    pub fn shift_up(&self, k: usize) -> Self {
        let mut s = Self::zero(&self.prec);
        for i in k..self.prec.t {
            s.coeffs[i] = self.coeffs[i - k].clone();
        }
        s
    }

    /// Drops the `k` lowest coefficients and divides by `u^k`; the top `k`
    /// coefficients of the result are filled with zeros.
    pub fn shift_down(&self, k: usize) -> Self {
        let mut s = Self::zero(&self.prec);
        for i in k..self.prec.t {
            s.coeffs[i - k] = self.coeffs[i].clone();
        }
        s
    }

    /// Keeps only the terms of degree `< k`.
    pub fn truncated_below(&self, k: usize) -> Self {
        let mut s = self.clone();
        for c in s.coeffs.iter_mut().skip(k) {
            *c = BigUint::zero();
        }
        s
    }

    /// Re-embeds at a different u-precision (truncating or padding with zeros).
    pub fn with_t(&self, t: usize) -> Result<Self> {
        let prec = self.prec.with_t(t)?;
        Ok(Self::from_residues(&prec, self.coeffs.clone()))
    }

    /// Reduces (or lifts by canonical representative) to p-adic precision `n`.
    pub fn with_n(&self, n: u32) -> Result<Self> {
        let prec = self.prec.with_n(n)?;
        Ok(Self::from_residues(&prec, self.coeffs.clone()))
    }

    /// The Frobenius lift `sum a_i u^i -> sum a_i u^(p i)` at the same precision.
    pub fn frobenius(&self) -> Self {
        self.frobenius_to(&self.prec)
    }

    /// The Frobenius lift truncated at the output precision `out` (which must
    /// share `p` and `n`; only `T` may differ).
    pub fn frobenius_to(&self, out: &Precision) -> Self {
        assert!(
            out.p == self.prec.p && out.n == self.prec.n,
            "frobenius_to may only change the u-precision"
        );
        let p = self.prec.p as usize;
        let mut s = Self::zero(out);
        for (i, c) in self.coeffs.iter().enumerate() {
            let k = i * p;
            if k >= out.t {
                break;
            }
            s.coeffs[k] = c.clone();
        }
        s
    }

    /// u-adic valuation; `AtLeast(T)` when every coefficient vanishes.
    pub fn ord_u(&self) -> Valuation {
        match self.coeffs.iter().position(|c| !c.is_zero()) {
            Some(i) => Valuation::Finite(i as u32),
            None => Valuation::AtLeast(self.prec.t as u32),
        }
    }

    /// Content: the minimal p-adic valuation of the coefficients; `AtLeast(n)` for zero.
    pub fn content_p(&self) -> Valuation {
        let n = self.prec.n;
        match self
            .coeffs
            .iter()
            .filter(|c| !c.is_zero())
            .map(|c| ord_p_residue(c, self.prec.p, n))
            .min()
        {
            Some(v) => Valuation::Finite(v),
            None => Valuation::AtLeast(n),
        }
    }

    /// Membership in the ideal `(u^t, p^n')`: every coefficient below `u^t` is divisible by `p^n'`.
    pub fn in_ideal(&self, t: usize, n_prime: u32) -> Result<bool> {
        if t > self.prec.t || n_prime > self.prec.n {
            return Err(RingError::InsufficientPrecision {
                t,
                n: n_prime,
                prec: self.prec.clone(),
            });
        }
        let q = self.prec.p_pow(n_prime);
        Ok(self.coeffs[..t].iter().all(|c| (c % &q).is_zero()))
    }

    /// Inverse of a unit (constant term prime to `p`).
    pub fn unit_inverse(&self) -> Option<Self> {
        let inv0 = inverse_mod(&self.coeffs[0], &self.prec.modulus)?;
        let t = self.prec.t;
        let m = &self.prec.modulus;
        let mut out = vec![BigUint::zero(); t];
        out[0] = inv0.clone();
        for k in 1..t {
            let mut acc = BigUint::zero();
            for i in 1..=k {
                if !self.coeffs[i].is_zero() && !out[k - i].is_zero() {
                    acc += &self.coeffs[i] * &out[k - i];
                }
            }
            let acc = (acc * &inv0) % m;
            out[k] = if acc.is_zero() { acc } else { m - acc };
        }
        Some(Self {
            prec: self.prec.clone(),
            coeffs: out,
        })
    }

    /// Weierstrass preparation: `self = p^c * unit * wpoly` modulo `(p^n, u^T)`.
    ///
    /// After stripping the content, the factorization is first found modulo
    /// `p` (where it is `u^d` times a unit) and then corrected one p-adic digit
    /// at a time by solving `unit * dW + wpoly * dU = residual` modulo `p`.
    pub fn weierstrass_prep(&self) -> Result<WeierstrassFactorization> {
        let content = self.content_p().finite().ok_or(RingError::ZeroSeries)?;
        let p = self.prec.p;
        let work_n = self.prec.n - content;
        let work = self.prec.with_n(work_n)?;
        let mod_p = self.prec.with_n(1)?;

        let strip = self.prec.p_pow(content);
        let stripped: Vec<BigUint> = self.coeffs.iter().map(|c| c / &strip).collect();
        let target = TruncatedSeries::from_residues(&work, stripped);
        let target_mod_p = target.with_n(1)?;

        let degree = target_mod_p
            .ord_u()
            .finite()
            .expect("content-stripped series is nonzero mod p") as usize;
        let unit_mod_p = target_mod_p.shift_down(degree);
        let unit_mod_p_inv = unit_mod_p
            .unit_inverse()
            .expect("leading mod-p coefficient is a unit");

        let mut unit = unit_mod_p.with_n(work_n)?;
        let mut wpoly = TruncatedSeries::monomial(&work, BigUint::one(), degree);
        for k in 1..work_n {
            let residual = target.checked_sub(&unit.checked_mul(&wpoly)?)?;
            let scale = BigUint::from(p).pow(k);
            let digit: Vec<BigUint> = residual.coeffs.iter().map(|c| c / &scale).collect();
            let digit = TruncatedSeries::from_residues(&mod_p, digit);
            let dw = digit.checked_mul(&unit_mod_p_inv)?.truncated_below(degree);
            let du = digit
                .checked_sub(&unit_mod_p.checked_mul(&dw)?)?
                .shift_down(degree);
            debug_assert!(digit
                .checked_sub(&unit_mod_p.checked_mul(&dw)?)?
                .truncated_below(degree)
                .is_zero());
            wpoly = wpoly.checked_add(&dw.with_n(work_n)?.scale(&scale))?;
            unit = unit.checked_add(&du.with_n(work_n)?.scale(&scale))?;
        }
        Ok(WeierstrassFactorization {
            content,
            degree,
            wpoly: wpoly.with_n(self.prec.n)?,
            unit: unit.with_n(self.prec.n)?,
        })
    }

    /// Signed representatives in `(-p^n/2, p^n/2]`.
    pub fn symmetric_coeffs(&self) -> Vec<BigInt> {
        let m = BigInt::from_biguint(Sign::Plus, self.prec.modulus.clone());
        let half = &m / 2u32;
        self.coeffs
            .iter()
            .map(|c| {
                let c = BigInt::from_biguint(Sign::Plus, c.clone());
                if c > half {
                    c - &m
                } else {
                    c
                }
            })
            .collect()
    }
}

/// Writes terms as `c*u^k` in descending degree, e.g. `u^4+4`.
impl fmt::Display for TruncatedSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            if !first {
                f.write_str("+")?;
            }
            first = false;
            match (k, c.is_one()) {
                (0, _) => write!(f, "{c}")?,
                (1, true) => f.write_str("u")?,
                (1, false) => write!(f, "{c}*u")?,
                (_, true) => write!(f, "u^{k}")?,
                (_, false) => write!(f, "{c}*u^{k}")?,
            }
        }
        if first {
            f.write_str("0")?;
        }
        Ok(())
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident, $checked:ident) => {
        /// Panics on precision mismatch; use the `checked_*` form to get an error instead.
        impl std::ops::$trait for &TruncatedSeries {
            type Output = TruncatedSeries;
            fn $method(self, rhs: &TruncatedSeries) -> TruncatedSeries {
                self.$checked(rhs).unwrap_or_else(|e| panic!("{e}"))
            }
        }
    };
}

forward_binop!(Add, add, checked_add);
forward_binop!(Sub, sub, checked_sub);
forward_binop!(Mul, mul, checked_mul);

impl std::ops::Neg for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn neg(self) -> TruncatedSeries {
        TruncatedSeries::neg(self)
    }
}

/// `input = p^content * unit * wpoly` modulo `(p^n, u^T)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeierstrassFactorization {
    pub content: u32,
    pub degree: usize,
    /// Monic of degree `degree`; lower coefficients divisible by `p`.
    pub wpoly: TruncatedSeries,
    /// Constant term prime to `p`.
    pub unit: TruncatedSeries,
}

impl WeierstrassFactorization {
    pub fn recompose(&self) -> TruncatedSeries {
        let prod = &self.unit * &self.wpoly;
        prod.mul_p_pow(self.content)
    }

    /// Checks the shape conditions on `wpoly` and `unit`.
    pub fn is_well_formed(&self) -> bool {
        let p = BigUint::from(self.wpoly.prec().p());
        let w = self.wpoly.coeffs();
        self.degree < w.len()
            && w[self.degree].is_one()
            && w[..self.degree].iter().all(|c| (c % &p).is_zero())
            && w[self.degree + 1..].iter().all(Zero::is_zero)
            && self.unit.is_unit()
    }
}
