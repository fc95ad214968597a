//! Eisenstein polynomials and the invariants of the uniformizer they define.
//!
//! An [`EisensteinPolynomial`] has exact integer coefficients, so `tau = inf`
//! is decidable. Changing the uniformizer produces a [`ModularEisenstein`]:
//! the characteristic polynomial of multiplication by the new uniformizer,
//! known modulo `p^N`.

use std::fmt;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::matrix::SeriesMatrix;
use crate::ring::{is_prime, ord_p_int, ord_p_residue, Precision, RingError, TruncatedSeries};

/// Hard cap on the number of uniformizer candidates a search may visit.
pub const SEARCH_BUDGET: u64 = 100_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EisensteinError {
    #[error("{0} is not a prime")]
    NotPrime(u64),
    #[error("an Eisenstein polynomial has degree at least 1")]
    ZeroDegree,
    #[error("polynomial is not monic (leading coefficient {0})")]
    NotMonic(BigInt),
    #[error("not Eisenstein: {}", join_violations(.0))]
    Violations(Vec<Violation>),
    #[error("c_1 = {0} is not a unit mod p, so the element is not a uniformizer")]
    NotAUnit(BigInt),
    #[error("a uniformizer change needs at least the coefficients c_0 and c_1")]
    ShortChange,
    #[error("p-adic precision {got} is too small (need at least {need})")]
    PrecisionTooSmall { got: u32, need: u32 },
    #[error("digit precision must be at least 1")]
    ZeroDigitPrecision,
    #[error("search space of {required} candidates exceeds the budget of {budget}")]
    BudgetExceeded { required: u128, budget: u64 },
    #[error("tau ceiling m+1 = {ceiling} violated (found {found})")]
    CeilingViolated { ceiling: u32, found: Tau },
    #[error(transparent)]
    Ring(#[from] RingError),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Violation {
    /// `a_i` is not divisible by `p`.
    NotDivisible { index: usize, value: BigInt },
    /// `ord_p(a_0) != 1`; `None` stands for `a_0 = 0`.
    ConstantValuation { valuation: Option<u32> },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NotDivisible { index, value } => {
                write!(f, "a_{index} = {value} is not divisible by p")
            }
            Violation::ConstantValuation { valuation: Some(v) } => {
                write!(f, "ord_p(a_0) = {v}, expected 1")
            }
            Violation::ConstantValuation { valuation: None } => {
                write!(f, "a_0 = 0, expected ord_p(a_0) = 1")
            }
        }
    }
}

pub type Result<T> = std::result::Result<T, EisensteinError>;

/// `tau(pi)`: finite, infinite (exact input with `E_1 = 0`), or only bounded
/// below when every `E_1` coefficient vanishes modulo the working `p^N`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Tau {
    Finite(u32),
    AtLeast(u32),
    Infinite,
}

impl Tau {
    pub fn finite(self) -> Option<u32> {
        match self {
            Tau::Finite(t) => Some(t),
            _ => None,
        }
    }

    /// Total order used by searches: finite values first, then bounds, then infinity.
    pub fn sort_key(self) -> (u8, u32) {
        match self {
            Tau::Finite(t) => (0, t),
            Tau::AtLeast(t) => (1, t),
            Tau::Infinite => (2, 0),
        }
    }
}

impl fmt::Display for Tau {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tau::Finite(t) => write!(f, "{t}"),
            Tau::AtLeast(t) => write!(f, ">={t}"),
            Tau::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for Tau {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Tau::Finite(t) => s.serialize_u32(*t),
            other => s.serialize_str(&other.to_string()),
        }
    }
}

/// `(m, tau, iota, t(pi))` for one uniformizer.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct UniformizerInvariants {
    pub m: u32,
    pub tau: Tau,
    /// `None` when `tau` is not finite.
    pub iota: Option<usize>,
    /// `floor((tau e + iota)/(p-1))`; `None` when `tau` is not finite.
    pub t_pi: Option<u64>,
}

/// `m = ord_p(e)`.
pub fn ramification_m(p: u64, e: usize) -> u32 {
    ord_p_int(&BigInt::from(e), p).expect("e >= 1")
}

/// Shared core of the exact and modular invariants: `ords[i]` is `ord_p(a_i)`
/// (`None` for a vanishing coefficient) and `vanished` is reported when
/// every coefficient of `E_1` vanishes.
fn invariants_from(p: u64, ords: &[Option<u32>], vanished: Tau) -> UniformizerInvariants {
    let e = ords.len();
    let m = ramification_m(p, e);
    if m == 0 {
        return UniformizerInvariants {
            m,
            tau: Tau::Finite(1),
            iota: Some(0),
            t_pi: Some(e as u64 / (p - 1)),
        };
    }
    let best = (1..e)
        .filter(|i| i % p as usize != 0)
        .filter_map(|i| ords[i].map(|o| (o, i)))
        .min();
    match best {
        Some((tau, iota)) => UniformizerInvariants {
            m,
            tau: Tau::Finite(tau),
            iota: Some(iota),
            t_pi: Some((tau as u64 * e as u64 + iota as u64) / (p - 1)),
        },
        None => UniformizerInvariants {
            m,
            tau: vanished,
            iota: None,
            t_pi: None,
        },
    }
}

/// Polynomial split by exponent class: `E_0` carries the exponents divisible
/// by `p` (including `u^e` when `p | e`), `E_1 = E - E_0` the rest.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct E0E1Split {
    /// Dense coefficients, constant term first, length `e + 1`.
    pub e0: Vec<BigInt>,
    pub e1: Vec<BigInt>,
}

/// Monic `u^e + a_{e-1} u^{e-1} + ... + a_0` with `p | a_i` and `ord_p(a_0) = 1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct EisensteinPolynomial {
    p: u64,
    /// `a_0, ..., a_{e-1}`.
    coeffs: Vec<BigInt>,
}

impl EisensteinPolynomial {
    /// Validates the lower coefficients `a_0..a_{e-1}`, reporting every violated condition.
    pub fn new(p: u64, coeffs: Vec<BigInt>) -> Result<Self> {
        if !is_prime(p) {
            return Err(EisensteinError::NotPrime(p));
        }
        if coeffs.is_empty() {
            return Err(EisensteinError::ZeroDegree);
        }
        let pb = BigInt::from(p);
        let mut violations = Vec::new();
        for (i, a) in coeffs.iter().enumerate() {
            if !a.is_multiple_of(&pb) {
                violations.push(Violation::NotDivisible {
                    index: i,
                    value: a.clone(),
                });
            }
        }
        let v0 = ord_p_int(&coeffs[0], p);
        if v0 != Some(1) {
            violations.push(Violation::ConstantValuation { valuation: v0 });
        }
        if !violations.is_empty() {
            return Err(EisensteinError::Violations(violations));
        }
        Ok(Self { p, coeffs })
    }

    /// From dense coefficients `[a_0, ..., a_e]`; requires `a_e = 1`.
    pub fn from_dense(p: u64, dense: &[BigInt]) -> Result<Self> {
        let mut dense = dense.to_vec();
        while dense.len() > 1 && dense.last().is_some_and(Zero::is_zero) {
            dense.pop();
        }
        match dense.last() {
            None => Err(EisensteinError::ZeroDegree),
            Some(lead) if !lead.is_one() => Err(EisensteinError::NotMonic(lead.clone())),
            Some(_) if dense.len() == 1 => Err(EisensteinError::ZeroDegree),
            Some(_) => {
                dense.pop();
                Self::new(p, dense)
            }
        }
    }

    /// `u^e - p`.
    pub fn pure(p: u64, e: usize) -> Result<Self> {
        let mut c = vec![BigInt::zero(); e];
        if let Some(a0) = c.first_mut() {
            *a0 = -BigInt::from(p);
        }
        Self::new(p, c)
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len()
    }

    /// `a_0..a_{e-1}`.
    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    /// `[a_0, ..., a_{e-1}, 1]`.
    pub fn dense(&self) -> Vec<BigInt> {
        let mut d = self.coeffs.clone();
        d.push(BigInt::one());
        d
    }

    pub fn m(&self) -> u32 {
        ramification_m(self.p, self.degree())
    }

    pub fn split(&self) -> E0E1Split {
        let p = self.p as usize;
        let dense = self.dense();
        let mut e0 = vec![BigInt::zero(); dense.len()];
        let mut e1 = vec![BigInt::zero(); dense.len()];
        for (i, a) in dense.into_iter().enumerate() {
            if i % p == 0 {
                e0[i] = a;
            } else {
                e1[i] = a;
            }
        }
        E0E1Split { e0, e1 }
    }

    pub fn invariants(&self) -> UniformizerInvariants {
        let ords: Vec<Option<u32>> = self.coeffs.iter().map(|a| ord_p_int(a, self.p)).collect();
        invariants_from(self.p, &ords, Tau::Infinite)
    }

    /// The Eisenstein polynomial `E(u - shift)` of the uniformizer `pi + shift`,
    /// computed by an exact Taylor shift.
    pub fn translate(&self, shift: &BigInt) -> Result<Self> {
        let dense = self.dense();
        let mut acc: Vec<BigInt> = Vec::new();
        for a in dense.iter().rev() {
            // acc <- acc * (u - shift) + a
            let mut next = vec![BigInt::zero(); acc.len() + 1];
            for (i, c) in acc.iter().enumerate() {
                next[i + 1] += c;
                next[i] -= c * shift;
            }
            next[0] += a;
            acc = next;
        }
        Self::from_dense(self.p, &acc)
    }

    pub fn reduce(&self, n: u32) -> Result<ModularEisenstein> {
        let prec = Precision::scalars(self.p, n)?;
        let m = BigInt::from_biguint(Sign::Plus, prec.modulus().clone());
        let coeffs = self
            .coeffs
            .iter()
            .map(|a| a.mod_floor(&m).to_biguint().expect("non-negative"))
            .collect();
        Ok(ModularEisenstein {
            p: self.p,
            n,
            coeffs,
        })
    }

    /// `E` as an element of the truncated ring (reduced modulo `p^n` and `u^T`).
    pub fn to_series(&self, prec: &Precision) -> TruncatedSeries {
        TruncatedSeries::from_ints(prec, &self.dense())
    }

    /// Characteristic polynomial of multiplication by the changed uniformizer, modulo `p^N`.
    pub fn substitute(&self, change: &UniformizerChange, n: u32) -> Result<ModularEisenstein> {
        self.reduce(n)?.substitute(change)
    }

    /// A uniformizer with finite `tau <= m + 1`: `pi` itself or `pi + p`.
    pub fn finite_tau_uniformizer(&self) -> Result<(Self, UniformizerInvariants)> {
        let here = self.invariants();
        if here.m == 0 {
            return Ok((self.clone(), here));
        }
        let shifted = self.translate(&BigInt::from(self.p))?;
        let there = shifted.invariants();
        let ceiling = self.m() + 1;
        for (poly, inv) in [(self.clone(), here), (shifted, there)] {
            if let Some(t) = inv.tau.finite() {
                if t <= ceiling {
                    return Ok((poly, inv));
                }
            }
        }
        Err(EisensteinError::CeilingViolated {
            ceiling,
            found: self.invariants().tau,
        })
    }
}

fn write_poly(f: &mut fmt::Formatter<'_>, dense: &[BigInt]) -> fmt::Result {
    let mut first = true;
    for (k, c) in dense.iter().enumerate().rev() {
        if c.is_zero() {
            continue;
        }
        let sign = if c.is_negative() { "-" } else { "+" };
        if !first || c.is_negative() {
            f.write_str(sign)?;
        }
        first = false;
        let a = c.abs();
        match (k, a.is_one()) {
            (0, _) => write!(f, "{a}")?,
            (1, true) => f.write_str("u")?,
            (1, false) => write!(f, "{a}*u")?,
            (_, true) => write!(f, "u^{k}")?,
            (_, false) => write!(f, "{a}*u^{k}")?,
        }
    }
    if first {
        f.write_str("0")?;
    }
    Ok(())
}

impl fmt::Display for EisensteinPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_poly(f, &self.dense())
    }
}

/// Formats dense integer coefficients as `u^e+c*u^k+...+c`.
pub fn format_poly(dense: &[BigInt]) -> String {
    struct P<'a>(&'a [BigInt]);
    impl fmt::Display for P<'_> {
        fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            write_poly(f, self.0)
        }
    }
    P(dense).to_string()
}

/// An Eisenstein polynomial known modulo `p^n` (the output of a uniformizer change).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ModularEisenstein {
    p: u64,
    n: u32,
    /// Residues of `a_0..a_{e-1}` in `[0, p^n)`.
    coeffs: Vec<BigUint>,
}

impl ModularEisenstein {
    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[BigUint] {
        &self.coeffs
    }

    /// Signed representatives of `[a_0, ..., a_{e-1}, 1]` in `(-p^n/2, p^n/2]`.
    pub fn symmetric_dense(&self) -> Vec<BigInt> {
        let m = BigInt::from(self.p).pow(self.n);
        let half = &m / 2;
        let mut out: Vec<BigInt> = self
            .coeffs
            .iter()
            .map(|c| {
                let c = BigInt::from_biguint(Sign::Plus, c.clone());
                if c > half {
                    c - &m
                } else {
                    c
                }
            })
            .collect();
        out.push(BigInt::one());
        out
    }

    /// Invariants at precision `p^n`; `tau` is `AtLeast(n)` when `E_1` vanishes mod `p^n`.
    pub fn invariants(&self) -> UniformizerInvariants {
        let ords: Vec<Option<u32>> = self
            .coeffs
            .iter()
            .map(|c| (!c.is_zero()).then(|| ord_p_residue(c, self.p, self.n)))
            .collect();
        invariants_from(self.p, &ords, Tau::AtLeast(self.n))
    }

    fn check_eisenstein(&self) -> Result<()> {
        let pb = BigUint::from(self.p);
        let mut violations = Vec::new();
        for (i, a) in self.coeffs.iter().enumerate() {
            if !(a % &pb).is_zero() {
                violations.push(Violation::NotDivisible {
                    index: i,
                    value: BigInt::from_biguint(Sign::Plus, a.clone()),
                });
            }
        }
        let v0 =
            (!self.coeffs[0].is_zero()).then(|| ord_p_residue(&self.coeffs[0], self.p, self.n));
        if v0 != Some(1) {
            violations.push(Violation::ConstantValuation { valuation: v0 });
        }
        if violations.is_empty() {
            Ok(())
        } else {
            Err(EisensteinError::Violations(violations))
        }
    }

    /// Multiplication-by-`pi` matrix in the basis `1, pi, ..., pi^{e-1}`.
    fn companion(&self, prec: &Precision) -> SeriesMatrix {
        let e = self.degree();
        let mut m = SeriesMatrix::zero(prec, e, e);
        for j in 0..e {
            if j + 1 < e {
                m.set(j + 1, j, TruncatedSeries::one(prec));
            } else {
                for (i, a) in self.coeffs.iter().enumerate() {
                    m.set(
                        i,
                        j,
                        TruncatedSeries::from_residues(prec, vec![a.clone()]).neg(),
                    );
                }
            }
        }
        m
    }

    /// Characteristic polynomial of multiplication by
    /// `c_0 p + c_1 pi + c_2 pi^2 + ...` on `Z_p[u]/(E)`, modulo `p^n`.
    pub fn substitute(&self, change: &UniformizerChange) -> Result<ModularEisenstein> {
        if self.n < 2 {
            return Err(EisensteinError::PrecisionTooSmall {
                got: self.n,
                need: 2,
            });
        }
        let prec = Precision::scalars(self.p, self.n)?;
        let e = self.degree();
        let pi = self.companion(&prec);
        let scalar = |c: &BigInt| TruncatedSeries::from_ints(&prec, std::slice::from_ref(c));

        let c0p = &change.cs[0] * BigInt::from(self.p);
        let mut acc = SeriesMatrix::identity(&prec, e).scale(&scalar(&c0p));
        let mut power = SeriesMatrix::identity(&prec, e);
        for c in &change.cs[1..] {
            power = power.mul(&pi);
            acc = acc.add(&power.scale(&scalar(c)));
        }
        let cp = acc.charpoly();
        let coeffs = (0..e).map(|i| cp[e - i].coeff(0).clone()).collect();
        let out = ModularEisenstein {
            p: self.p,
            n: self.n,
            coeffs,
        };
        out.check_eisenstein()?;
        Ok(out)
    }
}

impl fmt::Display for ModularEisenstein {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_poly(f, &self.symmetric_dense())?;
        write!(f, " (mod {}^{})", self.p, self.n)
    }
}

/// `pi~ = c_0 p + c_1 pi + ... + c_k pi^k` with `c_1` a unit mod `p`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct UniformizerChange {
    cs: Vec<BigInt>,
}

impl UniformizerChange {
    pub fn new(p: u64, cs: Vec<BigInt>) -> Result<Self> {
        if cs.len() < 2 {
            return Err(EisensteinError::ShortChange);
        }
        if cs[1].is_multiple_of(&BigInt::from(p)) {
            return Err(EisensteinError::NotAUnit(cs[1].clone()));
        }
        Ok(Self { cs })
    }

    /// `pi~ = pi`.
    pub fn identity() -> Self {
        Self {
            cs: vec![BigInt::zero(), BigInt::one()],
        }
    }

    /// `pi~ = pi + c_0 p`.
    pub fn translation(c0: BigInt) -> Self {
        Self {
            cs: vec![c0, BigInt::one()],
        }
    }

    pub fn cs(&self) -> &[BigInt] {
        &self.cs
    }
}

impl fmt::Display for UniformizerChange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.cs.iter().map(ToString::to_string).collect();
        write!(f, "[{}]", parts.join(", "))
    }
}

/// Result of the bounded search for the minimal `(tau, iota)` over uniformizers.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TauSearch {
    pub tau: Tau,
    pub iota: Option<usize>,
    pub witness: UniformizerChange,
    /// Eisenstein polynomial of the witness uniformizer, mod `p^N`.
    pub witness_poly: String,
    /// `m + 1`, the guaranteed ceiling.
    pub ceiling: u32,
    pub candidates: u64,
    /// True when the found value is provably the minimum over all uniformizers.
    pub exact: bool,
}

/// Exhaustive search over `pi~ = c_0 p + c_1 pi + ... + c_{e-1} pi^{e-1}` with
/// every `c_i < p^digit_precision` and `c_1` a unit.
///
/// The result is an upper bound for the minimal `tau`; ties are broken by
/// `iota` and then by the lexicographic order of `(c_0, ..., c_{e-1})`, so the
/// witness does not depend on how the work is split across threads.
pub fn tau_v_search(
    poly: &EisensteinPolynomial,
    digit_precision: u32,
    n: u32,
    lower_bound: Option<u32>,
) -> Result<TauSearch> {
    if digit_precision == 0 {
        return Err(EisensteinError::ZeroDigitPrecision);
    }
    let m = poly.m();
    let ceiling = m + 1;
    if m == 0 {
        return Ok(TauSearch {
            tau: Tau::Finite(1),
            iota: Some(0),
            witness: UniformizerChange::identity(),
            witness_poly: poly.to_string(),
            ceiling,
            candidates: 0,
            exact: true,
        });
    }
    if n < m + 3 {
        return Err(EisensteinError::PrecisionTooSmall {
            got: n,
            need: m + 3,
        });
    }
    // The pair {pi, pi + p} always reaches the ceiling.
    poly.finite_tau_uniformizer()?;

    let e = poly.degree();
    let q = BigUint::from(poly.p()).pow(digit_precision);
    let required = q
        .to_u128()
        .and_then(|q| q.checked_pow(e as u32))
        .unwrap_or(u128::MAX);
    if required > SEARCH_BUDGET as u128 {
        return Err(EisensteinError::BudgetExceeded {
            required,
            budget: SEARCH_BUDGET,
        });
    }
    let q = q.to_u64().expect("bounded by the budget");
    let modular = poly.reduce(n)?;
    let p = poly.p();

    let decode = |index: u64| -> Vec<u64> {
        let mut digits = vec![0u64; e];
        let mut rest = index;
        for d in digits.iter_mut().rev() {
            *d = rest % q;
            rest /= q;
        }
        digits
    };

    let best = (0..required as u64)
        .into_par_iter()
        .filter_map(|index| {
            let digits = decode(index);
            if digits[1] % p == 0 {
                return None;
            }
            let change = UniformizerChange {
                cs: digits.iter().map(|&d| BigInt::from(d)).collect(),
            };
            let image = modular.substitute(&change).ok()?;
            let inv = image.invariants();
            Some((
                (inv.tau.sort_key(), inv.iota.unwrap_or(usize::MAX), index),
                inv,
                change,
                image,
            ))
        })
        .min_by(|a, b| a.0.cmp(&b.0));
    let candidates = (0..required as u64)
        .filter(|&i| decode(i)[1] % p != 0)
        .count() as u64;

    let (_, inv, witness, image) = best.expect("c_0 = 0, c_1 = 1 is always a candidate");
    match inv.tau.finite() {
        Some(t) if t <= ceiling => {}
        _ => {
            return Err(EisensteinError::CeilingViolated {
                ceiling,
                found: inv.tau,
            })
        }
    }
    let found = inv.tau.finite().expect("checked above");
    Ok(TauSearch {
        tau: inv.tau,
        iota: inv.iota,
        witness,
        witness_poly: image.to_string(),
        ceiling,
        candidates,
        exact: found == 1 || lower_bound == Some(found),
    })
}
