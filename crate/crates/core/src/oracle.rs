//! Exhaustive searches at small `(p, e, n)` that check the structural
//! statements about `E sigma(C)` and Breuil modules directly.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::bounds::{compute_s, prop3_height_bounds, BoundsError, Variant};
use crate::breuil::{
    example3_identity, pure_lattice_data, required_t, verify_inclusion_p_s, BreuilError,
    BreuilModule, FractionalElement,
};
use crate::eisenstein::{EisensteinError, EisensteinPolynomial, Tau};
use crate::matrix::{random_series, SeriesMatrix};
use crate::ring::{ord_p_residue, Precision, RingError, TruncatedSeries};

/// Default cap on candidate evaluations per search.
pub const DEFAULT_BUDGET: u64 = 100_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error(transparent)]
    Ring(#[from] RingError),
    #[error(transparent)]
    Eisenstein(#[from] EisensteinError),
    #[error(transparent)]
    Breuil(#[from] BreuilError),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error("search space of {required} candidates exceeds the budget of {budget}")]
    BudgetExceeded { required: u128, budget: u64 },
    #[error("invalid search configuration: {0}")]
    InvalidConfig(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, OracleError>;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Tally {
    pub passed: u64,
    pub failed: u64,
}

impl Tally {
    fn record(&mut self, ok: bool) {
        if ok {
            self.passed += 1;
        } else {
            self.failed += 1;
        }
    }

    fn merge(&mut self, other: &Tally) {
        self.passed += other.passed;
        self.failed += other.failed;
    }
}

type Tallies = BTreeMap<String, Tally>;

fn merge_tallies(into: &mut Tallies, from: &Tallies) {
    for (k, v) in from {
        into.entry(k.clone()).or_default().merge(v);
    }
}

fn total_failures(t: &Tallies) -> u64 {
    t.values().map(|v| v.failed).sum()
}

fn series_string(s: &TruncatedSeries) -> String {
    s.to_string()
}

/// A candidate `C` with the largest `t` it reaches and the named checks it was put through.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WitnessReport {
    pub c: String,
    /// Coefficients of `C`, constant term first, as decimal residues.
    pub coeffs: Vec<String>,
    pub t_achieved: usize,
    pub checks: BTreeMap<String, bool>,
}

impl WitnessReport {
    pub fn passed(&self) -> bool {
        self.checks.values().all(|&ok| ok)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SearchConfig {
    pub eisenstein: EisensteinPolynomial,
    pub n: u32,
    /// Membership in `(u^t, p^n)` is decided for `t <= t_max`.
    pub t_max: usize,
    /// Candidates have degree at most this; monomials with `p i >= t_max` never matter.
    pub degree_bound: usize,
    /// Only monic `C` with all lower coefficients divisible by `p`.
    pub require_weierstrass: bool,
    /// Only `C` whose constant term is a unit.
    pub require_unit_constant: bool,
    pub budget: u64,
}

impl SearchConfig {
    /// `t_max = n e + 1` and the largest degree that can still matter.
    pub fn new(eisenstein: EisensteinPolynomial, n: u32) -> Self {
        let t_max = n as usize * eisenstein.degree() + 1;
        let degree_bound = (t_max - 1) / eisenstein.p() as usize;
        Self {
            eisenstein,
            n,
            t_max,
            degree_bound,
            require_weierstrass: false,
            require_unit_constant: false,
            budget: DEFAULT_BUDGET,
        }
    }

    pub fn p(&self) -> u64 {
        self.eisenstein.p()
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(OracleError::InvalidConfig("n must be at least 1".into()));
        }
        if self.t_max == 0 {
            return Err(OracleError::InvalidConfig(
                "t_max must be at least 1".into(),
            ));
        }
        if self.degree_bound * self.p() as usize >= self.t_max {
            return Err(OracleError::InvalidConfig(format!(
                "degree bound {} has p * d >= t_max = {}",
                self.degree_bound, self.t_max
            )));
        }
        Ok(())
    }

    /// Candidate spaces as lists of allowed values per coefficient, plus the closed-form total.
    fn spaces(&self) -> Result<(Vec<Space>, u128)> {
        let p = self.p();
        let q = p
            .checked_pow(self.n)
            .ok_or_else(|| OracleError::InvalidConfig("p^n does not fit in 64 bits".into()))?;
        let all: Vec<u64> = (0..q).collect();
        let multiples: Vec<u64> = (0..q).step_by(p as usize).collect();
        let units: Vec<u64> = (0..q).filter(|c| c % p != 0).collect();
        let nonzero: Vec<u64> = (1..q).collect();
        let constant = if self.require_unit_constant {
            units
        } else {
            nonzero
        };
        let mut spaces = Vec::new();
        let mut expected: u128 = 0;
        if self.require_weierstrass {
            for d in 0..=self.degree_bound {
                let mut choices = Vec::new();
                if d == 0 {
                    choices.push(vec![1]);
                } else {
                    let c0: Vec<u64> = multiples
                        .iter()
                        .copied()
                        .filter(|c| constant.contains(c))
                        .collect();
                    choices.push(c0);
                    for _ in 1..d {
                        choices.push(multiples.clone());
                    }
                    choices.push(vec![1]);
                }
                let space = Space { choices };
                expected += space.size();
                spaces.push(space);
            }
        } else {
            let mut choices = vec![constant];
            for _ in 0..self.degree_bound {
                choices.push(all.clone());
            }
            let space = Space { choices };
            expected += space.size();
            spaces.push(space);
        }
        Ok((spaces, expected))
    }
}

/// Mixed-radix enumeration; index order is lexicographic in `(c_0, c_1, ...)`.
#[derive(Clone, Debug)]
struct Space {
    choices: Vec<Vec<u64>>,
}

impl Space {
    fn size(&self) -> u128 {
        self.choices
            .iter()
            .try_fold(1u128, |acc, c| acc.checked_mul(c.len() as u128))
            .unwrap_or(u128::MAX)
    }

    fn decode(&self, mut index: u64) -> Vec<u64> {
        let mut out = vec![0; self.choices.len()];
        for (slot, c) in out.iter_mut().zip(&self.choices).rev() {
            let r = c.len() as u64;
            *slot = c[(index % r) as usize];
            index /= r;
        }
        out
    }
}

fn sigma_of(prec: &Precision, coeffs: &[u64]) -> TruncatedSeries {
    TruncatedSeries::from_u64s(prec, coeffs).frobenius()
}

/// Largest `t <= T` with `x in (u^t, p^n)`.
fn reach(x: &TruncatedSeries) -> usize {
    x.ord_u().lower_bound() as usize
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MaxTReport {
    pub p: u64,
    pub n: u32,
    pub e: usize,
    pub poly: String,
    pub m: u32,
    pub tau: Tau,
    pub iota: Option<usize>,
    pub t_max: usize,
    pub degree_bound: usize,
    /// `min(tau e + iota, n e)`, or `n e` when `tau` is infinite.
    pub bound: usize,
    pub candidates_expected: u64,
    pub candidates_visited: u64,
    pub t_star: usize,
    pub witness_count: u64,
    /// The lexicographically first witnesses at `t_star` (at most `WITNESS_CAP`).
    pub witnesses: Vec<WitnessReport>,
    /// Per-assertion counts over every candidate (checked at its own largest `t`)
    /// and over the reported witnesses.
    pub tallies: BTreeMap<String, Tally>,
    pub violations: u64,
}

impl MaxTReport {
    pub fn passed(&self) -> bool {
        self.violations == 0 && self.candidates_visited == self.candidates_expected
    }
}

pub const WITNESS_CAP: usize = 256;

struct Acc {
    best: usize,
    witnesses: Vec<(usize, u64)>,
    witness_count: u64,
    visited: u64,
    tallies: Tallies,
}

impl Acc {
    fn empty() -> Self {
        Self {
            best: 0,
            witnesses: Vec::new(),
            witness_count: 0,
            visited: 0,
            tallies: Tallies::new(),
        }
    }

    fn offer(&mut self, t: usize, key: (usize, u64)) {
        if t > self.best {
            self.best = t;
            self.witnesses.clear();
            self.witness_count = 0;
        }
        if t == self.best {
            self.witness_count += 1;
            if self.witnesses.len() < WITNESS_CAP {
                self.witnesses.push(key);
            }
        }
    }

    fn merge(mut self, other: Self) -> Self {
        self.visited += other.visited;
        merge_tallies(&mut self.tallies, &other.tallies);
        match self.best.cmp(&other.best) {
            std::cmp::Ordering::Less => {
                self.best = other.best;
                self.witnesses = other.witnesses;
                self.witness_count = other.witness_count;
            }
            std::cmp::Ordering::Equal => {
                self.witnesses.extend(other.witnesses);
                self.witnesses.sort_unstable();
                self.witnesses.truncate(WITNESS_CAP);
                self.witness_count += other.witness_count;
            }
            std::cmp::Ordering::Greater => {}
        }
        self
    }
}

/// The conclusions of the main inequality for a single `C` at a given `t`.
fn max_t_checks(
    cfg: &SearchConfig,
    inv_tau: Tau,
    bound: usize,
    sigma: &TruncatedSeries,
    t: usize,
) -> Vec<(&'static str, bool)> {
    let e = cfg.eisenstein.degree();
    let m = cfg.eisenstein.m();
    let mut out = vec![
        ("t_le_ne", t <= cfg.n as usize * e),
        ("t_le_bound", t <= bound),
    ];
    let kill = if m == 0 {
        Some(1)
    } else {
        inv_tau.finite().map(|tau| tau + 1)
    };
    if let Some(k) = kill {
        let killed = sigma.mul_p_pow(k).in_ideal(t, cfg.n).expect("t <= T");
        out.push(("p_power_kill", killed));
    }
    out
}

/// Maximal `t` with `E sigma(C) in (u^t, p^n)` over all candidates `C`, with the
/// conclusions of the main inequality checked for every candidate.
pub fn prop2_max_t(cfg: &SearchConfig) -> Result<MaxTReport> {
    cfg.validate()?;
    let (spaces, expected) = cfg.spaces()?;
    if expected > cfg.budget as u128 {
        return Err(OracleError::BudgetExceeded {
            required: expected,
            budget: cfg.budget,
        });
    }
    let p = cfg.p();
    let e = cfg.eisenstein.degree();
    let inv = cfg.eisenstein.invariants();
    let ne = cfg.n as usize * e;
    let bound = match inv.tau.finite() {
        Some(tau) => (tau as usize * e + inv.iota.expect("finite tau has iota")).min(ne),
        None => ne,
    };
    let prec = Precision::new(p, cfg.n, cfg.t_max)?;
    let e_series = cfg.eisenstein.to_series(&prec);

    let mut acc = Acc::empty();
    for (si, space) in spaces.iter().enumerate() {
        let size = space.size() as u64;
        let part = (0..size)
            .into_par_iter()
            .fold(Acc::empty, |mut acc, index| {
                let c = space.decode(index);
                if c[0] == 0 {
                    return acc;
                }
                acc.visited += 1;
                let sigma = sigma_of(&prec, &c);
                let t = reach(&(&e_series * &sigma));
                if t >= 1 {
                    for (name, ok) in max_t_checks(cfg, inv.tau, bound, &sigma, t) {
                        acc.tallies.entry(name.to_string()).or_default().record(ok);
                    }
                }
                acc.offer(t, (si, index));
                acc
            })
            .reduce(Acc::empty, Acc::merge);
        acc = acc.merge(part);
    }

    let mut witnesses = Vec::new();
    let mut witness_tallies = Tallies::new();
    let mut keys = acc.witnesses.clone();
    keys.sort_by(|a, b| spaces[a.0].decode(a.1).cmp(&spaces[b.0].decode(b.1)));
    for (si, index) in keys {
        let coeffs = spaces[si].decode(index);
        let report = witness_report(cfg, inv.tau, bound, &prec, &e_series, &coeffs, acc.best)?;
        for (k, &ok) in &report.checks {
            witness_tallies
                .entry(format!("witness_{k}"))
                .or_default()
                .record(ok);
        }
        witnesses.push(report);
    }
    let mut tallies = acc.tallies;
    merge_tallies(&mut tallies, &witness_tallies);
    let mut counted = Tally::default();
    counted.record(acc.visited as u128 == expected);
    tallies.insert("candidate_count".into(), counted);
    let violations = total_failures(&tallies);
    Ok(MaxTReport {
        p,
        n: cfg.n,
        e,
        poly: cfg.eisenstein.to_string(),
        m: inv.m,
        tau: inv.tau,
        iota: inv.iota,
        t_max: cfg.t_max,
        degree_bound: cfg.degree_bound,
        bound,
        candidates_expected: expected as u64,
        candidates_visited: acc.visited,
        t_star: acc.best,
        witness_count: acc.witness_count,
        witnesses,
        tallies,
        violations,
    })
}

fn witness_report(
    cfg: &SearchConfig,
    tau: Tau,
    bound: usize,
    prec: &Precision,
    e_series: &TruncatedSeries,
    coeffs: &[u64],
    t: usize,
) -> Result<WitnessReport> {
    let c = TruncatedSeries::from_u64s(prec, coeffs);
    let sigma = c.frobenius();
    let mut checks = BTreeMap::new();
    checks.insert(
        "membership".to_string(),
        (e_series * &sigma).in_ideal(t, cfg.n)?,
    );
    if t >= 1 {
        for (name, ok) in max_t_checks(cfg, tau, bound, &sigma, t) {
            checks.insert(name.to_string(), ok);
        }
    }
    if cfg.eisenstein.m() >= 1 && t >= 1 {
        let residues: Vec<BigUint> = coeffs.iter().map(|&x| BigUint::from(x)).collect();
        match check_reduced_candidate(&cfg.eisenstein, cfg.n, &residues, t) {
            Ok(report) => {
                checks.insert("reduction_hypotheses".into(), true);
                checks.extend(report.checks);
            }
            Err(OracleError::Precondition(_)) => {
                checks.insert("reduction_hypotheses".into(), false);
            }
            Err(other) => return Err(other),
        }
    }
    Ok(WitnessReport {
        c: series_string(&c),
        coeffs: coeffs.iter().map(ToString::to_string).collect(),
        t_achieved: t,
        checks,
    })
}

/// The valuation pattern forced on a Weierstrass `C` of degree `(n-1)e/p`:
/// `ord_p(c_{ie/p}) = n-i-1` and `ord_p(c_j) >= n-i` for `j < ie/p`.
pub fn forced_valuations_hold(p: u64, n: u32, e: usize, coeffs: &[BigUint]) -> bool {
    let step = e / p as usize;
    let ord = |j: usize| -> u32 {
        match coeffs.get(j) {
            Some(c) if !c.is_zero() => ord_p_residue(c, p, n),
            _ => n,
        }
    };
    let d = coeffs.len().saturating_sub(1);
    (0..n).all(|i| {
        let idx = i as usize * step;
        if idx > d {
            return true;
        }
        ord(idx) == n - i - 1 && (0..idx).all(|j| ord(j) >= n - i)
    })
}

/// Checks the conclusions for a Weierstrass polynomial `C` (coefficients
/// constant first, leading 1) with `E_0 sigma(C) in (u^t, p^n)` and `p deg C < t`.
pub fn lemma4_check(
    eisenstein: &EisensteinPolynomial,
    n: u32,
    coeffs: &[BigUint],
    t: usize,
) -> Result<WitnessReport> {
    let p = eisenstein.p();
    let e = eisenstein.degree();
    if eisenstein.m() == 0 {
        return Err(OracleError::Precondition(format!(
            "p = {p} does not divide e = {e}"
        )));
    }
    let d = coeffs
        .len()
        .checked_sub(1)
        .ok_or_else(|| OracleError::Precondition("empty C".into()))?;
    let prec = Precision::new(p, n, t.max(e + p as usize * d + 1))?;
    let c = TruncatedSeries::from_residues(&prec, coeffs.to_vec());
    let pb = BigUint::from(p);
    let weierstrass = coeffs[d].is_one() && coeffs[..d].iter().all(|x| (x % &pb).is_zero());
    if !weierstrass {
        return Err(OracleError::Precondition(format!(
            "{c} is not a Weierstrass polynomial"
        )));
    }
    if c.coeff(0).is_zero() {
        return Err(OracleError::Precondition(
            "constant term is divisible by p^n".into(),
        ));
    }
    if p as usize * d >= t {
        return Err(OracleError::Precondition(format!(
            "p * deg C = {} >= t = {t}",
            p as usize * d
        )));
    }
    let e0 = TruncatedSeries::from_ints(&prec, &eisenstein.split().e0);
    if !(&e0 * &c.frobenius()).in_ideal(t, n)? {
        return Err(OracleError::Precondition(format!(
            "E_0 sigma(C) is not in (u^{t}, p^{n})"
        )));
    }
    let mut checks = BTreeMap::new();
    checks.insert(
        "reduced_degree".to_string(),
        d == (n as usize - 1) * e / p as usize,
    );
    checks.insert(
        "forced_valuations".to_string(),
        forced_valuations_hold(p, n, e, coeffs),
    );
    checks.insert("reduced_t_le_ne".to_string(), t <= n as usize * e);
    Ok(WitnessReport {
        c: series_string(&c),
        coeffs: coeffs.iter().map(ToString::to_string).collect(),
        t_achieved: t,
        checks,
    })
}

/// Reduces an arbitrary solution `C` of `E sigma(C) in (u^t, p^n)` to the
/// Weierstrass situation (drop irrelevant monomials, divide out the content,
/// keep the polynomial part) and runs [`lemma4_check`] on the result.
pub fn check_reduced_candidate(
    eisenstein: &EisensteinPolynomial,
    n: u32,
    coeffs: &[BigUint],
    t: usize,
) -> Result<WitnessReport> {
    let p = eisenstein.p() as usize;
    let kept: Vec<BigUint> = coeffs
        .iter()
        .enumerate()
        .map(|(i, c)| {
            if p * i < t {
                c.clone()
            } else {
                BigUint::zero()
            }
        })
        .collect();
    let deg = kept.len();
    let big_t = (n as usize + 2) * (deg + 1) + t + 1;
    let prec = Precision::new(eisenstein.p(), n, big_t)?;
    let c = TruncatedSeries::from_residues(&prec, kept);
    let content = c
        .content_p()
        .finite()
        .ok_or_else(|| OracleError::Precondition("C vanishes modulo p^n".into()))?;
    let n_eff = n - content;
    let strip = prec.p_pow(content);
    let stripped: Vec<BigUint> = c.coeffs().iter().map(|x| x / &strip).collect();
    let reduced = TruncatedSeries::from_residues(&prec.with_n(n_eff)?, stripped);
    let w = reduced.weierstrass_prep()?;
    let wcoeffs = w.wpoly.with_n(n_eff)?.coeffs()[..=w.degree].to_vec();
    let mut report = lemma4_check(eisenstein, n_eff, &wcoeffs, t)?;
    report.checks.insert(
        "reduced_t_le_n_eff_e".into(),
        t <= n_eff as usize * eisenstein.degree(),
    );
    Ok(report)
}

/// Weierstrass polynomials of degree `(n-1)e/p` with the forced valuation pattern.
pub fn forced_family(p: u64, n: u32, e: usize) -> Result<Vec<Vec<BigUint>>> {
    if !e.is_multiple_of(p as usize) {
        return Err(OracleError::Precondition(format!(
            "p = {p} does not divide e = {e}"
        )));
    }
    let d = (n as usize - 1) * e / p as usize;
    let q = BigUint::from(p).pow(n);
    let mults: Vec<BigUint> = {
        let step = BigUint::from(p);
        let mut v = Vec::new();
        let mut x = BigUint::zero();
        while x < q {
            v.push(x.clone());
            x += &step;
        }
        v
    };
    let mut out = Vec::new();
    let total = mults.len().checked_pow(d as u32).unwrap_or(usize::MAX);
    if total as u128 > DEFAULT_BUDGET as u128 {
        return Err(OracleError::BudgetExceeded {
            required: total as u128,
            budget: DEFAULT_BUDGET,
        });
    }
    for index in 0..total {
        let mut rest = index;
        let mut coeffs = vec![BigUint::zero(); d + 1];
        for slot in coeffs[..d].iter_mut().rev() {
            *slot = mults[rest % mults.len()].clone();
            rest /= mults.len();
        }
        coeffs[d] = BigUint::one();
        if !coeffs[0].is_zero() && forced_valuations_hold(p, n, e, &coeffs) {
            out.push(coeffs);
        }
    }
    Ok(out)
}

/// If `E_2 sigma(C) in (u^t, p^n)` then `deg E_2 >= t`; returns whether the implication holds.
pub fn cor5_check(
    p: u64,
    n: u32,
    e: usize,
    e2: &[BigUint],
    c: &[BigUint],
    t: usize,
) -> Result<bool> {
    let l = e2
        .len()
        .checked_sub(1)
        .ok_or_else(|| OracleError::Precondition("empty E_2".into()))?;
    if l >= e {
        return Err(OracleError::Precondition(format!(
            "deg E_2 = {l} >= e = {e}"
        )));
    }
    let pb = BigUint::from(p);
    if !e2[l].is_one() || e2[..l].iter().any(|b| !(b % &pb).is_zero()) {
        return Err(OracleError::Precondition(
            "E_2 is not a Weierstrass polynomial".into(),
        ));
    }
    if !forced_valuations_hold(p, n, e, c) || c.last().is_none_or(|x| !x.is_one()) {
        return Err(OracleError::Precondition(
            "C is not in the forced family".into(),
        ));
    }
    let d = c.len() - 1;
    let prec = Precision::new(p, n, t.max(l + p as usize * d + 1))?;
    let e2s = TruncatedSeries::from_residues(&prec, e2.to_vec());
    let cs = TruncatedSeries::from_residues(&prec, c.to_vec());
    let member = (&e2s * &cs.frobenius()).in_ideal(t, n)?;
    Ok(!member || l >= t)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LowDegreeFactorCounterexample {
    pub c: Vec<String>,
    pub e2: Vec<String>,
    pub t: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LowDegreeFactorReport {
    pub p: u64,
    pub n: u32,
    pub e: usize,
    pub family_size: usize,
    pub e2_count: usize,
    pub pairs_checked: u64,
    pub counterexamples: Vec<LowDegreeFactorCounterexample>,
}

impl LowDegreeFactorReport {
    pub fn passed(&self) -> bool {
        self.counterexamples.is_empty()
    }
}

/// Every Weierstrass `E_2` of degree `< e` against every member of the forced family,
/// each at the largest `t` it reaches.
pub fn low_degree_factor_scan(
    p: u64,
    n: u32,
    e: usize,
    budget: u64,
) -> Result<LowDegreeFactorReport> {
    let family = forced_family(p, n, e)?;
    let q = BigUint::from(p).pow(n);
    let mults: Vec<BigUint> = (0..)
        .map(|k: u64| BigUint::from(k * p))
        .take_while(|x| x < &q)
        .collect();
    let mut e2s: Vec<Vec<BigUint>> = Vec::new();
    for l in 0..e {
        let count = mults.len().checked_pow(l as u32).unwrap_or(usize::MAX);
        if (e2s.len() as u128 + count as u128) * family.len() as u128 > budget as u128 {
            return Err(OracleError::BudgetExceeded {
                required: (e2s.len() as u128 + count as u128) * family.len() as u128,
                budget,
            });
        }
        for index in 0..count {
            let mut rest = index;
            let mut b = vec![BigUint::zero(); l + 1];
            for slot in b[..l].iter_mut().rev() {
                *slot = mults[rest % mults.len()].clone();
                rest /= mults.len();
            }
            b[l] = BigUint::one();
            e2s.push(b);
        }
    }
    let results: Vec<Result<Option<LowDegreeFactorCounterexample>>> = family
        .par_iter()
        .flat_map_iter(|c| e2s.iter().map(move |b| (c, b)))
        .map(|(c, b)| {
            let d = c.len() - 1;
            let l = b.len() - 1;
            let prec = Precision::new(p, n, l + p as usize * d + 2)?;
            let prod = &TruncatedSeries::from_residues(&prec, b.clone())
                * &TruncatedSeries::from_residues(&prec, c.clone()).frobenius();
            let t = reach(&prod);
            Ok(
                (!cor5_check(p, n, e, b, c, t)?).then(|| LowDegreeFactorCounterexample {
                    c: c.iter().map(ToString::to_string).collect(),
                    e2: b.iter().map(ToString::to_string).collect(),
                    t,
                }),
            )
        })
        .collect();
    let mut counterexamples = Vec::new();
    for r in results {
        if let Some(cx) = r? {
            counterexamples.push(cx);
        }
    }
    Ok(LowDegreeFactorReport {
        p,
        n,
        e,
        family_size: family.len(),
        e2_count: e2s.len(),
        pairs_checked: (family.len() * e2s.len()) as u64,
        counterexamples,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DescentRow {
    /// `phi(1) = u^a`.
    pub a: usize,
    /// Largest `j` with `u^{-j} M` stable under Frobenius.
    pub j_max: usize,
    pub closed_form: usize,
    /// Least `s` with `p^s N subset M` for `N = u^{-j_max} M`.
    pub s_required: u32,
    /// `p^{j_max} N subset M`.
    pub lemma2_holds: bool,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DescentTable {
    pub p: u64,
    pub e: usize,
    pub poly: String,
    /// Uniformizer with finite `tau` used for the bound.
    pub uniformizer_poly: String,
    pub tau: Tau,
    pub iota: Option<usize>,
    pub t0: u64,
    pub s_v: u64,
    pub rows: Vec<DescentRow>,
}

impl DescentTable {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.ok)
    }
}

/// Rank-one modules over `F_p[u]` with `phi(1) = u^a`, `0 <= a <= e`: the
/// largest stable pole order and the `p`-power needed to descend from it.
pub fn descent_minimal_s(eisenstein: &EisensteinPolynomial) -> Result<DescentTable> {
    let p = eisenstein.p();
    let e = eisenstein.degree();
    let (uniformizer, inv) = eisenstein.finite_tau_uniformizer()?;
    let iota = inv.iota.expect("finite tau") as u64;
    let trace = compute_s(p, e as u64, inv.tau, iota, Variant::Standard)?;
    let t0 = trace.pairs[0].0;
    let mut rows = Vec::new();
    for a in 0..=e {
        let j_bound = a + 2;
        let prec = Precision::new(p, 1, required_t(p, j_bound, e) + 1)?;
        let phi = SeriesMatrix::diagonal(&prec, vec![TruncatedSeries::monomial(&prec, 1u32, a)]);
        let module = BreuilModule::from_phi(&prec, eisenstein, phi)?;
        let mut j_max = 0;
        for j in 1..=j_bound {
            let x = FractionalElement::basis(&prec, 1, 0, j)?;
            if module.apply_phi(&x)?.pole() <= j {
                j_max = j;
            } else {
                break;
            }
        }
        let gens = vec![FractionalElement::basis(&prec, 1, 0, j_max)?];
        let s_required = (0..=1)
            .find(|&s| verify_inclusion_p_s(&gens, s))
            .unwrap_or(u32::MAX);
        let lemma2_holds = verify_inclusion_p_s(&gens, j_max as u32);
        let closed_form = a / (p as usize - 1);
        let ok = j_max == closed_form
            && j_max as u64 <= t0
            && u64::from(s_required) <= trace.s
            && s_required == u32::from(j_max >= 1)
            && lemma2_holds;
        rows.push(DescentRow {
            a,
            j_max,
            closed_form,
            s_required,
            lemma2_holds,
            ok,
        });
    }
    Ok(DescentTable {
        p,
        e,
        poly: eisenstein.to_string(),
        uniformizer_poly: uniformizer.to_string(),
        tau: inv.tau,
        iota: inv.iota,
        t0,
        s_v: trace.s,
        rows,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PureLatticeRow {
    pub p: u64,
    pub n: u32,
    pub identity: bool,
    /// The lattice `N` is stable under Frobenius.
    pub stable: bool,
    /// `p^n N subset M`.
    pub kills_at_n: bool,
    /// `p^{n-1} N subset M` (expected to fail).
    pub kills_at_n_minus_1: bool,
}

impl PureLatticeRow {
    pub fn passed(&self) -> bool {
        self.identity && self.stable && self.kills_at_n && !self.kills_at_n_minus_1
    }
}

/// The lattice `N = M + (C_n / u^n) M` over `E = u^p - p`: stability, and
/// that exactly `p^n` (not `p^{n-1}`) pushes it into `M`.
pub fn pure_lattice_optimality(p: u64, n: u32) -> Result<PureLatticeRow> {
    let identity = example3_identity(p, n)?.holds();
    let (module, gens) = pure_lattice_data(p, n)?;
    let image = module.apply_phi(&gens[1])?;
    Ok(PureLatticeRow {
        p,
        n,
        identity,
        stable: image.pole() <= gens[1].pole() && image.is_integral(),
        kills_at_n: verify_inclusion_p_s(&gens, n),
        kills_at_n_minus_1: verify_inclusion_p_s(&gens, n - 1),
    })
}

/// Seeded Eisenstein polynomial of degree `e` with coefficients `p j`, `0 <= j < p^n`.
pub fn random_eisenstein(p: u64, e: usize, n: u32, rng: &mut impl Rng) -> EisensteinPolynomial {
    let q = p.pow(n);
    let mut coeffs: Vec<BigInt> = (0..e)
        .map(|_| BigInt::from(p * rng.gen_range(0..q)))
        .collect();
    let unit = loop {
        let j = rng.gen_range(1..q.max(2));
        if j % p != 0 {
            break j;
        }
    };
    coeffs[0] = BigInt::from(p * unit);
    EisensteinPolynomial::new(p, coeffs).expect("constructed to be Eisenstein")
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FractionalElementReport {
    pub p: u64,
    pub n: u32,
    pub modules: u64,
    pub samples: u64,
    /// Samples whose image under Frobenius stays in `u^{-t} M`.
    pub accepted: u64,
    pub violations: u64,
}

impl FractionalElementReport {
    pub fn passed(&self) -> bool {
        self.violations == 0 && self.accepted > 0
    }
}

const FRACTIONAL_T_MAX: usize = 3;

/// For seeded modules and random `x` in `u^{-t} M` with `phi(x)` in `u^{-t} M`,
/// checks `E sigma(alpha_i) in (u^{t(p-1)}, p^n)` for every coordinate.
pub fn fractional_element_suite(
    p: u64,
    n: u32,
    seeds: std::ops::Range<u64>,
    samples_per_module: usize,
) -> Result<FractionalElementReport> {
    let reports: Vec<Result<(u64, u64, u64)>> = seeds
        .clone()
        .into_par_iter()
        .map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let e = rng.gen_range(1..=3);
            let eis = random_eisenstein(p, e, n, &mut rng);
            let h = rng.gen_range(1..=3);
            let d = rng.gen_range(0..=h);
            let prec = Precision::new(p, n, required_t(p, FRACTIONAL_T_MAX, e) + 1)?;
            let module = BreuilModule::build_bt_module(&prec, &eis, d, h, rng.gen())?;
            let e_series = eis.to_series(&prec);
            let (mut samples, mut accepted, mut violations) = (0, 0, 0);
            for _ in 0..samples_per_module {
                samples += 1;
                let t = rng.gen_range(1..=FRACTIONAL_T_MAX);
                let alphas = (0..h)
                    .map(|_| {
                        let k = rng.gen_range(0..=t);
                        let k2 = rng.gen_range(0..=t);
                        let a = random_series(&prec, &mut rng).shift_up(k);
                        let b = random_series(&prec, &mut rng).shift_up(k2).mul_p_pow(1);
                        match rng.gen_range(0..4) {
                            0 => b,
                            1 => a,
                            _ => &a + &b,
                        }
                    })
                    .collect();
                let x = FractionalElement::new(t, alphas)?;
                if x.pole() == 0 {
                    continue;
                }
                let y = module.apply_phi(&x)?;
                if y.pole() > x.pole() {
                    continue;
                }
                accepted += 1;
                let need = x.pole() * (p as usize - 1);
                let ok = x.alphas().iter().all(|a| {
                    (&e_series * &a.frobenius())
                        .in_ideal(need, n)
                        .expect("need < T")
                });
                if !ok {
                    violations += 1;
                }
            }
            Ok((samples, accepted, violations))
        })
        .collect();
    let mut out = FractionalElementReport {
        p,
        n,
        modules: seeds.end - seeds.start,
        samples: 0,
        accepted: 0,
        violations: 0,
    };
    for r in reports {
        let (s, a, v) = r?;
        out.samples += s;
        out.accepted += a;
        out.violations += v;
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HeightsReport {
    pub modules: u64,
    pub extensions: u64,
    pub tallies: BTreeMap<String, Tally>,
    pub violations: u64,
}

impl HeightsReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Generator counts on seeded modules and on block-triangular extensions.
pub fn heights_suite(seeds: std::ops::Range<u64>) -> Result<HeightsReport> {
    let mut tallies = Tallies::new();
    let mut modules = 0;
    let mut extensions = 0;
    for seed in seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = if rng.gen_bool(0.5) { 2 } else { 3 };
        let n = rng.gen_range(1..=2);
        let e = rng.gen_range(1..=3);
        let eis = random_eisenstein(p, e, n, &mut rng);
        let prec = Precision::new(p, n, 2 * e + 2)?;
        let build = |rng: &mut ChaCha8Rng| -> Result<(BreuilModule, usize)> {
            let h = rng.gen_range(1..=3);
            let d = rng.gen_range(0..=h);
            Ok((
                BreuilModule::build_bt_module(&prec, &eis, d, h, rng.gen())?,
                h - d,
            ))
        };
        let (a, a_etale) = build(&mut rng)?;
        let (b, b_etale) = build(&mut rng)?;
        let ext = BreuilModule::extension(&a, &b, rng.gen())?;
        modules += 2;
        extensions += 1;
        let mut rec =
            |name: &str, ok: bool| tallies.entry(name.to_string()).or_default().record(ok);
        for m in [&a, &b, &ext] {
            rec("h3_le_order", m.h3() as u64 <= m.order());
        }
        rec("h3_subadditive", ext.h3() <= a.h3() + b.h3());
        if n == 1 {
            rec(
                "extension_is_breuil",
                BreuilModule::from_phi(&prec, &eis, ext.phi().clone()).is_ok(),
            );
            for (m, etale) in [(&a, Some(a_etale)), (&b, Some(b_etale)), (&ext, None)] {
                let h4 = m.h4()?;
                rec("h3_plus_h4_le_2h3", m.h3() + h4 <= 2 * m.h3());
                if let Some(etale) = etale {
                    rec(
                        "h4_matches_residue_rank",
                        h4 == etale && m.phi().residue_rank() == etale,
                    );
                }
            }
        }
    }
    for s in 0..=20u64 {
        for r in 0..=20u64 {
            let (h3, all) = prop3_height_bounds(s, r);
            let by_sum = (0..r).fold((0, 0), |(x, y), _| (x + 2 * s + 1, y + 4 * s + 2));
            tallies
                .entry("prop3_arithmetic".into())
                .or_default()
                .record((h3, all) == by_sum && all == 2 * h3);
        }
    }
    let violations = total_failures(&tallies);
    Ok(HeightsReport {
        modules,
        extensions,
        tallies,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eis(p: u64, dense: &[i64]) -> EisensteinPolynomial {
        let d: Vec<BigInt> = dense.iter().map(|&x| BigInt::from(x)).collect();
        EisensteinPolynomial::from_dense(p, &d).unwrap()
    }

    fn big(v: &[u64]) -> Vec<BigUint> {
        v.iter().map(|&x| BigUint::from(x)).collect()
    }

    #[test]
    fn max_t_examples() {
        let r = prop2_max_t(&SearchConfig::new(eis(2, &[2, 2, 1]), 1)).unwrap();
        assert_eq!(r.t_star, 2);
        assert_eq!(r.witnesses[0].c, "1");
        assert!(r.passed(), "{r:?}");

        let r = prop2_max_t(&SearchConfig::new(eis(2, &[-2, 0, 1]), 2)).unwrap();
        assert_eq!(r.t_star, 4);
        assert_eq!(r.witnesses[0].c, "u+2");
        assert_eq!(r.candidates_visited, 3 * 16);
        assert!(r.passed(), "{r:?}");

        let r = prop2_max_t(&SearchConfig::new(eis(2, &[-2, 0, 1]), 1)).unwrap();
        assert_eq!((r.t_star, r.witnesses[0].c.as_str()), (2, "1"));
        assert!(r.passed());
    }

    #[test]
    fn max_t_budget() {
        let mut cfg = SearchConfig::new(eis(2, &[-2, 0, 1]), 2);
        cfg.budget = 10;
        assert_eq!(
            prop2_max_t(&cfg),
            Err(OracleError::BudgetExceeded {
                required: 48,
                budget: 10
            })
        );
    }

    #[test]
    fn max_t_weierstrass_space() {
        let mut cfg = SearchConfig::new(eis(2, &[-2, 0, 1]), 2);
        cfg.require_weierstrass = true;
        let r = prop2_max_t(&cfg).unwrap();
        // d = 0: {1}; d = 1: c0 = 2; d = 2: c0 = 2, c1 in {0, 2}.
        assert_eq!(r.candidates_expected, 4);
        assert_eq!(r.candidates_visited, 4);
        assert_eq!(r.t_star, 4);
        assert!(r.passed());
    }

    #[test]
    fn reduction_examples() {
        let e = eis(2, &[-2, 0, 1]);
        let r = lemma4_check(&e, 2, &big(&[2, 1]), 4).unwrap();
        assert!(r.passed(), "{r:?}");
        let r = lemma4_check(&e, 1, &big(&[1]), 2).unwrap();
        assert!(r.passed());
        assert!(matches!(
            lemma4_check(&e, 2, &big(&[2, 1]), 5),
            Err(OracleError::Precondition(_))
        ));
        assert!(matches!(
            lemma4_check(&eis(3, &[3, 0, 1]), 1, &big(&[1]), 1),
            Err(OracleError::Precondition(_))
        ));
    }

    #[test]
    fn low_degree_factor_examples() {
        let one = big(&[1]);
        assert!(cor5_check(2, 1, 2, &big(&[0, 1]), &one, 1).unwrap());
        assert!(cor5_check(2, 1, 2, &one, &one, 0).unwrap());
        let r = low_degree_factor_scan(2, 2, 2, DEFAULT_BUDGET).unwrap();
        assert_eq!((r.family_size, r.e2_count), (1, 3));
        assert!(r.passed());
        let r = low_degree_factor_scan(2, 2, 4, DEFAULT_BUDGET).unwrap();
        assert!(r.passed());
    }

    #[test]
    fn forced_valuation_family() {
        assert_eq!(forced_family(2, 2, 2).unwrap(), vec![big(&[2, 1])]);
        assert_eq!(
            forced_family(2, 2, 4).unwrap(),
            vec![big(&[2, 0, 1]), big(&[2, 2, 1])]
        );
        assert_eq!(forced_family(2, 1, 4).unwrap(), vec![big(&[1])]);
    }

    #[test]
    fn descent_examples() {
        let t = descent_minimal_s(&eis(2, &[-2, 0, 1])).unwrap();
        assert_eq!(t.s_v, 5);
        let row = &t.rows[2];
        assert_eq!((row.j_max, row.s_required), (2, 1));
        let row = &t.rows[1];
        assert_eq!((row.j_max, row.s_required), (1, 1));
        assert!(t.passed(), "{t:?}");
        let t = descent_minimal_s(&eis(3, &[3, 0, 1])).unwrap();
        assert_eq!((t.rows[0].j_max, t.rows[0].s_required), (0, 0));
        assert!(t.passed());
    }

    #[test]
    fn pure_uniformizer_rows() {
        for n in 1..=3 {
            assert!(pure_lattice_optimality(2, n).unwrap().passed());
        }
    }

    #[test]
    fn fractional_elements_small() {
        let r = fractional_element_suite(2, 2, 0..10, 20).unwrap();
        assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn heights_small() {
        let r = heights_suite(0..10).unwrap();
        assert!(r.passed(), "{r:?}");
    }
}
