//! Breuil modules over the truncated ring `(Z/p^n)[u]/(u^T)`: construction
//! from normal decompositions, the semilinear Frobenius on fractional
//! elements, generator counts, and Smith forms over `F_p[u]/(u^T)`.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eisenstein::{EisensteinError, EisensteinPolynomial};
use crate::matrix::{random_series, random_unit, rank_mod_p, SeriesMatrix};
use crate::ring::{Precision, RingError, TruncatedSeries, Valuation};

pub const MODULE_SCHEMA: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BreuilError {
    #[error(transparent)]
    Ring(#[from] RingError),
    #[error(transparent)]
    Eisenstein(#[from] EisensteinError),
    #[error("u-precision {have} is too small (need at least {need})")]
    PrecisionTooSmall { need: usize, have: usize },
    #[error("rank must be at least 1")]
    ZeroRank,
    #[error("dimension d = {d} is outside [0, {h}]")]
    DimensionOutOfRange { d: usize, h: usize },
    #[error("expected a {expected} object, got {got}")]
    ShapeMismatch { expected: String, got: String },
    #[error("operation requires p-adic precision n = 1 (got n = {0})")]
    RequiresResidueField(u32),
    #[error("change of basis does not have unit determinant")]
    NotUnimodular,
    #[error("phi does not match the recorded normal decomposition")]
    PhiMismatch,
    #[error("cokernel of phi is not annihilated by E")]
    CokernelNotKilledByE,
    #[error("modules over n > 1 are only accepted with a normal decomposition")]
    Uncertified,
    #[error("pole order {pole} reaches the u-precision {t}; allocate T >= {need}")]
    PoleTooLarge { pole: usize, t: usize, need: usize },
    #[error("unsupported module file schema {0}")]
    Schema(u32),
    #[error("malformed module file: {0}")]
    Malformed(String),
}

pub type Result<T> = std::result::Result<T, BreuilError>;

/// u-precision needed to apply Frobenius to elements with pole order up to `t_max`.
pub fn required_t(p: u64, t_max: usize, e: usize) -> usize {
    p as usize * t_max + e
}

/// `M = T + L` with `image(phi) = E T + L`, recorded as `phi = V diag(E..E, 1..1)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NormalDecomposition {
    pub d: usize,
    pub change_of_basis: SeriesMatrix,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BreuilModule {
    prec: Precision,
    h: usize,
    /// Column `j` is `phi(1 (x) e_j)`.
    phi: SeriesMatrix,
    eisenstein: EisensteinPolynomial,
    e_series: TruncatedSeries,
    normal_decomp: Option<NormalDecomposition>,
}

fn check_holds_e(prec: &Precision, e: &EisensteinPolynomial) -> Result<()> {
    if prec.t() <= e.degree() {
        return Err(BreuilError::PrecisionTooSmall {
            need: e.degree() + 1,
            have: prec.t(),
        });
    }
    if prec.p() != e.p() {
        return Err(BreuilError::ShapeMismatch {
            expected: format!("Eisenstein polynomial over p = {}", prec.p()),
            got: format!("p = {}", e.p()),
        });
    }
    Ok(())
}

fn normal_form(prec: &Precision, e_series: &TruncatedSeries, d: usize, h: usize) -> SeriesMatrix {
    let entries = (0..h)
        .map(|i| {
            if i < d {
                e_series.clone()
            } else {
                TruncatedSeries::one(prec)
            }
        })
        .collect();
    SeriesMatrix::diagonal(prec, entries)
}

/// Seeded product of a unit diagonal and elementary column operations.
pub fn random_unimodular(prec: &Precision, h: usize, rng: &mut impl Rng) -> SeriesMatrix {
    let diag = (0..h).map(|_| random_unit(prec, rng)).collect();
    let mut v = SeriesMatrix::diagonal(prec, diag);
    if h >= 2 {
        for _ in 0..2 * h {
            let i = rng.gen_range(0..h);
            let j = (i + rng.gen_range(1..h)) % h;
            let c = random_series(prec, rng);
            col_add(&mut v, j, i, &c);
        }
    }
    v
}

impl BreuilModule {
    /// `phi = V diag(E I_d, I_{h-d})` for a given unimodular `V`.
    pub fn with_normal_decomposition(
        prec: &Precision,
        eisenstein: &EisensteinPolynomial,
        d: usize,
        change_of_basis: SeriesMatrix,
    ) -> Result<Self> {
        check_holds_e(prec, eisenstein)?;
        let h = change_of_basis.rows();
        if h == 0 {
            return Err(BreuilError::ZeroRank);
        }
        if change_of_basis.cols() != h || change_of_basis.prec() != prec {
            return Err(BreuilError::ShapeMismatch {
                expected: format!("{h}x{h} matrix at {prec}"),
                got: format!(
                    "{}x{} matrix at {}",
                    change_of_basis.rows(),
                    change_of_basis.cols(),
                    change_of_basis.prec()
                ),
            });
        }
        if d > h {
            return Err(BreuilError::DimensionOutOfRange { d, h });
        }
        if !change_of_basis.det().is_unit() {
            return Err(BreuilError::NotUnimodular);
        }
        let e_series = eisenstein.to_series(prec);
        let phi = change_of_basis.mul(&normal_form(prec, &e_series, d, h));
        Ok(Self {
            prec: prec.clone(),
            h,
            phi,
            eisenstein: eisenstein.clone(),
            e_series,
            normal_decomp: Some(NormalDecomposition { d, change_of_basis }),
        })
    }

    /// A module with seeded pseudorandom change of basis.
    pub fn build_bt_module(
        prec: &Precision,
        eisenstein: &EisensteinPolynomial,
        d: usize,
        h: usize,
        seed: u64,
    ) -> Result<Self> {
        if h == 0 {
            return Err(BreuilError::ZeroRank);
        }
        if d > h {
            return Err(BreuilError::DimensionOutOfRange { d, h });
        }
        check_holds_e(prec, eisenstein)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = random_unimodular(prec, h, &mut rng);
        Self::with_normal_decomposition(prec, eisenstein, d, v)
    }

    /// An arbitrary Frobenius matrix; accepted only over `n = 1`, where the
    /// cokernel condition is decided by a Smith form.
    pub fn from_phi(
        prec: &Precision,
        eisenstein: &EisensteinPolynomial,
        phi: SeriesMatrix,
    ) -> Result<Self> {
        check_holds_e(prec, eisenstein)?;
        let h = phi.rows();
        if h == 0 {
            return Err(BreuilError::ZeroRank);
        }
        if phi.cols() != h || phi.prec() != prec {
            return Err(BreuilError::ShapeMismatch {
                expected: format!("{h}x{h} matrix at {prec}"),
                got: format!("{}x{} matrix at {}", phi.rows(), phi.cols(), phi.prec()),
            });
        }
        if prec.n() != 1 {
            return Err(BreuilError::Uncertified);
        }
        let e = eisenstein.degree() as u32;
        let snf = snf_mod_ut(&phi)?;
        if !snf
            .exponents
            .iter()
            .all(|v| v.finite().is_some_and(|a| a <= e))
        {
            return Err(BreuilError::CokernelNotKilledByE);
        }
        Ok(Self {
            prec: prec.clone(),
            h,
            phi,
            eisenstein: eisenstein.clone(),
            e_series: eisenstein.to_series(prec),
            normal_decomp: None,
        })
    }

    /// Block upper-triangular extension `[[phi_1, E Y], [0, phi_2]]` of `second` by `first`.
    pub fn extension(first: &Self, second: &Self, seed: u64) -> Result<Self> {
        if first.prec != second.prec || first.eisenstein != second.eisenstein {
            return Err(BreuilError::ShapeMismatch {
                expected: format!("module at {} over E = {}", first.prec, first.eisenstein),
                got: format!("module at {} over E = {}", second.prec, second.eisenstein),
            });
        }
        let (h1, h2) = (first.h, second.h);
        let h = h1 + h2;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut phi = SeriesMatrix::zero(&first.prec, h, h);
        for i in 0..h1 {
            for j in 0..h1 {
                phi.set(i, j, first.phi.get(i, j).clone());
            }
            for j in 0..h2 {
                let y = random_series(&first.prec, &mut rng);
                phi.set(i, h1 + j, &first.e_series * &y);
            }
        }
        for i in 0..h2 {
            for j in 0..h2 {
                phi.set(h1 + i, h1 + j, second.phi.get(i, j).clone());
            }
        }
        Ok(Self {
            prec: first.prec.clone(),
            h,
            phi,
            eisenstein: first.eisenstein.clone(),
            e_series: first.e_series.clone(),
            normal_decomp: None,
        })
    }

    pub fn prec(&self) -> &Precision {
        &self.prec
    }

    pub fn rank(&self) -> usize {
        self.h
    }

    pub fn phi(&self) -> &SeriesMatrix {
        &self.phi
    }

    pub fn eisenstein(&self) -> &EisensteinPolynomial {
        &self.eisenstein
    }

    pub fn normal_decomposition(&self) -> Option<&NormalDecomposition> {
        self.normal_decomp.as_ref()
    }

    /// Length over the localization at `p`: `n h`.
    pub fn order(&self) -> u64 {
        u64::from(self.prec.n()) * self.h as u64
    }

    /// Minimal number of generators; `h` for a free module.
    pub fn h3(&self) -> usize {
        self.h
    }

    /// Minimal number of generators of `image(phi)/E M` (requires `n = 1`, `T > 2e`).
    pub fn h4(&self) -> Result<usize> {
        if self.prec.n() != 1 {
            return Err(BreuilError::RequiresResidueField(self.prec.n()));
        }
        let e = self.eisenstein.degree();
        if self.prec.t() <= 2 * e {
            return Err(BreuilError::PrecisionTooSmall {
                need: 2 * e + 1,
                have: self.prec.t(),
            });
        }
        // Q = image(phi) mod E M inside (F_p[u]/u^e)^h, spanned over F_p by u^i phi_j.
        let mut all = Vec::new();
        let mut shifted = Vec::new();
        for j in 0..self.h {
            let col = self.phi.column(j);
            for i in 0..e {
                let mut v = vec![BigUint::zero(); self.h * e];
                for (r, entry) in col.iter().enumerate() {
                    for k in i..e {
                        v[r * e + k] = entry.coeff(k - i).clone();
                    }
                }
                if i >= 1 {
                    shifted.push(v.clone());
                }
                all.push(v);
            }
        }
        let p = self.prec.p();
        Ok(rank_mod_p(all, p) - rank_mod_p(shifted, p))
    }

    /// `phi(1 (x) x)`: the Frobenius is applied to the coordinates first.
    pub fn apply_phi(&self, x: &FractionalElement) -> Result<FractionalElement> {
        if x.alphas.len() != self.h || x.prec() != &self.prec {
            return Err(BreuilError::ShapeMismatch {
                expected: format!("element of rank {} at {}", self.h, self.prec),
                got: format!("element of rank {} at {}", x.alphas.len(), x.prec()),
            });
        }
        if x.is_zero() {
            return Ok(FractionalElement::zero(&self.prec, self.h));
        }
        let pole = self.prec.p() as usize * x.t;
        if pole >= self.prec.t() {
            return Err(BreuilError::PoleTooLarge {
                pole,
                t: self.prec.t(),
                need: required_t(self.prec.p(), x.t, self.eisenstein.degree()),
            });
        }
        let sigma: Vec<TruncatedSeries> = x.alphas.iter().map(TruncatedSeries::frobenius).collect();
        FractionalElement::new(pole, self.phi.apply(&sigma))
    }

    pub fn to_file(&self) -> ModuleFile {
        ModuleFile {
            schema: MODULE_SCHEMA,
            p: self.prec.p(),
            n: self.prec.n(),
            t: self.prec.t(),
            eisenstein: self
                .eisenstein
                .dense()
                .iter()
                .map(ToString::to_string)
                .collect(),
            h: self.h,
            phi: matrix_to_strings(&self.phi),
            normal_decomposition: self
                .normal_decomp
                .as_ref()
                .map(|nd| NormalDecompositionFile {
                    d: nd.d,
                    change_of_basis: matrix_to_strings(&nd.change_of_basis),
                }),
        }
    }

    pub fn from_file(file: &ModuleFile) -> Result<Self> {
        if file.schema != MODULE_SCHEMA {
            return Err(BreuilError::Schema(file.schema));
        }
        let prec = Precision::new(file.p, file.n, file.t)?;
        let dense = file
            .eisenstein
            .iter()
            .map(|s| parse_int(s))
            .collect::<Result<Vec<_>>>()?;
        let eisenstein = EisensteinPolynomial::from_dense(file.p, &dense)?;
        let phi = matrix_from_strings(&prec, file.h, &file.phi)?;
        match &file.normal_decomposition {
            Some(nd) => {
                let v = matrix_from_strings(&prec, file.h, &nd.change_of_basis)?;
                let module = Self::with_normal_decomposition(&prec, &eisenstein, nd.d, v)?;
                if module.phi != phi {
                    return Err(BreuilError::PhiMismatch);
                }
                Ok(module)
            }
            None => Self::from_phi(&prec, &eisenstein, phi),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("module files always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModuleFile =
            serde_json::from_str(text).map_err(|e| BreuilError::Malformed(e.to_string()))?;
        Self::from_file(&file)
    }
}

fn parse_int(s: &str) -> Result<BigInt> {
    s.trim()
        .parse()
        .map_err(|_| BreuilError::Malformed(format!("'{s}' is not a decimal integer")))
}

fn matrix_to_strings(m: &SeriesMatrix) -> Vec<Vec<Vec<String>>> {
    m.to_rows()
        .iter()
        .map(|row| {
            row.iter()
                .map(|e| e.coeffs().iter().map(ToString::to_string).collect())
                .collect()
        })
        .collect()
}

fn matrix_from_strings(
    prec: &Precision,
    h: usize,
    data: &[Vec<Vec<String>>],
) -> Result<SeriesMatrix> {
    if data.len() != h || data.iter().any(|r| r.len() != h) {
        return Err(BreuilError::Malformed(format!("expected a {h}x{h} matrix")));
    }
    let rows = data
        .iter()
        .map(|row| {
            row.iter()
                .map(|coeffs| {
                    let ints = coeffs
                        .iter()
                        .map(|s| parse_int(s))
                        .collect::<Result<Vec<_>>>()?;
                    Ok(TruncatedSeries::from_ints(prec, &ints))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SeriesMatrix::from_rows(prec, rows)?)
}

/// On-disk form of a module: a precision header plus coefficient arrays as decimal strings.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModuleFile {
    pub schema: u32,
    pub p: u64,
    pub n: u32,
    pub t: usize,
    /// Dense `a_0, ..., a_e` of the Eisenstein polynomial.
    pub eisenstein: Vec<String>,
    pub h: usize,
    /// Row-major entries, each a list of coefficients (constant term first).
    pub phi: Vec<Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normal_decomposition: Option<NormalDecompositionFile>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalDecompositionFile {
    pub d: usize,
    pub change_of_basis: Vec<Vec<Vec<String>>>,
}

/// `x = sum (alpha_i / u^t) e_i`, kept with the least possible `t`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FractionalElement {
    t: usize,
    alphas: Vec<TruncatedSeries>,
}

impl FractionalElement {
    pub fn new(t: usize, alphas: Vec<TruncatedSeries>) -> Result<Self> {
        let Some(first) = alphas.first() else {
            return Err(BreuilError::ZeroRank);
        };
        let prec = first.prec().clone();
        if alphas.iter().any(|a| a.prec() != &prec) {
            return Err(BreuilError::Ring(RingError::PrecisionMismatch {
                left: prec.clone(),
                right: alphas
                    .iter()
                    .find(|a| a.prec() != &prec)
                    .unwrap()
                    .prec()
                    .clone(),
            }));
        }
        if t > prec.t() {
            return Err(BreuilError::PoleTooLarge {
                pole: t,
                t: prec.t(),
                need: t + 1,
            });
        }
        let mut x = Self { t, alphas };
        x.normalize();
        Ok(x)
    }

    pub fn zero(prec: &Precision, h: usize) -> Self {
        Self {
            t: 0,
            alphas: vec![TruncatedSeries::zero(prec); h],
        }
    }

    /// `e_i / u^t`.
    pub fn basis(prec: &Precision, h: usize, i: usize, t: usize) -> Result<Self> {
        let mut alphas = vec![TruncatedSeries::zero(prec); h];
        alphas[i] = TruncatedSeries::one(prec);
        Self::new(t, alphas)
    }

    fn normalize(&mut self) {
        let common = self
            .alphas
            .iter()
            .map(|a| a.ord_u().lower_bound() as usize)
            .min()
            .unwrap_or(0);
        let k = common.min(self.t);
        if self.is_zero() {
            self.t = 0;
        } else if k > 0 {
            for a in &mut self.alphas {
                *a = a.shift_down(k);
            }
            self.t -= k;
        }
    }

    pub fn prec(&self) -> &Precision {
        self.alphas[0].prec()
    }

    pub fn pole(&self) -> usize {
        self.t
    }

    pub fn alphas(&self) -> &[TruncatedSeries] {
        &self.alphas
    }

    pub fn is_zero(&self) -> bool {
        self.alphas.iter().all(TruncatedSeries::is_zero)
    }

    /// Membership in the lattice `M` itself.
    pub fn is_integral(&self) -> bool {
        self.t == 0
    }

    pub fn scale_p_pow(&self, k: u32) -> Self {
        let mut x = Self {
            t: self.t,
            alphas: self.alphas.iter().map(|a| a.mul_p_pow(k)).collect(),
        };
        x.normalize();
        x
    }
}

/// True iff `p^s` maps every generator of `N` into `M`.
pub fn verify_inclusion_p_s(n_gens: &[FractionalElement], s: u32) -> bool {
    n_gens.iter().all(|x| x.scale_p_pow(s).is_integral())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SnfOp {
    Swap(usize, usize),
    /// `line[target] += factor * line[source]`.
    AddMultiple {
        target: usize,
        source: usize,
        factor: TruncatedSeries,
    },
    Scale {
        index: usize,
        unit: TruncatedSeries,
    },
}

/// `L A R = D` with `D` diagonal and entries `u^a`; the operations composing
/// `L` and `R` are logged in the order they were applied.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SnfResult {
    /// Sorted; `AtLeast(T)` for entries that vanish at the working precision.
    pub exponents: Vec<Valuation>,
    pub row_ops: Vec<SnfOp>,
    pub col_ops: Vec<SnfOp>,
    pub diagonal: SeriesMatrix,
}

fn row_add(m: &mut SeriesMatrix, target: usize, source: usize, f: &TruncatedSeries) {
    for j in 0..m.cols() {
        let v = m.get(target, j) + &(f * m.get(source, j));
        m.set(target, j, v);
    }
}

fn col_add(m: &mut SeriesMatrix, target: usize, source: usize, f: &TruncatedSeries) {
    for i in 0..m.rows() {
        let v = m.get(i, target) + &(m.get(i, source) * f);
        m.set(i, target, v);
    }
}

fn row_swap(m: &mut SeriesMatrix, a: usize, b: usize) {
    for j in 0..m.cols() {
        let x = m.get(a, j).clone();
        m.set(a, j, m.get(b, j).clone());
        m.set(b, j, x);
    }
}

fn col_swap(m: &mut SeriesMatrix, a: usize, b: usize) {
    for i in 0..m.rows() {
        let x = m.get(i, a).clone();
        m.set(i, a, m.get(i, b).clone());
        m.set(i, b, x);
    }
}

fn row_scale(m: &mut SeriesMatrix, i: usize, c: &TruncatedSeries) {
    for j in 0..m.cols() {
        let v = m.get(i, j) * c;
        m.set(i, j, v);
    }
}

fn col_scale(m: &mut SeriesMatrix, j: usize, c: &TruncatedSeries) {
    for i in 0..m.rows() {
        let v = m.get(i, j) * c;
        m.set(i, j, v);
    }
}

fn apply_row_op(m: &mut SeriesMatrix, op: &SnfOp) {
    match op {
        SnfOp::Swap(a, b) => row_swap(m, *a, *b),
        SnfOp::AddMultiple {
            target,
            source,
            factor,
        } => row_add(m, *target, *source, factor),
        SnfOp::Scale { index, unit } => row_scale(m, *index, unit),
    }
}

fn apply_col_op(m: &mut SeriesMatrix, op: &SnfOp) {
    match op {
        SnfOp::Swap(a, b) => col_swap(m, *a, *b),
        SnfOp::AddMultiple {
            target,
            source,
            factor,
        } => col_add(m, *target, *source, factor),
        SnfOp::Scale { index, unit } => col_scale(m, *index, unit),
    }
}

fn inverse_op(op: &SnfOp) -> SnfOp {
    match op {
        SnfOp::Swap(a, b) => SnfOp::Swap(*a, *b),
        SnfOp::AddMultiple {
            target,
            source,
            factor,
        } => SnfOp::AddMultiple {
            target: *target,
            source: *source,
            factor: factor.neg(),
        },
        SnfOp::Scale { index, unit } => SnfOp::Scale {
            index: *index,
            unit: unit.unit_inverse().expect("logged scale factors are units"),
        },
    }
}

impl SnfResult {
    /// Undoes the logged operations on the diagonal form; returns the original matrix.
    pub fn reconstruct(&self) -> SeriesMatrix {
        let mut m = self.diagonal.clone();
        for op in self.row_ops.iter().rev() {
            apply_row_op(&mut m, &inverse_op(op));
        }
        for op in self.col_ops.iter().rev() {
            apply_col_op(&mut m, &inverse_op(op));
        }
        m
    }

    pub fn finite_count(&self) -> usize {
        self.exponents.iter().filter(|v| v.is_finite()).count()
    }
}

/// Smith normal form over `F_p[u]/(u^T)` (requires `n = 1`).
pub fn snf_mod_ut(a: &SeriesMatrix) -> Result<SnfResult> {
    let prec = a.prec().clone();
    if prec.n() != 1 {
        return Err(BreuilError::RequiresResidueField(prec.n()));
    }
    let (rows, cols) = (a.rows(), a.cols());
    let mut m = a.clone();
    let mut row_ops = Vec::new();
    let mut col_ops = Vec::new();
    let mut exponents = Vec::new();
    let size = rows.min(cols);
    for k in 0..size {
        let mut best: Option<(u32, usize, usize)> = None;
        for i in k..rows {
            for j in k..cols {
                if let Valuation::Finite(v) = m.get(i, j).ord_u() {
                    if best.is_none_or(|(b, _, _)| v < b) {
                        best = Some((v, i, j));
                    }
                }
            }
        }
        let Some((a_exp, pi, pj)) = best else {
            exponents.extend((k..size).map(|_| Valuation::AtLeast(prec.t() as u32)));
            break;
        };
        if pi != k {
            row_swap(&mut m, k, pi);
            row_ops.push(SnfOp::Swap(k, pi));
        }
        if pj != k {
            col_swap(&mut m, k, pj);
            col_ops.push(SnfOp::Swap(k, pj));
        }
        let shift = a_exp as usize;
        let unit = m.get(k, k).shift_down(shift);
        let inv = unit.unit_inverse().expect("pivot has minimal valuation");
        row_scale(&mut m, k, &inv);
        row_ops.push(SnfOp::Scale {
            index: k,
            unit: inv,
        });
        for i in k + 1..rows {
            if m.get(i, k).is_zero() {
                continue;
            }
            let factor = m.get(i, k).shift_down(shift).neg();
            row_add(&mut m, i, k, &factor);
            row_ops.push(SnfOp::AddMultiple {
                target: i,
                source: k,
                factor,
            });
        }
        for j in k + 1..cols {
            if m.get(k, j).is_zero() {
                continue;
            }
            let factor = m.get(k, j).shift_down(shift).neg();
            col_add(&mut m, j, k, &factor);
            col_ops.push(SnfOp::AddMultiple {
                target: j,
                source: k,
                factor,
            });
        }
        exponents.push(Valuation::Finite(a_exp));
    }
    Ok(SnfResult {
        exponents,
        row_ops,
        col_ops,
        diagonal: m,
    })
}

/// Generic-fiber behaviour of the morphism dual to `g: M -> N` (a matrix over `n = 1`).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MorphismVerdict {
    /// Cokernel of `g` is killed by a power of `u`.
    pub closed_embedding: bool,
    /// `g` is injective.
    pub epimorphism: bool,
    pub isomorphism: bool,
    /// Least `a` with `u^a coker(g) = 0`, or `AtLeast(T)`.
    pub min_u_annihilator: Valuation,
    /// Injectivity is only decided modulo `u^T`.
    pub certified_at_t: usize,
    pub exponents: Vec<Valuation>,
}

pub fn prop1_classify(g: &SeriesMatrix) -> Result<MorphismVerdict> {
    let snf = snf_mod_ut(g)?;
    let all_finite = snf.exponents.iter().all(|v| v.is_finite());
    let closed_embedding = all_finite && g.rows() <= g.cols();
    let epimorphism = all_finite && g.cols() <= g.rows();
    let t = g.prec().t();
    let min_u_annihilator = if closed_embedding {
        Valuation::Finite(
            snf.exponents
                .iter()
                .filter_map(|v| v.finite())
                .max()
                .unwrap_or(0),
        )
    } else {
        Valuation::AtLeast(t as u32)
    };
    Ok(MorphismVerdict {
        closed_embedding,
        epimorphism,
        isomorphism: closed_embedding && epimorphism,
        min_u_annihilator,
        certified_at_t: t,
        exponents: snf.exponents,
    })
}

/// `E sigma(C_n) = u^{pn} - p^n` for `E = u^p - p` and `C_n = sum_{i=1}^n p^{n-i} u^{i-1}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PureUniformizerIdentity {
    pub p: u64,
    pub n: u32,
    pub lhs: TruncatedSeries,
    pub rhs: TruncatedSeries,
}

impl PureUniformizerIdentity {
    pub fn holds(&self) -> bool {
        self.lhs == self.rhs
    }
}

/// `C_n = sum_{i=1}^n p^{n-i} u^{i-1}` at the given precision.
pub fn pure_lattice_numerator(prec: &Precision, n: u32) -> TruncatedSeries {
    let p = BigUint::from(prec.p());
    let coeffs = (1..=n).map(|i| p.pow(n - i)).collect();
    TruncatedSeries::from_residues(prec, coeffs)
}

pub fn example3_identity(p: u64, n: u32) -> Result<PureUniformizerIdentity> {
    let prec = Precision::new(p, n + 1, p as usize * n as usize + 1)?;
    let e = EisensteinPolynomial::pure(p, p as usize)?.to_series(&prec);
    let lhs = &e * &pure_lattice_numerator(&prec, n).frobenius();
    let pn = BigInt::from(p).pow(n);
    let mut rhs = vec![BigInt::zero(); p as usize * n as usize + 1];
    rhs[0] = -pn;
    rhs[p as usize * n as usize] = BigInt::one();
    let rhs = TruncatedSeries::from_ints(&prec, &rhs);
    Ok(PureUniformizerIdentity { p, n, lhs, rhs })
}

/// Rank-one module over `Z/p^n` with `phi(1) = u^p - p`, and the generators
/// `e_1, C_n / u^n` of the lattice `N` above it.
pub fn pure_lattice_data(p: u64, n: u32) -> Result<(BreuilModule, Vec<FractionalElement>)> {
    let e = EisensteinPolynomial::pure(p, p as usize)?;
    let prec = Precision::new(p, n, required_t(p, n as usize, p as usize) + 1)?;
    let module =
        BreuilModule::with_normal_decomposition(&prec, &e, 1, SeriesMatrix::identity(&prec, 1))?;
    let gens = vec![
        FractionalElement::basis(&prec, 1, 0, 0)?,
        FractionalElement::new(n as usize, vec![pure_lattice_numerator(&prec, n)])?,
    ];
    Ok((module, gens))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eis(p: u64, dense: &[i64]) -> EisensteinPolynomial {
        let d: Vec<BigInt> = dense.iter().map(|&x| BigInt::from(x)).collect();
        EisensteinPolynomial::from_dense(p, &d).unwrap()
    }

    fn series(prec: &Precision, c: &[u64]) -> TruncatedSeries {
        TruncatedSeries::from_u64s(prec, c)
    }

    #[test]
    fn build_examples() {
        let prec = Precision::new(2, 1, 5).unwrap();
        let e = eis(2, &[-2, 0, 1]);
        let id = SeriesMatrix::identity(&prec, 1);
        let m = BreuilModule::with_normal_decomposition(&prec, &e, 0, id.clone()).unwrap();
        assert_eq!(m.phi().get(0, 0), &TruncatedSeries::one(&prec));
        let prec2 = Precision::new(2, 2, 5).unwrap();
        let m = BreuilModule::with_normal_decomposition(
            &prec2,
            &e,
            1,
            SeriesMatrix::identity(&prec2, 1),
        )
        .unwrap();
        assert_eq!(m.phi().get(0, 0).to_string(), "u^2+2");
        let m = BreuilModule::build_bt_module(&prec2, &e, 1, 2, 42).unwrap();
        assert_eq!(m.phi().residue_rank(), 1);
        assert!(m
            .normal_decomposition()
            .unwrap()
            .change_of_basis
            .det()
            .is_unit());
        assert_eq!(
            BreuilModule::build_bt_module(&Precision::new(2, 1, 2).unwrap(), &e, 1, 1, 0),
            Err(BreuilError::PrecisionTooSmall { need: 3, have: 2 })
        );
        assert_eq!(
            BreuilModule::build_bt_module(&prec, &e, 3, 2, 0),
            Err(BreuilError::DimensionOutOfRange { d: 3, h: 2 })
        );
    }

    #[test]
    fn build_is_deterministic() {
        let prec = Precision::new(3, 2, 7).unwrap();
        let e = eis(3, &[3, 3, 0, 1]);
        let a = BreuilModule::build_bt_module(&prec, &e, 1, 3, 7).unwrap();
        let b = BreuilModule::build_bt_module(&prec, &e, 1, 3, 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn apply_phi_examples() {
        let prec = Precision::new(2, 2, 8).unwrap();
        let e = eis(2, &[-2, 0, 1]);
        let m =
            BreuilModule::with_normal_decomposition(&prec, &e, 1, SeriesMatrix::identity(&prec, 1))
                .unwrap();
        let x = FractionalElement::basis(&prec, 1, 0, 0).unwrap();
        let y = m.apply_phi(&x).unwrap();
        assert_eq!(
            (y.pole(), y.alphas()[0].to_string()),
            (0, "u^2+2".to_string())
        );
        let x = FractionalElement::basis(&prec, 1, 0, 1).unwrap();
        let y = m.apply_phi(&x).unwrap();
        assert_eq!(
            (y.pole(), y.alphas()[0].to_string()),
            (2, "u^2+2".to_string())
        );
        let y = m.apply_phi(&FractionalElement::zero(&prec, 1)).unwrap();
        assert!(y.is_zero() && y.pole() == 0);
        let x = FractionalElement::basis(&prec, 1, 0, 4).unwrap();
        assert!(matches!(
            m.apply_phi(&x),
            Err(BreuilError::PoleTooLarge { .. })
        ));
    }

    #[test]
    fn fractional_elements_normalize() {
        let prec = Precision::new(2, 1, 6).unwrap();
        let x = FractionalElement::new(
            3,
            vec![series(&prec, &[0, 0, 1]), series(&prec, &[0, 1, 1])],
        )
        .unwrap();
        assert_eq!(x.pole(), 2);
        assert_eq!(x.alphas()[0], series(&prec, &[0, 1]));
        let x = FractionalElement::new(1, vec![series(&prec, &[0, 0, 1])]).unwrap();
        assert!(x.is_integral());
    }

    #[test]
    fn order_and_h3() {
        let e = eis(2, &[-2, 0, 1]);
        for (n, h, ord) in [(1, 3, 3), (2, 2, 4), (4, 1, 4)] {
            let prec = Precision::new(2, n, 5).unwrap();
            let m = BreuilModule::build_bt_module(&prec, &e, 0, h, 1).unwrap();
            assert_eq!(m.order(), ord);
            assert_eq!(m.h3(), h);
        }
    }

    #[test]
    fn h4_examples() {
        let e = eis(2, &[-2, 0, 1]);
        let prec = Precision::new(2, 1, 5).unwrap();
        for h in 1..=3 {
            for d in 0..=h {
                let m = BreuilModule::build_bt_module(&prec, &e, d, h, 3 + d as u64).unwrap();
                assert_eq!(m.h4().unwrap(), h - d);
                assert_eq!(m.phi().residue_rank(), h - d);
            }
        }
        let m =
            BreuilModule::with_normal_decomposition(&prec, &e, 1, SeriesMatrix::identity(&prec, 2))
                .unwrap();
        assert_eq!(m.h4().unwrap(), 1);
        let small = Precision::new(2, 1, 4).unwrap();
        let m = BreuilModule::build_bt_module(&small, &e, 1, 1, 0).unwrap();
        assert_eq!(
            m.h4(),
            Err(BreuilError::PrecisionTooSmall { need: 5, have: 4 })
        );
        let two = Precision::new(2, 2, 5).unwrap();
        let m = BreuilModule::build_bt_module(&two, &e, 1, 1, 0).unwrap();
        assert_eq!(m.h4(), Err(BreuilError::RequiresResidueField(2)));
    }

    #[test]
    fn snf_examples() {
        let prec = Precision::new(2, 1, 4).unwrap();
        let u = series(&prec, &[0, 1]);
        let u2 = series(&prec, &[0, 0, 1]);
        let one = TruncatedSeries::one(&prec);
        let zero = TruncatedSeries::zero(&prec);
        let d = SeriesMatrix::diagonal(&prec, vec![u.clone(), u2.clone()]);
        assert_eq!(
            snf_mod_ut(&d).unwrap().exponents,
            vec![Valuation::Finite(1), Valuation::Finite(2)]
        );
        let a = SeriesMatrix::from_rows(
            &prec,
            vec![vec![u.clone(), one], vec![zero.clone(), u.clone()]],
        )
        .unwrap();
        let snf = snf_mod_ut(&a).unwrap();
        assert_eq!(
            snf.exponents,
            vec![Valuation::Finite(0), Valuation::Finite(2)]
        );
        assert_eq!(snf.reconstruct(), a);
        let z = SeriesMatrix::zero(&prec, 1, 1);
        assert_eq!(
            snf_mod_ut(&z).unwrap().exponents,
            vec![Valuation::AtLeast(4)]
        );
        let prec2 = Precision::new(2, 2, 4).unwrap();
        assert_eq!(
            snf_mod_ut(&SeriesMatrix::identity(&prec2, 1)),
            Err(BreuilError::RequiresResidueField(2))
        );
    }

    #[test]
    fn snf_reconstructs_random_matrices() {
        let prec = Precision::new(3, 1, 6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (r, c) in [(2, 2), (3, 3), (2, 3), (3, 2)] {
            let mut a = SeriesMatrix::random(&prec, r, c, &mut rng);
            a = a.map(|x| x.shift_up(1));
            let snf = snf_mod_ut(&a).unwrap();
            assert_eq!(snf.reconstruct(), a);
            assert!(snf
                .exponents
                .windows(2)
                .all(|w| w[0].lower_bound() <= w[1].lower_bound()));
        }
    }

    #[test]
    fn morphism_verdict_examples() {
        let prec = Precision::new(2, 1, 6).unwrap();
        let v = prop1_classify(&SeriesMatrix::identity(&prec, 2)).unwrap();
        assert_eq!(
            (v.closed_embedding, v.epimorphism, v.min_u_annihilator),
            (true, true, Valuation::Finite(0))
        );
        let ut = SeriesMatrix::diagonal(&prec, vec![series(&prec, &[0, 0, 0, 1])]);
        let v = prop1_classify(&ut).unwrap();
        assert_eq!(
            (v.closed_embedding, v.epimorphism, v.min_u_annihilator),
            (true, true, Valuation::Finite(3))
        );
        let g = SeriesMatrix::diagonal(
            &prec,
            vec![series(&prec, &[0, 1]), TruncatedSeries::zero(&prec)],
        );
        let v = prop1_classify(&g).unwrap();
        assert!(!v.closed_embedding && !v.epimorphism);
        assert_eq!(v.min_u_annihilator, Valuation::AtLeast(6));
        let tall = SeriesMatrix::from_rows(
            &prec,
            vec![
                vec![TruncatedSeries::one(&prec)],
                vec![TruncatedSeries::zero(&prec)],
            ],
        )
        .unwrap();
        let v = prop1_classify(&tall).unwrap();
        assert!(v.epimorphism && !v.closed_embedding);
    }

    #[test]
    fn inclusion_examples() {
        for n in 1..=4 {
            let (m, gens) = pure_lattice_data(2, n).unwrap();
            assert!(verify_inclusion_p_s(&gens, n));
            assert!(!verify_inclusion_p_s(&gens, n - 1));
            let image = m.apply_phi(&gens[1]).unwrap();
            assert!(image.is_integral());
        }
        let prec = Precision::new(2, 2, 4).unwrap();
        assert!(verify_inclusion_p_s(
            &[FractionalElement::basis(&prec, 2, 1, 0).unwrap()],
            0
        ));
    }

    #[test]
    fn pure_uniformizer_identity_examples() {
        for (p, n) in [(2, 2), (3, 1), (5, 3)] {
            let id = example3_identity(p, n).unwrap();
            assert!(id.holds(), "p={p} n={n}: {} vs {}", id.lhs, id.rhs);
        }
        let id = example3_identity(2, 2).unwrap();
        assert_eq!(id.rhs.to_string(), "u^4+4");
    }

    #[test]
    fn from_phi_checks_cokernel() {
        let prec = Precision::new(2, 1, 6).unwrap();
        let e = eis(2, &[-2, 0, 1]);
        let ok = SeriesMatrix::diagonal(&prec, vec![series(&prec, &[0, 1])]);
        assert!(BreuilModule::from_phi(&prec, &e, ok).is_ok());
        let bad = SeriesMatrix::diagonal(&prec, vec![series(&prec, &[0, 0, 0, 1])]);
        assert_eq!(
            BreuilModule::from_phi(&prec, &e, bad),
            Err(BreuilError::CokernelNotKilledByE)
        );
        let prec2 = Precision::new(2, 2, 6).unwrap();
        assert_eq!(
            BreuilModule::from_phi(&prec2, &e, SeriesMatrix::identity(&prec2, 1)),
            Err(BreuilError::Uncertified)
        );
    }

    #[test]
    fn json_round_trip() {
        let prec = Precision::new(3, 2, 7).unwrap();
        let e = eis(3, &[3, 3, 0, 1]);
        let m = BreuilModule::build_bt_module(&prec, &e, 2, 3, 5).unwrap();
        let text = m.to_json();
        assert_eq!(BreuilModule::from_json(&text).unwrap(), m);
        let mut file = m.to_file();
        file.schema = 2;
        assert_eq!(BreuilModule::from_file(&file), Err(BreuilError::Schema(2)));
        let mut file = m.to_file();
        let bumped: u64 = file.phi[0][0][0].parse::<u64>().unwrap() + 1;
        file.phi[0][0][0] = bumped.to_string();
        assert_eq!(
            BreuilModule::from_file(&file),
            Err(BreuilError::PhiMismatch)
        );
    }

    #[test]
    fn extension_is_a_breuil_module() {
        let prec = Precision::new(2, 1, 9).unwrap();
        let e = eis(2, &[2, 2, 1]);
        let a = BreuilModule::build_bt_module(&prec, &e, 1, 2, 1).unwrap();
        let b = BreuilModule::build_bt_module(&prec, &e, 0, 1, 2).unwrap();
        let ext = BreuilModule::extension(&a, &b, 3).unwrap();
        assert_eq!(ext.rank(), 3);
        assert!(BreuilModule::from_phi(&prec, &e, ext.phi().clone()).is_ok());
        assert!(ext.h3() <= a.h3() + b.h3());
        assert_eq!(ext.h4().unwrap(), 2);
    }
}
