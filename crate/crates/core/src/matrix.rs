//! Dense matrices over the truncated series ring, with a division-free
//! characteristic polynomial.

use std::fmt;

use num_bigint::BigUint;
use num_traits::Zero;
use rand::Rng;

use crate::ring::{Precision, RingError, TruncatedSeries};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeriesMatrix {
    prec: Precision,
    rows: usize,
    cols: usize,
    data: Vec<TruncatedSeries>,
}

impl SeriesMatrix {
    pub fn zero(prec: &Precision, rows: usize, cols: usize) -> Self {
        Self {
            prec: prec.clone(),
            rows,
            cols,
            data: vec![TruncatedSeries::zero(prec); rows * cols],
        }
    }

    pub fn identity(prec: &Precision, size: usize) -> Self {
        let mut m = Self::zero(prec, size, size);
        for i in 0..size {
            m.set(i, i, TruncatedSeries::one(prec));
        }
        m
    }

    pub fn diagonal(prec: &Precision, entries: Vec<TruncatedSeries>) -> Self {
        let mut m = Self::zero(prec, entries.len(), entries.len());
        for (i, e) in entries.into_iter().enumerate() {
            m.set(i, i, e);
        }
        m
    }

    /// Builds a matrix from rows; all entries must share `prec`.
    pub fn from_rows(prec: &Precision, rows: Vec<Vec<TruncatedSeries>>) -> Result<Self, RingError> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged matrix rows");
            for e in row {
                if e.prec() != prec {
                    return Err(RingError::PrecisionMismatch {
                        left: prec.clone(),
                        right: e.prec().clone(),
                    });
                }
                data.push(e);
            }
        }
        Ok(Self {
            prec: prec.clone(),
            rows: r,
            cols: c,
            data,
        })
    }

    pub fn prec(&self) -> &Precision {
        &self.prec
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &TruncatedSeries {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: TruncatedSeries) {
        assert_eq!(v.prec(), &self.prec);
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[TruncatedSeries] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<TruncatedSeries> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<TruncatedSeries>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        assert_eq!(self.prec, other.prec, "precision mismatch");
        let mut out = Self::zero(&self.prec, self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = TruncatedSeries::zero(&self.prec);
                for k in 0..self.cols {
                    acc = &acc + &(self.get(i, k) * other.get(k, j));
                }
                out.set(i, j, acc);
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        Self {
            prec: self.prec.clone(),
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn apply(&self, v: &[TruncatedSeries]) -> Vec<TruncatedSeries> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .fold(TruncatedSeries::zero(&self.prec), |acc, (a, b)| {
                        &acc + &(a * b)
                    })
            })
            .collect()
    }

    pub fn scale(&self, c: &TruncatedSeries) -> Self {
        self.map(|e| e * c)
    }

    pub fn map(&self, f: impl Fn(&TruncatedSeries) -> TruncatedSeries) -> Self {
        let data: Vec<_> = self.data.iter().map(f).collect();
        let prec = data.first().map_or(self.prec.clone(), |e| e.prec().clone());
        Self {
            prec,
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zero(&self.prec, self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j).clone());
            }
        }
        out
    }

    /// Coefficients `[1, c_{k-1}, ..., c_0]` of `det(x I - A)`, highest degree first.
    ///
    /// Berkowitz's recurrence: each step multiplies by a lower-triangular
    /// Toeplitz matrix built from `R A1^i C`, so only ring operations are used.
    pub fn charpoly(&self) -> Vec<TruncatedSeries> {
        assert_eq!(self.rows, self.cols, "charpoly of a non-square matrix");
        let n = self.rows;
        let one = TruncatedSeries::one(&self.prec);
        if n == 0 {
            return vec![one];
        }
        let mut poly = vec![one.clone(), self.get(n - 1, n - 1).neg()];
        for k in (0..n - 1).rev() {
            let m = n - k - 1;
            let row: Vec<TruncatedSeries> = (k + 1..n).map(|j| self.get(k, j).clone()).collect();
            let mut col: Vec<TruncatedSeries> =
                (k + 1..n).map(|i| self.get(i, k).clone()).collect();
            let mut toeplitz = Vec::with_capacity(m + 2);
            toeplitz.push(one.clone());
            toeplitz.push(self.get(k, k).neg());
            for step in 0..m {
                let dot = row
                    .iter()
                    .zip(&col)
                    .fold(TruncatedSeries::zero(&self.prec), |acc, (a, b)| {
                        &acc + &(a * b)
                    });
                toeplitz.push(dot.neg());
                if step + 1 < m {
                    col = (k + 1..n)
                        .map(|i| {
                            (k + 1..n)
                                .zip(&col)
                                .fold(TruncatedSeries::zero(&self.prec), |acc, (j, c)| {
                                    &acc + &(self.get(i, j) * c)
                                })
                        })
                        .collect();
                }
            }
            let next: Vec<TruncatedSeries> = (0..m + 2)
                .map(|i| {
                    (0..=i.min(m)).fold(TruncatedSeries::zero(&self.prec), |acc, j| {
                        &acc + &(&toeplitz[i - j] * &poly[j])
                    })
                })
                .collect();
            poly = next;
        }
        poly
    }

    pub fn det(&self) -> TruncatedSeries {
        let cp = self.charpoly();
        let c0 = cp.last().expect("charpoly is nonempty").clone();
        if self.rows % 2 == 1 {
            c0.neg()
        } else {
            c0
        }
    }

    /// Evaluation at `u = 0` followed by reduction mod `p`; rank over `F_p`.
    pub fn residue_rank(&self) -> usize {
        let p = BigUint::from(self.prec.p());
        let rows: Vec<Vec<BigUint>> = (0..self.rows)
            .map(|i| self.row(i).iter().map(|e| e.coeff(0) % &p).collect())
            .collect();
        rank_mod_p(rows, self.prec.p())
    }

    /// Seeded pseudorandom matrix with entries of degree `< T`.
    pub fn random(prec: &Precision, rows: usize, cols: usize, rng: &mut impl Rng) -> Self {
        let mut m = Self::zero(prec, rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.set(i, j, random_series(prec, rng));
            }
        }
        m
    }
}

pub(crate) fn random_series(prec: &Precision, rng: &mut impl Rng) -> TruncatedSeries {
    let m = prec.modulus();
    let coeffs = (0..prec.t())
        .map(|_| {
            let digits: Vec<u32> = (0..m.to_u32_digits().len() + 1)
                .map(|_| rng.gen())
                .collect();
            BigUint::new(digits) % m
        })
        .collect();
    TruncatedSeries::from_residues(prec, coeffs)
}

pub(crate) fn random_unit(prec: &Precision, rng: &mut impl Rng) -> TruncatedSeries {
    loop {
        let s = random_series(prec, rng);
        if s.is_unit() {
            return s;
        }
    }
}

/// Rank of a matrix over `F_p` by Gaussian elimination.
pub fn rank_mod_p(mut rows: Vec<Vec<BigUint>>, p: u64) -> usize {
    let p = BigUint::from(p);
    let cols = rows.first().map_or(0, Vec::len);
    let mut rank = 0;
    for c in 0..cols {
        let Some(pivot) = (rank..rows.len()).find(|&r| !(&rows[r][c] % &p).is_zero()) else {
            continue;
        };
        rows.swap(rank, pivot);
        let inv = crate::ring::inverse_mod(&(&rows[rank][c] % &p), &p).expect("nonzero mod p");
        for r in 0..rows.len() {
            if r == rank {
                continue;
            }
            let f = (&rows[r][c] * &inv) % &p;
            if f == BigUint::from(0u32) {
                continue;
            }
            for k in c..cols {
                let sub = (&f * &rows[rank][k]) % &p;
                rows[r][k] = ((&rows[r][k] % &p) + &p - sub) % &p;
            }
        }
        rank += 1;
    }
    rank
}

impl fmt::Display for SeriesMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            let row: Vec<String> = self.row(i).iter().map(ToString::to_string).collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}
