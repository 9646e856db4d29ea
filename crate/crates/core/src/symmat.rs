//! Symmetric matrices with packed upper-triangle storage.

use std::fmt;

use nalgebra::DMatrix;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::poly::{Monomial, Polynomial};
use crate::scalar::Scalar;

#[derive(Clone, PartialEq)]
pub struct SymmetricMatrix<T> {
    n: usize,
    upper: Vec<T>,
}

fn packed_index(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * n - i * (i + 1) / 2 + j
}

impl<T: Scalar> SymmetricMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        SymmetricMatrix {
            n,
            upper: vec![T::zero(); n * (n + 1) / 2],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, |i, j| if i == j { T::one() } else { T::zero() })
    }

    /// The all-ones matrix `J`.
    pub fn ones(n: usize) -> Self {
        Self::from_fn(n, |_, _| T::one())
    }

    /// Builds from a function evaluated on the upper triangle (`i <= j`).
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut upper = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in i..n {
                upper.push(f(i, j));
            }
        }
        SymmetricMatrix { n, upper }
    }

    /// Builds from full rows, validating shape and symmetry.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let n = rows.len();
        for row in rows {
            if row.len() != n {
                return Err(Error::Dimension {
                    expected: n,
                    found: row.len(),
                });
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                if !rows[i][j].near(&rows[j][i]) {
                    return Err(Error::InvalidArgument(format!(
                        "matrix is not symmetric at ({}, {})",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(Self::from_fn(n, |i, j| rows[i][j].clone()))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.upper[packed_index(self.n, i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) {
        let k = packed_index(self.n, i, j);
        self.upper[k] = v;
    }

    pub fn rows(&self) -> Vec<Vec<T>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j).clone()).collect())
            .collect()
    }

    /// `a^T M a`.
    pub fn quadratic_form(&self, a: &[T]) -> Result<T> {
        if a.len() != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                found: a.len(),
            });
        }
        let mut total = T::zero();
        for i in 0..self.n {
            if a[i].is_zero() {
                continue;
            }
            total = total + self.get(i, i).clone() * a[i].clone() * a[i].clone();
            for j in i + 1..self.n {
                if a[j].is_zero() {
                    continue;
                }
                let v = self.get(i, j).clone() * a[i].clone() * a[j].clone();
                total = total + v.clone() + v;
            }
        }
        Ok(total)
    }

    /// The even quartic form `sum_ij M_ij x_i^2 x_j^2`.
    pub fn quartic_form(&self) -> Polynomial<T> {
        let n = self.n;
        let mut p = Polynomial::zero(n);
        for i in 0..n {
            for j in i..n {
                let mut e = vec![0; n];
                e[i] += 2;
                e[j] += 2;
                let c = self.get(i, j).clone();
                let c = if i == j { c } else { c.clone() + c };
                p.add_term(Monomial::new(e), c);
            }
        }
        p
    }

    pub fn entrywise_nonneg(&self) -> bool {
        self.upper.iter().all(|v| !v.is_negative())
    }

    /// `D M D` with `D = diag(d)`.
    pub fn diag_scale(&self, d: &[T]) -> Result<Self> {
        if d.len() != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                found: d.len(),
            });
        }
        if let Some(i) = d.iter().position(|v| *v <= T::zero()) {
            return Err(Error::NonPositive(i));
        }
        Ok(Self::from_fn(self.n, |i, j| {
            d[i].clone() * d[j].clone() * self.get(i, j).clone()
        }))
    }

    /// Matrix with one extra zero row and column appended.
    pub fn pad_zero(&self, extra: usize) -> Self {
        let n = self.n;
        Self::from_fn(n + extra, |i, j| {
            if i < n && j < n {
                self.get(i, j).clone()
            } else {
                T::zero()
            }
        })
    }

    pub fn scale(&self, c: &T) -> Self {
        SymmetricMatrix {
            n: self.n,
            upper: self.upper.iter().map(|v| v.clone() * c.clone()).collect(),
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        if other.n != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                found: other.n,
            });
        }
        Ok(SymmetricMatrix {
            n: self.n,
            upper: self
                .upper
                .iter()
                .zip(&other.upper)
                .map(|(a, b)| a.clone() + b.clone())
                .collect(),
        })
    }

    pub fn to_f64(&self) -> SymmetricMatrix<f64> {
        SymmetricMatrix {
            n: self.n,
            upper: self.upper.iter().map(Scalar::to_f64).collect(),
        }
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j).to_f64())
    }

    /// Matrix file text: size line, then one row per line.
    pub fn to_file_string(&self) -> String {
        let mut s = format!("{}\n", self.n);
        for i in 0..self.n {
            let row: Vec<String> = (0..self.n).map(|j| self.get(i, j).to_string()).collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        s
    }

    /// Parses the matrix file format; `first_line` is the line number of
    /// the size line for diagnostics.
    pub fn parse_lines<'a>(lines: &mut impl Iterator<Item = (usize, &'a str)>) -> Result<Self> {
        let (line_no, size_line) = lines
            .by_ref()
            .find(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
            .ok_or_else(|| Error::parse(0, "missing matrix size line"))?;
        let n: usize = size_line
            .trim()
            .parse()
            .map_err(|_| Error::parse(line_no, format!("expected matrix size, found '{}'", size_line.trim())))?;
        let mut rows = Vec::with_capacity(n);
        let mut last = line_no;
        while rows.len() < n {
            let (ln, line) = lines
                .next()
                .ok_or_else(|| Error::parse(last + 1, format!("expected {n} matrix rows, found {}", rows.len())))?;
            last = ln;
            if line.trim().is_empty() {
                continue;
            }
            let row: Vec<T> = line
                .split_whitespace()
                .enumerate()
                .map(|(k, tok)| {
                    T::parse(tok).ok_or_else(|| Error::parse(ln, format!("field {}: bad number '{tok}'", k + 1)))
                })
                .collect::<Result<_>>()?;
            if row.len() != n {
                return Err(Error::parse(ln, format!("expected {n} entries, found {}", row.len())));
            }
            rows.push(row);
        }
        Self::from_rows(&rows).map_err(|e| match e {
            Error::InvalidArgument(m) => Error::parse(line_no, m),
            other => other,
        })
    }

    pub fn parse_str(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let m = Self::parse_lines(&mut lines)?;
        if let Some((ln, extra)) = lines.find(|(_, l)| !l.trim().is_empty()) {
            return Err(Error::parse(ln, format!("unexpected trailing content '{}'", extra.trim())));
        }
        Ok(m)
    }

    pub fn read_file(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::parse_str(&std::fs::read_to_string(path)?)
    }
}

impl SymmetricMatrix<f64> {
    /// Smallest eigenvalue (dense symmetric eigensolver).
    pub fn min_eigenvalue(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        self.to_dmatrix().symmetric_eigenvalues().min()
    }

    /// Float Cholesky test with a diagonal shift.
    pub fn cholesky_psd(&self, shift: f64) -> bool {
        let m = self.to_dmatrix() + DMatrix::identity(self.n, self.n) * shift;
        m.cholesky().is_some()
    }
}

impl<T: Scalar> fmt::Debug for SymmetricMatrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SymmetricMatrix{:?}", self.rows())
    }
}

/// `M = sum_k pivots[k] * v_k v_k^T`, with `v_k` unit at `order[k]` and zero
/// at every earlier pivot index.
#[derive(Clone, Debug, PartialEq)]
pub struct LdlFactorization {
    pub order: Vec<usize>,
    pub pivots: Vec<BigRational>,
    pub vectors: Vec<Vec<BigRational>>,
}

impl LdlFactorization {
    pub fn reconstruct(&self, n: usize) -> SymmetricMatrix<BigRational> {
        let mut m = SymmetricMatrix::<BigRational>::zeros(n);
        for (d, v) in self.pivots.iter().zip(&self.vectors) {
            if d.is_zero() {
                continue;
            }
            for i in 0..n {
                for j in i..n {
                    let add = d * &v[i] * &v[j];
                    if !add.is_zero() {
                        let cur = m.get(i, j).clone();
                        m.set(i, j, cur + add);
                    }
                }
            }
        }
        m
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum PsdCheck {
    Psd(LdlFactorization),
    /// `witness^T M witness = value < 0`.
    NotPsd {
        witness: Vec<BigRational>,
        value: BigRational,
    },
}

impl PsdCheck {
    pub fn is_psd(&self) -> bool {
        matches!(self, PsdCheck::Psd(_))
    }
}

impl SymmetricMatrix<BigRational> {
    /// Exact semidefiniteness test: LDL^T with symmetric (largest-diagonal)
    /// pivoting over the rationals.
    ///
    /// A zero pivot requires its whole remaining row to vanish. A negative
    /// diagonal in the Schur complement, or a nonzero off-diagonal next to
    /// zero diagonals, yields a witness lifted back to the original
    /// coordinates.
    pub fn psd_check(&self) -> PsdCheck {
        let n = self.n;
        let mut s = self.rows();
        let mut remaining: Vec<usize> = (0..n).collect();
        let mut fact = LdlFactorization {
            order: Vec::with_capacity(n),
            pivots: Vec::with_capacity(n),
            vectors: Vec::with_capacity(n),
        };
        while !remaining.is_empty() {
            if let Some(&i) = remaining.iter().find(|&&i| s[i][i].is_negative()) {
                let mut v = vec![BigRational::zero(); n];
                v[i] = BigRational::one();
                return self.lift_witness(&fact, v);
            }
            let p = *remaining
                .iter()
                .reduce(|a, b| if s[*b][*b] > s[*a][*a] { b } else { a })
                .expect("nonempty");
            if s[p][p].is_zero() {
                for (k, &i) in remaining.iter().enumerate() {
                    for &j in &remaining[k + 1..] {
                        if !s[i][j].is_zero() {
                            let mut v = vec![BigRational::zero(); n];
                            v[i] = BigRational::one();
                            v[j] = if s[i][j].is_positive() {
                                -BigRational::one()
                            } else {
                                BigRational::one()
                            };
                            return self.lift_witness(&fact, v);
                        }
                    }
                }
                for &i in &remaining {
                    let mut v = vec![BigRational::zero(); n];
                    v[i] = BigRational::one();
                    fact.order.push(i);
                    fact.pivots.push(BigRational::zero());
                    fact.vectors.push(v);
                }
                break;
            }
            let d = s[p][p].clone();
            let mut l = vec![BigRational::zero(); n];
            for &i in &remaining {
                l[i] = &s[i][p] / &d;
            }
            remaining.retain(|&i| i != p);
            for &i in &remaining {
                if l[i].is_zero() {
                    continue;
                }
                let li_d = &l[i] * &d;
                for &j in &remaining {
                    if !l[j].is_zero() {
                        s[i][j] -= &li_d * &l[j];
                    }
                }
            }
            fact.order.push(p);
            fact.pivots.push(d);
            fact.vectors.push(l);
        }
        PsdCheck::Psd(fact)
    }

    /// Extends a Schur-complement direction `v` so every eliminated pivot
    /// vector is orthogonal to it; the quadratic form is then unchanged.
    fn lift_witness(&self, fact: &LdlFactorization, mut v: Vec<BigRational>) -> PsdCheck {
        for (p, l) in fact.order.iter().zip(&fact.vectors).rev() {
            let mut acc = BigRational::zero();
            for (j, lj) in l.iter().enumerate() {
                if j != *p && !lj.is_zero() {
                    acc += lj * &v[j];
                }
            }
            v[*p] = -acc;
        }
        let value = self.quadratic_form(&v).expect("dimension");
        debug_assert!(value.is_negative());
        PsdCheck::NotPsd { witness: v, value }
    }
}
