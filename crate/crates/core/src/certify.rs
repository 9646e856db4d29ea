//! Exact sum-of-squares certificates: verification, the text document
//! format, and rounding of numeric Gram solutions to exact ones.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::gram::{sym_eigen, EncodingKind, GramEncoding};
use crate::poly::{parse_polynomial, power_sum_squares, weighted_power_sum_squares, Monomial, Polynomial};
use crate::rational::{best_approximation, solve_consistent, to_f64};
use crate::sdp::SdpSolution;
use crate::symmat::{PsdCheck, SymmetricMatrix};
use crate::{ExactMatrix, ExactPolynomial, Rational};

const HEADER: &str = "copocert-certificate 1";

#[derive(Clone, Debug, PartialEq)]
pub enum CertificateKind {
    /// Multiplier `(w1 x1^2 + ... + wn xn^2)^r`; all `w_i = 1` when
    /// `weights` is `None`.
    Reznick { r: u32, weights: Option<Vec<Rational>> },
    /// Target minus `lambda (x1^2 + ... + xn^2 - 1)` is the sum of squares.
    Sphere { lambda: ExactPolynomial },
}

#[derive(Clone, Debug, PartialEq)]
pub enum Target {
    /// Stands for the quartic form of the matrix.
    Matrix(ExactMatrix),
    Polynomial(ExactPolynomial),
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeightedSquare {
    pub weight: Rational,
    pub poly: ExactPolynomial,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SosCertificate {
    pub kind: CertificateKind,
    pub n: usize,
    pub target: Target,
    pub squares: Vec<WeightedSquare>,
}

impl SosCertificate {
    pub fn target_polynomial(&self) -> ExactPolynomial {
        match &self.target {
            Target::Matrix(m) => m.quartic_form(),
            Target::Polynomial(p) => p.clone(),
        }
    }

    /// The polynomial the squares must add up to.
    pub fn target_expression(&self) -> Result<ExactPolynomial> {
        let t = self.target_polynomial();
        if t.nvars() != self.n {
            return Err(Error::VariableCount {
                left: self.n,
                right: t.nvars(),
            });
        }
        match &self.kind {
            CertificateKind::Reznick { r, weights } => {
                let mult = match weights {
                    None => power_sum_squares::<Rational>(self.n, *r),
                    Some(w) => {
                        if w.len() != self.n {
                            return Err(Error::Dimension {
                                expected: self.n,
                                found: w.len(),
                            });
                        }
                        weighted_power_sum_squares(w, *r)
                    }
                };
                mult.try_mul(&t)
            }
            CertificateKind::Sphere { lambda } => {
                let sphere = &power_sum_squares::<Rational>(self.n, 1) - &Polynomial::one(self.n);
                t.try_sub(&lambda.try_mul(&sphere)?)
            }
        }
    }

    /// `sum w_i q_i^2 - target_expression`.
    pub fn residual(&self) -> Result<ExactPolynomial> {
        let mut acc = self.target_expression()?;
        acc = -acc;
        for sq in &self.squares {
            if sq.poly.nvars() != self.n {
                return Err(Error::VariableCount {
                    left: self.n,
                    right: sq.poly.nvars(),
                });
            }
            acc = acc.try_add(&sq.poly.square().scale(&sq.weight))?;
        }
        Ok(acc)
    }

    /// Exact check of the certificate identity; any malformation or
    /// nonpositive weight is a failed verification.
    pub fn verify(&self) -> bool {
        if self.squares.iter().any(|s| !s.weight.is_positive()) {
            return false;
        }
        if let CertificateKind::Reznick { weights: Some(w), .. } = &self.kind {
            if w.iter().any(|v| !v.is_positive()) {
                return false;
            }
        }
        matches!(self.residual(), Ok(p) if p.is_zero())
    }

    pub fn serialize(&self) -> String {
        let mut out = format!("{HEADER}\n");
        match &self.kind {
            CertificateKind::Reznick { r, weights } => {
                out.push_str("kind reznick\n");
                let _ = writeln!(out, "r {r}");
                if let Some(w) = weights {
                    let ws: Vec<String> = w.iter().map(ToString::to_string).collect();
                    let _ = writeln!(out, "weights {}", ws.join(" "));
                }
            }
            CertificateKind::Sphere { lambda } => {
                out.push_str("kind sphere\n");
                let _ = writeln!(out, "lambda {lambda}");
            }
        }
        let _ = writeln!(out, "n {}", self.n);
        match &self.target {
            Target::Matrix(m) => {
                out.push_str("target matrix\n");
                out.push_str(&m.to_file_string());
            }
            Target::Polynomial(p) => {
                let _ = writeln!(out, "target polynomial {p}");
            }
        }
        let _ = writeln!(out, "squares {}", self.squares.len());
        for sq in &self.squares {
            let _ = writeln!(out, "{} ; {}", sq.weight, sq.poly);
        }
        out
    }

    pub fn deserialize(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        match next_content(&mut lines) {
            Some((_, l)) if l.trim() == HEADER => {}
            Some((ln, l)) => return Err(Error::parse(ln, format!("expected '{HEADER}', found '{}'", l.trim()))),
            None => return Err(Error::parse(1, "empty certificate document")),
        }
        let mut kind: Option<(usize, String)> = None;
        let mut r: Option<u32> = None;
        let mut weights: Option<(usize, Vec<Rational>)> = None;
        let mut lambda: Option<(usize, String)> = None;
        let mut n: Option<usize> = None;
        let mut target: Option<(usize, TargetText)> = None;
        let mut squares_at: Option<(usize, usize)> = None;
        while let Some((ln, raw)) = next_content(&mut lines) {
            let l = raw.trim();
            let (key, value) = l.split_once(char::is_whitespace).unwrap_or((l, ""));
            let value = value.trim();
            match key {
                "kind" => kind = Some((ln, value.to_string())),
                "r" => {
                    r = Some(value.parse().map_err(|_| Error::parse(ln, format!("field r: bad exponent '{value}'")))?)
                }
                "weights" => {
                    let w = value
                        .split_whitespace()
                        .enumerate()
                        .map(|(k, t)| {
                            crate::rational::parse_rational(t)
                                .ok_or_else(|| Error::parse(ln, format!("field weights[{}]: bad rational '{t}'", k + 1)))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    weights = Some((ln, w));
                }
                "lambda" => lambda = Some((ln, value.to_string())),
                "n" => n = Some(value.parse().map_err(|_| Error::parse(ln, format!("field n: bad count '{value}'")))?),
                "target" => {
                    let (form, rest) = value.split_once(char::is_whitespace).unwrap_or((value, ""));
                    match form {
                        "matrix" => {
                            let m = ExactMatrix::parse_lines(&mut lines)?;
                            target = Some((ln, TargetText::Matrix(m)));
                        }
                        "polynomial" => target = Some((ln, TargetText::Polynomial(rest.trim().to_string()))),
                        other => return Err(Error::parse(ln, format!("field target: unknown form '{other}'"))),
                    }
                }
                "squares" => {
                    let count = value
                        .parse()
                        .map_err(|_| Error::parse(ln, format!("field squares: bad count '{value}'")))?;
                    squares_at = Some((ln, count));
                    break;
                }
                other => return Err(Error::parse(ln, format!("unknown field '{other}'"))),
            }
        }
        let (squares_line, count) = squares_at.ok_or_else(|| Error::parse(0, "missing field 'squares'"))?;
        let n = n.ok_or_else(|| Error::parse(squares_line, "missing field 'n'"))?;
        let (kind_line, kind_name) = kind.ok_or_else(|| Error::parse(squares_line, "missing field 'kind'"))?;
        let kind = match kind_name.as_str() {
            "reznick" => {
                let r = r.ok_or_else(|| Error::parse(kind_line, "kind reznick requires field 'r'"))?;
                let weights = match weights {
                    None => None,
                    Some((ln, w)) => {
                        if w.len() != n {
                            return Err(Error::parse(ln, format!("field weights: expected {n} values, found {}", w.len())));
                        }
                        if let Some(k) = w.iter().position(|v| !v.is_positive()) {
                            return Err(Error::parse(ln, format!("field weights[{}]: must be positive", k + 1)));
                        }
                        Some(w)
                    }
                };
                CertificateKind::Reznick { r, weights }
            }
            "sphere" => {
                let (ln, text) = lambda.ok_or_else(|| Error::parse(kind_line, "kind sphere requires field 'lambda'"))?;
                let lambda = parse_polynomial(&text, n).map_err(|m| Error::parse(ln, format!("field lambda: {m}")))?;
                CertificateKind::Sphere { lambda }
            }
            other => return Err(Error::parse(kind_line, format!("field kind: unknown kind '{other}'"))),
        };
        let (target_line, target) = target.ok_or_else(|| Error::parse(squares_line, "missing field 'target'"))?;
        let target = match target {
            TargetText::Matrix(m) => {
                if m.n() != n {
                    return Err(Error::parse(target_line, format!("target matrix has size {}, expected {n}", m.n())));
                }
                Target::Matrix(m)
            }
            TargetText::Polynomial(text) => Target::Polynomial(
                parse_polynomial(&text, n).map_err(|m| Error::parse(target_line, format!("field target: {m}")))?,
            ),
        };
        let mut squares = Vec::with_capacity(count);
        for k in 0..count {
            let (ln, raw) = next_content(&mut lines)
                .ok_or_else(|| Error::parse(squares_line, format!("expected {count} squares, found {k}")))?;
            let (w, p) = raw
                .split_once(';')
                .ok_or_else(|| Error::parse(ln, "expected 'weight ; polynomial'"))?;
            let weight = crate::rational::parse_rational(w)
                .ok_or_else(|| Error::parse(ln, format!("field weight: bad rational '{}'", w.trim())))?;
            if !weight.is_positive() {
                return Err(Error::parse(ln, format!("field weight: {weight} is not positive")));
            }
            let poly = parse_polynomial(p, n).map_err(|m| Error::parse(ln, format!("field polynomial: {m}")))?;
            squares.push(WeightedSquare { weight, poly });
        }
        if let Some((ln, extra)) = next_content(&mut lines) {
            return Err(Error::parse(ln, format!("unexpected trailing content '{}'", extra.trim())));
        }
        Ok(SosCertificate {
            kind,
            n,
            target,
            squares,
        })
    }
}

fn next_content<'a>(lines: &mut impl Iterator<Item = (usize, &'a str)>) -> Option<(usize, &'a str)> {
    lines.find(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
}

enum TargetText {
    Matrix(ExactMatrix),
    Polynomial(String),
}

/// One Gram block after facial reduction: `G = R G' R^T`, where the
/// columns of `R` give the reduced basis polynomials `u = R^T m`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReducedBlock {
    pub range: Vec<Vec<Rational>>,
    pub basis: Vec<ExactPolynomial>,
    pub gram: ExactMatrix,
}

/// Exact PSD Gram solution of an encoding.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactGram {
    pub blocks: Vec<ReducedBlock>,
    pub free: Vec<Rational>,
}

impl ExactGram {
    /// Gram matrices in the encoding's original basis.
    pub fn full_blocks(&self) -> Vec<ExactMatrix> {
        self.blocks
            .iter()
            .map(|b| {
                let s = b.range.len();
                let k = b.gram.n();
                SymmetricMatrix::from_fn(s, |i, j| {
                    let mut acc = Rational::zero();
                    for a in 0..k {
                        if b.range[i][a].is_zero() {
                            continue;
                        }
                        for c in 0..k {
                            if !b.range[j][c].is_zero() {
                                acc += &b.range[i][a] * b.gram.get(a, c) * &b.range[j][c];
                            }
                        }
                    }
                    acc
                })
            })
            .collect()
    }

    /// Weighted squares from an exact LDL^T factorization of every block.
    pub fn squares(&self) -> Result<Vec<WeightedSquare>> {
        let mut out = Vec::new();
        for b in &self.blocks {
            let PsdCheck::Psd(ldl) = b.gram.psd_check() else {
                return Err(Error::Rounding("Gram block is not PSD".into()));
            };
            let nv = b.basis.first().map_or(0, |p| p.nvars());
            for (d, v) in ldl.pivots.iter().zip(&ldl.vectors) {
                if d.is_zero() {
                    continue;
                }
                let mut q = Polynomial::zero(nv);
                for (c, u) in v.iter().zip(&b.basis) {
                    if !c.is_zero() {
                        q = &q + &u.scale(c);
                    }
                }
                out.push(WeightedSquare {
                    weight: d.clone(),
                    poly: q,
                });
            }
        }
        Ok(out)
    }
}

/// Numeric row echelon form with full pivoting; rows whose remaining
/// entries fall below `1e-9` are dropped. Returns `(rows, pivot columns)`.
fn numeric_rref(mut rows: Vec<Vec<f64>>, ncols: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut pivots = Vec::new();
    let mut t = 0;
    while t < rows.len() {
        let mut best = (0.0, 0, 0);
        for (i, row) in rows.iter().enumerate().skip(t) {
            for (j, v) in row.iter().enumerate() {
                if !pivots.contains(&j) && v.abs() > best.0 {
                    best = (v.abs(), i, j);
                }
            }
        }
        if best.0 < 1e-9 {
            rows.truncate(t);
            break;
        }
        let (_, pi, pj) = best;
        rows.swap(t, pi);
        let inv = 1.0 / rows[t][pj];
        for v in rows[t].iter_mut() {
            *v *= inv;
        }
        let prow = rows[t].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i != t {
                let f = row[pj];
                if f != 0.0 {
                    for (v, p) in row.iter_mut().zip(&prow) {
                        *v -= f * p;
                    }
                }
            }
        }
        pivots.push(pj);
        t += 1;
    }
    debug_assert!(rows.iter().all(|r| r.len() == ncols));
    (rows, pivots)
}

/// Exact range basis `R` (columns) orthogonal to a rounded numeric kernel.
/// `R` is the identity on the non-pivot coordinates, which are returned.
fn rational_range(kernel: &[Vec<f64>], size: usize, denom: u64) -> (Vec<Vec<Rational>>, Vec<usize>) {
    let (rows, pivots) = numeric_rref(kernel.to_vec(), size);
    let exact: Vec<Vec<Rational>> = rows
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .map(|(j, &v)| {
                    if pivots.contains(&j) {
                        if (v - 1.0).abs() < 0.5 {
                            Rational::one()
                        } else {
                            Rational::zero()
                        }
                    } else {
                        best_approximation(v, denom)
                    }
                })
                .collect()
        })
        .collect();
    let free: Vec<usize> = (0..size).filter(|c| !pivots.contains(c)).collect();
    let mut range = vec![vec![Rational::zero(); free.len()]; size];
    for (col, &f) in free.iter().enumerate() {
        range[f][col] = Rational::one();
        for (row, &p) in exact.iter().zip(&pivots) {
            range[p][col] = -row[f].clone();
        }
    }
    (range, free)
}

/// Rounds a numeric Gram solution to an exact one.
///
/// Near-zero eigenvalues of each block (below `kernel_tol` relative to the
/// largest eigenvalue) are treated as a forced kernel: the block is
/// restricted to the exact orthogonal complement of the rounded kernel
/// (facial reduction). The reduced Gram entries and free variables are
/// rounded to denominators at most `denom_bound`, projected exactly onto
/// the coefficient constraints in the Frobenius inner product, and accepted
/// iff every block passes the exact PSD test.
pub fn round_and_project_with(
    enc: &GramEncoding,
    sol: &SdpSolution,
    denom_bound: u64,
    kernel_tol: f64,
) -> Result<ExactGram> {
    if sol.blocks.len() != enc.basis.classes.len() || sol.free.len() != enc.free_columns.len() {
        return Err(Error::Rounding("solution does not match the encoding".into()));
    }
    let n = enc.nvars();
    let scale = sol
        .blocks
        .iter()
        .map(|g| g.amax())
        .fold(1.0_f64, f64::max);
    let mut reduced: Vec<(Vec<Vec<Rational>>, Vec<ExactPolynomial>, DMatrix<f64>)> = Vec::new();
    for (class, g) in enc.basis.classes.iter().zip(&sol.blocks) {
        let s = class.monomials.len();
        let eig = sym_eigen(g);
        let kernel: Vec<Vec<f64>> = (0..s)
            .filter(|&k| eig.eigenvalues[k] < kernel_tol * scale)
            .map(|k| eig.eigenvectors.column(k).iter().copied().collect())
            .collect();
        let (range, free) = rational_range(&kernel, s, denom_bound);
        let basis: Vec<ExactPolynomial> = (0..free.len())
            .map(|col| {
                let mut u = Polynomial::zero(n);
                for (i, m) in class.monomials.iter().enumerate() {
                    if !range[i][col].is_zero() {
                        u.add_term(m.clone(), range[i][col].clone());
                    }
                }
                u
            })
            .collect();
        let sub = DMatrix::from_fn(free.len(), free.len(), |a, b| g[(free[a], free[b])]);
        reduced.push((range, basis, sub));
    }

    // Variables: upper triangles of the reduced blocks, then free scalars.
    struct Var {
        weight: Rational,
        value: Rational,
        column: Vec<(usize, Rational)>,
    }
    let mut vars: Vec<Var> = Vec::new();
    let mut layout: Vec<Vec<(usize, usize)>> = Vec::new();
    for (_, basis, g) in &reduced {
        let mut idx = Vec::new();
        for i in 0..basis.len() {
            for j in i..basis.len() {
                let prod = basis[i].try_mul(&basis[j])?;
                let two = Rational::from_integer(2.into());
                let factor = if i == j { Rational::one() } else { two.clone() };
                let mut column = Vec::with_capacity(prod.len());
                for (m, c) in prod.terms() {
                    let row = *enc
                        .coefficient_index
                        .get(m)
                        .ok_or_else(|| Error::Unrepresentable(m.to_string()))?;
                    column.push((row, c * &factor));
                }
                idx.push((i, j));
                vars.push(Var {
                    weight: factor,
                    value: best_approximation(g[(i, j)], denom_bound),
                    column,
                });
            }
        }
        layout.push(idx);
    }
    for (p, &z) in enc.free_columns.iter().zip(&sol.free) {
        let column = p
            .terms()
            .map(|(m, c)| (enc.coefficient_index[m], c.clone()))
            .collect();
        vars.push(Var {
            weight: Rational::one(),
            value: best_approximation(z, denom_bound),
            column,
        });
    }

    let rows = enc.constraint_monomials.len();
    let mut residual: Vec<Rational> = enc
        .constraint_monomials
        .iter()
        .map(|m| enc.target.coefficient(m))
        .collect();
    for v in &vars {
        if v.value.is_zero() {
            continue;
        }
        for (r, a) in &v.column {
            residual[*r] -= a * &v.value;
        }
    }
    if residual.iter().any(|r| !r.is_zero()) {
        float_projection_check(&vars.iter().map(|v| (&v.weight, &v.value, &v.column)).collect::<Vec<_>>(), &residual, &layout)?;
        // Minimize sum w_k (v_k - v0_k)^2 subject to A v = t:
        // v = v0 + W^-1 A^T mu with (A W^-1 A^T) mu = t - A v0.
        let mut normal = vec![vec![Rational::zero(); rows]; rows];
        for v in &vars {
            let winv = v.weight.recip();
            for (r1, a1) in &v.column {
                let s = a1 * &winv;
                for (r2, a2) in &v.column {
                    normal[*r1][*r2] += &s * a2;
                }
            }
        }
        let mu = solve_consistent(&normal, &residual)
            .ok_or_else(|| Error::Rounding("coefficient constraints are inconsistent on the reduced face".into()))?;
        for v in &mut vars {
            let mut step = Rational::zero();
            for (r, a) in &v.column {
                if !mu[*r].is_zero() {
                    step += a * &mu[*r];
                }
            }
            if !step.is_zero() {
                v.value += step / &v.weight;
            }
        }
    }

    let mut blocks = Vec::with_capacity(reduced.len());
    let mut k = 0;
    for ((range, basis, _), idx) in reduced.into_iter().zip(&layout) {
        let mut gram = SymmetricMatrix::zeros(basis.len());
        for &(i, j) in idx {
            gram.set(i, j, vars[k].value.clone());
            k += 1;
        }
        if let PsdCheck::NotPsd { value, .. } = gram.psd_check() {
            return Err(Error::Rounding(format!(
                "projected Gram block is not PSD (witness value {})",
                crate::rational::to_f64(&value)
            )));
        }
        blocks.push(ReducedBlock { range, basis, gram });
    }
    let free = vars[k..].iter().map(|v| v.value.clone()).collect();
    Ok(ExactGram { blocks, free })
}

/// Float rehearsal of the exact projection: rejects faces on which the
/// constraints are inconsistent or the projected blocks are clearly not
/// PSD, before paying for rational elimination.
fn float_projection_check(
    vars: &[(&Rational, &Rational, &Vec<(usize, Rational)>)],
    residual: &[Rational],
    layout: &[Vec<(usize, usize)>],
) -> Result<()> {
    let rows = residual.len();
    let mut normal = DMatrix::<f64>::zeros(rows, rows);
    for (w, _, column) in vars {
        let winv = 1.0 / to_f64(w);
        for (r1, a1) in column.iter() {
            let s = to_f64(a1) * winv;
            for (r2, a2) in column.iter() {
                normal[(*r1, *r2)] += s * to_f64(a2);
            }
        }
    }
    let rhs = nalgebra::DVector::from_iterator(rows, residual.iter().map(to_f64));
    let mu = normal
        .clone()
        .svd(true, true)
        .solve(&rhs, 1e-12 * normal.amax().max(1.0))
        .map_err(|e| Error::Rounding(e.to_string()))?;
    let miss = (&normal * &mu - &rhs).amax();
    if miss > 1e-8 * (1.0 + rhs.amax()) {
        return Err(Error::Rounding("coefficient constraints are inconsistent on the reduced face".into()));
    }
    let values: Vec<f64> = vars
        .iter()
        .map(|(w, v, column)| {
            let step: f64 = column.iter().map(|(r, a)| to_f64(a) * mu[*r]).sum();
            to_f64(v) + step / to_f64(w)
        })
        .collect();
    let mut k = 0;
    for idx in layout {
        let size = idx.iter().map(|&(_, j)| j + 1).max().unwrap_or(0);
        let mut g = DMatrix::zeros(size, size);
        for &(i, j) in idx {
            g[(i, j)] = values[k];
            g[(j, i)] = values[k];
            k += 1;
        }
        if size > 0 {
            let lmin = g.symmetric_eigenvalues().min();
            if lmin < -1e-9 * g.amax().max(1.0) {
                return Err(Error::Rounding(format!("projected Gram block is not PSD (eigenvalue {lmin:e})")));
            }
        }
    }
    Ok(())
}

/// Relative eigenvalue thresholds tried for facial reduction. A strictly
/// feasible solution has no eigenvalue this small, so the first entry
/// amounts to no reduction there.
pub const KERNEL_TOLERANCES: [f64; 6] = [1e-8, 1e-7, 1e-6, 1e-5, 1e-4, 1e-3];

/// [`round_and_project_with`] over the standard kernel thresholds.
pub fn round_and_project(enc: &GramEncoding, sol: &SdpSolution, denom_bound: u64) -> Result<ExactGram> {
    let mut last = Error::Rounding("no attempt made".into());
    let mut seen_kernels: Vec<Vec<usize>> = Vec::new();
    for &tol in &KERNEL_TOLERANCES {
        let dims = kernel_dimensions(enc, sol, tol);
        if seen_kernels.contains(&dims) {
            continue;
        }
        seen_kernels.push(dims);
        match round_and_project_with(enc, sol, denom_bound, tol) {
            Ok(g) => return Ok(g),
            Err(e) => last = e,
        }
    }
    Err(last)
}

fn kernel_dimensions(enc: &GramEncoding, sol: &SdpSolution, tol: f64) -> Vec<usize> {
    let scale = sol.blocks.iter().map(|g| g.amax()).fold(1.0_f64, f64::max);
    let _ = enc;
    sol.blocks
        .iter()
        .map(|g| sym_eigen(g).eigenvalues.iter().filter(|&&l| l < tol * scale).count())
        .collect()
}

/// Denominator schedule for [`certify_encoding`].
#[derive(Clone, Copy, Debug)]
pub struct RoundingOptions {
    pub initial_denominator: u64,
    pub max_denominator: u64,
}

impl Default for RoundingOptions {
    fn default() -> Self {
        RoundingOptions {
            initial_denominator: 1 << 10,
            max_denominator: 1 << 20,
        }
    }
}

/// Turns an exact Gram solution into a certificate of the encoding's kind.
pub fn certificate_from_gram(enc: &GramEncoding, gram: &ExactGram) -> Result<SosCertificate> {
    let n = enc.nvars();
    let squares = gram.squares()?;
    let (kind, target) = match &enc.kind {
        EncodingKind::Reznick { r, matrix } => (
            CertificateKind::Reznick { r: *r, weights: None },
            Target::Matrix(matrix.clone()),
        ),
        EncodingKind::Sphere { k } => {
            let mut lambda = Polynomial::zero(n);
            if *k >= 1 {
                for (c, z) in Monomial::all_up_to_degree(n, k - 1).into_iter().zip(&gram.free) {
                    lambda.add_term(c.squared(), z.clone());
                }
            }
            (CertificateKind::Sphere { lambda }, Target::Polynomial(enc.target.clone()))
        }
        EncodingKind::Custom => {
            if !enc.free_columns.is_empty() {
                return Err(Error::InvalidArgument(
                    "encodings with free multipliers have no certificate form".into(),
                ));
            }
            (
                CertificateKind::Reznick { r: 0, weights: None },
                Target::Polynomial(enc.target.clone()),
            )
        }
    };
    let cert = SosCertificate {
        kind,
        n,
        target,
        squares,
    };
    if !cert.verify() {
        return Err(Error::Rounding("assembled certificate fails exact verification".into()));
    }
    Ok(cert)
}

/// Round-and-project with the doubling denominator schedule; the returned
/// certificate has passed [`SosCertificate::verify`].
pub fn certify_encoding(enc: &GramEncoding, sol: &SdpSolution, options: &RoundingOptions) -> Result<SosCertificate> {
    let mut denom = options.initial_denominator.max(1);
    let mut last = Error::Rounding("empty denominator schedule".into());
    while denom <= options.max_denominator {
        match round_and_project(enc, sol, denom).and_then(|g| certificate_from_gram(enc, &g)) {
            Ok(c) => return Ok(c),
            Err(e) => last = e,
        }
        denom *= 2;
    }
    Err(last)
}
