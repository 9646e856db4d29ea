//! Gram-matrix encodings of sum-of-squares membership questions.
//!
//! An encoding asks for PSD matrices `G_b` (one per block of the monomial
//! basis) and free scalars `z_k` such that
//!
//! ```text
//! sum_b  m_b^T G_b m_b  +  sum_k z_k p_k  =  target
//! ```
//!
//! holds coefficientwise. Even targets admit Gram matrices that are block
//! diagonal by exponent parity: averaging any Gram matrix over the sign
//! flips `x_i -> -x_i` keeps it feasible and kills entries between
//! monomials of different parity.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::poly::{power_sum_squares, Monomial, Polynomial};
use crate::scalar::Scalar;
use crate::sdp::{self, BlockEntries, Constraint, SdpProblem, SdpSolution, SolverOptions};
use crate::symmat::SymmetricMatrix;
use crate::{ExactMatrix, ExactPolynomial, FloatPolynomial, Rational};

/// Default threshold of the membership verdict policy.
pub const MARGIN_TOLERANCE: f64 = 1e-6;

/// How basis monomials are grouped into PSD blocks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Blocking {
    /// One block per exponent-parity vector.
    Parity,
    /// A single block holding every basis monomial.
    Full,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParityClass {
    /// Exponent vector mod 2 shared by the class; empty under
    /// [`Blocking::Full`].
    pub parity: Vec<u8>,
    pub monomials: Vec<Monomial>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MonomialBasis {
    pub n: usize,
    /// Half-degree of the target: basis monomials have this degree
    /// (homogeneous basis) or at most this degree.
    pub degree: u32,
    pub homogeneous: bool,
    pub classes: Vec<ParityClass>,
}

impl MonomialBasis {
    /// All monomials of degree exactly `degree`.
    pub fn homogeneous(n: usize, degree: u32, blocking: Blocking) -> Self {
        Self::group(n, degree, true, Monomial::all_of_degree(n, degree), blocking)
    }

    /// All monomials of degree at most `degree`.
    pub fn up_to(n: usize, degree: u32, blocking: Blocking) -> Self {
        Self::group(n, degree, false, Monomial::all_up_to_degree(n, degree), blocking)
    }

    fn group(n: usize, degree: u32, homogeneous: bool, monomials: Vec<Monomial>, blocking: Blocking) -> Self {
        let classes = match blocking {
            Blocking::Full => vec![ParityClass {
                parity: Vec::new(),
                monomials,
            }],
            Blocking::Parity => {
                let mut by_parity: BTreeMap<Vec<u8>, Vec<Monomial>> = BTreeMap::new();
                for m in monomials {
                    by_parity.entry(m.parity()).or_default().push(m);
                }
                by_parity
                    .into_iter()
                    .map(|(parity, monomials)| ParityClass { parity, monomials })
                    .collect()
            }
        };
        MonomialBasis {
            n,
            degree,
            homogeneous,
            classes,
        }
    }

    pub fn len(&self) -> usize {
        self.classes.iter().map(|c| c.monomials.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        self.classes.iter().map(|c| c.monomials.len()).collect()
    }
}

/// What an encoding certifies.
#[derive(Clone, Debug, PartialEq)]
pub enum EncodingKind {
    /// `(sum x_i^2)^r * quartic_form(M)` is a sum of squares.
    Reznick { r: u32, matrix: ExactMatrix },
    /// `f = sigma + lambda (sum x_i^2 - 1)` with `deg sigma <= 2k`.
    Sphere { k: u32 },
    /// Any other target, possibly with free multiplier columns.
    Custom,
}

#[derive(Clone, Debug)]
pub struct GramEncoding {
    pub kind: EncodingKind,
    pub basis: MonomialBasis,
    pub problem: SdpProblem,
    /// Target monomial -> index of the constraint fixing its coefficient.
    pub coefficient_index: BTreeMap<Monomial, usize>,
    /// Monomial fixed by each constraint, in constraint order.
    pub constraint_monomials: Vec<Monomial>,
    pub target: ExactPolynomial,
    /// Exact polynomial multiplied by each free variable.
    pub free_columns: Vec<ExactPolynomial>,
}

impl GramEncoding {
    pub fn nvars(&self) -> usize {
        self.basis.n
    }

    /// Builds the encoding of `sum_b m_b^T G_b m_b + sum_k z_k p_k = target`.
    /// `objective` holds linear costs on the free variables.
    pub fn assemble(
        kind: EncodingKind,
        basis: MonomialBasis,
        target: ExactPolynomial,
        free_columns: Vec<ExactPolynomial>,
        objective: Vec<(usize, f64)>,
    ) -> Result<Self> {
        let n = basis.n;
        if target.nvars() != n {
            return Err(Error::VariableCount {
                left: n,
                right: target.nvars(),
            });
        }
        if let Some(p) = free_columns.iter().find(|p| p.nvars() != n) {
            return Err(Error::VariableCount {
                left: n,
                right: p.nvars(),
            });
        }
        // monomial -> per-block entry lists
        let mut contributions: BTreeMap<Monomial, Vec<(usize, usize, usize)>> = BTreeMap::new();
        for (blk, class) in basis.classes.iter().enumerate() {
            let ms = &class.monomials;
            for i in 0..ms.len() {
                for j in i..ms.len() {
                    contributions.entry(ms[i].mul(&ms[j])).or_default().push((blk, i, j));
                }
            }
        }
        for (m, _) in target.terms() {
            contributions.entry(m.clone()).or_default();
        }
        for p in &free_columns {
            for (m, _) in p.terms() {
                contributions.entry(m.clone()).or_default();
            }
        }
        let mut problem = SdpProblem::new(basis.block_sizes(), free_columns.len());
        let mut coefficient_index = BTreeMap::new();
        let mut constraint_monomials = Vec::with_capacity(contributions.len());
        for (m, entries) in contributions {
            let mut blocks: Vec<BlockEntries> = Vec::new();
            for (blk, i, j) in entries {
                match blocks.last_mut() {
                    Some(last) if last.block == blk => last.entries.push((i, j, 1.0)),
                    _ => blocks.push(BlockEntries {
                        block: blk,
                        entries: vec![(i, j, 1.0)],
                    }),
                }
            }
            let free = free_columns
                .iter()
                .enumerate()
                .filter_map(|(k, p)| {
                    let c = p.coefficient(&m);
                    (!c.is_zero()).then(|| (k, Scalar::to_f64(&c)))
                })
                .collect();
            coefficient_index.insert(m.clone(), problem.constraints.len());
            problem.constraints.push(Constraint {
                blocks,
                free,
                rhs: Scalar::to_f64(&target.coefficient(&m)),
            });
            constraint_monomials.push(m);
        }
        problem.objective.free = objective;
        Ok(GramEncoding {
            kind,
            basis,
            problem,
            coefficient_index,
            constraint_monomials,
            target,
            free_columns,
        })
    }

    /// `sum_b m_b^T G_b m_b` for arbitrary block values.
    pub fn gram_polynomial<T: Scalar>(&self, blocks: &[SymmetricMatrix<T>]) -> Polynomial<T> {
        let mut p = Polynomial::zero(self.nvars());
        for (class, g) in self.basis.classes.iter().zip(blocks) {
            let ms = &class.monomials;
            for i in 0..ms.len() {
                for j in i..ms.len() {
                    let v = g.get(i, j).clone();
                    let v = if i == j { v } else { v.clone() + v };
                    p.add_term(ms[i].mul(&ms[j]), v);
                }
            }
        }
        p
    }

    /// `target - sum_k z_k p_k`, the polynomial the Gram part must match.
    pub fn gram_target_f64(&self, free: &[f64]) -> FloatPolynomial {
        let mut t = self.target.to_f64();
        for (p, z) in self.free_columns.iter().zip(free) {
            t = &t - &p.to_f64().scale(z);
        }
        t
    }
}

/// Target of level `r` of the Reznick scheme for `M`.
pub fn reznick_target(m: &ExactMatrix, r: u32) -> ExactPolynomial {
    &power_sum_squares::<Rational>(m.n(), r) * &m.quartic_form()
}

pub fn build_reznick(m: &ExactMatrix, r: u32) -> GramEncoding {
    build_reznick_with(m, r, Blocking::Parity)
}

pub fn build_reznick_with(m: &ExactMatrix, r: u32, blocking: Blocking) -> GramEncoding {
    let basis = MonomialBasis::homogeneous(m.n(), r + 2, blocking);
    GramEncoding::assemble(
        EncodingKind::Reznick { r, matrix: m.clone() },
        basis,
        reznick_target(m, r),
        Vec::new(),
        Vec::new(),
    )
    .expect("variable counts agree by construction")
}

/// Encodes an even form of degree `2d` over a homogeneous degree-`d` basis.
pub fn build_form(f: &ExactPolynomial, blocking: Blocking) -> Result<GramEncoding> {
    let deg = f.degree();
    if deg < 0 {
        let basis = MonomialBasis::homogeneous(f.nvars(), 0, blocking);
        return GramEncoding::assemble(EncodingKind::Custom, basis, f.clone(), Vec::new(), Vec::new());
    }
    if deg % 2 != 0 || f.terms().any(|(m, _)| m.degree() as i64 != deg) {
        return Err(Error::NotEven);
    }
    let basis = MonomialBasis::homogeneous(f.nvars(), (deg / 2) as u32, blocking);
    GramEncoding::assemble(EncodingKind::Custom, basis, f.clone(), Vec::new(), Vec::new())
}

/// Encodes `f = sigma + lambda (x1^2 + ... + xn^2 - 1)` with `sigma` a sum of
/// squares of degree at most `2k` and `lambda` even of degree at most `2k-2`.
pub fn build_sphere(f: &ExactPolynomial, k: u32) -> Result<GramEncoding> {
    let n = f.nvars();
    if !f.is_even() {
        return Err(Error::NotEven);
    }
    let deg = f.degree();
    if deg > 2 * k as i64 {
        return Err(Error::InvalidArgument(format!(
            "degree {deg} exceeds the sphere truncation 2k = {}",
            2 * k
        )));
    }
    let basis = MonomialBasis::up_to(n, k, Blocking::Parity);
    let sphere = &power_sum_squares::<Rational>(n, 1) - &Polynomial::one(n);
    let mut free_columns = Vec::new();
    if k >= 1 {
        for c in Monomial::all_up_to_degree(n, k - 1) {
            free_columns.push(&Polynomial::term(c.squared(), Rational::from_i64(1)) * &sphere);
        }
    }
    GramEncoding::assemble(EncodingKind::Sphere { k }, basis, f.clone(), free_columns, Vec::new())
}

/// Verdict of the margin policy.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Membership {
    Member,
    NonMember,
    Indeterminate,
}

/// Margin > `tol` is membership, margin < `-tol` non-membership, anything
/// in between (or NaN) is indeterminate.
pub fn classify_margin(margin: f64, tol: f64) -> Membership {
    if margin > tol {
        Membership::Member
    } else if margin < -tol {
        Membership::NonMember
    } else {
        Membership::Indeterminate
    }
}

/// Maximal eigenvalue margin of the encoding's Gram blocks.
pub fn margin(enc: &GramEncoding, options: &SolverOptions) -> Result<(f64, SdpSolution)> {
    sdp::solve_margin(&enc.problem, options)
}

/// A numeric square `weight * poly^2`.
#[derive(Clone, Debug)]
pub struct FloatSquare {
    pub weight: f64,
    pub poly: FloatPolynomial,
}

/// Factors each Gram block of `sol` by eigendecomposition into weighted
/// squares and checks that they reproduce the target within `1e-6`.
///
/// Eigenvalues down to `-shift` are clipped to zero; anything more negative
/// is an extraction failure.
pub fn extract_squares(enc: &GramEncoding, sol: &SdpSolution, shift: f64) -> Result<Vec<FloatSquare>> {
    if sol.blocks.len() != enc.basis.classes.len() {
        return Err(Error::Extraction("solution does not match the encoding".into()));
    }
    let n = enc.nvars();
    let mut squares = Vec::new();
    let mut blocks = Vec::with_capacity(sol.blocks.len());
    for (class, g) in enc.basis.classes.iter().zip(&sol.blocks) {
        let eig = sym_eigen(g);
        let mut clipped = DMatrix::zeros(g.nrows(), g.ncols());
        for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
            if lambda < -shift {
                return Err(Error::Extraction(format!("Gram block has eigenvalue {lambda:e}")));
            }
            if lambda <= 0.0 {
                continue;
            }
            let v = eig.eigenvectors.column(k);
            clipped += v * v.transpose() * lambda;
            let poly = Polynomial::from_terms(
                n,
                class
                    .monomials
                    .iter()
                    .zip(v.iter())
                    .filter(|(_, c)| c.abs() > 1e-14)
                    .map(|(m, &c)| (m.clone(), c)),
            )?;
            squares.push(FloatSquare { weight: lambda, poly });
        }
        blocks.push(SymmetricMatrix::from_fn(g.nrows(), |i, j| clipped[(i, j)]));
    }
    let residual = &enc.gram_polynomial(&blocks) - &enc.gram_target_f64(&sol.free);
    let err = residual.max_abs_coefficient();
    if err > 1e-6 {
        return Err(Error::Extraction(format!("squares miss the target by {err:e}")));
    }
    Ok(squares)
}

pub(crate) fn sym_eigen(g: &DMatrix<f64>) -> nalgebra::SymmetricEigen<f64, nalgebra::Dyn> {
    let sym = (g + g.transpose()) * 0.5;
    sym.symmetric_eigen()
}
