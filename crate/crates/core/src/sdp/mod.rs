//! Dense block semidefinite programs.
//!
//! Standard form:
//!
//! ```text
//! minimize    sum_b <C_b, X_b> + c_f . z
//! subject to  sum_b <A_ib, X_b> + f_i . z = rhs_i     for every constraint i
//!             X_b PSD for every block b,  z free
//! ```
//!
//! Size-1 blocks model nonnegative scalars.

mod dump;
mod solver;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub use dump::{parse_dump, write_dump};

/// Symmetric coefficients of one block: `(i, j, v)` sets entries `(i, j)`
/// and `(j, i)` to `v`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockEntries {
    pub block: usize,
    pub entries: Vec<(usize, usize, f64)>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Constraint {
    pub blocks: Vec<BlockEntries>,
    pub free: Vec<(usize, f64)>,
    pub rhs: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Objective {
    pub blocks: Vec<BlockEntries>,
    pub free: Vec<(usize, f64)>,
}

impl Objective {
    pub fn is_zero(&self) -> bool {
        self.blocks
            .iter()
            .all(|b| b.entries.iter().all(|e| e.2 == 0.0))
            && self.free.iter().all(|f| f.1 == 0.0)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SdpProblem {
    pub block_sizes: Vec<usize>,
    pub free_vars: usize,
    pub constraints: Vec<Constraint>,
    pub objective: Objective,
}

impl SdpProblem {
    pub fn new(block_sizes: Vec<usize>, free_vars: usize) -> Self {
        SdpProblem {
            block_sizes,
            free_vars,
            ..Default::default()
        }
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    /// Sum of block sizes (the barrier parameter of the cone).
    pub fn cone_dimension(&self) -> usize {
        self.block_sizes.iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(b) = self.block_sizes.iter().position(|&s| s == 0) {
            return Err(Error::InvalidProblem(format!("block {b} has size 0")));
        }
        let check_blocks = |blocks: &[BlockEntries], what: &str| -> Result<()> {
            for be in blocks {
                let size = *self.block_sizes.get(be.block).ok_or_else(|| {
                    Error::InvalidProblem(format!("{what} references undeclared block {}", be.block))
                })?;
                for &(i, j, v) in &be.entries {
                    if i >= size || j >= size {
                        return Err(Error::InvalidProblem(format!(
                            "{what}: entry ({i}, {j}) outside block {} of size {size}",
                            be.block
                        )));
                    }
                    if !v.is_finite() {
                        return Err(Error::InvalidProblem(format!("{what}: non-finite coefficient")));
                    }
                }
            }
            Ok(())
        };
        let check_free = |free: &[(usize, f64)], what: &str| -> Result<()> {
            for &(k, v) in free {
                if k >= self.free_vars {
                    return Err(Error::InvalidProblem(format!("{what} references undeclared free variable {k}")));
                }
                if !v.is_finite() {
                    return Err(Error::InvalidProblem(format!("{what}: non-finite coefficient")));
                }
            }
            Ok(())
        };
        for (i, c) in self.constraints.iter().enumerate() {
            let what = format!("constraint {i}");
            check_blocks(&c.blocks, &what)?;
            check_free(&c.free, &what)?;
            if !c.rhs.is_finite() {
                return Err(Error::InvalidProblem(format!("{what}: non-finite right-hand side")));
            }
        }
        check_blocks(&self.objective.blocks, "objective")?;
        check_free(&self.objective.free, "objective")?;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Optimal,
    PrimalInfeasible,
    DualInfeasible,
    Indeterminate,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Residuals {
    /// Relative primal residual `||A(X) + F z - b|| / (1 + ||b||)`.
    pub primal: f64,
    /// Relative dual residual.
    pub dual: f64,
    /// Relative duality gap.
    pub gap: f64,
}

/// Farkas ray for primal infeasibility, normalised so `rhs . ray = 1`.
///
/// For any feasible point, `1 = rhs . ray = sum_b <A_b^T ray, X_b> + F^T ray . z`;
/// with `-A^T ray` PSD and `F^T ray = 0` that is impossible.
#[derive(Clone, Debug, PartialEq)]
pub struct InfeasibilityCertificate {
    pub ray: Vec<f64>,
    /// `max(0, -lambda_min(-A^T ray))` over all blocks.
    pub dual_cone_violation: f64,
    /// `||F^T ray||_inf`.
    pub free_violation: f64,
}

#[derive(Clone, Debug)]
pub struct SdpSolution {
    pub status: Status,
    pub blocks: Vec<DMatrix<f64>>,
    pub free: Vec<f64>,
    pub dual: Vec<f64>,
    pub dual_slack: Vec<DMatrix<f64>>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub residuals: Residuals,
    pub iterations: usize,
    pub certificate: Option<InfeasibilityCertificate>,
}

impl SdpSolution {
    /// Smallest eigenvalue over all primal blocks.
    pub fn min_block_eigenvalue(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| b.clone().symmetric_eigenvalues().min())
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Fraction of the distance to the cone boundary taken per step.
    pub step_fraction: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-8,
            max_iter: 120,
            step_fraction: 0.98,
        }
    }
}

/// Relative threshold below which a singular value of the free-variable
/// columns counts as zero.
const FREE_RANK_TOL: f64 = 1e-9;

/// Runs the interior-point solver after removing linear dependence among
/// the free-variable columns, which would make the Newton system singular.
///
/// A dependent direction `v` (`F v = 0`) with `c_f . v != 0` proves the
/// dual infeasible. Otherwise the free variables are re-parametrised on an
/// orthonormal basis of the row space of `F` and mapped back afterwards.
fn run_presolved(problem: &SdpProblem, options: &SolverOptions) -> SdpSolution {
    let nf = problem.free_vars;
    if nf == 0 {
        return solver::run(problem, options);
    }
    let m = problem.constraints.len();
    let mut f = DMatrix::<f64>::zeros(m, nf);
    for (i, c) in problem.constraints.iter().enumerate() {
        for &(k, v) in &c.free {
            f[(i, k)] += v;
        }
    }
    let mut cf = DVector::<f64>::zeros(nf);
    for &(k, v) in &problem.objective.free {
        cf[k] += v;
    }
    // zero rows so that V is square even with fewer constraints than free variables
    let padded = f.clone().resize_vertically(m.max(nf), 0.0);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let top = svd.singular_values.amax();
    let keep: Vec<usize> = (0..nf)
        .filter(|&k| top > 0.0 && svd.singular_values[k] > FREE_RANK_TOL * top)
        .collect();
    if keep.len() == nf {
        return solver::run(problem, options);
    }
    let scale = 1.0 + cf.amax();
    let unbounded = (0..nf)
        .filter(|k| !keep.contains(k))
        .any(|k| v_t.row(k).transpose().dot(&cf).abs() > FREE_RANK_TOL * scale);
    if unbounded {
        return SdpSolution {
            status: Status::DualInfeasible,
            blocks: problem.block_sizes.iter().map(|&s| DMatrix::zeros(s, s)).collect(),
            free: vec![0.0; nf],
            dual: vec![0.0; m],
            dual_slack: problem.block_sizes.iter().map(|&s| DMatrix::zeros(s, s)).collect(),
            primal_objective: f64::NEG_INFINITY,
            dual_objective: f64::NEG_INFINITY,
            residuals: Residuals::default(),
            iterations: 0,
            certificate: None,
        };
    }
    let q = DMatrix::from_fn(nf, keep.len(), |r, c| v_t[(keep[c], r)]);
    let fq = &f * &q;
    let cq = q.transpose() * &cf;
    let mut reduced = problem.clone();
    reduced.free_vars = keep.len();
    for (i, c) in reduced.constraints.iter_mut().enumerate() {
        c.free = (0..keep.len()).map(|k| (k, fq[(i, k)])).filter(|e| e.1 != 0.0).collect();
    }
    reduced.objective.free = (0..keep.len()).map(|k| (k, cq[k])).filter(|e| e.1 != 0.0).collect();
    let mut sol = solver::run(&reduced, options);
    let w = DVector::from_column_slice(&sol.free);
    sol.free = (&q * w).iter().copied().collect();
    sol
}

pub fn solve(problem: &SdpProblem, options: &SolverOptions) -> Result<SdpSolution> {
    problem.validate()?;
    if !(options.tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    Ok(run_presolved(problem, options))
}

/// Largest `lambda` such that every PSD block can be written as
/// `Y_b + lambda I` with `Y_b` PSD while the constraints hold.
///
/// A positive margin certifies a strictly feasible point; a negative one
/// means no strictly feasible point exists. Returns `+inf` when nothing
/// bounds the margin (e.g. no constraints) and `-inf` when the affine
/// constraints alone are inconsistent. The returned solution is expressed
/// in the original variables.
pub fn solve_margin(problem: &SdpProblem, options: &SolverOptions) -> Result<(f64, SdpSolution)> {
    problem.validate()?;
    if !problem.objective.is_zero() {
        return Err(Error::InvalidArgument("margin problems must have a zero objective".into()));
    }
    let lambda = problem.free_vars;
    if problem.constraints.is_empty() {
        let blocks = problem
            .block_sizes
            .iter()
            .map(|&s| DMatrix::identity(s, s))
            .collect();
        let sol = SdpSolution {
            status: Status::DualInfeasible,
            blocks,
            free: vec![0.0; problem.free_vars],
            dual: Vec::new(),
            dual_slack: Vec::new(),
            primal_objective: 0.0,
            dual_objective: 0.0,
            residuals: Residuals::default(),
            iterations: 0,
            certificate: None,
        };
        return Ok((f64::INFINITY, sol));
    }
    let mut shifted = problem.clone();
    shifted.free_vars += 1;
    for c in &mut shifted.constraints {
        let trace: f64 = c
            .blocks
            .iter()
            .flat_map(|b| b.entries.iter())
            .filter(|e| e.0 == e.1)
            .map(|e| e.2)
            .sum();
        if trace != 0.0 {
            c.free.push((lambda, trace));
        }
    }
    shifted.objective = Objective {
        blocks: Vec::new(),
        free: vec![(lambda, -1.0)],
    };
    let mut sol = run_presolved(&shifted, options);
    let margin = match sol.status {
        Status::DualInfeasible => f64::INFINITY,
        Status::PrimalInfeasible => f64::NEG_INFINITY,
        _ => sol.free[lambda],
    };
    if margin.is_finite() {
        for b in &mut sol.blocks {
            let n = b.nrows();
            *b += DMatrix::identity(n, n) * margin;
        }
    }
    sol.free.truncate(problem.free_vars);
    sol.primal_objective = 0.0;
    Ok((margin, sol))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace_one(size: usize) -> SdpProblem {
        let mut p = SdpProblem::new(vec![size], 0);
        p.constraints.push(Constraint {
            blocks: vec![BlockEntries {
                block: 0,
                entries: (0..size).map(|i| (i, i, 1.0)).collect(),
            }],
            free: vec![],
            rhs: 1.0,
        });
        p
    }

    #[test]
    fn trace_normalized_feasibility() {
        let sol = solve(&trace_one(2), &SolverOptions::default()).unwrap();
        assert_eq!(sol.status, Status::Optimal);
        assert!((sol.blocks[0].trace() - 1.0).abs() < 1e-7);
        assert!(sol.primal_objective.abs() < 1e-7);
        assert!(sol.min_block_eigenvalue() > -1e-9);
    }

    #[test]
    fn scalar_lp_as_sdp() {
        // minimize t subject to t - s = 1, s >= 0 (size-1 block), t free
        let mut p = SdpProblem::new(vec![1], 1);
        p.constraints.push(Constraint {
            blocks: vec![BlockEntries { block: 0, entries: vec![(0, 0, -1.0)] }],
            free: vec![(0, 1.0)],
            rhs: 1.0,
        });
        p.objective.free.push((0, 1.0));
        let sol = solve(&p, &SolverOptions::default()).unwrap();
        assert_eq!(sol.status, Status::Optimal);
        assert!((sol.free[0] - 1.0).abs() < 1e-6, "{}", sol.free[0]);
    }

    #[test]
    fn undeclared_block_rejected() {
        let mut p = trace_one(2);
        p.constraints[0].blocks[0].block = 3;
        assert!(matches!(solve(&p, &SolverOptions::default()), Err(Error::InvalidProblem(_))));
        let mut q = trace_one(2);
        q.constraints[0].blocks[0].entries.push((2, 0, 1.0));
        assert!(q.validate().is_err());
    }

    #[test]
    fn infeasible_trace_detected() {
        // trace(X) = -1 with X PSD
        let mut p = trace_one(3);
        p.constraints[0].rhs = -1.0;
        let sol = solve(&p, &SolverOptions::default()).unwrap();
        assert_eq!(sol.status, Status::PrimalInfeasible);
        let cert = sol.certificate.unwrap();
        assert!(cert.dual_cone_violation <= 1e-6);
        assert!(cert.free_violation <= 1e-6);
    }

    #[test]
    fn unbounded_detected() {
        // minimize -X_00 subject to X_11 = 1
        let mut p = SdpProblem::new(vec![2], 0);
        p.constraints.push(Constraint {
            blocks: vec![BlockEntries { block: 0, entries: vec![(1, 1, 1.0)] }],
            free: vec![],
            rhs: 1.0,
        });
        p.objective.blocks.push(BlockEntries { block: 0, entries: vec![(0, 0, -1.0)] });
        let sol = solve(&p, &SolverOptions::default()).unwrap();
        assert_eq!(sol.status, Status::DualInfeasible);
    }

    #[test]
    fn margin_of_trace_problem() {
        let (margin, sol) = solve_margin(&trace_one(2), &SolverOptions::default()).unwrap();
        assert!((margin - 0.5).abs() < 1e-6, "{margin}");
        assert!((sol.blocks[0].trace() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn margin_without_constraints_is_unbounded() {
        let p = SdpProblem::new(vec![3], 0);
        let (margin, _) = solve_margin(&p, &SolverOptions::default()).unwrap();
        assert_eq!(margin, f64::INFINITY);
    }

    fn two_free_one_row(cf: [f64; 2]) -> SdpProblem {
        // x + z0 + z1 = 1
        let mut p = SdpProblem::new(vec![1], 2);
        p.constraints.push(Constraint {
            blocks: vec![BlockEntries {
                block: 0,
                entries: vec![(0, 0, 1.0)],
            }],
            free: vec![(0, 1.0), (1, 1.0)],
            rhs: 1.0,
        });
        p.objective = Objective {
            blocks: vec![BlockEntries {
                block: 0,
                entries: vec![(0, 0, 2.0)],
            }],
            free: vec![(0, cf[0]), (1, cf[1])],
        };
        p
    }

    #[test]
    fn dependent_free_columns() {
        let opts = SolverOptions::default();
        let sol = solve(&two_free_one_row([1.0, -1.0]), &opts).unwrap();
        assert_eq!(sol.status, Status::DualInfeasible);
        let sol = solve(&two_free_one_row([1.0, 1.0]), &opts).unwrap();
        assert_eq!(sol.status, Status::Optimal);
        assert!((sol.primal_objective - 1.0).abs() < 1e-6);
        assert!((sol.free[0] + sol.free[1] - 1.0).abs() < 1e-6);
        assert!((sol.free[0] - sol.free[1]).abs() < 1e-6);
    }

    #[test]
    fn margin_of_inconsistent_system() {
        // x_00 = 1 and x_00 = 2
        let mut p = SdpProblem::new(vec![1], 0);
        for rhs in [1.0, 2.0] {
            p.constraints.push(Constraint {
                blocks: vec![BlockEntries { block: 0, entries: vec![(0, 0, 1.0)] }],
                free: vec![],
                rhs,
            });
        }
        let (margin, _) = solve_margin(&p, &SolverOptions::default()).unwrap();
        assert_eq!(margin, f64::NEG_INFINITY);
    }
}
