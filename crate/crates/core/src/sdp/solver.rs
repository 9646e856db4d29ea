//! Primal-dual interior-point method on the homogeneous self-dual
//! embedding, HKM search direction, Mehrotra predictor-corrector.
//!
//! Embedding variables: `(X, z, y, S, tau, kappa)` with
//!
//! ```text
//! A(X) + F z - b tau                    = 0
//! A^T y + S - C tau                     = 0
//! F^T y - c_f tau                       = 0
//! b.y - <C, X> - c_f.z - kappa          = 0
//! X, S PSD;  tau, kappa >= 0
//! ```
//!
//! All four residuals shrink by the same factor per step, so `tau -> 0`
//! with `kappa > 0` exposes an infeasibility ray.

use nalgebra::{DMatrix, DVector};

use super::{InfeasibilityCertificate, Residuals, SdpProblem, SdpSolution, SolverOptions, Status};

#[derive(Clone, Copy)]
struct Triple {
    p: usize,
    q: usize,
    w: f64,
}

/// Expands symmetric entries into `A = sum w e_p e_q^T`.
fn expand(entries: &[(usize, usize, f64)]) -> Vec<Triple> {
    let mut out = Vec::with_capacity(2 * entries.len());
    for &(i, j, v) in entries {
        if v == 0.0 {
            continue;
        }
        out.push(Triple { p: i, q: j, w: v });
        if i != j {
            out.push(Triple { p: j, q: i, w: v });
        }
    }
    out
}

struct Prepared {
    sizes: Vec<usize>,
    m: usize,
    nf: usize,
    /// Per block: the constraints touching it with their expanded entries.
    by_block: Vec<Vec<(usize, Vec<Triple>)>>,
    f: DMatrix<f64>,
    b: DVector<f64>,
    c: Vec<DMatrix<f64>>,
    cf: DVector<f64>,
    /// Frobenius-type norm of the constraint operator `(A, F)`.
    anorm: f64,
}

impl Prepared {
    fn new(p: &SdpProblem) -> Self {
        let m = p.constraints.len();
        let nf = p.free_vars;
        let mut by_block: Vec<Vec<(usize, Vec<Triple>)>> = vec![Vec::new(); p.block_sizes.len()];
        let mut f = DMatrix::<f64>::zeros(m, nf);
        let mut b = DVector::zeros(m);
        for (i, con) in p.constraints.iter().enumerate() {
            let mut per_block: Vec<Option<Vec<(usize, usize, f64)>>> = vec![None; p.block_sizes.len()];
            for be in &con.blocks {
                per_block[be.block]
                    .get_or_insert_with(Vec::new)
                    .extend(be.entries.iter().copied());
            }
            for (blk, entries) in per_block.into_iter().enumerate() {
                if let Some(e) = entries {
                    let t = expand(&e);
                    if !t.is_empty() {
                        by_block[blk].push((i, t));
                    }
                }
            }
            for &(k, v) in &con.free {
                f[(i, k)] += v;
            }
            b[i] = con.rhs;
        }
        let mut c: Vec<DMatrix<f64>> = p.block_sizes.iter().map(|&s| DMatrix::zeros(s, s)).collect();
        for be in &p.objective.blocks {
            for t in expand(&be.entries) {
                c[be.block][(t.p, t.q)] += t.w;
            }
        }
        let mut cf = DVector::zeros(nf);
        for &(k, v) in &p.objective.free {
            cf[k] += v;
        }
        let a_sq: f64 = by_block
            .iter()
            .flat_map(|rows| rows.iter().flat_map(|(_, t)| t.iter()))
            .map(|t| t.w * t.w)
            .sum();
        let anorm = (a_sq + f.norm_squared()).sqrt();
        Prepared {
            anorm,
            sizes: p.block_sizes.clone(),
            m,
            nf,
            by_block,
            f,
            b,
            c,
            cf,
        }
    }

    fn nu(&self) -> f64 {
        self.sizes.iter().sum::<usize>() as f64
    }

    /// `<A_i, W>` for every constraint (W need not be symmetric).
    fn a_op(&self, w: &[DMatrix<f64>]) -> DVector<f64> {
        let mut out = DVector::zeros(self.m);
        for (blk, list) in self.by_block.iter().enumerate() {
            let wb = &w[blk];
            for (i, triples) in list {
                out[*i] += triples.iter().map(|t| t.w * wb[(t.q, t.p)]).sum::<f64>();
            }
        }
        out
    }

    fn at_op(&self, y: &DVector<f64>) -> Vec<DMatrix<f64>> {
        let mut out: Vec<DMatrix<f64>> = self.sizes.iter().map(|&s| DMatrix::zeros(s, s)).collect();
        for (blk, list) in self.by_block.iter().enumerate() {
            for (i, triples) in list {
                let yi = y[*i];
                if yi == 0.0 {
                    continue;
                }
                for t in triples {
                    out[blk][(t.p, t.q)] += yi * t.w;
                }
            }
        }
        out
    }

    /// `M_ij = tr(A_i X A_j Z)`.
    fn schur(&self, x: &[DMatrix<f64>], z: &[DMatrix<f64>]) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.m, self.m);
        for (blk, list) in self.by_block.iter().enumerate() {
            let xb = &x[blk];
            let zb = &z[blk];
            for (a, (i, ti)) in list.iter().enumerate() {
                for (j, tj) in &list[a..] {
                    let mut v = 0.0;
                    for t1 in ti {
                        for t2 in tj {
                            v += t1.w * t2.w * xb[(t1.q, t2.p)] * zb[(t2.q, t1.p)];
                        }
                    }
                    m[(*i, *j)] += v;
                    if i != j {
                        m[(*j, *i)] += v;
                    }
                }
            }
        }
        m
    }
}

fn inner(a: &[DMatrix<f64>], b: &[DMatrix<f64>]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

fn frob_sq(a: &[DMatrix<f64>]) -> f64 {
    a.iter().map(|x| x.norm_squared()).sum()
}

fn sym(a: DMatrix<f64>) -> DMatrix<f64> {
    let t = a.transpose();
    (a + t) * 0.5
}

fn inverse_spd(s: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    if s.nrows() == 1 {
        return (s[(0, 0)] > 0.0).then(|| DMatrix::from_element(1, 1, 1.0 / s[(0, 0)]));
    }
    s.clone().cholesky().map(|c| c.inverse())
}

/// Largest `alpha` with `x + alpha dx` PSD (infinite if unbounded).
fn max_step(x: &DMatrix<f64>, dx: &DMatrix<f64>) -> f64 {
    if x.nrows() == 1 {
        return if dx[(0, 0)] < 0.0 {
            -x[(0, 0)] / dx[(0, 0)]
        } else {
            f64::INFINITY
        };
    }
    let Some(chol) = x.clone().cholesky() else {
        return 0.0;
    };
    let l = chol.l();
    let Some(t1) = l.solve_lower_triangular(dx) else {
        return 0.0;
    };
    let Some(t) = l.solve_lower_triangular(&t1.transpose()) else {
        return 0.0;
    };
    let lmin = sym(t).symmetric_eigenvalues().min();
    if lmin < 0.0 {
        -1.0 / lmin
    } else {
        f64::INFINITY
    }
}

fn scalar_step(v: f64, dv: f64) -> f64 {
    if dv < 0.0 {
        -v / dv
    } else {
        f64::INFINITY
    }
}

/// Factorization of `[M F; F^T 0]`, solved with one step of iterative
/// refinement against the unregularized system.
struct KktFactor {
    m: DMatrix<f64>,
    kind: KktKind,
}

enum KktKind {
    Schur {
        chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
        minv_f: DMatrix<f64>,
        reduced: Option<nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>>,
    },
    Full(nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>, usize),
}

impl KktFactor {
    fn new(m: DMatrix<f64>, f: &DMatrix<f64>) -> Option<Self> {
        let nf = f.ncols();
        let dim = m.nrows();
        let scale = (0..dim).map(|i| m[(i, i)].abs()).fold(0.0, f64::max).max(1e-300);
        for reg in [0.0, 1e-14, 1e-12, 1e-10] {
            let mut mr = m.clone();
            for i in 0..dim {
                mr[(i, i)] += reg * scale;
            }
            if let Some(chol) = mr.clone().cholesky() {
                let minv_f = chol.solve(f);
                let reduced = if nf > 0 {
                    let lu = (f.transpose() * &minv_f).lu();
                    lu.is_invertible().then_some(lu)
                } else {
                    None
                };
                if nf == 0 || reduced.is_some() {
                    return Some(KktFactor {
                        m,
                        kind: KktKind::Schur { chol, minv_f, reduced },
                    });
                }
            }
            let mut k = DMatrix::zeros(dim + nf, dim + nf);
            k.view_mut((0, 0), (dim, dim)).copy_from(&mr);
            k.view_mut((0, dim), (dim, nf)).copy_from(f);
            k.view_mut((dim, 0), (nf, dim)).copy_from(&f.transpose());
            let lu = k.lu();
            if lu.is_invertible() {
                return Some(KktFactor {
                    m,
                    kind: KktKind::Full(lu, dim),
                });
            }
        }
        None
    }

    fn solve_once(&self, f: &DMatrix<f64>, r1: &DVector<f64>, r2: &DVector<f64>) -> Option<(DVector<f64>, DVector<f64>)> {
        match &self.kind {
            KktKind::Schur { chol, minv_f, reduced } => {
                let minv_r1 = chol.solve(r1);
                match reduced {
                    None => Some((minv_r1, DVector::zeros(0))),
                    Some(lu) => {
                        let rhs = f.transpose() * &minv_r1 - r2;
                        let dz = lu.solve(&rhs)?;
                        let dy = minv_r1 - minv_f * &dz;
                        Some((dy, dz))
                    }
                }
            }
            KktKind::Full(lu, dim) => {
                let mut rhs = DVector::zeros(dim + r2.len());
                rhs.rows_mut(0, *dim).copy_from(r1);
                rhs.rows_mut(*dim, r2.len()).copy_from(r2);
                let sol = lu.solve(&rhs)?;
                Some((sol.rows(0, *dim).into_owned(), sol.rows(*dim, r2.len()).into_owned()))
            }
        }
    }

    fn solve(&self, f: &DMatrix<f64>, r1: &DVector<f64>, r2: &DVector<f64>) -> Option<(DVector<f64>, DVector<f64>)> {
        let (mut y, mut z) = self.solve_once(f, r1, r2)?;
        for _ in 0..2 {
            let e1 = r1 - &self.m * &y - f * &z;
            let e2 = r2 - f.transpose() * &y;
            let (cy, cz) = self.solve_once(f, &e1, &e2)?;
            y += cy;
            z += cz;
        }
        Some((y, z))
    }
}

#[derive(Clone)]
struct Iterate {
    x: Vec<DMatrix<f64>>,
    z: DVector<f64>,
    y: DVector<f64>,
    s: Vec<DMatrix<f64>>,
    tau: f64,
    kappa: f64,
}

struct Direction {
    dx: Vec<DMatrix<f64>>,
    dz: DVector<f64>,
    dy: DVector<f64>,
    ds: Vec<DMatrix<f64>>,
    dtau: f64,
    dkappa: f64,
}

/// Quantities fixed within one iteration.
struct Linearization {
    sinv: Vec<DMatrix<f64>>,
    kkt: KktFactor,
    rp: DVector<f64>,
    rd: Vec<DMatrix<f64>>,
    rf: DVector<f64>,
    rg: f64,
    mu: f64,
    /// `A(X rd S^-1)` and `<C, X rd S^-1>`.
    a_rd: DVector<f64>,
    c_rd: f64,
    g: DVector<f64>,
    h: f64,
    qy: DVector<f64>,
    qz: DVector<f64>,
}

struct Solver<'a> {
    d: &'a Prepared,
    opts: &'a SolverOptions,
}

impl Solver<'_> {
    fn residuals(&self, it: &Iterate) -> (DVector<f64>, Vec<DMatrix<f64>>, DVector<f64>, f64) {
        let d = self.d;
        let rp = d.a_op(&it.x) + &d.f * &it.z - &d.b * it.tau;
        let aty = d.at_op(&it.y);
        let rd: Vec<DMatrix<f64>> = aty
            .into_iter()
            .zip(&it.s)
            .zip(&d.c)
            .map(|((a, s), c)| a + s - c * it.tau)
            .collect();
        let rf = d.f.transpose() * &it.y - &d.cf * it.tau;
        let rg = d.b.dot(&it.y) - inner(&d.c, &it.x) - d.cf.dot(&it.z) - it.kappa;
        (rp, rd, rf, rg)
    }

    fn linearize(&self, it: &Iterate) -> Option<Linearization> {
        let d = self.d;
        let (rp, rd, rf, rg) = self.residuals(it);
        let mu = (inner(&it.x, &it.s) + it.tau * it.kappa) / (d.nu() + 1.0);
        let sinv: Vec<DMatrix<f64>> = it.s.iter().map(inverse_spd).collect::<Option<_>>()?;
        let schur = d.schur(&it.x, &sinv);
        let kkt = KktFactor::new(schur, &d.f)?;
        let x_rd_z: Vec<DMatrix<f64>> = it
            .x
            .iter()
            .zip(&rd)
            .zip(&sinv)
            .map(|((x, r), z)| x * r * z)
            .collect();
        let a_rd = d.a_op(&x_rd_z);
        let c_rd = inner(&d.c, &x_rd_z);
        let x_c_z: Vec<DMatrix<f64>> = it
            .x
            .iter()
            .zip(&d.c)
            .zip(&sinv)
            .map(|((x, c), z)| x * c * z)
            .collect();
        let g = d.a_op(&x_c_z);
        let h = inner(&d.c, &x_c_z);
        let (qy, qz) = kkt.solve(&d.f, &(&d.b + &g), &d.cf)?;
        Some(Linearization {
            sinv,
            kkt,
            rp,
            rd,
            rf,
            rg,
            mu,
            a_rd,
            c_rd,
            g,
            h,
            qy,
            qz,
        })
    }

    fn direction(&self, it: &Iterate, lin: &Linearization, sigma: f64, corrector: Option<&Direction>) -> Option<Direction> {
        let d = self.d;
        let eta = 1.0 - sigma;
        let rc: Vec<DMatrix<f64>> = it
            .x
            .iter()
            .zip(&lin.sinv)
            .enumerate()
            .map(|(blk, (x, z))| {
                let mut r = z * (sigma * lin.mu) - x;
                if let Some(a) = corrector {
                    r -= sym(&a.dx[blk] * &a.ds[blk] * z);
                }
                r
            })
            .collect();
        let rhs_tk = sigma * lin.mu - it.tau * it.kappa - corrector.map_or(0.0, |a| a.dtau * a.dkappa);
        let r1 = -(&lin.rp * eta) - d.a_op(&rc) - &lin.a_rd * eta;
        let r2 = -(&lin.rf * eta);
        let r3 = -eta * lin.rg + inner(&d.c, &rc) + eta * lin.c_rd + rhs_tk / it.tau;
        let (py, pz) = lin.kkt.solve(&d.f, &r1, &r2)?;
        let bmg = &d.b - &lin.g;
        let denom = bmg.dot(&lin.qy) - d.cf.dot(&lin.qz) + lin.h + it.kappa / it.tau;
        let dtau = (r3 - bmg.dot(&py) + d.cf.dot(&pz)) / denom;
        if !dtau.is_finite() {
            return None;
        }
        let dy = py + &lin.qy * dtau;
        let dz = pz + &lin.qz * dtau;
        let aty = d.at_op(&dy);
        let ds: Vec<DMatrix<f64>> = lin
            .rd
            .iter()
            .zip(aty)
            .zip(&d.c)
            .map(|((r, a), c)| -(r * eta) - a + c * dtau)
            .collect();
        let dx: Vec<DMatrix<f64>> = rc
            .into_iter()
            .zip(&it.x)
            .zip(&ds)
            .zip(&lin.sinv)
            .map(|(((r, x), s), z)| r - sym(x * s * z))
            .collect();
        let dkappa = (rhs_tk - it.kappa * dtau) / it.tau;
        Some(Direction {
            dx,
            dz,
            dy,
            ds,
            dtau,
            dkappa,
        })
    }

    fn step_length(&self, it: &Iterate, dir: &Direction) -> f64 {
        let mut a = scalar_step(it.tau, dir.dtau).min(scalar_step(it.kappa, dir.dkappa));
        for (x, dx) in it.x.iter().zip(&dir.dx) {
            a = a.min(max_step(x, dx));
        }
        for (s, ds) in it.s.iter().zip(&dir.ds) {
            a = a.min(max_step(s, ds));
        }
        a
    }

    fn advance(it: &Iterate, dir: &Direction, alpha: f64) -> Iterate {
        Iterate {
            x: it.x.iter().zip(&dir.dx).map(|(x, dx)| sym(x + dx * alpha)).collect(),
            z: &it.z + &dir.dz * alpha,
            y: &it.y + &dir.dy * alpha,
            s: it.s.iter().zip(&dir.ds).map(|(s, ds)| sym(s + ds * alpha)).collect(),
            tau: it.tau + alpha * dir.dtau,
            kappa: it.kappa + alpha * dir.dkappa,
        }
    }

    fn classify(&self, it: &Iterate) -> (Option<Status>, Residuals, Option<InfeasibilityCertificate>) {
        let d = self.d;
        let tol = self.opts.tol;
        let (rp, rd, rf, _) = self.residuals(it);
        let bnorm = d.b.norm();
        let cnorm = (frob_sq(&d.c) + d.cf.norm_squared()).sqrt();
        let pobj = (inner(&d.c, &it.x) + d.cf.dot(&it.z)) / it.tau;
        let dobj = d.b.dot(&it.y) / it.tau;
        let res = Residuals {
            primal: rp.norm() / it.tau / (1.0 + bnorm),
            dual: (frob_sq(&rd) + rf.norm_squared()).sqrt() / it.tau / (1.0 + cnorm),
            gap: (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs()),
        };
        if res.primal <= tol && res.dual <= tol && res.gap <= tol {
            return (Some(Status::Optimal), res, None);
        }
        let by = d.b.dot(&it.y);
        if by > 0.0 {
            let aty = d.at_op(&it.y);
            let sum: Vec<DMatrix<f64>> = aty.iter().zip(&it.s).map(|(a, s)| a + s).collect();
            let viol = (frob_sq(&sum).sqrt() + (d.f.transpose() * &it.y).norm()) / by;
            if viol <= tol {
                let ray = &it.y / by;
                let neg_aty = d.at_op(&ray);
                let cone = neg_aty
                    .into_iter()
                    .map(|a| (-a).symmetric_eigenvalues().min())
                    .fold(f64::INFINITY, f64::min);
                let free = (d.f.transpose() * &ray).amax();
                let cert = InfeasibilityCertificate {
                    ray: ray.iter().copied().collect(),
                    dual_cone_violation: (-cone).max(0.0),
                    free_violation: free,
                };
                return (Some(Status::PrimalInfeasible), res, Some(cert));
            }
        }
        // Ray test relative to the operator norm so that row scaling does not
        // matter; tau < kappa keeps converging bounded problems out.
        let cx = inner(&d.c, &it.x) + d.cf.dot(&it.z);
        if cx < 0.0 && it.tau < it.kappa {
            let ax = d.a_op(&it.x) + &d.f * &it.z;
            if ax.norm() / -cx <= tol * d.anorm.max(1.0) {
                return (Some(Status::DualInfeasible), res, None);
            }
        }
        (None, res, None)
    }

    fn finish(&self, it: &Iterate, status: Status, residuals: Residuals, iterations: usize, certificate: Option<InfeasibilityCertificate>) -> SdpSolution {
        let d = self.d;
        let t = it.tau;
        let scale = if status == Status::Optimal || status == Status::Indeterminate { 1.0 / t } else { 1.0 };
        SdpSolution {
            status,
            blocks: it.x.iter().map(|x| x * scale).collect(),
            free: it.z.iter().map(|v| v * scale).collect(),
            dual: it.y.iter().map(|v| v * scale).collect(),
            dual_slack: it.s.iter().map(|s| s * scale).collect(),
            primal_objective: (inner(&d.c, &it.x) + d.cf.dot(&it.z)) / t,
            dual_objective: d.b.dot(&it.y) / t,
            residuals,
            iterations,
            certificate,
        }
    }

    fn run(&self) -> SdpSolution {
        let d = self.d;
        let mut it = Iterate {
            x: d.sizes.iter().map(|&s| DMatrix::identity(s, s)).collect(),
            z: DVector::zeros(d.nf),
            y: DVector::zeros(d.m),
            s: d.sizes.iter().map(|&s| DMatrix::identity(s, s)).collect(),
            tau: 1.0,
            kappa: 1.0,
        };
        let mut stalls = 0;
        for iter in 0..self.opts.max_iter {
            let (status, res, cert) = self.classify(&it);
            if let Some(status) = status {
                return self.finish(&it, status, res, iter, cert);
            }
            let Some(lin) = self.linearize(&it) else {
                return self.finish(&it, Status::Indeterminate, res, iter, None);
            };
            let Some(affine) = self.direction(&it, &lin, 0.0, None) else {
                return self.finish(&it, Status::Indeterminate, res, iter, None);
            };
            let a_aff = self.step_length(&it, &affine).min(1.0);
            let trial = Self::advance(&it, &affine, a_aff);
            let mu_aff = (inner(&trial.x, &trial.s) + trial.tau * trial.kappa) / (d.nu() + 1.0);
            let sigma = (mu_aff / lin.mu).clamp(0.0, 1.0).powi(3);
            let Some(dir) = self.direction(&it, &lin, sigma, Some(&affine)) else {
                return self.finish(&it, Status::Indeterminate, res, iter, None);
            };
            let alpha = (self.opts.step_fraction * self.step_length(&it, &dir)).min(1.0);
            if !(alpha > 1e-10) {
                stalls += 1;
                if stalls > 3 {
                    return self.finish(&it, Status::Indeterminate, res, iter, None);
                }
            }
            it = Self::advance(&it, &dir, alpha);
            if !(it.tau > 0.0 && it.kappa >= 0.0) || it.tau.is_nan() {
                return self.finish(&it, Status::Indeterminate, res, iter, None);
            }
        }
        let (status, res, cert) = self.classify(&it);
        self.finish(&it, status.unwrap_or(Status::Indeterminate), res, self.opts.max_iter, cert)
    }
}

pub(super) fn run(problem: &SdpProblem, opts: &SolverOptions) -> SdpSolution {
    let prepared = Prepared::new(problem);
    Solver { d: &prepared, opts }.run()
}
