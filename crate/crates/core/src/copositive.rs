//! Copositivity oracles and the Horn-matrix family.

use num_traits::{One, Signed, Zero};

use crate::certify::{certify_encoding, CertificateKind, RoundingOptions, SosCertificate, Target, WeightedSquare};
use crate::error::{Error, Result};
use crate::gram::{build_reznick, classify_margin, margin, GramEncoding, Membership, MARGIN_TOLERANCE};
use crate::poly::{Monomial, Polynomial};
use crate::rational::int;
use crate::sdp::{self, BlockEntries, Constraint, SdpProblem, SolverOptions};
use crate::symmat::{PsdCheck, SymmetricMatrix};
use crate::{ExactMatrix, FloatMatrix, Rational};

/// Default subdivision depth of [`is_copositive`].
pub const DEFAULT_MAX_DEPTH: u32 = 12;

#[derive(Clone, Debug, PartialEq)]
pub enum CopVerdict {
    Copositive,
    /// `witness >= 0` with `witness^T M witness = value < 0`.
    NotCopositive { witness: Vec<Rational>, value: Rational },
    /// Some simplex was still undecided at this depth.
    Unknown { depth: u32 },
}

fn quad(m: &ExactMatrix, a: &[Rational], b: &[Rational]) -> Rational {
    let n = m.n();
    let mut acc = Rational::zero();
    for i in 0..n {
        if a[i].is_zero() {
            continue;
        }
        let mut row = Rational::zero();
        for j in 0..n {
            if !b[j].is_zero() {
                row += m.get(i, j) * &b[j];
            }
        }
        acc += &a[i] * row;
    }
    acc
}

fn dist2(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).fold(Rational::zero(), |s, v| s + v)
}

/// Decides copositivity by simplicial subdivision of the standard simplex.
///
/// A simplex with vertex matrix `V` is discharged when `V^T M V >= 0`
/// entrywise; a vertex with negative value is an exact witness; otherwise
/// the longest edge is bisected (ties: lowest vertex pair) until
/// `max_depth`. The search keeps looking for witnesses after an undecided
/// simplex, so `Unknown` means no witness was found either.
pub fn is_copositive(m: &ExactMatrix, max_depth: u32) -> CopVerdict {
    let n = m.n();
    if n == 0 {
        return CopVerdict::Copositive;
    }
    let start: Vec<Vec<Rational>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { Rational::one() } else { Rational::zero() }).collect())
        .collect();
    let mut stack = vec![(start, 0u32)];
    let mut undecided = false;
    while let Some((verts, depth)) = stack.pop() {
        let mut q = vec![vec![Rational::zero(); n]; n];
        let mut discharged = true;
        for i in 0..n {
            for j in i..n {
                let v = quad(m, &verts[i], &verts[j]);
                if i == j && v.is_negative() {
                    return CopVerdict::NotCopositive {
                        witness: verts[i].clone(),
                        value: v,
                    };
                }
                if v.is_negative() {
                    discharged = false;
                }
                q[i][j] = v;
            }
        }
        if discharged {
            continue;
        }
        // The midpoint of an edge with a negative cross term may already be a witness.
        for i in 0..n {
            for j in i + 1..n {
                let v = &q[i][i] + &q[j][j] + &q[i][j] + &q[i][j];
                if v.is_negative() {
                    let witness = verts[i].iter().zip(&verts[j]).map(|(a, b)| a + b).collect();
                    return CopVerdict::NotCopositive { witness, value: v };
                }
            }
        }
        if depth >= max_depth {
            undecided = true;
            continue;
        }
        let mut best = (Rational::zero(), 0, 0);
        for i in 0..n {
            for j in i + 1..n {
                let d = dist2(&verts[i], &verts[j]);
                if d > best.0 {
                    best = (d, i, j);
                }
            }
        }
        let (_, i, j) = best;
        let half = Rational::new(1.into(), 2.into());
        let mid: Vec<Rational> = verts[i].iter().zip(&verts[j]).map(|(a, b)| (a + b) * &half).collect();
        let mut left = verts.clone();
        left[j] = mid.clone();
        let mut right = verts;
        right[i] = mid;
        // Depth-first, lower half first.
        stack.push((right, depth + 1));
        stack.push((left, depth + 1));
    }
    if undecided {
        CopVerdict::Unknown { depth: max_depth }
    } else {
        CopVerdict::Copositive
    }
}

/// Outcome of the `K^(0) = PSD + nonnegative` test.
#[derive(Clone, Debug, PartialEq)]
pub enum K0Verdict {
    /// `M = P + N`, `P` PSD, `N` entrywise nonnegative.
    Yes { p: FloatMatrix, n: FloatMatrix, margin: f64 },
    No { margin: f64 },
    Indeterminate { margin: f64 },
}

/// The SDP behind [`in_k0`]: a PSD block for `P`, size-1 blocks for the
/// entries `N_ij` (`i <= j`), and `P_ij + N_ij = M_ij`.
pub fn k0_problem(m: &ExactMatrix) -> SdpProblem {
    let n = m.n();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    let mut sizes = vec![n];
    sizes.resize(1 + pairs.len(), 1);
    let mut p = SdpProblem::new(sizes, 0);
    for (k, &(i, j)) in pairs.iter().enumerate() {
        let v = if i == j { 1.0 } else { 0.5 };
        p.constraints.push(Constraint {
            blocks: vec![
                BlockEntries {
                    block: 0,
                    entries: vec![(i, j, v)],
                },
                BlockEntries {
                    block: k + 1,
                    entries: vec![(0, 0, 1.0)],
                },
            ],
            free: vec![],
            rhs: crate::rational::to_f64(m.get(i, j)),
        });
    }
    p
}

pub fn in_k0(m: &ExactMatrix, options: &SolverOptions) -> Result<K0Verdict> {
    let n = m.n();
    if m.psd_check().is_psd() {
        return Ok(K0Verdict::Yes {
            p: m.to_f64(),
            n: SymmetricMatrix::zeros(n),
            margin: f64::INFINITY,
        });
    }
    if m.entrywise_nonneg() {
        return Ok(K0Verdict::Yes {
            p: SymmetricMatrix::zeros(n),
            n: m.to_f64(),
            margin: f64::INFINITY,
        });
    }
    let problem = k0_problem(m);
    let (mg, sol) = sdp::solve_margin(&problem, options)?;
    Ok(match classify_margin(mg, MARGIN_TOLERANCE) {
        Membership::Member => {
            let p = SymmetricMatrix::from_fn(n, |i, j| sol.blocks[0][(i, j)]);
            let mut k = 1;
            let mut nn = SymmetricMatrix::zeros(n);
            for i in 0..n {
                for j in i..n {
                    nn.set(i, j, sol.blocks[k][(0, 0)]);
                    k += 1;
                }
            }
            K0Verdict::Yes { p, n: nn, margin: mg }
        }
        Membership::NonMember => K0Verdict::No { margin: mg },
        Membership::Indeterminate => K0Verdict::Indeterminate { margin: mg },
    })
}

/// The Horn matrix.
pub fn horn() -> ExactMatrix {
    const ROWS: [[i64; 5]; 5] = [
        [1, 1, -1, -1, 1],
        [1, 1, 1, -1, -1],
        [-1, 1, 1, 1, -1],
        [-1, -1, 1, 1, 1],
        [1, -1, -1, 1, 1],
    ];
    SymmetricMatrix::from_fn(5, |i, j| int(ROWS[i][j]))
}

fn check_weights(d: &[Rational]) -> Result<()> {
    if d.len() != 5 {
        return Err(Error::Dimension {
            expected: 5,
            found: d.len(),
        });
    }
    if let Some(i) = d.iter().position(|v| !v.is_positive()) {
        return Err(Error::NonPositive(i));
    }
    Ok(())
}

/// `d_{i-1} + d_{i+1} - d_i` for `i = 0..5`, indices mod 5.
pub fn cyclic_combinations(d: &[Rational]) -> Vec<Rational> {
    (0..5).map(|i| &d[(i + 4) % 5] + &d[(i + 1) % 5] - &d[i]).collect()
}

/// `d_{i-1} + d_{i+1} >= d_i` for every `i` (indices mod 5).
pub fn lemma_dhd_condition(d: &[Rational]) -> Result<bool> {
    check_weights(d)?;
    Ok(cyclic_combinations(d).iter().all(|c| !c.is_negative()))
}

/// `D^-1 H D^-1` with `D = diag(d)`: the matrix whose quartic form, after
/// the substitution `x_i -> sqrt(d_i) x_i`, is `quartic_form(H)` and whose
/// multiplier becomes `sum d_i x_i^2`. Its level-1 membership is governed by
/// [`lemma_dhd_condition`].
pub fn scaled_horn(d: &[Rational]) -> Result<ExactMatrix> {
    check_weights(d)?;
    let inv: Vec<Rational> = d.iter().map(|v| v.recip()).collect();
    horn().diag_scale(&inv)
}

/// The explicit decomposition
///
/// ```text
/// (sum d_i x_i^2) * h(x) = sum_i d_i (x_i * sum_j H_ij x_j^2)^2
///                        + sum_i 4 (d_{i-1} + d_{i+1} - d_i) (x_{i-1} x_i x_{i+1})^2
/// ```
///
/// with `h` the Horn quartic form, as a weighted-multiplier certificate.
/// Terms with zero coefficient are dropped.
pub fn horn_scaled_decomposition(d: &[Rational]) -> Result<SosCertificate> {
    check_weights(d)?;
    let combos = cyclic_combinations(d);
    if let Some(i) = combos.iter().position(|c| c.is_negative()) {
        return Err(Error::ConditionViolated(i));
    }
    let h = horn();
    let n = 5;
    let mut squares = Vec::with_capacity(10);
    for i in 0..n {
        let terms = (0..n).map(|j| {
            let mut e = vec![0; n];
            e[j] += 2;
            e[i] += 1;
            (Monomial::new(e), h.get(i, j).clone())
        });
        squares.push(WeightedSquare {
            weight: d[i].clone(),
            poly: Polynomial::from_terms(n, terms)?,
        });
    }
    for (i, c) in combos.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let mut e = vec![0; n];
        e[(i + 4) % 5] = 1;
        e[i] = 1;
        e[(i + 1) % 5] = 1;
        squares.push(WeightedSquare {
            weight: c * int(4),
            poly: Polynomial::term(Monomial::new(e), Rational::one()),
        });
    }
    let cert = SosCertificate {
        kind: CertificateKind::Reznick {
            r: 1,
            weights: Some(d.to_vec()),
        },
        n,
        target: Target::Matrix(h),
        squares,
    };
    debug_assert!(cert.verify());
    Ok(cert)
}

/// Rewrites a certificate for `(sum d_i x_i^2)^r q_M(x)` as a plain Reznick
/// certificate for `D^-1 M D^-1`, via `x_i = y_i / sqrt(d_i)`.
///
/// Each square must be supported on a single parity class so that the
/// square roots pair up: a monomial `y^e` of parity `p` picks up
/// `prod d_i^-((e_i - p_i)/2)` and the common `prod_{p_i = 1} d_i^-1/2`
/// moves into the weight as `prod_{p_i = 1} d_i^-1`.
pub fn unweight_certificate(cert: &SosCertificate) -> Result<SosCertificate> {
    let CertificateKind::Reznick { r, weights: Some(d) } = &cert.kind else {
        return Err(Error::InvalidArgument("certificate has no multiplier weights".into()));
    };
    let Target::Matrix(m) = &cert.target else {
        return Err(Error::InvalidArgument("certificate target is not a matrix".into()));
    };
    let inv: Vec<Rational> = d.iter().map(|v| v.recip()).collect();
    let pow = |base: &Rational, k: u32| -> Rational { num_traits::pow(base.clone(), k as usize) };
    let mut squares = Vec::with_capacity(cert.squares.len());
    for sq in &cert.squares {
        let Some((first, _)) = sq.poly.terms().next() else {
            continue;
        };
        let parity = first.parity();
        if sq.poly.terms().any(|(mono, _)| mono.parity() != parity) {
            return Err(Error::InvalidArgument("square mixes parity classes".into()));
        }
        let mut weight = sq.weight.clone();
        for (i, &p) in parity.iter().enumerate() {
            if p == 1 {
                weight *= &inv[i];
            }
        }
        let terms = sq.poly.terms().map(|(mono, c)| {
            let mut f = c.clone();
            for (i, (&e, &p)) in mono.exponents().iter().zip(&parity).enumerate() {
                f *= pow(&inv[i], (e - p as u32) / 2);
            }
            (mono.clone(), f)
        });
        squares.push(WeightedSquare {
            weight,
            poly: Polynomial::from_terms(cert.n, terms)?,
        });
    }
    let out = SosCertificate {
        kind: CertificateKind::Reznick { r: *r, weights: None },
        n: cert.n,
        target: Target::Matrix(m.diag_scale(&inv)?),
        squares,
    };
    if !out.verify() {
        return Err(Error::Rounding("rescaled certificate fails verification".into()));
    }
    Ok(out)
}

/// Numeric and exact evidence gathered at one level.
#[derive(Clone, Debug)]
pub struct LevelRecord {
    pub r: u32,
    pub margin: f64,
    pub membership: Membership,
    /// Set when an indeterminate margin was resolved by exact rounding.
    pub exact: bool,
}

#[derive(Clone, Debug)]
pub enum LevelOutcome {
    Level(u32),
    NotFoundUpTo(u32),
}

#[derive(Clone, Debug)]
pub struct LevelResult {
    pub outcome: LevelOutcome,
    pub records: Vec<LevelRecord>,
    /// Exact certificate at the reported level, when `exact` was requested
    /// or needed to settle an indeterminate margin.
    pub certificate: Option<SosCertificate>,
}

impl LevelResult {
    /// Levels whose margin fell in the indeterminate band and could not be
    /// settled exactly.
    pub fn indeterminate_levels(&self) -> Vec<u32> {
        self.records
            .iter()
            .filter(|r| r.membership == Membership::Indeterminate && !r.exact)
            .map(|r| r.r)
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct LevelOptions {
    pub solver: SolverOptions,
    pub rounding: RoundingOptions,
    /// Solver tolerance of the re-solve that precedes exact rounding;
    /// boundary instances need a well-converged face to round onto.
    pub refine_tol: f64,
    /// Half-width of the indeterminate band around a zero margin.
    pub margin_tol: f64,
    /// Produce an exact certificate at the reported level.
    pub exact: bool,
}

impl Default for LevelOptions {
    fn default() -> Self {
        LevelOptions {
            solver: SolverOptions::default(),
            rounding: RoundingOptions::default(),
            refine_tol: 1e-10,
            margin_tol: MARGIN_TOLERANCE,
            exact: false,
        }
    }
}

/// Re-solves the margin problem of `enc` at `refine_tol` and rounds the
/// result to an exact certificate.
pub fn exact_certificate(enc: &GramEncoding, options: &LevelOptions) -> Result<SosCertificate> {
    let solver = SolverOptions {
        tol: options.refine_tol.min(options.solver.tol),
        ..options.solver
    };
    let (mg, sol) = margin(enc, &solver)?;
    if !mg.is_finite() {
        return Err(Error::Rounding(format!("refined margin is {mg}")));
    }
    certify_encoding(enc, &sol, &options.rounding)
}

/// Smallest `r <= r_max` with `M` in `K_n^(r)` under the margin policy.
///
/// Indeterminate margins trigger an exact rounding attempt; success counts
/// as membership, failure is recorded and the search moves on.
pub fn min_level(m: &ExactMatrix, r_max: u32, options: &LevelOptions) -> Result<LevelResult> {
    let mut records = Vec::new();
    for r in 0..=r_max {
        let enc = build_reznick(m, r);
        let (mg, _) = margin(&enc, &options.solver)?;
        let membership = classify_margin(mg, options.margin_tol);
        let mut record = LevelRecord {
            r,
            margin: mg,
            membership,
            exact: false,
        };
        let want_exact = membership == Membership::Indeterminate || (membership == Membership::Member && options.exact);
        let certificate = if want_exact {
            match exact_certificate(&enc, options) {
                Ok(c) => {
                    record.exact = true;
                    Some(c)
                }
                Err(_) => None,
            }
        } else {
            None
        };
        let found = membership == Membership::Member || certificate.is_some();
        records.push(record);
        if found {
            return Ok(LevelResult {
                outcome: LevelOutcome::Level(r),
                records,
                certificate,
            });
        }
    }
    Ok(LevelResult {
        outcome: LevelOutcome::NotFoundUpTo(r_max),
        records,
        certificate: None,
    })
}

/// `true` when `M` is PSD in exact arithmetic.
pub fn is_psd(m: &ExactMatrix) -> bool {
    matches!(m.psd_check(), PsdCheck::Psd(_))
}
