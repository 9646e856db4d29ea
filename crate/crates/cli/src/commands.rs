use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use copocert::certify::{RoundingOptions, SosCertificate};
use copocert::copositive::{
    cyclic_combinations, horn_scaled_decomposition, lemma_dhd_condition, min_level, scaled_horn, LevelOptions,
    LevelOutcome,
};
use copocert::gram::{build_reznick, Membership};
use copocert::graphs::{all_graphs_up_to, alpha, random_graph, theta_encoding, theta_r, Graph};
use copocert::rational::parse_rational;
use copocert::sdp::{write_dump, SdpProblem, SolverOptions};
use copocert::{ExactMatrix, Rational};
use num_traits::Signed;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::report::{sha256_hex, Exit, RunReport};

/// Numeric policy shared by all commands. Every value is echoed in the
/// report of the commands that use it.
#[derive(Clone, Copy, Debug)]
pub struct Tolerances {
    pub solver: f64,
    /// Half-width of the indeterminate margin band.
    pub margin: f64,
    /// Solver tolerance of the re-solve before exact rounding.
    pub refine: f64,
    /// `|theta - alpha|` accepted as agreement.
    pub agree: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            solver: 1e-8,
            margin: 1e-6,
            refine: 1e-10,
            agree: 1e-3,
        }
    }
}

impl Tolerances {
    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            tol: self.solver,
            ..SolverOptions::default()
        }
    }

    fn level_options(&self, exact: bool) -> LevelOptions {
        LevelOptions {
            solver: self.solver_options(),
            rounding: RoundingOptions::default(),
            refine_tol: self.refine,
            margin_tol: self.margin,
            exact,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Context {
    /// Command line as typed, echoed at the top of the report.
    pub command: String,
    pub timings: bool,
    pub tol: Tolerances,
}

impl Context {
    fn report(&self) -> RunReport {
        RunReport::new(&self.command, self.timings)
    }
}

fn fail(mut report: RunReport, exit: Exit, message: impl std::fmt::Display) -> (Exit, RunReport) {
    report.note("error", message);
    report.finish(exit);
    (exit, report)
}

fn done(mut report: RunReport, exit: Exit) -> (Exit, RunReport) {
    report.finish(exit);
    (exit, report)
}

fn read_input(report: &mut RunReport, path: &Path) -> std::result::Result<String, String> {
    let bytes = fs::read(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    report.input(&path.display().to_string(), &bytes);
    String::from_utf8(bytes).map_err(|_| format!("{} is not UTF-8", path.display()))
}

fn dump_problem(report: &mut RunReport, path: &Path, problem: &SdpProblem) -> std::result::Result<(), String> {
    fs::write(path, write_dump(problem)).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    report.note("dump", path.display());
    Ok(())
}

fn membership_word(m: Membership) -> &'static str {
    match m {
        Membership::Member => "member",
        Membership::NonMember => "nonmember",
        Membership::Indeterminate => "indeterminate",
    }
}

/// Verifies and writes a certificate. `Err` carries the exit code.
fn write_certificate(report: &mut RunReport, cert: &SosCertificate, out: &Path) -> std::result::Result<(), Exit> {
    if !cert.verify() {
        report.note("error", "certificate failed exact verification; not written");
        return Err(Exit::VerificationFailed);
    }
    if let Err(e) = fs::write(out, cert.serialize()) {
        report.note("error", format!("cannot write {}: {e}", out.display()));
        return Err(Exit::Input);
    }
    report.certificate(&format!("{} (verified, {} squares)", out.display(), cert.squares.len()));
    Ok(())
}

fn search_levels(
    ctx: &Context,
    report: &mut RunReport,
    m: &ExactMatrix,
    r_max: u32,
    exact: bool,
    out: &Path,
) -> Exit {
    let tol = ctx.tol;
    report.tolerance("solver", format!("{:e}", tol.solver));
    report.tolerance("margin", format!("{:e}", tol.margin));
    if exact {
        report.tolerance("refine", format!("{:e}", tol.refine));
        let rounding = RoundingOptions::default();
        report.tolerance(
            "denominators",
            format!("{}..{}", rounding.initial_denominator, rounding.max_denominator),
        );
    }
    report.note("r-max", r_max);
    let start = Instant::now();
    let result = match min_level(m, r_max, &tol.level_options(exact)) {
        Ok(r) => r,
        Err(e) => {
            report.note("error", e);
            return Exit::Indeterminate;
        }
    };
    report.timing("search", start.elapsed());
    let band = format!("margin tol {:e}", tol.margin);
    for rec in &result.records {
        let exact_note = if rec.exact { ", exact certificate" } else { "" };
        report.note(
            "level",
            format!(
                "r={} margin={:+.3e} {}{exact_note} [gram::margin; {band}]",
                rec.r,
                rec.margin,
                membership_word(rec.membership)
            ),
        );
    }
    match result.outcome {
        LevelOutcome::Level(r) => {
            if !exact {
                report.verdict(&format!("member of K^({r}), numeric"), "copositive::min_level", &band);
                return Exit::Ok;
            }
            let Some(cert) = &result.certificate else {
                report.verdict(
                    &format!("numeric member of K^({r}); exact rounding failed"),
                    "certify::round_and_project",
                    "exact",
                );
                return Exit::Indeterminate;
            };
            if let Err(code) = write_certificate(report, cert, out) {
                return code;
            }
            report.verdict(&format!("certified at r={r}"), "certify::verify", "exact");
            Exit::Ok
        }
        LevelOutcome::NotFoundUpTo(r) => {
            let open = result.indeterminate_levels();
            if open.is_empty() {
                report.verdict(&format!("not found up to r={r}"), "copositive::min_level", &band);
                Exit::NotFound
            } else {
                report.verdict(
                    &format!("indeterminate at levels {open:?}, not found up to r={r}"),
                    "copositive::min_level",
                    &band,
                );
                Exit::Indeterminate
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct CertifyArgs {
    pub matrix: PathBuf,
    pub r_max: u32,
    pub exact: bool,
    /// Defaults to `<matrix>.cert`.
    pub out: Option<PathBuf>,
    /// Directory receiving `r<r>.sdp` for every level up to `r_max`.
    pub dump: Option<PathBuf>,
}

pub fn certify(ctx: &Context, args: &CertifyArgs) -> (Exit, RunReport) {
    let mut report = ctx.report();
    let text = match read_input(&mut report, &args.matrix) {
        Ok(t) => t,
        Err(e) => return fail(report, Exit::Input, e),
    };
    let m = match ExactMatrix::parse_str(&text) {
        Ok(m) => m,
        Err(e) => return fail(report, Exit::Input, e),
    };
    report.note("dimension", m.n());
    let out = args.out.clone().unwrap_or_else(|| {
        let mut p = args.matrix.clone().into_os_string();
        p.push(".cert");
        PathBuf::from(p)
    });
    if let Some(dir) = &args.dump {
        let written = fs::create_dir_all(dir)
            .map_err(|e| format!("cannot create {}: {e}", dir.display()))
            .and_then(|_| {
                (0..=args.r_max).try_for_each(|r| {
                    dump_problem(&mut report, &dir.join(format!("r{r}.sdp")), &build_reznick(&m, r).problem)
                })
            });
        if let Err(e) = written {
            return fail(report, Exit::Input, e);
        }
    }
    let exit = search_levels(ctx, &mut report, &m, args.r_max, args.exact, &out);
    done(report, exit)
}

#[derive(Clone, Debug)]
pub struct ThetaArgs {
    pub graph: PathBuf,
    pub r: u32,
    pub dump: Option<PathBuf>,
}

pub fn theta(ctx: &Context, args: &ThetaArgs) -> (Exit, RunReport) {
    let mut report = ctx.report();
    let text = match read_input(&mut report, &args.graph) {
        Ok(t) => t,
        Err(e) => return fail(report, Exit::Input, e),
    };
    let g = match Graph::parse_dimacs(&text) {
        Ok(g) => g,
        Err(e) => return fail(report, Exit::Input, e),
    };
    report.tolerance("solver", format!("{:e}", ctx.tol.solver));
    report.tolerance("agree", format!("{:e}", ctx.tol.agree));
    report.note("graph", format!("n={} m={}", g.n(), g.num_edges()));
    if let Some(path) = &args.dump {
        let written = theta_encoding(&g, args.r)
            .map_err(|e| e.to_string())
            .and_then(|enc| dump_problem(&mut report, path, &enc.problem));
        if let Err(e) = written {
            return fail(report, Exit::Input, e);
        }
    }
    let a = alpha(&g);
    report.note("alpha", format!("{a} [graphs::alpha; exact]"));
    let start = Instant::now();
    let th = match theta_r(&g, args.r, &ctx.tol.solver_options()) {
        Ok(t) => t,
        Err(e) => return fail(report, Exit::Indeterminate, e),
    };
    report.timing("theta", start.elapsed());
    report.note(
        "theta",
        format!(
            "theta^({})={:.6} status={:?} residuals={:.1e}/{:.1e}/{:.1e}",
            args.r, th.value, th.status, th.residuals.primal, th.residuals.dual, th.residuals.gap
        ),
    );
    let gap = th.value - a as f64;
    let agree = gap.abs() <= ctx.tol.agree;
    let word = if agree { "agree" } else { "disagree" };
    report.verdict(
        &format!("{word}, theta-alpha={gap:+.3e}"),
        "graphs::theta_r",
        &format!("agree tol {:e}", ctx.tol.agree),
    );
    done(report, if agree { Exit::Ok } else { Exit::NotFound })
}

#[derive(Clone, Debug)]
pub struct HornArgs {
    /// Comma-separated positive rationals.
    pub d: String,
    pub out: PathBuf,
    /// Search bound of the fallback.
    pub r_max: u32,
    /// Round the fallback result to an exact certificate.
    pub exact: bool,
}

fn parse_scaling(text: &str) -> std::result::Result<Vec<Rational>, String> {
    let d = text
        .split(',')
        .map(|s| parse_rational(s.trim()).ok_or_else(|| format!("not a rational: {:?}", s.trim())))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if d.len() != 5 {
        return Err(format!("expected 5 scaling factors, got {}", d.len()));
    }
    if let Some(i) = d.iter().position(|v| !v.is_positive()) {
        return Err(format!("scaling factor d{} = {} is not positive", i + 1, d[i]));
    }
    Ok(d)
}

pub fn horn(ctx: &Context, args: &HornArgs) -> (Exit, RunReport) {
    let mut report = ctx.report();
    report.input(&format!("d={}", args.d), args.d.as_bytes());
    let d = match parse_scaling(&args.d) {
        Ok(d) => d,
        Err(e) => return fail(report, Exit::Input, e),
    };
    let combos = cyclic_combinations(&d);
    let shown: Vec<String> = combos.iter().map(|c| c.to_string()).collect();
    report.note("cyclic combinations", shown.join(", "));
    let holds = match lemma_dhd_condition(&d) {
        Ok(h) => h,
        Err(e) => return fail(report, Exit::Input, e),
    };
    if holds {
        report.note("condition", "holds [copositive::lemma_dhd_condition; exact]");
        let cert = match horn_scaled_decomposition(&d) {
            Ok(c) => c,
            Err(e) => return fail(report, Exit::VerificationFailed, e),
        };
        report.note("vanished terms", 10 - cert.squares.len());
        if let Err(code) = write_certificate(&mut report, &cert, &args.out) {
            return done(report, code);
        }
        report.verdict(
            "certified at r=1 by explicit decomposition",
            "copositive::horn_scaled_decomposition",
            "exact",
        );
        return done(report, Exit::Ok);
    }
    report.note("condition", "violated; searching levels of D^-1 H D^-1");
    let m = match scaled_horn(&d) {
        Ok(m) => m,
        Err(e) => return fail(report, Exit::Input, e),
    };
    let exit = search_levels(ctx, &mut report, &m, args.r_max, args.exact, &args.out);
    done(report, exit)
}

pub fn verify(ctx: &Context, path: &Path) -> (Exit, RunReport) {
    let mut report = ctx.report();
    let text = match read_input(&mut report, path) {
        Ok(t) => t,
        Err(e) => return fail(report, Exit::Input, e),
    };
    let cert = match SosCertificate::deserialize(&text) {
        Ok(c) => c,
        Err(e) => return fail(report, Exit::Input, e),
    };
    report.note("squares", cert.squares.len());
    if cert.verify() {
        report.verdict("verified, residual is the zero polynomial", "certify::verify", "exact");
        return done(report, Exit::Ok);
    }
    match cert.residual() {
        Ok(res) => report.note("residual terms", res.len()),
        Err(e) => report.note("residual", e),
    }
    report.verdict("verification failed", "certify::verify", "exact");
    done(report, Exit::VerificationFailed)
}

#[derive(Clone, Debug)]
pub enum GraphSource {
    /// Every regular file in the directory, one DIMACS graph each.
    Dir(PathBuf),
    /// `count` samples of `G(n, 1/2)` from a ChaCha8 stream.
    Random { n: usize, count: usize, seed: u64 },
    /// One graph per isomorphism class on 1..=n vertices.
    All(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub enum ConjectureCheck {
    Agree,
    /// `theta^(alpha-1)` exceeds `alpha` by more than the agreement tolerance.
    Candidate(f64),
    /// `alpha - 1` lies beyond the searched levels.
    Unchecked,
    Failed(String),
}

#[derive(Clone, Debug)]
pub struct SweepRow {
    pub name: String,
    pub graph: Graph,
    pub alpha: usize,
    /// `theta^(r)` for `r = 0, 1, ...`; the list stops once a level agrees
    /// with `alpha`, since the hierarchy is nonincreasing and bounded below
    /// by `alpha`.
    pub thetas: Vec<f64>,
    pub check: ConjectureCheck,
}

pub fn sweep_row(name: String, g: Graph, r_max: u32, tol: &Tolerances) -> SweepRow {
    let a = alpha(&g);
    let opts = tol.solver_options();
    let mut thetas = Vec::new();
    let mut failure = None;
    for r in 0..=r_max {
        match theta_r(&g, r, &opts) {
            Ok(t) => {
                thetas.push(t.value);
                if (t.value - a as f64).abs() <= tol.agree {
                    break;
                }
            }
            Err(e) => {
                failure = Some(format!("r={r}: {e}"));
                break;
            }
        }
    }
    let level = a.saturating_sub(1);
    let check = if level > r_max as usize {
        ConjectureCheck::Unchecked
    } else if let Some(&t) = thetas.get(level) {
        if t > a as f64 + tol.agree {
            ConjectureCheck::Candidate(t)
        } else {
            ConjectureCheck::Agree
        }
    } else if let Some(msg) = failure {
        ConjectureCheck::Failed(msg)
    } else {
        // Stopped early at a level that already agreed.
        ConjectureCheck::Agree
    };
    SweepRow {
        name,
        graph: g,
        alpha: a,
        thetas,
        check,
    }
}

/// Runs every graph in parallel; rows come back sorted by name.
pub fn sweep_rows(graphs: Vec<(String, Graph)>, r_max: u32, tol: &Tolerances) -> Vec<SweepRow> {
    let mut rows: Vec<SweepRow> = graphs
        .into_par_iter()
        .map(|(name, g)| sweep_row(name, g, r_max, tol))
        .collect();
    rows.sort_by(|a, b| a.name.cmp(&b.name));
    rows
}

fn load_dir(dir: &Path) -> std::result::Result<(Vec<(String, Graph)>, Vec<u8>), String> {
    let entries = fs::read_dir(dir).map_err(|e| format!("cannot read {}: {e}", dir.display()))?;
    let mut files = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| e.to_string())?;
        if entry.file_type().map_err(|e| e.to_string())?.is_file() {
            files.push(entry.path());
        }
    }
    files.sort();
    let mut graphs = Vec::new();
    let mut digest_input = Vec::new();
    for path in files {
        let name = path.file_name().unwrap_or_default().to_string_lossy().into_owned();
        let bytes = fs::read(&path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        let text = String::from_utf8(bytes.clone()).map_err(|_| format!("{name} is not UTF-8"))?;
        let g = Graph::parse_dimacs(&text).map_err(|e| format!("{name}: {e}"))?;
        digest_input.extend_from_slice(name.as_bytes());
        digest_input.push(0);
        digest_input.extend_from_slice(&bytes);
        graphs.push((name, g));
    }
    Ok((graphs, digest_input))
}

pub fn generate(source: &GraphSource) -> std::result::Result<Vec<(String, Graph)>, String> {
    match source {
        GraphSource::Dir(dir) => load_dir(dir).map(|(g, _)| g),
        GraphSource::Random { n, count, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            Ok((0..*count)
                .map(|i| (format!("random-n{n}-s{seed}-{i:04}"), random_graph(*n, 0.5, &mut rng)))
                .collect())
        }
        GraphSource::All(n) => {
            if *n > 6 {
                return Err(format!("--all supports at most 6 vertices, got {n}"));
            }
            let graphs = all_graphs_up_to(*n).map_err(|e| e.to_string())?;
            let mut counters = [0usize; 7];
            Ok(graphs
                .into_iter()
                .map(|g| {
                    let k = counters[g.n()];
                    counters[g.n()] += 1;
                    (format!("all-n{}-{k:03}", g.n()), g)
                })
                .collect())
        }
    }
}

fn format_row(row: &SweepRow) -> String {
    let thetas: Vec<String> = row.thetas.iter().map(|t| format!("{t:.6}")).collect();
    let check = match &row.check {
        ConjectureCheck::Agree => "ok".to_string(),
        ConjectureCheck::Candidate(t) => format!("CANDIDATE theta^({})={t:.6}", row.alpha - 1),
        ConjectureCheck::Unchecked => "unchecked".to_string(),
        ConjectureCheck::Failed(e) => format!("failed ({e})"),
    };
    format!(
        "{} n={} m={} alpha={} theta=[{}] conjecture={}",
        row.name,
        row.graph.n(),
        row.graph.num_edges(),
        row.alpha,
        thetas.join(", "),
        check
    )
}

#[derive(Clone, Debug)]
pub struct SweepArgs {
    pub source: GraphSource,
    pub r_max: u32,
}

pub fn sweep(ctx: &Context, args: &SweepArgs) -> (Exit, RunReport) {
    let mut report = ctx.report();
    let graphs = match &args.source {
        GraphSource::Dir(dir) => match load_dir(dir) {
            Ok((graphs, digest_input)) => {
                report.input(&dir.display().to_string(), &digest_input);
                graphs
            }
            Err(e) => return fail(report, Exit::Input, e),
        },
        source => {
            if let GraphSource::Random { seed, .. } = source {
                report.seed(*seed);
            }
            match generate(source) {
                Ok(graphs) => {
                    let text: String = graphs.iter().map(|(_, g)| g.to_dimacs()).collect();
                    report.note("generated", format!("{} graphs sha256={}", graphs.len(), sha256_hex(text.as_bytes())));
                    graphs
                }
                Err(e) => return fail(report, Exit::Input, e),
            }
        }
    };
    report.tolerance("solver", format!("{:e}", ctx.tol.solver));
    report.tolerance("agree", format!("{:e}", ctx.tol.agree));
    report.note("r-max", args.r_max);
    let start = Instant::now();
    let rows = sweep_rows(graphs, args.r_max, &ctx.tol);
    report.timing("sweep", start.elapsed());
    for row in &rows {
        report.note("row", format_row(row));
    }
    let candidates: Vec<&SweepRow> = rows
        .iter()
        .filter(|r| matches!(r.check, ConjectureCheck::Candidate(_)))
        .collect();
    let failed = rows.iter().filter(|r| matches!(r.check, ConjectureCheck::Failed(_))).count();
    let unchecked = rows.iter().filter(|r| r.check == ConjectureCheck::Unchecked).count();
    report.note("graphs", rows.len());
    report.note("unchecked", unchecked);
    report.note("failed", failed);
    report.note("candidates", candidates.len());
    for c in &candidates {
        report.note("candidate", &c.name);
    }
    let tol = format!("agree tol {:e}", ctx.tol.agree);
    let exit = if !candidates.is_empty() {
        report.verdict(
            &format!("{} conjecture counterexample candidates", candidates.len()),
            "graphs::theta_r",
            &tol,
        );
        Exit::NotFound
    } else if failed > 0 {
        report.verdict(&format!("{failed} graphs without a theta verdict"), "graphs::theta_r", &tol);
        Exit::Indeterminate
    } else {
        report.verdict("no candidates", "graphs::theta_r", &tol);
        Exit::Ok
    };
    done(report, exit)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scaling_parser() {
        assert_eq!(parse_scaling("1, 2,1/2,1,1").unwrap()[2], copocert::rational::ratio(1, 2));
        assert!(parse_scaling("1,1,1,1").is_err());
        assert!(parse_scaling("1,0,1,1,1").is_err());
        assert!(parse_scaling("1,-2,1,1,1").is_err());
        assert!(parse_scaling("1,x,1,1,1").is_err());
    }

    #[test]
    fn random_source_is_seeded() {
        let src = GraphSource::Random {
            n: 6,
            count: 5,
            seed: 7,
        };
        let a = generate(&src).unwrap();
        let b = generate(&src).unwrap();
        assert_eq!(a.len(), 5);
        for ((na, ga), (nb, gb)) in a.iter().zip(&b) {
            assert_eq!(na, nb);
            assert_eq!(ga, gb);
        }
    }

    #[test]
    fn sweep_row_on_c5() {
        let row = sweep_row("c5".into(), copocert::graphs::cycle(5), 2, &Tolerances::default());
        assert_eq!(row.alpha, 2);
        assert_eq!(row.thetas.len(), 2);
        assert!((row.thetas[0] - 5f64.sqrt()).abs() < 1e-5);
        assert_eq!(row.check, ConjectureCheck::Agree);
    }
}
