use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Parser, Subcommand};
use copocert_cli::{
    certify, horn, sweep, theta, verify, CertifyArgs, Context, Exit, GraphSource, HornArgs, SweepArgs, ThetaArgs,
    Tolerances,
};

/// Reznick certificates for copositive matrices and theta^(r) sweeps.
#[derive(Parser, Debug)]
#[command(name = "copocert", version)]
struct Cli {
    /// Print wall-clock timings (reports are otherwise deterministic).
    #[arg(long, global = true)]
    timings: bool,

    /// Interior-point stopping tolerance.
    #[arg(long, global = true, default_value = "1e-8")]
    solver_tol: f64,

    /// Margins within +-this value are indeterminate.
    #[arg(long, global = true, default_value = "1e-6")]
    margin_tol: f64,

    /// Solver tolerance of the re-solve preceding exact rounding.
    #[arg(long, global = true, default_value = "1e-10")]
    refine_tol: f64,

    /// Largest |theta - alpha| counted as agreement.
    #[arg(long, global = true, default_value = "1e-3")]
    agree_tol: f64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Find the smallest level r with the matrix in K^(r).
    Certify {
        matrix: PathBuf,
        #[arg(long, default_value_t = 2)]
        r_max: u32,
        /// Round to an exact certificate and write it.
        #[arg(long)]
        exact: bool,
        /// Certificate path (default: <matrix>.cert).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the SDP of every level to DIR/r<r>.sdp.
        #[arg(long, value_name = "DIR")]
        dump: Option<PathBuf>,
    },
    /// Compute alpha(G) and theta^(r)(G) for a DIMACS graph.
    Theta {
        graph: PathBuf,
        #[arg(long, default_value_t = 0)]
        r: u32,
        /// Write the theta^(r) SDP to this file.
        #[arg(long, value_name = "FILE")]
        dump: Option<PathBuf>,
    },
    /// Certify a diagonal scaling of the Horn matrix.
    Horn {
        /// Five positive rationals, e.g. 1,2,1/2,1,1.
        #[arg(long, allow_hyphen_values = true)]
        d: String,
        #[arg(long, default_value = "horn.cert")]
        out: PathBuf,
        /// Search bound when the explicit decomposition does not apply.
        #[arg(long, default_value_t = 3)]
        r_max: u32,
        /// Round the fallback search to an exact certificate.
        #[arg(long)]
        exact: bool,
    },
    /// Check a certificate in exact arithmetic.
    Verify { certificate: PathBuf },
    /// Compare theta^(alpha-1) with alpha over a family of graphs.
    #[command(group(ArgGroup::new("source").required(true).args(["graphs", "random", "all"])))]
    Sweep {
        /// Directory of DIMACS files.
        #[arg(long)]
        graphs: Option<PathBuf>,
        /// n,count,seed
        #[arg(long)]
        random: Option<String>,
        /// Every graph up to isomorphism on at most this many vertices (<= 6).
        #[arg(long)]
        all: Option<usize>,
        #[arg(long, default_value_t = 4)]
        r_max: u32,
    },
}

fn parse_random(spec: &str) -> Result<GraphSource, String> {
    let parts: Vec<&str> = spec.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("--random expects n,count,seed, got {spec:?}"));
    }
    let field = |i: usize, name: &str| {
        parts[i]
            .parse::<u64>()
            .map_err(|_| format!("--random {name} is not a nonnegative integer: {:?}", parts[i]))
    };
    let n = field(0, "n")? as usize;
    if n > 128 {
        return Err(format!("--random n must be at most 128, got {n}"));
    }
    Ok(GraphSource::Random {
        n,
        count: field(1, "count")? as usize,
        seed: field(2, "seed")?,
    })
}

fn main() -> ExitCode {
    // Usage errors are input errors (exit 1), not clap's default 2.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(Exit::Input.code() as u8)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let ctx = Context {
        command: std::env::args().collect::<Vec<_>>().join(" "),
        timings: cli.timings,
        tol: Tolerances {
            solver: cli.solver_tol,
            margin: cli.margin_tol,
            refine: cli.refine_tol,
            agree: cli.agree_tol,
        },
    };
    let (exit, report) = match cli.command {
        Command::Certify {
            matrix,
            r_max,
            exact,
            out,
            dump,
        } => certify(
            &ctx,
            &CertifyArgs {
                matrix,
                r_max,
                exact,
                out,
                dump,
            },
        ),
        Command::Theta { graph, r, dump } => theta(&ctx, &ThetaArgs { graph, r, dump }),
        Command::Horn { d, out, r_max, exact } => horn(&ctx, &HornArgs { d, out, r_max, exact }),
        Command::Verify { certificate } => verify(&ctx, &certificate),
        Command::Sweep {
            graphs,
            random,
            all,
            r_max,
        } => {
            let source = match (graphs, random, all) {
                (Some(dir), _, _) => Ok(GraphSource::Dir(dir)),
                (_, Some(spec), _) => parse_random(&spec),
                (_, _, Some(n)) => Ok(GraphSource::All(n)),
                _ => Err("one of --graphs, --random, --all is required".to_string()),
            };
            match source {
                Ok(source) => sweep(&ctx, &SweepArgs { source, r_max }),
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(Exit::Input.code() as u8);
                }
            }
        }
    };
    print!("{}", report.render());
    ExitCode::from(exit.code() as u8)
}
