//! Command-line front end: `solve`, `study`, and `commcost`.
//!
//! Exit codes: 0 on success/convergence, 2 when a solve did not converge or
//! broke down, 1 on usage or configuration errors.

use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use ekcg::commcost::{CgFamily, TradeoffMode};
use ekcg::error::{Error, Result};
use ekcg::harness::{
    commcost_report, parse_ortho, run_solve, run_study, CommCostOptions, MatrixSource,
    SolveOptions, StudySpec, DEFAULT_SEED,
};
use ekcg::solver::{Method, SolveConfig};

#[derive(Parser)]
#[command(
    name = "ekcg",
    version,
    about = "Enlarged Krylov CG solvers: s-step and communication-avoiding SRE-CG / SRE-CG2 / MSDO-CG"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one solver configuration and write a report file.
    Solve(SolveArgs),
    /// Run a (method, t, s) sweep described by a TOML file; emits one CSV
    /// per method plus a markdown summary.
    Study {
        /// Path to the study description (TOML).
        spec: PathBuf,
    },
    /// Evaluate the analytic communication model on an (i, j) grid.
    Commcost(CommArgs),
}

#[derive(Args)]
struct SolveArgs {
    /// Generated operator: poisson2d:<nx> or synth3d:<nx>,<ny>,<nz>,<kind>.
    #[arg(long, conflicts_with = "matrix")]
    gen: Option<String>,
    /// Matrix Market file (real symmetric or general).
    #[arg(long)]
    matrix: Option<PathBuf>,
    /// Inject an externally computed partition (one domain index per line).
    #[arg(long)]
    partition: Option<PathBuf>,
    /// cg | sre-cg | sre-cg2 | msdo-cg
    #[arg(long, default_value = "cg")]
    method: String,
    /// restructured | sstep | ca-alg5 | ca-alg7
    #[arg(long, default_value = "sstep")]
    variant: String,
    /// Domain count (power of two).
    #[arg(long, default_value_t = 1)]
    t: usize,
    /// Merge count.
    #[arg(long, default_value_t = 1)]
    s: usize,
    /// Relative residual tolerance.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Iteration cap; defaults to 10x the CG count on the same system.
    #[arg(long)]
    kmax: Option<usize>,
    /// none | bj-chol | bj-ic0
    #[arg(long, default_value = "none")]
    precond: String,
    /// acholqr | precholqr
    #[arg(long, default_value = "precholqr")]
    ortho: String,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Output directory for the report.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Also emit an SVG chart of the residual history.
    #[arg(long)]
    svg: bool,
    /// Write the computed partition to this file.
    #[arg(long)]
    dump_partition: Option<PathBuf>,
}

#[derive(Args)]
struct CommArgs {
    /// sre | sstep-sre | ca-sre
    #[arg(long, default_value = "ca-sre")]
    family: String,
    /// log2(s) values, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4")]
    i: Vec<u32>,
    /// log2(t) values, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5,6")]
    j: Vec<u32>,
    /// Also print the doubling trade-off verdicts: sstep | ca.
    #[arg(long)]
    tradeoff: Option<String>,
    /// Join measured iteration counts from a study CSV.
    #[arg(long)]
    from_csv: Option<PathBuf>,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    match dispatch(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(1);
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.cmd {
        Cmd::Solve(args) => cmd_solve(args),
        Cmd::Study { spec } => cmd_study(&spec),
        Cmd::Commcost(args) => cmd_commcost(args),
    }
}

fn cmd_solve(args: SolveArgs) -> Result<i32> {
    let matrix = match (&args.gen, &args.matrix) {
        (Some(g), None) => MatrixSource::parse_gen(g)?,
        (None, Some(p)) => MatrixSource::File(p.clone()),
        _ => {
            return Err(Error::InvalidConfig(
                "exactly one of --gen or --matrix is required".into(),
            ))
        }
    };
    let method: Method = args.method.parse()?;
    let mut cfg = SolveConfig::new(method);
    cfg.variant = args.variant.parse()?;
    cfg.t = args.t;
    cfg.s = args.s;
    cfg.epsilon = args.tol;
    cfg.precond = args.precond.parse()?;
    cfg.ortho = parse_ortho(&args.ortho)?;
    cfg.seed = args.seed;
    let opts = SolveOptions {
        matrix: matrix.clone(),
        cfg,
        kmax: args.kmax,
        partition_file: args.partition,
        out_dir: args.out,
        emit_svg: args.svg,
        dump_partition: args.dump_partition,
    };
    let (report, path) = run_solve(&opts)?;
    let status = if report.converged {
        "converged".to_string()
    } else if let Some(bd) = &report.breakdown {
        format!("broke down ({bd})")
    } else {
        "did not converge".to_string()
    };
    println!(
        "{}/{} t={} s={} on {}: {status} after {} outer iterations (relres {:.3e}); report: {}",
        args.method,
        args.variant,
        args.t,
        args.s,
        matrix.describe(),
        report.outer_iters,
        report.final_relres,
        path.display()
    );
    Ok(if report.converged { 0 } else { 2 })
}

fn cmd_study(spec_path: &PathBuf) -> Result<i32> {
    let spec = StudySpec::load(spec_path)?;
    let out = run_study(&spec)?;
    for path in &out.csv_paths {
        println!("wrote {}", path.display());
    }
    println!("wrote {}", out.summary_path.display());
    let failed = out.cells.values().filter(|r| !r.converged).count();
    if failed > 0 {
        println!("{failed} cell(s) did not converge (rendered as 'x')");
    }
    Ok(0)
}

fn cmd_commcost(args: CommArgs) -> Result<i32> {
    let family = match args.family.as_str() {
        "sre" => CgFamily::Sre,
        "sstep-sre" => CgFamily::SStepSre,
        "ca-sre" => CgFamily::CaSre,
        other => {
            return Err(Error::InvalidConfig(format!(
                "unknown family '{other}' (sre|sstep-sre|ca-sre)"
            )))
        }
    };
    let tradeoff = match args.tradeoff.as_deref() {
        None => None,
        Some("sstep") => Some(TradeoffMode::SStep),
        Some("ca") => Some(TradeoffMode::Ca),
        Some(other) => {
            return Err(Error::InvalidConfig(format!(
                "unknown tradeoff mode '{other}' (sstep|ca)"
            )))
        }
    };
    let opts = CommCostOptions {
        family,
        i_list: args.i,
        j_list: args.j,
        tradeoff,
        from_csv: args.from_csv,
    };
    print!("{}", commcost_report(&opts)?);
    Ok(0)
}
