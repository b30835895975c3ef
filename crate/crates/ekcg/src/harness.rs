//! Study harness behind the command-line tool.
//!
//! Wires matrix sourcing, partitioning, the right-hand-side protocol, and
//! the solvers into three entry points: [`run_solve`] for a single
//! configuration, [`run_study`] for a `(t, s)` sweep emitting one CSV per
//! method plus a markdown summary, and [`commcost_report`] for the analytic
//! communication model. All emitted files are byte-deterministic for a
//! given input, so repeated runs can be diffed.
//!
//! Right-hand-side protocol: the exact solution is drawn uniformly from
//! `[0, 1)` with a seeded generator on the reordered system, `b = A x`, and
//! the initial guess is zero.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Deserialize;

use crate::commcost::{self, CgFamily, TradeoffMode};
use crate::error::{Error, Result};
use crate::market::load_matrix_market;
use crate::partition::{kway_partition, load_partition, reorder, write_partition, Partition};
use crate::precond::{build_block_jacobi, BlockJacobiPrecond, PrecondMode};
use crate::solver::{
    solve_cg, solve_enlarged, Method, PrecondKind, SolveConfig, SolveReport, Variant,
};
use crate::sparse::{gen_poisson2d, gen_synthetic3d, SparseSpd, SyntheticKind};

/// Default seed used by the command-line tool when none is given.
pub const DEFAULT_SEED: u64 = 8;

/// Where the operator comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MatrixSource {
    Poisson2d { nx: usize },
    Synth3d { nx: usize, ny: usize, nz: usize, kind: SyntheticKind },
    File(PathBuf),
}

impl MatrixSource {
    /// Parse a `--gen` argument: `poisson2d:<nx>` or
    /// `synth3d:<nx>,<ny>,<nz>,<kind>`.
    pub fn parse_gen(text: &str) -> Result<Self> {
        if let Some(rest) = text.strip_prefix("poisson2d:") {
            let nx: usize = rest
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("bad grid side '{rest}'")))?;
            if nx < 2 {
                return Err(Error::InvalidConfig("poisson2d needs nx >= 2".into()));
            }
            return Ok(MatrixSource::Poisson2d { nx });
        }
        if let Some(rest) = text.strip_prefix("synth3d:") {
            let parts: Vec<&str> = rest.split(',').collect();
            if parts.len() != 4 {
                return Err(Error::InvalidConfig(
                    "synth3d wants nx,ny,nz,skyscraper|anisotropic".into(),
                ));
            }
            let dims: Vec<usize> = parts[..3]
                .iter()
                .map(|p| {
                    p.parse()
                        .map_err(|_| Error::InvalidConfig(format!("bad dimension '{p}'")))
                })
                .collect::<Result<_>>()?;
            let kind: SyntheticKind = parts[3].parse()?;
            return Ok(MatrixSource::Synth3d {
                nx: dims[0],
                ny: dims[1],
                nz: dims[2],
                kind,
            });
        }
        Err(Error::InvalidConfig(format!(
            "unknown generator '{text}' (poisson2d:<nx> | synth3d:<nx>,<ny>,<nz>,<kind>)"
        )))
    }

    /// Short tag used in emitted file names.
    pub fn tag(&self) -> String {
        match self {
            MatrixSource::Poisson2d { nx } => format!("poisson2d{nx}"),
            MatrixSource::Synth3d { nx, ny, nz, kind } => {
                let k = match kind {
                    SyntheticKind::Skyscraper => "sky",
                    SyntheticKind::Anisotropic => "ani",
                };
                format!("synth3d-{nx}x{ny}x{nz}-{k}")
            }
            MatrixSource::File(p) => p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "matrix".into()),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            MatrixSource::Poisson2d { nx } => format!("poisson2d:{nx}"),
            MatrixSource::Synth3d { nx, ny, nz, kind } => {
                let k = match kind {
                    SyntheticKind::Skyscraper => "skyscraper",
                    SyntheticKind::Anisotropic => "anisotropic",
                };
                format!("synth3d:{nx},{ny},{nz},{k}")
            }
            MatrixSource::File(p) => p.display().to_string(),
        }
    }

    pub fn build(&self, seed: u64) -> Result<SparseSpd> {
        match self {
            MatrixSource::Poisson2d { nx } => Ok(gen_poisson2d(*nx)),
            MatrixSource::Synth3d { nx, ny, nz, kind } => {
                if *nx < 2 || *ny < 2 || *nz < 2 {
                    return Err(Error::InvalidConfig("synth3d dimensions must be >= 2".into()));
                }
                Ok(gen_synthetic3d(*nx, *ny, *nz, *kind, seed))
            }
            MatrixSource::File(p) => load_matrix_market(p),
        }
    }
}

/// Options for one `solve` invocation.
#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub matrix: MatrixSource,
    pub cfg: SolveConfig,
    /// `--kmax` flag; when absent the cap defaults to ten times the CG
    /// iteration count on the same system (or 5000 if CG does not converge).
    pub kmax: Option<usize>,
    pub partition_file: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub emit_svg: bool,
    pub dump_partition: Option<PathBuf>,
}

/// A prepared linear system: reordered operator, partition, right-hand
/// side, and optional preconditioner.
pub struct System {
    pub a: SparseSpd,
    pub partition: Partition,
    pub b: Vec<f64>,
    pub precond: Option<BlockJacobiPrecond>,
}

/// Build the system a configuration runs on (deterministic in `(source,
/// cfg.t, cfg.precond, seed, partition_file)`).
pub fn prepare_system(
    source: &MatrixSource,
    t: usize,
    precond: PrecondKind,
    seed: u64,
    partition_file: Option<&Path>,
) -> Result<System> {
    let a0 = source.build(seed)?;
    let partition = match partition_file {
        Some(path) => load_partition(path, t)?,
        None => kway_partition(&a0, t, seed)?,
    };
    if partition.n() != a0.n() {
        return Err(Error::InvalidPartition(format!(
            "partition covers {} rows, matrix has {}",
            partition.n(),
            a0.n()
        )));
    }
    let (a, _) = reorder(&a0, &partition);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x_star: Vec<f64> = (0..a.n()).map(|_| rng.gen::<f64>()).collect();
    let b = a.spmv(&x_star);
    let precond = match precond {
        PrecondKind::None => None,
        PrecondKind::BjChol => Some(build_block_jacobi(&a, &partition, PrecondMode::Cholesky)?),
        PrecondKind::BjIc0 => Some(build_block_jacobi(&a, &partition, PrecondMode::Ic0)?),
    };
    Ok(System {
        a,
        partition,
        b,
        precond,
    })
}

/// Default iteration cap: ten times the CG count on the same system.
pub fn default_kmax(sys: &System, tol: f64) -> usize {
    let mut cfg = SolveConfig::new(Method::Cg);
    cfg.epsilon = tol;
    cfg.k_max = 5000;
    match solve_cg(&sys.a, &sys.b, &vec![0.0; sys.a.n()], &cfg, None) {
        Ok(rep) if rep.converged => 10 * rep.outer_iters,
        _ => 5000,
    }
}

fn run_config(sys: &System, cfg: &SolveConfig) -> Result<SolveReport> {
    let x0 = vec![0.0; sys.a.n()];
    if cfg.method == Method::Cg {
        solve_cg(&sys.a, &sys.b, &x0, cfg, sys.precond.as_ref())
    } else {
        solve_enlarged(&sys.a, &sys.b, &x0, &sys.partition, cfg, sys.precond.as_ref())
    }
}

/// Run one configuration and write its report file (plus optional SVG).
/// Returns the report and the report path.
pub fn run_solve(opts: &SolveOptions) -> Result<(SolveReport, PathBuf)> {
    let mut cfg = opts.cfg.clone();
    cfg.validate()?;
    let sys = prepare_system(
        &opts.matrix,
        cfg.t,
        cfg.precond,
        cfg.seed,
        opts.partition_file.as_deref(),
    )?;
    cfg.k_max = match opts.kmax {
        Some(k) => k,
        None => default_kmax(&sys, cfg.epsilon),
    };
    if let Some(path) = &opts.dump_partition {
        write_partition(path, &sys.partition)?;
    }
    let report = run_config(&sys, &cfg)?;

    fs::create_dir_all(&opts.out_dir)?;
    let base = format!(
        "report_{}_{}_{}_t{}_s{}",
        opts.matrix.tag(),
        cfg.method,
        cfg.variant,
        cfg.t,
        cfg.s
    );
    let report_path = opts.out_dir.join(format!("{base}.txt"));
    fs::write(&report_path, render_report(&opts.matrix, &sys, &cfg, &report))?;
    if opts.emit_svg {
        let svg_path = opts.out_dir.join(format!("{base}.svg"));
        fs::write(&svg_path, render_residual_svg(&report))?;
    }
    Ok((report, report_path))
}

fn fmt_f64(v: f64) -> String {
    // Shortest round-trip formatting: stable and exact.
    format!("{v:?}")
}

/// Flat key=value text plus a residual-history CSV section.
pub fn render_report(
    source: &MatrixSource,
    sys: &System,
    cfg: &SolveConfig,
    rep: &SolveReport,
) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "matrix={}", source.describe());
    let _ = writeln!(out, "n={}", sys.a.n());
    let _ = writeln!(out, "nnz={}", sys.a.nnz());
    let _ = writeln!(out, "method={}", cfg.method);
    let _ = writeln!(out, "variant={}", cfg.variant);
    let _ = writeln!(out, "t={}", cfg.t);
    let _ = writeln!(out, "s={}", cfg.s);
    let _ = writeln!(out, "tol={}", fmt_f64(cfg.epsilon));
    let _ = writeln!(out, "kmax={}", cfg.k_max);
    let _ = writeln!(out, "ortho={}", match cfg.ortho {
        crate::aortho::OrthoKind::ACholQr => "acholqr",
        crate::aortho::OrthoKind::PreCholQr => "precholqr",
    });
    let _ = writeln!(out, "precond={}", cfg.precond);
    let _ = writeln!(out, "seed={}", cfg.seed);
    let _ = writeln!(out, "partition_fallback={}", sys.partition.fallback());
    let _ = writeln!(out, "precond_shifted={}", rep.precond_shifted);
    let _ = writeln!(out, "converged={}", rep.converged);
    let _ = writeln!(out, "outer_iters={}", rep.outer_iters);
    let _ = writeln!(out, "inner_equiv_iters={}", rep.inner_equiv_iters);
    let _ = writeln!(out, "final_relres={}", fmt_f64(rep.final_relres));
    let _ = writeln!(out, "true_final_relres={}", fmt_f64(rep.true_final_relres));
    match &rep.breakdown {
        None => {
            let _ = writeln!(out, "breakdown=none");
        }
        Some(bd) => {
            let _ = writeln!(
                out,
                "breakdown={} column={} pivot={} threshold={}",
                bd.context,
                bd.column,
                fmt_f64(bd.pivot),
                fmt_f64(bd.threshold)
            );
        }
    }
    match &rep.comm {
        Some(c) => {
            let _ = writeln!(out, "comm_kind={:?}", c.kind);
            let _ = writeln!(out, "comm_messages={}", fmt_f64(c.messages));
            let _ = writeln!(
                out,
                "comm_words={}",
                c.words.map(fmt_f64).unwrap_or_default()
            );
        }
        None => {
            let _ = writeln!(out, "comm_kind=");
            let _ = writeln!(out, "comm_messages=");
            let _ = writeln!(out, "comm_words=");
        }
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "[residual_history]");
    let _ = writeln!(out, "iter,relres");
    let r0 = rep.residual_history[0];
    for (i, r) in rep.residual_history.iter().enumerate() {
        let rel = if r0 > 0.0 { r / r0 } else { 0.0 };
        let _ = writeln!(out, "{i},{}", fmt_f64(rel));
    }
    out
}

/// Minimal SVG line chart of the residual history (log10 scale).
pub fn render_residual_svg(rep: &SolveReport) -> String {
    let (w, h, ml, mb) = (640.0f64, 400.0f64, 60.0f64, 40.0f64);
    let r0 = rep.residual_history[0].max(f64::MIN_POSITIVE);
    let rel: Vec<f64> = rep
        .residual_history
        .iter()
        .map(|&r| (r / r0).max(1e-300).log10())
        .collect();
    let (ymax, ymin) = (
        rel.iter().cloned().fold(f64::MIN, f64::max).max(0.0),
        rel.iter().cloned().fold(f64::MAX, f64::min),
    );
    let span = (ymax - ymin).max(1e-12);
    let n = rel.len().max(2);
    let pts: Vec<String> = rel
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let x = ml + (w - ml - 10.0) * i as f64 / (n - 1) as f64;
            let y = 10.0 + (h - mb - 10.0) * (ymax - v) / span;
            format!("{x:.2},{y:.2}")
        })
        .collect();
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">"
    );
    let _ = writeln!(svg, "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>");
    let _ = writeln!(
        svg,
        "<line x1=\"{ml}\" y1=\"10\" x2=\"{ml}\" y2=\"{}\" stroke=\"black\"/>",
        h - mb
    );
    let _ = writeln!(
        svg,
        "<line x1=\"{ml}\" y1=\"{0}\" x2=\"{1}\" y2=\"{0}\" stroke=\"black\"/>",
        h - mb,
        w - 10.0
    );
    let _ = writeln!(
        svg,
        "<text x=\"6\" y=\"16\" font-size=\"12\">log10 relres {ymax:.1}</text>"
    );
    let _ = writeln!(
        svg,
        "<text x=\"6\" y=\"{}\" font-size=\"12\">{ymin:.1}</text>",
        h - mb
    );
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" font-size=\"12\">iteration {}</text>",
        w - 120.0,
        h - 8.0,
        n - 1
    );
    let _ = writeln!(
        svg,
        "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"{}\"/>",
        pts.join(" ")
    );
    let _ = writeln!(svg, "</svg>");
    svg
}

/// One full study: a `(method, t, s)` sweep over a single matrix.
#[derive(Debug, Clone)]
pub struct StudySpec {
    pub matrix: MatrixSource,
    pub methods: Vec<(Method, Variant)>,
    pub t_list: Vec<usize>,
    pub s_list: Vec<usize>,
    pub tol: f64,
    pub kmax: Option<usize>,
    pub precond: PrecondKind,
    pub ortho: crate::aortho::OrthoKind,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub partition_file: Option<PathBuf>,
}

#[derive(Deserialize)]
struct StudySpecFile {
    matrix: String,
    methods: Vec<String>,
    t: Vec<usize>,
    s: Vec<usize>,
    #[serde(default = "default_tol")]
    tol: f64,
    kmax: Option<usize>,
    #[serde(default = "default_precond")]
    precond: String,
    #[serde(default = "default_ortho")]
    ortho: String,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default = "default_out")]
    out: String,
    partition: Option<String>,
}

fn default_tol() -> f64 {
    1e-6
}
fn default_precond() -> String {
    "none".into()
}
fn default_ortho() -> String {
    "precholqr".into()
}
fn default_out() -> String {
    "out".into()
}

/// Parse an `ortho` flag value.
pub fn parse_ortho(text: &str) -> Result<crate::aortho::OrthoKind> {
    match text {
        "acholqr" => Ok(crate::aortho::OrthoKind::ACholQr),
        "precholqr" => Ok(crate::aortho::OrthoKind::PreCholQr),
        other => Err(Error::InvalidConfig(format!(
            "unknown ortho kernel '{other}' (acholqr|precholqr)"
        ))),
    }
}

/// Parse a `method/variant` pair, variant defaulting to `sstep`.
pub fn parse_method_variant(text: &str) -> Result<(Method, Variant)> {
    match text.split_once('/') {
        Some((m, v)) => Ok((m.parse()?, v.parse()?)),
        None => Ok((text.parse()?, Variant::SStep)),
    }
}

impl StudySpec {
    /// Load a study description from a TOML file.
    pub fn load<P: AsRef<Path>>(path: P) -> Result<StudySpec> {
        let text = fs::read_to_string(path.as_ref())?;
        let raw: StudySpecFile = toml::from_str(&text)
            .map_err(|e| Error::InvalidConfig(format!("study spec: {e}")))?;
        let matrix = if raw.matrix.starts_with("poisson2d:") || raw.matrix.starts_with("synth3d:") {
            MatrixSource::parse_gen(&raw.matrix)?
        } else {
            MatrixSource::File(PathBuf::from(&raw.matrix))
        };
        let methods = raw
            .methods
            .iter()
            .map(|m| parse_method_variant(m))
            .collect::<Result<Vec<_>>>()?;
        let spec = StudySpec {
            matrix,
            methods,
            t_list: raw.t,
            s_list: raw.s,
            tol: raw.tol,
            kmax: raw.kmax,
            precond: raw.precond.parse()?,
            ortho: parse_ortho(&raw.ortho)?,
            seed: raw.seed.unwrap_or(DEFAULT_SEED),
            out_dir: PathBuf::from(raw.out),
            partition_file: raw.partition.map(PathBuf::from),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::InvalidConfig("study needs at least one method".into()));
        }
        if self.t_list.is_empty() {
            return Err(Error::InvalidConfig("study needs a nonempty t list".into()));
        }
        if self.s_list.is_empty() {
            return Err(Error::InvalidConfig("study needs a nonempty s list".into()));
        }
        for &(m, v) in &self.methods {
            if m == Method::Cg && self.methods.len() > 1 {
                continue;
            }
            if v == Variant::Restructured && !matches!(m, Method::SreCg | Method::SreCg2) {
                return Err(Error::InvalidConfig(format!(
                    "variant restructured is invalid for {m}"
                )));
            }
        }
        Ok(())
    }
}

/// Study result: per-method CSV paths plus the summary file.
pub struct StudyOutput {
    pub csv_paths: Vec<PathBuf>,
    pub summary_path: PathBuf,
    /// `(method, variant, t, s) -> report`
    pub cells: BTreeMap<(String, usize, usize), SolveReport>,
}

/// Run the sweep. Cells are independent and run on a worker pool; each cell
/// is deterministic, so the pool size cannot affect any output byte.
pub fn run_study(spec: &StudySpec) -> Result<StudyOutput> {
    spec.validate()?;
    fs::create_dir_all(&spec.out_dir)?;

    // Shared systems: one per t (the reordering and rhs depend only on t
    // and seed). Build sequentially for determinism, share read-only.
    let mut systems: BTreeMap<usize, System> = BTreeMap::new();
    for &t in &spec.t_list {
        if !systems.contains_key(&t) {
            systems.insert(
                t,
                prepare_system(
                    &spec.matrix,
                    t,
                    spec.precond,
                    spec.seed,
                    spec.partition_file.as_deref(),
                )?,
            );
        }
    }
    let kmax = match spec.kmax {
        Some(k) => k,
        None => {
            let first = systems.values().next().unwrap();
            default_kmax(first, spec.tol)
        }
    };

    // Flatten the grid into independent cells.
    struct Cell {
        key: (String, usize, usize),
        cfg: SolveConfig,
    }
    let mut cells = Vec::new();
    for &(method, variant) in &spec.methods {
        for &t in &spec.t_list {
            if method == Method::Cg {
                let mut cfg = SolveConfig::new(Method::Cg);
                cfg.epsilon = spec.tol;
                cfg.k_max = kmax;
                cfg.precond = spec.precond;
                cfg.ortho = spec.ortho;
                cfg.seed = spec.seed;
                cfg.t = t;
                cells.push(Cell {
                    key: (method_tag(method, variant), t, 1),
                    cfg,
                });
                continue;
            }
            for &s in &spec.s_list {
                let mut cfg = SolveConfig::new(method);
                cfg.variant = variant;
                cfg.t = t;
                cfg.s = s;
                cfg.epsilon = spec.tol;
                cfg.k_max = kmax;
                cfg.precond = spec.precond;
                cfg.ortho = spec.ortho;
                cfg.seed = spec.seed;
                cells.push(Cell { key: (method_tag(method, variant), t, s), cfg });
            }
        }
    }

    let results: Vec<(( String, usize, usize), Result<SolveReport>)> = cells
        .par_iter()
        .map(|cell| {
            let sys = &systems[&cell.cfg.t];
            (cell.key.clone(), run_config(sys, &cell.cfg))
        })
        .collect();

    let mut out = BTreeMap::new();
    for (key, res) in results {
        out.insert(key, res?);
    }

    // Emit one CSV per (matrix, method/variant): rows = t, columns = s.
    let mut csv_paths = Vec::new();
    let mut summary = String::new();
    let _ = writeln!(summary, "# Study: {}", spec.matrix.describe());
    let _ = writeln!(summary);
    let _ = writeln!(
        summary,
        "tol={} precond={} ortho={:?} seed={} kmax={}",
        fmt_f64(spec.tol),
        spec.precond,
        spec.ortho,
        spec.seed,
        kmax
    );
    for &(method, variant) in &spec.methods {
        let tag = method_tag(method, variant);
        let mut csv = String::new();
        let header: Vec<String> = if method == Method::Cg {
            vec!["1".into()]
        } else {
            spec.s_list.iter().map(|s| s.to_string()).collect()
        };
        let _ = writeln!(csv, "t\\s,{}", header.join(","));
        let _ = writeln!(summary, "\n## {tag}\n");
        let _ = writeln!(summary, "| t \\ s | {} |", header.join(" | "));
        let _ = writeln!(
            summary,
            "|---|{}|",
            header.iter().map(|_| "---").collect::<Vec<_>>().join("|")
        );
        for &t in &spec.t_list {
            let s_values: Vec<usize> = if method == Method::Cg {
                vec![1]
            } else {
                spec.s_list.clone()
            };
            let mut row = vec![t.to_string()];
            for &s in &s_values {
                let rep = &out[&(tag.clone(), t, s)];
                // Non-convergence (breakdown or cap) renders as 'x'.
                row.push(if rep.converged {
                    rep.outer_iters.to_string()
                } else {
                    "x".into()
                });
            }
            let _ = writeln!(csv, "{}", row.join(","));
            let _ = writeln!(summary, "| {} |", row.join(" | "));
        }
        let path = spec
            .out_dir
            .join(format!("{}_{}.csv", spec.matrix.tag(), tag));
        fs::write(&path, csv)?;
        csv_paths.push(path);
    }
    let summary_path = spec.out_dir.join("summary.md");
    fs::write(&summary_path, summary)?;
    Ok(StudyOutput {
        csv_paths,
        summary_path,
        cells: out,
    })
}

fn method_tag(method: Method, variant: Variant) -> String {
    if method == Method::Cg {
        "cg".into()
    } else {
        format!("{method}-{variant}")
    }
}

/// Options for the `commcost` command.
#[derive(Debug, Clone)]
pub struct CommCostOptions {
    pub family: CgFamily,
    pub i_list: Vec<u32>,
    pub j_list: Vec<u32>,
    pub tradeoff: Option<TradeoffMode>,
    /// Study CSV to join measured iteration counts from (cell `(t = 2^j,
    /// s = 2^i)`).
    pub from_csv: Option<PathBuf>,
}

/// Evaluate the model over the requested `(i, j)` grid; one line per pair.
pub fn commcost_report(opts: &CommCostOptions) -> Result<String> {
    let measured = match &opts.from_csv {
        Some(path) => Some(read_study_csv(path)?),
        None => None,
    };
    let mut out = String::new();
    let family_name = match opts.family {
        CgFamily::Sre => "sre",
        CgFamily::SStepSre => "sstep-sre",
        CgFamily::CaSre => "ca-sre",
    };
    let _ = writeln!(out, "family={family_name}");
    let _ = writeln!(out, "i,j,s,t,reduction_vs_cg_pct,verdict,measured_iters");
    for &i in &opts.i_list {
        for &j in &opts.j_list {
            let s = 1usize << i;
            let t = 1usize << j;
            let pct = commcost::vs_cg_reduction_pct(opts.family, i, j);
            let verdict = if pct > 0.0 {
                format!("{pct:.2}%")
            } else {
                "CG cheaper".to_string()
            };
            let iters = measured
                .as_ref()
                .and_then(|m| m.get(&(t, s)).copied())
                .map(|k| k.to_string())
                .unwrap_or_default();
            let _ = writeln!(out, "{i},{j},{s},{t},{pct:.4},{verdict},{iters}");
        }
    }
    if let Some(mode) = opts.tradeoff {
        let name = match mode {
            TradeoffMode::SStep => "sstep",
            TradeoffMode::Ca => "ca",
        };
        let _ = writeln!(out);
        let _ = writeln!(out, "doubling_tradeoff={name}");
        let _ = writeln!(out, "i,t,lhs,rhs,merge_wins");
        for &i in &opts.i_list {
            for &j in &opts.j_list {
                let t = 1usize << j;
                if i == 0 || t < 2 {
                    continue;
                }
                let v = commcost::doubling_tradeoff(i, t, mode)?;
                let _ = writeln!(
                    out,
                    "{i},{t},{:.6},{:.6},{}",
                    v.lhs, v.rhs, v.merge_wins
                );
            }
        }
    }
    Ok(out)
}

/// Read a study CSV back as `(t, s) -> iterations` (missing and `x` cells
/// are skipped).
pub fn read_study_csv<P: AsRef<Path>>(path: P) -> Result<BTreeMap<(usize, usize), usize>> {
    let text = fs::read_to_string(path.as_ref())?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Parse {
        line: 1,
        message: "empty csv".into(),
    })?;
    let s_values: Vec<usize> = header
        .split(',')
        .skip(1)
        .map(|v| {
            v.trim().parse().map_err(|_| Error::Parse {
                line: 1,
                message: format!("bad s header '{v}'"),
            })
        })
        .collect::<Result<_>>()?;
    let mut map = BTreeMap::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let t: usize = fields
            .next()
            .unwrap()
            .trim()
            .parse()
            .map_err(|_| Error::Parse {
                line: lineno + 2,
                message: "bad t value".into(),
            })?;
        for (s, cell) in s_values.iter().zip(fields) {
            if let Ok(iters) = cell.trim().parse::<usize>() {
                map.insert((t, *s), iters);
            }
        }
    }
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_gen_sources() {
        assert_eq!(
            MatrixSource::parse_gen("poisson2d:100").unwrap(),
            MatrixSource::Poisson2d { nx: 100 }
        );
        let s = MatrixSource::parse_gen("synth3d:4,5,6,skyscraper").unwrap();
        assert_eq!(
            s,
            MatrixSource::Synth3d {
                nx: 4,
                ny: 5,
                nz: 6,
                kind: SyntheticKind::Skyscraper
            }
        );
        assert!(MatrixSource::parse_gen("poisson3d:4").is_err());
        assert!(MatrixSource::parse_gen("synth3d:4,5").is_err());
    }

    #[test]
    fn method_variant_parsing() {
        assert_eq!(
            parse_method_variant("sre-cg/sstep").unwrap(),
            (Method::SreCg, Variant::SStep)
        );
        assert_eq!(
            parse_method_variant("msdo-cg").unwrap(),
            (Method::MsdoCg, Variant::SStep)
        );
        assert!(parse_method_variant("sre-cg/ca").is_err());
    }

    #[test]
    fn solve_writes_deterministic_report() {
        let dir = std::env::temp_dir().join("ekcg_harness_test");
        let _ = fs::remove_dir_all(&dir);
        let mut cfg = SolveConfig::new(Method::SreCg);
        cfg.t = 2;
        cfg.s = 2;
        cfg.epsilon = 1e-8;
        cfg.seed = 3;
        let opts = SolveOptions {
            matrix: MatrixSource::Poisson2d { nx: 10 },
            cfg,
            kmax: None,
            partition_file: None,
            out_dir: dir.clone(),
            emit_svg: true,
            dump_partition: None,
        };
        let (rep1, path1) = run_solve(&opts).unwrap();
        assert!(rep1.converged);
        let bytes1 = fs::read(&path1).unwrap();
        let (_, path2) = run_solve(&opts).unwrap();
        let bytes2 = fs::read(&path2).unwrap();
        assert_eq!(bytes1, bytes2);
        let text = String::from_utf8(bytes1).unwrap();
        assert!(text.contains("method=sre-cg"));
        assert!(text.contains("[residual_history]"));
        assert!(text.contains("converged=true"));
    }

    #[test]
    fn study_emits_tables() {
        let dir = std::env::temp_dir().join("ekcg_study_test");
        let _ = fs::remove_dir_all(&dir);
        let spec = StudySpec {
            matrix: MatrixSource::Poisson2d { nx: 12 },
            methods: vec![(Method::Cg, Variant::SStep), (Method::SreCg, Variant::SStep)],
            t_list: vec![2, 4],
            s_list: vec![1, 2],
            tol: 1e-8,
            kmax: None,
            precond: PrecondKind::None,
            ortho: crate::aortho::OrthoKind::PreCholQr,
            seed: 3,
            out_dir: dir.clone(),
            partition_file: None,
        };
        let out = run_study(&spec).unwrap();
        assert_eq!(out.csv_paths.len(), 2);
        let csv = fs::read_to_string(&out.csv_paths[1]).unwrap();
        assert!(csv.starts_with("t\\s,1,2\n"));
        // Re-run: byte identical.
        let again = run_study(&spec).unwrap();
        assert_eq!(
            fs::read(&out.csv_paths[1]).unwrap(),
            fs::read(&again.csv_paths[1]).unwrap()
        );
        // Round-trip the csv reader.
        let map = read_study_csv(&out.csv_paths[1]).unwrap();
        assert!(map.contains_key(&(2, 1)));
    }

    #[test]
    fn commcost_report_matches_quotes() {
        let opts = CommCostOptions {
            family: CgFamily::CaSre,
            i_list: vec![2],
            j_list: vec![5],
            tradeoff: None,
            from_csv: None,
        };
        let text = commcost_report(&opts).unwrap();
        assert!(text.contains("67.37"), "{text}");
        let opts = CommCostOptions {
            family: CgFamily::Sre,
            i_list: vec![0],
            j_list: vec![0],
            tradeoff: None,
            from_csv: None,
        };
        let text = commcost_report(&opts).unwrap();
        assert!(text.contains("CG cheaper"), "{text}");
    }
}
