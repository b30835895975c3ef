//! Solver drivers: preconditioned CG and the enlarged CG families.
//!
//! [`solve_cg`] is the classical baseline. [`solve_enlarged`] dispatches the
//! SRE-CG / SRE-CG2 / MSDO-CG families over four variants:
//!
//! * `restructured` - blocks and updates interleave one step at a time, with
//!   a convergence check once per batch of `s` steps (SRE-CG / SRE-CG2 only);
//! * `sstep` - `s` blocks are built stepwise, then the solution and residual
//!   are updated once with the whole `n x st` slab;
//! * `ca-alg5` / `ca-alg7` - the slab is built by the communication-avoiding
//!   kernels ([`CaKernel::Monomial`] / [`CaKernel::SeedOrtho`]).
//!
//! The families differ in where new blocks come from and what they are
//! projected against: SRE-CG continues powers of the previous block with a
//! two-block (stepwise) or `(s+1)`-block (CA) window; SRE-CG2 does the same
//! against the full basis; MSDO-CG reseeds every outer iteration from the
//! split of the current residual, against the full basis.
//!
//! Split preconditioning replaces the block generator by `M^{-1} A` and the
//! initial split by `M^{-1}[T(r)]`; blocks stay A-orthonormal in the
//! original inner product and the recurrences update the true residual.

use crate::aortho::{
    arnoldi_step, cgs2_against, seed_block, self_orthonormalize, a_gram, ca_arnoldi,
    BasisAccumulator, CaKernel, OrthoKind, Window,
};
use crate::block::{self, BlockVectors};
use crate::commcost::{self, CommEstimate, CommKind};
use crate::error::{BasisBreakdown, Error, Result};
use crate::partition::{split_t, Partition};
use crate::precond::{apply_minv, apply_minv_vec, split_t_prec, BlockJacobiPrecond, PrecondMode};
use crate::sparse::{spmm, SparseSpd};

/// Solver family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Cg,
    SreCg,
    SreCg2,
    MsdoCg,
}

/// Algorithmic variant of an enlarged method.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Stepwise basis, one solution update per step, convergence checked
    /// once per batch of `s` steps.
    Restructured,
    /// Stepwise basis, one solution update per batch.
    SStep,
    /// Whole monomial slab computed before orthonormalization.
    CaAlg5,
    /// Seed block orthonormalized before the slab is expanded.
    CaAlg7,
}

/// Preconditioner selection carried in the configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrecondKind {
    None,
    BjChol,
    BjIc0,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Method::Cg => "cg",
            Method::SreCg => "sre-cg",
            Method::SreCg2 => "sre-cg2",
            Method::MsdoCg => "msdo-cg",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(v: &str) -> Result<Self> {
        match v {
            "cg" => Ok(Method::Cg),
            "sre-cg" => Ok(Method::SreCg),
            "sre-cg2" => Ok(Method::SreCg2),
            "msdo-cg" => Ok(Method::MsdoCg),
            other => Err(Error::InvalidConfig(format!(
                "unknown method '{other}' (cg|sre-cg|sre-cg2|msdo-cg)"
            ))),
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Variant::Restructured => "restructured",
            Variant::SStep => "sstep",
            Variant::CaAlg5 => "ca-alg5",
            Variant::CaAlg7 => "ca-alg7",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;
    fn from_str(v: &str) -> Result<Self> {
        match v {
            "restructured" => Ok(Variant::Restructured),
            "sstep" => Ok(Variant::SStep),
            "ca-alg5" => Ok(Variant::CaAlg5),
            "ca-alg7" => Ok(Variant::CaAlg7),
            other => Err(Error::InvalidConfig(format!(
                "unknown variant '{other}' (restructured|sstep|ca-alg5|ca-alg7)"
            ))),
        }
    }
}

impl std::fmt::Display for PrecondKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            PrecondKind::None => "none",
            PrecondKind::BjChol => "bj-chol",
            PrecondKind::BjIc0 => "bj-ic0",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for PrecondKind {
    type Err = Error;
    fn from_str(v: &str) -> Result<Self> {
        match v {
            "none" => Ok(PrecondKind::None),
            "bj-chol" => Ok(PrecondKind::BjChol),
            "bj-ic0" => Ok(PrecondKind::BjIc0),
            other => Err(Error::InvalidConfig(format!(
                "unknown preconditioner '{other}' (none|bj-chol|bj-ic0)"
            ))),
        }
    }
}

/// Full description of one solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveConfig {
    pub method: Method,
    pub variant: Variant,
    /// Merge count; `1` recovers the stepwise methods.
    pub s: usize,
    /// Domain count (must match the partition for enlarged methods).
    pub t: usize,
    /// Relative residual tolerance.
    pub epsilon: f64,
    /// Iteration cap: outer iterations for `sstep`/`ca-*` and CG, total
    /// steps for `restructured`.
    pub k_max: usize,
    pub ortho: OrthoKind,
    pub precond: PrecondKind,
    /// Seed for the right-hand-side protocol and the partitioner (recorded
    /// here so a report fully identifies its run).
    pub seed: u64,
}

impl SolveConfig {
    pub fn new(method: Method) -> Self {
        SolveConfig {
            method,
            variant: Variant::SStep,
            s: 1,
            t: 1,
            epsilon: 1e-6,
            k_max: 5000,
            ortho: OrthoKind::PreCholQr,
            precond: PrecondKind::None,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.s < 1 {
            return Err(Error::InvalidConfig("s must be >= 1".into()));
        }
        if self.variant == Variant::Restructured
            && !matches!(self.method, Method::SreCg | Method::SreCg2)
        {
            return Err(Error::InvalidConfig(
                "variant 'restructured' is only defined for sre-cg and sre-cg2".into(),
            ));
        }
        if self.epsilon <= 0.0 || !self.epsilon.is_finite() {
            return Err(Error::InvalidConfig("epsilon must be positive".into()));
        }
        if self.k_max == 0 {
            return Err(Error::InvalidConfig("k_max must be >= 1".into()));
        }
        Ok(())
    }
}

/// Everything measured about one solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub converged: bool,
    /// Outer iterations: `k_s` for `sstep`/`ca-*`, total steps for
    /// `restructured`, iterations for CG.
    pub outer_iters: usize,
    /// `s * k_s` for the merged variants, equal to `outer_iters` otherwise.
    pub inner_equiv_iters: usize,
    /// `||r||_2` per convergence check; entry 0 is `||r_0||_2`.
    pub residual_history: Vec<f64>,
    pub breakdown: Option<BasisBreakdown>,
    /// Modeled communication (absent when the partition count is not a
    /// power of two).
    pub comm: Option<CommEstimate>,
    /// Recurrence residual at exit, relative to `||r_0||_2`.
    pub final_relres: f64,
    /// True residual `||b - A x||_2 / ||r_0||_2` at exit.
    pub true_final_relres: f64,
    /// An IC(0) block needed a diagonal shift.
    pub precond_shifted: bool,
    /// Largest `||V^t A V - I||_max` over the run (probed runs only).
    pub max_basis_dev: Option<f64>,
    /// Largest `||Q^t r_k||_inf / ||r_0||_2` over the run (probed full-basis
    /// runs only).
    pub max_pg_dev: Option<f64>,
    /// `e_k^t A e_k` per outer iteration when the exact solution was
    /// supplied for probing.
    pub a_norm_error_history: Option<Vec<f64>>,
}

/// Optional invariants recorded during a solve.
#[derive(Debug, Clone, Default)]
pub struct Probes {
    /// Track `||V^t A V - I||_max` of every built slab.
    pub basis: bool,
    /// Track `||Q^t r_k||_inf / ||r_0||` (full-basis methods only).
    pub petrov_galerkin: bool,
    /// Exact solution; enables the A-norm error history.
    pub x_star: Option<Vec<f64>>,
}

/// Classical (split-)preconditioned CG.
pub fn solve_cg(
    a: &SparseSpd,
    b: &[f64],
    x0: &[f64],
    cfg: &SolveConfig,
    pr: Option<&BlockJacobiPrecond>,
) -> Result<SolveReport> {
    cfg.validate()?;
    if cfg.method != Method::Cg {
        return Err(Error::InvalidConfig(
            "solve_cg requires method = cg".into(),
        ));
    }
    check_precond(cfg, pr)?;
    let n = a.n();
    if b.len() != n || x0.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "matrix is {n}x{n}, b has {}, x0 has {}",
            b.len(),
            x0.len()
        )));
    }

    let mut x = x0.to_vec();
    let ax = a.spmv(&x);
    let mut r: Vec<f64> = (0..n).map(|i| b[i] - ax[i]).collect();
    let rho0 = block::norm2(&r);
    let mut history = vec![rho0];
    if rho0 == 0.0 {
        return Ok(finish_report(
            a, b, &x, cfg, rho0, history, 0, 0, None, pr, None, None, None,
        ));
    }
    let threshold = cfg.epsilon * rho0;

    let minv = |v: &[f64]| match pr {
        Some(m) => apply_minv_vec(m, v),
        None => v.to_vec(),
    };

    let mut rhat = minv(&r);
    let mut rho_hat = block::dot(&r, &rhat);
    let mut rho_hat_prev = rho_hat;
    let mut p = vec![0.0; n];
    let mut k = 0usize;
    while *history.last().unwrap() > threshold && k < cfg.k_max {
        if k == 0 {
            p.copy_from_slice(&rhat);
        } else {
            let beta = rho_hat / rho_hat_prev;
            for i in 0..n {
                p[i] = rhat[i] + beta * p[i];
            }
        }
        let w = a.spmv(&p);
        let pw = block::dot(&p, &w);
        if !(pw > 0.0) {
            // Not SPD (or fully converged in exact arithmetic); stop here.
            break;
        }
        let alpha = rho_hat / pw;
        block::axpy(alpha, &p, &mut x);
        block::axpy(-alpha, &w, &mut r);
        rhat = minv(&r);
        rho_hat_prev = rho_hat;
        rho_hat = block::dot(&r, &rhat);
        k += 1;
        history.push(block::norm2(&r));
    }

    Ok(finish_report(
        a, b, &x, cfg, rho0, history, k, k, None, pr, None, None, None,
    ))
}

/// Enlarged CG families (see the module docs for the dispatch).
pub fn solve_enlarged(
    a: &SparseSpd,
    b: &[f64],
    x0: &[f64],
    p: &Partition,
    cfg: &SolveConfig,
    pr: Option<&BlockJacobiPrecond>,
) -> Result<SolveReport> {
    solve_enlarged_probed(a, b, x0, p, cfg, pr, &Probes::default())
}

/// [`solve_enlarged`] with invariant probes enabled.
pub fn solve_enlarged_probed(
    a: &SparseSpd,
    b: &[f64],
    x0: &[f64],
    p: &Partition,
    cfg: &SolveConfig,
    pr: Option<&BlockJacobiPrecond>,
    probes: &Probes,
) -> Result<SolveReport> {
    cfg.validate()?;
    if cfg.method == Method::Cg {
        return Err(Error::InvalidConfig(
            "solve_enlarged requires an enlarged method; use solve_cg".into(),
        ));
    }
    check_precond(cfg, pr)?;
    if let Some(m) = pr {
        if !m.conforms_to(p) {
            return Err(Error::InvalidConfig(
                "preconditioner base domains do not match the partition".into(),
            ));
        }
    }
    let n = a.n();
    if b.len() != n || x0.len() != n || p.n() != n {
        return Err(Error::DimensionMismatch(format!(
            "matrix is {n}x{n}, b has {}, x0 has {}, partition has {}",
            b.len(),
            x0.len(),
            p.n()
        )));
    }
    if cfg.t != p.t() {
        return Err(Error::InvalidConfig(format!(
            "config t = {} does not match partition t = {}",
            cfg.t,
            p.t()
        )));
    }

    let s = cfg.s;
    let method = cfg.method;
    let variant = cfg.variant;
    let ortho = cfg.ortho;

    let mut x = x0.to_vec();
    let ax = a.spmv(&x);
    let mut r: Vec<f64> = (0..n).map(|i| b[i] - ax[i]).collect();
    let rho0 = block::norm2(&r);
    let mut history = vec![rho0];
    if rho0 == 0.0 {
        return Ok(finish_report(
            a, b, &x, cfg, rho0, history, 0, 0, None, pr, None, None, None,
        ));
    }
    let threshold = cfg.epsilon * rho0;

    let op = |xb: &BlockVectors| -> BlockVectors {
        let axb = spmm(a, xb);
        match pr {
            Some(m) => apply_minv(m, &axb),
            None => axb,
        }
    };
    let split = |rv: &[f64]| -> BlockVectors {
        match pr {
            Some(m) => split_t_prec(m, rv, p),
            None => split_t(rv, p),
        }
    };

    let full_q = matches!(method, Method::SreCg2 | Method::MsdoCg);
    let window = match (method, variant) {
        (Method::SreCg, Variant::Restructured | Variant::SStep) => Window::Last(2),
        (Method::SreCg, _) => Window::Last(s + 1),
        _ => Window::Full,
    };
    let mut q = if full_q {
        BasisAccumulator::full(n)
    } else {
        // Only the projection window must stay resident.
        let keep = match variant {
            Variant::Restructured | Variant::SStep => 2,
            _ => s + 1,
        };
        BasisAccumulator::windowed(n, keep)
    };
    let kernel = match variant {
        Variant::CaAlg5 => CaKernel::Monomial,
        Variant::CaAlg7 => CaKernel::SeedOrtho,
        _ => CaKernel::SeedOrtho,
    };

    let mut outer = 0usize; // batches
    let mut inner = 0usize; // solution updates
    let mut prev_block: Option<BlockVectors> = None;
    let mut breakdown: Option<BasisBreakdown> = None;
    let mut max_basis_dev: Option<f64> = if probes.basis { Some(0.0) } else { None };
    let mut max_pg_dev: Option<f64> = if probes.petrov_galerkin && full_q {
        Some(0.0)
    } else {
        None
    };
    let mut a_err_hist: Option<Vec<f64>> = probes.x_star.as_ref().map(|_| Vec::new());

    'outer: while *history.last().unwrap() > threshold && within_cap(variant, outer, inner, cfg) {
        // ---- build the next st columns ----
        let slab: BlockVectors = match variant {
            Variant::Restructured | Variant::SStep => {
                let mut slab: Option<BlockVectors> = None;
                for i in 0..s {
                    let step = if outer == 0 && i == 0 {
                        match msdo_or_initial_seed(&split, &r, method) {
                            Ok(seed) => seed_block(a, &seed, &mut q, ortho),
                            Err(bd) => Err(bd),
                        }
                    } else if method == Method::MsdoCg && i == 0 {
                        // Reseed from the current residual against all of Q.
                        match msdo_or_initial_seed(&split, &r, method) {
                            Ok(mut w) => {
                                cgs2_against(a, &mut w, &q.view(Window::Full));
                                self_orthonormalize(a, &mut w, ortho).map(|()| {
                                    q.push(w.clone());
                                    w
                                })
                            }
                            Err(bd) => Err(bd),
                        }
                    } else {
                        arnoldi_step(a, op, prev_block.as_ref().unwrap(), &mut q, window, ortho)
                    };
                    match step {
                        Ok(blk) => {
                            prev_block = Some(blk.clone());
                            match slab.as_mut() {
                                None => slab = Some(blk),
                                Some(v) => v.append_columns(&blk),
                            }
                        }
                        Err(bd) => {
                            breakdown = Some(bd);
                            break 'outer;
                        }
                    }
                }
                slab.unwrap()
            }
            Variant::CaAlg5 | Variant::CaAlg7 => {
                let (seed, advance) = if method == Method::MsdoCg || outer == 0 {
                    match msdo_or_initial_seed(&split, &r, method) {
                        Ok(seed) => (seed, false),
                        Err(bd) => {
                            breakdown = Some(bd);
                            break 'outer;
                        }
                    }
                } else {
                    (prev_block.clone().unwrap(), true)
                };
                match ca_arnoldi(
                    a,
                    op,
                    &seed,
                    &mut q,
                    s,
                    advance,
                    outer > 0,
                    kernel,
                    window,
                    ortho,
                ) {
                    Ok(slab) => {
                        let width = slab.m() / s;
                        prev_block = Some(slab.columns(slab.m() - width, slab.m()));
                        slab
                    }
                    Err(bd) => {
                        breakdown = Some(bd);
                        break 'outer;
                    }
                }
            }
        };

        if let Some(dev) = max_basis_dev.as_mut() {
            let g = a_gram(a, &slab, &slab);
            *dev = dev.max(g.max_abs_dev_from_identity());
        }

        // ---- update solution and residual ----
        match variant {
            Variant::Restructured => {
                let t_here = slab.m() / s;
                for i in 0..s {
                    let blk = slab.columns(i * t_here, (i + 1) * t_here);
                    apply_update(a, &blk, &mut x, &mut r);
                    inner += 1;
                }
            }
            _ => {
                apply_update(a, &slab, &mut x, &mut r);
                inner += s;
            }
        }
        outer += 1;
        history.push(block::norm2(&r));

        if let Some(dev) = max_pg_dev.as_mut() {
            let rb = BlockVectors::from_vector(&r);
            let mut worst = 0.0f64;
            for qb in q.blocks() {
                let c = block::xt_y(qb, &rb);
                worst = worst.max(c.max_abs());
            }
            *dev = dev.max(worst / rho0);
        }
        if let Some(hist) = a_err_hist.as_mut() {
            let xs = probes.x_star.as_ref().unwrap();
            let e: Vec<f64> = (0..n).map(|i| x[i] - xs[i]).collect();
            let ae = a.spmv(&e);
            hist.push(block::dot(&e, &ae));
        }
    }

    let outer_iters = match variant {
        Variant::Restructured => inner,
        _ => outer,
    };
    Ok(finish_report(
        a,
        b,
        &x,
        cfg,
        rho0,
        history,
        outer_iters,
        inner,
        breakdown,
        pr,
        max_basis_dev,
        max_pg_dev,
        a_err_hist,
    ))
}

fn within_cap(variant: Variant, outer: usize, inner: usize, cfg: &SolveConfig) -> bool {
    match variant {
        Variant::Restructured => inner < cfg.k_max,
        _ => outer < cfg.k_max,
    }
}

/// Split the residual into its per-domain block. MSDO-CG drops columns
/// whose residual piece has (numerically) vanished; it is a breakdown only
/// when every column is gone while the residual is still above tolerance.
fn msdo_or_initial_seed<F>(
    split: &F,
    r: &[f64],
    method: Method,
) -> std::result::Result<BlockVectors, BasisBreakdown>
where
    F: Fn(&[f64]) -> BlockVectors,
{
    let full = split(r);
    if method != Method::MsdoCg {
        return Ok(full);
    }
    let norms: Vec<f64> = (0..full.m()).map(|j| full.col_norm2(j)).collect();
    let max_norm = norms.iter().fold(0.0f64, |a, &v| a.max(v));
    if max_norm == 0.0 {
        return Err(BasisBreakdown {
            context: "msdo-split",
            column: 0,
            pivot: 0.0,
            threshold: 0.0,
        });
    }
    let cutoff = f64::EPSILON * max_norm;
    let kept: Vec<usize> = (0..full.m()).filter(|&j| norms[j] > cutoff).collect();
    if kept.len() == full.m() {
        return Ok(full);
    }
    let mut trimmed = BlockVectors::zeros(full.n(), kept.len());
    for (dst, &j) in kept.iter().enumerate() {
        trimmed.col_mut(dst).copy_from_slice(full.col(j));
    }
    Ok(trimmed)
}

/// `alpha = V^t r; x += V alpha; r -= (A V) alpha`.
fn apply_update(a: &SparseSpd, v: &BlockVectors, x: &mut [f64], r: &mut [f64]) {
    let rb = BlockVectors::from_vector(r);
    let alpha = block::xt_y(v, &rb);
    let mut xb = BlockVectors::from_vector(x);
    block::add_prod(&mut xb, v, &alpha, 1.0);
    x.copy_from_slice(xb.col(0));
    let av = spmm(a, v);
    let mut rb = BlockVectors::from_vector(r);
    block::add_prod(&mut rb, &av, &alpha, -1.0);
    r.copy_from_slice(rb.col(0));
}

fn check_precond(cfg: &SolveConfig, pr: Option<&BlockJacobiPrecond>) -> Result<()> {
    match (cfg.precond, pr) {
        (PrecondKind::None, None) => Ok(()),
        (PrecondKind::BjChol, Some(m)) if m.mode() == PrecondMode::Cholesky => Ok(()),
        (PrecondKind::BjIc0, Some(m)) if m.mode() == PrecondMode::Ic0 => Ok(()),
        _ => Err(Error::InvalidConfig(
            "preconditioner argument does not match cfg.precond".into(),
        )),
    }
}

#[allow(clippy::too_many_arguments)]
fn finish_report(
    a: &SparseSpd,
    b: &[f64],
    x: &[f64],
    cfg: &SolveConfig,
    rho0: f64,
    history: Vec<f64>,
    outer_iters: usize,
    inner_iters: usize,
    breakdown: Option<BasisBreakdown>,
    pr: Option<&BlockJacobiPrecond>,
    max_basis_dev: Option<f64>,
    max_pg_dev: Option<f64>,
    a_norm_error_history: Option<Vec<f64>>,
) -> SolveReport {
    let n = a.n();
    let final_abs = *history.last().unwrap();
    let (final_relres, true_final_relres) = if rho0 == 0.0 {
        (0.0, 0.0)
    } else {
        let ax = a.spmv(x);
        let true_res: Vec<f64> = (0..n).map(|i| b[i] - ax[i]).collect();
        (final_abs / rho0, block::norm2(&true_res) / rho0)
    };
    let converged = breakdown.is_none() && final_relres <= cfg.epsilon && rho0 >= 0.0;

    let (kind, iters) = comm_kind(cfg, outer_iters, inner_iters);
    let comm = commcost::messages_total(kind, iters, cfg.s, cfg.t.max(1), cfg.t.max(1))
        .ok()
        .map(|messages| CommEstimate {
            kind,
            messages,
            words: None,
        });

    SolveReport {
        converged,
        outer_iters,
        inner_equiv_iters: inner_iters,
        residual_history: history,
        breakdown,
        comm,
        final_relres,
        true_final_relres,
        precond_shifted: pr.map(|m| !m.shifted_blocks().is_empty()).unwrap_or(false),
        max_basis_dev,
        max_pg_dev,
        a_norm_error_history,
    }
}

/// Map a configuration to its message-count formula and iteration argument.
pub fn comm_kind(cfg: &SolveConfig, outer_iters: usize, inner_iters: usize) -> (CommKind, usize) {
    match (cfg.method, cfg.variant) {
        (Method::Cg, _) => (CommKind::Cg, outer_iters),
        (_, Variant::Restructured) => (CommKind::Enlarged, inner_iters),
        (_, Variant::SStep) => (CommKind::SStep, outer_iters),
        (Method::MsdoCg, _) => (CommKind::CaMsdo, outer_iters),
        (_, _) => (CommKind::CaSre, outer_iters),
    }
}

/// Label for the relation between a restructured run's step count and the
/// matching s-step run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelationLabel {
    /// `k1 = s * ceil(k / s)`: the batched run converged in exactly the
    /// rounded-up step count.
    Exact,
    /// `k1 <= k + s - 1`: within the round-up slack.
    WithinSMinusOne,
    /// `k1 >= k + s`: the batched run needed extra steps (residual
    /// fluctuation).
    ExceedsByS,
}

/// Outcome of [`check_convergence_relation`].
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRelation {
    pub s: usize,
    /// Total steps of the restructured run.
    pub k1: usize,
    /// Reference count: the s-step run's inner-equivalent iterations
    /// (`s * k_s`), which equals the stepwise count rounded up to a multiple
    /// of `s` when every merged batch is exact.
    pub k_ref: usize,
    pub label: RelationLabel,
}

/// Classify how a restructured run's total step count `k1` relates to the
/// matching s-step run (same configuration, different variant).
pub fn check_convergence_relation(
    report_sstep: &SolveReport,
    report_restructured: &SolveReport,
    s: usize,
) -> ConvergenceRelation {
    let k1 = report_restructured.outer_iters;
    let k_ref = report_sstep.inner_equiv_iters;
    let exact = s * k_ref.div_ceil(s);
    let label = if k1 == exact {
        RelationLabel::Exact
    } else if k1 <= k_ref + s - 1 {
        RelationLabel::WithinSMinusOne
    } else {
        RelationLabel::ExceedsByS
    };
    ConvergenceRelation {
        s,
        k1,
        k_ref,
        label,
    }
}
