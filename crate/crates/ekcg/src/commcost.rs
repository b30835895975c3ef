//! Analytic communication model: messages sent in parallel per solve.
//!
//! The model assumes `t` processors (one per partition), counts only global
//! communication (reduction trees of depth `log2`), and reports closed-form
//! totals. Local neighbor exchanges that overlap with computation are not
//! counted. Words-per-message totals are reported only where a closed form
//! exists; elsewhere the field stays empty rather than being estimated.

use crate::error::{Error, Result};

/// Which message-count formula applies to a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommKind {
    /// Classical (preconditioned) CG on `m` processors: `2 k log2(m)`.
    Cg,
    /// Enlarged CG, one block per iteration (stepwise or restructured):
    /// `6 k log2(t)` with `k` the iteration count.
    Enlarged,
    /// s-step enlarged CG: `(5 s + 1) k_s log2(t)`.
    SStep,
    /// Communication-avoiding SRE-CG / SRE-CG2: `11 k_s log2(t)`.
    CaSre,
    /// Communication-avoiding MSDO-CG: `6 k_s log2(t)`.
    CaMsdo,
}

/// Modeled communication volume attached to a solve report.
#[derive(Debug, Clone, PartialEq)]
pub struct CommEstimate {
    pub kind: CommKind,
    /// Total messages sent in parallel.
    pub messages: f64,
    /// Total words; only populated where the model defines a closed form
    /// (currently never), null otherwise.
    pub words: Option<f64>,
}

fn require_pow2(name: &str, v: usize) -> Result<f64> {
    if v == 0 || !v.is_power_of_two() {
        return Err(Error::InvalidConfig(format!(
            "{name} = {v} must be a power of two"
        )));
    }
    Ok((v as f64).log2())
}

/// Total messages sent in parallel until convergence.
///
/// `iters` is `k` for single-step kinds and `k_s` for merged kinds; `s` is
/// the merge count (ignored unless the kind is s-step); `t` the partition
/// count; `m` the processor count (only the CG formula uses it).
pub fn messages_total(kind: CommKind, iters: usize, s: usize, t: usize, m: usize) -> Result<f64> {
    let k = iters as f64;
    match kind {
        CommKind::Cg => Ok(2.0 * k * require_pow2("m", m)?),
        CommKind::Enlarged => Ok(6.0 * k * require_pow2("t", t)?),
        CommKind::SStep => {
            if s == 0 {
                return Err(Error::InvalidConfig("s must be >= 1".into()));
            }
            Ok((5.0 * s as f64 + 1.0) * k * require_pow2("t", t)?)
        }
        CommKind::CaSre => Ok(11.0 * k * require_pow2("t", t)?),
        CommKind::CaMsdo => Ok(6.0 * k * require_pow2("t", t)?),
    }
}

/// Communication reduction of the s-step versions over their stepwise
/// counterparts: `(s - 1) * 100 / (6 s)` percent.
pub fn sstep_reduction_pct(s: usize) -> f64 {
    assert!(s >= 1);
    (s as f64 - 1.0) * 100.0 / (6.0 * s as f64)
}

/// Method family for the reduction-vs-CG formulas.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CgFamily {
    /// Stepwise enlarged: `100 - 3 (0.75)^j 100` percent.
    Sre,
    /// s-step: `100 - (2.5 + 0.5^(i+1)) (0.75)^j 100` percent.
    SStepSre,
    /// Communication-avoiding: `100 - 5.5 (0.5)^i (0.75)^j 100` percent.
    CaSre,
}

/// Reduction in total messages with respect to CG, in percent, for
/// `s = 2^i` merged steps and `t = 2^j` partitions. Negative values mean CG
/// communicates less.
pub fn vs_cg_reduction_pct(family: CgFamily, i: u32, j: u32) -> f64 {
    let p75 = 0.75f64.powi(j as i32);
    match family {
        CgFamily::Sre => 100.0 - 3.0 * p75 * 100.0,
        CgFamily::SStepSre => 100.0 - (2.5 + 0.5f64.powi(i as i32 + 1)) * p75 * 100.0,
        CgFamily::CaSre => 100.0 - 5.5 * 0.5f64.powi(i as i32) * p75 * 100.0,
    }
}

/// Which merged variant the doubling trade-off compares against doubling
/// the partition count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TradeoffMode {
    SStep,
    Ca,
}

/// Outcome of the "merge `s = 2^i` iterations vs multiply partitions by
/// `2^i`" comparison; merging wins when `lhs > rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct TradeoffVerdict {
    pub lhs: f64,
    pub rhs: f64,
    pub merge_wins: bool,
}

/// Evaluate the doubling trade-off inequality for `s = 2^i` and `t`
/// partitions.
///
/// s-step: `6 i (0.75)^i > (5 - 6 (0.75)^i + (0.5)^i) log2(t)`;
/// CA:     `i (0.75)^i > ((0.5)^i - (0.75)^i) log2(t)`.
pub fn doubling_tradeoff(i: u32, t: usize, mode: TradeoffMode) -> Result<TradeoffVerdict> {
    if i == 0 {
        return Err(Error::InvalidConfig("i must be >= 1".into()));
    }
    let logt = require_pow2("t", t)?;
    let p75 = 0.75f64.powi(i as i32);
    let p5 = 0.5f64.powi(i as i32);
    let (lhs, rhs) = match mode {
        TradeoffMode::SStep => (6.0 * i as f64 * p75, (5.0 - 6.0 * p75 + p5) * logt),
        TradeoffMode::Ca => (i as f64 * p75, (p5 - p75) * logt),
    };
    Ok(TradeoffVerdict {
        lhs,
        rhs,
        merge_wins: lhs > rhs,
    })
}
