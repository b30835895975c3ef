//! Block Jacobi preconditioners built on the partition's base domains.
//!
//! `M = L L^t` with `L` block diagonal: one lower-triangular factor per
//! base domain (64 at desk scale), from either a complete Cholesky
//! decomposition of the diagonal block or an incomplete Cholesky with zero
//! fill-in (IC(0), keeping exactly the block's lower-triangular sparsity).
//! Because `L` is block diagonal and every solver domain is a union of
//! consecutive base domains, the split-preconditioned methods only ever
//! need per-domain triangular solves: `L^{-t}[T(L^{-1}r)] = M^{-1}[T(r)]`
//! holds identically.

use std::ops::Range;

use crate::block::BlockVectors;
use crate::error::{Error, Result};
use crate::partition::Partition;
use crate::sparse::SparseSpd;

/// Factorization mode for the diagonal blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrecondMode {
    /// Complete Cholesky of each diagonal block.
    Cholesky,
    /// Incomplete Cholesky, zero fill-in: the factor keeps exactly the
    /// lower-triangular sparsity of the block.
    Ic0,
}

/// Blocks at or below this row count are factored densely.
const DENSE_LIMIT: usize = 500;

#[derive(Debug, Clone)]
enum FactorStorage {
    /// Row-major lower triangle, `nb * nb`.
    Dense(Vec<f64>),
    /// Sparse rows and their transpose, ascending indices, diagonal included.
    Sparse {
        rows: Vec<Vec<(usize, f64)>>,
        cols: Vec<Vec<(usize, f64)>>,
    },
}

#[derive(Debug, Clone)]
struct Factor {
    nb: usize,
    storage: FactorStorage,
}

/// Per-base-domain triangular factors implementing `M = L L^t`.
#[derive(Debug, Clone)]
pub struct BlockJacobiPrecond {
    base_ranges: Vec<Range<usize>>,
    factors: Vec<Factor>,
    mode: PrecondMode,
    /// `(block index, final shift)` for IC(0) blocks that needed a diagonal
    /// shift to complete.
    shifted: Vec<(usize, f64)>,
}

impl BlockJacobiPrecond {
    pub fn mode(&self) -> PrecondMode {
        self.mode
    }

    /// Base domain count.
    pub fn base_t(&self) -> usize {
        self.base_ranges.len()
    }

    /// IC(0) blocks that required a diagonal shift, with the shift applied.
    pub fn shifted_blocks(&self) -> &[(usize, f64)] {
        &self.shifted
    }

    /// True when the factors conform to the partition's base domains.
    pub fn conforms_to(&self, p: &Partition) -> bool {
        self.base_ranges.len() == p.base_t()
            && (0..p.base_t()).all(|b| self.base_ranges[b] == p.base_range(b))
    }
}

/// Factor each base-domain diagonal block of `A` (already reordered by `P`).
///
/// IC(0) pivot breakdowns retry with a shifted block `A_ii + sigma I`,
/// `sigma = 1e-3 * max diag`, doubling until the factorization completes;
/// affected blocks are recorded on the result.
pub fn build_block_jacobi(
    a: &SparseSpd,
    p: &Partition,
    mode: PrecondMode,
) -> Result<BlockJacobiPrecond> {
    if a.n() != p.n() {
        return Err(Error::DimensionMismatch(format!(
            "matrix has {} rows, partition {}",
            a.n(),
            p.n()
        )));
    }
    let mut factors = Vec::with_capacity(p.base_t());
    let mut shifted = Vec::new();
    for b in 0..p.base_t() {
        let range = p.base_range(b);
        let (factor, shift) = factor_block(a, range.clone(), mode).map_err(|e| match e {
            Error::InvalidMatrix(msg) => {
                Error::InvalidMatrix(format!("base domain {b} ({range:?}): {msg}"))
            }
            other => other,
        })?;
        if shift > 0.0 {
            shifted.push((b, shift));
        }
        factors.push(factor);
    }
    Ok(BlockJacobiPrecond {
        base_ranges: (0..p.base_t()).map(|b| p.base_range(b)).collect(),
        factors,
        mode,
        shifted,
    })
}

fn factor_block(a: &SparseSpd, range: Range<usize>, mode: PrecondMode) -> Result<(Factor, f64)> {
    let nb = range.len();
    let start = range.start;
    // Local lower-triangle entries (li >= lj), ascending.
    let mut lower: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nb];
    let mut max_diag = 0.0f64;
    for g in range.clone() {
        let li = g - start;
        for idx in a.row_ptr()[g]..a.row_ptr()[g + 1] {
            let c = a.col_idx()[idx];
            if c >= start && c <= g {
                lower[li].push((c - start, a.vals()[idx]));
                if c == g {
                    max_diag = max_diag.max(a.vals()[idx]);
                }
            }
        }
    }

    let mut shift = 0.0f64;
    loop {
        let attempt = if nb <= DENSE_LIMIT {
            factor_dense(nb, &lower, shift, mode)
        } else {
            factor_sparse(nb, &lower, shift, mode)
        };
        match attempt {
            Ok(storage) => return Ok((Factor { nb, storage }, shift)),
            Err(_) if mode == PrecondMode::Ic0 => {
                shift = if shift == 0.0 {
                    1e-3 * max_diag
                } else {
                    2.0 * shift
                };
                if !shift.is_finite() || shift > 1e64 {
                    return Err(Error::InvalidMatrix(
                        "IC(0) shift diverged without producing a factor".into(),
                    ));
                }
            }
            Err(e) => return Err(e),
        }
    }
}

fn factor_dense(
    nb: usize,
    lower: &[Vec<(usize, f64)>],
    shift: f64,
    mode: PrecondMode,
) -> Result<FactorStorage> {
    // Work array holds the block's lower triangle; IC(0) restricts updates
    // to the original pattern.
    let mut l = vec![0.0f64; nb * nb];
    let mut in_pattern = match mode {
        PrecondMode::Ic0 => Some(vec![false; nb * nb]),
        PrecondMode::Cholesky => None,
    };
    for (i, row) in lower.iter().enumerate() {
        for &(j, v) in row {
            l[i * nb + j] = if i == j { v + shift } else { v };
            if let Some(p) = in_pattern.as_mut() {
                p[i * nb + j] = true;
            }
        }
    }
    for k in 0..nb {
        let mut diag = l[k * nb + k];
        for p in 0..k {
            let v = l[k * nb + p];
            diag -= v * v;
        }
        if diag <= 0.0 {
            return Err(Error::InvalidMatrix(format!(
                "nonpositive pivot {diag:.3e} at local row {k}"
            )));
        }
        let dk = diag.sqrt();
        l[k * nb + k] = dk;
        for i in (k + 1)..nb {
            let keep = match &in_pattern {
                Some(p) => p[i * nb + k],
                None => true,
            };
            if !keep {
                continue;
            }
            let mut v = l[i * nb + k];
            for p in 0..k {
                v -= l[i * nb + p] * l[k * nb + p];
            }
            l[i * nb + k] = v / dk;
        }
    }
    Ok(FactorStorage::Dense(l))
}

fn factor_sparse(
    nb: usize,
    lower: &[Vec<(usize, f64)>],
    shift: f64,
    mode: PrecondMode,
) -> Result<FactorStorage> {
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(nb);
    let mut y = vec![0.0f64; nb];
    for i in 0..nb {
        // Row i of A's lower triangle, shifted diagonal.
        let mut pattern: Vec<usize> = Vec::new();
        let mut aii = 0.0;
        for &(j, v) in &lower[i] {
            if j == i {
                aii = v + shift;
            } else {
                y[j] = v;
                pattern.push(j);
            }
        }
        // In IC(0) only original positions are computed; complete Cholesky
        // takes every column with a (possibly filled) nonzero.
        let columns: Vec<usize> = match mode {
            PrecondMode::Ic0 => pattern.clone(),
            PrecondMode::Cholesky => (0..i).collect(),
        };
        let mut row_i: Vec<(usize, f64)> = Vec::new();
        for &j in &columns {
            // y_j := (y_j - sum_{k<j} L[j,k] y_k) / L[j,j]
            let mut v = y[j];
            let mut djj = 1.0;
            for &(k, ljk) in &rows[j] {
                if k < j {
                    v -= ljk * y[k];
                } else if k == j {
                    djj = ljk;
                }
            }
            let lij = v / djj;
            y[j] = lij;
            if lij != 0.0 {
                row_i.push((j, lij));
            }
        }
        let mut diag = aii;
        for &(_, v) in &row_i {
            diag -= v * v;
        }
        // Clear the work array before any early return.
        for &(j, _) in &row_i {
            y[j] = 0.0;
        }
        for &j in &pattern {
            y[j] = 0.0;
        }
        if diag <= 0.0 {
            return Err(Error::InvalidMatrix(format!(
                "nonpositive pivot {diag:.3e} at local row {i}"
            )));
        }
        row_i.push((i, diag.sqrt()));
        rows.push(row_i);
    }
    let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nb];
    for (i, row) in rows.iter().enumerate() {
        for &(j, v) in row {
            cols[j].push((i, v));
        }
    }
    Ok(FactorStorage::Sparse { rows, cols })
}

impl Factor {
    /// Forward substitution `x := L^{-1} x` on one block slice.
    fn solve_lower(&self, x: &mut [f64]) {
        let nb = self.nb;
        match &self.storage {
            FactorStorage::Dense(l) => {
                for i in 0..nb {
                    let mut v = x[i];
                    for j in 0..i {
                        let lij = l[i * nb + j];
                        if lij != 0.0 {
                            v -= lij * x[j];
                        }
                    }
                    x[i] = v / l[i * nb + i];
                }
            }
            FactorStorage::Sparse { rows, .. } => {
                for i in 0..nb {
                    let mut v = x[i];
                    let mut diag = 1.0;
                    for &(j, lij) in &rows[i] {
                        if j < i {
                            v -= lij * x[j];
                        } else {
                            diag = lij;
                        }
                    }
                    x[i] = v / diag;
                }
            }
        }
    }

    /// Backward substitution `x := L^{-t} x` on one block slice.
    fn solve_upper(&self, x: &mut [f64]) {
        let nb = self.nb;
        match &self.storage {
            FactorStorage::Dense(l) => {
                for i in (0..nb).rev() {
                    let mut v = x[i];
                    for j in (i + 1)..nb {
                        let lji = l[j * nb + i];
                        if lji != 0.0 {
                            v -= lji * x[j];
                        }
                    }
                    x[i] = v / l[i * nb + i];
                }
            }
            FactorStorage::Sparse { cols, .. } => {
                for i in (0..nb).rev() {
                    let mut v = x[i];
                    let mut diag = 1.0;
                    for &(j, lji) in &cols[i] {
                        if j > i {
                            v -= lji * x[j];
                        } else if j == i {
                            diag = lji;
                        }
                    }
                    x[i] = v / diag;
                }
            }
        }
    }
}

/// `Y = L^{-1} X`, blockwise forward substitution per column.
pub fn apply_linv(pr: &BlockJacobiPrecond, x: &BlockVectors) -> BlockVectors {
    apply(pr, x, |f, s| f.solve_lower(s))
}

/// `Y = L^{-t} X`, blockwise backward substitution per column.
pub fn apply_ltinv(pr: &BlockJacobiPrecond, x: &BlockVectors) -> BlockVectors {
    apply(pr, x, |f, s| f.solve_upper(s))
}

/// `Y = M^{-1} X = L^{-t} L^{-1} X`.
pub fn apply_minv(pr: &BlockJacobiPrecond, x: &BlockVectors) -> BlockVectors {
    apply(pr, x, |f, s| {
        f.solve_lower(s);
        f.solve_upper(s);
    })
}

/// `M^{-1} r` for a single vector.
pub fn apply_minv_vec(pr: &BlockJacobiPrecond, r: &[f64]) -> Vec<f64> {
    let mut y = r.to_vec();
    for (b, range) in pr.base_ranges.iter().enumerate() {
        let s = &mut y[range.clone()];
        pr.factors[b].solve_lower(s);
        pr.factors[b].solve_upper(s);
    }
    y
}

fn apply<F>(pr: &BlockJacobiPrecond, x: &BlockVectors, f: F) -> BlockVectors
where
    F: Fn(&Factor, &mut [f64]),
{
    let mut y = x.clone();
    for j in 0..y.m() {
        let col = y.col_mut(j);
        for (b, range) in pr.base_ranges.iter().enumerate() {
            f(&pr.factors[b], &mut col[range.clone()]);
        }
    }
    y
}

/// `M^{-1} [T(r)]`: the split residual with each column solved in place.
///
/// Column `d` is supported on domain `d` only, and the block-diagonal
/// factors keep it there, so only the base blocks inside the domain are
/// solved. Identical to `L^{-t}[T(L^{-1} r)]` for this block-diagonal `L`.
pub fn split_t_prec(pr: &BlockJacobiPrecond, r: &[f64], p: &Partition) -> BlockVectors {
    assert!(
        pr.conforms_to(p),
        "preconditioner base domains do not match the partition"
    );
    let mut w = crate::partition::split_t(r, p);
    let per = p.base_t() / p.t();
    for d in 0..p.t() {
        let col = w.col_mut(d);
        for b in d * per..(d + 1) * per {
            let range = pr.base_ranges[b].clone();
            let s = &mut col[range];
            pr.factors[b].solve_lower(s);
            pr.factors[b].solve_upper(s);
        }
    }
    w
}
