//! A-inner-product orthonormalization kernels and basis construction.
//!
//! Every enlarged CG variant builds blocks that are orthonormal in the
//! A-inner product (`V^t A V = I`). The kernels here are the standard
//! combination used throughout: classical Gram-Schmidt projection applied
//! twice ([`cgs2_against`]) against earlier basis vectors, followed by a
//! self-orthonormalization of the block via Cholesky of its A-Gram matrix
//! ([`a_cholqr`]), or the more robust [`pre_cholqr`] which first
//! orthonormalizes in the Euclidean inner product.
//!
//! Two block-expansion procedures sit on top:
//!
//! * [`arnoldi_step`] - the stepwise block expansion: one block is
//!   multiplied by the operator, projected, and self-orthonormalized per
//!   call (full or truncated projection window).
//! * [`ca_arnoldi`] - the communication-avoiding expansion that builds all
//!   `s` blocks before orthonormalizing. [`CaKernel::Monomial`] computes the
//!   whole monomial slab first; [`CaKernel::SeedOrtho`] cleans the seed
//!   block (projection + self-orthonormalization) before expanding, which
//!   is markedly more stable on ill-conditioned operators.

use std::collections::VecDeque;

use crate::block::{self, BlockVectors, DenseMatrix};
use crate::error::BasisBreakdown;
use crate::sparse::{spmm, SparseSpd};

/// Self-orthonormalization kernel choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrthoKind {
    /// Cholesky QR directly in the A-inner product.
    ACholQr,
    /// Euclidean Cholesky QR first, then A-CholQR; robust to badly scaled
    /// columns.
    PreCholQr,
}

/// Projection window for [`cgs2_against`] and [`arnoldi_step`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Window {
    /// Project against every held block.
    Full,
    /// Project against the last `k` held blocks.
    Last(usize),
}

/// `X^t (A Y)`, the A-inner-product Gram matrix of two blocks.
///
/// `A Y` is formed by [`spmm`], so the evaluation is deterministic.
pub fn a_gram(a: &SparseSpd, x: &BlockVectors, y: &BlockVectors) -> DenseMatrix {
    let ay = spmm(a, y);
    block::xt_y(x, &ay)
}

/// Accumulated A-orthonormal basis, grown one block at a time.
///
/// `keep` bounds how many trailing blocks stay resident: the short
/// recurrence methods only ever project against a bounded window (the
/// stepwise form needs the last two blocks, the communication-avoiding form
/// the last `s + 1`), so older blocks can be dropped. Full-basis methods
/// keep everything.
#[derive(Debug, Clone)]
pub struct BasisAccumulator {
    n: usize,
    blocks: VecDeque<BlockVectors>,
    keep: Option<usize>,
    cols_appended: usize,
}

impl BasisAccumulator {
    /// Accumulator that retains every appended block.
    pub fn full(n: usize) -> Self {
        Self {
            n,
            blocks: VecDeque::new(),
            keep: None,
            cols_appended: 0,
        }
    }

    /// Accumulator that retains only the last `keep` blocks.
    pub fn windowed(n: usize, keep: usize) -> Self {
        assert!(keep >= 1);
        Self {
            n,
            blocks: VecDeque::new(),
            keep: Some(keep),
            cols_appended: 0,
        }
    }

    /// Append a block, evicting beyond the retention window.
    pub fn push(&mut self, block: BlockVectors) {
        assert_eq!(block.n(), self.n, "push: row count mismatch");
        self.cols_appended += block.m();
        self.blocks.push_back(block);
        if let Some(keep) = self.keep {
            while self.blocks.len() > keep {
                self.blocks.pop_front();
            }
        }
    }

    /// Total columns ever appended (not just resident ones).
    pub fn cols_appended(&self) -> usize {
        self.cols_appended
    }

    /// Resident blocks, oldest first.
    pub fn blocks(&self) -> impl Iterator<Item = &BlockVectors> {
        self.blocks.iter()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// The blocks a projection with the given window sees, oldest first.
    pub fn view(&self, window: Window) -> Vec<&BlockVectors> {
        match window {
            Window::Full => self.blocks.iter().collect(),
            Window::Last(k) => {
                let skip = self.blocks.len().saturating_sub(k);
                self.blocks.iter().skip(skip).collect()
            }
        }
    }
}

/// Classical Gram-Schmidt A-projection, applied twice.
///
/// Removes from `w` its A-inner-product components along every block in
/// `against`: `w -= Q (Q^t A w)`, twice. Projection coefficients within a
/// pass are all computed from the same `A w` before any subtraction.
pub fn cgs2_against(a: &SparseSpd, w: &mut BlockVectors, against: &[&BlockVectors]) {
    if against.is_empty() {
        return;
    }
    for _ in 0..2 {
        let aw = spmm(a, w);
        for q in against {
            let coeff = block::xt_y(q, &aw);
            block::add_prod(w, q, &coeff, -1.0);
        }
    }
}

/// Self-orthonormalization by Cholesky QR in the A-inner product.
///
/// Factors `B = W^t A W = R^t R` and replaces `W` with `W R^{-1}`, so the
/// result satisfies `V^t A V = I`. Fails with [`BasisBreakdown`] when the
/// Gram matrix is numerically rank deficient.
pub fn a_cholqr(a: &SparseSpd, w: &mut BlockVectors) -> Result<(), BasisBreakdown> {
    let b = a_gram(a, w, w);
    let r = block::cholesky_upper(&b, "a-cholqr")?;
    block::trsm_right_upper(w, &r);
    Ok(())
}

/// Euclidean Cholesky QR followed by [`a_cholqr`].
///
/// Columns are first scaled to unit Euclidean norm, so wildly different
/// column scales cannot poison either Gram matrix.
pub fn pre_cholqr(a: &SparseSpd, w: &mut BlockVectors) -> Result<(), BasisBreakdown> {
    equilibrate_columns(w, "pre-cholqr")?;
    let g = block::xt_y(w, w);
    let s = block::cholesky_upper(&g, "pre-cholqr")?;
    block::trsm_right_upper(w, &s);
    a_cholqr(a, w)
}

/// Scale every column to unit Euclidean norm. A zero column is a breakdown.
pub(crate) fn equilibrate_columns(
    w: &mut BlockVectors,
    context: &'static str,
) -> Result<(), BasisBreakdown> {
    for j in 0..w.m() {
        let norm = w.col_norm2(j);
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(BasisBreakdown {
                context,
                column: j,
                pivot: norm,
                threshold: 0.0,
            });
        }
        w.scale_col(j, 1.0 / norm);
    }
    Ok(())
}

/// Dispatch on the configured self-orthonormalization kernel.
pub fn self_orthonormalize(
    a: &SparseSpd,
    w: &mut BlockVectors,
    ortho: OrthoKind,
) -> Result<(), BasisBreakdown> {
    match ortho {
        OrthoKind::ACholQr => a_cholqr(a, w),
        OrthoKind::PreCholQr => pre_cholqr(a, w),
    }
}

/// One stepwise block expansion: `W = op(W_prev)`, A-projected against the
/// window of `q`, self-orthonormalized, appended to `q`.
///
/// `op` is the operator generating the next block (`A`, or `M^{-1} A` in
/// split-preconditioned solves); the inner products always use `a` itself.
pub fn arnoldi_step<F>(
    a: &SparseSpd,
    op: F,
    w_prev: &BlockVectors,
    q: &mut BasisAccumulator,
    window: Window,
    ortho: OrthoKind,
) -> Result<BlockVectors, BasisBreakdown>
where
    F: Fn(&BlockVectors) -> BlockVectors,
{
    let mut w = op(w_prev);
    cgs2_against(a, &mut w, &q.view(window));
    self_orthonormalize(a, &mut w, ortho)?;
    q.push(w.clone());
    Ok(w)
}

/// Seed a basis: self-orthonormalize the starting block (no projection) and
/// append it.
pub fn seed_block(
    a: &SparseSpd,
    seed: &BlockVectors,
    q: &mut BasisAccumulator,
    ortho: OrthoKind,
) -> Result<BlockVectors, BasisBreakdown> {
    let mut w = seed.clone();
    self_orthonormalize(a, &mut w, ortho)?;
    q.push(w.clone());
    Ok(w)
}

/// Communication-avoiding slab construction order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaKernel {
    /// Compute all `s` monomial blocks first, then orthonormalize the whole
    /// slab (projection against the window, then self-orthonormalization).
    Monomial,
    /// Project and self-orthonormalize the first block before expanding the
    /// remaining `s - 1` powers from the cleaned block, then orthonormalize
    /// the slab.
    SeedOrtho,
}

/// Build one `n x st` slab of new basis vectors.
///
/// * `seed` is the previous block (`advance_seed = true` multiplies it by
///   `op` first) or the starting block derived from the split residual.
/// * `project` controls projection against `q` (off on the very first
///   iteration, when `q` holds nothing independent of the slab).
/// * The slab's blocks are appended to `q`; the slab is also returned for
///   the solution update.
///
/// With `s = 1` both kernels reduce exactly to the stepwise expansion: the
/// operation sequence matches [`arnoldi_step`] / [`seed_block`].
#[allow(clippy::too_many_arguments)]
pub fn ca_arnoldi<F>(
    a: &SparseSpd,
    op: F,
    seed: &BlockVectors,
    q: &mut BasisAccumulator,
    s: usize,
    advance_seed: bool,
    project: bool,
    kernel: CaKernel,
    window: Window,
    ortho: OrthoKind,
) -> Result<BlockVectors, BasisBreakdown>
where
    F: Fn(&BlockVectors) -> BlockVectors,
{
    assert!(s >= 1);
    let t = seed.m();

    if s == 1 {
        // Identical operation sequence to the stepwise methods.
        let mut w = if advance_seed { op(seed) } else { seed.clone() };
        if project {
            cgs2_against(a, &mut w, &q.view(window));
        }
        self_orthonormalize(a, &mut w, ortho)?;
        q.push(w.clone());
        return Ok(w);
    }

    let mut first = if advance_seed { op(seed) } else { seed.clone() };
    if kernel == CaKernel::SeedOrtho {
        if project {
            cgs2_against(a, &mut first, &q.view(window));
        }
        self_orthonormalize(a, &mut first, ortho)?;
    }

    // Expand the powers before any further orthonormalization.
    let mut slab = BlockVectors::zeros(seed.n(), 0);
    slab.append_columns(&first);
    let mut prev = first;
    for _ in 1..s {
        let next = op(&prev);
        slab.append_columns(&next);
        prev = next;
    }

    if project {
        cgs2_against(a, &mut slab, &q.view(window));
    }
    // Column scales grow geometrically with the power; equilibrate before
    // the slab Gram matrix (a right diagonal scaling, same subspace).
    equilibrate_columns(&mut slab, "ca-basis")?;
    self_orthonormalize(a, &mut slab, ortho)?;

    for b in 0..s {
        q.push(slab.columns(b * t, (b + 1) * t));
    }
    Ok(slab)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::gen_poisson2d;

    fn two_by_two() -> SparseSpd {
        SparseSpd::from_entries(2, &[(0, 0, 4.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 3.0)], 0.0)
            .unwrap()
    }

    fn deterministic_block(n: usize, m: usize, salt: usize) -> BlockVectors {
        let mut w = BlockVectors::zeros(n, m);
        for j in 0..m {
            for i in 0..n {
                w.col_mut(j)[i] = (((i * 31 + j * 17 + salt * 7 + 3) % 97) as f64) / 97.0 - 0.43;
            }
        }
        w
    }

    #[test]
    fn a_gram_unit_vector() {
        let a = two_by_two();
        let e1 = BlockVectors::from_col_major(2, 1, vec![1.0, 0.0]);
        let g = a_gram(&a, &e1, &e1);
        assert_eq!(g.get(0, 0), 4.0);
    }

    #[test]
    fn a_cholqr_identity_block_hand_cholesky() {
        // W = I (2x2): B = A, R = [[2, .5],[0, sqrt(2.75)]], V = R^{-1}.
        let a = two_by_two();
        let mut w = BlockVectors::from_col_major(2, 2, vec![1.0, 0.0, 0.0, 1.0]);
        a_cholqr(&a, &mut w).unwrap();
        let g = a_gram(&a, &w, &w);
        assert!(g.max_abs_dev_from_identity() <= 1e-15);
    }

    #[test]
    fn a_cholqr_single_column_normalizes() {
        let a = two_by_two();
        let v = vec![1.0, 2.0];
        let mut w = BlockVectors::from_vector(&v);
        a_cholqr(&a, &mut w).unwrap();
        // v^t A v = 4 + 2*2 + 4*3 = 20; expected v / sqrt(20).
        let scale = 1.0 / 20.0f64.sqrt();
        assert!((w.col(0)[0] - scale).abs() <= 1e-15);
        assert!((w.col(0)[1] - 2.0 * scale).abs() <= 1e-15);
    }

    #[test]
    fn a_cholqr_duplicate_columns_break_down() {
        let a = two_by_two();
        let mut w = BlockVectors::from_col_major(2, 2, vec![1.0, 2.0, 1.0, 2.0]);
        let err = a_cholqr(&a, &mut w).unwrap_err();
        assert_eq!(err.context, "a-cholqr");
        assert_eq!(err.column, 1);
    }

    #[test]
    fn pre_cholqr_identity_on_orthonormal_columns() {
        // A = I, W orthonormal: both stages are the identity within 1e-15.
        let a = SparseSpd::from_entries(2, &[(0, 0, 1.0), (1, 1, 1.0)], 0.0).unwrap();
        let mut w = BlockVectors::from_col_major(2, 2, vec![1.0, 0.0, 0.0, 1.0]);
        let orig = w.clone();
        pre_cholqr(&a, &mut w).unwrap();
        for j in 0..2 {
            for i in 0..2 {
                assert!((w.col(j)[i] - orig.col(j)[i]).abs() <= 1e-15);
            }
        }
    }

    #[test]
    fn pre_cholqr_survives_extreme_column_scaling() {
        // Diagonal A with a wide spectrum and columns scaled 1e8 apart:
        // the A-Gram matrix spans ~1e16 in magnitude and a-cholqr's absolute
        // pivot test reports rank deficiency, while pre-cholqr equilibrates
        // first and succeeds.
        let a = SparseSpd::from_entries(
            3,
            &[(0, 0, 1e4), (1, 1, 1.0), (2, 2, 1e-4), (0, 1, 0.3), (1, 0, 0.3)],
            0.0,
        )
        .unwrap();
        let mut w = BlockVectors::zeros(3, 3);
        w.col_mut(0).copy_from_slice(&[1e8, 1e8, 0.0]);
        w.col_mut(1).copy_from_slice(&[0.0, 1.0, 1.0]);
        w.col_mut(2).copy_from_slice(&[1e-8, 0.0, 1e-8]);

        let mut w_direct = w.clone();
        let direct = a_cholqr(&a, &mut w_direct);
        assert!(direct.is_err(), "direct Gram spans 1e16+, pivot test trips");

        pre_cholqr(&a, &mut w).unwrap();
        let g = a_gram(&a, &w, &w);
        // Orthonormality degrades with cond(A) ~ 1e8 here; 1e-8 is the
        // attainable level for this deliberately nasty operator.
        assert!(g.max_abs_dev_from_identity() <= 1e-8, "dev = {:.3e}", g.max_abs_dev_from_identity());
    }

    #[test]
    fn pre_cholqr_duplicate_columns_break_down() {
        let a = two_by_two();
        let mut w = BlockVectors::from_col_major(2, 2, vec![1.0, 2.0, 1.0, 2.0]);
        assert!(pre_cholqr(&a, &mut w).is_err());
    }

    #[test]
    fn cgs2_annihilates_projected_components() {
        let a = gen_poisson2d(6);
        let n = a.n();
        let mut q = BasisAccumulator::full(n);
        let w0 = deterministic_block(n, 2, 0);
        let first = seed_block(&a, &w0, &mut q, OrthoKind::PreCholQr).unwrap();
        let w1 = arnoldi_step(
            &a,
            |x| spmm(&a, x),
            &first,
            &mut q,
            Window::Full,
            OrthoKind::PreCholQr,
        )
        .unwrap();

        // New block is A-orthogonal to the seed block.
        let g = a_gram(&a, &first, &w1);
        assert!(g.max_abs() <= 1e-12, "coupling {:.3e}", g.max_abs());

        // A member of the basis projects to (numerically) zero.
        let mut member = first.columns(0, 1);
        cgs2_against(&a, &mut member, &q.view(Window::Full));
        assert!(member.col_norm2(0) <= 1e-12);
    }

    #[test]
    fn cgs2_leaves_orthogonal_input_unchanged() {
        let a = gen_poisson2d(5);
        let n = a.n();
        let mut q = BasisAccumulator::full(n);
        seed_block(&a, &deterministic_block(n, 2, 1), &mut q, OrthoKind::PreCholQr).unwrap();
        // Build a block already A-orthogonal to q, then re-project it.
        let mut w = deterministic_block(n, 2, 5);
        cgs2_against(&a, &mut w, &q.view(Window::Full));
        let before = w.clone();
        cgs2_against(&a, &mut w, &q.view(Window::Full));
        for j in 0..w.m() {
            for i in 0..n {
                assert!(
                    (w.col(j)[i] - before.col(j)[i]).abs() <= 1e-14,
                    "third projection moved an entry"
                );
            }
        }
    }

    #[test]
    fn a_cholqr_is_scale_invariant_on_the_subspace() {
        // a_cholqr(W C) spans the same space for upper-triangular C with
        // positive diagonal: the A-projector agrees on probe vectors.
        let a = gen_poisson2d(4);
        let n = a.n();
        let w = deterministic_block(n, 3, 2);
        let mut c = DenseMatrix::zeros(3, 3);
        c.set(0, 0, 2.0);
        c.set(1, 1, 0.5);
        c.set(2, 2, 3.0);
        c.set(0, 1, 1.0);
        c.set(0, 2, -0.7);
        c.set(1, 2, 0.2);
        let mut wc = BlockVectors::zeros(n, 3);
        for j in 0..3 {
            for k in 0..=j {
                let f = c.get(k, j);
                for i in 0..n {
                    wc.col_mut(j)[i] += f * w.col(k)[i];
                }
            }
        }
        let mut v1 = w.clone();
        let mut v2 = wc;
        a_cholqr(&a, &mut v1).unwrap();
        a_cholqr(&a, &mut v2).unwrap();
        // Compare projectors V (V^t A p) on a probe vector.
        let p = deterministic_block(n, 1, 9);
        let mut proj1 = BlockVectors::zeros(n, 1);
        let mut proj2 = BlockVectors::zeros(n, 1);
        block::add_prod(&mut proj1, &v1, &a_gram(&a, &v1, &p), 1.0);
        block::add_prod(&mut proj2, &v2, &a_gram(&a, &v2, &p), 1.0);
        for i in 0..n {
            assert!((proj1.col(0)[i] - proj2.col(0)[i]).abs() <= 1e-10);
        }
    }

    #[test]
    fn ca_arnoldi_s1_matches_arnoldi_step_exactly() {
        let a = gen_poisson2d(5);
        let n = a.n();
        let seed = deterministic_block(n, 2, 3);

        let mut q1 = BasisAccumulator::full(n);
        let first1 = seed_block(&a, &seed, &mut q1, OrthoKind::PreCholQr).unwrap();
        let step =
            arnoldi_step(&a, |x| spmm(&a, x), &first1, &mut q1, Window::Full, OrthoKind::PreCholQr)
                .unwrap();

        for kernel in [CaKernel::Monomial, CaKernel::SeedOrtho] {
            let mut q2 = BasisAccumulator::full(n);
            let first2 = ca_arnoldi(
                &a,
                |x| spmm(&a, x),
                &seed,
                &mut q2,
                1,
                false,
                false,
                kernel,
                Window::Full,
                OrthoKind::PreCholQr,
            )
            .unwrap();
            assert_eq!(first2, first1);
            let slab = ca_arnoldi(
                &a,
                |x| spmm(&a, x),
                &first2,
                &mut q2,
                1,
                true,
                true,
                kernel,
                Window::Full,
                OrthoKind::PreCholQr,
            )
            .unwrap();
            assert_eq!(slab, step, "s=1 slab must equal the stepwise block bitwise");
        }
    }

    #[test]
    fn ca_arnoldi_slab_is_a_orthonormal() {
        let a = gen_poisson2d(10);
        let n = a.n();
        let t = 2;
        let s = 4;
        let seed = deterministic_block(n, t, 4);
        let mut q = BasisAccumulator::full(n);
        let first = ca_arnoldi(
            &a,
            |x| spmm(&a, x),
            &seed,
            &mut q,
            s,
            false,
            false,
            CaKernel::SeedOrtho,
            Window::Full,
            OrthoKind::PreCholQr,
        )
        .unwrap();
        let g = a_gram(&a, &first, &first);
        assert!(g.max_abs_dev_from_identity() <= 1e-10);

        let last = q.view(Window::Last(1))[0].clone();
        let slab = ca_arnoldi(
            &a,
            |x| spmm(&a, x),
            &last,
            &mut q,
            s,
            true,
            true,
            CaKernel::SeedOrtho,
            Window::Full,
            OrthoKind::PreCholQr,
        )
        .unwrap();
        let g = a_gram(&a, &slab, &slab);
        assert!(g.max_abs_dev_from_identity() <= 1e-10, "dev {:.3e}", g.max_abs_dev_from_identity());
        // And the slab is A-orthogonal to the older blocks.
        let all: Vec<&BlockVectors> = q.blocks().collect();
        for qb in &all[..all.len() - s] {
            let g = a_gram(&a, qb, &slab);
            assert!(g.max_abs() <= 1e-10, "old-block coupling {:.3e}", g.max_abs());
        }
    }

    #[test]
    fn windowed_accumulator_evicts() {
        let mut q = BasisAccumulator::windowed(4, 2);
        for salt in 0..4 {
            q.push(deterministic_block(4, 1, salt));
        }
        assert_eq!(q.blocks().count(), 2);
        assert_eq!(q.cols_appended(), 4);
        assert_eq!(q.view(Window::Last(2)).len(), 2);
    }
}
