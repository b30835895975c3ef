//! Dense column blocks and the small dense kernels the solvers are built on.
//!
//! [`BlockVectors`] is the unit every basis kernel operates on: an `n x m`
//! column-major block holding things like `W_k`, the accumulated basis `Q`,
//! or the split residual `T(r)`. [`DenseMatrix`] holds the small `m x m`
//! Gram matrices and Cholesky factors that show up in A-orthonormalization.
//!
//! All products run with a fixed accumulation order (ascending index within
//! each column, columns in order), so every downstream solve is bitwise
//! reproducible.

use crate::error::BasisBreakdown;

/// A dense `n x m` block of column vectors, stored column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockVectors {
    n: usize,
    m: usize,
    data: Vec<f64>,
}

impl BlockVectors {
    /// An `n x m` block of zeros.
    pub fn zeros(n: usize, m: usize) -> Self {
        Self {
            n,
            m,
            data: vec![0.0; n * m],
        }
    }

    /// Build from a column-major buffer. `data.len()` must equal `n * m`.
    pub fn from_col_major(n: usize, m: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), n * m, "column-major buffer has wrong length");
        Self { n, m, data }
    }

    /// A single-column block holding a copy of `v`.
    pub fn from_vector(v: &[f64]) -> Self {
        Self {
            n: v.len(),
            m: 1,
            data: v.to_vec(),
        }
    }

    /// Row count.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Column count.
    pub fn m(&self) -> usize {
        self.m
    }

    /// The raw column-major buffer.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Column `j` as a slice.
    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.n..(j + 1) * self.n]
    }

    /// Column `j` as a mutable slice.
    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.n..(j + 1) * self.n]
    }

    /// Euclidean norm of column `j`.
    pub fn col_norm2(&self, j: usize) -> f64 {
        dot(self.col(j), self.col(j)).sqrt()
    }

    /// Multiply column `j` by `s`.
    pub fn scale_col(&mut self, j: usize, s: f64) {
        for v in self.col_mut(j) {
            *v *= s;
        }
    }

    /// Append the columns of `other` on the right.
    pub fn append_columns(&mut self, other: &BlockVectors) {
        assert_eq!(self.n, other.n, "append_columns: row count mismatch");
        self.data.extend_from_slice(&other.data);
        self.m += other.m;
    }

    /// A new block holding columns `lo..hi`.
    pub fn columns(&self, lo: usize, hi: usize) -> BlockVectors {
        assert!(lo <= hi && hi <= self.m);
        BlockVectors {
            n: self.n,
            m: hi - lo,
            data: self.data[lo * self.n..hi * self.n].to_vec(),
        }
    }

    /// True if any column is identically zero.
    pub fn has_zero_column(&self) -> bool {
        (0..self.m).any(|j| self.col(j).iter().all(|&v| v == 0.0))
    }
}

/// A small dense `rows x cols` matrix, stored column-major.
///
/// Used for Gram matrices, projection coefficients, and triangular factors;
/// `rows` and `cols` are on the order of the block width, never `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    /// A `rows x cols` matrix of zeros.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Entry `(i, j)`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.rows + i]
    }

    /// Set entry `(i, j)`.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[j * self.rows + i] = v;
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |a, &v| a.max(v.abs()))
    }

    /// `max |self - I|` over all entries; the A-orthonormality residual when
    /// `self` is a Gram matrix.
    pub fn max_abs_dev_from_identity(&self) -> f64 {
        let mut dev = 0.0f64;
        for j in 0..self.cols {
            for i in 0..self.rows {
                let target = if i == j { 1.0 } else { 0.0 };
                dev = dev.max((self.get(i, j) - target).abs());
            }
        }
        dev
    }
}

/// Sequential dot product (fixed order).
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for i in 0..a.len() {
        acc += a[i] * b[i];
    }
    acc
}

/// Euclidean norm.
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha * x`.
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for i in 0..x.len() {
        y[i] += alpha * x[i];
    }
}

/// `C = X^t * Y` where `X` is `n x mx` and `Y` is `n x my`.
pub(crate) fn xt_y(x: &BlockVectors, y: &BlockVectors) -> DenseMatrix {
    assert_eq!(x.n, y.n, "xt_y: row count mismatch");
    let mut c = DenseMatrix::zeros(x.m, y.m);
    if x.m == 0 || y.m == 0 || x.n == 0 {
        return c;
    }
    unsafe {
        // X^t viewed as (mx x n): entry (r, k) lives at x.data[r*n + k].
        matrixmultiply::dgemm(
            x.m,
            x.n,
            y.m,
            1.0,
            x.data.as_ptr(),
            x.n as isize,
            1,
            y.data.as_ptr(),
            1,
            y.n as isize,
            0.0,
            c.data.as_mut_ptr(),
            1,
            x.m as isize,
        );
    }
    c
}

/// `W += alpha * Q * C` where `Q` is `n x mq` and `C` is `mq x mw`.
pub(crate) fn add_prod(w: &mut BlockVectors, q: &BlockVectors, c: &DenseMatrix, alpha: f64) {
    assert_eq!(w.n, q.n, "add_prod: row count mismatch");
    assert_eq!(q.m, c.rows, "add_prod: inner dimension mismatch");
    assert_eq!(w.m, c.cols, "add_prod: output column mismatch");
    if q.m == 0 || w.m == 0 || w.n == 0 {
        return;
    }
    unsafe {
        matrixmultiply::dgemm(
            w.n,
            q.m,
            w.m,
            alpha,
            q.data.as_ptr(),
            1,
            q.n as isize,
            c.data.as_ptr(),
            1,
            c.rows as isize,
            1.0,
            w.data.as_mut_ptr(),
            1,
            w.n as isize,
        );
    }
}

/// Upper-triangular Cholesky factor `R` with `B = R^t R`.
///
/// `B` must be symmetric. Fails with [`BasisBreakdown`] when a pivot falls
/// at or below `dim * eps * max|B|`, the rank-deficiency test used by every
/// A-orthonormalization kernel.
pub(crate) fn cholesky_upper(
    b: &DenseMatrix,
    context: &'static str,
) -> Result<DenseMatrix, BasisBreakdown> {
    assert_eq!(b.rows, b.cols, "cholesky_upper: matrix must be square");
    let m = b.rows;
    let threshold = m as f64 * f64::EPSILON * b.max_abs();
    let mut r = DenseMatrix::zeros(m, m);
    for j in 0..m {
        // pivot = B[j,j] - sum_{k<j} R[k,j]^2
        let mut pivot = b.get(j, j);
        for k in 0..j {
            pivot -= r.get(k, j) * r.get(k, j);
        }
        if !(pivot > threshold) {
            return Err(BasisBreakdown {
                context,
                column: j,
                pivot,
                threshold,
            });
        }
        let rjj = pivot.sqrt();
        r.set(j, j, rjj);
        for c in (j + 1)..m {
            let mut v = b.get(j, c);
            for k in 0..j {
                v -= r.get(k, j) * r.get(k, c);
            }
            r.set(j, c, v / rjj);
        }
    }
    Ok(r)
}

/// In-place `W := W * R^{-1}` with `R` upper triangular.
///
/// Blocked: previous output panels are folded in through one GEMM per panel,
/// the small in-panel triangular solve runs column by column.
pub(crate) fn trsm_right_upper(w: &mut BlockVectors, r: &DenseMatrix) {
    assert_eq!(w.m, r.rows, "trsm_right_upper: dimension mismatch");
    assert_eq!(r.rows, r.cols);
    let n = w.n;
    let m = w.m;
    const NB: usize = 32;
    let mut j0 = 0;
    while j0 < m {
        let jb = NB.min(m - j0);
        // Fold in already-solved columns: W[:, j0..j0+jb] -= V[:, 0..j0] * R[0..j0, j0..j0+jb]
        if j0 > 0 {
            let solved = w.columns(0, j0);
            let mut panel = w.columns(j0, j0 + jb);
            let mut rblk = DenseMatrix::zeros(j0, jb);
            for c in 0..jb {
                for i in 0..j0 {
                    rblk.set(i, c, r.get(i, j0 + c));
                }
            }
            add_prod(&mut panel, &solved, &rblk, -1.0);
            w.data[j0 * n..(j0 + jb) * n].copy_from_slice(&panel.data);
        }
        // In-panel forward sweep.
        for c in 0..jb {
            let j = j0 + c;
            for k in j0..j {
                let rkj = r.get(k, j);
                if rkj != 0.0 {
                    let (head, tail) = w.data.split_at_mut(j * n);
                    let vk = &head[k * n..(k + 1) * n];
                    axpy(-rkj, vk, &mut tail[..n]);
                }
            }
            let inv = 1.0 / r.get(j, j);
            w.scale_col(j, inv);
        }
        j0 += jb;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approx(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn xt_y_small() {
        // X = [[1,2],[3,4],[5,6]] (3x2), Y = [[1],[1],[1]]
        let x = BlockVectors::from_col_major(3, 2, vec![1.0, 3.0, 5.0, 2.0, 4.0, 6.0]);
        let y = BlockVectors::from_col_major(3, 1, vec![1.0, 1.0, 1.0]);
        let c = xt_y(&x, &y);
        assert_eq!(c.get(0, 0), 9.0);
        assert_eq!(c.get(1, 0), 12.0);
    }

    #[test]
    fn add_prod_accumulates() {
        let q = BlockVectors::from_col_major(2, 2, vec![1.0, 0.0, 0.0, 1.0]);
        let mut w = BlockVectors::from_col_major(2, 1, vec![1.0, 1.0]);
        let mut c = DenseMatrix::zeros(2, 1);
        c.set(0, 0, 2.0);
        c.set(1, 0, 3.0);
        add_prod(&mut w, &q, &c, -1.0);
        assert_eq!(w.col(0), &[-1.0, -2.0]);
    }

    #[test]
    fn cholesky_hand_example() {
        // B = [[4,1],[1,3]] -> R = [[2, 0.5], [0, sqrt(2.75)]]
        let mut b = DenseMatrix::zeros(2, 2);
        b.set(0, 0, 4.0);
        b.set(0, 1, 1.0);
        b.set(1, 0, 1.0);
        b.set(1, 1, 3.0);
        let r = cholesky_upper(&b, "test").unwrap();
        assert!(approx(r.get(0, 0), 2.0, 1e-15));
        assert!(approx(r.get(0, 1), 0.5, 1e-15));
        assert!(approx(r.get(1, 1), 2.75f64.sqrt(), 1e-15));
        assert_eq!(r.get(1, 0), 0.0);
    }

    #[test]
    fn cholesky_singular_breaks_down() {
        // Rank-1 matrix: columns identical.
        let mut b = DenseMatrix::zeros(2, 2);
        for i in 0..2 {
            for j in 0..2 {
                b.set(i, j, 1.0);
            }
        }
        let err = cholesky_upper(&b, "test").unwrap_err();
        assert_eq!(err.column, 1);
        assert_eq!(err.context, "test");
    }

    #[test]
    fn trsm_matches_direct_solve() {
        // W (4x3) random-ish, R upper triangular; check (W R^{-1}) R = W.
        let n = 4;
        let m = 3;
        let mut w = BlockVectors::zeros(n, m);
        for j in 0..m {
            for i in 0..n {
                w.col_mut(j)[i] = ((i * 7 + j * 3 + 1) % 5) as f64 - 1.5;
            }
        }
        let mut r = DenseMatrix::zeros(m, m);
        r.set(0, 0, 2.0);
        r.set(0, 1, 1.0);
        r.set(0, 2, -0.5);
        r.set(1, 1, 1.5);
        r.set(1, 2, 0.25);
        r.set(2, 2, 3.0);
        let orig = w.clone();
        trsm_right_upper(&mut w, &r);
        // reconstruct: W_rec[:, j] = sum_k V[:, k] * R[k, j]
        for j in 0..m {
            for i in 0..n {
                let mut acc = 0.0;
                for k in 0..=j {
                    acc += w.col(k)[i] * r.get(k, j);
                }
                assert!(approx(acc, orig.col(j)[i], 1e-13));
            }
        }
    }

    #[test]
    fn trsm_blocked_matches_unblocked_on_wide_panel() {
        // Exercise the blocked path (m > 32) against the definition.
        let n = 5;
        let m = 40;
        let mut w = BlockVectors::zeros(n, m);
        for j in 0..m {
            for i in 0..n {
                w.col_mut(j)[i] = (((i + 1) * (j + 2)) % 7) as f64 * 0.5 - 1.0;
            }
        }
        let mut r = DenseMatrix::zeros(m, m);
        for j in 0..m {
            r.set(j, j, 1.0 + (j % 3) as f64);
            for i in 0..j {
                r.set(i, j, ((i + j) % 5) as f64 * 0.1);
            }
        }
        let orig = w.clone();
        trsm_right_upper(&mut w, &r);
        for j in 0..m {
            for i in 0..n {
                let mut acc = 0.0;
                for k in 0..=j {
                    acc += w.col(k)[i] * r.get(k, j);
                }
                assert!(
                    approx(acc, orig.col(j)[i], 1e-12),
                    "mismatch at ({i},{j}): {acc} vs {}",
                    orig.col(j)[i]
                );
            }
        }
    }
}
