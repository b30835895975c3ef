//! Sparse SPD matrix storage, generators, and the block multiply primitive.
//!
//! [`SparseSpd`] stores the operator `A` in compressed row form with both
//! triangles present; every constructor validates symmetry and positive
//! diagonal entries up front so the solvers never have to re-check. The
//! generators produce the 2D Poisson test operator and synthetic 3D
//! jump-coefficient operators (skyscraper / anisotropic layers) used by the
//! stability studies.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::block::BlockVectors;
use crate::error::{Error, Result};

/// Symmetric positive definite sparse matrix in compressed row form.
///
/// Invariants (validated at construction):
/// - structurally and numerically symmetric,
/// - every diagonal entry present and strictly positive,
/// - column indices strictly increasing within each row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSpd {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseSpd {
    /// Build from explicit entries (both triangles, diagonal included).
    ///
    /// `sym_tol` is the relative tolerance for numerical symmetry: `0.0`
    /// demands bitwise-equal mirror values (generated matrices), ingested
    /// matrices use `1e-14`.
    pub fn from_entries(n: usize, entries: &[(usize, usize, f64)], sym_tol: f64) -> Result<Self> {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(i, j, v) in entries {
            if i >= n || j >= n {
                return Err(Error::InvalidMatrix(format!(
                    "entry ({i},{j}) outside {n}x{n} matrix"
                )));
            }
            rows[i].push((j, v));
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for (i, row) in rows.iter_mut().enumerate() {
            row.sort_unstable_by_key(|&(j, _)| j);
            for w in row.windows(2) {
                if w[0].0 == w[1].0 {
                    return Err(Error::InvalidMatrix(format!(
                        "duplicate entry at ({i},{})",
                        w[0].0
                    )));
                }
            }
            for &(j, v) in row.iter() {
                col_idx.push(j);
                vals.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        let m = SparseSpd {
            n,
            row_ptr,
            col_idx,
            vals,
        };
        m.validate(sym_tol)?;
        Ok(m)
    }

    fn validate(&self, sym_tol: f64) -> Result<()> {
        for i in 0..self.n {
            let d = self.get(i, i);
            match d {
                None => {
                    return Err(Error::InvalidMatrix(format!("missing diagonal at row {i}")))
                }
                Some(v) if v <= 0.0 => {
                    return Err(Error::InvalidMatrix(format!(
                        "nonpositive diagonal {v} at row {i}"
                    )))
                }
                _ => {}
            }
            for idx in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[idx];
                let v = self.vals[idx];
                let mirror = self.get(j, i).ok_or_else(|| {
                    Error::InvalidMatrix(format!("asymmetric structure: ({i},{j}) has no mirror"))
                })?;
                let scale = v.abs().max(mirror.abs());
                if (v - mirror).abs() > sym_tol * scale {
                    return Err(Error::InvalidMatrix(format!(
                        "asymmetric values at ({i},{j}): {v} vs {mirror}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Matrix dimension.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Stored nonzero count (both triangles plus diagonal).
    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Row pointer array (`n + 1` entries).
    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    /// Column indices, strictly increasing within each row.
    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    /// Coefficient values, aligned with `col_idx`.
    pub fn vals(&self) -> &[f64] {
        &self.vals
    }

    /// Entry `(i, j)` if stored.
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        let row = &self.col_idx[lo..hi];
        row.binary_search(&j).ok().map(|k| self.vals[lo + k])
    }

    /// Diagonal entries.
    pub fn diag(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i).unwrap()).collect()
    }

    /// `y = A x` for a single vector, fixed accumulation order.
    pub fn spmv(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n, "spmv: dimension mismatch");
        let mut y = vec![0.0; self.n];
        self.spmv_into(x, &mut y);
        y
    }

    fn spmv_into(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let mut acc = 0.0;
            for idx in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[idx] * x[self.col_idx[idx]];
            }
            y[i] = acc;
        }
    }
}

/// `Y = A * X`, column by column.
///
/// Accumulation within each output entry runs over ascending column index of
/// the row, so results do not depend on the parallel schedule.
pub fn spmm(a: &SparseSpd, x: &BlockVectors) -> BlockVectors {
    assert_eq!(x.n(), a.n(), "spmm: dimension mismatch");
    let n = a.n();
    let m = x.m();
    let mut y = BlockVectors::zeros(n, m);
    if m >= 2 {
        // Columns are independent; each is computed in its fixed order.
        let cols: Vec<Vec<f64>> = (0..m)
            .into_par_iter()
            .map(|j| a.spmv(x.col(j)))
            .collect();
        for (j, col) in cols.into_iter().enumerate() {
            y.col_mut(j).copy_from_slice(&col);
        }
    } else if m == 1 {
        a.spmv_into(x.col(0), y.col_mut(0));
    }
    y
}

/// Standard 5-point Laplacian on an `nx` by `nx` grid: diagonal 4,
/// neighbor entries -1. Matches `gallery('poisson', nx)`.
pub fn gen_poisson2d(nx: usize) -> SparseSpd {
    assert!(nx >= 2, "gen_poisson2d: nx must be at least 2");
    let n = nx * nx;
    let mut entries = Vec::with_capacity(5 * n);
    for i in 0..nx {
        for j in 0..nx {
            let row = i * nx + j;
            entries.push((row, row, 4.0));
            if i > 0 {
                entries.push((row, row - nx, -1.0));
            }
            if i + 1 < nx {
                entries.push((row, row + nx, -1.0));
            }
            if j > 0 {
                entries.push((row, row - 1, -1.0));
            }
            if j + 1 < nx {
                entries.push((row, row + 1, -1.0));
            }
        }
    }
    SparseSpd::from_entries(n, &entries, 0.0).expect("stencil construction is symmetric")
}

/// Coefficient pattern for [`gen_synthetic3d`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyntheticKind {
    /// Piecewise-constant jumps of order `10^3` on a checkerboard of cells.
    Skyscraper,
    /// Layer-dependent directional coefficients from `{1, 1e-2, 1e-4}`.
    Anisotropic,
}

impl std::str::FromStr for SyntheticKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "skyscraper" => Ok(SyntheticKind::Skyscraper),
            "anisotropic" => Ok(SyntheticKind::Anisotropic),
            other => Err(Error::InvalidConfig(format!(
                "unknown synthetic kind '{other}' (expected skyscraper|anisotropic)"
            ))),
        }
    }
}

/// 7-point 3D finite-difference operator with jump coefficients.
///
/// The diagonal is the sum of the off-diagonal magnitudes plus `1e-8`, so
/// the matrix is SPD by construction. Deterministic: the same `seed` yields
/// a bitwise-identical matrix.
pub fn gen_synthetic3d(
    nx: usize,
    ny: usize,
    nz: usize,
    kind: SyntheticKind,
    seed: u64,
) -> SparseSpd {
    assert!(
        nx >= 2 && ny >= 2 && nz >= 2,
        "gen_synthetic3d: dimensions must be at least 2"
    );
    let n = nx * ny * nz;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Per-node directional coefficients (cx, cy, cz).
    let coeff: Vec<[f64; 3]> = match kind {
        SyntheticKind::Skyscraper => {
            // Checkerboard of cells, roughly 10 per dimension; active cells
            // carry 10^3 * (u + 1) with u an integer in 0..10.
            let csx = (nx / 10).max(1);
            let csy = (ny / 10).max(1);
            let csz = (nz / 10).max(1);
            let ncx = nx.div_ceil(csx);
            let ncy = ny.div_ceil(csy);
            let ncz = nz.div_ceil(csz);
            let mut cell = vec![1.0f64; ncx * ncy * ncz];
            for czi in 0..ncz {
                for cyi in 0..ncy {
                    for cxi in 0..ncx {
                        let u: f64 = rng.gen();
                        if (cxi + cyi + czi) % 2 == 0 {
                            cell[(czi * ncy + cyi) * ncx + cxi] = 1e3 * ((10.0 * u).floor() + 1.0);
                        }
                    }
                }
            }
            let mut c = Vec::with_capacity(n);
            for k in 0..nz {
                for j in 0..ny {
                    for i in 0..nx {
                        let v = cell[((k / csz) * ncy + (j / csy)) * ncx + (i / csx)];
                        c.push([v, v, v]);
                    }
                }
            }
            c
        }
        SyntheticKind::Anisotropic => {
            // One (cx, cy, cz) triple per z-layer, each drawn from {1, 1e-2, 1e-4}.
            let choices = [1.0, 1e-2, 1e-4];
            let layers: Vec<[f64; 3]> = (0..nz)
                .map(|_| {
                    [
                        choices[rng.gen_range(0..3)],
                        choices[rng.gen_range(0..3)],
                        choices[rng.gen_range(0..3)],
                    ]
                })
                .collect();
            let mut c = Vec::with_capacity(n);
            for k in 0..nz {
                for _ in 0..ny * nx {
                    c.push(layers[k]);
                }
            }
            c
        }
    };

    let node = |i: usize, j: usize, k: usize| (k * ny + j) * nx + i;
    let mut entries = Vec::with_capacity(7 * n);
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let row = node(i, j, k);
                let mut offdiag_sum = 0.0;
                let mut push = |col: usize, dir: usize, entries: &mut Vec<(usize, usize, f64)>| {
                    let w = 0.5 * (coeff[row][dir] + coeff[col][dir]);
                    entries.push((row, col, -w));
                    offdiag_sum += w;
                };
                if i > 0 {
                    push(node(i - 1, j, k), 0, &mut entries);
                }
                if i + 1 < nx {
                    push(node(i + 1, j, k), 0, &mut entries);
                }
                if j > 0 {
                    push(node(i, j - 1, k), 1, &mut entries);
                }
                if j + 1 < ny {
                    push(node(i, j + 1, k), 1, &mut entries);
                }
                if k > 0 {
                    push(node(i, j, k - 1), 2, &mut entries);
                }
                if k + 1 < nz {
                    push(node(i, j, k + 1), 2, &mut entries);
                }
                entries.push((row, row, offdiag_sum + 1e-8));
            }
        }
    }
    SparseSpd::from_entries(n, &entries, 0.0).expect("stencil construction is symmetric")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poisson_sizes_match_reference() {
        let a = gen_poisson2d(100);
        assert_eq!(a.n(), 10_000);
        assert_eq!(a.nnz(), 49_600);

        let a = gen_poisson2d(2);
        assert_eq!(a.n(), 4);
        assert_eq!(a.nnz(), 12);

        // Hand count for the 3x3 grid: 9 diagonal + 24 neighbor entries.
        let a = gen_poisson2d(3);
        assert_eq!(a.n(), 9);
        assert_eq!(a.nnz(), 33);
    }

    #[test]
    fn poisson_gershgorin_bounds() {
        let a = gen_poisson2d(10);
        for i in 0..a.n() {
            let d = a.get(i, i).unwrap();
            assert_eq!(d, 4.0);
            let radius: f64 = (a.row_ptr()[i]..a.row_ptr()[i + 1])
                .filter(|&idx| a.col_idx()[idx] != i)
                .map(|idx| a.vals()[idx].abs())
                .sum();
            assert!(d - radius >= 0.0);
            assert!(d + radius <= 8.0);
        }
    }

    #[test]
    fn spmm_identity_and_diag() {
        let id = SparseSpd::from_entries(2, &[(0, 0, 1.0), (1, 1, 1.0)], 0.0).unwrap();
        let x = BlockVectors::from_col_major(2, 2, vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(spmm(&id, &x), x);

        let d = SparseSpd::from_entries(2, &[(0, 0, 4.0), (1, 1, 3.0)], 0.0).unwrap();
        let e = BlockVectors::from_col_major(2, 2, vec![1.0, 0.0, 0.0, 1.0]);
        let y = spmm(&d, &e);
        assert_eq!(y.col(0), &[4.0, 0.0]);
        assert_eq!(y.col(1), &[0.0, 3.0]);
    }

    #[test]
    fn spmm_poisson_ones() {
        // Each node of the 2x2 grid has two neighbors: 4 - 2 = 2.
        let a = gen_poisson2d(2);
        let x = BlockVectors::from_col_major(4, 1, vec![1.0; 4]);
        let y = spmm(&a, &x);
        assert_eq!(y.col(0), &[2.0; 4]);
    }

    #[test]
    fn spmv_symmetry_bilinear() {
        let a = gen_poisson2d(7);
        let n = a.n();
        let u: Vec<f64> = (0..n).map(|i| ((i * 13 + 5) % 17) as f64 / 17.0).collect();
        let v: Vec<f64> = (0..n).map(|i| ((i * 7 + 2) % 23) as f64 / 23.0 - 0.4).collect();
        let au = a.spmv(&u);
        let av = a.spmv(&v);
        let uav = crate::block::dot(&u, &av);
        let vau = crate::block::dot(&v, &au);
        assert!((uav - vau).abs() <= 1e-13 * uav.abs().max(vau.abs()));
    }

    #[test]
    fn synthetic_is_deterministic_and_spd_shaped() {
        let a = gen_synthetic3d(2, 2, 2, SyntheticKind::Anisotropic, 1);
        assert_eq!(a.n(), 8);
        for i in 0..8 {
            assert!(a.get(i, i).unwrap() > 0.0);
        }
        let b = gen_synthetic3d(2, 2, 2, SyntheticKind::Anisotropic, 1);
        assert_eq!(a, b);

        let s1 = gen_synthetic3d(4, 4, 4, SyntheticKind::Skyscraper, 7);
        let s2 = gen_synthetic3d(4, 4, 4, SyntheticKind::Skyscraper, 7);
        assert_eq!(s1, s2);
        let s3 = gen_synthetic3d(4, 4, 4, SyntheticKind::Skyscraper, 8);
        assert_ne!(s1, s3);
    }

    #[test]
    fn rejects_bad_matrices() {
        // Nonpositive diagonal.
        let err = SparseSpd::from_entries(1, &[(0, 0, -1.0)], 0.0).unwrap_err();
        assert!(err.to_string().contains("nonpositive diagonal"));
        // Missing mirror entry.
        let err =
            SparseSpd::from_entries(2, &[(0, 0, 1.0), (1, 1, 1.0), (0, 1, 0.5)], 0.0).unwrap_err();
        assert!(err.to_string().contains("no mirror"));
        // Asymmetric values beyond tolerance.
        let err = SparseSpd::from_entries(
            2,
            &[(0, 0, 1.0), (1, 1, 1.0), (0, 1, 0.5), (1, 0, 0.5000001)],
            1e-14,
        )
        .unwrap_err();
        assert!(err.to_string().contains("asymmetric values"));
    }
}
