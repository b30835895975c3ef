//! Property tests for the kernel invariants.

use proptest::prelude::*;

use ekcg::aortho::{a_cholqr, a_gram, cgs2_against, seed_block, BasisAccumulator, OrthoKind, Window};
use ekcg::block::{dot, BlockVectors};
use ekcg::market::{dump_matrix_market, read_matrix_market};
use ekcg::partition::{split_t, Partition};
use ekcg::sparse::{gen_poisson2d, spmm, SparseSpd};

/// Random small SPD matrix: diagonally dominant with symmetric sprinkles.
fn arb_spd(max_n: usize) -> impl Strategy<Value = SparseSpd> {
    (2..=max_n, any::<u64>()).prop_map(|(n, seed)| {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut entries = Vec::new();
        let mut row_sum = vec![0.0f64; n];
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.gen::<f64>() < 0.3 {
                    let v = rng.gen::<f64>() * 2.0 - 1.0;
                    entries.push((i, j, v));
                    entries.push((j, i, v));
                    row_sum[i] += v.abs();
                    row_sum[j] += v.abs();
                }
            }
        }
        for (i, s) in row_sum.iter().enumerate() {
            entries.push((i, i, s + 1.0 + rng.gen::<f64>()));
        }
        SparseSpd::from_entries(n, &entries, 0.0).unwrap()
    })
}

fn vector_for(n: usize, seed: u64) -> Vec<f64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Bilinear symmetry of the operator: u^t (A v) = v^t (A u).
    #[test]
    fn spmv_is_symmetric_bilinear(a in arb_spd(24), s1 in any::<u64>(), s2 in any::<u64>()) {
        let u = vector_for(a.n(), s1);
        let v = vector_for(a.n(), s2);
        let au = a.spmv(&u);
        let av = a.spmv(&v);
        let lhs = dot(&u, &av);
        let rhs = dot(&v, &au);
        prop_assert!((lhs - rhs).abs() <= 1e-13 * lhs.abs().max(rhs.abs()).max(1.0));
    }

    /// Matrix Market write-then-read reproduces the matrix exactly.
    #[test]
    fn matrix_market_round_trip(a in arb_spd(20)) {
        let mut buf = Vec::new();
        dump_matrix_market(&mut buf, &a).unwrap();
        let b = read_matrix_market(std::io::Cursor::new(&buf)).unwrap();
        prop_assert_eq!(a, b);
    }

    /// The splitting operator loses nothing: the columns of T(r) sum to r
    /// exactly (disjoint copies, no floating-point error possible).
    #[test]
    fn split_columns_sum_exactly(
        n in 4usize..40,
        t_pow in 0u32..3,
        seed in any::<u64>(),
    ) {
        let t = (1usize << t_pow).min(n);
        let assignment: Vec<usize> = (0..n).map(|i| i * t / n).collect();
        let p = Partition::from_domain_assignment(&assignment, t).unwrap();
        let r = vector_for(n, seed);
        let w = split_t(&r, &p);
        for i in 0..n {
            let mut acc = 0.0;
            for d in 0..t {
                acc += w.col(d)[i];
            }
            prop_assert_eq!(acc, r[i]);
        }
    }

    /// a_cholqr output block is A-orthonormal whenever it succeeds.
    #[test]
    fn a_cholqr_orthonormalizes(a in arb_spd(16), m in 1usize..4, seed in any::<u64>()) {
        let n = a.n();
        let mut w = BlockVectors::zeros(n, m.min(n));
        for j in 0..w.m() {
            let col = vector_for(n, seed.wrapping_add(j as u64));
            w.col_mut(j).copy_from_slice(&col);
        }
        if a_cholqr(&a, &mut w).is_ok() {
            let g = a_gram(&a, &w, &w);
            prop_assert!(g.max_abs_dev_from_identity() <= 1e-9,
                "deviation {:.3e}", g.max_abs_dev_from_identity());
        }
    }
}

/// Projection coefficients against blocks older than the last two vanish in
/// the stepwise expansion (the short-recurrence property).
#[test]
fn old_blocks_decouple_in_stepwise_expansion() {
    let a = gen_poisson2d(10);
    let n = a.n();
    let t = 2;
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let mut seed = BlockVectors::zeros(n, t);
    for j in 0..t {
        for i in 0..n {
            seed.col_mut(j)[i] = rng.gen::<f64>() - 0.5;
        }
    }
    let mut q = BasisAccumulator::full(n);
    let mut blocks = vec![seed_block(&a, &seed, &mut q, OrthoKind::PreCholQr).unwrap()];
    for _ in 1..6 {
        let prev = blocks.last().unwrap();
        let raw = spmm(&a, prev);
        // Full-window projection and self-orthonormalization, stepwise.
        let mut w = raw.clone();
        cgs2_against(&a, &mut w, &q.view(Window::Full));
        ekcg::aortho::self_orthonormalize(&a, &mut w, OrthoKind::PreCholQr).unwrap();
        q.push(w.clone());

        // The raw product A W_{k-1} already has negligible components along
        // blocks older than W_{k-2}: W_i^t A (A W_{k-1}) ~ 0 for i < k-2.
        if blocks.len() >= 3 {
            for old in &blocks[..blocks.len() - 2] {
                let coupling = a_gram(&a, old, &raw);
                assert!(
                    coupling.max_abs() <= 1e-8,
                    "old-block coupling {:.3e}",
                    coupling.max_abs()
                );
            }
        }
        blocks.push(w);
    }
}

/// Truncated-window expansion equals the full-window expansion while the
/// basis still fits in the window (first three blocks).
#[test]
fn truncated_equals_full_on_first_blocks() {
    let a = gen_poisson2d(8);
    let n = a.n();
    let t = 2;
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
    let mut seed = BlockVectors::zeros(n, t);
    for j in 0..t {
        for i in 0..n {
            seed.col_mut(j)[i] = rng.gen::<f64>() - 0.5;
        }
    }
    let op = |x: &BlockVectors| spmm(&a, x);

    let mut q_full = BasisAccumulator::full(n);
    let mut q_trunc = BasisAccumulator::windowed(n, 2);
    let b_full = seed_block(&a, &seed, &mut q_full, OrthoKind::PreCholQr).unwrap();
    let b_trunc = seed_block(&a, &seed, &mut q_trunc, OrthoKind::PreCholQr).unwrap();
    assert_eq!(b_full, b_trunc);
    let mut prev_full = b_full;
    let mut prev_trunc = b_trunc;
    for step in 0..2 {
        prev_full = ekcg::aortho::arnoldi_step(
            &a, op, &prev_full, &mut q_full, Window::Full, OrthoKind::PreCholQr,
        )
        .unwrap();
        prev_trunc = ekcg::aortho::arnoldi_step(
            &a, op, &prev_trunc, &mut q_trunc, Window::Last(2), OrthoKind::PreCholQr,
        )
        .unwrap();
        assert_eq!(prev_full, prev_trunc, "diverged at step {step}");
    }
}

/// Condition estimate for the skyscraper operator: the largest eigenvalue
/// is found by power iteration and the all-ones vector certifies a tiny
/// eigenvalue, so the condition number exceeds 1e3 by a wide margin.
#[test]
fn skyscraper_condition_exceeds_1e3() {
    let a = ekcg::sparse::gen_synthetic3d(20, 20, 20, ekcg::sparse::SyntheticKind::Skyscraper, 7);
    assert_eq!(a.n(), 8000);
    let n = a.n();
    let mut v = vector_for(n, 3);
    let mut lambda_max = 0.0f64;
    for _ in 0..60 {
        let av = a.spmv(&v);
        let norm = dot(&av, &av).sqrt();
        lambda_max = dot(&v, &av);
        for i in 0..n {
            v[i] = av[i] / norm;
        }
    }
    // Rayleigh quotient of the ones vector bounds the smallest eigenvalue.
    let ones = vec![1.0; n];
    let aones = a.spmv(&ones);
    let lambda_small = dot(&ones, &aones) / n as f64;
    assert!(lambda_small > 0.0);
    assert!(
        lambda_max / lambda_small > 1e3,
        "estimated condition {:.3e}",
        lambda_max / lambda_small
    );
}
