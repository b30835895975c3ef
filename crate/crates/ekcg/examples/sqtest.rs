use ekcg::partition::*;
use ekcg::precond::*;
use ekcg::solver::*;
use ekcg::sparse::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let nx = 100usize;
    let a0 = gen_poisson2d(nx);
    // 8x8 grid of near-square domains
    let assign: Vec<usize> = (0..nx * nx)
        .map(|r| {
            let (i, j) = (r / nx, r % nx);
            let di = (i * 8 / nx).min(7);
            let dj = (j * 8 / nx).min(7);
            di * 8 + dj
        })
        .collect();
    let p = Partition::from_domain_assignment(&assign, 2).unwrap();
    let (a, _) = reorder(&a0, &p);
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let xs: Vec<f64> = (0..a.n()).map(|_| rng.gen::<f64>()).collect();
    let b = a.spmv(&xs);
    for (mode, kind, name) in [
        (PrecondMode::Ic0, PrecondKind::BjIc0, "ic0"),
        (PrecondMode::Cholesky, PrecondKind::BjChol, "chol"),
    ] {
        let pr = build_block_jacobi(&a, &p, mode).unwrap();
        let mut cfg = SolveConfig::new(Method::Cg);
        cfg.epsilon = 1e-6;
        cfg.precond = kind;
        let pcg = solve_cg(&a, &b, &vec![0.0; a.n()], &cfg, Some(&pr)).unwrap();
        println!("square-domains PCG {name}: {} (paper ic0 86 / chol 67)", pcg.outer_iters);
    }
}
