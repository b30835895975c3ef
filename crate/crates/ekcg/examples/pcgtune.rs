use ekcg::partition::*;
use ekcg::precond::*;
use ekcg::solver::*;
use ekcg::sparse::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let a0 = gen_poisson2d(100);
    for seed in [42u64, 1, 7] {
        let p = kway_partition(&a0, 2, seed).unwrap();
        let (a, _) = reorder(&a0, &p);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xs: Vec<f64> = (0..a.n()).map(|_| rng.gen::<f64>()).collect();
        let b = a.spmv(&xs);
        let mut line = format!("seed {seed}:");
        for (mode, kind) in [(PrecondMode::Ic0, PrecondKind::BjIc0), (PrecondMode::Cholesky, PrecondKind::BjChol)] {
            let pr = build_block_jacobi(&a, &p, mode).unwrap();
            let mut cfg = SolveConfig::new(Method::Cg);
            cfg.epsilon = 1e-6;
            cfg.precond = kind;
            let pcg = solve_cg(&a, &b, &vec![0.0; a.n()], &cfg, Some(&pr)).unwrap();
            line += &format!(" {:?}={}", mode, pcg.outer_iters);
        }
        println!("{line}  (paper ic0 86 [77-95], chol 67 [60-74])");
    }
}
