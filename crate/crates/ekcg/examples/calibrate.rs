use ekcg::partition::*;
use ekcg::precond::*;
use ekcg::solver::*;
use ekcg::sparse::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

fn main() {
    let seed = 42u64;
    let a0 = gen_poisson2d(100);
    let t0 = Instant::now();

    // CG baseline
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs: Vec<f64> = (0..a0.n()).map(|_| rng.gen::<f64>()).collect();
    let b = a0.spmv(&xs);
    let mut cfg = SolveConfig::new(Method::Cg);
    cfg.epsilon = 1e-6;
    let cg = solve_cg(&a0, &b, &vec![0.0; a0.n()], &cfg, None).unwrap();
    println!("CG: {} iters (paper 195)  [{:?}]", cg.outer_iters, t0.elapsed());

    for t in [2usize, 4, 64] {
        let p = kway_partition(&a0, t, seed).unwrap();
        let (a, _) = reorder(&a0, &p);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xs: Vec<f64> = (0..a.n()).map(|_| rng.gen::<f64>()).collect();
        let b = a.spmv(&xs);

        let t1 = Instant::now();
        let mut cfg = SolveConfig::new(Method::SreCg);
        cfg.t = t; cfg.epsilon = 1e-6; cfg.k_max = 4000;
        let s1 = solve_enlarged(&a, &b, &vec![0.0; a.n()], &p, &cfg, None).unwrap();
        cfg.s = 8;
        let s8 = solve_enlarged(&a, &b, &vec![0.0; a.n()], &p, &cfg, None).unwrap();
        println!("SRE-CG t={t}: s=1 {} s=8 {} (ceil: {})  [{:?}]",
            s1.outer_iters, s8.outer_iters, (s1.outer_iters + 7) / 8, t1.elapsed());

        let t2 = Instant::now();
        let mut cfg = SolveConfig::new(Method::MsdoCg);
        cfg.t = t; cfg.epsilon = 1e-6; cfg.k_max = 4000;
        let m1 = solve_enlarged(&a, &b, &vec![0.0; a.n()], &p, &cfg, None).unwrap();
        println!("MSDO-CG t={t}: s=1 {}  [{:?}]", m1.outer_iters, t2.elapsed());

        // preconditioned
        let t3 = Instant::now();
        for (mode, kind, name) in [(PrecondMode::Ic0, PrecondKind::BjIc0, "ic0"), (PrecondMode::Cholesky, PrecondKind::BjChol, "chol")] {
            let pr = build_block_jacobi(&a, &p, mode).unwrap();
            if t == 2 {
                let mut cfg = SolveConfig::new(Method::Cg);
                cfg.epsilon = 1e-6; cfg.precond = kind;
                let pcg = solve_cg(&a, &b, &vec![0.0; a.n()], &cfg, Some(&pr)).unwrap();
                println!("PCG {name}: {} iters (paper: ic0 86 / chol 67)", pcg.outer_iters);
            }
            let mut cfg = SolveConfig::new(Method::SreCg);
            cfg.t = t; cfg.epsilon = 1e-6; cfg.precond = kind; cfg.k_max = 2000;
            let p1 = solve_enlarged(&a, &b, &vec![0.0; a.n()], &p, &cfg, Some(&pr)).unwrap();
            cfg.s = 8;
            let p8 = solve_enlarged(&a, &b, &vec![0.0; a.n()], &p, &cfg, Some(&pr)).unwrap();
            println!("  prec-{name} SRE-CG t={t}: s=1 {} s=8 {} [{:?}]", p1.outer_iters, p8.outer_iters, t3.elapsed());
        }
    }
    println!("total {:?}", t0.elapsed());
}
