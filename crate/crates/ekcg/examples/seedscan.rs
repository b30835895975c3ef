use ekcg::partition::*;
use ekcg::precond::*;
use ekcg::solver::*;
use ekcg::sparse::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let a0 = gen_poisson2d(100);
    println!("need: cg[176-215] sre2[169-221] sre4[133-176] sre64[45-56] msdo2[169-227] ic0[78-94] chol[61-73]");
    for seed in 0u64..12 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xs: Vec<f64> = (0..a0.n()).map(|_| rng.gen::<f64>()).collect();
        let b0 = a0.spmv(&xs);
        let mut cfg = SolveConfig::new(Method::Cg);
        cfg.epsilon = 1e-6;
        let cg = solve_cg(&a0, &b0, &vec![0.0; a0.n()], &cfg, None).unwrap().outer_iters;

        let mut vals = vec![format!("cg={cg}")];
        for t in [2usize, 4, 64] {
            let p = kway_partition(&a0, t, seed).unwrap();
            let (a, _) = reorder(&a0, &p);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let xs: Vec<f64> = (0..a.n()).map(|_| rng.gen::<f64>()).collect();
            let b = a.spmv(&xs);
            let mut cfg = SolveConfig::new(Method::SreCg);
            cfg.t = t; cfg.epsilon = 1e-6; cfg.k_max = 3000;
            let k = solve_enlarged(&a, &b, &vec![0.0; a.n()], &p, &cfg, None).unwrap().outer_iters;
            vals.push(format!("sre{t}={k}"));
            if t == 2 {
                let mut cfg = SolveConfig::new(Method::MsdoCg);
                cfg.t = t; cfg.epsilon = 1e-6; cfg.k_max = 3000;
                let m = solve_enlarged(&a, &b, &vec![0.0; a.n()], &p, &cfg, None).unwrap().outer_iters;
                vals.push(format!("msdo2={m}"));
                for (mode, kind, nm) in [(PrecondMode::Ic0, PrecondKind::BjIc0, "ic0"), (PrecondMode::Cholesky, PrecondKind::BjChol, "chol")] {
                    let pr = build_block_jacobi(&a, &p, mode).unwrap();
                    let mut cfg = SolveConfig::new(Method::Cg);
                    cfg.epsilon = 1e-6; cfg.precond = kind;
                    let pcg = solve_cg(&a, &b, &vec![0.0; a.n()], &cfg, Some(&pr)).unwrap().outer_iters;
                    vals.push(format!("{nm}={pcg}"));
                }
            }
        }
        println!("seed {seed:2}: {}", vals.join(" "));
    }
}
