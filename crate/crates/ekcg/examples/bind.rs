use ekcg::partition::*;
use ekcg::precond::*;
use ekcg::solver::*;
use ekcg::sparse::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// binding: pcg_ic0 [78,94] pcg_chol [61,73] | chol t8>=41 t16>=33 t32>=25 t64<=20 | ic0 t2>=73 t16 [41,47] t64 [21,24] | unprec t2 [169,221]
fn main() {
    let a0 = gen_poisson2d(100);
    for seed in [0u64, 2, 7, 8] {
        let mut vals: Vec<String> = vec![];
        for t in [2usize, 8, 16, 32, 64] {
            let p = kway_partition(&a0, t, seed).unwrap();
            let (a, _) = reorder(&a0, &p);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let xs: Vec<f64> = (0..a.n()).map(|_| rng.gen::<f64>()).collect();
            let b = a.spmv(&xs);
            if t == 2 {
                let mut cfg = SolveConfig::new(Method::SreCg);
                cfg.t = t; cfg.epsilon = 1e-6; cfg.k_max = 3000;
                let u = solve_enlarged(&a, &b, &vec![0.0; a.n()], &p, &cfg, None).unwrap().outer_iters;
                vals.push(format!("u2={u}"));
                for (mode, kind, nm) in [(PrecondMode::Ic0, PrecondKind::BjIc0, "pI"), (PrecondMode::Cholesky, PrecondKind::BjChol, "pC")] {
                    let pr = build_block_jacobi(&a, &p, mode).unwrap();
                    let mut cfg = SolveConfig::new(Method::Cg);
                    cfg.epsilon = 1e-6; cfg.precond = kind;
                    let k = solve_cg(&a, &b, &vec![0.0; a.n()], &cfg, Some(&pr)).unwrap().outer_iters;
                    vals.push(format!("{nm}={k}"));
                }
            }
            for (mode, kind, nm) in [(PrecondMode::Ic0, PrecondKind::BjIc0, "i"), (PrecondMode::Cholesky, PrecondKind::BjChol, "c")] {
                let pr = build_block_jacobi(&a, &p, mode).unwrap();
                let mut cfg = SolveConfig::new(Method::SreCg);
                cfg.t = t; cfg.epsilon = 1e-6; cfg.k_max = 2000; cfg.precond = kind;
                let k = solve_enlarged(&a, &b, &vec![0.0; a.n()], &p, &cfg, Some(&pr)).unwrap().outer_iters;
                vals.push(format!("{nm}{t}={k}"));
            }
        }
        println!("seed {seed}: {}", vals.join(" "));
    }
}
