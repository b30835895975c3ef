use ekcg::partition::*;
use ekcg::precond::*;
use ekcg::solver::*;
use ekcg::sparse::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

fn main() {
    let seed = 7u64;
    let a0 = gen_synthetic3d(20, 20, 20, SyntheticKind::Skyscraper, seed);
    println!("n={} nnz={}", a0.n(), a0.nnz());
    for tol in [1e-6f64] {
        for t in [2usize, 8, 64] {
            let p = kway_partition(&a0, t, seed).unwrap();
            let (a, _) = reorder(&a0, &p);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let xs: Vec<f64> = (0..a.n()).map(|_| rng.gen::<f64>()).collect();
            let b = a.spmv(&xs);
            for (pk, pm) in [(PrecondKind::None, None), (PrecondKind::BjIc0, Some(PrecondMode::Ic0))] {
                let pr = pm.map(|m| build_block_jacobi(&a, &p, m).unwrap());
                let mut cfg = SolveConfig::new(Method::SreCg);
                cfg.t = t; cfg.epsilon = tol; cfg.k_max = 3000; cfg.precond = pk;
                let t0 = Instant::now();
                let s1 = solve_enlarged(&a, &b, &vec![0.0; a.n()], &p, &cfg, pr.as_ref()).unwrap();
                let k1 = s1.outer_iters;
                let mut line = format!("tol={tol:.0e} t={t} {pk}: s1={}{}", k1, if s1.converged { "" } else { "(x)" });
                cfg.s = 8;
                cfg.k_max = 4 * (k1.div_ceil(8)).max(10);
                for variant in [Variant::SStep, Variant::CaAlg7, Variant::CaAlg5] {
                    cfg.variant = variant;
                    let rep = solve_enlarged(&a, &b, &vec![0.0; a.n()], &p, &cfg, pr.as_ref()).unwrap();
                    let status = if rep.converged {
                        format!("{}", rep.outer_iters)
                    } else if rep.breakdown.is_some() {
                        format!("BD@{}", rep.outer_iters)
                    } else {
                        format!("cap@{}", rep.outer_iters)
                    };
                    line += &format!(" {variant}={status}");
                }
                println!("{line}  [{:?}]", t0.elapsed());
            }
        }
    }
}
