use ekcg::partition::*;
use ekcg::precond::*;
use ekcg::solver::*;
use ekcg::sparse::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Feasible windows for the preconditioned SRE rows (s-cells intersected):
//   ic0:  t2 [73,94]  t4 [57,74]  t8 [47,63] t16 [41,47] t32 [26,32] t64 [21,24]
//   chol: t2 [51,68]  t4 [45,56]  t8 [41,48] t16 [33,37] t32 [25,28] t64 [17,20]
// unprec sre rows: t2 [169,221] t4 [133,175] t8 [105,140] t16 [81,104] t32 [61,80] t64 [45,56]
fn main() {
    let a0 = gen_poisson2d(100);
    for seed in [8u64, 0, 2, 7] {
        let mut uline = format!("seed {seed} unprec:");
        let mut iline = format!("seed {seed} ic0  :");
        let mut cline = format!("seed {seed} chol :");
        for t in [2usize, 4, 8, 16, 32, 64] {
            let p = kway_partition(&a0, t, seed).unwrap();
            let (a, _) = reorder(&a0, &p);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let xs: Vec<f64> = (0..a.n()).map(|_| rng.gen::<f64>()).collect();
            let b = a.spmv(&xs);
            let mut cfg = SolveConfig::new(Method::SreCg);
            cfg.t = t; cfg.epsilon = 1e-6; cfg.k_max = 3000;
            let u = solve_enlarged(&a, &b, &vec![0.0; a.n()], &p, &cfg, None).unwrap().outer_iters;
            uline += &format!(" {u}");
            for (mode, kind, line) in [
                (PrecondMode::Ic0, PrecondKind::BjIc0, &mut iline),
                (PrecondMode::Cholesky, PrecondKind::BjChol, &mut cline),
            ] {
                let pr = build_block_jacobi(&a, &p, mode).unwrap();
                let mut cfg = SolveConfig::new(Method::SreCg);
                cfg.t = t; cfg.epsilon = 1e-6; cfg.k_max = 2000; cfg.precond = kind;
                let k = solve_enlarged(&a, &b, &vec![0.0; a.n()], &p, &cfg, Some(&pr)).unwrap().outer_iters;
                *line += &format!(" {k}");
            }
        }
        println!("{uline}\n{iline}\n{cline}");
    }
}
