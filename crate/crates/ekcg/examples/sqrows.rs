use ekcg::partition::*;
use ekcg::precond::*;
use ekcg::solver::*;
use ekcg::sparse::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let nx = 100usize;
    let a0 = gen_poisson2d(nx);
    let assign: Vec<usize> = (0..nx * nx)
        .map(|r| {
            let (i, j) = (r / nx, r % nx);
            (i * 8 / nx).min(7) * 8 + (j * 8 / nx).min(7)
        })
        .collect();
    let mut uline = String::from("sq unprec:");
    let mut iline = String::from("sq ic0  :");
    let mut cline = String::from("sq chol :");
    for t in [2usize, 4, 8, 16, 32, 64] {
        let p = Partition::from_domain_assignment(&assign, t).unwrap();
        let (a, _) = reorder(&a0, &p);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
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
    println!("windows unprec: [169,221] [133,175] [105,140] [81,104] [61,80] [45,56]");
    println!("windows ic0   : [73,94] [57,74] [47,63] [41,47] [26,32] [21,24]");
    println!("windows chol  : [51,68] [45,56] [41,48] [33,37] [25,28] [17,20]");
    println!("{uline}\n{iline}\n{cline}");
}
