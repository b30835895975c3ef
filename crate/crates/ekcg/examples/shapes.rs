use ekcg::partition::*;
use ekcg::sparse::*;

fn main() {
    let nx = 48usize;
    let a = gen_poisson2d(nx);
    let p = kway_partition(&a, 16, 42).unwrap();
    // domain of each ORIGINAL row: invert the order
    let mut dom = vec![0usize; nx * nx];
    for new in 0..nx * nx {
        let d = (0..16).find(|&d| p.domain_range(d).contains(&new)).unwrap();
        dom[p.order()[new]] = d;
    }
    let syms: Vec<char> = "0123456789abcdef".chars().collect();
    for i in 0..nx {
        let line: String = (0..nx).map(|j| syms[dom[i * nx + j]]).collect();
        println!("{line}");
    }
    // edge cut
    let mut cut = 0usize;
    for i in 0..a.n() {
        for idx in a.row_ptr()[i]..a.row_ptr()[i + 1] {
            let j = a.col_idx()[idx];
            if j > i && dom[i] != dom[j] { cut += 1; }
        }
    }
    println!("edge cut: {cut}");
}
