mod oracle;

use arkc::problems::{reference_solution, BurgersReaction1D, LinearAdvectionDiffusion1D};

fn assemble(f: impl Fn(&[f64], &mut [f64]), n: usize) -> oracle::Matrix {
    let mut m = vec![vec![0.0; n]; n];
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; n];
    for j in 0..n {
        e.iter_mut().for_each(|v| *v = 0.0);
        e[j] = 1.0;
        f(&e, &mut col);
        for i in 0..n {
            m[i][j] = col[i];
        }
    }
    m
}

#[test]
fn fourier_solution_matches_matrix_exponential() {
    let n = 16;
    for &a in &[0.0, 1.0, 10.0] {
        let p = LinearAdvectionDiffusion1D::new(n, a).unwrap();
        let prob = p.build();
        let full = assemble(|y, o| prob.eval_full(y, o), n);
        let t = 0.05;
        let ht: oracle::Matrix = full.iter().map(|r| r.iter().map(|v| v * t).collect()).collect();
        let y0 = p.initial();
        let exact = oracle::matvec(&oracle::expm(&ht), &y0);
        let fourier = p.fourier_solution(&y0, t);
        assert!(oracle::linf(&exact, &fourier) < 1e-10, "a = {a}");
    }
}

#[test]
fn burgers_reference_agrees_with_rk4() {
    let b = BurgersReaction1D::new(50).unwrap();
    let prob = b.build();
    let y0 = b.initial();
    let dopri = reference_solution(&prob, &y0, 0.1, 1e-11).unwrap();
    let rk = oracle::rk4(&prob, &y0, 0.1, 4000);
    assert!(oracle::linf(&dopri, &rk) < 1e-9);
}
