//! Reference implementations written independently of the library:
//! closed-form Chebyshev values, amplification polynomials, a textbook RKC
//! step, classical RK4 and a dense matrix exponential.

#![allow(dead_code)]

use arkc::SplitOdeProblem;

/// `(T_s, T_s', T_s'')` at `x >= 1` from `cosh`/`sinh`.
pub fn cheb_t_above_one(s: usize, x: f64) -> (f64, f64, f64) {
    let sf = s as f64;
    if s == 0 {
        return (1.0, 0.0, 0.0);
    }
    if x == 1.0 {
        return (1.0, sf * sf, sf * sf * (sf * sf - 1.0) / 3.0);
    }
    let th = x.acosh();
    let t = (sf * th).cosh();
    let d = sf * (sf * th).sinh() / th.sinh();
    // (1 - x^2) T'' - x T' + s^2 T = 0
    let dd = (x * d - sf * sf * t) / (1.0 - x * x);
    (t, d, dd)
}

/// `T_s(x)` and `U_{s-1}(x)` on `[-1, 1]` from `cos`/`sin`, on `x > 1`
/// from the hyperbolic forms.
pub fn cheb_t_u(s: usize, x: f64) -> (f64, f64) {
    let sf = s as f64;
    if x > 1.0 {
        let (t, d, _) = cheb_t_above_one(s, x);
        return (t, d / sf);
    }
    let x = x.max(-1.0);
    let th = x.acos();
    let t = (sf * th).cos();
    let sin = th.sin();
    let u = if sin.abs() < 1e-9 {
        let sign = if x < 0.0 && s.is_multiple_of(2) { -1.0 } else { 1.0 };
        sign * sf
    } else {
        (sf * th).sin() / sin
    };
    (t, u)
}

/// First-order amplification `R1(p, q)`.
pub fn r1(s: usize, eta: f64, p: f64, q: f64) -> (f64, f64) {
    let w0 = 1.0 + eta / (s * s) as f64;
    let (t0, d0, _) = cheb_t_above_one(s, w0);
    let w1 = t0 / d0;
    let (_, u0) = cheb_t_u(s, w0);
    let x = w0 + w1 * p;
    let (t, u) = cheb_t_u(s, x);
    (t / t0, u / u0 * (1.0 + 0.5 * w1 * p) * q)
}

/// Second-order scheme coefficients needed for `R2`: `(w0, w2, a_s, b_s)`.
pub fn r2_coefficients(s: usize, eta: f64) -> (f64, f64, f64, f64) {
    let w0 = 1.0 + eta / (s * s) as f64;
    let (t, d, dd) = cheb_t_above_one(s, w0);
    let bs = dd / (d * d);
    (w0, d / dd, 1.0 - bs * t, bs)
}

/// Second-order amplification `R2(p, q)`.
pub fn r2(s: usize, eta: f64, p: f64, q: f64) -> (f64, f64) {
    let (w0, w2, a_s, b_s) = r2_coefficients(s, eta);
    let (_, u0) = cheb_t_u(s, w0);
    let x = w0 + w2 * p;
    let (t, u) = cheb_t_u(s, x);
    let a = a_s + b_s * t;
    let b = (0.5 * w2 + (1.0 - 0.5 * w2) * u / u0) * (1.0 + 0.5 * w2 * p);
    (a - 0.5 * b * q * q, b * q)
}

pub fn real_length(s: usize, eta: f64) -> f64 {
    let (w0, w2, _, _) = r2_coefficients(s, eta);
    (1.0 + w0) / w2
}

/// One RKC step in the classical form
/// `Y_j = (1 - m_j - n_j) Y_0 + m_j Y_{j-1} + n_j Y_{j-2} + mt_j h F(Y_{j-1}) + gt_j h F(Y_0)`.
pub fn rkc_step(f: &dyn Fn(&[f64], &mut [f64]), y0: &[f64], h: f64, s: usize, eta: f64) -> Vec<f64> {
    let n = y0.len();
    let w0 = 1.0 + eta / (s * s) as f64;
    let tj: Vec<(f64, f64, f64)> = (0..=s).map(|j| cheb_t_above_one(j, w0)).collect();
    let (_, ds, dds) = tj[s];
    let w1 = ds / dds;
    let mut b = vec![0.0; s + 1];
    for j in 2..=s {
        b[j] = tj[j].2 / (tj[j].1 * tj[j].1);
    }
    b[0] = b[2];
    b[1] = b[2];
    let a = |j: usize| 1.0 - b[j] * tj[j].0;

    let mut f0 = vec![0.0; n];
    f(y0, &mut f0);
    let mut ym2 = y0.to_vec();
    let mut ym1: Vec<f64> = (0..n).map(|i| y0[i] + b[1] * w1 * h * f0[i]).collect();
    let mut fy = vec![0.0; n];
    for j in 2..=s {
        let m = 2.0 * b[j] * w0 / b[j - 1];
        let nn = -b[j] / b[j - 2];
        let mt = 2.0 * b[j] * w1 / b[j - 1];
        let gt = -a(j - 1) * mt;
        f(&ym1, &mut fy);
        let y: Vec<f64> = (0..n)
            .map(|i| (1.0 - m - nn) * y0[i] + m * ym1[i] + nn * ym2[i] + mt * h * fy[i] + gt * h * f0[i])
            .collect();
        ym2 = std::mem::replace(&mut ym1, y);
    }
    ym1
}

/// Classical fourth-order Runge-Kutta with `n` equal steps on `F_D + F_A`.
pub fn rk4(problem: &SplitOdeProblem, y0: &[f64], t_end: f64, n: usize) -> Vec<f64> {
    let dim = y0.len();
    let h = t_end / n as f64;
    let mut y = y0.to_vec();
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; dim], vec![0.0; dim], vec![0.0; dim], vec![0.0; dim]);
    let mut tmp = vec![0.0; dim];
    for _ in 0..n {
        problem.eval_full(&y, &mut k1);
        for i in 0..dim {
            tmp[i] = y[i] + 0.5 * h * k1[i];
        }
        problem.eval_full(&tmp, &mut k2);
        for i in 0..dim {
            tmp[i] = y[i] + 0.5 * h * k2[i];
        }
        problem.eval_full(&tmp, &mut k3);
        for i in 0..dim {
            tmp[i] = y[i] + h * k3[i];
        }
        problem.eval_full(&tmp, &mut k4);
        for i in 0..dim {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    y
}

pub type Matrix = Vec<Vec<f64>>;

pub fn matmul(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.len();
    (0..n).map(|i| (0..n).map(|j| (0..n).map(|k| a[i][k] * b[k][j]).sum()).collect()).collect()
}

pub fn matvec(a: &Matrix, v: &[f64]) -> Vec<f64> {
    a.iter().map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum()).collect()
}

/// `exp(A)` by scaling and squaring with a degree-20 Taylor polynomial.
pub fn expm(a: &Matrix) -> Matrix {
    let n = a.len();
    let norm = a.iter().map(|r| r.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max);
    let mut k = 0;
    while norm / 2f64.powi(k) > 0.5 {
        k += 1;
    }
    let scale = 2f64.powi(-k);
    let scaled: Matrix = a.iter().map(|r| r.iter().map(|x| x * scale).collect()).collect();
    let ident: Matrix = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    let mut result = ident.clone();
    let mut term = ident;
    for m in 1..=20 {
        term = matmul(&term, &scaled);
        let inv = 1.0 / m as f64;
        term.iter_mut().for_each(|r| r.iter_mut().for_each(|x| *x *= inv));
        for i in 0..n {
            for j in 0..n {
                result[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..k {
        result = matmul(&result, &result);
    }
    result
}

pub fn linf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Least-squares slope of `ln e` against `ln h`.
pub fn lsq_slope(h: &[f64], e: &[f64]) -> f64 {
    let m = h.len() as f64;
    let xs: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = e.iter().map(|v| v.ln()).collect();
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}
