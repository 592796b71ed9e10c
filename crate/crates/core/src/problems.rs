//! Method-of-lines benchmark problems on the periodic unit interval and
//! their reference solutions.
//!
//! Grid convention: `N` unknowns at `x_i = i / N`, `i = 0..N`, with the
//! point `x = 1` identified with `x = 0`.

use std::f64::consts::PI;
use std::io::Write;

use crate::error::{Error, Result};
use crate::integrators::SplitOdeProblem;

/// `u_t + a u_x = u_xx` with `u(x, 0) = sin(2 pi x)`, central differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearAdvectionDiffusion1D {
    pub n_cells: usize,
    pub advection: f64,
    pub t_end: f64,
}

impl Default for LinearAdvectionDiffusion1D {
    fn default() -> Self {
        Self { n_cells: 150, advection: 1.0, t_end: 0.5 }
    }
}

impl LinearAdvectionDiffusion1D {
    pub fn new(n_cells: usize, advection: f64) -> Result<Self> {
        if n_cells < 4 {
            return Err(Error::InvalidArgument(format!("need at least 4 grid points, got {n_cells}")));
        }
        if !(advection >= 0.0 && advection.is_finite()) {
            return Err(Error::InvalidArgument(format!("advection speed must be >= 0, got {advection}")));
        }
        Ok(Self { n_cells, advection, ..Self::default() })
    }

    pub fn dx(&self) -> f64 {
        1.0 / self.n_cells as f64
    }

    pub fn grid(&self) -> Vec<f64> {
        grid(self.n_cells)
    }

    pub fn initial(&self) -> Vec<f64> {
        self.grid().iter().map(|x| (2.0 * PI * x).sin()).collect()
    }

    /// `lambda_k = 2/dx^2 (cos(2 k pi dx) - 1) - i a/dx sin(2 k pi dx)` as `(re, im)`.
    pub fn eigenvalue(&self, k: usize) -> (f64, f64) {
        let dx = self.dx();
        let th = 2.0 * PI * k as f64 * dx;
        (2.0 / (dx * dx) * (th.cos() - 1.0), -self.advection / dx * th.sin())
    }

    pub fn rho_diffusion(&self) -> f64 {
        (1..=self.n_cells).map(|k| -self.eigenvalue(k).0).fold(0.0, f64::max)
    }

    pub fn rho_advection(&self) -> f64 {
        (1..=self.n_cells).map(|k| self.eigenvalue(k).1.abs()).fold(0.0, f64::max)
    }

    /// Split problem; with `a = 0` the advection field is omitted entirely.
    pub fn build(&self) -> SplitOdeProblem {
        let n = self.n_cells;
        let dx = self.dx();
        let inv_dx2 = 1.0 / (dx * dx);
        let rho_d = self.rho_diffusion();
        let rho_a = self.rho_advection();
        let p = SplitOdeProblem::new(n, move |u, out| periodic_laplacian(u, inv_dx2, out))
            .with_diffusion_radius(move |_| rho_d)
            .with_advection_radius(move |_| rho_a)
            .linear(true);
        if self.advection == 0.0 {
            return p;
        }
        let c = self.advection / (2.0 * dx);
        p.with_advection_reaction(move |u, out| {
            for (i, o) in out.iter_mut().enumerate().take(n) {
                let (l, r) = neighbours(u, i);
                *o = -c * (r - l);
            }
        })
    }

    /// Exact solution of the semi-discrete system by diagonalisation in
    /// discrete Fourier space: each mode evolves as `exp(lambda_k t)`.
    pub fn fourier_solution(&self, y0: &[f64], t: f64) -> Vec<f64> {
        let n = self.n_cells;
        assert_eq!(y0.len(), n);
        let mut out = vec![0.0; n];
        for k in 0..n {
            let th = 2.0 * PI * k as f64 / n as f64;
            let (mut re, mut im) = (0.0, 0.0);
            for (j, &y) in y0.iter().enumerate() {
                let ang = th * j as f64;
                re += y * ang.cos();
                im -= y * ang.sin();
            }
            let (lr, li) = self.eigenvalue(k);
            let decay = (lr * t).exp();
            let (c, s) = ((li * t).cos(), (li * t).sin());
            let (er, ei) = (decay * (re * c - im * s), decay * (re * s + im * c));
            for (j, o) in out.iter_mut().enumerate() {
                let ang = th * j as f64;
                *o += er * ang.cos() - ei * ang.sin();
            }
        }
        out.iter_mut().for_each(|v| *v /= n as f64);
        out
    }
}

pub fn build_linear_ad(n: usize, a: f64) -> Result<SplitOdeProblem> {
    Ok(LinearAdvectionDiffusion1D::new(n, a)?.build())
}

/// `u_t + 10 u u_x = u_xx + sin(u^2)` with `u(x, 0) = 1 + sin(2 pi x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BurgersReaction1D {
    pub n_cells: usize,
    pub advection_coeff: f64,
    pub t_end: f64,
}

impl Default for BurgersReaction1D {
    fn default() -> Self {
        Self { n_cells: 100, advection_coeff: 10.0, t_end: 0.5 }
    }
}

impl BurgersReaction1D {
    pub fn new(n_cells: usize) -> Result<Self> {
        if n_cells < 4 {
            return Err(Error::InvalidArgument(format!("need at least 4 grid points, got {n_cells}")));
        }
        Ok(Self { n_cells, ..Self::default() })
    }

    pub fn dx(&self) -> f64 {
        1.0 / self.n_cells as f64
    }

    pub fn grid(&self) -> Vec<f64> {
        grid(self.n_cells)
    }

    pub fn initial(&self) -> Vec<f64> {
        self.grid().iter().map(|x| 1.0 + (2.0 * PI * x).sin()).collect()
    }

    /// Local Peclet number `10 max|u|` (unit diffusion).
    pub fn peclet(&self, u: &[f64]) -> f64 {
        self.advection_coeff * max_abs(u)
    }

    pub fn build(&self) -> SplitOdeProblem {
        let n = self.n_cells;
        let dx = self.dx();
        let inv_dx2 = 1.0 / (dx * dx);
        let coeff = self.advection_coeff;
        let c = coeff / (2.0 * dx);
        SplitOdeProblem::new(n, move |u, out| periodic_laplacian(u, inv_dx2, out))
            .with_advection_reaction(move |u, out| {
                for i in 0..n {
                    let (l, r) = neighbours(u, i);
                    out[i] = -c * u[i] * (r - l) + (u[i] * u[i]).sin();
                }
            })
            .with_diffusion_radius(move |_| 4.0 * inv_dx2)
            .with_advection_radius(move |u| coeff * max_abs(u) / dx)
    }
}

pub fn build_burgers(n: usize) -> Result<SplitOdeProblem> {
    Ok(BurgersReaction1D::new(n)?.build())
}

fn grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| i as f64 / n as f64).collect()
}

fn max_abs(u: &[f64]) -> f64 {
    u.iter().fold(0.0, |m, v| m.max(v.abs()))
}

#[inline]
fn neighbours(u: &[f64], i: usize) -> (f64, f64) {
    let n = u.len();
    let l = if i == 0 { u[n - 1] } else { u[i - 1] };
    let r = if i + 1 == n { u[0] } else { u[i + 1] };
    (l, r)
}

fn periodic_laplacian(u: &[f64], inv_dx2: f64, out: &mut [f64]) {
    for i in 0..u.len() {
        let (l, r) = neighbours(u, i);
        out[i] = (r - 2.0 * u[i] + l) * inv_dx2;
    }
}

pub fn linf_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Write a profile as CSV with header `x,u`.
pub fn write_profile_csv<W: Write>(w: W, x: &[f64], u: &[f64]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["x", "u"])?;
    for (xi, ui) in x.iter().zip(u) {
        wr.write_record([xi.to_string(), ui.to_string()])?;
    }
    wr.flush()?;
    Ok(())
}

// Dormand-Prince 5(4) tableau (autonomous, so the nodes are not needed).
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// fifth-order weights minus embedded fourth-order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Reference solve of `y' = F_D + F_A` with an adaptive Dormand-Prince 5(4)
/// pair at `atol = rtol = tight_tol`.
pub fn reference_solution(problem: &SplitOdeProblem, y0: &[f64], t_end: f64, tight_tol: f64) -> Result<Vec<f64>> {
    reference_trajectory(problem, y0, t_end, tight_tol, |_, _| {})
}

/// As [`reference_solution`], calling `observe(t, y)` after every accepted step.
pub fn reference_trajectory<F>(
    problem: &SplitOdeProblem,
    y0: &[f64],
    t_end: f64,
    tight_tol: f64,
    mut observe: F,
) -> Result<Vec<f64>>
where
    F: FnMut(f64, &[f64]),
{
    if !(tight_tol > 0.0 && tight_tol <= 1e-10) {
        return Err(Error::InvalidArgument(format!("reference tolerance must be in (0, 1e-10], got {tight_tol}")));
    }
    if !(t_end >= 0.0) {
        return Err(Error::InvalidArgument(format!("t_end must be non-negative, got {t_end}")));
    }
    const MAX_STEPS: usize = 2_000_000;
    let n = y0.len();
    let mut y = y0.to_vec();
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
    let mut stage = vec![0.0; n];
    let mut y_new = vec![0.0; n];
    problem.eval_full(&y, &mut k[0]);
    let mut t = 0.0;
    let mut h = 1e-6f64.min(t_end);
    let mut prev_err: f64 = 1e-4;
    let mut steps = 0usize;
    let mut rejected = false;
    while t < t_end {
        steps += 1;
        if steps > MAX_STEPS {
            return Err(Error::ReferenceUnattainable(format!("more than {MAX_STEPS} steps before t = {t_end}")));
        }
        if t + h > t_end {
            h = t_end - t;
        }
        for i in 1..7 {
            for c in 0..n {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate().take(i) {
                    acc += A[i][j] * kj[c];
                }
                stage[c] = y[c] + h * acc;
            }
            problem.eval_full(&stage, &mut k[i]);
            if i == 6 {
                y_new.copy_from_slice(&stage);
            }
        }
        let mut err = 0.0;
        for c in 0..n {
            let mut e = 0.0;
            for (j, kj) in k.iter().enumerate() {
                e += E[j] * kj[c];
            }
            let sc = tight_tol + tight_tol * y[c].abs().max(y_new[c].abs());
            err += (h * e / sc).powi(2);
        }
        let err = (err / n as f64).sqrt();
        if !err.is_finite() {
            h *= 0.1;
            rejected = true;
            continue;
        }
        if err <= 1.0 {
            t += h;
            std::mem::swap(&mut y, &mut y_new);
            // FSAL: last stage is f at the new point
            let last = k[6].clone();
            k[0].copy_from_slice(&last);
            observe(t, &y);
            // Lund-stabilised PI controller
            let mut fac = 0.9 * err.max(1e-10).powf(-0.7 / 5.0) * prev_err.powf(0.4 / 5.0);
            fac = fac.clamp(0.2, 5.0);
            if rejected {
                fac = fac.min(1.0);
            }
            prev_err = err.max(1e-4);
            h *= fac;
            rejected = false;
        } else {
            h *= (0.9 * err.powf(-0.2)).max(0.2);
            rejected = true;
        }
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn nyquist_eigenvalue() {
        let p = LinearAdvectionDiffusion1D::new(150, 3.0).unwrap();
        let (re, im) = p.eigenvalue(75);
        assert!((re + 4.0 * 150.0 * 150.0).abs() < 1e-8);
        assert!(im.abs() < 1e-10);
    }

    #[test]
    fn constants_are_steady() {
        let p = build_linear_ad(20, 2.0).unwrap();
        let u = vec![3.5; 20];
        let mut out = vec![1.0; 20];
        p.eval_diffusion(&u, &mut out);
        assert!(out.iter().all(|v| *v == 0.0));
        p.eval_advection_reaction(&u, &mut out);
        assert!(out.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn burgers_fields() {
        let p = build_burgers(100).unwrap();
        let mut out = vec![1.0; 100];
        p.eval_advection_reaction(&vec![0.0; 100], &mut out);
        assert!(out.iter().all(|v| *v == 0.0));
        p.eval_diffusion(&vec![0.0; 100], &mut out);
        assert!(out.iter().all(|v| *v == 0.0));
        p.eval_advection_reaction(&vec![1.0; 100], &mut out);
        assert!(out.iter().all(|v| (*v - 1f64.sin()).abs() < 1e-15));
        let u = BurgersReaction1D::default().initial();
        assert!((p.rho_advection_hint(&u).unwrap() - 10.0 * 2.0 / 0.01).abs() < 1e-9);
        assert_eq!(p.rho_diffusion_hint(&u).unwrap(), 4.0e4);
    }

    #[test]
    fn zero_advection_omits_field() {
        let p = build_linear_ad(16, 0.0).unwrap();
        assert!(!p.has_advection_reaction());
        assert!(p.is_linear());
        assert_eq!(p.rho_advection_hint(&[0.0; 16]), Some(0.0));
    }

    #[test]
    fn mean_of_fields_vanishes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = build_linear_ad(37, 1.7).unwrap();
        let mut out = vec![0.0; 37];
        for _ in 0..20 {
            let u: Vec<f64> = (0..37).map(|_| rng.random_range(-1.0..1.0)).collect();
            p.eval_diffusion(&u, &mut out);
            assert!(out.iter().sum::<f64>().abs() / 37.0 < 1e-12 * 37.0 * 37.0);
            p.eval_advection_reaction(&u, &mut out);
            assert!(out.iter().sum::<f64>().abs() / 37.0 < 1e-12 * 37.0);
        }
    }

    #[test]
    fn hints_dominate_spectrum() {
        for &(n, a) in &[(150usize, 0.1), (151, 5.0), (16, 12.0)] {
            let prob = LinearAdvectionDiffusion1D::new(n, a).unwrap();
            let (rd, ra) = (prob.rho_diffusion(), prob.rho_advection());
            for k in 1..=n {
                let (re, im) = prob.eigenvalue(k);
                assert!(-re <= rd && im.abs() <= ra);
            }
            let dx = prob.dx();
            assert!((rd - 4.0 / (dx * dx)).abs() / rd < 1e-3);
            assert!((ra - a / dx).abs() <= 1e-3 * a / dx + 1e-12);
        }
    }

    #[test]
    fn fourier_solution_single_mode() {
        // a = 0: sin(2 pi x_j) decays with the discrete eigenvalue of mode 1
        let prob = LinearAdvectionDiffusion1D::new(64, 0.0).unwrap();
        let y0 = prob.initial();
        let t = 0.01;
        let sol = prob.fourier_solution(&y0, t);
        let decay = (prob.eigenvalue(1).0 * t).exp();
        for (s, y) in sol.iter().zip(&y0) {
            assert!((s - decay * y).abs() < 1e-12);
        }
        // any a: a damped travelling wave sin(2 pi x_j + Im(lambda_1) t)
        let prob = LinearAdvectionDiffusion1D::new(64, 4.0).unwrap();
        let sol = prob.fourier_solution(&y0, t);
        let (lr, li) = prob.eigenvalue(1);
        for (j, x) in prob.grid().iter().enumerate() {
            let exact = (lr * t).exp() * (2.0 * PI * x + li * t).sin();
            assert!((sol[j] - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn reference_matches_fourier_oracle() {
        let prob = LinearAdvectionDiffusion1D::new(24, 2.0).unwrap();
        let p = prob.build();
        let y0 = prob.initial();
        let r = reference_solution(&p, &y0, 0.05, 1e-11).unwrap();
        let exact = prob.fourier_solution(&y0, 0.05);
        assert!(linf_distance(&r, &exact) < 1e-9);
    }

    #[test]
    fn reference_rejects_loose_tolerance() {
        let p = build_burgers(10).unwrap();
        assert!(reference_solution(&p, &[0.0; 10], 0.1, 1e-6).is_err());
    }

    #[test]
    fn profile_csv() {
        let mut buf = Vec::new();
        write_profile_csv(&mut buf, &[0.0, 0.5], &[1.0, -1.0]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "x,u\n0,1\n0.5,-1\n");
    }
}
