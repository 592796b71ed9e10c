//! Spectral radius estimates for `F_D` and `F_A` by nonlinear power iteration.

use serde::{Deserialize, Serialize};

use crate::integrators::SplitOdeProblem;

pub const MAX_POWER_ITERATIONS: usize = 50;
pub const CONVERGED_INFLATION: f64 = 1.05;
pub const UNCONVERGED_INFLATION: f64 = 1.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Which {
    Diffusion,
    Advection,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralEstimate {
    /// Value to use, inflated by the safety factor unless taken from a hint.
    pub rho: f64,
    /// Last uninflated iterate.
    pub raw: f64,
    pub eigvec: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub from_hint: bool,
    /// Right-hand side evaluations spent.
    pub evaluations: u64,
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Oscillatory start vector, so the highest-frequency modes dominate from
/// the first iterate.
fn start_vector(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let h = (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) >> 11;
            let frac = h as f64 / (1u64 << 53) as f64;
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            sign * (1.0 + 0.5 * frac)
        })
        .collect()
}

/// Spectral radius of the Jacobian of `F_D` or `F_A` at `y`.
///
/// A radius hint on the problem is returned as is. Otherwise power
/// iteration runs on `F(y + v) - F(y)` with `|v| = sqrt(eps) (1 + |y|)`,
/// starting from `previous_eigvec` when given.
pub fn estimate_spectral_radius(
    problem: &SplitOdeProblem,
    y: &[f64],
    which: Which,
    previous_eigvec: Option<&[f64]>,
) -> SpectralEstimate {
    let hint = match which {
        Which::Diffusion => problem.rho_diffusion_hint(y),
        Which::Advection if !problem.has_advection_reaction() => Some(0.0),
        Which::Advection => problem.rho_advection_hint(y),
    };
    if let Some(rho) = hint {
        return SpectralEstimate {
            rho,
            raw: rho,
            eigvec: previous_eigvec.map(<[f64]>::to_vec).unwrap_or_default(),
            converged: true,
            iterations: 0,
            from_hint: true,
            evaluations: 0,
        };
    }
    let eval = |x: &[f64], out: &mut [f64]| match which {
        Which::Diffusion => problem.eval_diffusion(x, out),
        Which::Advection => problem.eval_advection_reaction(x, out),
    };
    let n = y.len();
    let mut fy = vec![0.0; n];
    eval(y, &mut fy);
    let mut evaluations = 1;

    let scale = f64::EPSILON.sqrt() * (1.0 + norm2(y));
    let mut v = match previous_eigvec {
        Some(p) if p.len() == n && norm2(p) > 0.0 && p.iter().all(|x| x.is_finite()) => p.to_vec(),
        _ => start_vector(n),
    };
    let nv = norm2(&v);
    v.iter_mut().for_each(|x| *x *= scale / nv);

    let mut yv = vec![0.0; n];
    let mut fv = vec![0.0; n];
    let mut est = 0.0;
    let mut converged = false;
    let mut iterations = 0;
    for k in 0..MAX_POWER_ITERATIONS {
        iterations = k + 1;
        for i in 0..n {
            yv[i] = y[i] + v[i];
        }
        eval(&yv, &mut fv);
        evaluations += 1;
        for i in 0..n {
            fv[i] -= fy[i];
        }
        let nd = norm2(&fv);
        if !nd.is_finite() {
            break;
        }
        let new_est = nd / scale;
        if nd == 0.0 {
            // v lies in the kernel; the field is locally constant along it
            est = 0.0;
            converged = true;
            break;
        }
        for i in 0..n {
            v[i] = fv[i] * (scale / nd);
        }
        let done = k > 0 && (new_est - est).abs() < 0.01 * new_est;
        est = new_est;
        if done {
            converged = true;
            break;
        }
    }
    let factor = if converged { CONVERGED_INFLATION } else { UNCONVERGED_INFLATION };
    SpectralEstimate {
        rho: factor * est,
        raw: est,
        eigvec: v,
        converged,
        iterations,
        from_hint: false,
        evaluations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, SymmetricEigen};

    fn dirichlet_laplacian(n: usize) -> (SplitOdeProblem, DMatrix<f64>) {
        let dx = 1.0 / (n + 1) as f64;
        let c = 1.0 / (dx * dx);
        let m = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                -2.0 * c
            } else if i.abs_diff(j) == 1 {
                c
            } else {
                0.0
            }
        });
        let p = SplitOdeProblem::new(n, move |y, out| {
            for i in 0..n {
                let l = if i > 0 { y[i - 1] } else { 0.0 };
                let r = if i + 1 < n { y[i + 1] } else { 0.0 };
                out[i] = c * (l - 2.0 * y[i] + r);
            }
        });
        (p, m)
    }

    #[test]
    fn scalar_multiple() {
        let p = SplitOdeProblem::new(1, |y, o| o[0] = -7.0 * y[0]);
        let e = estimate_spectral_radius(&p, &[0.3], Which::Diffusion, None);
        assert!(e.converged);
        assert!((e.rho - 7.35).abs() < 1e-6, "{}", e.rho);
        assert!((e.raw - 7.0).abs() < 1e-6);
        assert!(e.evaluations >= 2);
    }

    #[test]
    fn laplacian_against_dense_eigensolve() {
        let (p, m) = dirichlet_laplacian(100);
        let exact = SymmetricEigen::new(m).eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let y: Vec<f64> = (0..100).map(|i| (i as f64 * 0.05).sin()).collect();
        let e = estimate_spectral_radius(&p, &y, Which::Diffusion, None);
        assert!((e.raw - exact).abs() <= 0.05 * exact, "{} vs {exact}", e.raw);
        assert!(e.rho >= e.raw);
        // warm start from the returned vector converges immediately
        let again = estimate_spectral_radius(&p, &y, Which::Diffusion, Some(&e.eigvec));
        assert!(again.iterations <= e.iterations);
        assert!((again.raw - exact).abs() <= 0.05 * exact);
    }

    #[test]
    fn hints_short_circuit() {
        let p = SplitOdeProblem::new(2, |y, o| o.copy_from_slice(y)).with_diffusion_radius(|_| 42.0);
        let e = estimate_spectral_radius(&p, &[1.0, 2.0], Which::Diffusion, None);
        assert_eq!((e.rho, e.evaluations, e.from_hint), (42.0, 0, true));
        let a = estimate_spectral_radius(&p, &[1.0, 2.0], Which::Advection, None);
        assert_eq!(a.rho, 0.0);
    }

    #[test]
    fn zero_field() {
        let p = SplitOdeProblem::new(4, |_, o| o.iter_mut().for_each(|v| *v = 0.0));
        let e = estimate_spectral_radius(&p, &[0.0; 4], Which::Diffusion, None);
        assert_eq!(e.rho, 0.0);
        assert!(e.converged);
    }

    #[test]
    fn advection_rotation() {
        // skew generator with eigenvalues +-3i
        let p = SplitOdeProblem::new(2, |_, o| o.iter_mut().for_each(|v| *v = 0.0))
            .with_advection_reaction(|y, o| {
                o[0] = -3.0 * y[1];
                o[1] = 3.0 * y[0];
            });
        let e = estimate_spectral_radius(&p, &[1.0, 0.5], Which::Advection, None);
        assert!(e.converged);
        assert!((e.raw - 3.0).abs() < 1e-6);
    }

    #[test]
    fn non_convergence_is_flagged() {
        // A^2 = I but |A v| / |v| alternates between 10 and 0.1
        let p = SplitOdeProblem::new(2, |y, o| {
            o[0] = 10.0 * y[1];
            o[1] = 0.1 * y[0];
        });
        let e = estimate_spectral_radius(&p, &[0.0, 0.0], Which::Diffusion, None);
        assert!(!e.converged);
        assert_eq!(e.iterations, MAX_POWER_ITERATIONS);
        assert!((e.rho - 1.2 * e.raw).abs() < 1e-12);
    }
}
