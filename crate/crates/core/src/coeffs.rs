//! Closed-form coefficients of the stabilized Chebyshev schemes.
//!
//! Every scalar depends only on the stage count `s` and the damping `eta`
//! through `omega0 = 1 + eta / s^2`. Arrays are indexed by stage number, so
//! `mu[j]` is the coefficient of stage `j`; unused leading slots are zero.

use std::collections::HashMap;
use std::sync::Arc;

use serde::Serialize;

use crate::chebpoly::{cheb_first_kind, cheb_second_kind};
use crate::error::{Error, Result};

/// Largest stage count any driver will use.
pub const MAX_STAGES: usize = 500;

/// Coefficients of the first-order Chebyshev method and of the first-order
/// advection-diffusion scheme built on it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cheb1Coefficients {
    pub s: usize,
    pub eta: f64,
    pub omega0: f64,
    pub omega1: f64,
    /// `mu[1..=s]`
    pub mu: Vec<f64>,
    /// `nu[2..=s]`
    pub nu: Vec<f64>,
    /// First-stage shift of the advection argument (`s*omega1/2`).
    pub nu1: f64,
    /// First-stage advection weight (`s*omega1/omega0`).
    pub kappa1: f64,
}

impl Cheb1Coefficients {
    /// Length of the real stability interval, `(1 + omega0) / omega1`.
    pub fn real_stability_length(&self) -> f64 {
        (1.0 + self.omega0) / self.omega1
    }
}

/// Coefficients shared by the second-order RKC method and the
/// advection-aware second-order scheme.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArkcCoefficients {
    pub s: usize,
    pub eta: f64,
    pub omega0: f64,
    pub omega2: f64,
    /// `a[0..=s]`, `a_j = 1 - b_j T_j(omega0)`
    pub a: Vec<f64>,
    /// `b[0..=s]`, with `b_0 = b_1 = b_2`
    pub b: Vec<f64>,
    /// `mu[2..=s]`
    pub mu: Vec<f64>,
    /// `nu[2..=s]`
    pub nu: Vec<f64>,
    /// `kappa[2..=s]`
    pub kappa: Vec<f64>,
    pub b1: f64,
    /// Weight of the correction term in the first stage.
    pub alpha: f64,
    /// Third-order coefficient of the `i q p^2` term.
    pub c1: f64,
    /// Third-order coefficient of the `p^3` term.
    pub c2: f64,
}

impl ArkcCoefficients {
    /// Length of the real stability interval, `(1 + omega0) / omega2`.
    pub fn real_stability_length(&self) -> f64 {
        (1.0 + self.omega0) / self.omega2
    }

    /// Coefficient of the first stage, `b_1 * omega2`.
    pub fn mu1(&self) -> f64 {
        self.b1 * self.omega2
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::InvalidArgument(format!("damping must be positive and finite, got {eta}")));
    }
    Ok(())
}

pub fn cheb1_coefficients(s: usize, eta: f64) -> Result<Cheb1Coefficients> {
    if s == 0 {
        return Err(Error::InvalidArgument("stage count must be at least 1".into()));
    }
    check_eta(eta)?;
    let sf = s as f64;
    let omega0 = 1.0 + eta / (sf * sf);
    let ts = cheb_first_kind(s, omega0);
    let omega1 = ts.value / ts.first_deriv;

    let mut mu = vec![0.0; s + 1];
    let mut nu = vec![0.0; s + 1];
    mu[1] = omega1 / omega0;
    let (mut t_prev, mut t_curr) = (1.0, omega0);
    for j in 2..=s {
        let t_next = 2.0 * omega0 * t_curr - t_prev;
        mu[j] = 2.0 * omega1 * t_curr / t_next;
        nu[j] = 2.0 * omega0 * t_curr / t_next;
        t_prev = t_curr;
        t_curr = t_next;
    }
    Ok(Cheb1Coefficients {
        s,
        eta,
        omega0,
        omega1,
        mu,
        nu,
        nu1: sf * omega1 / 2.0,
        kappa1: sf * omega1 / omega0,
    })
}

pub fn arkc_coefficients(s: usize, eta: f64) -> Result<ArkcCoefficients> {
    if s < 2 {
        return Err(Error::InvalidArgument(format!("second-order schemes need s >= 2, got {s}")));
    }
    check_eta(eta)?;
    let sf = s as f64;
    let omega0 = 1.0 + eta / (sf * sf);

    // T_j, T_j', T_j'' for j = 0..=s in one forward pass
    let mut t = vec![0.0; s + 1];
    let mut dt = vec![0.0; s + 1];
    let mut d2t = vec![0.0; s + 1];
    t[0] = 1.0;
    t[1] = omega0;
    dt[1] = 1.0;
    for j in 2..=s {
        t[j] = 2.0 * omega0 * t[j - 1] - t[j - 2];
        dt[j] = 2.0 * t[j - 1] + 2.0 * omega0 * dt[j - 1] - dt[j - 2];
        d2t[j] = 4.0 * dt[j - 1] + 2.0 * omega0 * d2t[j - 1] - d2t[j - 2];
    }
    let omega2 = dt[s] / d2t[s];

    let mut b = vec![0.0; s + 1];
    for j in 2..=s {
        b[j] = d2t[j] / (dt[j] * dt[j]);
    }
    b[0] = b[2];
    b[1] = b[2];
    let a: Vec<f64> = (0..=s).map(|j| 1.0 - b[j] * t[j]).collect();

    let mut mu = vec![0.0; s + 1];
    let mut nu = vec![0.0; s + 1];
    let mut kappa = vec![0.0; s + 1];
    for j in 2..=s {
        mu[j] = 2.0 * b[j] * omega2 / b[j - 1];
        nu[j] = 2.0 * b[j] * omega0 / b[j - 1];
        kappa[j] = -b[j] / b[j - 2];
    }

    let b1 = b[1];
    let alpha = (1.0 - omega2 / 2.0) * b1 * sf * omega2;
    let u = cheb_second_kind(s - 1, omega0);
    let c1 = (omega2 / 2.0) * (1.0 - omega2 / 2.0) * (1.0 + omega2 * u.second_deriv / u.value);
    let c2 = sf * b[s] * u.second_deriv * omega2.powi(3) / 6.0;

    Ok(ArkcCoefficients { s, eta, omega0, omega2, a, b, mu, nu, kappa, b1, alpha, c1, c2 })
}

/// Stage count for standard RKC with damping 0.15, from the rounded formula
/// `sqrt((h*rho + 1.5)/0.65) + 0.5`, bumped until `0.65 s^2 >= h*rho`.
pub fn rkc_stage_count(h_times_rho: f64) -> usize {
    let x = h_times_rho.max(0.0);
    let mut s = (((x + 1.5) / 0.65).sqrt() + 0.5).round() as usize;
    s = s.max(2);
    while 0.65 * ((s * s) as f64) < x {
        s += 1;
    }
    s
}

/// Stage-`j` expansion coefficients of the local error of the
/// advection-aware scheme, in the order
/// `[hF_D, hF_A, h^2 F_D'F_D, h^2 F_D'F_A, h^2 F_A'F_D, h^2 F_A'F_A]`.
///
/// Second order requires the final row to equal `[1, 1, 1/2, 1/2, 1/2, 1/2]`.
pub fn order_condition_gammas(c: &ArkcCoefficients) -> Vec<[f64; 6]> {
    let s = c.s;
    let w2 = c.omega2;
    let mut g = vec![[0.0; 6]; s + 1];
    let k1 = c.alpha + w2 / 2.0;
    g[0] = [0.0, w2 / 2.0, 0.0, w2 * (w2 - 1.0) / 4.0, w2 / 4.0, w2 / 4.0];
    g[1] = [c.b1 * w2, k1, 0.0, k1 * (w2 - 1.0) / 2.0, k1 / 2.0, k1 / 2.0];
    for j in 2..=s {
        let (mu, nu, ka) = (c.mu[j], c.nu[j], c.kappa[j]);
        let rest = 1.0 - nu - ka;
        let (p1, p2) = (g[j - 1], g[j - 2]);
        g[j] = [
            mu * (1.0 - c.a[j - 1]) + nu * p1[0] + ka * p2[0],
            nu * p1[1] + ka * p2[1] + rest * w2 / 2.0,
            mu * p1[0] + nu * p1[2] + ka * p2[2],
            mu * (p1[1] - w2 / 2.0) + nu * p1[3] + ka * p2[3] + rest * w2 * (w2 - 1.0) / 4.0,
            nu * p1[4] + ka * p2[4] + rest * w2 / 4.0,
            nu * p1[5] + ka * p2[5] + rest * w2 / 4.0,
        ];
    }
    g
}

/// Bounded per-driver memo of second-order coefficient sets keyed by `(s, eta)`.
#[derive(Debug, Default)]
pub struct CoefficientCache {
    entries: HashMap<(usize, u64), Arc<ArkcCoefficients>>,
}

impl CoefficientCache {
    const CAPACITY: usize = 1024;

    pub fn new() -> Self {
        Self::default()
    }

    pub fn arkc(&mut self, s: usize, eta: f64) -> Result<Arc<ArkcCoefficients>> {
        let key = (s, eta.to_bits());
        if let Some(c) = self.entries.get(&key) {
            return Ok(Arc::clone(c));
        }
        let c = Arc::new(arkc_coefficients(s, eta)?);
        if self.entries.len() >= Self::CAPACITY {
            self.entries.clear();
        }
        self.entries.insert(key, Arc::clone(&c));
        Ok(c)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}
