//! Fully adaptive driver for the advection-aware second-order scheme:
//! damping-table lookup, stage selection, error estimation and step control.

mod damping;
mod estimator;
mod spectral;

pub use damping::{real_stability_length, select_damping, select_stages, DampingTable, RatioBand, StageBand};
pub use estimator::{estimate_error, propose_step, weighted_rms, ErrorEstimatorState, MAX_FACTOR, MIN_FACTOR, SAFETY};
pub use spectral::{estimate_spectral_radius, SpectralEstimate, Which};

use serde::Serialize;

use crate::coeffs::{CoefficientCache, MAX_STAGES};
use crate::error::{Error, Result};
use crate::integrators::{step_arkc, step_rkc, Scheme, SplitOdeProblem, StepWorkspace};

/// How the driver picks the damping for a stage count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum DampingPolicy {
    /// Look up the band nearest to `rho_A / sqrt(rho_D)`.
    Table,
    /// Same damping for every stage count.
    Fixed(f64),
}

/// Multiply the error norm of one step attempt (0-based) by `factor`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorPerturbation {
    pub at_attempt: usize,
    pub factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdaptiveConfig {
    pub atol: f64,
    pub rtol: f64,
    pub h_init: f64,
    pub t_span: (f64, f64),
    pub max_steps: usize,
    /// `Arkc` (default) or `Rkc`; the latter treats `F_D + F_A` as one
    /// field and sizes stages by `rho_D + rho_A`.
    pub scheme: Scheme,
    pub safety: f64,
    pub h_growth_clamp: (f64, f64),
    pub damping: DampingPolicy,
    /// Accepted steps between radius refreshes for nonlinear problems.
    pub radius_refresh_interval: usize,
    pub record_trajectory: bool,
    pub record_trace: bool,
    pub perturbation: Option<ErrorPerturbation>,
}

impl AdaptiveConfig {
    /// `atol = rtol = tol`, `h_init = 1e-3`.
    pub fn with_tolerance(tol: f64, t_span: (f64, f64)) -> Self {
        Self {
            atol: tol,
            rtol: tol,
            h_init: 1e-3,
            t_span,
            max_steps: 100_000,
            scheme: Scheme::Arkc,
            safety: SAFETY,
            h_growth_clamp: (MIN_FACTOR, MAX_FACTOR),
            damping: DampingPolicy::Table,
            radius_refresh_interval: 1,
            record_trajectory: false,
            record_trace: false,
            perturbation: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(self.atol > 0.0 && self.rtol > 0.0) {
            return bad(format!("tolerances must be positive, got atol={} rtol={}", self.atol, self.rtol));
        }
        if !(self.h_init > 0.0 && self.h_init.is_finite()) {
            return bad(format!("initial step must be positive, got {}", self.h_init));
        }
        let (t0, t1) = self.t_span;
        if !(t0.is_finite() && t1.is_finite() && t1 > t0) {
            return bad(format!("empty time span [{t0}, {t1}]"));
        }
        let (lo, hi) = self.h_growth_clamp;
        if !(lo > 0.0 && lo <= 1.0 && hi >= 1.0 && self.safety > 0.0 && self.safety <= 1.0) {
            return bad("invalid safety factor or growth clamp".into());
        }
        if let DampingPolicy::Fixed(eta) = self.damping {
            if !(eta > 0.0 && eta.is_finite()) {
                return bad(format!("damping must be positive, got {eta}"));
            }
        }
        if !matches!(self.scheme, Scheme::Arkc | Scheme::Rkc) {
            return bad(format!("adaptive driver supports arkc and rkc, got {}", self.scheme));
        }
        if self.radius_refresh_interval == 0 {
            return bad("radius refresh interval must be at least 1".into());
        }
        Ok(())
    }
}

/// One step attempt.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceEntry {
    pub t: f64,
    pub h: f64,
    pub s: usize,
    pub eta: f64,
    pub err: f64,
    pub accepted: bool,
    pub rho_d: f64,
    pub rho_a: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct IntegrationReport {
    pub steps_accepted: usize,
    pub steps_rejected: usize,
    pub fd_evals: u64,
    pub fa_evals: u64,
    pub s_max: usize,
    pub final_time: f64,
    pub final_state: Vec<f64>,
    pub final_error_vs_reference: Option<f64>,
    pub trajectory_samples: Option<Vec<(f64, Vec<f64>)>>,
    /// Stopped at `max_steps` before reaching the end of the span.
    pub incomplete: bool,
    /// A spectral radius estimate did not converge.
    pub spectral_warning: bool,
    pub trace: Vec<TraceEntry>,
}

/// `rho_A / sqrt(rho_D)`, the regime label used for the damping tables.
pub fn rho_ratio(rho_d: f64, rho_a: f64) -> f64 {
    if rho_d > 0.0 {
        rho_a / rho_d.sqrt()
    } else if rho_a > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

struct Radii {
    rho_d: f64,
    rho_a: f64,
    eig_d: Option<Vec<f64>>,
    eig_a: Option<Vec<f64>>,
}

impl Radii {
    fn refresh(&mut self, problem: &SplitOdeProblem, y: &[f64], report: &mut IntegrationReport) {
        let d = estimate_spectral_radius(problem, y, Which::Diffusion, self.eig_d.as_deref());
        let a = estimate_spectral_radius(problem, y, Which::Advection, self.eig_a.as_deref());
        report.fd_evals += d.evaluations;
        report.fa_evals += a.evaluations;
        report.spectral_warning |= !(d.converged && a.converged);
        self.rho_d = d.rho;
        self.rho_a = a.rho;
        if !d.from_hint {
            self.eig_d = Some(d.eigvec);
        }
        if !a.from_hint {
            self.eig_a = Some(a.eigvec);
        }
    }
}

/// Integrate `problem` from `y0` over `config.t_span` with the adaptive
/// advection-aware scheme.
///
/// Each attempt selects the smallest stage count whose real stability
/// interval covers `h rho_D`, with damping from the band matching
/// `rho_A / sqrt(rho_D)` (kept fixed across retries of one step), takes a
/// step, and accepts it when the weighted error norm is at most 1. Radii
/// are computed once for linear problems; otherwise they are refreshed
/// every `radius_refresh_interval` accepted steps and after each rejection.
/// A non-finite stage rejects the step and halves `h`.
pub fn integrate_adaptive(problem: &SplitOdeProblem, y0: &[f64], config: &AdaptiveConfig) -> Result<IntegrationReport> {
    config.validate()?;
    let n = problem.dimension();
    if y0.len() != n {
        return Err(Error::InvalidArgument(format!("initial state has length {}, problem has {n}", y0.len())));
    }
    if !y0.iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidArgument("initial state is not finite".into()));
    }
    let table = DampingTable::standard();
    let fixed_band = match config.damping {
        DampingPolicy::Fixed(eta) => Some(RatioBand {
            label: format!("fixed eta={eta}"),
            nominal_ratio: 0.0,
            stages: vec![StageBand { s_min: 2, s_max: MAX_STAGES, eta }],
        }),
        DampingPolicy::Table => None,
    };

    let (t0, t1) = config.t_span;
    let mut report = IntegrationReport { final_time: t0, ..Default::default() };
    let mut traj = config.record_trajectory.then(|| vec![(t0, y0.to_vec())]);

    let mut t = t0;
    let mut y = y0.to_vec();
    let mut y_new = vec![0.0; n];
    let mut fd_next = vec![0.0; n];
    let mut fa_next = vec![0.0; n];
    let mut ws = StepWorkspace::new(n);
    let mut cache = CoefficientCache::new();
    let mut est = ErrorEstimatorState::new(problem, config.atol, config.rtol);
    est.safety = config.safety;
    est.growth_clamp = config.h_growth_clamp;
    let whole_field = config.scheme == Scheme::Rkc;
    if whole_field {
        est.zeta = 0.0;
    }

    let mut radii = Radii { rho_d: 0.0, rho_a: 0.0, eig_d: None, eig_a: None };
    let mut need_refresh = true;
    let mut since_refresh = 0usize;
    let mut band: Option<&RatioBand> = None;
    let mut h = config.h_init;
    let mut attempts = 0usize;

    while t < t1 {
        if attempts >= config.max_steps {
            report.incomplete = true;
            break;
        }
        if need_refresh {
            radii.refresh(problem, &y, &mut report);
            need_refresh = false;
            since_refresh = 0;
        }
        let active = match (&fixed_band, band) {
            (Some(b), _) => b,
            (None, Some(b)) => b,
            (None, None) => table.band(rho_ratio(radii.rho_d, radii.rho_a)),
        };
        band = Some(active);

        let remaining = t1 - t;
        let last = h >= remaining;
        if last {
            h = remaining;
        }
        let rho_stages = if whole_field { radii.rho_d + radii.rho_a } else { radii.rho_d };
        let (s, eta) = match select_stages(h, rho_stages, active) {
            Ok(v) => v,
            Err(Error::ReduceStep { max_interval, .. }) => {
                h = 0.9 * max_interval / rho_stages;
                continue;
            }
            Err(e) => return Err(e),
        };
        let coeffs = cache.arkc(s, eta)?;
        est.set_coefficients(&coeffs);

        let stepped = if whole_field {
            step_rkc(problem, &y, h, &coeffs, &mut ws, &mut y_new)
        } else {
            step_arkc(problem, &y, h, &coeffs, &mut ws, &mut y_new)
        };
        let (mut err, diverged) = match stepped {
            Ok(()) => (estimate_error(&y, &y_new, h, problem, &est, &mut ws, (&mut fd_next, &mut fa_next)), false),
            Err(Error::Divergence { .. }) => (f64::INFINITY, true),
            Err(e) => return Err(e),
        };
        if let Some(p) = config.perturbation {
            if p.at_attempt == attempts {
                err *= p.factor;
            }
        }
        attempts += 1;
        let accepted = err <= 1.0;
        if config.record_trace {
            report.trace.push(TraceEntry { t, h, s, eta, err, accepted, rho_d: radii.rho_d, rho_a: radii.rho_a });
        }

        let h_next;
        if accepted {
            t = if last { t1 } else { t + h };
            std::mem::swap(&mut y, &mut y_new);
            ws.prime(&fd_next, &fa_next);
            report.steps_accepted += 1;
            report.s_max = report.s_max.max(s);
            h_next = propose_step(err, h, &est);
            est.record_accept(err, h);
            band = None;
            since_refresh += 1;
            if !problem.is_linear() && since_refresh >= config.radius_refresh_interval {
                need_refresh = true;
            }
            if let Some(tr) = traj.as_mut() {
                tr.push((t, y.clone()));
            }
        } else {
            report.steps_rejected += 1;
            h_next = if diverged { 0.5 * h } else { propose_step(err, h, &est) };
            est.record_reject();
            let (fd0, fa0) = ws.rhs_at_start();
            fd_next.copy_from_slice(fd0);
            fa_next.copy_from_slice(fa0);
            ws.prime(&fd_next, &fa_next);
            if !problem.is_linear() {
                need_refresh = true;
            }
        }
        h = h_next;
        if !(h > 1e-14 * (1.0 + t.abs())) {
            return Err(Error::StepFailed {
                step: report.steps_accepted,
                source: Box::new(if diverged {
                    Error::Divergence { stage: -1 }
                } else {
                    Error::InvalidArgument(format!("step size underflow at t = {t}"))
                }),
            });
        }
    }

    report.fd_evals += ws.counters.fd_evals;
    report.fa_evals += ws.counters.fa_evals;
    report.final_time = t;
    report.final_state = y;
    report.trajectory_samples = traj;
    Ok(report)
}
