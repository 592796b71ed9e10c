//! Embedded local error estimate and step-size controller.

use crate::coeffs::ArkcCoefficients;
use crate::integrators::{SplitOdeProblem, StepWorkspace};

pub const SAFETY: f64 = 0.8;
pub const MIN_FACTOR: f64 = 0.1;
pub const MAX_FACTOR: f64 = 10.0;

/// Scale constant and controller memory for the error estimate
/// `Est = C (12 (y_n - y_{n+1}) + 6 h (F(y_n) + F(y_{n+1})))`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorEstimatorState {
    /// 1 when an advection-reaction field is present, else 0.
    pub zeta: f64,
    pub c1: f64,
    pub c2: f64,
    pub big_c: f64,
    pub prev_err_norm: Option<f64>,
    pub prev_h: Option<f64>,
    pub last_rejected: bool,
    pub atol: f64,
    pub rtol: f64,
    pub safety: f64,
    pub growth_clamp: (f64, f64),
    s: usize,
    eta_bits: u64,
}

impl ErrorEstimatorState {
    pub fn new(problem: &SplitOdeProblem, atol: f64, rtol: f64) -> Self {
        Self {
            zeta: if problem.has_advection_reaction() { 1.0 } else { 0.0 },
            c1: 0.0,
            c2: 0.0,
            big_c: 0.0,
            prev_err_norm: None,
            prev_h: None,
            last_rejected: false,
            atol,
            rtol,
            safety: SAFETY,
            growth_clamp: (MIN_FACTOR, MAX_FACTOR),
            s: 0,
            eta_bits: 0,
        }
    }

    /// Refresh `c1`, `c2`, `C` if `(s, eta)` changed.
    pub fn set_coefficients(&mut self, c: &ArkcCoefficients) {
        if self.s == c.s && self.eta_bits == c.eta.to_bits() {
            return;
        }
        self.s = c.s;
        self.eta_bits = c.eta.to_bits();
        self.c1 = c.c1;
        self.c2 = c.c2;
        self.big_c = 1.0 / 6.0 - c.c2 + (0.5 - c.c1) * self.zeta - self.zeta / 6.0;
    }

    pub fn stages(&self) -> usize {
        self.s
    }

    pub fn record_accept(&mut self, err: f64, h: f64) {
        self.prev_err_norm = Some(err);
        self.prev_h = Some(h);
        self.last_rejected = false;
    }

    pub fn record_reject(&mut self) {
        self.last_rejected = true;
    }
}

/// Weighted RMS norm with weights `atol + rtol max(|a_i|, |b_i|)`.
pub fn weighted_rms(v: &[f64], a: &[f64], b: &[f64], atol: f64, rtol: f64) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let sum: f64 = v
        .iter()
        .zip(a.iter().zip(b))
        .map(|(e, (x, y))| {
            let w = atol + rtol * x.abs().max(y.abs());
            (e / w).powi(2)
        })
        .sum();
    let norm = (sum / v.len() as f64).sqrt();
    if norm.is_finite() {
        norm
    } else {
        f64::INFINITY
    }
}

/// Error norm of the step `y_prev -> y_next` just taken with `ws`.
///
/// `F_D(y_prev)`, `F_A(y_prev)` are read from the workspace; `F_D(y_next)`
/// and `F_A(y_next)` are evaluated, charged to `ws.counters` and left in
/// `rhs_next` so an accepted step can prime the next one.
pub fn estimate_error(
    y_prev: &[f64],
    y_next: &[f64],
    h: f64,
    problem: &SplitOdeProblem,
    state: &ErrorEstimatorState,
    ws: &mut StepWorkspace,
    rhs_next: (&mut [f64], &mut [f64]),
) -> f64 {
    let (fd_next, fa_next) = rhs_next;
    if !y_next.iter().all(|v| v.is_finite()) {
        return f64::INFINITY;
    }
    ws.counters.fd(problem, y_next, fd_next);
    ws.counters.fa(problem, y_next, fa_next);
    let (fd_prev, fa_prev) = ws.rhs_at_start();
    let c = state.big_c;
    let est: Vec<f64> = (0..y_prev.len())
        .map(|i| c * (12.0 * (y_prev[i] - y_next[i]) + 6.0 * h * (fd_prev[i] + fa_prev[i] + fd_next[i] + fa_next[i])))
        .collect();
    weighted_rms(&est, y_prev, y_next, state.atol, state.rtol)
}

/// Next step size after an error norm `err` at step `h`.
///
/// Accepted steps (`err <= 1`) use `safety (h/h_old) err_old^{1/3} / err^{2/3}`
/// when history exists and `safety err^{-1/3}` otherwise, clamped to the
/// growth limits (default `[0.1, 10]`) and to at most 1 right after a
/// rejection. Rejected steps use `max(0.1, safety err^{-1/3})`.
pub fn propose_step(err: f64, h: f64, state: &ErrorEstimatorState) -> f64 {
    let third = 1.0 / 3.0;
    let (lo, hi) = state.growth_clamp;
    if !(err <= 1.0) {
        if !err.is_finite() {
            return lo * h;
        }
        return h * (state.safety * err.powf(-third)).max(lo);
    }
    let fac = match (state.prev_err_norm, state.prev_h) {
        (Some(e_old), Some(h_old)) if e_old > 0.0 && h_old > 0.0 => {
            state.safety * (h / h_old) * e_old.powf(third) / err.powf(2.0 * third)
        }
        _ => state.safety * err.powf(-third),
    };
    let mut fac = if fac.is_nan() { hi } else { fac.clamp(lo, hi) };
    if state.last_rejected {
        fac = fac.min(1.0);
    }
    h * fac
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::arkc_coefficients;
    use crate::integrators::step_arkc;

    fn scalar_state(lambda: f64) -> (SplitOdeProblem, ErrorEstimatorState) {
        let p = SplitOdeProblem::new(1, move |y, out| out[0] = lambda * y[0]);
        let st = ErrorEstimatorState::new(&p, 1e-3, 1e-3);
        (p, st)
    }

    #[test]
    fn controller_examples() {
        let (_, st) = scalar_state(-1.0);
        assert!((propose_step(1.0, 1.0, &st) - 0.8).abs() < 1e-15);
        assert!((propose_step(8.0, 1.0, &st) - 0.4).abs() < 1e-15);
        assert!((propose_step(1e-3, 1.0, &st) - 8.0).abs() < 1e-12);
        assert_eq!(propose_step(0.0, 1.0, &st), 10.0);
        assert_eq!(propose_step(1e9, 1.0, &st), 0.1);
        assert_eq!(propose_step(f64::INFINITY, 2.0, &st), 0.2);
        assert_eq!(propose_step(f64::NAN, 2.0, &st), 0.2);
    }

    #[test]
    fn controller_with_history() {
        let (_, mut st) = scalar_state(-1.0);
        st.record_accept(0.5, 1.0);
        // steady error and step: factor 0.8 / err^{1/3}
        let h = propose_step(0.5, 1.0, &st);
        assert!((h - 0.8 * 0.5f64.powf(-1.0 / 3.0)).abs() < 1e-14);
        st.record_reject();
        assert!(propose_step(1e-6, 1.0, &st) <= 1.0);
        // zero previous error falls back to the one-step rule
        st.record_accept(0.0, 1.0);
        assert!((propose_step(1.0, 1.0, &st) - 0.8).abs() < 1e-15);
    }

    #[test]
    fn zero_field_gives_zero_error() {
        let p = SplitOdeProblem::new(3, |_, out| out.iter_mut().for_each(|v| *v = 0.0))
            .with_advection_reaction(|_, out| out.iter_mut().for_each(|v| *v = 0.0));
        let mut st = ErrorEstimatorState::new(&p, 1e-6, 1e-6);
        let c = arkc_coefficients(5, 0.15).unwrap();
        st.set_coefficients(&c);
        let y0 = [1.0, -2.0, 3.0];
        let mut ws = StepWorkspace::new(3);
        let mut y1 = [0.0; 3];
        step_arkc(&p, &y0, 0.1, &c, &mut ws, &mut y1).unwrap();
        assert_eq!(y1, y0);
        let (mut a, mut b) = ([0.0; 3], [0.0; 3]);
        assert_eq!(estimate_error(&y0, &y1, 0.1, &p, &st, &mut ws, (&mut a, &mut b)), 0.0);
    }

    #[test]
    fn scalar_closed_form() {
        let lambda = -30.0;
        let (p, mut st) = scalar_state(lambda);
        for &(s, eta, h) in &[(7usize, 0.15, 0.2), (20, 2.0, 0.5), (3, 0.6, 0.05)] {
            let c = arkc_coefficients(s, eta).unwrap();
            st.set_coefficients(&c);
            assert_eq!(st.zeta, 0.0);
            assert!((st.big_c - (1.0 / 6.0 - c.c2)).abs() < 1e-15);
            let y0 = [1.7];
            let mut ws = StepWorkspace::new(1);
            let mut y1 = [0.0];
            step_arkc(&p, &y0, h, &c, &mut ws, &mut y1).unwrap();
            let r = y1[0] / y0[0];
            let z = h * lambda;
            let expected = (st.big_c * (12.0 * (1.0 - r) + 6.0 * z * (1.0 + r)) * y0[0]).abs();
            let w = st.atol + st.rtol * y0[0].abs().max(y1[0].abs());
            let (mut a, mut b) = ([0.0], [0.0]);
            let got = estimate_error(&y0, &y1, h, &p, &st, &mut ws, (&mut a, &mut b)) * w;
            assert!((got - expected).abs() <= 1e-12 * expected.max(1.0), "{got} {expected}");
            assert_eq!(a[0], lambda * y1[0]);
        }
    }

    #[test]
    fn constant_tracks_coefficients() {
        let p = SplitOdeProblem::new(1, |y, o| o[0] = -y[0]).with_advection_reaction(|y, o| o[0] = y[0]);
        let mut st = ErrorEstimatorState::new(&p, 1.0, 1.0);
        assert_eq!(st.zeta, 1.0);
        let c = arkc_coefficients(9, 3.0).unwrap();
        st.set_coefficients(&c);
        let expect = 1.0 / 6.0 - c.c2 + (0.5 - c.c1) - 1.0 / 6.0;
        assert!((st.big_c - expect).abs() < 1e-15);
        let c2 = arkc_coefficients(9, 4.0).unwrap();
        st.set_coefficients(&c2);
        assert!((st.big_c - (0.5 - c2.c2 - c2.c1)).abs() < 1e-15);
        assert_eq!(st.stages(), 9);
    }

    #[test]
    fn norm_weights() {
        let n = weighted_rms(&[1.0, 1.0], &[0.0, 1.0], &[0.0, -3.0], 1.0, 1.0);
        assert!((n - ((1.0 + 1.0 / 16.0) / 2.0f64).sqrt()).abs() < 1e-15);
        assert_eq!(weighted_rms(&[f64::NAN], &[0.0], &[0.0], 1.0, 1.0), f64::INFINITY);
    }
}
