//! One-step maps of the stabilized schemes over a split right-hand side
//! `y' = F_D(y) + F_A(y)`, and a fixed-step driver.
//!
//! * [`step_cheb1`]: first-order Chebyshev method on `f = F_D + F_A`.
//! * [`step_rkc`]: second-order RKC on `f = F_D + F_A`.
//! * [`step_ad1`]: first-order scheme with a single `F_A` evaluation per step.
//! * [`step_arkc`]: second-order scheme with `s + 2` evaluations of `F_D`
//!   and 3 of `F_A` per step; damping may vary from step to step.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::adaptive::IntegrationReport;
use crate::coeffs::{arkc_coefficients, cheb1_coefficients, ArkcCoefficients, Cheb1Coefficients};
use crate::error::{Error, Result};

pub type VectorField = Box<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;
pub type RadiusHint = Box<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// An autonomous ODE system split into a stiff diffusion part `F_D` and a
/// non-stiff advection-reaction part `F_A`.
///
/// A problem built without an advection-reaction field treats `F_A` as
/// identically zero and never evaluates it.
pub struct SplitOdeProblem {
    dimension: usize,
    diffusion: VectorField,
    advection_reaction: Option<VectorField>,
    rho_diffusion: Option<RadiusHint>,
    rho_advection: Option<RadiusHint>,
    linear: bool,
}

impl fmt::Debug for SplitOdeProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SplitOdeProblem")
            .field("dimension", &self.dimension)
            .field("has_advection_reaction", &self.advection_reaction.is_some())
            .field("has_rho_diffusion", &self.rho_diffusion.is_some())
            .field("has_rho_advection", &self.rho_advection.is_some())
            .field("linear", &self.linear)
            .finish()
    }
}

impl SplitOdeProblem {
    pub fn new<F>(dimension: usize, diffusion: F) -> Self
    where
        F: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    {
        Self {
            dimension,
            diffusion: Box::new(diffusion),
            advection_reaction: None,
            rho_diffusion: None,
            rho_advection: None,
            linear: false,
        }
    }

    pub fn with_advection_reaction<F>(mut self, f: F) -> Self
    where
        F: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    {
        self.advection_reaction = Some(Box::new(f));
        self
    }

    pub fn with_diffusion_radius<F>(mut self, rho: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        self.rho_diffusion = Some(Box::new(rho));
        self
    }

    pub fn with_advection_radius<F>(mut self, rho: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        self.rho_advection = Some(Box::new(rho));
        self
    }

    /// Mark the problem as linear: spectral radii are then computed once.
    pub fn linear(mut self, linear: bool) -> Self {
        self.linear = linear;
        self
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn has_advection_reaction(&self) -> bool {
        self.advection_reaction.is_some()
    }

    pub fn is_linear(&self) -> bool {
        self.linear
    }

    /// `F_D(y)` written to `out` (uncounted).
    pub fn eval_diffusion(&self, y: &[f64], out: &mut [f64]) {
        (self.diffusion)(y, out);
    }

    /// `F_A(y)` written to `out` (uncounted); zero when the field is absent.
    pub fn eval_advection_reaction(&self, y: &[f64], out: &mut [f64]) {
        match &self.advection_reaction {
            Some(f) => f(y, out),
            None => out.iter_mut().for_each(|v| *v = 0.0),
        }
    }

    /// `F_D(y) + F_A(y)` (uncounted).
    pub fn eval_full(&self, y: &[f64], out: &mut [f64]) {
        (self.diffusion)(y, out);
        if let Some(f) = &self.advection_reaction {
            let mut tmp = vec![0.0; out.len()];
            f(y, &mut tmp);
            out.iter_mut().zip(&tmp).for_each(|(o, t)| *o += t);
        }
    }

    pub fn rho_diffusion_hint(&self, y: &[f64]) -> Option<f64> {
        self.rho_diffusion.as_ref().map(|r| r(y))
    }

    pub fn rho_advection_hint(&self, y: &[f64]) -> Option<f64> {
        self.rho_advection.as_ref().map(|r| r(y))
    }
}

/// Right-hand side evaluation counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalCounters {
    pub fd_evals: u64,
    pub fa_evals: u64,
}

impl EvalCounters {
    pub fn fd(&mut self, p: &SplitOdeProblem, y: &[f64], out: &mut [f64]) {
        self.fd_evals += 1;
        p.eval_diffusion(y, out);
    }

    /// Counted `F_A` evaluation. Absent fields are not charged.
    pub fn fa(&mut self, p: &SplitOdeProblem, y: &[f64], out: &mut [f64]) {
        if p.has_advection_reaction() {
            self.fa_evals += 1;
        }
        p.eval_advection_reaction(y, out);
    }

    /// Counted `F_D + F_A`; `scratch` receives `F_A`.
    fn full(&mut self, p: &SplitOdeProblem, y: &[f64], out: &mut [f64], scratch: &mut [f64]) {
        self.fd(p, y, out);
        if p.has_advection_reaction() {
            self.fa(p, y, scratch);
            out.iter_mut().zip(scratch.iter()).for_each(|(o, t)| *o += t);
        }
    }
}

/// Scratch storage for the one-step maps.
///
/// The stage recurrence rotates `k_prev2`, `k_prev1` and `k_curr`; the
/// remaining vectors hold quantities that every stage reads.
#[derive(Debug, Clone)]
pub struct StepWorkspace {
    k_prev2: Vec<f64>,
    k_prev1: Vec<f64>,
    k_curr: Vec<f64>,
    k0: Vec<f64>,
    g: Vec<f64>,
    fd_at_y0: Vec<f64>,
    fa_at_y0: Vec<f64>,
    fd_at_k0: Vec<f64>,
    f: Vec<f64>,
    tmp: Vec<f64>,
    primed: bool,
    pub counters: EvalCounters,
}

impl StepWorkspace {
    pub fn new(dimension: usize) -> Self {
        let z = vec![0.0; dimension];
        Self {
            k_prev2: z.clone(),
            k_prev1: z.clone(),
            k_curr: z.clone(),
            k0: z.clone(),
            g: z.clone(),
            fd_at_y0: z.clone(),
            fa_at_y0: z.clone(),
            fd_at_k0: z.clone(),
            f: z.clone(),
            tmp: z,
            primed: false,
            counters: EvalCounters::default(),
        }
    }

    pub fn dimension(&self) -> usize {
        self.k0.len()
    }

    /// Supply `F_D(y0)` and `F_A(y0)` for the `y0` of the next
    /// [`step_arkc`] call, which then skips those two evaluations.
    /// The values are consumed by that single call.
    pub fn prime(&mut self, fd_at_y0: &[f64], fa_at_y0: &[f64]) {
        self.fd_at_y0.copy_from_slice(fd_at_y0);
        self.fa_at_y0.copy_from_slice(fa_at_y0);
        self.primed = true;
    }

    pub fn clear_prime(&mut self) {
        self.primed = false;
    }

    /// The correction term `G` of the last [`step_arkc`] call.
    pub fn correction(&self) -> &[f64] {
        &self.g
    }

    /// `F_D(y0)` and `F_A(y0)` as used by the last [`step_arkc`] call.
    pub fn rhs_at_start(&self) -> (&[f64], &[f64]) {
        (&self.fd_at_y0, &self.fa_at_y0)
    }
}

fn check_finite(v: &[f64], stage: i64) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::Divergence { stage })
    }
}

fn check_shapes(p: &SplitOdeProblem, y0: &[f64], ws: &StepWorkspace, y1: &[f64], h: f64) -> Result<()> {
    let n = p.dimension();
    if y0.len() != n || y1.len() != n || ws.dimension() != n {
        return Err(Error::InvalidArgument(format!(
            "state length mismatch: problem {n}, y0 {}, y1 {}, workspace {}",
            y0.len(),
            y1.len(),
            ws.dimension()
        )));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidArgument(format!("step size must be positive, got {h}")));
    }
    check_finite(y0, 0)
}

/// First-order Chebyshev step on `f = F_D + F_A`; `s` evaluations of `f`.
pub fn step_cheb1(
    problem: &SplitOdeProblem,
    y0: &[f64],
    h: f64,
    c: &Cheb1Coefficients,
    ws: &mut StepWorkspace,
    y1: &mut [f64],
) -> Result<()> {
    check_shapes(problem, y0, ws, y1, h)?;
    ws.primed = false;
    let StepWorkspace { k_prev2, k_prev1, k_curr, f, tmp, counters, .. } = ws;

    k_prev2.copy_from_slice(y0);
    counters.full(problem, y0, f, tmp);
    let m1 = c.mu[1] * h;
    for i in 0..y0.len() {
        k_prev1[i] = y0[i] + m1 * f[i];
    }
    check_finite(k_prev1, 1)?;
    for j in 2..=c.s {
        counters.full(problem, k_prev1, f, tmp);
        let (mh, nu) = (c.mu[j] * h, c.nu[j]);
        for i in 0..y0.len() {
            k_curr[i] = k_prev2[i] + nu * (k_prev1[i] - k_prev2[i]) + mh * f[i];
        }
        check_finite(k_curr, j as i64)?;
        std::mem::swap(k_prev2, k_prev1);
        std::mem::swap(k_prev1, k_curr);
    }
    y1.copy_from_slice(k_prev1);
    Ok(())
}

/// Second-order RKC step.
///
/// With an advection-reaction field present this integrates
/// `f = F_D + F_A` (each evaluation charges both counters); without one it
/// integrates `F_D` alone.
pub fn step_rkc(
    problem: &SplitOdeProblem,
    y0: &[f64],
    h: f64,
    c: &ArkcCoefficients,
    ws: &mut StepWorkspace,
    y1: &mut [f64],
) -> Result<()> {
    check_shapes(problem, y0, ws, y1, h)?;
    let primed = std::mem::replace(&mut ws.primed, false);
    let StepWorkspace { k_prev2, k_prev1, k_curr, fd_at_y0, fa_at_y0, fd_at_k0, f, tmp, counters, .. } = ws;

    // fd_at_k0 holds f(y0) here
    if !primed {
        counters.fd(problem, y0, fd_at_y0);
        counters.fa(problem, y0, fa_at_y0);
    }
    for i in 0..y0.len() {
        fd_at_k0[i] = fd_at_y0[i] + fa_at_y0[i];
    }
    rkc_stages(problem, y0, h, c, k_prev2, k_prev1, k_curr, fd_at_k0, f, tmp, counters, true)?;
    y1.copy_from_slice(k_prev1);
    Ok(())
}

/// Stages 1..=s of RKC from `K_0 = y0` with `f0 = f(y0)`. The result is
/// left in `k_prev1`.
#[allow(clippy::too_many_arguments)]
fn rkc_stages(
    problem: &SplitOdeProblem,
    y0: &[f64],
    h: f64,
    c: &ArkcCoefficients,
    k_prev2: &mut Vec<f64>,
    k_prev1: &mut Vec<f64>,
    k_curr: &mut Vec<f64>,
    f0: &[f64],
    f: &mut [f64],
    tmp: &mut [f64],
    counters: &mut EvalCounters,
    full_rhs: bool,
) -> Result<()> {
    k_prev2.copy_from_slice(y0);
    let m1 = c.mu1() * h;
    for i in 0..y0.len() {
        k_prev1[i] = y0[i] + m1 * f0[i];
    }
    check_finite(k_prev1, 1)?;
    for j in 2..=c.s {
        if full_rhs {
            counters.full(problem, k_prev1, f, tmp);
        } else {
            counters.fd(problem, k_prev1, f);
        }
        let (mh, nu, ka, am) = (c.mu[j] * h, c.nu[j], c.kappa[j], c.a[j - 1]);
        for i in 0..y0.len() {
            k_curr[i] = y0[i] + nu * (k_prev1[i] - y0[i]) + ka * (k_prev2[i] - y0[i]) + mh * (f[i] - am * f0[i]);
        }
        check_finite(k_curr, j as i64)?;
        std::mem::swap(k_prev2, k_prev1);
        std::mem::swap(k_prev1, k_curr);
    }
    Ok(())
}

/// First-order advection-diffusion step: `s` evaluations of `F_D` and one
/// of `F_A`.
pub fn step_ad1(
    problem: &SplitOdeProblem,
    y0: &[f64],
    h: f64,
    c: &Cheb1Coefficients,
    ws: &mut StepWorkspace,
    y1: &mut [f64],
) -> Result<()> {
    check_shapes(problem, y0, ws, y1, h)?;
    ws.primed = false;
    let StepWorkspace { k_prev2, k_prev1, k_curr, fa_at_y0, f, tmp, counters, .. } = ws;
    let n = y0.len();

    k_prev2.copy_from_slice(y0);
    if problem.has_advection_reaction() {
        counters.fa(problem, y0, fa_at_y0);
        let shift = c.nu1 * h;
        for i in 0..n {
            tmp[i] = y0[i] + shift * fa_at_y0[i];
        }
        counters.fd(problem, tmp, f);
        let (m1, k1) = (c.mu[1] * h, c.kappa1 * h);
        for i in 0..n {
            k_prev1[i] = y0[i] + m1 * f[i] + k1 * fa_at_y0[i];
        }
    } else {
        counters.fd(problem, y0, f);
        let m1 = c.mu[1] * h;
        for i in 0..n {
            k_prev1[i] = y0[i] + m1 * f[i];
        }
    }
    check_finite(k_prev1, 1)?;
    for j in 2..=c.s {
        counters.fd(problem, k_prev1, f);
        let (mh, nu) = (c.mu[j] * h, c.nu[j]);
        for i in 0..n {
            k_curr[i] = k_prev2[i] + nu * (k_prev1[i] - k_prev2[i]) + mh * f[i];
        }
        check_finite(k_curr, j as i64)?;
        std::mem::swap(k_prev2, k_prev1);
        std::mem::swap(k_prev1, k_curr);
    }
    y1.copy_from_slice(k_prev1);
    Ok(())
}

/// Second-order advection-aware step.
///
/// Builds the correction
/// `G = h F_A(y0 + h/2 F_A(y0 + w2/2 h F_D(y0)) + h/2 F_D(y0))
///    + h F_D(y0 + (w2-1)/2 h F_A(y0)) - h F_D(y0)`,
/// shifts `K_0 = y0 + w2/2 G`, `K_1 = K_0 + b_1 w2 h F_D(y0) + alpha G` and
/// runs the RKC-type recurrence on `F_D` alone. Without an advection-reaction
/// field `G` vanishes and the step is exactly RKC on `F_D`.
pub fn step_arkc(
    problem: &SplitOdeProblem,
    y0: &[f64],
    h: f64,
    c: &ArkcCoefficients,
    ws: &mut StepWorkspace,
    y1: &mut [f64],
) -> Result<()> {
    check_shapes(problem, y0, ws, y1, h)?;
    let primed = std::mem::replace(&mut ws.primed, false);
    let StepWorkspace {
        k_prev2,
        k_prev1,
        k_curr,
        k0,
        g,
        fd_at_y0,
        fa_at_y0,
        fd_at_k0,
        f,
        tmp,
        counters,
        ..
    } = ws;
    let n = y0.len();

    if !primed {
        counters.fd(problem, y0, fd_at_y0);
    }
    if !problem.has_advection_reaction() {
        g.iter_mut().for_each(|v| *v = 0.0);
        fa_at_y0.iter_mut().for_each(|v| *v = 0.0);
        rkc_stages(problem, y0, h, c, k_prev2, k_prev1, k_curr, fd_at_y0, f, tmp, counters, false)?;
        y1.copy_from_slice(k_prev1);
        return Ok(());
    }
    if !primed {
        counters.fa(problem, y0, fa_at_y0);
    }

    let w2 = c.omega2;
    let half_h = 0.5 * h;

    // inner advection argument: y0 + w2/2 h F_D(y0)
    for i in 0..n {
        tmp[i] = y0[i] + 0.5 * w2 * h * fd_at_y0[i];
    }
    counters.fa(problem, tmp, f);
    for i in 0..n {
        tmp[i] = y0[i] + half_h * f[i] + half_h * fd_at_y0[i];
    }
    counters.fa(problem, tmp, g);
    // g now holds F_A(...) of the first term
    for i in 0..n {
        tmp[i] = y0[i] + 0.5 * (w2 - 1.0) * h * fa_at_y0[i];
    }
    counters.fd(problem, tmp, f);
    for i in 0..n {
        g[i] = h * g[i] + h * f[i] - h * fd_at_y0[i];
    }
    check_finite(g, -1)?;

    let (half_w2, alpha, m1) = (0.5 * w2, c.alpha, c.b1 * w2 * h);
    for i in 0..n {
        k0[i] = y0[i] + half_w2 * g[i];
        k_prev1[i] = k0[i] + m1 * fd_at_y0[i] + alpha * g[i];
    }
    check_finite(k0, 0)?;
    check_finite(k_prev1, 1)?;
    k_prev2.copy_from_slice(k0);
    counters.fd(problem, k0, fd_at_k0);

    for j in 2..=c.s {
        counters.fd(problem, k_prev1, f);
        let (mh, nu, ka) = (c.mu[j] * h, c.nu[j], c.kappa[j]);
        let shift = 1.0 - c.a[j - 1];
        for i in 0..n {
            k_curr[i] = k0[i]
                + nu * (k_prev1[i] - k0[i])
                + ka * (k_prev2[i] - k0[i])
                + mh * (f[i] - fd_at_k0[i] + shift * fd_at_y0[i]);
        }
        check_finite(k_curr, j as i64)?;
        std::mem::swap(k_prev2, k_prev1);
        std::mem::swap(k_prev1, k_curr);
    }
    y1.copy_from_slice(k_prev1);
    Ok(())
}

/// The four one-step maps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Cheb1,
    Rkc,
    Ad1,
    Arkc,
}

impl Scheme {
    pub fn is_second_order(self) -> bool {
        matches!(self, Scheme::Rkc | Scheme::Arkc)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Scheme::Cheb1 => "cheb1",
            Scheme::Rkc => "rkc",
            Scheme::Ad1 => "ad1",
            Scheme::Arkc => "arkc",
        };
        f.write_str(s)
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cheb1" => Ok(Scheme::Cheb1),
            "rkc" => Ok(Scheme::Rkc),
            "ad1" => Ok(Scheme::Ad1),
            "arkc" => Ok(Scheme::Arkc),
            other => Err(Error::InvalidArgument(format!("unknown scheme '{other}'"))),
        }
    }
}

/// Coefficients for either family, so a fixed-step loop can hold one.
#[derive(Debug, Clone)]
pub enum SchemeCoefficients {
    First(Cheb1Coefficients),
    Second(ArkcCoefficients),
}

impl SchemeCoefficients {
    pub fn for_scheme(scheme: Scheme, s: usize, eta: f64) -> Result<Self> {
        if scheme.is_second_order() {
            Ok(Self::Second(arkc_coefficients(s, eta)?))
        } else {
            Ok(Self::First(cheb1_coefficients(s, eta)?))
        }
    }
}

/// Apply one step of `scheme`.
pub fn step(
    scheme: Scheme,
    problem: &SplitOdeProblem,
    y0: &[f64],
    h: f64,
    coeffs: &SchemeCoefficients,
    ws: &mut StepWorkspace,
    y1: &mut [f64],
) -> Result<()> {
    match (scheme, coeffs) {
        (Scheme::Cheb1, SchemeCoefficients::First(c)) => step_cheb1(problem, y0, h, c, ws, y1),
        (Scheme::Ad1, SchemeCoefficients::First(c)) => step_ad1(problem, y0, h, c, ws, y1),
        (Scheme::Rkc, SchemeCoefficients::Second(c)) => step_rkc(problem, y0, h, c, ws, y1),
        (Scheme::Arkc, SchemeCoefficients::Second(c)) => step_arkc(problem, y0, h, c, ws, y1),
        _ => Err(Error::InvalidArgument(format!("coefficient family does not match scheme {scheme}"))),
    }
}

/// Integrate with `n_steps` equal steps of the chosen scheme at fixed `(s, eta)`.
pub fn integrate_fixed(
    problem: &SplitOdeProblem,
    y0: &[f64],
    t_span: (f64, f64),
    n_steps: usize,
    scheme: Scheme,
    s: usize,
    eta: f64,
) -> Result<IntegrationReport> {
    if n_steps == 0 {
        return Err(Error::InvalidArgument("n_steps must be at least 1".into()));
    }
    let (t0, t1) = t_span;
    if !(t1 > t0) {
        return Err(Error::InvalidArgument(format!("empty time span [{t0}, {t1}]")));
    }
    let coeffs = SchemeCoefficients::for_scheme(scheme, s, eta)?;
    let h = (t1 - t0) / n_steps as f64;
    let mut ws = StepWorkspace::new(problem.dimension());
    let mut y = y0.to_vec();
    let mut next = vec![0.0; y.len()];
    for k in 0..n_steps {
        step(scheme, problem, &y, h, &coeffs, &mut ws, &mut next)
            .map_err(|e| Error::StepFailed { step: k, source: Box::new(e) })?;
        std::mem::swap(&mut y, &mut next);
    }
    Ok(IntegrationReport {
        steps_accepted: n_steps,
        steps_rejected: 0,
        fd_evals: ws.counters.fd_evals,
        fa_evals: ws.counters.fa_evals,
        s_max: s,
        final_time: t1,
        final_state: y,
        ..IntegrationReport::default()
    })
}
