//! Command line harness: benchmark runs, stability scans and table checks.
//!
//! Every subcommand is backed by a library function (`cmd_*`) returning a
//! serializable report, so the same runs are reachable from tests and from
//! the `arkc` binary.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::adaptive::{
    estimate_spectral_radius, integrate_adaptive, rho_ratio, select_stages, AdaptiveConfig, DampingTable,
    IntegrationReport, TraceEntry, Which,
};
use crate::coeffs::{arkc_coefficients, cheb1_coefficients, MAX_STAGES};
use crate::error::{Error, Result};
use crate::integrators::{integrate_fixed, step_arkc, Scheme, SplitOdeProblem, StepWorkspace};
use crate::problems::{linf_distance, reference_solution, write_profile_csv, BurgersReaction1D, LinearAdvectionDiffusion1D};
use crate::stability::{eval_r2, scan_region, verify_table_entry, Polynomial, RegionScheme};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID_ARGS: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_VERIFICATION: i32 = 3;

/// Damping used by the first-order schemes in fixed-step runs.
pub const FIRST_ORDER_ETA: f64 = 0.05;
/// Damping used by plain RKC in fixed-step runs.
pub const RKC_ETA: f64 = 0.15;
/// Tolerance of the high-order reference solves.
pub const REFERENCE_TOL: f64 = 1e-11;

pub const OUT_OF_SCOPE_NOTE: &str =
    "PRKC and PIROCK columns are out of scope; only the ARKC columns are reproduced";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemKind {
    /// Periodic linear advection-diffusion, `u(x,0) = sin(2 pi x)`.
    LinearAd,
    /// Burgers with `sin(u^2)` reaction, `u(x,0) = 1 + sin(2 pi x)`.
    Burgers,
    /// Identically zero right-hand side.
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "arkc", version, about = "Stabilized Runge-Kutta-Chebyshev integrators and analysis tools")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate one benchmark problem (adaptive unless --fixed-steps is given).
    Integrate(IntegrateArgs),
    /// Rasterize a stability region and report inscribed-ellipse metrics.
    Stability(StabilityArgs),
    /// Reproduce the linear advection-diffusion comparison table (ARKC columns).
    Table2(Table2Args),
    /// Fixed-step convergence study against a reference solution.
    Convergence(ConvergenceArgs),
    /// Accuracy versus cost over a list of tolerances.
    CostCurve(CostCurveArgs),
    /// Check every damping-table entry against the stability polynomial.
    VerifyTables(VerifyArgs),
    /// Compare one-step amplification with the stability polynomial at random points.
    CheckLemma(LemmaArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ProblemArgs {
    #[arg(long, value_enum, default_value = "linear-ad")]
    pub problem: ProblemKind,
    /// Advection speed of the linear problem.
    #[arg(long, default_value_t = 1.0)]
    pub a: f64,
    /// Number of grid cells (defaults: 150 linear, 100 Burgers).
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: OutputFormat,
}

#[derive(Debug, Clone, Args)]
pub struct IntegrateArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
    #[arg(long, value_enum, default_value = "arkc")]
    pub scheme: Scheme,
    #[arg(long)]
    pub fixed_steps: Option<usize>,
    /// Stage count for fixed-step runs (chosen from the spectral radii otherwise).
    #[arg(long)]
    pub stages: Option<usize>,
    /// Damping for fixed-step runs.
    #[arg(long)]
    pub eta: Option<f64>,
    /// Include the per-attempt controller trace in JSON output.
    #[arg(long)]
    pub trace: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct StabilityArgs {
    #[arg(long, value_enum, default_value = "arkc")]
    pub scheme: Scheme,
    #[arg(long, default_value_t = 20)]
    pub stages: usize,
    #[arg(long, default_value_t = 0.15)]
    pub eta: f64,
    #[arg(long, default_value_t = 800)]
    pub n_p: usize,
    #[arg(long, default_value_t = 400)]
    pub n_q: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct Table2Args {
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.5,1,2,5,10,12")]
    pub a: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "1e-2,1e-5")]
    pub tol: Vec<f64>,
    #[arg(long, default_value_t = 150)]
    pub n: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ConvergenceArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long, value_enum, default_value = "arkc")]
    pub scheme: Scheme,
    #[arg(long, default_value_t = 5)]
    pub levels: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CostCurveArgs {
    #[arg(long, value_enum, default_value = "burgers")]
    pub problem: ProblemKind,
    #[arg(long, default_value_t = 1.0)]
    pub a: f64,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, value_delimiter = ',', default_value = "1e-1,1e-2,1e-3,1e-4,1e-5,1e-6")]
    pub tol: Vec<f64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    /// Halve the damping of one entry, given as `RATIO:S_MAX` (e.g. `0.25:30`).
    #[arg(long)]
    pub tamper: Option<String>,
    /// Verify a damping table read from a JSON file instead of the built-in one.
    #[arg(long)]
    pub table: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct LemmaArgs {
    #[arg(long, default_value_t = 500)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("tolerance must lie in (0, 1), got {tol}")))
    }
}

/// A benchmark problem with its initial state and a way to get the exact
/// or reference solution at `t_end`.
pub struct ProblemSetup {
    pub kind: ProblemKind,
    pub problem: SplitOdeProblem,
    pub y0: Vec<f64>,
    pub grid: Vec<f64>,
    pub t_end: f64,
    linear: Option<LinearAdvectionDiffusion1D>,
}

impl ProblemSetup {
    pub fn new(kind: ProblemKind, a: f64, n: Option<usize>) -> Result<Self> {
        match kind {
            ProblemKind::LinearAd | ProblemKind::Zero => {
                if !a.is_finite() {
                    return Err(Error::InvalidArgument(format!("advection speed must be finite, got {a}")));
                }
                let lin = LinearAdvectionDiffusion1D::new(n.unwrap_or(150), a)?;
                let problem = if kind == ProblemKind::Zero {
                    SplitOdeProblem::new(lin.n_cells, |_, out| out.iter_mut().for_each(|v| *v = 0.0))
                        .with_diffusion_radius(|_| 0.0)
                        .linear(true)
                } else {
                    lin.build()
                };
                Ok(Self {
                    kind,
                    problem,
                    y0: lin.initial(),
                    grid: lin.grid(),
                    t_end: lin.t_end,
                    linear: (kind == ProblemKind::LinearAd).then_some(lin),
                })
            }
            ProblemKind::Burgers => {
                let b = BurgersReaction1D::new(n.unwrap_or(100))?;
                Ok(Self { kind, problem: b.build(), y0: b.initial(), grid: b.grid(), t_end: b.t_end, linear: None })
            }
        }
    }

    /// Solution at `t_end`: Fourier oracle for the linear problem, a tight
    /// Dormand-Prince solve for Burgers, `y0` for the zero field.
    pub fn reference(&self) -> Result<Vec<f64>> {
        match self.kind {
            ProblemKind::LinearAd => Ok(self.linear.as_ref().expect("linear setup").fourier_solution(&self.y0, self.t_end)),
            ProblemKind::Burgers => reference_solution(&self.problem, &self.y0, self.t_end, REFERENCE_TOL),
            ProblemKind::Zero => Ok(self.y0.clone()),
        }
    }
}

/// Stage count and damping for a fixed step `h`.
///
/// The split second-order scheme sizes stages by `rho_D` with damping from
/// the table band of `rho_A / sqrt(rho_D)`; plain RKC uses `rho_D + rho_A`
/// with damping 0.15; the first-order schemes use damping 0.05 and size
/// stages by `rho_D` (split) or `rho_D + rho_A` (whole field).
pub fn fixed_step_parameters(scheme: Scheme, h: f64, rho_d: f64, rho_a: f64) -> Result<(usize, f64)> {
    match scheme {
        Scheme::Arkc => {
            let table = DampingTable::standard();
            select_stages(h, rho_d, table.band(rho_ratio(rho_d, rho_a)))
        }
        Scheme::Rkc => {
            let required = h * (rho_d + rho_a);
            (2..=MAX_STAGES)
                .find(|&s| crate::adaptive::real_stability_length(s, RKC_ETA) > required)
                .map(|s| (s, RKC_ETA))
                .ok_or(Error::StageCapExceeded(MAX_STAGES + 1))
        }
        Scheme::Cheb1 | Scheme::Ad1 => {
            let rho = if scheme == Scheme::Ad1 { rho_d } else { rho_d + rho_a };
            let required = h * rho;
            for s in 1..=MAX_STAGES {
                if cheb1_coefficients(s, FIRST_ORDER_ETA)?.real_stability_length() > required {
                    return Ok((s, FIRST_ORDER_ETA));
                }
            }
            Err(Error::StageCapExceeded(MAX_STAGES + 1))
        }
    }
}

fn radii(setup: &ProblemSetup) -> (f64, f64) {
    let d = estimate_spectral_radius(&setup.problem, &setup.y0, Which::Diffusion, None);
    let a = estimate_spectral_radius(&setup.problem, &setup.y0, Which::Advection, None);
    (d.rho, a.rho)
}

// ---------------------------------------------------------------- table2

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table2Row {
    pub a: f64,
    pub tol: f64,
    pub steps: usize,
    pub rejected: usize,
    pub fd_evals: u64,
    pub fa_evals: u64,
    pub s_max: usize,
    pub linf_error: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip)]
    pub trace: Vec<TraceEntry>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Table2Report {
    pub note: String,
    pub rows: Vec<Table2Row>,
}

pub const TABLE2_HEADER: [&str; 7] = ["a", "tol", "steps", "fd_evals", "fa_evals", "s_max", "linf_error"];

/// One adaptive run of the linear advection-diffusion problem per `(a, tol)`,
/// rows in input order (a-major). Failures are reported per row.
pub fn cmd_table2(a_values: &[f64], tol_values: &[f64], n: usize) -> Result<Table2Report> {
    for &tol in tol_values {
        check_tol(tol)?;
    }
    let cases: Vec<(f64, f64)> = a_values.iter().flat_map(|&a| tol_values.iter().map(move |&t| (a, t))).collect();
    let rows = cases
        .par_iter()
        .map(|&(a, tol)| {
            let run = || -> Result<(IntegrationReport, f64)> {
                let prob = LinearAdvectionDiffusion1D::new(n, a)?;
                let sys = prob.build();
                let y0 = prob.initial();
                let mut cfg = AdaptiveConfig::with_tolerance(tol, (0.0, prob.t_end));
                cfg.record_trace = true;
                let rep = integrate_adaptive(&sys, &y0, &cfg)?;
                let err = linf_distance(&rep.final_state, &prob.fourier_solution(&y0, prob.t_end));
                Ok((rep, err))
            };
            match run() {
                Ok((rep, err)) => Table2Row {
                    a,
                    tol,
                    steps: rep.steps_accepted,
                    rejected: rep.steps_rejected,
                    fd_evals: rep.fd_evals,
                    fa_evals: rep.fa_evals,
                    s_max: rep.s_max,
                    linf_error: err,
                    error: rep.incomplete.then(|| "max_steps reached".to_string()),
                    trace: rep.trace,
                },
                Err(e) => Table2Row {
                    a,
                    tol,
                    steps: 0,
                    rejected: 0,
                    fd_evals: 0,
                    fa_evals: 0,
                    s_max: 0,
                    linf_error: f64::NAN,
                    error: Some(e.to_string()),
                    trace: Vec::new(),
                },
            }
        })
        .collect();
    Ok(Table2Report { note: OUT_OF_SCOPE_NOTE.to_string(), rows })
}

pub fn write_table2_csv<W: Write>(w: W, report: &Table2Report) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(TABLE2_HEADER)?;
    for r in &report.rows {
        wr.write_record([
            r.a.to_string(),
            r.tol.to_string(),
            r.steps.to_string(),
            r.fd_evals.to_string(),
            r.fa_evals.to_string(),
            r.s_max.to_string(),
            r.linf_error.to_string(),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

// ----------------------------------------------------------- convergence

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum Slope {
    /// Every level reproduced the reference exactly.
    Exact,
    Fitted(f64),
}

impl std::fmt::Display for Slope {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Slope::Exact => write!(f, "exact"),
            Slope::Fitted(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceLevel {
    pub n_steps: usize,
    pub h: f64,
    pub linf_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub problem: ProblemKind,
    pub scheme: Scheme,
    pub s: usize,
    pub eta: f64,
    pub levels: Vec<ConvergenceLevel>,
    pub slope: Slope,
}

/// Least-squares slope of `log(err)` against `log(h)`; zero errors are
/// dropped, and an all-zero series is exact.
pub fn fit_slope(levels: &[ConvergenceLevel]) -> Slope {
    let pts: Vec<(f64, f64)> =
        levels.iter().filter(|l| l.linf_error > 0.0).map(|l| (l.h.ln(), l.linf_error.ln())).collect();
    if pts.len() < 2 {
        return Slope::Exact;
    }
    let m = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / m, pts.iter().map(|p| p.1).sum::<f64>() / m);
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Slope::Fitted(sxy / sxx)
}

const MAX_DOUBLINGS: u32 = 20;

/// Fixed-step errors over `levels` halvings of `h`, starting from the
/// coarsest `h = t_end / 2^k` whose run stays finite with error below 10%
/// of the reference's size. Stage count and damping are chosen once, at the
/// coarsest level, and kept for all levels.
pub fn cmd_convergence(setup: &ProblemSetup, scheme: Scheme, levels: usize) -> Result<ConvergenceReport> {
    if levels < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 levels, got {levels}")));
    }
    let reference = setup.reference()?;
    let scale = reference.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let (rho_d, rho_a) = radii(setup);
    let span = (0.0, setup.t_end);

    let mut start = None;
    for k in 0..=MAX_DOUBLINGS {
        let n = 1usize << k;
        let h = setup.t_end / n as f64;
        let Ok((s, eta)) = fixed_step_parameters(scheme, h, rho_d, rho_a) else { continue };
        if let Ok(rep) = integrate_fixed(&setup.problem, &setup.y0, span, n, scheme, s, eta) {
            let err = linf_distance(&rep.final_state, &reference);
            if err.is_finite() && err <= 0.1 * scale.max(f64::MIN_POSITIVE) || (scale == 0.0 && err == 0.0) {
                start = Some((n, s, eta, err));
                break;
            }
        }
    }
    let (n0, s, eta, e0) = start.ok_or_else(|| Error::InvalidArgument("no stable step size found".into()))?;
    let mut out = vec![ConvergenceLevel { n_steps: n0, h: setup.t_end / n0 as f64, linf_error: e0 }];
    for k in 1..levels {
        let n = n0 << k;
        let rep = integrate_fixed(&setup.problem, &setup.y0, span, n, scheme, s, eta)?;
        out.push(ConvergenceLevel { n_steps: n, h: setup.t_end / n as f64, linf_error: linf_distance(&rep.final_state, &reference) });
    }
    let slope = fit_slope(&out);
    Ok(ConvergenceReport { problem: setup.kind, scheme, s, eta, levels: out, slope })
}

// ------------------------------------------------------------ cost curve

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostRow {
    pub tol: f64,
    pub steps: usize,
    pub rejected: usize,
    pub fd_evals: u64,
    pub fa_evals: u64,
    pub s_max: usize,
    pub linf_error: f64,
}

/// Adaptive runs over `tols` (parallel, output in input order).
pub fn cmd_cost_curve(setup: &ProblemSetup, tols: &[f64]) -> Result<Vec<CostRow>> {
    for &tol in tols {
        check_tol(tol)?;
    }
    let reference = setup.reference()?;
    tols.par_iter()
        .map(|&tol| {
            let cfg = AdaptiveConfig::with_tolerance(tol, (0.0, setup.t_end));
            let rep = integrate_adaptive(&setup.problem, &setup.y0, &cfg)?;
            Ok(CostRow {
                tol,
                steps: rep.steps_accepted,
                rejected: rep.steps_rejected,
                fd_evals: rep.fd_evals,
                fa_evals: rep.fa_evals,
                s_max: rep.s_max,
                linf_error: linf_distance(&rep.final_state, &reference),
            })
        })
        .collect()
}

// ---------------------------------------------------------- verification

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableCheck {
    pub band: String,
    pub ratio: f64,
    pub s: usize,
    pub eta: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub entries: Vec<TableCheck>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

impl VerifyReport {
    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }
}

/// Parse `RATIO:S_MAX`.
pub fn parse_tamper(spec: &str) -> Result<(f64, usize)> {
    let bad = || Error::InvalidArgument(format!("expected RATIO:S_MAX, got {spec:?}"));
    let (r, s) = spec.split_once(':').ok_or_else(bad)?;
    Ok((r.trim().parse().map_err(|_| bad())?, s.trim().parse().map_err(|_| bad())?))
}

/// Halve the damping of the entry with upper edge `s_max` in the band
/// nearest to `ratio`.
pub fn tamper_table(table: &mut DampingTable, ratio: f64, s_max: usize) -> Result<()> {
    if table.bands.is_empty() {
        return Err(Error::InvalidArgument("cannot tamper with an empty table".into()));
    }
    let i = table.band_index(ratio);
    let entry = table.bands[i]
        .stages
        .iter_mut()
        .find(|b| b.s_max == s_max)
        .ok_or_else(|| Error::InvalidArgument(format!("no entry with s_max = {s_max} in band {i}")))?;
    entry.eta *= 0.5;
    Ok(())
}

/// Check each entry at its stage upper edge along `q = c sqrt(-p)`, `c` the
/// band's nominal ratio.
pub fn cmd_verify_tables(table: &DampingTable) -> Result<VerifyReport> {
    let jobs: Vec<(String, f64, usize, f64)> = table
        .bands
        .iter()
        .flat_map(|b| b.stages.iter().map(move |st| (b.label.clone(), b.nominal_ratio, st.s_max, st.eta)))
        .collect();
    let warning = jobs.is_empty().then(|| "damping table is empty; nothing to verify".to_string());
    let entries = jobs
        .into_par_iter()
        .map(|(band, ratio, s, eta)| Ok(TableCheck { pass: verify_table_entry(ratio, s, eta)?, band, ratio, s, eta }))
        .collect::<Result<Vec<_>>>()?;
    Ok(VerifyReport { entries, warning })
}

// ----------------------------------------------------------------- lemma

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaReport {
    pub samples: usize,
    pub seed: u64,
    pub max_abs_diff: f64,
}

/// Largest `|y1 - R2(p, q) y0|` for one ARKC step on `y' = p y + i q y`
/// (unit step, embedded as a real 2-vector) at random `(s, eta, p, q)` with
/// `(p, q)` in the stable band.
pub fn cmd_check_lemma(samples: usize, seed: u64) -> Result<LemmaReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let s = rng.random_range(2..=100usize);
        let eta = rng.random_range(0.15..=10.0);
        let c = arkc_coefficients(s, eta)?;
        let poly = Polynomial::new(RegionScheme::Arkc, s, eta)?;
        let p = -rng.random_range(0.0..=1.0) * c.real_stability_length();
        let q_band = poly.stable_half_height(p, 3.0 * s as f64);
        let q = rng.random_range(-1.0..=1.0) * q_band;
        let problem = SplitOdeProblem::new(2, move |y, o| {
            o[0] = p * y[0];
            o[1] = p * y[1];
        })
        .with_advection_reaction(move |y, o| {
            o[0] = -q * y[1];
            o[1] = q * y[0];
        });
        let mut ws = StepWorkspace::new(2);
        let mut y1 = [0.0; 2];
        step_arkc(&problem, &[1.0, 0.0], 1.0, &c, &mut ws, &mut y1)?;
        let r = eval_r2(p, q, s, eta)?;
        worst = worst.max((y1[0] - r.re).hypot(y1[1] - r.im));
    }
    Ok(LemmaReport { samples, seed, max_abs_diff: worst })
}

// -------------------------------------------------------------- dispatch

fn open_out(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(io::BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn write_json<T: Serialize>(out: &Option<PathBuf>, value: &T) -> Result<()> {
    let mut w = open_out(out)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn write_rows<T: Serialize>(out: &Option<PathBuf>, rows: &[T]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(open_out(out)?);
    for r in rows {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
struct IntegrateSummary<'a> {
    problem: ProblemKind,
    scheme: Scheme,
    fixed_stages: Option<(usize, f64)>,
    report: &'a IntegrationReport,
}

fn run_integrate(args: &IntegrateArgs) -> Result<i32> {
    let setup = ProblemSetup::new(args.problem.problem, args.problem.a, args.problem.n)?;
    let span = (0.0, setup.t_end);
    let (mut report, fixed) = match args.fixed_steps {
        Some(n) => {
            if n == 0 {
                return Err(Error::InvalidArgument("--fixed-steps must be at least 1".into()));
            }
            let (rho_d, rho_a) = radii(&setup);
            let (auto_s, auto_eta) = match (args.stages, args.eta) {
                (Some(s), Some(e)) => (s, e),
                _ => fixed_step_parameters(args.scheme, setup.t_end / n as f64, rho_d, rho_a)?,
            };
            let (s, eta) = (args.stages.unwrap_or(auto_s), args.eta.unwrap_or(auto_eta));
            (integrate_fixed(&setup.problem, &setup.y0, span, n, args.scheme, s, eta)?, Some((s, eta)))
        }
        None => {
            check_tol(args.tol)?;
            let mut cfg = AdaptiveConfig::with_tolerance(args.tol, span);
            cfg.scheme = args.scheme;
            cfg.record_trace = args.trace;
            (integrate_adaptive(&setup.problem, &setup.y0, &cfg)?, None)
        }
    };
    report.final_error_vs_reference = Some(linf_distance(&report.final_state, &setup.reference()?));
    match args.output.format {
        OutputFormat::Csv => {
            write_profile_csv(open_out(&args.output.out)?, &setup.grid, &report.final_state)?;
            if args.output.out.is_some() {
                println!(
                    "steps={} rejected={} fd_evals={} fa_evals={} s_max={} linf_error={}",
                    report.steps_accepted,
                    report.steps_rejected,
                    report.fd_evals,
                    report.fa_evals,
                    report.s_max,
                    report.final_error_vs_reference.unwrap_or(f64::NAN)
                );
            }
        }
        OutputFormat::Json => write_json(
            &args.output.out,
            &IntegrateSummary { problem: setup.kind, scheme: args.scheme, fixed_stages: fixed, report: &report },
        )?,
    }
    if report.incomplete {
        eprintln!("warning: max_steps reached before t_end");
        return Ok(EXIT_NUMERICAL);
    }
    Ok(EXIT_OK)
}

fn run_stability(args: &StabilityArgs) -> Result<i32> {
    let scheme = if args.scheme.is_second_order() { RegionScheme::Arkc } else { RegionScheme::Ad1 };
    let poly = Polynomial::new(scheme, args.stages, args.eta)?;
    let mut grid = crate::stability::GridSpec::default_for(&poly, args.stages);
    grid.n_p = args.n_p;
    grid.n_q = args.n_q;
    let scan = scan_region(scheme, args.stages, args.eta, Some(grid))?;
    if let Some(w) = &scan.warning {
        eprintln!("warning: {w}");
    }
    match args.output.format {
        OutputFormat::Json => write_json(&args.output.out, &scan.metrics())?,
        OutputFormat::Csv => {
            scan.write_csv(open_out(&args.output.out)?)?;
            if args.output.out.is_some() {
                println!("{}", serde_json::to_string(&scan.metrics())?);
            }
        }
    }
    Ok(EXIT_OK)
}

fn run_table2(args: &Table2Args) -> Result<i32> {
    let report = cmd_table2(&args.a, &args.tol, args.n)?;
    eprintln!("note: {}", report.note);
    match args.output.format {
        OutputFormat::Csv => write_table2_csv(open_out(&args.output.out)?, &report)?,
        OutputFormat::Json => write_json(&args.output.out, &report)?,
    }
    let failed: Vec<_> = report.rows.iter().filter_map(|r| r.error.as_ref().map(|e| (r.a, r.tol, e))).collect();
    for (a, tol, e) in &failed {
        eprintln!("row a={a} tol={tol} failed: {e}");
    }
    Ok(if failed.is_empty() { EXIT_OK } else { EXIT_NUMERICAL })
}

fn run_convergence(args: &ConvergenceArgs) -> Result<i32> {
    let setup = ProblemSetup::new(args.problem.problem, args.problem.a, args.problem.n)?;
    let report = cmd_convergence(&setup, args.scheme, args.levels)?;
    match args.output.format {
        OutputFormat::Csv => {
            write_rows(&args.output.out, &report.levels)?;
            eprintln!("s={} eta={} slope={}", report.s, report.eta, report.slope);
        }
        OutputFormat::Json => write_json(&args.output.out, &report)?,
    }
    Ok(EXIT_OK)
}

fn run_cost_curve(args: &CostCurveArgs) -> Result<i32> {
    let setup = ProblemSetup::new(args.problem, args.a, args.n)?;
    let rows = cmd_cost_curve(&setup, &args.tol)?;
    match args.output.format {
        OutputFormat::Csv => write_rows(&args.output.out, &rows)?,
        OutputFormat::Json => write_json(&args.output.out, &rows)?,
    }
    Ok(EXIT_OK)
}

fn run_verify(args: &VerifyArgs) -> Result<i32> {
    let mut table = match &args.table {
        Some(p) => serde_json::from_reader(io::BufReader::new(File::open(p)?))?,
        None => DampingTable::standard(),
    };
    if let Some(spec) = &args.tamper {
        let (ratio, s) = parse_tamper(spec)?;
        tamper_table(&mut table, ratio, s)?;
    }
    let report = cmd_verify_tables(&table)?;
    if let Some(w) = &report.warning {
        eprintln!("warning: {w}");
    }
    match args.output.format {
        OutputFormat::Csv => write_rows(&args.output.out, &report.entries)?,
        OutputFormat::Json => write_json(&args.output.out, &report)?,
    }
    for e in report.entries.iter().filter(|e| !e.pass) {
        eprintln!("FAIL band={} s={} eta={}", e.band, e.s, e.eta);
    }
    Ok(if report.all_pass() { EXIT_OK } else { EXIT_VERIFICATION })
}

fn run_lemma(args: &LemmaArgs) -> Result<i32> {
    let report = cmd_check_lemma(args.samples, args.seed)?;
    match args.output.format {
        OutputFormat::Csv => write_rows(&args.output.out, std::slice::from_ref(&report))?,
        OutputFormat::Json => write_json(&args.output.out, &report)?,
    }
    Ok(if report.max_abs_diff <= 1e-11 { EXIT_OK } else { EXIT_VERIFICATION })
}

pub fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::InvalidArgument(_) => EXIT_INVALID_ARGS,
        _ => EXIT_NUMERICAL,
    }
}

pub fn execute(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Integrate(a) => run_integrate(a),
        Command::Stability(a) => run_stability(a),
        Command::Table2(a) => run_table2(a),
        Command::Convergence(a) => run_convergence(a),
        Command::CostCurve(a) => run_cost_curve(a),
        Command::VerifyTables(a) => run_verify(a),
        Command::CheckLemma(a) => run_lemma(a),
    }
}

/// Parse `args` (including the program name) and run; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID_ARGS } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_fit() {
        let lv = |h: f64, e: f64| ConvergenceLevel { n_steps: 1, h, linf_error: e };
        let levels: Vec<_> = (0..5).map(|k| {
            let h = 0.1 / 2f64.powi(k);
            lv(h, 3.0 * h * h)
        }).collect();
        match fit_slope(&levels) {
            Slope::Fitted(v) => assert!((v - 2.0).abs() < 1e-12),
            Slope::Exact => panic!(),
        }
        assert_eq!(fit_slope(&[lv(0.1, 0.0), lv(0.05, 0.0)]), Slope::Exact);
        assert_eq!(Slope::Exact.to_string(), "exact");
    }

    #[test]
    fn zero_problem_converges_exactly() {
        let setup = ProblemSetup::new(ProblemKind::Zero, 1.0, Some(32)).unwrap();
        let rep = cmd_convergence(&setup, Scheme::Arkc, 5).unwrap();
        assert_eq!(rep.slope, Slope::Exact);
        assert!(rep.levels.iter().all(|l| l.linf_error == 0.0));
    }

    #[test]
    fn first_order_convergence_on_linear_problem() {
        let setup = ProblemSetup::new(ProblemKind::LinearAd, 1.0, Some(150)).unwrap();
        let rep = cmd_convergence(&setup, Scheme::Ad1, 5).unwrap();
        match rep.slope {
            Slope::Fitted(v) => assert!((0.85..=1.15).contains(&v), "slope {v}: {:?}", rep.levels),
            Slope::Exact => panic!("unexpected exact"),
        }
    }

    #[test]
    fn table2_degenerate_pure_diffusion() {
        let rep = cmd_table2(&[0.0], &[1e-3], 150).unwrap();
        let row = &rep.rows[0];
        assert!(row.error.is_none());
        assert_eq!(row.fa_evals, 0);
        assert!(row.steps > 0);
    }

    #[test]
    fn table2_rows_in_input_order() {
        let rep = cmd_table2(&[0.5, 0.1], &[1e-2, 1e-3], 60).unwrap();
        let keys: Vec<_> = rep.rows.iter().map(|r| (r.a, r.tol)).collect();
        assert_eq!(keys, vec![(0.5, 1e-2), (0.5, 1e-3), (0.1, 1e-2), (0.1, 1e-3)]);
        let mut buf = Vec::new();
        write_table2_csv(&mut buf, &rep).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("a,tol,steps,fd_evals,fa_evals,s_max,linf_error\n"));
        assert_eq!(text.lines().count(), 5);
        assert!(cmd_table2(&[1.0], &[1.5], 60).is_err());
    }

    #[test]
    fn tamper_and_empty_table() {
        let mut t = DampingTable::standard();
        tamper_table(&mut t, 0.25, 30).unwrap();
        assert_eq!(t.band(0.25).eta(30).unwrap(), 0.1);
        assert!(tamper_table(&mut t, 0.25, 31).is_err());
        assert_eq!(parse_tamper("0.25:30").unwrap(), (0.25, 30));
        assert!(parse_tamper("x").is_err());
        let empty = DampingTable { bands: vec![], s_cap: 500 };
        let rep = cmd_verify_tables(&empty).unwrap();
        assert!(rep.all_pass() && rep.entries.is_empty() && rep.warning.is_some());
    }

    #[test]
    fn fixed_parameters() {
        assert_eq!(fixed_step_parameters(Scheme::Arkc, 1.0, 100.0, 0.5).unwrap(), (13, 0.15));
        let (s, eta) = fixed_step_parameters(Scheme::Ad1, 0.01, 1e4, 10.0).unwrap();
        assert_eq!(eta, FIRST_ORDER_ETA);
        assert!(cheb1_coefficients(s, eta).unwrap().real_stability_length() > 100.0);
        assert!(s == 1 || cheb1_coefficients(s - 1, eta).unwrap().real_stability_length() <= 100.0);
        assert!(fixed_step_parameters(Scheme::Rkc, 1.0, 1e9, 0.0).is_err());
    }

    #[test]
    fn lemma_driver() {
        let rep = cmd_check_lemma(50, 7).unwrap();
        assert!(rep.max_abs_diff <= 1e-11, "{}", rep.max_abs_diff);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(run(["arkc", "--help"]), EXIT_OK);
        assert_eq!(run(["arkc", "bogus"]), EXIT_INVALID_ARGS);
        assert_eq!(run(["arkc", "table2", "--tol", "2"]), EXIT_INVALID_ARGS);
        assert_eq!(exit_code_for(&Error::Divergence { stage: 3 }), EXIT_NUMERICAL);
    }
}
