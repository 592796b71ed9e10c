//! Stability polynomials on the `(p, q)` plane of the split test equation
//! `y' = lambda y + i mu y`, with `p = h lambda` and `q = h mu`.
//!
//! `R1` belongs to the first-order advection-diffusion scheme and `R2` to
//! the second-order advection-aware scheme. Scans rasterize `|R|` and
//! measure the largest inscribed ellipse anchored at the origin.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chebpoly::{cheb_t, cheb_u};
use crate::coeffs::{arkc_coefficients, cheb1_coefficients, ArkcCoefficients, Cheb1Coefficients};
use crate::error::{Error, Result};

/// Complex amplification factor `R(p, q)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Amplification {
    pub re: f64,
    pub im: f64,
}

impl Amplification {
    pub fn modulus(&self) -> f64 {
        self.re.hypot(self.im)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityPoint {
    pub p: f64,
    pub q: f64,
    pub modulus: f64,
}

/// Which stability polynomial to analyse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum RegionScheme {
    Ad1,
    Arkc,
}

/// `R1(p,q) = A(p) + i B(p) q` with precomputed coefficients.
pub fn r1_with(c: &Cheb1Coefficients, p: f64, q: f64) -> Amplification {
    let s = c.s;
    let x = c.omega0 + c.omega1 * p;
    let a = cheb_t(s, x) / cheb_t(s, c.omega0);
    let b = cheb_u(s - 1, x) / cheb_u(s - 1, c.omega0) * (1.0 + 0.5 * c.omega1 * p);
    Amplification { re: a, im: b * q }
}

/// `R2(p,q) = A2(p) + B2(p) (i q - q^2/2)` with precomputed coefficients.
pub fn r2_with(c: &ArkcCoefficients, p: f64, q: f64) -> Amplification {
    let s = c.s;
    let w2 = c.omega2;
    let x = c.omega0 + w2 * p;
    let a = c.a[s] + c.b[s] * cheb_t(s, x);
    let b = (0.5 * w2 + (1.0 - 0.5 * w2) * cheb_u(s - 1, x) / cheb_u(s - 1, c.omega0)) * (1.0 + 0.5 * w2 * p);
    Amplification { re: a - 0.5 * b * q * q, im: b * q }
}

pub fn eval_r1(p: f64, q: f64, s: usize, eta: f64) -> Result<Amplification> {
    Ok(r1_with(&cheb1_coefficients(s, eta)?, p, q))
}

pub fn eval_r2(p: f64, q: f64, s: usize, eta: f64) -> Result<Amplification> {
    Ok(r2_with(&arkc_coefficients(s, eta)?, p, q))
}

/// Either polynomial behind one evaluation interface.
#[derive(Debug, Clone)]
pub enum Polynomial {
    R1(Cheb1Coefficients),
    R2(ArkcCoefficients),
}

impl Polynomial {
    pub fn new(scheme: RegionScheme, s: usize, eta: f64) -> Result<Self> {
        match scheme {
            RegionScheme::Ad1 => Ok(Self::R1(cheb1_coefficients(s, eta)?)),
            RegionScheme::Arkc => Ok(Self::R2(arkc_coefficients(s, eta)?)),
        }
    }

    pub fn eval(&self, p: f64, q: f64) -> Amplification {
        match self {
            Self::R1(c) => r1_with(c, p, q),
            Self::R2(c) => r2_with(c, p, q),
        }
    }

    pub fn modulus(&self, p: f64, q: f64) -> f64 {
        self.eval(p, q).modulus()
    }

    /// Length `L` of the real stability interval `[-L, 0]`.
    pub fn real_length(&self) -> f64 {
        match self {
            Self::R1(c) => c.real_stability_length(),
            Self::R2(c) => c.real_stability_length(),
        }
    }

    /// Largest `q` such that `[0, q]` at fixed `p` is stable, searched up to `q_cap`.
    pub fn stable_half_height(&self, p: f64, q_cap: f64) -> f64 {
        let stable = |q: f64| self.modulus(p, q) <= 1.0 + 1e-12;
        if !stable(0.0) {
            return 0.0;
        }
        let n = 400;
        let dq = q_cap / n as f64;
        let mut lo = 0.0;
        for k in 1..=n {
            let q = k as f64 * dq;
            if !stable(q) {
                let mut hi = q;
                for _ in 0..50 {
                    let mid = 0.5 * (lo + hi);
                    if stable(mid) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                return lo;
            }
            lo = q;
        }
        q_cap
    }
}

/// Rectangle and resolution of a raster scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub p_min: f64,
    pub p_max: f64,
    pub q_min: f64,
    pub q_max: f64,
    pub n_p: usize,
    pub n_q: usize,
}

impl GridSpec {
    /// 800 x 400 over `p in [-0.7 s^2, 0]` (extended to cover the whole real
    /// interval when it is longer) and `q in [-s, s]`.
    pub fn default_for(poly: &Polynomial, s: usize) -> Self {
        let s2 = (s * s) as f64;
        Self {
            p_min: -(0.7 * s2).max(1.02 * poly.real_length()),
            p_max: 0.0,
            q_min: -(s as f64),
            q_max: s as f64,
            n_p: 800,
            n_q: 400,
        }
    }
}

/// Raster of `|R|` plus inscribed-ellipse metrics.
#[derive(Debug, Clone, Serialize)]
pub struct StabilityScan {
    pub scheme: RegionScheme,
    pub s: usize,
    pub eta: f64,
    pub grid_spec: GridSpec,
    /// `grid[iq][ip]`, rows ordered by increasing `q`.
    #[serde(skip)]
    pub grid: Vec<Vec<f64>>,
    /// Extent of the ellipse along the negative `p` axis.
    pub d_s: f64,
    /// Half height of the ellipse in the `q` direction.
    pub a_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

/// JSON metrics record of a scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanMetrics {
    pub scheme: RegionScheme,
    pub s: usize,
    pub eta: f64,
    pub d_s: f64,
    pub a_s: f64,
}

impl StabilityScan {
    pub fn metrics(&self) -> ScanMetrics {
        ScanMetrics { scheme: self.scheme, s: self.s, eta: self.eta, d_s: self.d_s, a_s: self.a_s }
    }

    pub fn p_at(&self, ip: usize) -> f64 {
        lerp(self.grid_spec.p_min, self.grid_spec.p_max, ip, self.grid_spec.n_p)
    }

    pub fn q_at(&self, iq: usize) -> f64 {
        lerp(self.grid_spec.q_min, self.grid_spec.q_max, iq, self.grid_spec.n_q)
    }

    pub fn points(&self) -> impl Iterator<Item = StabilityPoint> + '_ {
        self.grid.iter().enumerate().flat_map(move |(iq, row)| {
            row.iter().enumerate().map(move |(ip, &m)| StabilityPoint { p: self.p_at(ip), q: self.q_at(iq), modulus: m })
        })
    }

    /// CSV with header `p,q,modulus`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["p", "q", "modulus"])?;
        for pt in self.points() {
            wr.write_record([pt.p.to_string(), pt.q.to_string(), pt.modulus.to_string()])?;
        }
        wr.flush()?;
        Ok(())
    }
}

fn lerp(lo: f64, hi: f64, i: usize, n: usize) -> f64 {
    if n <= 1 {
        lo
    } else {
        lo + (hi - lo) * i as f64 / (n - 1) as f64
    }
}

const ELLIPSE_SAMPLES: usize = 2000;
const INTERIOR_FRACTIONS: [f64; 4] = [0.25, 0.5, 0.75, 1.0];

/// Points of the ellipse spanning `p in [-d, 0]` with half height `a`
/// (boundary plus interior chords). Points inside the O(1) neighbourhood of
/// the origin, where every second-order polynomial leaves the unit disc for
/// purely imaginary arguments, are skipped: this lobe has real extent
/// `min(2, d/10)` and does not scale with `s`.
fn ellipse_fits(poly: &Polynomial, d: f64, a: f64) -> bool {
    let origin_lobe = 2.0f64.min(0.1 * d);
    (1..ELLIPSE_SAMPLES).all(|k| {
        let theta = std::f64::consts::PI * k as f64 / ELLIPSE_SAMPLES as f64;
        let p = -0.5 * d * (1.0 - theta.cos());
        if -p < origin_lobe {
            return true;
        }
        let q_edge = a * theta.sin();
        INTERIOR_FRACTIONS.iter().all(|f| poly.modulus(p, f * q_edge) <= 1.0 + 1e-12)
    })
}

fn max_half_height(poly: &Polynomial, d: f64, q_cap: f64) -> f64 {
    if !ellipse_fits(poly, d, 0.0) {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0, q_cap);
    if ellipse_fits(poly, d, hi) {
        return hi;
    }
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if ellipse_fits(poly, d, mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Largest-area axis-aligned ellipse through the origin inside the region:
/// returns `(d, a)` with the ellipse spanning `p in [-d, 0]`, `|q| <= a`.
pub fn inscribed_ellipse(poly: &Polynomial, s: usize) -> (f64, f64) {
    let length = poly.real_length();
    let q_cap = 3.0 * s as f64;
    let candidates = 24;
    let mut best = (0.0, 0.0, 0.0);
    let mut best_k = 0;
    for k in 1..=candidates {
        let d = length * k as f64 / candidates as f64;
        let a = max_half_height(poly, d, q_cap);
        if d * a > best.0 {
            best = (d * a, d, a);
            best_k = k;
        }
    }
    // refine around the best candidate by golden-section on the area
    if best.0 > 0.0 {
        let step = length / candidates as f64;
        let (mut lo, mut hi) = ((best_k as f64 - 1.0) * step, (best_k as f64 + 1.0).min(candidates as f64) * step);
        lo = lo.max(0.05 * length);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..20 {
            let d1 = hi - g * (hi - lo);
            let d2 = lo + g * (hi - lo);
            let a1 = max_half_height(poly, d1, q_cap);
            let a2 = max_half_height(poly, d2, q_cap);
            if d1 * a1 > best.0 {
                best = (d1 * a1, d1, a1);
            }
            if d2 * a2 > best.0 {
                best = (d2 * a2, d2, a2);
            }
            if d1 * a1 >= d2 * a2 {
                hi = d2;
            } else {
                lo = d1;
            }
        }
    }
    (best.1, best.2)
}

pub fn scan_region(scheme: RegionScheme, s: usize, eta: f64, grid_spec: Option<GridSpec>) -> Result<StabilityScan> {
    let poly = Polynomial::new(scheme, s, eta)?;
    let spec = grid_spec.unwrap_or_else(|| GridSpec::default_for(&poly, s));
    if spec.n_p < 100 || spec.n_q < 100 {
        return Err(Error::InvalidArgument(format!(
            "grid resolution must be at least 100x100, got {}x{}",
            spec.n_p, spec.n_q
        )));
    }
    let grid: Vec<Vec<f64>> = (0..spec.n_q)
        .into_par_iter()
        .map(|iq| {
            let q = lerp(spec.q_min, spec.q_max, iq, spec.n_q);
            (0..spec.n_p).map(|ip| poly.modulus(lerp(spec.p_min, spec.p_max, ip, spec.n_p), q)).collect()
        })
        .collect();
    let (mut d_s, mut a_s) = inscribed_ellipse(&poly, s);
    let mut warning = None;
    if d_s <= 0.0 || a_s <= 0.0 {
        d_s = 0.0;
        a_s = 0.0;
        warning = Some("no stable ellipse with p < 0 found".to_string());
    }
    d_s = d_s.min(-spec.p_min);
    a_s = a_s.min(spec.q_max);
    Ok(StabilityScan { scheme, s, eta, grid_spec: spec, grid, d_s, a_s, warning })
}

/// Check `|R2| <= 1 + 1e-9` along `q = c sqrt(-p)` at 2000 points of `[-L, 0]`.
pub fn verify_table_entry(ratio: f64, s: usize, eta: f64) -> Result<bool> {
    let c = arkc_coefficients(s, eta)?;
    Ok(curve_is_stable(&c, ratio, 2000))
}

pub(crate) fn curve_is_stable(c: &ArkcCoefficients, ratio: f64, samples: usize) -> bool {
    let length = c.real_stability_length();
    (0..samples).all(|k| {
        let p = -length * k as f64 / (samples - 1) as f64;
        let q = ratio * (-p).sqrt();
        r2_with(c, p, q).modulus() <= 1.0 + 1e-9
    })
}
