//! Damping tables: for each advection regime, the damping `eta` to use as
//! a function of the stage count.
//!
//! The regime is labelled by `rho_A / sqrt(rho_D)`; each band lists
//! contiguous stage intervals covering `[2, 500]`.

use serde::{Deserialize, Serialize};

use crate::coeffs::MAX_STAGES;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageBand {
    pub s_min: usize,
    pub s_max: usize,
    pub eta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioBand {
    pub label: String,
    /// Nominal `rho_A / sqrt(rho_D)`; also the curve constant `c` in `q = c sqrt(-p)`.
    pub nominal_ratio: f64,
    pub stages: Vec<StageBand>,
}

impl RatioBand {
    /// Build from `(s_max, eta)` pairs with implicit lower edges starting at 2.
    fn from_upper_edges(label: &str, nominal_ratio: f64, edges: &[(usize, f64)]) -> Self {
        let mut lo = 2;
        let stages = edges
            .iter()
            .map(|&(hi, eta)| {
                let band = StageBand { s_min: lo, s_max: hi, eta };
                lo = hi + 1;
                band
            })
            .collect();
        Self { label: label.to_string(), nominal_ratio, stages }
    }

    pub fn eta(&self, s: usize) -> Result<f64> {
        if s > MAX_STAGES {
            return Err(Error::StageCapExceeded(s));
        }
        self.stages
            .iter()
            .find(|b| b.s_min <= s && s <= b.s_max)
            .map(|b| b.eta)
            .ok_or_else(|| Error::InvalidArgument(format!("no damping entry for s = {s} in band {}", self.label)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DampingTable {
    pub bands: Vec<RatioBand>,
    pub s_cap: usize,
}

impl Default for DampingTable {
    fn default() -> Self {
        Self::standard()
    }
}

impl DampingTable {
    /// The tabulated damping choices for seven advection regimes.
    pub fn standard() -> Self {
        let bands = vec![
            RatioBand::from_upper_edges("pe<=0.1", 1.0 / 20.0, &[(200, 0.15), (500, 0.6)]),
            RatioBand::from_upper_edges(
                "q=sqrt(-p)/4",
                0.25,
                &[(30, 0.2), (60, 0.45), (110, 1.0), (160, 1.5), (260, 2.4), (360, 3.0), (500, 4.0)],
            ),
            RatioBand::from_upper_edges(
                "q=sqrt(-p)/2",
                0.5,
                &[
                    (10, 0.15),
                    (20, 0.6),
                    (30, 1.0),
                    (40, 1.4),
                    (50, 1.7),
                    (60, 2.1),
                    (70, 2.4),
                    (80, 2.7),
                    (90, 3.0),
                    (100, 3.3),
                    (120, 3.7),
                    (140, 4.1),
                    (160, 4.5),
                    (180, 4.9),
                    (200, 5.3),
                    (250, 6.0),
                    (300, 6.6),
                    (400, 7.7),
                    (500, 8.8),
                ],
            ),
            RatioBand::from_upper_edges(
                "q=3sqrt(-p)/4",
                0.75,
                &[
                    (10, 0.7),
                    (20, 1.5),
                    (30, 2.3),
                    (40, 2.9),
                    (50, 3.5),
                    (60, 4.0),
                    (70, 4.5),
                    (80, 4.9),
                    (90, 5.2),
                    (100, 5.5),
                    (140, 6.7),
                    (180, 7.7),
                    (250, 8.8),
                    (300, 9.8),
                    (400, 11.0),
                    (500, 12.0),
                ],
            ),
            RatioBand::from_upper_edges(
                "q=sqrt(-p)",
                1.0,
                &[(10, 1.0), (20, 2.5), (30, 3.5), (50, 4.8), (70, 6.0), (110, 7.8), (150, 9.0), (310, 12.5), (500, 15.0)],
            ),
            RatioBand::from_upper_edges(
                "q=sqrt(-2p)",
                std::f64::consts::SQRT_2,
                &[(10, 2.0), (20, 3.8), (30, 5.0), (50, 6.8), (70, 8.0), (110, 10.4), (150, 12.0), (310, 16.0), (500, 19.0)],
            ),
            RatioBand::from_upper_edges(
                "q>=2sqrt(-p)",
                2.0,
                &[(10, 4.0), (30, 9.0), (70, 13.5), (150, 18.0), (310, 23.0), (500, 27.0)],
            ),
        ];
        Self { bands, s_cap: MAX_STAGES }
    }

    /// Index of the band whose nominal ratio is nearest to `ratio`.
    pub fn band_index(&self, ratio: f64) -> usize {
        let last = self.bands.len().saturating_sub(1);
        if self.bands.is_empty() || !(ratio.is_finite()) || ratio >= self.bands[last].nominal_ratio {
            return last;
        }
        let mut best = 0;
        for (i, b) in self.bands.iter().enumerate() {
            if (b.nominal_ratio - ratio).abs() < (self.bands[best].nominal_ratio - ratio).abs() {
                best = i;
            }
        }
        best
    }

    pub fn band(&self, ratio: f64) -> &RatioBand {
        &self.bands[self.band_index(ratio)]
    }

    /// Structural checks: stage bands contiguous over `[2, s_cap]`, `eta`
    /// positive and nondecreasing in `s`.
    pub fn validate(&self) -> Result<()> {
        for band in &self.bands {
            let mut expect = 2;
            let mut last_eta = 0.0;
            for b in &band.stages {
                if b.s_min != expect || b.s_max < b.s_min {
                    return Err(Error::InvalidArgument(format!("band {} is not contiguous at s = {expect}", band.label)));
                }
                if !(b.eta > 0.0) || b.eta < last_eta {
                    return Err(Error::InvalidArgument(format!("band {} has decreasing damping at s = {}", band.label, b.s_min)));
                }
                last_eta = b.eta;
                expect = b.s_max + 1;
            }
            if expect != self.s_cap + 1 {
                return Err(Error::InvalidArgument(format!("band {} does not reach s = {}", band.label, self.s_cap)));
            }
        }
        Ok(())
    }
}

/// Damping for the regime nearest to `rho_ratio` at stage count `s`.
pub fn select_damping(rho_ratio: f64, s: usize) -> Result<f64> {
    thread_local! {
        static TABLE: DampingTable = DampingTable::standard();
    }
    if s < 2 {
        return Err(Error::InvalidArgument(format!("stage count must be >= 2, got {s}")));
    }
    TABLE.with(|t| t.band(rho_ratio).eta(s))
}

/// `(1 + omega0) / omega2` for `(s, eta)` in O(s) without building arrays.
pub fn real_stability_length(s: usize, eta: f64) -> f64 {
    let sf = s as f64;
    let w0 = 1.0 + eta / (sf * sf);
    let t = crate::chebpoly::cheb_first_kind(s, w0);
    (1.0 + w0) * t.second_deriv / t.first_deriv
}

/// Smallest stage count whose stability interval, with the band's damping
/// at that stage count, exceeds `h * rho_d`.
pub fn select_stages(h: f64, rho_d: f64, band: &RatioBand) -> Result<(usize, f64)> {
    if !(rho_d >= 0.0) || !(h >= 0.0) {
        return Err(Error::InvalidArgument(format!("need h >= 0 and rho_D >= 0, got {h}, {rho_d}")));
    }
    let required = h * rho_d;
    // second-order Chebyshev intervals never exceed 2 s^2 / 3
    let start = ((1.5 * required).sqrt().floor() as usize).saturating_sub(1).max(2);
    for s in start..=MAX_STAGES {
        let eta = band.eta(s)?;
        if real_stability_length(s, eta) > required {
            return Ok((s, eta));
        }
    }
    let eta = band.eta(MAX_STAGES)?;
    Err(Error::ReduceStep { max_interval: real_stability_length(MAX_STAGES, eta), required })
}
