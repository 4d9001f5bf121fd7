//! Spectral simulation of the linearized boundary dynamics.
//!
//! The linearized boundary operator acts diagonally on real
//! spherical-harmonic coefficients, so the evolution of a perturbation is
//! an exact per-mode exponential `c_lm(t + dt) = c_lm(t) exp(alpha_l dt)`:
//! no time-stepping error is introduced. Decay and growth rates are
//! measured in a weighted-l2 Sobolev proxy norm
//! `(sum (1+l)^4 c_lm^2)^(1/2)`; the exponential rate of a diagonal flow
//! does not depend on which norm in this family is used.

pub mod harmonics;

use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use crate::spectrum::{SpectrumError, SpectrumReport};

/// Sobolev proxy weight exponent: weight `(1+l)^(2s)` with `s = 2`.
const PROXY_S: i32 = 2;
/// Per-mode exponent cap before the exponential overflows.
const EXP_CAP: f64 = 700.0;
/// Perturbation amplitude beyond which the linearized description leaves
/// its smallness regime and a snapshot is flagged.
const SMALLNESS_LIMIT: f64 = 0.3;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error("state truncation l_max = {state_l} exceeds spectrum coverage l_max = {report_l}")]
    CoverageExceeded { state_l: u32, report_l: u32 },
    #[error("mode l = {l} saturates: exponent alpha * dt = {exponent} overflows")]
    Saturation { l: u32, exponent: f64 },
    #[error("rate undefined: {0}")]
    UndefinedRate(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
}

/// Degree filter for norms and rate measurements.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DegreeBand {
    All,
    Only(u32),
    AtLeast(u32),
    Range(u32, u32),
}

impl DegreeBand {
    pub fn contains(&self, l: u32) -> bool {
        match *self {
            DegreeBand::All => true,
            DegreeBand::Only(k) => l == k,
            DegreeBand::AtLeast(k) => l >= k,
            DegreeBand::Range(lo, hi) => (lo..=hi).contains(&l),
        }
    }
}

/// Truncated boundary perturbation: real coefficients `c_lm` for
/// `0 <= l <= l_max`, `|m| <= l`, laid out flat at `l^2 + l + m`.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationState {
    l_max: u32,
    coeffs: Vec<f64>,
    t: f64,
}

impl PerturbationState {
    pub fn zero(l_max: u32) -> Self {
        Self { l_max, coeffs: vec![0.0; ((l_max + 1) * (l_max + 1)) as usize], t: 0.0 }
    }

    pub fn from_coeffs(l_max: u32, coeffs: Vec<f64>, t: f64) -> Result<Self, DynamicsError> {
        let expected = ((l_max + 1) * (l_max + 1)) as usize;
        if coeffs.len() != expected {
            return Err(DynamicsError::InvalidState(format!(
                "coefficient array has length {}, expected {expected}",
                coeffs.len()
            )));
        }
        if !coeffs.iter().all(|c| c.is_finite()) {
            return Err(DynamicsError::InvalidState("non-finite coefficient".into()));
        }
        Ok(Self { l_max, coeffs, t })
    }

    /// Seeded random state with unit-scale coefficients inside `band` and
    /// zeros elsewhere (SplitMix64; reproducible across platforms).
    pub fn random(l_max: u32, seed: u64, band: DegreeBand) -> Self {
        let mut state = Self::zero(l_max);
        let mut s = seed.wrapping_add(0x9e3779b97f4a7c15);
        let mut next = move || {
            let mut z = s;
            s = s.wrapping_add(0x9e3779b97f4a7c15);
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
            z ^= z >> 31;
            // uniform in [-1, 1)
            (z >> 11) as f64 / (1u64 << 52) as f64 - 1.0
        };
        for l in 0..=l_max {
            for m in -(l as i32)..=(l as i32) {
                let v = next();
                if band.contains(l) {
                    state.set(l, m, v);
                }
            }
        }
        state
    }

    pub fn l_max(&self) -> u32 {
        self.l_max
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn get(&self, l: u32, m: i32) -> f64 {
        self.coeffs[harmonics::index(l, m)]
    }

    pub fn set(&mut self, l: u32, m: i32, value: f64) {
        self.coeffs[harmonics::index(l, m)] = value;
    }

    /// Weighted-l2 proxy norm of the selected band.
    pub fn band_norm(&self, band: DegreeBand) -> f64 {
        let mut acc = 0.0;
        for l in 0..=self.l_max {
            if !band.contains(l) {
                continue;
            }
            let weight = ((1 + l) as f64).powi(2 * PROXY_S);
            for m in -(l as i32)..=(l as i32) {
                let c = self.get(l, m);
                acc += weight * c * c;
            }
        }
        acc.sqrt()
    }

    pub fn norm(&self) -> f64 {
        self.band_norm(DegreeBand::All)
    }
}

/// Advance the state by `dt` under the diagonal multiplier flow at the
/// given surface tension. Exact in `dt`.
pub fn evolve(
    state: &PerturbationState,
    report: &SpectrumReport,
    gamma: f64,
    dt: f64,
) -> Result<PerturbationState, DynamicsError> {
    if state.l_max > 1 && report.l_max() < state.l_max {
        return Err(DynamicsError::CoverageExceeded {
            state_l: state.l_max,
            report_l: report.l_max(),
        });
    }
    let mut out = state.clone();
    out.t = state.t + dt;
    for l in 0..=state.l_max {
        let alpha = report.alpha(l, gamma)?;
        let exponent = alpha * dt;
        if exponent > EXP_CAP {
            return Err(DynamicsError::Saturation { l, exponent });
        }
        let factor = exponent.exp();
        for m in -(l as i32)..=(l as i32) {
            let idx = harmonics::index(l, m);
            out.coeffs[idx] = state.coeffs[idx] * factor;
        }
    }
    Ok(out)
}

/// Band-norm samples `(t, norm)` of the flow started at `state`.
pub fn norm_trajectory(
    state: &PerturbationState,
    report: &SpectrumReport,
    gamma: f64,
    t_start: f64,
    t_end: f64,
    samples: usize,
    band: DegreeBand,
) -> Result<Vec<(f64, f64)>, DynamicsError> {
    assert!(samples >= 2 && t_end > t_start && t_start >= 0.0);
    let mut out = Vec::with_capacity(samples);
    for k in 0..samples {
        let t = t_start + (t_end - t_start) * k as f64 / (samples - 1) as f64;
        let advanced = evolve(state, report, gamma, t)?;
        out.push((state.t + t, advanced.band_norm(band)));
    }
    Ok(out)
}

/// Log of the band norm at time `t` under the diagonal flow, evaluated by
/// log-sum-exp so that horizons far past coefficient overflow stay exact.
pub fn log_band_norm(
    state: &PerturbationState,
    report: &SpectrumReport,
    gamma: f64,
    t: f64,
    band: DegreeBand,
) -> Result<f64, DynamicsError> {
    if state.l_max > 1 && report.l_max() < state.l_max {
        return Err(DynamicsError::CoverageExceeded {
            state_l: state.l_max,
            report_l: report.l_max(),
        });
    }
    let mut terms = Vec::new();
    for l in 0..=state.l_max {
        if !band.contains(l) {
            continue;
        }
        let alpha = report.alpha(l, gamma)?;
        let log_weight = 2.0 * PROXY_S as f64 * ((1 + l) as f64).ln();
        for m in -(l as i32)..=(l as i32) {
            let c = state.get(l, m);
            if c != 0.0 {
                terms.push(log_weight + 2.0 * c.abs().ln() + 2.0 * alpha * t);
            }
        }
    }
    if terms.is_empty() {
        return Err(DynamicsError::UndefinedRate("band carries no content".into()));
    }
    let peak = terms.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let sum: f64 = terms.iter().map(|&x| (x - peak).exp()).sum();
    Ok(0.5 * (peak + sum.ln()))
}

/// `(t, ln norm)` samples of the flow, stable over arbitrarily long windows.
pub fn log_norm_trajectory(
    state: &PerturbationState,
    report: &SpectrumReport,
    gamma: f64,
    t_start: f64,
    t_end: f64,
    samples: usize,
    band: DegreeBand,
) -> Result<Vec<(f64, f64)>, DynamicsError> {
    assert!(samples >= 2 && t_end > t_start);
    let mut out = Vec::with_capacity(samples);
    for k in 0..samples {
        let t = t_start + (t_end - t_start) * k as f64 / (samples - 1) as f64;
        out.push((state.t + t, log_band_norm(state, report, gamma, t, band)?));
    }
    Ok(out)
}

/// Least-squares exponential rate of a sampled norm trajectory: the slope
/// of `log norm` against `t`. Requires at least 10 samples with strictly
/// positive norms.
pub fn measured_rate(samples: &[(f64, f64)]) -> Result<f64, DynamicsError> {
    if samples.len() < 10 {
        return Err(DynamicsError::UndefinedRate(format!(
            "need at least 10 samples, got {}",
            samples.len()
        )));
    }
    if let Some(&(t, n)) = samples.iter().find(|&&(_, n)| !(n > 0.0 && n.is_finite())) {
        return Err(DynamicsError::UndefinedRate(format!(
            "norm {n} at t = {t} is not a positive finite value"
        )));
    }
    let n = samples.len() as f64;
    let mean_t = samples.iter().map(|&(t, _)| t).sum::<f64>() / n;
    let mean_ln = samples.iter().map(|&(_, v)| v.ln()).sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for &(t, v) in samples {
        num += (t - mean_t) * (v.ln() - mean_ln);
        den += (t - mean_t) * (t - mean_t);
    }
    if den == 0.0 {
        return Err(DynamicsError::UndefinedRate("all samples at the same time".into()));
    }
    Ok(num / den)
}

#[derive(Debug, Clone, Serialize)]
pub struct Snapshot {
    pub thetas: Vec<f64>,
    pub phis: Vec<f64>,
    /// Radii `1 + epsilon * eta(omega)`, theta-major.
    pub radii: Vec<f64>,
    /// True if `epsilon * max |eta|` leaves the linearized smallness regime.
    pub smallness_warning: bool,
}

/// Boundary radius samples `r(omega) = 1 + epsilon * eta(omega)` on a
/// latitude-longitude grid (cell-midpoint colatitudes, uniform longitudes).
pub fn boundary_snapshot(
    state: &PerturbationState,
    epsilon: f64,
    n_theta: usize,
    n_phi: usize,
) -> Snapshot {
    let thetas: Vec<f64> = (0..n_theta)
        .map(|i| std::f64::consts::PI * (i as f64 + 0.5) / n_theta as f64)
        .collect();
    let phis: Vec<f64> =
        (0..n_phi).map(|j| 2.0 * std::f64::consts::PI * j as f64 / n_phi as f64).collect();
    let eta = harmonics::synthesize(&state.coeffs, state.l_max, &thetas, &phis);
    let max_eta = eta.iter().fold(0.0_f64, |a, &v| a.max(v.abs()));
    Snapshot {
        thetas,
        phis,
        radii: eta.iter().map(|&v| 1.0 + epsilon * v).collect(),
        smallness_warning: epsilon * max_eta > SMALLNESS_LIMIT,
    }
}

impl Snapshot {
    /// CSV export: `theta,phi,radius`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "theta,phi,radius")?;
        for (ti, &theta) in self.thetas.iter().enumerate() {
            for (pj, &phi) in self.phis.iter().enumerate() {
                writeln!(
                    w,
                    "{:.16e},{:.16e},{:.16e}",
                    theta,
                    phi,
                    self.radii[ti * self.phis.len() + pj]
                )?;
            }
        }
        Ok(())
    }
}

/// One row of the trajectory CSV.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TrajectoryRecord {
    pub t: f64,
    pub norm_total: f64,
    pub norm_l_ge_2: f64,
    pub rate_estimate: f64,
}

/// CSV export: `t,norm_total,norm_l_ge_2,rate_estimate`.
pub fn write_trajectory_csv<W: Write>(
    records: &[TrajectoryRecord],
    mut w: W,
) -> std::io::Result<()> {
    writeln!(w, "t,norm_total,norm_l_ge_2,rate_estimate")?;
    for rec in records {
        writeln!(
            w,
            "{:.16e},{:.16e},{:.16e},{:.16e}",
            rec.t, rec.norm_total, rec.norm_l_ge_2, rec.rate_estimate
        )?;
    }
    Ok(())
}
