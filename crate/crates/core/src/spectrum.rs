//! Multiplier eigenvalues of the linearized boundary operator and the
//! surface-tension stability thresholds.
//!
//! Acting on a degree-l spherical harmonic, the linearized boundary
//! operator multiplies by
//!
//! * `alpha_0 = g(1) + I_0` for `l = 0`,
//! * `0` for `l = 1` (translation invariance, a triple eigenvalue),
//! * `alpha_l(gamma) = -s_l (gamma - gamma_l)` for `l >= 2`, where
//!   `s_l = l(l+2)(2l+1) / [4(2l^2+4l+3)]` and the per-degree threshold is
//!   `gamma_l = 4(2l+3)(l+1) / [l(l+2)(2l+1)] * (g(1) + I_l)`.
//!
//! The global threshold is `gamma_star = max_{l>=2} gamma_l`; the state is
//! stable for `gamma > gamma_star` and unstable below it. The Darcy
//! (porous-medium) counterpart `gamma_tilde_l = 2/[l(l-1)(l+2)] *
//! (g(1) + g'(1) integral F_l r^(l+2))` uses the same mode profiles and
//! sits strictly below the Stokes threshold degree by degree.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::model::ModelFunctions;
use crate::modes::{solve_mode, ModeError, ModeProfile};
use crate::stationary::RadialStationary;

/// Degrees where per-degree results within `1e-12` of each other are
/// reported as a tie (broken toward the smaller degree).
const TIE_TOLERANCE: f64 = 1e-12;
/// Half-width of the band around `gamma_star` reported as marginal and
/// never classified.
const MARGINAL_BAND: f64 = 1e-10;
/// Consecutive strictly decreasing thresholds required at the truncation
/// edge before the reported maximum is trusted.
const CERTIFICATE_RUN: u32 = 8;

#[derive(Debug, Error)]
pub enum SpectrumError {
    #[error(transparent)]
    Mode(#[from] ModeError),
    #[error(
        "threshold bracket g(1) + I_l = {bracket:e} non-positive at l = {l}; this contradicts the structural bounds and indicates an upstream numerical failure"
    )]
    ContradictionBracket { l: u32, bracket: f64 },
    #[error("no decreasing tail certificate up to the truncation cap l = {l_max}")]
    TruncationFailure { l_max: u32, partial: Box<SpectrumReport> },
    #[error("degree {l} not covered by this report (l_max = {l_max})")]
    DegreeNotCovered { l: u32, l_max: u32 },
}

/// `s_l`: the positive slope of `gamma -> -alpha_l(gamma)` for `l >= 2`.
pub fn alpha_slope(l: u32) -> f64 {
    let lf = l as f64;
    lf * (lf + 2.0) * (2.0 * lf + 1.0) / (4.0 * (2.0 * lf * lf + 4.0 * lf + 3.0))
}

/// Stokes threshold prefactor `4(2l+3)(l+1) / [l(l+2)(2l+1)]`.
pub fn stokes_prefactor(l: u32) -> f64 {
    let lf = l as f64;
    4.0 * (2.0 * lf + 3.0) * (lf + 1.0) / (lf * (lf + 2.0) * (2.0 * lf + 1.0))
}

/// Darcy threshold prefactor `2 / [l(l-1)(l+2)]`.
pub fn darcy_prefactor(l: u32) -> f64 {
    let lf = l as f64;
    2.0 / (lf * (lf - 1.0) * (lf + 2.0))
}

/// Per-degree threshold from the bracket `g(1) + I_l`. The bracket is
/// provably positive for `l >= 2`, so a non-positive value flags a broken
/// upstream computation rather than a legitimate regime.
pub fn gamma_l_from_parts(l: u32, g1: f64, i_l: f64) -> Result<f64, SpectrumError> {
    assert!(l >= 2, "per-degree thresholds are defined for l >= 2");
    let bracket = g1 + i_l;
    if bracket <= 0.0 {
        return Err(SpectrumError::ContradictionBracket { l, bracket });
    }
    Ok(stokes_prefactor(l) * bracket)
}

/// Per-degree Stokes threshold `gamma_l` for a solved mode.
pub fn gamma_threshold_l(mode: &ModeProfile, fns: &ModelFunctions) -> Result<f64, SpectrumError> {
    gamma_l_from_parts(mode.l(), fns.g(1.0), mode.i_l())
}

/// Darcy comparison threshold `gamma_tilde_l`, built from the same mode
/// profile with the constant weight `g'(1)`.
pub fn darcy_gamma_l(mode: &ModeProfile, fns: &ModelFunctions) -> f64 {
    darcy_prefactor(mode.l()) * (fns.g(1.0) + fns.g_prime(1.0) * mode.plain_moment())
}

/// Tail-truncation certificate: the thresholds must decrease strictly for
/// at least [`CERTIFICATE_RUN`] consecutive degrees up to `l_max`, ending
/// below the reported maximum.
#[derive(Debug, Clone, Serialize)]
pub struct TailCertificate {
    /// First degree of the strictly decreasing suffix.
    pub decreasing_from: u32,
    /// Number of strictly decreasing steps ending at `l_max`.
    pub run_length: u32,
    pub satisfied: bool,
}

/// Eigenvalue data for one model at a unit stationary state.
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumReport {
    alpha_0: f64,
    l_max: u32,
    /// `gamma_l`, `I_l`, `gamma_tilde_l` indexed by `l - 2`.
    gamma_l: Vec<f64>,
    i_l: Vec<f64>,
    gamma_tilde_l: Vec<f64>,
    gamma_star: f64,
    l_star: u32,
    tie_flag: bool,
    gamma_tilde_star: f64,
    l_tilde_star: u32,
    certificate: TailCertificate,
}

impl SpectrumReport {
    pub fn alpha_0(&self) -> f64 {
        self.alpha_0
    }

    pub fn l_max(&self) -> u32 {
        self.l_max
    }

    pub fn gamma_star(&self) -> f64 {
        self.gamma_star
    }

    pub fn l_star(&self) -> u32 {
        self.l_star
    }

    pub fn tie_flag(&self) -> bool {
        self.tie_flag
    }

    pub fn gamma_tilde_star(&self) -> f64 {
        self.gamma_tilde_star
    }

    pub fn l_tilde_star(&self) -> u32 {
        self.l_tilde_star
    }

    pub fn certificate(&self) -> &TailCertificate {
        &self.certificate
    }

    pub fn gamma_l(&self, l: u32) -> Option<f64> {
        if (2..=self.l_max).contains(&l) {
            Some(self.gamma_l[(l - 2) as usize])
        } else {
            None
        }
    }

    pub fn i_l(&self, l: u32) -> Option<f64> {
        if (2..=self.l_max).contains(&l) {
            Some(self.i_l[(l - 2) as usize])
        } else {
            None
        }
    }

    pub fn gamma_tilde_l(&self, l: u32) -> Option<f64> {
        if (2..=self.l_max).contains(&l) {
            Some(self.gamma_tilde_l[(l - 2) as usize])
        } else {
            None
        }
    }

    /// Multiplier eigenvalue at degree `l` for surface tension `gamma`.
    pub fn alpha(&self, l: u32, gamma: f64) -> Result<f64, SpectrumError> {
        match l {
            0 => Ok(self.alpha_0),
            1 => Ok(0.0),
            _ => {
                let gl = self
                    .gamma_l(l)
                    .ok_or(SpectrumError::DegreeNotCovered { l, l_max: self.l_max })?;
                Ok(-alpha_slope(l) * (gamma - gl))
            }
        }
    }

    /// Largest multiplier over `l >= 2` at the given `gamma`.
    pub fn max_alpha_l_ge_2(&self, gamma: f64) -> f64 {
        (2..=self.l_max)
            .map(|l| self.alpha(l, gamma).expect("degree covered by construction"))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest multiplier over all degrees (the zero at `l = 1` included).
    pub fn max_alpha(&self, gamma: f64) -> f64 {
        self.max_alpha_l_ge_2(gamma).max(self.alpha_0).max(0.0)
    }

    /// CSV export: `l,gamma_l,alpha_l,gamma_tilde_l,multiplicity` for the
    /// covered degrees `l >= 2`, with `alpha_l` evaluated at `gamma`.
    pub fn write_csv<W: Write>(&self, gamma: f64, mut w: W) -> std::io::Result<()> {
        writeln!(w, "l,gamma_l,alpha_l,gamma_tilde_l,multiplicity")?;
        for l in 2..=self.l_max {
            let alpha = self.alpha(l, gamma).expect("degree covered");
            writeln!(
                w,
                "{},{:.16e},{:.16e},{:.16e},{}",
                l,
                self.gamma_l(l).unwrap(),
                alpha,
                self.gamma_tilde_l(l).unwrap(),
                2 * l + 1
            )?;
        }
        Ok(())
    }

    /// JSON summary with the stability verdict at `gamma` (`null` inside
    /// the marginal band).
    pub fn summary_json(&self, gamma: f64) -> serde_json::Value {
        let spectrum = self.classify(gamma);
        serde_json::json!({
            "alpha_0": self.alpha_0,
            "gamma_star": self.gamma_star,
            "l_star": self.l_star,
            "gamma_tilde_star": self.gamma_tilde_star,
            "stable": spectrum.stable,
        })
    }

    /// Full eigenvalue list with multiplicities at `gamma`, sorted by
    /// descending value, plus the stability classification.
    pub fn classify(&self, gamma: f64) -> FullSpectrum {
        let mut entries = Vec::with_capacity(self.l_max as usize + 1);
        entries.push(EigenvalueEntry { value: self.alpha_0, degree: 0, multiplicity: 1 });
        entries.push(EigenvalueEntry { value: 0.0, degree: 1, multiplicity: 3 });
        for l in 2..=self.l_max {
            entries.push(EigenvalueEntry {
                value: self.alpha(l, gamma).expect("degree covered"),
                degree: l,
                multiplicity: 2 * l + 1,
            });
        }
        entries.sort_by(|a, b| b.value.total_cmp(&a.value).then(a.degree.cmp(&b.degree)));
        let marginal = (gamma - self.gamma_star).abs() <= MARGINAL_BAND;
        let stable = if marginal { None } else { Some(gamma > self.gamma_star) };
        FullSpectrum { entries, stable, marginal }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct EigenvalueEntry {
    pub value: f64,
    pub degree: u32,
    pub multiplicity: u32,
}

#[derive(Debug, Clone, Serialize)]
pub struct FullSpectrum {
    pub entries: Vec<EigenvalueEntry>,
    /// `None` inside the marginal band around `gamma_star`.
    pub stable: Option<bool>,
    pub marginal: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct SpectrumOptions {
    /// Initial truncation degree.
    pub l_max: u32,
    /// Hard cap for certificate-driven doubling.
    pub l_cap: u32,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self { l_max: 64, l_cap: 512 }
    }
}

fn argmax_with_tie(values: &[f64]) -> (usize, bool) {
    let mut best = 0usize;
    for (k, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] + TIE_TOLERANCE {
            best = k;
        }
    }
    let tie = values
        .iter()
        .enumerate()
        .any(|(k, &v)| k != best && (v - values[best]).abs() <= TIE_TOLERANCE);
    (best, tie)
}

fn certificate_for(gamma_l: &[f64], gamma_star: f64) -> TailCertificate {
    let n = gamma_l.len();
    let mut run = 0u32;
    let mut k = n - 1;
    while k > 0 && gamma_l[k] < gamma_l[k - 1] {
        run += 1;
        k -= 1;
    }
    let decreasing_from = k as u32 + 2;
    let satisfied = run >= CERTIFICATE_RUN && gamma_l[n - 1] < gamma_star;
    TailCertificate { decreasing_from, run_length: run, satisfied }
}

/// Compute the spectrum report: per-degree thresholds for `l = 2..=l_max`
/// (doubling the truncation until the decreasing-tail certificate holds),
/// the degree-0 multiplier, and the Darcy comparison family.
///
/// Per-degree work is independent and runs on the rayon pool; results are
/// reduced in fixed degree order, so values do not depend on thread count.
pub fn compute_spectrum(
    fns: &ModelFunctions,
    st: &RadialStationary,
    opts: SpectrumOptions,
) -> Result<SpectrumReport, SpectrumError> {
    let mode0 = solve_mode(0, st, fns)?;
    let alpha_0 = fns.g(1.0) + mode0.i_l();

    let mut l_max = opts.l_max.max(8);
    let mut solved: Vec<(f64, f64, f64)> = Vec::new(); // (gamma_l, i_l, gamma_tilde_l) by l-2

    loop {
        let lo = solved.len() as u32 + 2;
        let new: Result<Vec<(f64, f64, f64)>, SpectrumError> = (lo..=l_max)
            .into_par_iter()
            .map(|l| {
                let mode = solve_mode(l, st, fns)?;
                let gamma_l = gamma_threshold_l(&mode, fns)?;
                Ok((gamma_l, mode.i_l(), darcy_gamma_l(&mode, fns)))
            })
            .collect();
        solved.extend(new?);

        let gammas: Vec<f64> = solved.iter().map(|t| t.0).collect();
        let (best, tie_flag) = argmax_with_tie(&gammas);
        let gamma_star = gammas[best];
        let certificate = certificate_for(&gammas, gamma_star);

        let tildes: Vec<f64> = solved.iter().map(|t| t.2).collect();
        let (tbest, _) = argmax_with_tie(&tildes);

        let report = SpectrumReport {
            alpha_0,
            l_max,
            gamma_l: gammas.clone(),
            i_l: solved.iter().map(|t| t.1).collect(),
            gamma_tilde_l: tildes.clone(),
            gamma_star,
            l_star: best as u32 + 2,
            tie_flag,
            gamma_tilde_star: tildes[tbest],
            l_tilde_star: tbest as u32 + 2,
            certificate,
        };
        if report.certificate.satisfied {
            return Ok(report);
        }
        if l_max >= opts.l_cap {
            return Err(SpectrumError::TruncationFailure { l_max, partial: Box::new(report) });
        }
        l_max = (l_max * 2).min(opts.l_cap);
    }
}
