//! Batch command-line front end.
//!
//! Loads a strict JSON configuration, runs the solver pipeline
//! (stationary state -> unit-ball rescale -> modes/spectrum/eigenmodes/
//! dynamics) and emits plot-ready CSV/JSON artifacts. Exit codes:
//! `0` success, `2` configuration or model-assumption failure, `3`
//! numerical failure (bracketing, truncation certificate, residual
//! breach), `1` I/O trouble.
//!
//! Surface tensions: `gamma_values` are interpreted in the same raw units
//! as `model.gamma` and are converted to the normalized unit-ball value
//! `gamma * R_s / nu` before use; the conversion factors appear in the
//! JSON summaries.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::dynamics::{
    self, boundary_snapshot, log_norm_trajectory, measured_rate, DegreeBand, DynamicsError,
    PerturbationState, TrajectoryRecord,
};
use crate::eigenmode::{assemble_fields, residual_report, EigenmodeError};
use crate::model::{canonical_model, validate_assumptions, ModelError, ModelFunctions, ModelParams};
use crate::modes::{solve_mode, ModeError};
use crate::spectrum::{compute_spectrum, SpectrumError, SpectrumOptions, SpectrumReport};
use crate::stationary::{find_stationary, rescale_to_unit, RadialStationary, StationaryError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Stationary,
    Modes,
    Spectrum,
    Threshold,
    Eigenmode,
    Evolve,
    CompareDarcy,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("model assumptions violated: {}", .0.join("; "))]
    Assumptions(Vec<String>),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Stationary(#[from] StationaryError),
    #[error(transparent)]
    Mode(#[from] ModeError),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error(transparent)]
    Eigenmode(#[from] EigenmodeError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("residual breach: {0}")]
    ResidualBreach(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// Process exit code for this failure class.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Assumptions(_) | CliError::Model(_) => 2,
            CliError::Io(_) => 1,
            _ => 3,
        }
    }
}

fn default_l_max() -> u32 {
    64
}

/// Verification gates applied by the CLI to the diagnostics it computes.
/// The numeric kernel tolerances themselves are pinned by the library.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerificationTolerances {
    #[serde(default = "VerificationTolerances::default_residual")]
    pub residual_max: f64,
    #[serde(default = "VerificationTolerances::default_multiplier")]
    pub multiplier_max: f64,
}

impl VerificationTolerances {
    fn default_residual() -> f64 {
        1e-6
    }
    fn default_multiplier() -> f64 {
        1e-8
    }
}

impl Default for VerificationTolerances {
    fn default() -> Self {
        Self { residual_max: 1e-6, multiplier_max: 1e-8 }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveConfig {
    #[serde(default = "EvolveConfig::default_t_end")]
    pub t_end: f64,
    #[serde(default = "EvolveConfig::default_samples")]
    pub samples: usize,
    #[serde(default = "EvolveConfig::default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "EvolveConfig::default_snapshot_theta")]
    pub snapshot_theta: usize,
    #[serde(default = "EvolveConfig::default_snapshot_phi")]
    pub snapshot_phi: usize,
}

impl EvolveConfig {
    fn default_t_end() -> f64 {
        50.0
    }
    fn default_samples() -> usize {
        60
    }
    fn default_epsilon() -> f64 {
        0.05
    }
    fn default_snapshot_theta() -> usize {
        32
    }
    fn default_snapshot_phi() -> usize {
        64
    }
}

impl Default for EvolveConfig {
    fn default() -> Self {
        Self { t_end: 50.0, samples: 60, epsilon: 0.05, snapshot_theta: 32, snapshot_phi: 64 }
    }
}

/// Run configuration; unknown keys are rejected.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelParams,
    #[serde(default = "default_l_max")]
    pub l_max: u32,
    #[serde(default)]
    pub gamma_values: Vec<f64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub stationary_bracket: Option<(f64, f64)>,
    #[serde(default)]
    pub tolerances: VerificationTolerances,
    #[serde(default)]
    pub evolve: EvolveConfig,
    /// Seed for the randomized initial state of `evolve`.
    #[serde(default)]
    pub seed: u64,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.l_max < 2 {
            return Err(CliError::Config(format!("l_max must be at least 2, got {}", self.l_max)));
        }
        if !self.gamma_values.iter().all(|g| g.is_finite() && *g >= 0.0) {
            return Err(CliError::Config("gamma_values must be finite and non-negative".into()));
        }
        if self.evolve.samples < 10 {
            return Err(CliError::Config("evolve.samples must be at least 10".into()));
        }
        let t_end_ok = self.evolve.t_end.is_finite() && self.evolve.t_end > 0.0;
        if !t_end_ok {
            return Err(CliError::Config("evolve.t_end must be positive".into()));
        }
        let gates_ok = self.tolerances.residual_max > 0.0 && self.tolerances.multiplier_max > 0.0;
        if !gates_ok {
            return Err(CliError::Config("verification tolerances must be positive".into()));
        }
        Ok(())
    }
}

/// Solved pipeline context shared by the commands.
struct Pipeline {
    /// Stationary state in the configured units.
    st_raw: RadialStationary,
    fns_unit: ModelFunctions,
    st_unit: RadialStationary,
    r_s: f64,
    /// Raw-units -> unit-ball conversion factor for surface tensions.
    gamma_scale: f64,
}

fn build_pipeline(config: &RunConfig) -> Result<Pipeline, CliError> {
    let fns = canonical_model(&config.model)?;
    let report = validate_assumptions(&fns, 2.0);
    if !report.all_pass() {
        return Err(CliError::Assumptions(report.violations));
    }
    let st_raw = find_stationary(&fns, config.stationary_bracket)?;
    let r_s = st_raw.r_s();
    let (st_unit, fns_unit) = rescale_to_unit(&st_raw, &fns)?;
    Ok(Pipeline { st_raw, fns_unit, st_unit, r_s, gamma_scale: r_s / config.model.nu })
}

fn effective_gammas(config: &RunConfig, pipeline: &Pipeline) -> Result<Vec<f64>, CliError> {
    if config.gamma_values.is_empty() {
        return Err(CliError::Config(
            "gamma_values must be non-empty for this command".into(),
        ));
    }
    Ok(config.gamma_values.iter().map(|g| g * pipeline.gamma_scale).collect())
}

fn out_dir(config: &RunConfig) -> PathBuf {
    config.output_dir.clone().unwrap_or_else(|| PathBuf::from("out"))
}

fn create_out_dir(config: &RunConfig) -> Result<PathBuf, CliError> {
    let dir = out_dir(config);
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("value serializes");
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn spectrum_for(config: &RunConfig, pipeline: &Pipeline) -> Result<SpectrumReport, CliError> {
    let opts = SpectrumOptions { l_max: config.l_max, ..SpectrumOptions::default() };
    Ok(compute_spectrum(&pipeline.fns_unit, &pipeline.st_unit, opts)?)
}

fn stability_word(stable: Option<bool>) -> &'static str {
    match stable {
        Some(true) => "true",
        Some(false) => "false",
        None => "marginal",
    }
}

/// Execute one command; returns the one-line summary printed on success.
pub fn run(command: Command, config: &RunConfig) -> Result<String, CliError> {
    match command {
        Command::Stationary => run_stationary(config),
        Command::Modes => run_modes(config),
        Command::Spectrum => run_spectrum(config),
        Command::Threshold => run_threshold(config),
        Command::Eigenmode => run_eigenmode(config),
        Command::Evolve => run_evolve(config),
        Command::CompareDarcy => run_compare_darcy(config),
    }
}

fn run_stationary(config: &RunConfig) -> Result<String, CliError> {
    let pipeline = build_pipeline(config)?;
    let dir = create_out_dir(config)?;
    // export the unrescaled state so radii are in the configured units
    let st = &pipeline.st_raw;
    let file = fs::File::create(dir.join("stationary.csv"))?;
    st.write_profile_csv(BufWriter::new(file))?;
    Ok(format!(
        "R_s={:.16e} sigma0={:.16e} sigma_prime_R={:.16e} mass_residual={:.16e}",
        pipeline.r_s,
        st.sigma0(),
        st.sigma_prime_at_boundary(),
        st.mass_residual()
    ))
}

fn run_modes(config: &RunConfig) -> Result<String, CliError> {
    let pipeline = build_pipeline(config)?;
    let dir = create_out_dir(config)?;
    let mut rows = Vec::new();
    for l in 0..=config.l_max {
        let mode = solve_mode(l, &pipeline.st_unit, &pipeline.fns_unit)?;
        rows.push((l, mode.i_l(), *mode.f_values().last().unwrap(), mode.f_prime_at_1()));
    }
    let mut text = String::from("l,I_l,F_l_at_1,F_l_prime_at_1\n");
    for (l, i_l, f1, fp1) in &rows {
        text.push_str(&format!("{l},{i_l:.16e},{f1:.16e},{fp1:.16e}\n"));
    }
    fs::write(dir.join("modes.csv"), text)?;
    Ok(format!("modes={} l_max={}", rows.len(), config.l_max))
}

fn run_spectrum(config: &RunConfig) -> Result<String, CliError> {
    let pipeline = build_pipeline(config)?;
    let gammas = effective_gammas(config, &pipeline)?;
    let report = spectrum_for(config, &pipeline)?;
    let dir = create_out_dir(config)?;
    for (k, &gamma) in gammas.iter().enumerate() {
        let suffix = if gammas.len() == 1 { String::new() } else { format!("_{k}") };
        let file = fs::File::create(dir.join(format!("spectrum{suffix}.csv")))?;
        report.write_csv(gamma, BufWriter::new(file))?;
        let mut summary = report.summary_json(gamma);
        summary["gamma"] = serde_json::json!(gamma);
        summary["gamma_raw"] = serde_json::json!(config.gamma_values[k]);
        summary["r_s"] = serde_json::json!(pipeline.r_s);
        write_json(&dir.join(format!("spectrum{suffix}.json")), &summary)?;
    }
    let first = report.classify(gammas[0]);
    Ok(format!(
        "gamma_star={:.16e} l_star={} stable={}",
        report.gamma_star(),
        report.l_star(),
        stability_word(first.stable)
    ))
}

fn run_threshold(config: &RunConfig) -> Result<String, CliError> {
    let pipeline = build_pipeline(config)?;
    let report = spectrum_for(config, &pipeline)?;
    let dir = create_out_dir(config)?;
    let model_gamma = pipeline.fns_unit.gamma();
    let classified = report.classify(model_gamma);
    let json = serde_json::json!({
        "gamma_star": report.gamma_star(),
        "l_star": report.l_star(),
        "tie": report.tie_flag(),
        "gamma_tilde_star": report.gamma_tilde_star(),
        "l_tilde_star": report.l_tilde_star(),
        "alpha_0": report.alpha_0(),
        "l_max_used": report.l_max(),
        "certificate": report.certificate(),
        "r_s": pipeline.r_s,
        "model_gamma_effective": model_gamma,
        "stable": classified.stable,
    });
    write_json(&dir.join("threshold.json"), &json)?;
    Ok(format!(
        "gamma_star={:.16e} l_star={} stable={}",
        report.gamma_star(),
        report.l_star(),
        stability_word(classified.stable)
    ))
}

fn run_eigenmode(config: &RunConfig) -> Result<String, CliError> {
    let pipeline = build_pipeline(config)?;
    let gammas = effective_gammas(config, &pipeline)?;
    let dir = create_out_dir(config)?;
    let mut worst_residual: f64 = 0.0;
    let mut worst_multiplier: f64 = 0.0;
    let mut count = 0usize;
    for (k, &gamma) in gammas.iter().enumerate() {
        for l in 2..=config.l_max {
            let mode = solve_mode(l, &pipeline.st_unit, &pipeline.fns_unit)?;
            let fields = assemble_fields(l, 0, gamma, &mode, &pipeline.st_unit, &pipeline.fns_unit)?;
            let residuals = residual_report(&fields, &mode, &pipeline.st_unit, &pipeline.fns_unit)?;
            let file = fs::File::create(dir.join(format!("eigenmode_l{l}_g{k}.csv")))?;
            fields.write_csv(BufWriter::new(file))?;
            write_json(
                &dir.join(format!("eigenmode_l{l}_g{k}.json")),
                &fields.dump_json(&residuals),
            )?;
            worst_residual = worst_residual.max(residuals.max_field_residual());
            worst_multiplier = worst_multiplier.max(residuals.multiplier_cross_check);
            count += 1;
        }
    }
    if worst_residual > config.tolerances.residual_max {
        return Err(CliError::ResidualBreach(format!(
            "field-equation residual {worst_residual:e} exceeds {:e}",
            config.tolerances.residual_max
        )));
    }
    if worst_multiplier > config.tolerances.multiplier_max {
        return Err(CliError::ResidualBreach(format!(
            "multiplier cross-check {worst_multiplier:e} exceeds {:e}",
            config.tolerances.multiplier_max
        )));
    }
    Ok(format!(
        "eigenmodes={count} max_residual={worst_residual:.3e} max_multiplier_mismatch={worst_multiplier:.3e}"
    ))
}

fn run_evolve(config: &RunConfig) -> Result<String, CliError> {
    let pipeline = build_pipeline(config)?;
    let gammas = effective_gammas(config, &pipeline)?;
    let report = spectrum_for(config, &pipeline)?;
    let dir = create_out_dir(config)?;
    let state = PerturbationState::random(config.l_max.min(report.l_max()), config.seed, DegreeBand::All);
    let mut last_rate = f64::NAN;
    for (k, &gamma) in gammas.iter().enumerate() {
        let suffix = if gammas.len() == 1 { String::new() } else { format!("_{k}") };
        let samples = config.evolve.samples;
        let total =
            log_norm_trajectory(&state, &report, gamma, 0.0, config.evolve.t_end, samples, DegreeBand::All)?;
        let band =
            log_norm_trajectory(&state, &report, gamma, 0.0, config.evolve.t_end, samples, DegreeBand::AtLeast(2))?;
        let mut records = Vec::with_capacity(samples);
        for i in 0..samples {
            let rate = if i + 1 >= 10 {
                // rebase the log samples so the fit sees positive norms
                let window = &band[..=i];
                let peak = window.iter().fold(f64::NEG_INFINITY, |a, &(_, v)| a.max(v));
                let rebased: Vec<(f64, f64)> =
                    window.iter().map(|&(t, v)| (t, (v - peak).exp())).collect();
                measured_rate(&rebased)?
            } else {
                f64::NAN
            };
            records.push(TrajectoryRecord {
                t: total[i].0,
                norm_total: total[i].1.exp(),
                norm_l_ge_2: band[i].1.exp(),
                rate_estimate: rate,
            });
            last_rate = records.last().unwrap().rate_estimate;
        }
        let file = fs::File::create(dir.join(format!("evolve{suffix}.csv")))?;
        dynamics::write_trajectory_csv(&records, BufWriter::new(file))?;

        let final_state = dynamics::evolve(&state, &report, gamma, config.evolve.t_end)?;
        let snap = boundary_snapshot(
            &final_state,
            config.evolve.epsilon,
            config.evolve.snapshot_theta,
            config.evolve.snapshot_phi,
        );
        let file = fs::File::create(dir.join(format!("snapshot{suffix}.csv")))?;
        snap.write_csv(BufWriter::new(file))?;
    }
    let expected = report.max_alpha_l_ge_2(*gammas.last().unwrap());
    Ok(format!("rate_l_ge_2={last_rate:.6e} spectral_bound={expected:.6e}"))
}

fn run_compare_darcy(config: &RunConfig) -> Result<String, CliError> {
    let pipeline = build_pipeline(config)?;
    let report = spectrum_for(config, &pipeline)?;
    let dir = create_out_dir(config)?;
    let mut text = String::from("l,gamma_l,gamma_tilde_l,ratio\n");
    for l in 2..=report.l_max() {
        let g = report.gamma_l(l).unwrap();
        let gt = report.gamma_tilde_l(l).unwrap();
        text.push_str(&format!("{l},{g:.16e},{gt:.16e},{:.16e}\n", gt / g));
    }
    fs::write(dir.join("darcy.csv"), text)?;
    Ok(format!(
        "gamma_star={:.16e} gamma_tilde_star={:.16e} l_star={} l_tilde_star={}",
        report.gamma_star(),
        report.gamma_tilde_star(),
        report.l_star(),
        report.l_tilde_star()
    ))
}
