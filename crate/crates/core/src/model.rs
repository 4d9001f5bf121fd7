//! Constitutive laws of the model: nutrient consumption `f` and cell
//! proliferation `g`, with validation of the structural assumptions
//! (smooth increasing laws, `f(0) = 0`, a proliferation balance point
//! `sigma_c` strictly below the exterior concentration).
//!
//! All downstream solvers consume only [`ModelFunctions`]; the canonical
//! linear pair `f = lambda*sigma`, `g = mu*(sigma - sigma_c)` is provided
//! here together with the normalization that absorbs the exterior
//! concentration and the viscosity into the remaining constants.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Raw, un-normalized parameters of the canonical linear model.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// Nutrient consumption rate, `f(sigma) = lambda * sigma`.
    pub lambda: f64,
    /// Proliferation rate, `g(sigma) = mu * (sigma - sigma_c)`.
    pub mu: f64,
    /// Proliferation balance concentration (root of `g`).
    pub sigma_c: f64,
    /// Exterior nutrient concentration.
    pub sigma_bar: f64,
    /// Fluid viscosity.
    pub nu: f64,
    /// Surface tension coefficient (non-negative).
    pub gamma: f64,
}

impl ModelParams {
    /// Canonical defaults: unit rates, exterior concentration and viscosity,
    /// with `sigma_c` placing the stationary radius at 1.
    pub fn canonical(sigma_c: f64, gamma: f64) -> Self {
        Self { lambda: 1.0, mu: 1.0, sigma_c, sigma_bar: 1.0, nu: 1.0, gamma }
    }

    fn validate(&self) -> Result<(), ModelError> {
        let mut violations = Vec::new();
        for (name, v) in [
            ("lambda", self.lambda),
            ("mu", self.mu),
            ("sigma_bar", self.sigma_bar),
            ("nu", self.nu),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                violations.push(format!("{name} must be finite and > 0, got {v}"));
            }
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            violations.push(format!("gamma must be finite and >= 0, got {}", self.gamma));
        }
        if !(self.sigma_c > 0.0 && self.sigma_c < self.sigma_bar) {
            violations.push(format!(
                "assumption (A3): need 0 < sigma_c < sigma_bar, got sigma_c = {}, sigma_bar = {}",
                self.sigma_c, self.sigma_bar
            ));
        }
        if violations.is_empty() {
            Ok(())
        } else {
            Err(ModelError::Validation(violations))
        }
    }
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("model validation failed: {}", .0.join("; "))]
    Validation(Vec<String>),
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Normalized constitutive laws consumed by every solver in the crate.
///
/// Values are immutable after construction and cheap to clone (shared
/// closures), so they can be read concurrently from solver workers.
#[derive(Clone)]
pub struct ModelFunctions {
    f: ScalarFn,
    f_prime: ScalarFn,
    g: ScalarFn,
    g_prime: ScalarFn,
    sigma_c: f64,
    /// Effective surface tension after normalization (`gamma / nu`).
    gamma: f64,
}

impl fmt::Debug for ModelFunctions {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        fm.debug_struct("ModelFunctions")
            .field("sigma_c", &self.sigma_c)
            .field("gamma", &self.gamma)
            .field("f(1)", &(self.f)(1.0))
            .field("g(1)", &(self.g)(1.0))
            .finish()
    }
}

impl ModelFunctions {
    /// Wrap user-supplied laws. `sigma_c` must be the root of `g` and the
    /// effective `gamma` is taken as already normalized.
    pub fn custom(
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        f_prime: impl Fn(f64) -> f64 + Send + Sync + 'static,
        g: impl Fn(f64) -> f64 + Send + Sync + 'static,
        g_prime: impl Fn(f64) -> f64 + Send + Sync + 'static,
        sigma_c: f64,
        gamma: f64,
    ) -> Self {
        Self {
            f: Arc::new(f),
            f_prime: Arc::new(f_prime),
            g: Arc::new(g),
            g_prime: Arc::new(g_prime),
            sigma_c,
            gamma,
        }
    }

    pub fn f(&self, sigma: f64) -> f64 {
        (self.f)(sigma)
    }

    pub fn f_prime(&self, sigma: f64) -> f64 {
        (self.f_prime)(sigma)
    }

    pub fn g(&self, sigma: f64) -> f64 {
        (self.g)(sigma)
    }

    pub fn g_prime(&self, sigma: f64) -> f64 {
        (self.g_prime)(sigma)
    }

    pub fn sigma_c(&self) -> f64 {
        self.sigma_c
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Copy with a different effective surface tension.
    pub fn with_gamma(&self, gamma: f64) -> Self {
        let mut out = self.clone();
        out.gamma = gamma;
        out
    }

    /// Copy with `f`, `g` both scaled by a positive constant (used when the
    /// radial variable is rescaled to the unit ball) and the surface tension
    /// scaled accordingly.
    pub(crate) fn scaled(&self, law_scale: f64, gamma_scale: f64) -> Self {
        let f = self.f.clone();
        let fp = self.f_prime.clone();
        let g = self.g.clone();
        let gp = self.g_prime.clone();
        Self {
            f: Arc::new(move |s| law_scale * f(s)),
            f_prime: Arc::new(move |s| law_scale * fp(s)),
            g: Arc::new(move |s| law_scale * g(s)),
            g_prime: Arc::new(move |s| law_scale * gp(s)),
            sigma_c: self.sigma_c,
            gamma: self.gamma * gamma_scale,
        }
    }
}

/// Build the normalized canonical linear model.
///
/// The normalization rescales the nutrient by `sigma_bar`, the pressure by
/// `nu`, and the surface tension to `gamma / nu`; for the linear laws this
/// leaves `lambda` unchanged, maps `mu -> mu * sigma_bar` and
/// `sigma_c -> sigma_c / sigma_bar`, after which the exterior concentration
/// and the viscosity are both 1.
pub fn canonical_model(params: &ModelParams) -> Result<ModelFunctions, ModelError> {
    params.validate()?;
    let lambda = params.lambda;
    let mu = params.mu * params.sigma_bar;
    let sigma_c = params.sigma_c / params.sigma_bar;
    let gamma = params.gamma / params.nu;
    Ok(ModelFunctions {
        f: Arc::new(move |s| lambda * s),
        f_prime: Arc::new(move |_| lambda),
        g: Arc::new(move |s| mu * (s - sigma_c)),
        g_prime: Arc::new(move |_| mu),
        sigma_c,
        gamma,
    })
}

/// Pass/fail record for the structural assumptions, checked on a sampled
/// grid of `[0, sigma_max]`.
#[derive(Debug, Clone, Serialize)]
pub struct AssumptionReport {
    /// `f(0) = 0` and `f' > 0` on the sampled range.
    pub a1: bool,
    /// `g' > 0` on the sampled range and `g(sigma_c) = 0`.
    pub a2: bool,
    /// `sigma_c < 1` after normalization.
    pub a3: bool,
    pub violations: Vec<String>,
}

impl AssumptionReport {
    pub fn all_pass(&self) -> bool {
        self.a1 && self.a2 && self.a3
    }
}

const SAMPLES: usize = 1001;
const POSITIVITY_FLOOR: f64 = 1e-14;

/// Check the structural assumptions on `[0, sigma_max]` (`sigma_max >= 1`).
pub fn validate_assumptions(fns: &ModelFunctions, sigma_max: f64) -> AssumptionReport {
    assert!(sigma_max >= 1.0, "sigma_max must be at least 1");
    let mut violations = Vec::new();

    let f0 = fns.f(0.0);
    let mut a1 = f0.abs() < 1e-12;
    if !a1 {
        violations.push(format!("(A1) f(0) = {f0:e}, expected 0"));
    }
    let mut fp_ok = true;
    let mut gp_ok = true;
    for i in 0..SAMPLES {
        let s = sigma_max * i as f64 / (SAMPLES - 1) as f64;
        if fp_ok && fns.f_prime(s) <= POSITIVITY_FLOOR {
            violations.push(format!("(A1) f'({s}) = {:e} not strictly positive", fns.f_prime(s)));
            fp_ok = false;
        }
        if gp_ok && fns.g_prime(s) <= POSITIVITY_FLOOR {
            violations.push(format!("(A2) g'({s}) = {:e} not strictly positive", fns.g_prime(s)));
            gp_ok = false;
        }
    }
    a1 = a1 && fp_ok;

    let g_at_root = fns.g(fns.sigma_c());
    let mut a2 = gp_ok;
    if g_at_root.abs() >= 1e-10 {
        violations.push(format!("(A2) g(sigma_c) = {g_at_root:e}, expected 0"));
        a2 = false;
    }
    if fns.sigma_c() <= 0.0 {
        violations.push(format!("(A2) sigma_c = {} not positive", fns.sigma_c()));
        a2 = false;
    }

    let a3 = fns.sigma_c() < 1.0;
    if !a3 {
        violations.push(format!("(A3) sigma_c = {} must be < 1 after normalization", fns.sigma_c()));
    }

    AssumptionReport { a1, a2, a3, violations }
}
