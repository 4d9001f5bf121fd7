//! Numerical toolkit for a free-boundary tumor-growth model with Stokes flow.
//!
//! The library solves the radially symmetric stationary state of the model,
//! decomposes the linearization around it degree by degree in spherical
//! harmonics, evaluates the per-degree surface-tension thresholds
//! `gamma_l` and the global threshold `gamma_star`, reconstructs the full
//! linearized interior fields for a single harmonic, and simulates the
//! linearized boundary dynamics as a diagonal flow on harmonic coefficients.
//!
//! Module map:
//! * [`kernels`] - ODE integration, quadrature, root finding, Bessel oracle.
//! * [`model`] - constitutive laws (nutrient consumption and proliferation).
//! * [`stationary`] - radially symmetric stationary solver.
//! * [`modes`] - degree-l nutrient mode profiles and their moments.
//! * [`spectrum`] - multiplier eigenvalues, thresholds, Darcy comparison.
//! * [`eigenmode`] - full interior field reconstruction and residual checks.
//! * [`dynamics`] - spectral simulation of the linearized boundary motion.
//! * [`cli`] - batch front end emitting CSV/JSON artifacts.

pub mod cli;
pub mod dynamics;
pub mod eigenmode;
pub mod kernels;
pub mod model;
pub mod modes;
pub mod spectrum;
pub mod stationary;

pub use model::{ModelFunctions, ModelParams};
pub use modes::ModeProfile;
pub use spectrum::SpectrumReport;
pub use stationary::RadialStationary;
