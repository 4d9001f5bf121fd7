//! Shared numerical primitives: adaptive ODE initial-value integration,
//! adaptive quadrature, bracketed root finding, a modified spherical Bessel
//! oracle, radial grids and cubic interpolation.
//!
//! All operations here are pure functions of their arguments and safe to
//! call concurrently.

pub mod bessel;
pub mod interp;
pub mod ode;
pub mod quad;
pub mod root;

use thiserror::Error;

pub use bessel::{bessel_i_ratio, bessel_i_spherical};
pub use interp::CubicHermite;
pub use ode::{integrate_ivp, Trajectory};
pub use quad::{cumulative_integral, gauss_legendre, quad};
pub use root::find_root;

/// Errors raised by the numerical kernels.
#[derive(Debug, Error)]
pub enum KernelError {
    #[error("invalid tolerance: {0}")]
    InvalidTolerance(String),
    #[error("invalid interval [{lo}, {hi}]")]
    InvalidInterval { lo: f64, hi: f64 },
    #[error("step size underflow at r = {r} (h = {h:e}); problem looks stiff or singular")]
    StepUnderflow { r: f64, h: f64 },
    #[error("right-hand side returned a non-finite value at r = {r}")]
    NonFiniteRhs { r: f64 },
    #[error("step limit {max_steps} exceeded at r = {r}")]
    MaxSteps { r: f64, max_steps: usize },
    #[error("integrand returned a non-finite value at x = {x}")]
    NonFiniteIntegrand { x: f64 },
    #[error("quadrature stalled: error estimate {error:e} after {intervals} subintervals")]
    QuadNotConverged { error: f64, intervals: usize },
    #[error("no sign change on [{lo}, {hi}]: f(lo) = {f_lo:e}, f(hi) = {f_hi:e}")]
    NoSignChange { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },
    #[error("root finder did not converge within {0} iterations")]
    RootMaxIter(usize),
    #[error("argument out of domain: {0}")]
    Domain(String),
    #[error("overflow: {0}")]
    RangeOverflow(String),
    #[error("grid invariant violated: {0}")]
    InvalidGrid(String),
}

/// Relative/absolute error tolerance pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
}

impl Tolerance {
    pub fn new(rel: f64, abs: f64) -> Result<Self, KernelError> {
        if !(rel > 0.0 && rel.is_finite()) {
            return Err(KernelError::InvalidTolerance(format!(
                "rel must be finite and > 0, got {rel}"
            )));
        }
        if !(abs > 0.0 && abs.is_finite()) {
            return Err(KernelError::InvalidTolerance(format!(
                "abs must be finite and > 0, got {abs}"
            )));
        }
        Ok(Self { rel, abs })
    }

    /// Tolerance with an absolute floor so small that error control is
    /// effectively relative. Used by shoot-and-scale solves where the state
    /// spans hundreds of orders of magnitude.
    pub fn pure_relative(rel: f64) -> Result<Self, KernelError> {
        Self::new(rel, 1e-290)
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { rel: 1e-11, abs: 1e-12 }
    }
}

/// Strictly increasing radial grid on `[0, R]` with last node exactly `R`.
#[derive(Debug, Clone)]
pub struct RadialGrid {
    nodes: Vec<f64>,
    r_max: f64,
}

impl RadialGrid {
    /// Chebyshev-clustered nodes on `[0, r_max]`: dense near both the center
    /// and the boundary, where the radial profiles need resolution.
    pub fn chebyshev(n_nodes: usize, r_max: f64) -> Result<Self, KernelError> {
        if n_nodes < 2 {
            return Err(KernelError::InvalidGrid("need at least 2 nodes".into()));
        }
        if !(r_max > 0.0 && r_max.is_finite()) {
            return Err(KernelError::InvalidGrid(format!("r_max must be finite and > 0, got {r_max}")));
        }
        let m = (n_nodes - 1) as f64;
        let mut nodes: Vec<f64> = (0..n_nodes)
            .map(|j| r_max * 0.5 * (1.0 - (std::f64::consts::PI * j as f64 / m).cos()))
            .collect();
        nodes[0] = 0.0;
        *nodes.last_mut().unwrap() = r_max;
        Self::from_nodes(nodes)
    }

    /// Uniform nodes on `[0, r_max]`.
    pub fn uniform(n_nodes: usize, r_max: f64) -> Result<Self, KernelError> {
        if n_nodes < 2 {
            return Err(KernelError::InvalidGrid("need at least 2 nodes".into()));
        }
        let m = (n_nodes - 1) as f64;
        let mut nodes: Vec<f64> = (0..n_nodes).map(|j| r_max * j as f64 / m).collect();
        *nodes.last_mut().unwrap() = r_max;
        Self::from_nodes(nodes)
    }

    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self, KernelError> {
        if nodes.len() < 2 {
            return Err(KernelError::InvalidGrid("need at least 2 nodes".into()));
        }
        if !nodes.iter().all(|r| r.is_finite()) {
            return Err(KernelError::InvalidGrid("non-finite node".into()));
        }
        if nodes[0] < 0.0 {
            return Err(KernelError::InvalidGrid(format!("first node {} < 0", nodes[0])));
        }
        if !nodes.windows(2).all(|w| w[0] < w[1]) {
            return Err(KernelError::InvalidGrid("nodes must be strictly increasing".into()));
        }
        let r_max = *nodes.last().unwrap();
        Ok(Self { nodes, r_max })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerance_rejects_bad_values() {
        assert!(Tolerance::new(0.0, 1e-12).is_err());
        assert!(Tolerance::new(1e-10, -1.0).is_err());
        assert!(Tolerance::new(f64::NAN, 1e-12).is_err());
        assert!(Tolerance::new(1e-10, f64::INFINITY).is_err());
        assert!(Tolerance::new(1e-10, 1e-12).is_ok());
    }

    #[test]
    fn chebyshev_grid_invariants() {
        let g = RadialGrid::chebyshev(65, 2.5).unwrap();
        assert_eq!(g.len(), 65);
        assert_eq!(g.nodes()[0], 0.0);
        assert_eq!(*g.nodes().last().unwrap(), 2.5);
        assert!(g.nodes().windows(2).all(|w| w[0] < w[1]));
        // clustering: first gap much smaller than the middle gap
        let first_gap = g.nodes()[1] - g.nodes()[0];
        let mid_gap = g.nodes()[33] - g.nodes()[32];
        assert!(first_gap < 0.05 * mid_gap);
    }

    #[test]
    fn grid_rejects_unsorted() {
        assert!(RadialGrid::from_nodes(vec![0.0, 0.5, 0.5, 1.0]).is_err());
        assert!(RadialGrid::from_nodes(vec![-0.1, 0.5, 1.0]).is_err());
    }
}
