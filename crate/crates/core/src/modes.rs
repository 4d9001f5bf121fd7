//! Degree-l linearized nutrient modes.
//!
//! For each spherical-harmonic degree `l` the radial factor `F_l` solves
//! `F'' + (2/r) F' - l(l+1)/r^2 F = f'(sigma_s) F` on `(0, 1)`, regular at
//! the center (growing like `r^l`) with boundary value
//! `F_l(1) = -sigma_s'(1)`. The solver also produces the moment
//! `I_l = integral_0^1 g'(sigma_s) F_l r^(l+2) dr` that feeds the
//! per-degree thresholds.
//!
//! Two routes share the interface:
//! * direct shoot-and-scale on `[u, u']` seeded with the `r^l` series -
//!   exact boundary value by linearity, used while the seed stays inside
//!   normal floating-point range;
//! * a log-derivative (Riccati) form `z = u'/u - l/r`, stable for
//!   arbitrarily large degrees, reconstructing
//!   `F_l = -sigma_s'(1) r^l exp(-integral_r^1 z)`.
//!
//! Everything is tabulated as the regularized ratio `rho(r) = F_l(r)/r^l`,
//! which stays order-one all the way to the center.

use thiserror::Error;

use crate::kernels::{integrate_ivp, quad, CubicHermite, KernelError, Tolerance};
use crate::model::ModelFunctions;
use crate::stationary::RadialStationary;

/// Largest degree handled by direct integration; the `r^l` seed at the
/// l-scaled start radius stays a normal float with margin below this.
const DIRECT_MAX: u32 = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    Direct,
    Riccati,
}

#[derive(Debug, Error)]
pub enum ModeError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("mode solver requires a unit stationary radius, got R_s = {0}")]
    NotUnitRadius(f64),
    #[error("degree {l} overflows direct integration; largest stable degree is {max_stable}")]
    DegreeOverflow { l: u32, max_stable: u32 },
}

/// Radial factor of one nutrient mode together with its moment integral.
#[derive(Debug)]
pub struct ModeProfile {
    l: u32,
    f_values: Vec<f64>,
    f_prime_values: Vec<f64>,
    i_l: f64,
    plain_moment: f64,
    f_prime_at_1: f64,
    ratio: CubicHermite,
    method: SolveMethod,
}

impl ModeProfile {
    pub fn l(&self) -> u32 {
        self.l
    }

    /// Moment `integral_0^1 g'(sigma_s) F_l r^(l+2) dr`.
    pub fn i_l(&self) -> f64 {
        self.i_l
    }

    /// Unweighted moment `integral_0^1 F_l r^(l+2) dr` (the comparison
    /// threshold weights it with the constant `g'(1)` instead).
    pub fn plain_moment(&self) -> f64 {
        self.plain_moment
    }

    /// Boundary derivative `F_l'(1)`.
    pub fn f_prime_at_1(&self) -> f64 {
        self.f_prime_at_1
    }

    /// `F_l` at the stationary grid nodes.
    pub fn f_values(&self) -> &[f64] {
        &self.f_values
    }

    /// `F_l'` at the stationary grid nodes.
    pub fn f_prime_values(&self) -> &[f64] {
        &self.f_prime_values
    }

    pub fn method(&self) -> SolveMethod {
        self.method
    }

    /// Regularized profile `rho(r) = F_l(r) / r^l`.
    pub fn ratio_at(&self, r: f64) -> f64 {
        self.ratio.eval(r)
    }

    pub fn ratio_prime_at(&self, r: f64) -> f64 {
        self.ratio.eval_deriv(r)
    }

    pub fn f_at(&self, r: f64) -> f64 {
        r.powi(self.l as i32) * self.ratio.eval(r)
    }

    pub fn f_prime_at(&self, r: f64) -> f64 {
        let l = self.l as i32;
        if r == 0.0 {
            return match self.l {
                0 => 0.0,
                1 => self.ratio.eval(0.0),
                _ => 0.0,
            };
        }
        (self.l as f64) * r.powi(l - 1) * self.ratio.eval(r) + r.powi(l) * self.ratio.eval_deriv(r)
    }
}

fn start_radius(l: u32) -> f64 {
    (1e-3 / (l as f64 + 1.0)).max(1e-6)
}

fn largest_direct_degree() -> u32 {
    // largest l with start_radius(l)^l above ~1e-280
    (2..=2000)
        .take_while(|&l| (l as f64) * start_radius(l).ln() > -644.8)
        .last()
        .unwrap_or(2)
}

/// Solve the degree-l mode on a unit-radius stationary state.
pub fn solve_mode(
    l: u32,
    st: &RadialStationary,
    fns: &ModelFunctions,
) -> Result<ModeProfile, ModeError> {
    let method = if l <= DIRECT_MAX { SolveMethod::Direct } else { SolveMethod::Riccati };
    solve_mode_with(l, st, fns, method)
}

/// Solve with an explicit method choice (the two routes agree on moderate
/// degrees; tests exercise the overlap).
pub fn solve_mode_with(
    l: u32,
    st: &RadialStationary,
    fns: &ModelFunctions,
    method: SolveMethod,
) -> Result<ModeProfile, ModeError> {
    if (st.r_s() - 1.0).abs() > 1e-12 {
        return Err(ModeError::NotUnitRadius(st.r_s()));
    }
    match method {
        SolveMethod::Direct => solve_direct(l, st, fns),
        SolveMethod::Riccati => solve_riccati(l, st, fns),
    }
}

fn interior_stops(st: &RadialStationary, r0: f64) -> Vec<f64> {
    st.grid()
        .nodes()
        .iter()
        .copied()
        .filter(|&r| r > r0 && r < 1.0)
        .collect()
}

fn moment_integral(
    l: u32,
    ratio: &CubicHermite,
    weight: impl Fn(f64) -> f64,
) -> Result<f64, KernelError> {
    let tol = Tolerance { rel: 1e-12, abs: 1e-13 };
    let power = (2 * l + 2) as i32;
    quad(|r| weight(r) * ratio.eval(r) * r.powi(power), 0.0, 1.0, &tol)
}

fn solve_direct(
    l: u32,
    st: &RadialStationary,
    fns: &ModelFunctions,
) -> Result<ModeProfile, ModeError> {
    let r0 = start_radius(l);
    let seed = r0.powi(l as i32);
    if seed < 1e-280 {
        return Err(ModeError::DegreeOverflow { l, max_stable: largest_direct_degree() });
    }
    let fp0 = fns.f_prime(st.sigma0());
    let q = fp0 / (4.0 * l as f64 + 6.0);
    let lf = l as f64;
    let y0 = [seed * (1.0 + q * r0 * r0), seed / r0 * (lf + (lf + 2.0) * q * r0 * r0)];
    let ll1 = lf * (lf + 1.0);
    let traj = integrate_ivp(
        |r, y, dy| {
            dy[0] = y[1];
            dy[1] = (ll1 / (r * r) + fns.f_prime(st.sigma_at(r))) * y[0] - 2.0 / r * y[1];
        },
        r0,
        1.0,
        &y0,
        &Tolerance::pure_relative(1e-12)?,
        &interior_stops(st, r0),
    )?;
    let u1 = traj.final_state()[0];
    if !(u1.is_finite() && u1 > 0.0) {
        return Err(ModeError::DegreeOverflow { l, max_stable: largest_direct_degree() });
    }
    let scale = -st.sigma_prime_at_boundary() / u1;

    // regularized ratio rho = scale * u / r^l at the grid nodes
    let nodes = st.grid().nodes();
    let mut rho = Vec::with_capacity(nodes.len());
    let mut rho_prime = Vec::with_capacity(nodes.len());
    for &r in nodes {
        if r < r0 {
            rho.push(scale * seed / r0.powi(l as i32) * (1.0 + q * r * r));
            rho_prime.push(scale * seed / r0.powi(l as i32) * 2.0 * q * r);
        } else {
            let u = traj.component(r, 0);
            let up = traj.component(r, 1);
            let rl = r.powi(l as i32);
            let value = scale * u / rl;
            rho.push(value);
            rho_prime.push(scale * up / rl - lf * value / r);
        }
    }
    // the series prefactor above is exactly scale * (1 + O(r^2)); tidy the
    // center pair so rho(0) is the clean limit
    let ratio = CubicHermite::from_values_and_derivs(nodes.to_vec(), rho, rho_prime)?;
    finish(l, st, fns, ratio, SolveMethod::Direct)
}

fn solve_riccati(
    l: u32,
    st: &RadialStationary,
    fns: &ModelFunctions,
) -> Result<ModeProfile, ModeError> {
    let r0 = start_radius(l);
    let lf = l as f64;
    let fp0 = fns.f_prime(st.sigma0());
    // z = u'/u - l/r solves z' = f'(sigma_s) - (2l+2) z / r - z^2, z(0) = 0;
    // Y accumulates integral of z so that rho = -sigma'(1) exp(Y(r) - Y(1)).
    let z0 = fp0 * r0 / (2.0 * lf + 3.0);
    let y0 = [z0, 0.5 * fp0 * r0 * r0 / (2.0 * lf + 3.0)];
    let traj = integrate_ivp(
        |r, y, dy| {
            let z = y[0];
            dy[0] = fns.f_prime(st.sigma_at(r)) - (2.0 * lf + 2.0) * z / r - z * z;
            dy[1] = z;
        },
        r0,
        1.0,
        &y0,
        &Tolerance { rel: 1e-12, abs: 1e-14 },
        &interior_stops(st, r0),
    )?;
    let y_at_1 = traj.final_state()[1];
    let boundary = -st.sigma_prime_at_boundary();

    let nodes = st.grid().nodes();
    let mut rho = Vec::with_capacity(nodes.len());
    let mut rho_prime = Vec::with_capacity(nodes.len());
    let q = fp0 / (4.0 * lf + 6.0);
    for &r in nodes {
        if r < r0 {
            let base = boundary * (-y_at_1).exp();
            rho.push(base * (1.0 + q * r * r));
            rho_prime.push(base * 2.0 * q * r);
        } else {
            let z = traj.component(r, 0);
            let y = traj.component(r, 1);
            let value = boundary * (y - y_at_1).exp();
            rho.push(value);
            rho_prime.push(value * z);
        }
    }
    let ratio = CubicHermite::from_values_and_derivs(nodes.to_vec(), rho, rho_prime)?;
    finish(l, st, fns, ratio, SolveMethod::Riccati)
}

fn finish(
    l: u32,
    st: &RadialStationary,
    fns: &ModelFunctions,
    ratio: CubicHermite,
    method: SolveMethod,
) -> Result<ModeProfile, ModeError> {
    let boundary_residual = ratio.eval(1.0) + st.sigma_prime_at_boundary();
    debug_assert!(
        boundary_residual.abs() < 1e-12,
        "boundary condition violated by {boundary_residual:e}"
    );
    let nodes = st.grid().nodes();
    let lf = l as f64;
    let mut f_values = Vec::with_capacity(nodes.len());
    let mut f_prime_values = Vec::with_capacity(nodes.len());
    for &r in nodes {
        let rl = r.powi(l as i32);
        let value = rl * ratio.eval(r);
        f_values.push(value);
        let deriv = if r == 0.0 {
            if l == 1 {
                ratio.eval(0.0)
            } else {
                0.0
            }
        } else {
            lf * rl / r * ratio.eval(r) + rl * ratio.eval_deriv(r)
        };
        f_prime_values.push(deriv);
    }
    let f_prime_at_1 = *f_prime_values.last().unwrap();
    let i_l = moment_integral(l, &ratio, |r| fns.g_prime(st.sigma_at(r)))?;
    let plain_moment = moment_integral(l, &ratio, |_| 1.0)?;
    Ok(ModeProfile { l, f_values, f_prime_values, i_l, plain_moment, f_prime_at_1, ratio, method })
}
