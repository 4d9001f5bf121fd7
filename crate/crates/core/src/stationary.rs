//! Radially symmetric stationary solver.
//!
//! The stationary state consists of a nutrient profile solving
//! `sigma'' + (2/r) sigma' = f(sigma)` with `sigma'(0) = 0`, `sigma(R) = 1`,
//! a radial velocity `v(r) = r^-2 * integral_0^r g(sigma) s^2 ds` vanishing
//! at both the center and the boundary, and the pressure
//! `p(r) = gamma/R + (4/3) g(sigma(r))`. The stationary radius `R_s` is the
//! root of the mass-balance residual `m(R) = integral_0^R g(sigma_R) r^2 dr`.

use std::io::Write;

use thiserror::Error;

use crate::kernels::{
    cumulative_integral, find_root, integrate_ivp, quad, CubicHermite, KernelError, RadialGrid,
    Tolerance, Trajectory,
};
use crate::model::ModelFunctions;

/// Series start radius for the regular center expansion.
const R_START: f64 = 1e-6;
/// Nodes in the tabulated profile grid.
const GRID_NODES: usize = 2049;
/// Default stationary-radius search bracket and its expansion cap.
const DEFAULT_BRACKET: (f64, f64) = (0.1, 20.0);
const BRACKET_CAP: f64 = 1e3;

#[derive(Debug, Error)]
pub enum StationaryError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(
        "shooting bracket not found: center values in [{lo:e}, {hi:e}] give boundary mismatches [{f_lo:e}, {f_hi:e}]"
    )]
    ShootingBracket { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },
    #[error("mass-balance residual has no sign change on [{lo}, {hi}]: m(lo) = {m_lo:e}, m(hi) = {m_hi:e}")]
    Bracketing { lo: f64, hi: f64, m_lo: f64, m_hi: f64 },
    #[error("multiple stationary radii found in the bracket: {0:?}; narrow the bracket to select one")]
    MultipleRoots(Vec<f64>),
    #[error("stationary postcondition violated: {0}")]
    Postcondition(String),
}

/// Nutrient profile on `[0, R]` from one converged shooting solve.
#[derive(Debug)]
pub struct SigmaProfile {
    r_max: f64,
    sigma0: f64,
    traj: Trajectory,
    sigma_prime_at_r: f64,
    f_at_center: f64,
    f_prime_at_center: f64,
}

impl SigmaProfile {
    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    /// Center value `sigma(0)`.
    pub fn sigma0(&self) -> f64 {
        self.sigma0
    }

    /// Boundary derivative `sigma'(R)`.
    pub fn sigma_prime_at_r(&self) -> f64 {
        self.sigma_prime_at_r
    }

    pub fn sigma_at(&self, r: f64) -> f64 {
        if r < R_START {
            // regular center series sigma0 (1 + ...) with O(r^6) error
            let a = self.f_at_center / 6.0;
            let b = self.f_prime_at_center * self.f_at_center / 120.0;
            self.sigma0 + a * r * r + b * r.powi(4)
        } else {
            self.traj.component(r, 0)
        }
    }

    pub fn sigma_prime_at(&self, r: f64) -> f64 {
        if r < R_START {
            let a = self.f_at_center / 6.0;
            let b = self.f_prime_at_center * self.f_at_center / 120.0;
            2.0 * a * r + 4.0 * b * r.powi(3)
        } else {
            self.traj.component(r, 1)
        }
    }
}

/// Solve the nutrient problem on `[0, R]` by shooting on the center value.
///
/// The boundary mismatch `sigma(R) - 1` is monotone in the center value
/// because `f` is increasing, so a bracket plus Brent converges.
pub fn solve_sigma_profile(
    fns: &ModelFunctions,
    r_max: f64,
    stops: &[f64],
) -> Result<SigmaProfile, StationaryError> {
    assert!(r_max > 0.0 && r_max.is_finite(), "R must be positive and finite");
    let shoot_tol = Tolerance::pure_relative(1e-12)?;
    let integrate = |sigma0: f64, stops: &[f64]| -> Result<Trajectory, KernelError> {
        let f0 = fns.f(sigma0);
        let y0 = [sigma0 + f0 * R_START * R_START / 6.0, f0 * R_START / 3.0];
        integrate_ivp(
            |r, y, dy| {
                dy[0] = y[1];
                dy[1] = fns.f(y[0]) - 2.0 / r * y[1];
            },
            R_START,
            r_max,
            &y0,
            &shoot_tol,
            stops,
        )
    };
    let mismatch = |sigma0: f64| -> Result<f64, KernelError> {
        Ok(integrate(sigma0, &[])?.final_state()[0] - 1.0)
    };

    // Bracket the center value: mismatch(1) > 0 since sigma grows; walk the
    // lower end down geometrically until the profile undershoots.
    let hi = 1.0;
    let f_hi = mismatch(hi)?;
    let mut lo = 0.25;
    let mut f_lo = mismatch(lo)?;
    while f_lo > 0.0 {
        lo *= 1e-2;
        if lo < 1e-300 {
            return Err(StationaryError::ShootingBracket { lo, hi, f_lo, f_hi });
        }
        f_lo = mismatch(lo)?;
    }
    if f_hi < 0.0 {
        return Err(StationaryError::ShootingBracket { lo, hi, f_lo, f_hi });
    }

    let mut inner_err: Option<KernelError> = None;
    let sigma0 = find_root(
        |s| match mismatch(s) {
            Ok(v) => v,
            Err(e) => {
                inner_err = Some(e);
                f64::NAN
            }
        },
        lo,
        hi,
        &Tolerance { rel: 4.0 * f64::EPSILON, abs: 1e-300 },
    );
    if let Some(e) = inner_err {
        return Err(e.into());
    }
    let sigma0 = sigma0?;

    let traj = integrate(sigma0, stops)?;
    let end = traj.final_state();
    Ok(SigmaProfile {
        r_max,
        sigma0,
        sigma_prime_at_r: end[1],
        f_at_center: fns.f(sigma0),
        f_prime_at_center: fns.f_prime(sigma0),
        traj,
    })
}

/// Mass-balance residual `m(R)`: net proliferation of the trial profile on
/// `[0, R]`. Its root is the stationary radius.
pub fn mass_balance_residual(fns: &ModelFunctions, r_max: f64) -> Result<f64, StationaryError> {
    let profile = solve_sigma_profile(fns, r_max, &[])?;
    mass_residual_of_profile(fns, &profile)
}

fn mass_residual_of_profile(
    fns: &ModelFunctions,
    profile: &SigmaProfile,
) -> Result<f64, StationaryError> {
    let tol = Tolerance { rel: 1e-12, abs: 1e-14 };
    let tail = quad(
        |r| fns.g(profile.sigma_at(r)) * r * r,
        R_START,
        profile.r_max(),
        &tol,
    )?;
    // center series head, O(R_START^5)
    let head = fns.g(profile.sigma0()) * R_START.powi(3) / 3.0;
    Ok(head + tail)
}

/// Tabulated stationary state with interpolable profiles.
#[derive(Debug)]
pub struct RadialStationary {
    r_s: f64,
    grid: RadialGrid,
    sigma: Vec<f64>,
    sigma_prime: Vec<f64>,
    v: Vec<f64>,
    p: Vec<f64>,
    sigma_prime_at_r: f64,
    sigma0: f64,
    mass_residual: f64,
    sigma_interp: CubicHermite,
    v_interp: CubicHermite,
    p_interp: CubicHermite,
}

impl RadialStationary {
    pub fn r_s(&self) -> f64 {
        self.r_s
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn sigma_values(&self) -> &[f64] {
        &self.sigma
    }

    pub fn sigma_prime_values(&self) -> &[f64] {
        &self.sigma_prime
    }

    pub fn v_values(&self) -> &[f64] {
        &self.v
    }

    pub fn p_values(&self) -> &[f64] {
        &self.p
    }

    /// Boundary derivative `sigma'(R_s)`.
    pub fn sigma_prime_at_boundary(&self) -> f64 {
        self.sigma_prime_at_r
    }

    /// Center value `sigma(0)`.
    pub fn sigma0(&self) -> f64 {
        self.sigma0
    }

    /// Residual `m(R_s)` left by the radius solve.
    pub fn mass_residual(&self) -> f64 {
        self.mass_residual
    }

    pub fn sigma_at(&self, r: f64) -> f64 {
        self.sigma_interp.eval(r)
    }

    pub fn sigma_prime_at(&self, r: f64) -> f64 {
        self.sigma_interp.eval_deriv(r)
    }

    pub fn v_at(&self, r: f64) -> f64 {
        self.v_interp.eval(r)
    }

    pub fn p_at(&self, r: f64) -> f64 {
        self.p_interp.eval(r)
    }

    fn from_profile(
        fns: &ModelFunctions,
        profile: &SigmaProfile,
        mass_residual: f64,
    ) -> Result<Self, StationaryError> {
        let r_s = profile.r_max();
        let grid = RadialGrid::chebyshev(GRID_NODES, r_s)?;
        let n = grid.len();
        let nodes = grid.nodes();

        let mut sigma: Vec<f64> = nodes.iter().map(|&r| profile.sigma_at(r)).collect();
        let sigma_prime: Vec<f64> = nodes.iter().map(|&r| profile.sigma_prime_at(r)).collect();
        // The boundary value is imposed by the problem; the shooting solve
        // leaves a residual at rounding level which we fold into the node.
        if (sigma[n - 1] - 1.0).abs() > 1e-10 {
            return Err(StationaryError::Postcondition(format!(
                "sigma(R) = {} after shooting, expected 1",
                sigma[n - 1]
            )));
        }
        sigma[n - 1] = 1.0;

        let sigma_interp =
            CubicHermite::from_values_and_derivs(nodes.to_vec(), sigma.clone(), sigma_prime.clone())?;

        // v(r) = r^-2 * integral_0^r g(sigma) s^2 ds, cumulative over the grid
        let cumulative = cumulative_integral(|s| fns.g(sigma_interp.eval(s)) * s * s, nodes)?;
        let mut v = vec![0.0; n];
        let mut v_prime = vec![0.0; n];
        v_prime[0] = fns.g(profile.sigma0()) / 3.0;
        for (j, &r) in nodes.iter().enumerate().skip(1) {
            v[j] = cumulative[j] / (r * r);
            v_prime[j] = fns.g(sigma[j]) - 2.0 * v[j] / r;
        }
        let v_interp = CubicHermite::from_values_and_derivs(nodes.to_vec(), v.clone(), v_prime)?;

        let gamma = fns.gamma();
        let p: Vec<f64> = sigma.iter().map(|&s| gamma / r_s + 4.0 / 3.0 * fns.g(s)).collect();
        let p_prime: Vec<f64> = sigma
            .iter()
            .zip(&sigma_prime)
            .map(|(&s, &sp)| 4.0 / 3.0 * fns.g_prime(s) * sp)
            .collect();
        let p_interp = CubicHermite::from_values_and_derivs(nodes.to_vec(), p.clone(), p_prime)?;

        let out = Self {
            r_s,
            sigma_prime_at_r: profile.sigma_prime_at_r(),
            sigma0: profile.sigma0(),
            mass_residual,
            grid,
            sigma,
            sigma_prime,
            v,
            p,
            sigma_interp,
            v_interp,
            p_interp,
        };
        out.validate(fns)?;
        Ok(out)
    }

    /// Check the structural invariants of the stationary state.
    fn validate(&self, fns: &ModelFunctions) -> Result<(), StationaryError> {
        let n = self.grid.len();
        let nodes = self.grid.nodes();
        for (j, &s) in self.sigma.iter().enumerate() {
            let in_range = s > 0.0 && s <= 1.0 + 1e-12;
            if !in_range {
                return Err(StationaryError::Postcondition(format!(
                    "sigma({}) = {s} outside (0, 1]",
                    nodes[j]
                )));
            }
            if self.sigma_prime[j] < -1e-10 {
                return Err(StationaryError::Postcondition(format!(
                    "sigma'({}) = {} negative",
                    nodes[j], self.sigma_prime[j]
                )));
            }
        }
        if self.v[0].abs() > 1e-8 || self.v[n - 1].abs() > 1e-8 {
            return Err(StationaryError::Postcondition(format!(
                "v(0) = {:e}, v(R) = {:e}, expected 0 at both ends",
                self.v[0],
                self.v[n - 1]
            )));
        }
        for (j, &r) in nodes.iter().enumerate() {
            if r >= 0.05 * self.r_s && r <= 0.95 * self.r_s && self.v[j] >= 0.0 {
                return Err(StationaryError::Postcondition(format!(
                    "v({r}) = {} not strictly negative in the interior",
                    self.v[j]
                )));
            }
        }
        let p_bc = self.p[n - 1] - fns.gamma() / self.r_s - 4.0 / 3.0 * fns.g(1.0);
        if p_bc.abs() > 1e-8 {
            return Err(StationaryError::Postcondition(format!(
                "pressure boundary identity off by {p_bc:e}"
            )));
        }
        Ok(())
    }

    /// CSV export: `r,sigma_s,v_s,p_s` at 17 significant digits.
    pub fn write_profile_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "r,sigma_s,v_s,p_s")?;
        for (j, &r) in self.grid.nodes().iter().enumerate() {
            writeln!(
                w,
                "{:.16e},{:.16e},{:.16e},{:.16e}",
                r, self.sigma[j], self.v[j], self.p[j]
            )?;
        }
        Ok(())
    }
}

/// Locate every root of the mass-balance residual in the bracket.
///
/// A geometric scan finds sign changes and each is polished by Brent. The
/// residual is scale-invariant under Brent, so roots do not depend on the
/// magnitude of `g`.
pub fn find_stationary_radii(
    fns: &ModelFunctions,
    bracket: Option<(f64, f64)>,
) -> Result<Vec<f64>, StationaryError> {
    let (lo, mut hi) = bracket.unwrap_or(DEFAULT_BRACKET);
    if !(lo > 0.0 && lo < hi) {
        return Err(KernelError::InvalidInterval { lo, hi }.into());
    }
    let expandable = bracket.is_none();
    let residual = |r: f64| mass_balance_residual(fns, r);

    loop {
        const SCAN: usize = 64;
        let ratio = (hi / lo).powf(1.0 / SCAN as f64);
        let mut roots = Vec::new();
        let mut r_prev = lo;
        let mut m_prev = residual(r_prev)?;
        for k in 1..=SCAN {
            let r_next = if k == SCAN { hi } else { lo * ratio.powi(k as i32) };
            let m_next = residual(r_next)?;
            if m_prev == 0.0 {
                roots.push(r_prev);
            } else if m_prev.signum() != m_next.signum() && m_next != 0.0 {
                let mut inner_err: Option<StationaryError> = None;
                let root = find_root(
                    |r| match residual(r) {
                        Ok(v) => v,
                        Err(e) => {
                            inner_err = Some(e);
                            f64::NAN
                        }
                    },
                    r_prev,
                    r_next,
                    &Tolerance { rel: 1e-14, abs: 1e-300 },
                );
                if let Some(e) = inner_err {
                    return Err(e);
                }
                roots.push(root?);
            }
            r_prev = r_next;
            m_prev = m_next;
        }
        if m_prev == 0.0 {
            roots.push(r_prev);
        }
        if !roots.is_empty() {
            return Ok(roots);
        }
        if expandable && hi < BRACKET_CAP {
            hi = (hi * 4.0).min(BRACKET_CAP);
            continue;
        }
        let m_lo = residual(lo)?;
        return Err(StationaryError::Bracketing { lo, hi, m_lo, m_hi: m_prev });
    }
}

/// Solve for the stationary state. Errors if the bracket holds several
/// stationary radii instead of silently picking one.
pub fn find_stationary(
    fns: &ModelFunctions,
    bracket: Option<(f64, f64)>,
) -> Result<RadialStationary, StationaryError> {
    let radii = find_stationary_radii(fns, bracket)?;
    if radii.len() > 1 {
        return Err(StationaryError::MultipleRoots(radii));
    }
    let r_s = radii[0];
    stationary_at_radius(fns, r_s)
}

/// Tabulate the stationary state at a known radius.
pub fn stationary_at_radius(
    fns: &ModelFunctions,
    r_s: f64,
) -> Result<RadialStationary, StationaryError> {
    let grid = RadialGrid::chebyshev(GRID_NODES, r_s)?;
    let stops: Vec<f64> = grid
        .nodes()
        .iter()
        .copied()
        .filter(|&r| r > R_START && r < r_s)
        .collect();
    let profile = solve_sigma_profile(fns, r_s, &stops)?;
    let m = mass_residual_of_profile(fns, &profile)?;
    if m.abs() > 1e-9 * fns.g_prime(1.0).max(1.0) {
        return Err(StationaryError::Postcondition(format!(
            "mass-balance residual {m:e} too large at R = {r_s}"
        )));
    }
    RadialStationary::from_profile(fns, &profile, m)
}

/// Map a stationary state onto the unit ball.
///
/// Rescaling `r -> r / R_s` multiplies both laws by `R_s^2`, the velocity by
/// `R_s`, the pressure by `R_s^2` and the surface tension by `R_s`; the
/// rescaled profiles solve the same stationary problem on `[0, 1]` with the
/// adjusted functions.
pub fn rescale_to_unit(
    st: &RadialStationary,
    fns: &ModelFunctions,
) -> Result<(RadialStationary, ModelFunctions), StationaryError> {
    let r_s = st.r_s();
    let scaled_fns = fns.scaled(r_s * r_s, r_s);
    if r_s == 1.0 {
        // identity rescale; rebuild against the (identical) scaled laws
        let copy = RadialStationary {
            r_s: 1.0,
            grid: st.grid.clone(),
            sigma: st.sigma.clone(),
            sigma_prime: st.sigma_prime.clone(),
            v: st.v.clone(),
            p: st.p.clone(),
            sigma_prime_at_r: st.sigma_prime_at_r,
            sigma0: st.sigma0,
            mass_residual: st.mass_residual,
            sigma_interp: st.sigma_interp.clone(),
            v_interp: st.v_interp.clone(),
            p_interp: st.p_interp.clone(),
        };
        return Ok((copy, scaled_fns));
    }

    let nodes: Vec<f64> = st.grid.nodes().iter().map(|&r| r / r_s).collect();
    let grid = RadialGrid::from_nodes(nodes.clone())?;
    let sigma = st.sigma.clone();
    let sigma_prime: Vec<f64> = st.sigma_prime.iter().map(|&d| d * r_s).collect();
    let v: Vec<f64> = st.v.iter().map(|&x| x * r_s).collect();
    let v_prime: Vec<f64> = nodes
        .iter()
        .zip(&sigma)
        .zip(&v)
        .map(|((&rh, &s), &vh)| {
            if rh == 0.0 {
                scaled_fns.g(st.sigma0) / 3.0
            } else {
                scaled_fns.g(s) - 2.0 * vh / rh
            }
        })
        .collect();
    let p: Vec<f64> = st.p.iter().map(|&x| x * r_s * r_s).collect();
    let p_prime: Vec<f64> = sigma
        .iter()
        .zip(&sigma_prime)
        .map(|(&s, &sp)| 4.0 / 3.0 * scaled_fns.g_prime(s) * sp)
        .collect();

    let sigma_interp =
        CubicHermite::from_values_and_derivs(nodes.clone(), sigma.clone(), sigma_prime.clone())?;
    let v_interp = CubicHermite::from_values_and_derivs(nodes.clone(), v.clone(), v_prime)?;
    let p_interp = CubicHermite::from_values_and_derivs(nodes, p.clone(), p_prime)?;

    let out = RadialStationary {
        r_s: 1.0,
        grid,
        sigma_prime_at_r: st.sigma_prime_at_r * r_s,
        sigma0: st.sigma0,
        mass_residual: st.mass_residual * r_s * r_s,
        sigma,
        sigma_prime,
        v,
        p,
        sigma_interp,
        v_interp,
        p_interp,
    };
    out.validate(&scaled_fns)?;
    Ok((out, scaled_fns))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{canonical_model, ModelParams};
    use approx::assert_relative_eq;

    /// sigma_c that makes R_s = 1 for the canonical model with lambda = 1:
    /// the closed-form relation sigma_c = 3 (coth(sqrt(l) R)/(sqrt(l) R) - 1/(l R^2)).
    pub(crate) fn sigma_c_for_unit_radius(lambda: f64) -> f64 {
        let a = lambda.sqrt();
        3.0 * (1.0 / (a.tanh() * a) - 1.0 / lambda)
    }

    fn canonical_unit() -> ModelFunctions {
        canonical_model(&ModelParams::canonical(sigma_c_for_unit_radius(1.0), 1.0)).unwrap()
    }

    /// Closed form sigma_s(r) = (R/r) sinh(sqrt(lambda) r)/sinh(sqrt(lambda) R).
    fn sigma_closed(lambda: f64, r_s: f64, r: f64) -> f64 {
        let a = lambda.sqrt();
        if r < 1e-8 {
            a * r_s / (a * r_s).sinh() * (1.0 + (a * r) * (a * r) / 6.0)
        } else {
            r_s / r * (a * r).sinh() / (a * r_s).sinh()
        }
    }

    #[test]
    fn sigma_profile_matches_closed_form() {
        let fns = canonical_unit();
        let profile = solve_sigma_profile(&fns, 1.0, &[]).unwrap();
        assert_relative_eq!(profile.sigma0(), 1.0 / 1.0_f64.sinh(), max_relative = 1e-8);
        assert_relative_eq!(
            profile.sigma_prime_at_r(),
            1.0 / 1.0_f64.tanh() - 1.0,
            max_relative = 1e-8
        );
        for i in 0..=50 {
            let r = i as f64 / 50.0;
            assert_relative_eq!(
                profile.sigma_at(r),
                sigma_closed(1.0, 1.0, r),
                max_relative = 1e-8
            );
        }
    }

    #[test]
    fn mass_balance_zero_at_stationary_radius() {
        let fns = canonical_unit();
        let m = mass_balance_residual(&fns, 1.0).unwrap();
        assert!(m.abs() < 1e-8, "m(1) = {m:e}");
    }

    #[test]
    fn mass_balance_rounded_sigma_c() {
        // 7-digit sigma_c from the closed-form relation still gives |m(1)| < 1e-6
        let fns = canonical_model(&ModelParams::canonical(0.939_105_9, 1.0)).unwrap();
        let m = mass_balance_residual(&fns, 1.0).unwrap();
        assert!(m.abs() < 1e-6, "m(1) = {m:e}");
    }

    /// Sign of m(R) away from the root, checked against a brute-force
    /// Simpson quadrature of the closed-form profile.
    #[test]
    fn mass_balance_signs() {
        let fns = canonical_unit();
        let sigma_c = fns.sigma_c();
        let brute = |r_max: f64| {
            let n = 20_000;
            let h = r_max / n as f64;
            let f = |r: f64| (sigma_closed(1.0, r_max, r) - sigma_c) * r * r;
            let mut acc = f(0.0) + f(r_max);
            for k in 1..n {
                acc += f(k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
            }
            acc * h / 3.0
        };
        // small trial radius: nutrient saturates the ball, net proliferation
        let m_small = mass_balance_residual(&fns, 0.5).unwrap();
        assert!(m_small > 0.0, "m(0.5) = {m_small:e}");
        assert!(brute(0.5) > 0.0);
        assert_relative_eq!(m_small, brute(0.5), max_relative = 1e-5);
        // large trial radius: starved core dominates
        let m_large = mass_balance_residual(&fns, 2.0).unwrap();
        assert!(m_large < 0.0, "m(2) = {m_large:e}");
        assert!(brute(2.0) < 0.0);
        assert_relative_eq!(m_large, brute(2.0), max_relative = 1e-5);
    }

    #[test]
    fn stationary_radius_from_rounded_sigma_c() {
        let fns = canonical_model(&ModelParams::canonical(0.939_105_9, 1.0)).unwrap();
        let st = find_stationary(&fns, Some((0.5, 2.0))).unwrap();
        assert!((st.r_s() - 1.0).abs() < 1e-6, "R_s = {}", st.r_s());
        assert!(st.mass_residual().abs() < 1e-9);
    }

    #[test]
    fn smaller_sigma_c_grows_the_tumor() {
        let f93 = canonical_model(&ModelParams::canonical(0.93, 1.0)).unwrap();
        let f90 = canonical_model(&ModelParams::canonical(0.90, 1.0)).unwrap();
        let r93 = find_stationary(&f93, None).unwrap().r_s();
        let r90 = find_stationary(&f90, None).unwrap().r_s();
        assert!(r90 > r93, "r90 = {r90}, r93 = {r93}");
    }

    #[test]
    fn pressure_boundary_identity() {
        let fns = canonical_unit();
        let st = find_stationary(&fns, Some((0.5, 2.0))).unwrap();
        let lhs = st.p_at(st.r_s());
        let rhs = fns.gamma() / st.r_s() + 4.0 / 3.0 * fns.g(1.0);
        assert!((lhs - rhs).abs() < 1e-8);
    }

    #[test]
    fn velocity_invariants() {
        let fns = canonical_unit();
        let st = find_stationary(&fns, Some((0.5, 2.0))).unwrap();
        let n = st.grid().len();
        assert!(st.v_values()[0].abs() < 1e-8);
        assert!(st.v_values()[n - 1].abs() < 1e-8);
        for (j, &r) in st.grid().nodes().iter().enumerate() {
            if (0.05..=0.95).contains(&r) {
                assert!(st.v_values()[j] < 0.0, "v({r}) = {}", st.v_values()[j]);
            }
        }
    }

    #[test]
    fn no_sign_change_reports_bracket() {
        let fns = canonical_unit();
        let err = find_stationary(&fns, Some((3.0, 4.0))).unwrap_err();
        assert!(matches!(err, StationaryError::Bracketing { .. }), "{err}");
    }

    #[test]
    fn rescale_identity_at_unit_radius() {
        let fns = canonical_unit();
        let st = stationary_at_radius(&fns, 1.0).unwrap();
        let (unit, _) = rescale_to_unit(&st, &fns).unwrap();
        for j in 0..st.grid().len() {
            assert_eq!(st.sigma_values()[j], unit.sigma_values()[j]);
            assert_eq!(st.v_values()[j], unit.v_values()[j]);
        }
    }

    /// Rescaling a radius-2 state to the unit ball matches a direct solve
    /// with the laws scaled by R_s^2 (lambda' = 4 lambda).
    #[test]
    fn rescale_matches_direct_solve() {
        // closed-form relation with sqrt(lambda) * R = 2 puts R_s at 2
        let a: f64 = 2.0;
        let sc = 3.0 * (1.0 / (a.tanh() * a) - 1.0 / (a * a));
        let fns = canonical_model(&ModelParams::canonical(sc, 1.0)).unwrap();
        let st = find_stationary(&fns, Some((1.5, 2.5))).unwrap();
        assert!((st.r_s() - 2.0).abs() < 1e-8, "R_s = {}", st.r_s());

        let (unit, scaled_fns) = rescale_to_unit(&st, &fns).unwrap();
        assert_eq!(unit.r_s(), 1.0);
        assert_relative_eq!(scaled_fns.f(1.0), 4.0 * fns.f(1.0), max_relative = 1e-9);

        let direct = stationary_at_radius(&scaled_fns, 1.0).unwrap();
        for i in 0..=40 {
            let r = i as f64 / 40.0;
            assert!(
                (unit.sigma_at(r) - direct.sigma_at(r)).abs() < 1e-7,
                "sigma mismatch at {r}"
            );
            assert!((unit.v_at(r) - direct.v_at(r)).abs() < 1e-7, "v mismatch at {r}");
            assert!((unit.p_at(r) - direct.p_at(r)).abs() < 1e-7, "p mismatch at {r}");
        }
    }

    #[test]
    fn csv_export_roundtrip() {
        let fns = canonical_unit();
        let st = find_stationary(&fns, Some((0.5, 2.0))).unwrap();
        let mut buf = Vec::new();
        st.write_profile_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "r,sigma_s,v_s,p_s");
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row.len(), 4);
        // 17 significant digits round-trip exactly
        let parsed: f64 = row[1].parse().unwrap();
        assert_eq!(parsed, st.sigma_values()[0]);
    }
}
