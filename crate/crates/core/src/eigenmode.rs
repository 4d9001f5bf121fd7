//! Full linearized interior fields for a single spherical harmonic.
//!
//! For a degree-l boundary perturbation the interior solution splits into a
//! nutrient factor `F_l` (from [`crate::modes`]), a pressure harmonic
//! `P_lm(r) = 2(2l+3) A_1 r^l`, a toroidal factor `x_lm = B_1 r^l`, and two
//! spheroidal velocity factors
//!
//! ```text
//! v_lm(r) = sqrt((l+1)/(2l+1)) * (2l/(l+1)) * A_1 r^(l+1) - vt(r)
//! w_lm(r) = C_1 r^(l-1) + sqrt(l/(2l+1)) (2l+3) A_1 r^(l+1) - wt(r)
//! ```
//!
//! whose particular parts reduce, after integrating the source factors by
//! parts, to moment integrals of `G(r) = g'(sigma_s) F_l`:
//!
//! ```text
//! vt(r) = sqrt((l+1)/(2l+1)) r^(-l-2) * integral_0^r G s^(l+2) ds
//! wt(r) = sqrt(l/(2l+1)) r^(l-1) * [G(1)/(2l-1) + integral_r^1 G s^(1-l) ds]
//! ```
//!
//! The constants `(A_1, C_1)` solve the 2x2 linear system expressing the
//! boundary traction balance; `B_1 = 0` is forced by the vanishing toroidal
//! traction `(l-1) B_1 = 0` together with the rotation constraint, and the
//! rigid translation `a` vanishes for every degree except 1. The assembled
//! boundary value `g(1) + l (A_1 + C_1~) + ...` must reproduce the
//! multiplier `alpha_l(gamma)` computed from the moment formula; the
//! residual report checks that identity and every field equation on a
//! radial collocation grid with finite differences taken independently of
//! the construction.

use serde::Serialize;
use thiserror::Error;

use crate::kernels::{cumulative_integral, KernelError};
use crate::model::ModelFunctions;
use crate::modes::{ModeError, ModeProfile};
use crate::spectrum::{alpha_slope, stokes_prefactor};
use crate::stationary::RadialStationary;

/// Master evaluation grid: 1025 uniform radii, of which every fourth point
/// is a collocation/export node (257 of them); finite-difference stencils
/// land exactly on master points.
const MASTER_N: usize = 1025;
const COLLOC_STRIDE: usize = 4;

#[derive(Debug, Error)]
pub enum EigenmodeError {
    #[error(transparent)]
    Mode(#[from] ModeError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("degree 1 is the rigid translation mode (multiplier 0); interior fields are not assembled")]
    TranslationMode,
    #[error("degree 0 is radially symmetric; the vector-harmonic field algebra starts at degree 2")]
    RadialMode,
    #[error("harmonic order m = {m} out of range for degree {l}")]
    InvalidOrder { l: u32, m: i32 },
    #[error("traction system degenerate at degree {l}: determinant {det:e}")]
    DegenerateSystem { l: u32, det: f64 },
    #[error("mode profile solved for degree {mode_l}, fields requested for degree {l}")]
    DegreeMismatch { l: u32, mode_l: u32 },
}

/// Boundary data of the particular velocity parts:
/// `(vt(1), wt(1), vt'(1), wt'(1))`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BoundaryData {
    pub v_tilde_1: f64,
    pub w_tilde_1: f64,
    pub v_tilde_prime_1: f64,
    pub w_tilde_prime_1: f64,
}

/// Solved mode constants.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ModeConstants {
    pub a_1: f64,
    pub c_1_tilde: f64,
    pub b_1: f64,
    pub a_vec: [f64; 3],
    /// Residual of the closed-form combination check for `A_1 + C_1~`.
    pub combination_residual: f64,
}

fn s_coeff(l: u32) -> f64 {
    let lf = l as f64;
    ((lf + 1.0) / (2.0 * lf + 1.0)).sqrt()
}

fn t_coeff(l: u32) -> f64 {
    let lf = l as f64;
    (lf / (2.0 * lf + 1.0)).sqrt()
}

/// `alpha_l(gamma)` straight from the moment integral (no spectrum report
/// needed): `-s_l (gamma - gamma_l)` with `gamma_l` built from `I_l`.
pub fn alpha_from_moment(l: u32, gamma: f64, g1: f64, i_l: f64) -> f64 {
    let gamma_l = stokes_prefactor(l) * (g1 + i_l);
    -alpha_slope(l) * (gamma - gamma_l)
}

/// Boundary values of the particular parts, from the mode moment and the
/// boundary slope of the stationary nutrient profile.
pub fn boundary_data(
    mode: &ModeProfile,
    st: &RadialStationary,
    fns: &ModelFunctions,
) -> BoundaryData {
    let l = mode.l();
    let lf = l as f64;
    let s = s_coeff(l);
    let t = t_coeff(l);
    let g1_at_boundary = -fns.g_prime(1.0) * st.sigma_prime_at_boundary(); // G(1)
    let i_l = mode.i_l();
    BoundaryData {
        v_tilde_1: s * i_l,
        w_tilde_1: t * g1_at_boundary / (2.0 * lf - 1.0),
        v_tilde_prime_1: s * (g1_at_boundary - (lf + 2.0) * i_l),
        w_tilde_prime_1: -t * lf * g1_at_boundary / (2.0 * lf - 1.0),
    }
}

/// Solve the traction system for `(A_1, C_1~)`; `B_1` and the rigid
/// translation vanish for `l >= 2`. The closed-form combination for
/// `A_1 + C_1~` is evaluated as a mandatory consistency check and its
/// residual is stored in the returned constants.
pub fn solve_constants(
    l: u32,
    gamma: f64,
    bd: &BoundaryData,
    st: &RadialStationary,
    fns: &ModelFunctions,
) -> Result<ModeConstants, EigenmodeError> {
    if l == 0 {
        return Err(EigenmodeError::RadialMode);
    }
    if l == 1 {
        return Err(EigenmodeError::TranslationMode);
    }
    let lf = l as f64;
    let s = s_coeff(l);
    let t = t_coeff(l);
    let g1 = fns.g(1.0);
    let q = fns.g_prime(1.0) * st.sigma_prime_at_boundary(); // g'(1) sigma_s'(1)

    // radial traction row: (l^2-l-3) A_1 + (l^2-l) C_1~ = b1
    let a11 = lf * lf - lf - 3.0;
    let a12 = lf * lf - lf;
    let b1 = t * bd.w_tilde_prime_1 - s * bd.v_tilde_prime_1
        + 0.25 * gamma * (2.0 - lf * lf - lf)
        + 2.0 * g1
        - q;
    // tangential traction row: (2l^2+4l)/(l+1) A_1 + 2(l-1) C_1~ = b2
    let a21 = (2.0 * lf * lf + 4.0 * lf) / (lf + 1.0);
    let a22 = 2.0 * (lf - 1.0);
    let b2 = t * ((lf - 1.0) / lf * bd.w_tilde_1 + bd.w_tilde_prime_1 / lf)
        - s * ((lf + 2.0) / (lf + 1.0) * bd.v_tilde_1 - bd.v_tilde_prime_1 / (lf + 1.0))
        - 2.0 * g1;

    let det = a11 * a22 - a12 * a21;
    let scale = a11.abs().max(a12.abs()).max(a21.abs()).max(a22.abs());
    if det.abs() < 1e-12 * scale * scale {
        return Err(EigenmodeError::DegenerateSystem { l, det });
    }
    let a_1 = (b1 * a22 - b2 * a12) / det;
    let c_1_tilde = (a11 * b2 - a21 * b1) / det;

    // closed-form combination for A_1 + C_1~
    let sqrt_l2l1 = (lf * (2.0 * lf + 1.0)).sqrt();
    let combo = (0.5 * gamma * (1.0 - lf) * (2.0 * lf * lf + 5.0 * lf + 2.0)
        - (4.0 * lf + 2.0) * q
        + (2.0 * lf - 2.0) * g1
        + (4.0 * lf * lf + 5.0 * lf + 3.0) / sqrt_l2l1 * bd.w_tilde_prime_1
        - s * (4.0 * lf - 1.0) * bd.v_tilde_prime_1
        + 3.0 * (lf * lf - 1.0) / sqrt_l2l1 * bd.w_tilde_1
        - 3.0 * (lf + 2.0) * s * bd.v_tilde_1)
        / (2.0 * (lf - 1.0) * (2.0 * lf * lf + 4.0 * lf + 3.0));
    let combination_residual = (a_1 + c_1_tilde - combo).abs();

    Ok(ModeConstants { a_1, c_1_tilde, b_1: 0.0, a_vec: [0.0; 3], combination_residual })
}

/// Everything needed to evaluate the assembled fields on the master grid.
struct FieldTables {
    radii: Vec<f64>,
    g: Vec<f64>, // G(r) = g'(sigma_s) F_l
    v_tilde: Vec<f64>,
    w_tilde: Vec<f64>,
    v_lm: Vec<f64>,
    w_lm: Vec<f64>,
    p_lm: Vec<f64>,
    x_lm: Vec<f64>,
    h_l1: Vec<f64>,
    h_l2: Vec<f64>,
    psi: Vec<f64>,
    phi: Vec<f64>,
    f1: Vec<f64>, // source factor on the v-harmonic channel
    f2: Vec<f64>, // source factor on the w-harmonic channel
}

/// `base^p * value` evaluated safely when `base^p` alone would overflow.
fn power_product(value: f64, base: f64, p: i32) -> f64 {
    if value == 0.0 {
        return 0.0;
    }
    let direct = base.powi(p);
    if direct.is_finite() && direct != 0.0 {
        return value * direct;
    }
    value.signum() * (value.abs().ln() + p as f64 * base.ln()).exp()
}

fn build_tables(
    l: u32,
    constants: &ModeConstants,
    mode: &ModeProfile,
    st: &RadialStationary,
    fns: &ModelFunctions,
) -> Result<FieldTables, KernelError> {
    let lf = l as f64;
    let s = s_coeff(l);
    let t = t_coeff(l);
    let radii: Vec<f64> = (0..MASTER_N).map(|i| i as f64 / (MASTER_N - 1) as f64).collect();

    let g_of = |r: f64| fns.g_prime(st.sigma_at(r)) * r.powi(l as i32) * mode.ratio_at(r);
    let g: Vec<f64> = radii.iter().map(|&r| g_of(r)).collect();

    // dG/dr = d[g'(sigma_s)]/dr * F + g'(sigma_s) * F'; the first factor is
    // an O(1) scalar map differentiated with a tiny five-point stencil, the
    // second uses the analytic mode derivative.
    let gp_sigma = |r: f64| fns.g_prime(st.sigma_at(r));
    let dgp = |r: f64| {
        let h = 1e-5_f64.min(0.25 * (1.0 - r).max(1e-7)).min(0.25 * r.max(1e-7));
        if h < 1e-9 {
            // at the very ends fall back to one-sided secant
            if r < 0.5 {
                return (gp_sigma(r + 1e-6) - gp_sigma(r)) / 1e-6;
            }
            return (gp_sigma(r) - gp_sigma(r - 1e-6)) / 1e-6;
        }
        (gp_sigma(r - 2.0 * h) - 8.0 * gp_sigma(r - h) + 8.0 * gp_sigma(r + h)
            - gp_sigma(r + 2.0 * h))
            / (12.0 * h)
    };
    let g_prime: Vec<f64> = radii
        .iter()
        .map(|&r| {
            let f_val = r.powi(l as i32) * mode.ratio_at(r);
            let f_der = if r == 0.0 {
                0.0
            } else {
                lf * r.powi(l as i32 - 1) * mode.ratio_at(r) + r.powi(l as i32) * mode.ratio_prime_at(r)
            };
            dgp(r) * f_val + gp_sigma(r) * f_der
        })
        .collect();

    // moment integrals of G, cumulative over the master grid
    let k1 = cumulative_integral(
        |r| fns.g_prime(st.sigma_at(r)) * mode.ratio_at(r) * r.powi(2 * l as i32 + 2),
        &radii,
    )?;
    // integrand of K2: s^(1-l) G(s) = g'(sigma_s) rho(s) s
    let forward = cumulative_integral(
        |r| fns.g_prime(st.sigma_at(r)) * mode.ratio_at(r) * r,
        &radii,
    )?;
    let total = *forward.last().unwrap();
    let k2: Vec<f64> = forward.iter().map(|&c| total - c).collect();

    let g_at_1 = *g.last().unwrap();
    let c_v = s * 2.0 * lf / (lf + 1.0);
    let c_w = t * (2.0 * lf + 3.0);
    let c_1 = constants.c_1_tilde * (lf * (2.0 * lf + 1.0)).sqrt();

    let n = radii.len();
    let mut v_tilde = vec![0.0; n];
    let mut w_tilde = vec![0.0; n];
    let mut v_lm = vec![0.0; n];
    let mut w_lm = vec![0.0; n];
    let mut p_lm = vec![0.0; n];
    let mut x_lm = vec![0.0; n];
    let mut h_l1 = vec![0.0; n];
    let mut h_l2 = vec![0.0; n];
    let mut psi = vec![0.0; n];
    let mut phi = vec![0.0; n];
    let mut f1 = vec![0.0; n];
    let mut f2 = vec![0.0; n];

    for i in 0..n {
        let r = radii[i];
        phi[i] = r.powi(l as i32) * mode.ratio_at(r);
        p_lm[i] = 2.0 * (2.0 * lf + 3.0) * constants.a_1 * r.powi(l as i32);
        x_lm[i] = constants.b_1 * r.powi(l as i32);
        psi[i] = 4.0 / 3.0 * fns.g_prime(st.sigma_at(r)) * phi[i] + p_lm[i];
        if r == 0.0 {
            // every velocity factor vanishes at the center for l >= 2
            f2[i] = 0.0;
        } else {
            v_tilde[i] = s * power_product(k1[i], r, -(l as i32) - 2);
            w_tilde[i] = t * r.powi(l as i32 - 1) * (g_at_1 / (2.0 * lf - 1.0) + k2[i]);
            v_lm[i] = c_v * constants.a_1 * r.powi(l as i32 + 1) - v_tilde[i];
            w_lm[i] =
                c_1 * r.powi(l as i32 - 1) + c_w * constants.a_1 * r.powi(l as i32 + 1) - w_tilde[i];
            h_l1[i] = -s * v_lm[i] + t * w_lm[i];
            h_l2[i] = v_lm[i] / ((lf + 1.0) * (2.0 * lf + 1.0)).sqrt()
                + w_lm[i] / (lf * (2.0 * lf + 1.0)).sqrt();
            f1[i] = s * (-g_prime[i] + lf / r * g[i]);
            f2[i] = t * (g_prime[i] + (lf + 1.0) / r * g[i]);
        }
    }

    Ok(FieldTables {
        radii,
        g,
        v_tilde,
        w_tilde,
        v_lm,
        w_lm,
        p_lm,
        x_lm,
        h_l1,
        h_l2,
        psi,
        phi,
        f1,
        f2,
    })
}

/// Assembled interior fields of one `(l, m)` eigenmode, tabulated on the
/// collocation radii.
#[derive(Debug, Serialize)]
pub struct EigenmodeFields {
    pub l: u32,
    pub m: i32,
    pub gamma: f64,
    pub constants: ModeConstants,
    pub boundary: BoundaryData,
    /// Collocation radii for the tabulated factors below.
    pub radii: Vec<f64>,
    pub p_lm: Vec<f64>,
    pub v_lm: Vec<f64>,
    pub w_lm: Vec<f64>,
    pub x_lm: Vec<f64>,
    pub h_l1: Vec<f64>,
    pub h_l2: Vec<f64>,
    pub v_tilde: Vec<f64>,
    pub w_tilde: Vec<f64>,
    /// Source factors on the two spheroidal channels.
    pub f1: Vec<f64>,
    pub f2: Vec<f64>,
    /// Nutrient factor `F_l` and pressure factor `psi` on the radii.
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
    /// Multiplier assembled from the boundary values,
    /// `g(1) + l (A_1 + C_1~) + S vt(1) - T wt(1)`.
    pub multiplier_boundary: f64,
}

/// Assemble the fields for `(l, m)` at surface tension `gamma`.
pub fn assemble_fields(
    l: u32,
    m: i32,
    gamma: f64,
    mode: &ModeProfile,
    st: &RadialStationary,
    fns: &ModelFunctions,
) -> Result<EigenmodeFields, EigenmodeError> {
    if m.unsigned_abs() > l {
        return Err(EigenmodeError::InvalidOrder { l, m });
    }
    if mode.l() != l {
        return Err(EigenmodeError::DegreeMismatch { l, mode_l: mode.l() });
    }
    let bd = boundary_data(mode, st, fns);
    let constants = solve_constants(l, gamma, &bd, st, fns)?;
    let tables = build_tables(l, &constants, mode, st, fns)?;

    let lf = l as f64;
    let multiplier_boundary = fns.g(1.0)
        + lf * (constants.a_1 + constants.c_1_tilde)
        + s_coeff(l) * bd.v_tilde_1
        - t_coeff(l) * bd.w_tilde_1;

    let take = |v: &Vec<f64>| -> Vec<f64> { v.iter().copied().step_by(COLLOC_STRIDE).collect() };
    Ok(EigenmodeFields {
        l,
        m,
        gamma,
        constants,
        boundary: bd,
        radii: take(&tables.radii),
        p_lm: take(&tables.p_lm),
        v_lm: take(&tables.v_lm),
        w_lm: take(&tables.w_lm),
        x_lm: take(&tables.x_lm),
        h_l1: take(&tables.h_l1),
        h_l2: take(&tables.h_l2),
        v_tilde: take(&tables.v_tilde),
        w_tilde: take(&tables.w_tilde),
        f1: take(&tables.f1),
        f2: take(&tables.f2),
        phi: take(&tables.phi),
        psi: take(&tables.psi),
        multiplier_boundary,
    })
}

impl EigenmodeFields {
    /// CSV export of the radial factors:
    /// `r,P_lm,v_lm,w_lm,x_lm,H_l1,H_l2`.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "r,P_lm,v_lm,w_lm,x_lm,H_l1,H_l2")?;
        for i in 0..self.radii.len() {
            writeln!(
                w,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                self.radii[i],
                self.p_lm[i],
                self.v_lm[i],
                self.w_lm[i],
                self.x_lm[i],
                self.h_l1[i],
                self.h_l2[i],
            )?;
        }
        Ok(())
    }

    /// JSON dump of constants plus residual diagnostics.
    pub fn dump_json(&self, residuals: &ResidualReport) -> serde_json::Value {
        serde_json::json!({
            "l": self.l,
            "m": self.m,
            "gamma": self.gamma,
            "A1": self.constants.a_1,
            "C1_tilde": self.constants.c_1_tilde,
            "B1": self.constants.b_1,
            "residuals": residuals,
        })
    }
}

/// Sup-norm residual diagnostics for one assembled eigenmode.
#[derive(Debug, Clone, Serialize)]
pub struct ResidualReport {
    /// Divergence identity: the spheroidal combination of `v_lm`, `w_lm`
    /// must reproduce `G(r)` (finite-difference derivatives).
    pub divergence: f64,
    /// Momentum balance on the v-channel: `L_(l+1) v_lm = F1`.
    pub momentum_v: f64,
    /// Momentum balance on the w-channel:
    /// `L_(l-1) w_lm - F2 = T [P' + (l+1)/r P]`.
    pub momentum_w: f64,
    /// Harmonicity of the pressure factor: log-log slope of `P_lm` vs `l`.
    pub pressure_harmonic: f64,
    /// Toroidal traction coefficient `(l-1) B_1`.
    pub toroidal_traction: f64,
    /// Radial traction balance at the boundary.
    pub traction_radial: f64,
    /// Tangential traction balance at the boundary.
    pub traction_tangential: f64,
    /// Net interior momentum (translation constraint).
    pub constraint_translation: f64,
    /// Net interior angular momentum (rotation constraint).
    pub constraint_rotation: f64,
    /// Closed-form combination check for `A_1 + C_1~`.
    pub combination: f64,
    /// Boundary pressure identity for `psi(1)`.
    pub psi_boundary: f64,
    /// Nutrient boundary condition `F_l(1) + sigma_s'(1)`.
    pub nutrient_boundary: f64,
    /// `|assembled boundary multiplier - alpha_l(gamma)|`.
    pub multiplier_cross_check: f64,
}

impl ResidualReport {
    /// Largest of the field-equation and constraint residuals (the
    /// multiplier cross-check is reported separately at its own scale).
    pub fn max_field_residual(&self) -> f64 {
        [
            self.divergence,
            self.momentum_v,
            self.momentum_w,
            self.pressure_harmonic,
            self.toroidal_traction,
            self.traction_radial,
            self.traction_tangential,
            self.constraint_translation,
            self.constraint_rotation,
            self.combination,
            self.psi_boundary,
            self.nutrient_boundary,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Verify every field equation, boundary balance and constraint residually.
///
/// Derivatives of the assembled factors are taken by finite differences on
/// the master grid, independently of the closed forms used to build them,
/// so transcription errors in any moment integral or constant show up here.
pub fn residual_report(
    fields: &EigenmodeFields,
    mode: &ModeProfile,
    st: &RadialStationary,
    fns: &ModelFunctions,
) -> Result<ResidualReport, EigenmodeError> {
    let l = fields.l;
    let lf = l as f64;
    let s = s_coeff(l);
    let t = t_coeff(l);
    let tables = build_tables(l, &fields.constants, mode, st, fns)?;
    let n = MASTER_N;
    let h = 1.0 / (n - 1) as f64;

    let d1 = |v: &[f64], i: usize| -> f64 {
        (v[i - 2] - 8.0 * v[i - 1] + 8.0 * v[i + 1] - v[i + 2]) / (12.0 * h)
    };
    let d2 = |v: &[f64], i: usize| -> f64 {
        (-v[i - 2] + 16.0 * v[i - 1] - 30.0 * v[i] + 16.0 * v[i + 1] - v[i + 2])
            / (12.0 * h * h)
    };
    // one-sided 4th-order derivative at the right boundary
    let d1_end = |v: &[f64]| -> f64 {
        (25.0 * v[n - 1] - 48.0 * v[n - 2] + 36.0 * v[n - 3] - 16.0 * v[n - 4] + 3.0 * v[n - 5])
            / (12.0 * h)
    };

    let mut divergence: f64 = 0.0;
    let mut momentum_v: f64 = 0.0;
    let mut momentum_w: f64 = 0.0;
    let mut i = COLLOC_STRIDE;
    while i < n - 2 {
        let r = tables.radii[i];
        let vp = d1(&tables.v_lm, i);
        let wp = d1(&tables.w_lm, i);
        let div = t * (wp - (lf - 1.0) / r * tables.w_lm[i])
            - s * (vp + (lf + 2.0) / r * tables.v_lm[i])
            - tables.g[i];
        divergence = divergence.max(div.abs());

        let vpp = d2(&tables.v_lm, i);
        let lv = vpp + 2.0 / r * vp - (lf + 1.0) * (lf + 2.0) / (r * r) * tables.v_lm[i];
        momentum_v = momentum_v.max((lv - tables.f1[i]).abs());

        let wpp = d2(&tables.w_lm, i);
        let lw = wpp + 2.0 / r * wp - (lf - 1.0) * lf / (r * r) * tables.w_lm[i];
        let p_side = t * 2.0 * (2.0 * lf + 3.0) * (2.0 * lf + 1.0)
            * fields.constants.a_1
            * r.powi(l as i32 - 1);
        momentum_w = momentum_w.max((lw - tables.f2[i] - p_side).abs());

        i += COLLOC_STRIDE;
    }

    // pressure factor is an exact monomial: log-log slope over [1/4, 1]
    let i_quarter = (n - 1) / 4;
    let pressure_harmonic = if fields.constants.a_1.abs() > 0.0 {
        let slope = (tables.p_lm[n - 1].abs().ln() - tables.p_lm[i_quarter].abs().ln())
            / (-tables.radii[i_quarter].ln());
        (slope - lf).abs()
    } else {
        0.0
    };

    // boundary traction balances with one-sided finite-difference slopes
    let v1 = tables.v_lm[n - 1];
    let w1 = tables.w_lm[n - 1];
    let vp1 = d1_end(&tables.v_lm);
    let wp1 = d1_end(&tables.w_lm);
    let g1 = fns.g(1.0);
    let q = fns.g_prime(1.0) * st.sigma_prime_at_boundary();
    let traction_radial = (-s * vp1 + t * wp1
        - (0.25 * fields.gamma * (2.0 - lf * lf - lf) + 2.0 * g1 - q
            + (2.0 * lf + 3.0) * fields.constants.a_1))
        .abs();
    let traction_tangential = ((-(lf + 2.0) / (lf + 1.0).sqrt() * v1
        + (lf - 1.0) / lf.sqrt() * w1)
        / (2.0 * lf + 1.0).sqrt()
        + vp1 / ((lf + 1.0) * (2.0 * lf + 1.0)).sqrt()
        + wp1 / (lf * (2.0 * lf + 1.0)).sqrt()
        + 2.0 * g1)
        .abs();

    // interior constraints in coefficient space: for l >= 2 every angular
    // factor integrates to zero exactly, leaving only the rigid parts
    let a_norm = fields
        .constants
        .a_vec
        .iter()
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt();
    let constraint_translation = 4.0 * std::f64::consts::PI / 3.0 * a_norm;
    let constraint_rotation = fields.constants.b_1.abs();

    let psi_boundary = (tables.psi[n - 1]
        - (-4.0 / 3.0 * q + 2.0 * (2.0 * lf + 3.0) * fields.constants.a_1))
        .abs();
    let nutrient_boundary = (tables.phi[n - 1] + st.sigma_prime_at_boundary()).abs();

    let alpha = alpha_from_moment(l, fields.gamma, g1, mode.i_l());
    let multiplier_cross_check = (fields.multiplier_boundary - alpha).abs();

    Ok(ResidualReport {
        divergence,
        momentum_v,
        momentum_w,
        pressure_harmonic,
        toroidal_traction: (lf - 1.0) * fields.constants.b_1.abs(),
        traction_radial,
        traction_tangential,
        constraint_translation,
        constraint_rotation,
        combination: fields.constants.combination_residual,
        psi_boundary,
        nutrient_boundary,
        multiplier_cross_check,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{canonical_model, ModelParams};
    use crate::modes::solve_mode;
    use crate::stationary::stationary_at_radius;
    use approx::assert_relative_eq;

    fn sigma_c_for_unit_radius(lambda: f64) -> f64 {
        let a = lambda.sqrt();
        3.0 * (1.0 / (a.tanh() * a) - 1.0 / lambda)
    }

    fn unit_setup() -> (RadialStationary, ModelFunctions) {
        let params = ModelParams {
            lambda: 1.0,
            mu: 1.0,
            sigma_c: sigma_c_for_unit_radius(1.0),
            sigma_bar: 1.0,
            nu: 1.0,
            gamma: 1.0,
        };
        let fns = canonical_model(&params).unwrap();
        let st = stationary_at_radius(&fns, 1.0).unwrap();
        (st, fns)
    }

    #[test]
    fn boundary_data_identities() {
        let (st, fns) = unit_setup();
        for l in [2u32, 3, 7] {
            let lf = l as f64;
            let mode = solve_mode(l, &st, &fns).unwrap();
            let bd = boundary_data(&mode, &st, &fns);
            // wt'(1)/wt(1) = -l exactly by construction
            assert_relative_eq!(bd.w_tilde_prime_1 / bd.w_tilde_1, -lf, max_relative = 1e-14);
            // vt'(1) + (l+2) vt(1) = -sqrt((l+1)/(2l+1)) g'(1) sigma'(1)
            let expected = -s_coeff(l) * fns.g_prime(1.0) * st.sigma_prime_at_boundary();
            assert_relative_eq!(
                bd.v_tilde_prime_1 + (lf + 2.0) * bd.v_tilde_1,
                expected,
                max_relative = 1e-8
            );
        }
    }

    /// Independent composite-Simpson oracle for all four boundary values.
    #[test]
    fn boundary_data_against_brute_force() {
        let (st, fns) = unit_setup();
        let l = 2u32;
        let lf = l as f64;
        let mode = solve_mode(l, &st, &fns).unwrap();
        let bd = boundary_data(&mode, &st, &fns);

        let n = 10_000usize;
        let h = 1.0 / n as f64;
        let integrand = |r: f64| fns.g_prime(st.sigma_at(r)) * mode.f_at(r) * r.powi(l as i32 + 2);
        let mut acc = integrand(0.0) + integrand(1.0);
        for k in 1..n {
            acc += integrand(k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        let moment = acc * h / 3.0;
        let g_at_1 = -fns.g_prime(1.0) * st.sigma_prime_at_boundary();

        assert_relative_eq!(bd.v_tilde_1, s_coeff(l) * moment, max_relative = 1e-8);
        assert_relative_eq!(
            bd.w_tilde_1,
            t_coeff(l) * g_at_1 / (2.0 * lf - 1.0),
            max_relative = 1e-12
        );
        assert_relative_eq!(
            bd.v_tilde_prime_1,
            s_coeff(l) * (g_at_1 - (lf + 2.0) * moment),
            max_relative = 1e-8
        );
        assert_relative_eq!(
            bd.w_tilde_prime_1,
            -t_coeff(l) * lf * g_at_1 / (2.0 * lf - 1.0),
            max_relative = 1e-12
        );
    }

    #[test]
    fn constants_satisfy_combination_and_vanishing_parts() {
        let (st, fns) = unit_setup();
        for l in [2u32, 4, 9] {
            let mode = solve_mode(l, &st, &fns).unwrap();
            let bd = boundary_data(&mode, &st, &fns);
            let c = solve_constants(l, 0.05, &bd, &st, &fns).unwrap();
            assert!(c.combination_residual < 1e-9, "combo residual {:e}", c.combination_residual);
            assert_eq!(c.b_1, 0.0);
            assert_eq!(c.a_vec, [0.0; 3]);
        }
    }

    /// A_1 + C_1~ is affine in gamma with slope -(2l^2+5l+2)/[4(2l^2+4l+3)].
    #[test]
    fn combination_gamma_slope() {
        let (st, fns) = unit_setup();
        for l in [2u32, 5, 11] {
            let lf = l as f64;
            let mode = solve_mode(l, &st, &fns).unwrap();
            let bd = boundary_data(&mode, &st, &fns);
            let h = 0.0078125; // 2^-7
            let up = solve_constants(l, 0.05 + h, &bd, &st, &fns).unwrap();
            let dn = solve_constants(l, 0.05 - h, &bd, &st, &fns).unwrap();
            let fd = ((up.a_1 + up.c_1_tilde) - (dn.a_1 + dn.c_1_tilde)) / (2.0 * h);
            let expected = -(2.0 * lf * lf + 5.0 * lf + 2.0)
                / (4.0 * (2.0 * lf * lf + 4.0 * lf + 3.0));
            assert_relative_eq!(fd, expected, max_relative = 1e-10);
        }
    }

    #[test]
    fn degree_zero_and_one_rejected() {
        let (st, fns) = unit_setup();
        let mode = solve_mode(2, &st, &fns).unwrap();
        let bd = boundary_data(&mode, &st, &fns);
        assert!(matches!(
            solve_constants(1, 0.05, &bd, &st, &fns),
            Err(EigenmodeError::TranslationMode)
        ));
        assert!(matches!(
            solve_constants(0, 0.05, &bd, &st, &fns),
            Err(EigenmodeError::RadialMode)
        ));
        assert!(matches!(
            assemble_fields(2, 5, 0.05, &mode, &st, &fns),
            Err(EigenmodeError::InvalidOrder { .. })
        ));
    }

    #[test]
    fn fields_vanish_at_center_and_match_boundary_values() {
        let (st, fns) = unit_setup();
        let l = 3u32;
        let lf = l as f64;
        let mode = solve_mode(l, &st, &fns).unwrap();
        let fields = assemble_fields(l, 0, 0.05, &mode, &st, &fns).unwrap();
        assert_eq!(fields.v_lm[0], 0.0);
        assert_eq!(fields.w_lm[0], 0.0);
        assert_eq!(fields.x_lm[0], 0.0);
        let last = fields.radii.len() - 1;
        assert_eq!(fields.radii[last], 1.0);
        assert_relative_eq!(
            fields.p_lm[last],
            2.0 * (2.0 * lf + 3.0) * fields.constants.a_1,
            max_relative = 1e-13
        );
        assert_relative_eq!(fields.v_tilde[last], fields.boundary.v_tilde_1, max_relative = 1e-10);
        assert_relative_eq!(fields.w_tilde[last], fields.boundary.w_tilde_1, max_relative = 1e-10);
    }

    #[test]
    fn residuals_small_for_low_degrees() {
        let (st, fns) = unit_setup();
        for l in [2u32, 3, 5] {
            let mode = solve_mode(l, &st, &fns).unwrap();
            let fields = assemble_fields(l, 1, 0.07, &mode, &st, &fns).unwrap();
            let res = residual_report(&fields, &mode, &st, &fns).unwrap();
            assert!(
                res.max_field_residual() < 1e-6,
                "l = {l}: max residual {:e} ({res:?})",
                res.max_field_residual()
            );
            assert!(
                res.multiplier_cross_check < 1e-8,
                "l = {l}: multiplier mismatch {:e}",
                res.multiplier_cross_check
            );
        }
    }

    /// Sphere-quadrature oracle for the translation constraint: evaluate
    /// the full vector field on a Gauss-Legendre x uniform grid and check
    /// that its integral over the ball vanishes. This validates the exact
    /// coefficient-space zeros used by the residual report.
    #[test]
    fn translation_constraint_sphere_oracle() {
        use crate::kernels::gauss_legendre;
        let (st, fns) = unit_setup();
        let l = 2u32;
        let m = 1i32;
        let mode = solve_mode(l, &st, &fns).unwrap();
        let fields = assemble_fields(l, m, 0.07, &mode, &st, &fns).unwrap();

        // real orthonormal Y_21(theta, phi) and its angular gradient
        let y = |theta: f64, phi: f64| -> f64 {
            // sqrt(15/4pi) * sin(theta) cos(theta) * cos(phi) / sqrt(2) * sqrt(2)
            (15.0 / (4.0 * std::f64::consts::PI)).sqrt()
                * theta.sin()
                * theta.cos()
                * phi.cos()
        };
        let dy_dtheta = |theta: f64, phi: f64| -> f64 {
            (15.0 / (4.0 * std::f64::consts::PI)).sqrt()
                * (theta.cos() * theta.cos() - theta.sin() * theta.sin())
                * phi.cos()
        };
        let dy_dphi = |theta: f64, phi: f64| -> f64 {
            -(15.0 / (4.0 * std::f64::consts::PI)).sqrt() * theta.sin() * theta.cos() * phi.sin()
        };

        let (nodes, weights) = gauss_legendre(32);
        let n_phi = 64usize;
        let mut total = [0.0f64; 3];
        // radial factors interpolated linearly on the collocation grid is
        // too crude; sample the tabulated radii directly with trapezoid
        for ri in 1..fields.radii.len() {
            let r = fields.radii[ri];
            let dr = fields.radii[ri] - fields.radii[ri - 1];
            let h1 = fields.h_l1[ri];
            let h2 = fields.h_l2[ri];
            for (gi, &x) in nodes.iter().enumerate() {
                let theta = x.acos();
                let st_ = theta.sin();
                let ct = theta.cos();
                for pj in 0..n_phi {
                    let phi = 2.0 * std::f64::consts::PI * pj as f64 / n_phi as f64;
                    let (sp, cp) = phi.sin_cos();
                    let omega = [st_ * cp, st_ * sp, ct];
                    let theta_hat = [ct * cp, ct * sp, -st_];
                    let phi_hat = [-sp, cp, 0.0];
                    let yv = y(theta, phi);
                    let gt = dy_dtheta(theta, phi);
                    let gp = dy_dphi(theta, phi) / st_;
                    let weight = weights[gi] * (2.0 * std::f64::consts::PI / n_phi as f64)
                        * r
                        * r
                        * dr;
                    for c in 0..3 {
                        let u = h1 * yv * omega[c] + h2 * (gt * theta_hat[c] + gp * phi_hat[c]);
                        total[c] += weight * u;
                    }
                }
            }
        }
        let norm = (total[0] * total[0] + total[1] * total[1] + total[2] * total[2]).sqrt();
        assert!(norm < 1e-6, "translation integral {norm:e}");
    }

    #[test]
    fn multiplier_two_routes_agree_across_gamma() {
        let (st, fns) = unit_setup();
        for l in [2u32, 6, 10] {
            let mode = solve_mode(l, &st, &fns).unwrap();
            for gamma in [0.01, 0.05, 0.3] {
                let fields = assemble_fields(l, 0, gamma, &mode, &st, &fns).unwrap();
                let alpha = alpha_from_moment(l, gamma, fns.g(1.0), mode.i_l());
                assert!(
                    (fields.multiplier_boundary - alpha).abs() < 1e-8,
                    "l = {l}, gamma = {gamma}: {} vs {alpha}",
                    fields.multiplier_boundary
                );
            }
        }
    }

    #[test]
    fn csv_and_json_exports() {
        let (st, fns) = unit_setup();
        let mode = solve_mode(2, &st, &fns).unwrap();
        let fields = assemble_fields(2, 0, 0.05, &mode, &st, &fns).unwrap();
        let res = residual_report(&fields, &mode, &st, &fns).unwrap();

        let mut buf = Vec::new();
        fields.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("r,P_lm,v_lm,w_lm,x_lm,H_l1,H_l2\n"));
        assert_eq!(text.lines().count(), 1 + fields.radii.len());

        let json = fields.dump_json(&res);
        assert_eq!(json["l"], 2);
        assert!(json["residuals"]["divergence"].as_f64().unwrap() < 1e-6);
    }
}
