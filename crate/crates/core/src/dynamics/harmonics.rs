//! Real orthonormal spherical harmonics on the unit sphere.
//!
//! Normalized associated Legendre values come from the standard stable
//! recurrences (diagonal, off-diagonal, then upward in degree), so degrees
//! into the hundreds stay in range. Conventions: orthonormal over the
//! sphere, no Condon-Shortley phase, real basis
//! `Y_(l,0) = Pbar_l0`, `Y_(l,m) = sqrt(2) Pbar_lm cos(m phi)`,
//! `Y_(l,-m) = sqrt(2) Pbar_lm sin(m phi)` for `m > 0`.

use std::f64::consts::PI;

/// Flat index of the `(l, m)` coefficient: `l^2 + l + m`.
pub fn index(l: u32, m: i32) -> usize {
    debug_assert!(m.unsigned_abs() <= l);
    (l as i64 * (l as i64 + 1) + m as i64) as usize
}

/// Table of normalized associated Legendre values `Pbar_l^m(cos theta)`
/// for all `0 <= m <= l <= l_max`, packed at `l (l + 1) / 2 + m`.
pub fn normalized_legendre_table(l_max: u32, cos_theta: f64) -> Vec<f64> {
    let lm = l_max as usize;
    let size = (lm + 1) * (lm + 2) / 2;
    let mut p = vec![0.0; size];
    let pack = |l: usize, m: usize| l * (l + 1) / 2 + m;
    let x = cos_theta;
    let sx = (1.0 - x * x).max(0.0).sqrt();

    p[pack(0, 0)] = (1.0 / (4.0 * PI)).sqrt();
    if l_max == 0 {
        return p;
    }
    // diagonal
    for m in 1..=lm {
        let mf = m as f64;
        p[pack(m, m)] = ((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * sx * p[pack(m - 1, m - 1)];
    }
    // first off-diagonal
    for m in 0..lm {
        let mf = m as f64;
        p[pack(m + 1, m)] = (2.0 * mf + 3.0).sqrt() * x * p[pack(m, m)];
    }
    // upward recurrence in l
    for m in 0..=lm {
        for l in (m + 2)..=lm {
            let lf = l as f64;
            let mf = m as f64;
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0))
                .sqrt();
            p[pack(l, m)] = a * (x * p[pack(l - 1, m)] - b * p[pack(l - 2, m)]);
        }
    }
    p
}

/// Evaluate the real harmonic expansion with flat coefficients `coeffs`
/// (layout `l^2 + l + m`) at one point.
pub fn evaluate(coeffs: &[f64], l_max: u32, cos_theta: f64, phi: f64) -> f64 {
    let table = normalized_legendre_table(l_max, cos_theta);
    let pack = |l: usize, m: usize| l * (l + 1) / 2 + m;
    let sqrt2 = std::f64::consts::SQRT_2;
    let mut acc = 0.0;
    for l in 0..=l_max {
        acc += coeffs[index(l, 0)] * table[pack(l as usize, 0)];
        for m in 1..=l {
            let (s, c) = (m as f64 * phi).sin_cos();
            let base = sqrt2 * table[pack(l as usize, m as usize)];
            acc += coeffs[index(l, m as i32)] * base * c;
            acc += coeffs[index(l, -(m as i32))] * base * s;
        }
    }
    acc
}

/// Synthesize the expansion on a `thetas x phis` grid (theta-major rows).
pub fn synthesize(coeffs: &[f64], l_max: u32, thetas: &[f64], phis: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(thetas.len() * phis.len());
    for &theta in thetas {
        let table = normalized_legendre_table(l_max, theta.cos());
        let pack = |l: usize, m: usize| l * (l + 1) / 2 + m;
        let sqrt2 = std::f64::consts::SQRT_2;
        for &phi in phis {
            let mut acc = 0.0;
            for l in 0..=l_max {
                acc += coeffs[index(l, 0)] * table[pack(l as usize, 0)];
                for m in 1..=l {
                    let (s, c) = (m as f64 * phi).sin_cos();
                    let base = sqrt2 * table[pack(l as usize, m as usize)];
                    acc += coeffs[index(l, m as i32)] * base * c;
                    acc += coeffs[index(l, -(m as i32))] * base * s;
                }
            }
            out.push(acc);
        }
    }
    out
}

/// Recover coefficients of a band-limited field sampled on a
/// Gauss-Legendre (colatitude) x uniform (longitude) grid.
///
/// Exact up to rounding when `gl_nodes.len() > l_max` and
/// `phis.len() >= 2 l_max + 1` with `phis[j] = 2 pi j / n_phi`.
pub fn analyze(
    values: &[f64],
    l_max: u32,
    gl_nodes: &[f64],
    gl_weights: &[f64],
    n_phi: usize,
) -> Vec<f64> {
    assert_eq!(values.len(), gl_nodes.len() * n_phi);
    let mut coeffs = vec![0.0; ((l_max + 1) * (l_max + 1)) as usize];
    let sqrt2 = std::f64::consts::SQRT_2;
    let dphi = 2.0 * PI / n_phi as f64;
    for (ti, (&x, &w)) in gl_nodes.iter().zip(gl_weights).enumerate() {
        let table = normalized_legendre_table(l_max, x);
        let pack = |l: usize, m: usize| l * (l + 1) / 2 + m;
        for pj in 0..n_phi {
            let phi = dphi * pj as f64;
            let v = values[ti * n_phi + pj] * w * dphi;
            for l in 0..=l_max {
                coeffs[index(l, 0)] += v * table[pack(l as usize, 0)];
                for m in 1..=l {
                    let (s, c) = (m as f64 * phi).sin_cos();
                    let base = sqrt2 * table[pack(l as usize, m as usize)];
                    coeffs[index(l, m as i32)] += v * base * c;
                    coeffs[index(l, -(m as i32))] += v * base * s;
                }
            }
        }
    }
    coeffs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::gauss_legendre;
    use approx::assert_relative_eq;

    /// Orthonormality of the real basis up to degree 8 under the exact
    /// Gauss-Legendre x uniform quadrature.
    #[test]
    fn orthonormal_basis() {
        let l_max = 8u32;
        let (nodes, weights) = gauss_legendre(16);
        let n_phi = 24;
        let dphi = 2.0 * PI / n_phi as f64;
        let dim = ((l_max + 1) * (l_max + 1)) as usize;
        let mut gram = vec![0.0; dim * dim];
        for (gi, &x) in nodes.iter().enumerate() {
            for pj in 0..n_phi {
                let phi = dphi * pj as f64;
                let mut basis = vec![0.0; dim];
                for l in 0..=l_max {
                    for m in -(l as i32)..=(l as i32) {
                        let mut unit = vec![0.0; dim];
                        unit[index(l, m)] = 1.0;
                        basis[index(l, m)] = evaluate(&unit, l_max, x, phi);
                    }
                }
                let w = weights[gi] * dphi;
                for a in 0..dim {
                    for b in a..dim {
                        gram[a * dim + b] += w * basis[a] * basis[b];
                    }
                }
            }
        }
        for a in 0..dim {
            for b in a..dim {
                let expected = if a == b { 1.0 } else { 0.0 };
                assert!(
                    (gram[a * dim + b] - expected).abs() < 1e-12,
                    "gram[{a},{b}] = {}",
                    gram[a * dim + b]
                );
            }
        }
    }

    #[test]
    fn constant_harmonic_value() {
        let coeffs = vec![1.0];
        let v = evaluate(&coeffs, 0, 0.3, 1.1);
        assert_relative_eq!(v, (1.0 / (4.0 * PI)).sqrt(), max_relative = 1e-15);
    }

    #[test]
    fn explicit_y20() {
        // Y_20 = sqrt(5/16pi) (3 cos^2 theta - 1)
        let l_max = 2;
        let mut coeffs = vec![0.0; 9];
        coeffs[index(2, 0)] = 1.0;
        for &ct in &[-0.9, -0.2, 0.0, 0.5, 0.99] {
            let v = evaluate(&coeffs, l_max, ct, 0.7);
            let expected = (5.0 / (16.0 * PI)).sqrt() * (3.0 * ct * ct - 1.0);
            assert_relative_eq!(v, expected, max_relative = 1e-13, epsilon = 1e-14);
        }
    }
}
