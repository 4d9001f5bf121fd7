//! Adaptive Gauss-Kronrod quadrature (15-point Kronrod / 7-point Gauss),
//! a cumulative fixed-rule integrator for smooth integrands on fine grids,
//! and Gauss-Legendre node generation.

use std::collections::BinaryHeap;

use super::{KernelError, Tolerance};

// 15-point Kronrod abscissae on [0, 1] (positive half) and weights, with the
// embedded 7-point Gauss weights. QUADPACK dqk15 constants.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_33,
    0.949_107_912_342_758_524_526_189_684_047_85,
    0.864_864_423_359_769_072_789_712_788_640_93,
    0.741_531_185_599_394_439_863_864_773_280_79,
    0.586_087_235_467_691_130_294_144_838_258_73,
    0.405_845_151_377_397_166_906_606_412_076_96,
    0.207_784_955_007_898_467_600_689_403_773_24,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_97,
    0.063_092_092_629_978_553_290_700_663_189_2,
    0.104_790_010_322_250_183_839_876_322_541_52,
    0.140_653_259_715_525_918_745_189_590_510_24,
    0.169_004_726_639_267_902_826_583_426_598_55,
    0.190_350_578_064_785_409_913_256_402_421_01,
    0.204_432_940_075_298_892_414_161_999_234_65,
    0.209_482_141_084_727_828_012_999_174_891_71,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_08,
    0.279_705_391_489_276_667_901_467_771_423_78,
    0.381_830_050_505_118_944_950_369_775_488_98,
    0.417_959_183_673_469_387_755_102_040_816_33,
];

/// One GK15 panel: returns (integral, error estimate, integral of |f|).
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<(f64, f64, f64), KernelError> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let eval = |x: f64| -> Result<f64, KernelError> {
        let v = f(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(KernelError::NonFiniteIntegrand { x })
        }
    };

    let fc = eval(center)?;
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    let mut resabs = WGK[7] * fc.abs();
    let mut fv = [0.0_f64; 15];
    fv[7] = fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = eval(center - dx)?;
        let f2 = eval(center + dx)?;
        fv[j] = f1;
        fv[14 - j] = f2;
        kronrod += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut resasc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        resasc += WGK[j] * ((fv[j] - mean).abs() + (fv[14 - j] - mean).abs());
    }
    let mut err = ((kronrod - gauss) * half).abs();
    resasc *= half.abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    Ok((kronrod * half, err, resabs * half.abs()))
}

#[derive(Debug)]
struct Panel {
    err: f64,
    a: f64,
    b: f64,
    integral: f64,
    resabs: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err && self.a == other.a
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // worst error first; ties broken by interval start for determinism
        self.err
            .total_cmp(&other.err)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

const MAX_PANELS: usize = 4096;

/// Adaptive integral of `f` over `[a, b]`.
///
/// Subdivision stops once the summed error estimate drops below
/// `max(tol.abs, tol.rel * integral_of_|f|)`.
pub fn quad<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: &Tolerance) -> Result<f64, KernelError> {
    if !a.is_finite() || !b.is_finite() || a > b {
        return Err(KernelError::InvalidInterval { lo: a, hi: b });
    }
    if a == b {
        return Ok(0.0);
    }
    let (integral, err, resabs) = gk15(&f, a, b)?;
    let mut heap = BinaryHeap::new();
    heap.push(Panel { err, a, b, integral, resabs });
    let mut total_err = err;
    let mut total_resabs = resabs;

    loop {
        let threshold = tol.abs.max(tol.rel * total_resabs);
        if total_err <= threshold {
            return Ok(heap.iter().map(|p| p.integral).sum());
        }
        if heap.len() >= MAX_PANELS {
            return Err(KernelError::QuadNotConverged { error: total_err, intervals: heap.len() });
        }
        let worst = heap.pop().expect("heap is never empty here");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval no longer splittable; accept its estimate
            total_err -= worst.err;
            let integral = worst.integral;
            let rest: f64 = heap.iter().map(|p| p.integral).sum();
            if total_err <= tol.abs.max(tol.rel * total_resabs) {
                return Ok(integral + rest);
            }
            return Err(KernelError::QuadNotConverged {
                error: total_err + worst.err,
                intervals: heap.len() + 1,
            });
        }
        let (i1, e1, ra1) = gk15(&f, worst.a, mid)?;
        let (i2, e2, ra2) = gk15(&f, mid, worst.b)?;
        total_err += e1 + e2 - worst.err;
        total_resabs += ra1 + ra2 - worst.resabs;
        heap.push(Panel { err: e1, a: worst.a, b: mid, integral: i1, resabs: ra1 });
        heap.push(Panel { err: e2, a: mid, b: worst.b, integral: i2, resabs: ra2 });
    }
}

/// Cumulative integral of a smooth `f` along sorted `points`: returns
/// `F[k] = integral from points[0] to points[k]`, computed with one GK15
/// panel per gap (no adaptivity, error continuity across neighboring points).
pub fn cumulative_integral<F: Fn(f64) -> f64>(
    f: F,
    points: &[f64],
) -> Result<Vec<f64>, KernelError> {
    assert!(points.len() >= 2, "need at least two points");
    debug_assert!(points.windows(2).all(|w| w[0] < w[1]));
    let mut out = Vec::with_capacity(points.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in points.windows(2) {
        let (v, _, _) = gk15(&f, w[0], w[1])?;
        acc += v;
        out.push(acc);
    }
    Ok(out)
}

/// Gauss-Legendre nodes and weights on [-1, 1], by Newton iteration on the
/// Legendre polynomial recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi-style initial guess for the i-th positive root.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // p_n(x) and p_n'(x) via the three-term recurrence.
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}
