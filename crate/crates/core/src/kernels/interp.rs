//! Piecewise cubic Hermite interpolation of tabulated radial profiles.
//!
//! Two builders: one taking exact node derivatives (used for profiles coming
//! out of the ODE integrator, where the derivative is part of the state) and
//! a Fritsch-Carlson monotone builder for value-only data.

use super::KernelError;

#[derive(Debug, Clone)]
pub struct CubicHermite {
    x: Vec<f64>,
    y: Vec<f64>,
    dy: Vec<f64>,
}

impl CubicHermite {
    /// Build from nodes, values and exact node derivatives.
    pub fn from_values_and_derivs(
        x: Vec<f64>,
        y: Vec<f64>,
        dy: Vec<f64>,
    ) -> Result<Self, KernelError> {
        if x.len() < 2 || x.len() != y.len() || x.len() != dy.len() {
            return Err(KernelError::InvalidGrid("interpolant needs matching arrays, len >= 2".into()));
        }
        if !x.windows(2).all(|w| w[0] < w[1]) {
            return Err(KernelError::InvalidGrid("interpolation nodes must be strictly increasing".into()));
        }
        if !(y.iter().all(|v| v.is_finite()) && dy.iter().all(|v| v.is_finite())) {
            return Err(KernelError::InvalidGrid("non-finite interpolation data".into()));
        }
        Ok(Self { x, y, dy })
    }

    /// Build from values alone with Fritsch-Carlson slopes: the interpolant
    /// is monotone on every interval where the data are.
    pub fn monotone_from_values(x: Vec<f64>, y: Vec<f64>) -> Result<Self, KernelError> {
        if x.len() < 2 || x.len() != y.len() {
            return Err(KernelError::InvalidGrid("interpolant needs matching arrays, len >= 2".into()));
        }
        let n = x.len();
        let mut delta = vec![0.0; n - 1];
        for k in 0..n - 1 {
            delta[k] = (y[k + 1] - y[k]) / (x[k + 1] - x[k]);
        }
        let mut dy = vec![0.0; n];
        dy[0] = delta[0];
        dy[n - 1] = delta[n - 2];
        for k in 1..n - 1 {
            if delta[k - 1] * delta[k] <= 0.0 {
                dy[k] = 0.0;
            } else {
                // harmonic mean weighted by interval widths
                let w1 = 2.0 * (x[k + 1] - x[k]) + (x[k] - x[k - 1]);
                let w2 = (x[k + 1] - x[k]) + 2.0 * (x[k] - x[k - 1]);
                dy[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
            }
        }
        // clamp endpoint slopes to preserve monotonicity
        if dy[0] * delta[0] <= 0.0 {
            dy[0] = 0.0;
        } else if delta.len() > 1 && delta[0] * delta[1] <= 0.0 && dy[0].abs() > 3.0 * delta[0].abs() {
            dy[0] = 3.0 * delta[0];
        }
        if dy[n - 1] * delta[n - 2] <= 0.0 {
            dy[n - 1] = 0.0;
        }
        Self::from_values_and_derivs(x, y, dy)
    }

    pub fn x_min(&self) -> f64 {
        self.x[0]
    }

    pub fn x_max(&self) -> f64 {
        *self.x.last().unwrap()
    }

    fn segment(&self, r: f64) -> usize {
        let n = self.x.len();
        let idx = self.x.partition_point(|&v| v <= r);
        idx.clamp(1, n - 1) - 1
    }

    /// Interpolated value; queries are clamped to the covered interval.
    pub fn eval(&self, r: f64) -> f64 {
        let r = r.clamp(self.x[0], *self.x.last().unwrap());
        let k = self.segment(r);
        if r == self.x[k] {
            return self.y[k];
        }
        let h = self.x[k + 1] - self.x[k];
        let t = (r - self.x[k]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * self.y[k]
            + (t3 - 2.0 * t2 + t) * h * self.dy[k]
            + (-2.0 * t3 + 3.0 * t2) * self.y[k + 1]
            + (t3 - t2) * h * self.dy[k + 1]
    }

    /// Interpolated first derivative.
    pub fn eval_deriv(&self, r: f64) -> f64 {
        let r = r.clamp(self.x[0], *self.x.last().unwrap());
        let k = self.segment(r);
        if r == self.x[k] {
            return self.dy[k];
        }
        let h = self.x[k + 1] - self.x[k];
        let t = (r - self.x[k]) / h;
        let t2 = t * t;
        (6.0 * t2 - 6.0 * t) / h * self.y[k]
            + (3.0 * t2 - 4.0 * t + 1.0) * self.dy[k]
            + (-6.0 * t2 + 6.0 * t) / h * self.y[k + 1]
            + (3.0 * t2 - 2.0 * t) * self.dy[k + 1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn reproduces_cubic_exactly() {
        let f = |r: f64| 2.0 * r * r * r - r * r + 3.0 * r - 0.5;
        let df = |r: f64| 6.0 * r * r - 2.0 * r + 3.0;
        let x: Vec<f64> = (0..11).map(|i| i as f64 / 10.0).collect();
        let y: Vec<f64> = x.iter().map(|&r| f(r)).collect();
        let dy: Vec<f64> = x.iter().map(|&r| df(r)).collect();
        let interp = CubicHermite::from_values_and_derivs(x, y, dy).unwrap();
        for i in 0..=50 {
            let r = i as f64 / 50.0;
            assert_relative_eq!(interp.eval(r), f(r), max_relative = 1e-13);
            assert_relative_eq!(interp.eval_deriv(r), df(r), max_relative = 1e-12);
        }
    }

    #[test]
    fn node_values_exact() {
        let x = vec![0.0, 0.3, 1.0];
        let y = vec![1.0, -2.0, 4.0];
        let dy = vec![0.0, 1.0, -1.0];
        let interp = CubicHermite::from_values_and_derivs(x.clone(), y.clone(), dy).unwrap();
        for (xi, yi) in x.iter().zip(&y) {
            assert_eq!(interp.eval(*xi), *yi);
        }
    }

    proptest! {
        /// Fritsch-Carlson interpolation of increasing data is nondecreasing.
        #[test]
        fn monotone_preserved(increments in proptest::collection::vec(0.01_f64..2.0, 5..20)) {
            let mut y = vec![0.0];
            for inc in &increments {
                y.push(y.last().unwrap() + inc);
            }
            let x: Vec<f64> = (0..y.len()).map(|i| i as f64).collect();
            let hi = *x.last().unwrap();
            let interp = CubicHermite::monotone_from_values(x, y).unwrap();
            let mut prev = interp.eval(0.0);
            let steps = 400;
            for i in 1..=steps {
                let r = hi * i as f64 / steps as f64;
                let v = interp.eval(r);
                prop_assert!(v >= prev - 1e-12);
                prev = v;
            }
        }
    }
}
