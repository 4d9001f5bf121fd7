//! Modified spherical Bessel functions of the first kind, `i_l(x)`.
//!
//! Small arguments use the ascending power series; elsewhere a Miller-style
//! backward recurrence normalized against `i_0(x) = sinh(x)/x` avoids the
//! instability of forward recurrence. These functions serve as verification
//! oracles for the degree-l mode solver with a linear consumption law.

use super::KernelError;

/// Largest argument before `sinh` overflows with headroom to spare.
const X_MAX: f64 = 705.0;

/// `i_l(x)` for `l >= 0`, `x >= 0`.
pub fn bessel_i_spherical(l: u32, x: f64) -> Result<f64, KernelError> {
    if !x.is_finite() || x < 0.0 {
        return Err(KernelError::Domain(format!("bessel_i_spherical needs x >= 0, got {x}")));
    }
    if x > X_MAX {
        return Err(KernelError::RangeOverflow(format!(
            "bessel_i_spherical overflows for x = {x} > {X_MAX}"
        )));
    }
    if x == 0.0 {
        return Ok(if l == 0 { 1.0 } else { 0.0 });
    }
    if l == 0 {
        return Ok(x.sinh() / x);
    }
    if x < 0.5 * (l as f64 + 1.0) {
        Ok(series(l, x))
    } else {
        Ok(miller(l, x))
    }
}

/// Ratio `i_{l+1}(x) / i_l(x)` by downward continued fraction. Well defined
/// for all `l`, `x > 0`, including degrees where `i_l` itself underflows.
pub fn bessel_i_ratio(l: u32, x: f64) -> Result<f64, KernelError> {
    if !x.is_finite() || x <= 0.0 {
        return Err(KernelError::Domain(format!("bessel_i_ratio needs x > 0, got {x}")));
    }
    let eval = |depth: u32| -> f64 {
        let top = l + depth;
        let mut r = x / (2.0 * top as f64 + 3.0); // asymptotic tail value
        let mut k = top;
        while k > l {
            r = x / ((2.0 * k as f64 + 1.0) + x * r);
            k -= 1;
        }
        r
    };
    let mut depth = 32;
    let mut prev = eval(depth);
    for _ in 0..8 {
        depth += 32;
        let next = eval(depth);
        if (next - prev).abs() <= 1e-15 * next.abs() {
            return Ok(next);
        }
        prev = next;
    }
    Ok(prev)
}

/// Ascending series: `i_l(x) = x^l / (2l+1)!! * sum_j (x^2/2)^j / (j! (2l+3)(2l+5)...(2l+2j+1))`.
fn series(l: u32, x: f64) -> f64 {
    // Leading coefficient as a running product so that a genuinely
    // subnormal result underflows gracefully instead of dividing overflows.
    let mut lead = 1.0;
    for k in 1..=l {
        lead *= x / (2.0 * k as f64 + 1.0);
    }
    if lead == 0.0 {
        return 0.0;
    }
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut j = 0.0;
    loop {
        term *= 0.5 * x * x / ((j + 1.0) * (2.0 * l as f64 + 2.0 * j + 3.0));
        sum += term;
        j += 1.0;
        if term < 1e-17 * sum || j > 200.0 {
            return lead * sum;
        }
    }
}

/// Backward (Miller) recurrence `i_{k-1} = i_{k+1} + ((2k+1)/x) i_k`
/// normalized by `i_0`, with an adaptively raised starting order.
fn miller(l: u32, x: f64) -> f64 {
    let run = |start: u32| -> f64 {
        let mut up = 0.0_f64; // trial i_{start+1}
        let mut cur = 1e-280; // trial i_{start}
        let mut target = 0.0;
        let mut k = start;
        loop {
            let down = up + (2.0 * k as f64 + 1.0) / x * cur;
            up = cur;
            cur = down;
            if k == l + 1 {
                target = cur;
            }
            if k == 1 {
                break;
            }
            k -= 1;
            // rescale to dodge overflow on long recurrences
            if cur.abs() > 1e280 {
                up *= 1e-280;
                cur *= 1e-280;
                target *= 1e-280;
            }
        }
        if l == 0 {
            target = cur;
        }
        // `cur` now holds the trial i_0; normalize by the exact value.
        target * (x.sinh() / x) / cur
    };
    let base = l + 16 + (1.5 * x) as u32;
    let mut prev = run(base);
    let mut extra = 16;
    for _ in 0..8 {
        let next = run(base + extra);
        if (next - prev).abs() <= 1e-15 * next.abs().max(f64::MIN_POSITIVE) {
            return next;
        }
        prev = next;
        extra += 16;
    }
    prev
}
