//! Standard normal distribution functions.
//!
//! `cdf` uses the `libm` port of the fdlibm `erfc`, accurate to about one ulp.
//! The complementary form is used on both tails so that probabilities far in
//! the tails keep their relative precision. `quantile` starts from the
//! `statrs` inverse error function and takes one Halley step against `cdf`.

use libm::erfc;
use statrs::function::erf::erfc_inv;
use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Φ(x).
pub fn cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// 1 − Φ(x), without cancellation for large `x`.
pub fn sf(x: f64) -> f64 {
    0.5 * erfc(x * FRAC_1_SQRT_2)
}

pub fn pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Φ⁻¹(p). Returns ±∞ at the endpoints and NaN outside [0, 1].
pub fn quantile(p: f64) -> f64 {
    if !(0.0..=1.0).contains(&p) {
        return f64::NAN;
    }
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }
    let x = -SQRT_2 * erfc_inv(2.0 * p);
    // Halley step on the smaller tail to avoid cancellation.
    let e = if x < 0.0 { cdf(x) - p } else { (1.0 - p) - sf(x) };
    let u = e / pdf(x);
    x - u / (1.0 + 0.5 * x * u)
}

/// Two-sided critical value z such that Φ(z) = (1 + level) / 2.
pub fn two_sided_z(level: f64) -> f64 {
    // (1 + level)/2 loses bits near 1; go through the upper tail instead.
    -quantile((1.0 - level) / 2.0)
}

/// Probability mass of N(mean, sd²) in (lo, hi).
pub fn interval_mass(mean: f64, sd: f64, lo: f64, hi: f64) -> f64 {
    let a = (lo - mean) / sd;
    let b = (hi - mean) / sd;
    if a > 0.0 {
        (sf(a) - sf(b)).max(0.0)
    } else {
        (cdf(b) - cdf(a)).max(0.0)
    }
}
