//! Standard normal helpers.

use libm::erfc;
use statrs::function::erf::erfc_inv;
use std::f64::consts::SQRT_2;

/// Standard normal CDF.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// Standard normal upper tail `1 - Phi(x)`, accurate for large `x`.
pub fn norm_sf(x: f64) -> f64 {
    0.5 * erfc(x / SQRT_2)
}

/// Standard normal quantile.
pub fn norm_ppf(p: f64) -> f64 {
    let x = -SQRT_2 * erfc_inv(2.0 * p);
    if !x.is_finite() {
        return x;
    }
    // one Newton step against the accurate cdf
    let pdf = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let err = if x > 0.0 { (1.0 - p) - norm_sf(x) } else { norm_cdf(x) - p };
    let step = err / pdf;
    if pdf > 0.0 && step.is_finite() {
        x - step
    } else {
        x
    }
}

/// Two-sided normal p-value `2 (1 - Phi(|x|))`.
pub fn two_sided_p(x: f64) -> f64 {
    erfc(x.abs() / SQRT_2).min(1.0)
}
