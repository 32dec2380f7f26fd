//! The single-point empirical characteristic function test (ECFT).
//!
//! For studentized data `z_1..z_n` the statistic is
//!
//! ```text
//! v_n(t) = log |phi_S(t)| + t^2 / 2,     phi_S(t) = (1/n) sum exp(i t z_j)
//! ```
//!
//! Under normality `sqrt(n) v_n(t)` is asymptotically `N(0, c(t))` with
//! `c(t) = cosh(t^2) - 1 - t^4 / 2`, so `v_n(t) / sqrt(c(t) / n)` is compared
//! with standard normal quantiles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sample::{studentize, Divisor, Sample, StudentizedSample};
use crate::special::two_sided_p;

/// Value of the empirical characteristic function at a single point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EcfValue {
    pub re: f64,
    pub im: f64,
    pub t: f64,
}

impl EcfValue {
    pub fn modulus_sq(&self) -> f64 {
        self.re * self.re + self.im * self.im
    }

    pub fn modulus(&self) -> f64 {
        self.re.hypot(self.im)
    }

    pub fn conj(&self) -> Self {
        Self {
            re: self.re,
            im: -self.im,
            t: -self.t,
        }
    }
}

pub fn ecf_at(values: &[f64], t: f64) -> Result<EcfValue> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !t.is_finite() {
        return Err(Error::InvalidPoint { t });
    }
    let (mut re, mut im) = (0.0, 0.0);
    for v in values {
        let (s, c) = (t * v).sin_cos();
        re += c;
        im += s;
    }
    let n = values.len() as f64;
    Ok(EcfValue {
        re: re / n,
        im: im / n,
        t,
    })
}

/// Log-modulus deviation `log |phi_S(t)| + t^2/2` of the studentized ecf from
/// the standard normal characteristic function.
pub fn vn_statistic(s: &StudentizedSample, t: f64) -> Result<f64> {
    if t == 0.0 || !t.is_finite() {
        return Err(Error::InvalidPoint { t });
    }
    let phi = ecf_at(s.z(), t)?;
    let m2 = phi.modulus_sq();
    if m2 == 0.0 {
        return Err(Error::ZeroModulus { t });
    }
    Ok(0.5 * m2.ln() + 0.5 * t * t)
}

/// `c(t) = cosh(t^2) - 1 - t^4/2`, the asymptotic variance of `sqrt(n) v_n(t)`.
pub fn asymptotic_coeff(t: f64) -> f64 {
    let u = t * t;
    if u < 0.5 {
        // sum_{k>=2} u^{2k} / (2k)!; the direct form cancels catastrophically here.
        let u2 = u * u;
        let mut term = u2 * u2 / 24.0;
        let mut sum = 0.0;
        let mut k = 2.0;
        while term > sum * 1e-18 && term > 0.0 {
            sum += term;
            term *= u2 / ((2.0 * k + 1.0) * (2.0 * k + 2.0));
            k += 1.0;
        }
        sum
    } else {
        u.cosh() - 1.0 - 0.5 * u * u
    }
}

/// Settings for [`ecft_test`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EcftConfig {
    pub t: f64,
    pub alpha: f64,
    pub divisor: Divisor,
}

impl Default for EcftConfig {
    fn default() -> Self {
        Self {
            t: 1.0,
            alpha: 0.05,
            divisor: Divisor::NMinusOne,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EcftResult {
    pub v_n: f64,
    pub t: f64,
    /// `v_n / sqrt(c(t) / n)`
    pub standardized: f64,
    pub p_value: f64,
    pub reject: bool,
    pub alpha: f64,
    pub n: usize,
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameters(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )))
    }
}

/// ECFT on already-studentized values.
pub fn ecft_studentized(s: &StudentizedSample, t: f64, alpha: f64) -> Result<EcftResult> {
    check_alpha(alpha)?;
    let v_n = vn_statistic(s, t)?;
    let n = s.len();
    let standardized = v_n / (asymptotic_coeff(t) / n as f64).sqrt();
    let p_value = two_sided_p(standardized);
    Ok(EcftResult {
        v_n,
        t,
        standardized,
        p_value,
        reject: p_value < alpha,
        alpha,
        n,
    })
}

pub fn ecft_test(sample: &Sample, config: &EcftConfig) -> Result<EcftResult> {
    check_alpha(config.alpha)?;
    if config.t == 0.0 || !config.t.is_finite() {
        return Err(Error::InvalidPoint { t: config.t });
    }
    let s = studentize(sample, config.divisor)?;
    ecft_studentized(&s, config.t, config.alpha)
}
