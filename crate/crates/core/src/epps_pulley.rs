//! Epps–Pulley statistic with a standard normal weight.
//!
//! On studentized data the weighted L2 distance between the empirical and the
//! standard normal characteristic functions has the closed form
//!
//! ```text
//! T_n = n^{-1} sum_j sum_k exp(-(z_j - z_k)^2 / 2) - sqrt(2) sum_j exp(-z_j^2 / 4) + n / sqrt(3)
//! ```
//!
//! with `I_n = T_n / n`.

use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, SQRT_2};

use crate::critical::CriticalSource;
use crate::ecf::check_alpha;
use crate::error::{Error, Result};
use crate::sample::{studentize, Divisor, Sample, StudentizedSample};

const FRAC_1_SQRT_3: f64 = 0.577_350_269_189_625_8;

/// Which algebraic form of the closed-form statistic to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpForm {
    /// Expansion of the defining integral (middle term `sqrt(2) exp(-z^2/4)`).
    #[default]
    Reference,
    /// Middle term `2 exp(-z^2/2)` as it is commonly typeset. Does not equal
    /// the integral; kept only to document the difference.
    AsPrinted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpStatistic {
    pub i_n: f64,
    pub t_n: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpResult {
    pub i_n: f64,
    pub t_n: f64,
    pub critical_value: f64,
    pub reject: bool,
    pub alpha: f64,
    pub n: usize,
    pub form: EpForm,
}

/// Samples up to this size use the plain pairwise sum.
const DIRECT_PAIR_LIMIT: usize = 96;
/// Points with `|z|` above this radius are paired directly; the rest go
/// through the power-series expansion.
const SERIES_RADIUS: f64 = 4.0;

/// `sum_j sum_k exp(-(z_j - z_k)^2 / 2)` over all ordered pairs.
pub fn gaussian_pair_sum(z: &[f64]) -> f64 {
    if z.len() <= DIRECT_PAIR_LIMIT {
        gaussian_pair_sum_direct(z)
    } else {
        gaussian_pair_sum_series(z)
    }
}

pub(crate) fn gaussian_pair_sum_direct(z: &[f64]) -> f64 {
    let mut off = 0.0;
    for (j, &a) in z.iter().enumerate() {
        off += z[j + 1..]
            .iter()
            .map(|&b| {
                let d = a - b;
                (-0.5 * d * d).exp()
            })
            .sum::<f64>();
    }
    z.len() as f64 + 2.0 * off
}

/// Uses `exp(-(a-b)^2/2) = e_a e_b sum_m (ab)^m / m!`, so that the double sum
/// over points with `|z| <= R` collapses to `sum_m A_m^2` with
/// `A_m = sum_j e_j z_j^m / sqrt(m!)`. Every `A_m^2` is non-negative, so the
/// truncation error is bounded by a geometric tail once `m + 1 > R^2`.
/// Pairs involving points outside the radius are summed directly.
pub(crate) fn gaussian_pair_sum_series(z: &[f64]) -> f64 {
    let (core, outer): (Vec<f64>, Vec<f64>) = z.iter().partition(|v| v.abs() <= SERIES_RADIUS);

    let mut u: Vec<f64> = core.iter().map(|&v| (-0.5 * v * v).exp()).collect();
    let r2 = SERIES_RADIUS * SERIES_RADIUS;
    let mut core_sum = 0.0;
    let mut m = 0usize;
    loop {
        let a: f64 = u.iter().sum();
        core_sum += a * a;
        let ratio = r2 / (m + 1) as f64;
        if ratio < 0.5 {
            let b: f64 = u.iter().map(|v| v.abs()).sum();
            if b * b * ratio / (1.0 - ratio) <= 1e-17 * core_sum {
                break;
            }
        }
        m += 1;
        let scale = 1.0 / (m as f64).sqrt();
        for (uj, &zj) in u.iter_mut().zip(&core) {
            *uj *= zj * scale;
        }
    }

    let mut cross = 0.0;
    for &a in &outer {
        cross += core
            .iter()
            .map(|&b| {
                let d = a - b;
                (-0.5 * d * d).exp()
            })
            .sum::<f64>();
    }
    core_sum + 2.0 * cross + gaussian_pair_sum_direct(&outer)
}

pub fn ep_statistic(s: &StudentizedSample, form: EpForm) -> Result<EpStatistic> {
    let z = s.z();
    if z.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = z.len() as f64;
    let pair = gaussian_pair_sum(z) / n;
    let middle = match form {
        EpForm::Reference => SQRT_2 * z.iter().map(|v| (-0.25 * v * v).exp()).sum::<f64>(),
        EpForm::AsPrinted => 2.0 * z.iter().map(|v| (-0.5 * v * v).exp()).sum::<f64>(),
    };
    let t_n = pair - middle + n * FRAC_1_SQRT_3;
    Ok(EpStatistic { i_n: t_n / n, t_n })
}

/// Composite Gauss–Legendre rule on a finite interval.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureSettings {
    lower: f64,
    upper: f64,
    panels: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureSettings {
    pub fn new(lower: f64, upper: f64, panels: usize, points_per_panel: usize) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite() && lower < upper) {
            return Err(Error::InvalidParameters(format!(
                "quadrature range [{lower}, {upper}] is not a finite interval"
            )));
        }
        if panels == 0 || points_per_panel < 2 {
            return Err(Error::InvalidParameters(
                "quadrature needs at least one panel and two points per panel".to_string(),
            ));
        }
        let (nodes, weights) = gauss_legendre(points_per_panel);
        Ok(Self {
            lower,
            upper,
            panels,
            nodes,
            weights,
        })
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        let h = (self.upper - self.lower) / self.panels as f64;
        let mut total = 0.0;
        for p in 0..self.panels {
            let mid = self.lower + (p as f64 + 0.5) * h;
            let panel: f64 = self
                .nodes
                .iter()
                .zip(&self.weights)
                .map(|(x, w)| w * f(mid + 0.5 * h * x))
                .sum();
            total += 0.5 * h * panel;
        }
        total
    }
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        Self::new(-8.0, 8.0, 64, 16).expect("valid default quadrature")
    }
}

/// Nodes and weights of the n-point Gauss–Legendre rule on [-1, 1].
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Numerically integrates `|phi_S(t) - exp(-t^2/2)|^2 phi(t)` with `phi` the
/// standard normal density. Equals `I_n` up to quadrature error.
pub fn ep_quadrature_oracle(s: &StudentizedSample, grid: &QuadratureSettings) -> Result<f64> {
    let z = s.z();
    if z.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = z.len() as f64;
    let norm = 1.0 / (2.0 * PI).sqrt();
    Ok(grid.integrate(|t| {
        let (mut re, mut im) = (0.0, 0.0);
        for v in z {
            let (s, c) = (t * v).sin_cos();
            re += c;
            im += s;
        }
        let g = (-0.5 * t * t).exp();
        let dr = re / n - g;
        let di = im / n;
        (dr * dr + di * di) * norm * g
    }))
}

/// Epps–Pulley test at level `alpha`; rejects when `T_n` exceeds the
/// critical value for this sample size.
pub fn ep_test(sample: &Sample, alpha: f64, critical: &CriticalSource) -> Result<EpResult> {
    ep_test_with(sample, alpha, critical, EpForm::Reference, Divisor::NMinusOne)
}

pub fn ep_test_with(
    sample: &Sample,
    alpha: f64,
    critical: &CriticalSource,
    form: EpForm,
    divisor: Divisor,
) -> Result<EpResult> {
    check_alpha(alpha)?;
    let s = studentize(sample, divisor)?;
    let critical_value = critical.critical_value(crate::suite::TestKind::Ep, s.len(), alpha)?;
    ep_decide(&s, alpha, critical_value, form)
}

pub(crate) fn ep_decide(
    s: &StudentizedSample,
    alpha: f64,
    critical_value: f64,
    form: EpForm,
) -> Result<EpResult> {
    let stat = ep_statistic(s, form)?;
    Ok(EpResult {
        i_n: stat.i_n,
        t_n: stat.t_n,
        critical_value,
        reject: stat.t_n > critical_value,
        alpha,
        n: s.len(),
        form,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn two_point() -> StudentizedSample {
        StudentizedSample::from_standardized(vec![-1.0, 1.0]).unwrap()
    }

    #[test]
    fn two_point_closed_form() {
        let e = std::f64::consts::E;
        let expected = (1.0 + e.powi(-2)) - 2.0 * SQRT_2 * (-0.25f64).exp() + 2.0 / 3f64.sqrt();
        let st = ep_statistic(&two_point(), EpForm::Reference).unwrap();
        assert_abs_diff_eq!(st.t_n, expected, epsilon = 1e-15);
        assert_abs_diff_eq!(st.t_n, 0.087_254_562, epsilon = 1e-9);
        assert_abs_diff_eq!(st.i_n, st.t_n / 2.0, epsilon = 1e-16);
    }

    #[test]
    fn as_printed_differs() {
        let st = ep_statistic(&two_point(), EpForm::AsPrinted).unwrap();
        // negative, so it cannot be the weighted squared distance
        assert!(st.t_n < 0.0);
        assert_abs_diff_eq!(st.t_n, -0.136_086_817_234_669, epsilon = 1e-12);
    }

    #[test]
    fn oracle_two_point() {
        let q = ep_quadrature_oracle(&two_point(), &QuadratureSettings::default()).unwrap();
        assert_abs_diff_eq!(q, 0.043_627_281, epsilon = 1e-9);
    }

    #[test]
    fn gauss_legendre_exact_for_polynomials() {
        let g = QuadratureSettings::new(-1.0, 2.0, 1, 5).unwrap();
        // degree 9 polynomial integrates exactly
        let v = g.integrate(|x| x.powi(9) + 3.0 * x * x);
        let exact = (2f64.powi(10) - 1.0) / 10.0 + (8.0 + 1.0);
        assert_abs_diff_eq!(v, exact, epsilon = 1e-11);
    }

    #[test]
    fn series_matches_direct() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [97, 150, 400, 1000] {
            for heavy in [false, true] {
                let z: Vec<f64> = (0..n)
                    .map(|_| {
                        let v: f64 = rng.sample(StandardNormal);
                        if heavy {
                            v / rng.random::<f64>().max(0.05)
                        } else {
                            v
                        }
                    })
                    .collect();
                let d = gaussian_pair_sum_direct(&z);
                let s = gaussian_pair_sum_series(&z);
                assert!((d - s).abs() <= 1e-13 * d, "n={n} heavy={heavy} {d} {s}");
            }
        }
    }

    #[test]
    fn quadrature_rejects_bad_settings() {
        assert!(QuadratureSettings::new(1.0, -1.0, 4, 4).is_err());
        assert!(QuadratureSettings::new(-1.0, 1.0, 0, 4).is_err());
        assert!(QuadratureSettings::new(-1.0, f64::INFINITY, 4, 4).is_err());
    }

    #[test]
    fn permutation_and_sign_flip() {
        let z = vec![-1.3, 0.2, 0.7, 1.9, -0.4, -1.1];
        let s1 = StudentizedSample::from_standardized(z.clone()).unwrap();
        let mut rev: Vec<f64> = z.iter().rev().map(|v| -v).collect();
        rev.rotate_left(2);
        let s2 = StudentizedSample::from_standardized(rev).unwrap();
        let a = ep_statistic(&s1, EpForm::Reference).unwrap().t_n;
        let b = ep_statistic(&s2, EpForm::Reference).unwrap().t_n;
        assert_abs_diff_eq!(a, b, epsilon = 1e-14);
    }
}
