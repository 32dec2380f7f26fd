use super::require_min;
use crate::ecf::check_alpha;
use crate::error::{Error, Result};
use crate::sample::{CentralMoments, Sample};
use crate::suite::{TestKind, TestResult};

/// Normalizing transform of the sample skewness (D'Agostino 1970).
fn skewness_z(sqrt_b1: f64, n: f64) -> f64 {
    let y = sqrt_b1 * ((n + 1.0) * (n + 3.0) / (6.0 * (n - 2.0))).sqrt();
    let beta2 = 3.0 * (n * n + 27.0 * n - 70.0) * (n + 1.0) * (n + 3.0)
        / ((n - 2.0) * (n + 5.0) * (n + 7.0) * (n + 9.0));
    let w2 = -1.0 + (2.0 * (beta2 - 1.0)).sqrt();
    let delta = 1.0 / (0.5 * w2.ln()).sqrt();
    let a = (2.0 / (w2 - 1.0)).sqrt();
    let ya = y / a;
    delta * (ya + (ya * ya + 1.0).sqrt()).ln()
}

/// Normalizing transform of the raw sample kurtosis (Anscombe & Glynn 1983).
fn kurtosis_z(b2: f64, n: f64) -> Result<f64> {
    let mean = 3.0 * (n - 1.0) / (n + 1.0);
    let var = 24.0 * n * (n - 2.0) * (n - 3.0) / ((n + 1.0).powi(2) * (n + 3.0) * (n + 5.0));
    let x = (b2 - mean) / var.sqrt();
    let sqrt_beta1 = 6.0 * (n * n - 5.0 * n + 2.0) / ((n + 7.0) * (n + 9.0))
        * (6.0 * (n + 3.0) * (n + 5.0) / (n * (n - 2.0) * (n - 3.0))).sqrt();
    let a = 6.0 + 8.0 / sqrt_beta1 * (2.0 / sqrt_beta1 + (1.0 + 4.0 / (sqrt_beta1 * sqrt_beta1)).sqrt());
    let denom = 1.0 + x * (2.0 / (a - 4.0)).sqrt();
    if denom == 0.0 {
        return Err(Error::DegenerateSample(
            "kurtosis transform is undefined for this sample".to_string(),
        ));
    }
    let term1 = 1.0 - 2.0 / (9.0 * a);
    let term2 = ((1.0 - 2.0 / a) / denom).cbrt();
    Ok((term1 - term2) / (2.0 / (9.0 * a)).sqrt())
}

/// `K^2 = Z_1(sqrt b1)^2 + Z_2(b2)^2`.
pub fn dagostino_pearson_statistic(x: &[f64]) -> Result<f64> {
    let n = x.len() as f64;
    let m = CentralMoments::of(x)?;
    let z1 = skewness_z(m.skewness(), n);
    let z2 = kurtosis_z(m.kurtosis(), n)?;
    Ok(z1 * z1 + z2 * z2)
}

pub fn dagostino_pearson(sample: &Sample, alpha: f64) -> Result<TestResult> {
    check_alpha(alpha)?;
    let n = sample.len();
    require_min("DP", n, TestKind::Dp.min_n())?;
    let statistic = dagostino_pearson_statistic(sample.values())?;
    let p = (-0.5 * statistic).exp();
    Ok(TestResult::with_p_value(TestKind::Dp, statistic, p, alpha, n))
}
