use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::require_min;
use crate::critical::CriticalSource;
use crate::ecf::check_alpha;
use crate::error::Result;
use crate::sample::{CentralMoments, Sample};
use crate::suite::{TestKind, TestResult};

/// `n (S^2 / 6 + (K - 3)^2 / 24)` with moment estimators (divisor `n`) and raw
/// kurtosis `K`.
pub fn jarque_bera_statistic(x: &[f64]) -> Result<f64> {
    let m = CentralMoments::of(x)?;
    let s = m.skewness();
    let k = m.kurtosis() - 3.0;
    Ok(x.len() as f64 * (s * s / 6.0 + k * k / 24.0))
}

/// Jarque–Bera with the asymptotic chi-square(2) p-value.
pub fn jarque_bera(sample: &Sample, alpha: f64) -> Result<TestResult> {
    check_alpha(alpha)?;
    let n = sample.len();
    require_min("JB", n, TestKind::Jb.min_n())?;
    let statistic = jarque_bera_statistic(sample.values())?;
    // chi-square(2) survival function is exp(-x/2)
    let p = ChiSquared::new(2.0).expect("valid dof").sf(statistic);
    Ok(TestResult::with_p_value(TestKind::Jb, statistic, p, alpha, n))
}

/// Jarque–Bera against a simulated finite-sample critical value.
pub fn jarque_bera_with(sample: &Sample, alpha: f64, crit: &CriticalSource) -> Result<TestResult> {
    check_alpha(alpha)?;
    let n = sample.len();
    require_min("JB", n, TestKind::Jb.min_n())?;
    let statistic = jarque_bera_statistic(sample.values())?;
    let c = crit.critical_value(TestKind::Jb, n, alpha)?;
    Ok(TestResult::with_critical(TestKind::Jb, statistic, c, alpha, n))
}
