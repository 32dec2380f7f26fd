use super::{require_min, sorted_studentized};
use crate::critical::CriticalSource;
use crate::ecf::check_alpha;
use crate::error::Result;
use crate::sample::Sample;
use crate::special::norm_cdf;
use crate::suite::{TestKind, TestResult};

/// Kolmogorov–Smirnov distance between the empirical CDF of sorted
/// studentized values and the standard normal CDF.
pub fn lilliefors_statistic(z_sorted: &[f64]) -> f64 {
    let n = z_sorted.len() as f64;
    z_sorted
        .iter()
        .enumerate()
        .map(|(i, &z)| {
            let f = norm_cdf(z);
            let hi = (i + 1) as f64 / n - f;
            let lo = f - i as f64 / n;
            hi.max(lo)
        })
        .fold(0.0, f64::max)
}

pub fn lilliefors(sample: &Sample, alpha: f64, crit: &CriticalSource) -> Result<TestResult> {
    check_alpha(alpha)?;
    let n = sample.len();
    require_min("LL", n, TestKind::Ll.min_n())?;
    let z = sorted_studentized(sample)?;
    let statistic = lilliefors_statistic(&z);
    let c = crit.critical_value(TestKind::Ll, n, alpha)?;
    Ok(TestResult::with_critical(TestKind::Ll, statistic, c, alpha, n))
}
