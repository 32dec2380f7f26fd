use super::{require_min, sorted_studentized};
use crate::critical::CriticalSource;
use crate::ecf::check_alpha;
use crate::error::Result;
use crate::sample::Sample;
use crate::special::{norm_cdf, norm_sf};
use crate::suite::{TestKind, TestResult};

/// Tail probabilities are floored here before taking logs.
const TAIL_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AndersonDarling {
    /// `A^2`
    pub a2: f64,
    /// `A^2 (1 + 0.75/n + 2.25/n^2)`, the estimated-parameters modification.
    pub a2_star: f64,
}

pub fn anderson_darling_statistic(z_sorted: &[f64]) -> AndersonDarling {
    let n = z_sorted.len();
    let nf = n as f64;
    let mut s = 0.0;
    for i in 0..n {
        let lower = norm_cdf(z_sorted[i]).max(TAIL_FLOOR).ln();
        let upper = norm_sf(z_sorted[n - 1 - i]).max(TAIL_FLOOR).ln();
        s += (2 * i + 1) as f64 * (lower + upper);
    }
    let a2 = -nf - s / nf;
    AndersonDarling {
        a2,
        a2_star: a2 * (1.0 + 0.75 / nf + 2.25 / (nf * nf)),
    }
}

/// Reports the modified statistic `A*^2`.
pub fn anderson_darling(sample: &Sample, alpha: f64, crit: &CriticalSource) -> Result<TestResult> {
    check_alpha(alpha)?;
    let n = sample.len();
    require_min("AD", n, TestKind::Ad.min_n())?;
    let z = sorted_studentized(sample)?;
    let statistic = anderson_darling_statistic(&z).a2_star;
    let c = crit.critical_value(TestKind::Ad, n, alpha)?;
    Ok(TestResult::with_critical(TestKind::Ad, statistic, c, alpha, n))
}
