//! The comparison tests: Lilliefors, Jarque–Bera, Shapiro–Wilk,
//! Anderson–Darling and D'Agostino–Pearson.
//!
//! All statistics are location/scale invariant. Tests calibrated by simulated
//! critical values (LL, AD, and JB by default) report no p-value.

mod anderson_darling;
mod dagostino;
mod jarque_bera;
mod lilliefors;
mod shapiro_wilk;

pub use anderson_darling::{anderson_darling, anderson_darling_statistic, AndersonDarling};
pub use dagostino::{dagostino_pearson, dagostino_pearson_statistic};
pub use jarque_bera::{jarque_bera, jarque_bera_statistic, jarque_bera_with};
pub use lilliefors::{lilliefors, lilliefors_statistic};
pub use shapiro_wilk::{shapiro_wilk, ShapiroWilk, MAX_N as SW_MAX_N, MIN_N as SW_MIN_N};

use crate::error::{Error, Result};
use crate::sample::{studentize, Divisor, Sample};

pub(crate) fn require_min(test: &'static str, n: usize, min: usize) -> Result<()> {
    if n < min {
        Err(Error::TooSmall { test, min, n })
    } else {
        Ok(())
    }
}

/// Studentized values (divisor `n - 1`) in ascending order.
pub(crate) fn sorted_studentized(sample: &Sample) -> Result<Vec<f64>> {
    let mut z = studentize(sample, Divisor::NMinusOne)?.z().to_vec();
    z.sort_by(f64::total_cmp);
    Ok(z)
}
