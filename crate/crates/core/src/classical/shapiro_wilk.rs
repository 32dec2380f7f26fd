//! Shapiro–Wilk W with Royston's (1992, 1995) approximations for the
//! coefficients and for the null distribution of `log(1 - W)`.

use std::f64::consts::PI;

use crate::ecf::check_alpha;
use crate::error::{Error, Result};
use crate::sample::Sample;
use crate::special::{norm_ppf, norm_sf};
use crate::suite::{TestKind, TestResult};

const C1: [f64; 6] = [0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056];
const C2: [f64; 6] = [0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633];
const C3: [f64; 4] = [0.5440, -0.39978, 0.025054, -6.714e-4];
const C4: [f64; 4] = [1.3822, -0.77857, 0.062767, -0.0020322];
const C5: [f64; 4] = [-1.5861, -0.31082, -0.083751, 0.0038915];
const C6: [f64; 3] = [-0.4803, -0.082676, 0.0030302];
const G: [f64; 2] = [-2.273, 0.459];

pub const MIN_N: usize = 3;
pub const MAX_N: usize = 5000;

fn poly(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ci| acc * x + ci)
}

/// Coefficients for one sample size; reusable across samples of that size.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapiroWilk {
    n: usize,
    /// First half of the antisymmetric weight vector, largest first.
    a: Vec<f64>,
}

impl ShapiroWilk {
    pub fn new(n: usize) -> Result<Self> {
        if n < MIN_N {
            return Err(Error::TooSmall { test: "SW", min: MIN_N, n });
        }
        if n > MAX_N {
            return Err(Error::TooLarge { test: "SW", max: MAX_N, n });
        }
        let nn2 = n / 2;
        if n == 3 {
            return Ok(Self {
                n,
                a: vec![std::f64::consts::FRAC_1_SQRT_2],
            });
        }
        let an25 = n as f64 + 0.25;
        let m: Vec<f64> = (1..=nn2)
            .map(|i| norm_ppf((i as f64 - 0.375) / an25))
            .collect();
        let summ2 = 2.0 * m.iter().map(|v| v * v).sum::<f64>();
        let ssumm2 = summ2.sqrt();
        let rsn = 1.0 / (n as f64).sqrt();
        let a1 = poly(&C1, rsn) - m[0] / ssumm2;

        let mut a = vec![0.0; nn2];
        a[0] = a1;
        let (first_free, fac) = if n > 5 {
            let a2 = -m[1] / ssumm2 + poly(&C2, rsn);
            a[1] = a2;
            let fac = ((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1])
                / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2))
                .sqrt();
            (2, fac)
        } else {
            let fac = ((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1)).sqrt();
            (1, fac)
        };
        for i in first_free..nn2 {
            a[i] = -m[i] / fac;
        }
        Ok(Self { n, a })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.a
    }

    /// W for data already sorted ascending.
    pub fn statistic_sorted(&self, x: &[f64]) -> Result<f64> {
        let n = x.len();
        if n != self.n {
            return Err(Error::InvalidParameters(format!(
                "coefficients prepared for n = {}, got {n}",
                self.n
            )));
        }
        let mean = crate::sample::mean(x);
        let ss: f64 = x.iter().map(|v| (v - mean).powi(2)).sum();
        if ss.is_nan() || ss <= 0.0 {
            return Err(Error::DegenerateSample("sample has zero variance".to_string()));
        }
        let num: f64 = self
            .a
            .iter()
            .enumerate()
            .map(|(i, ai)| ai * (x[n - 1 - i] - x[i]))
            .sum();
        Ok((num * num / ss).min(1.0))
    }

    /// Upper-tail p-value of W under normality.
    pub fn p_value(&self, w: f64) -> f64 {
        let n = self.n as f64;
        if self.n == 3 {
            let p = 6.0 / PI * (w.sqrt().asin() - (0.75f64).sqrt().asin());
            return p.clamp(0.0, 1.0);
        }
        let w1 = 1.0 - w;
        if w1 <= 0.0 {
            return 1.0;
        }
        let y = w1.ln();
        if self.n <= 11 {
            let gamma = poly(&G, n);
            if y >= gamma {
                return 0.0;
            }
            let y = -(gamma - y).ln();
            let m = poly(&C3, n);
            let s = poly(&C4, n).exp();
            norm_sf((y - m) / s)
        } else {
            let xx = n.ln();
            let m = poly(&C5, xx);
            let s = poly(&C6, xx).exp();
            norm_sf((y - m) / s)
        }
    }
}

pub fn shapiro_wilk(sample: &Sample, alpha: f64) -> Result<TestResult> {
    check_alpha(alpha)?;
    let sw = ShapiroWilk::new(sample.len())?;
    let mut x = sample.values().to_vec();
    x.sort_by(f64::total_cmp);
    let w = sw.statistic_sorted(&x)?;
    Ok(TestResult::with_p_value(TestKind::Sw, w, sw.p_value(w), alpha, sample.len()))
}
