//! Validated samples and studentization.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An ordered collection of finite observations, `n >= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    values: Vec<f64>,
}

impl Sample {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput);
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        Ok(Self { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

impl TryFrom<Vec<f64>> for Sample {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl TryFrom<&[f64]> for Sample {
    type Error = Error;

    fn try_from(values: &[f64]) -> Result<Self> {
        Self::new(values.to_vec())
    }
}

/// Divisor used for the scale estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Divisor {
    /// Maximum-likelihood variance, sum of squares over `n`.
    N,
    /// Unbiased variance, sum of squares over `n - 1`.
    #[default]
    NMinusOne,
}

impl Divisor {
    pub fn denominator(self, n: usize) -> f64 {
        match self {
            Divisor::N => n as f64,
            Divisor::NMinusOne => (n - 1) as f64,
        }
    }
}

/// Studentized values `z_j = (x_j - mu_hat) / sigma_hat` together with the
/// estimates that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct StudentizedSample {
    z: Vec<f64>,
    mu_hat: f64,
    sigma_hat: f64,
    divisor: Divisor,
}

impl StudentizedSample {
    pub fn z(&self) -> &[f64] {
        &self.z
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn mu_hat(&self) -> f64 {
        self.mu_hat
    }

    pub fn sigma_hat(&self) -> f64 {
        self.sigma_hat
    }

    pub fn divisor(&self) -> Divisor {
        self.divisor
    }

    /// Wraps already-standardized values without re-estimating location and
    /// scale. Used for hand-built inputs such as `{-1, 1}`.
    pub fn from_standardized(z: Vec<f64>) -> Result<Self> {
        let sample = Sample::new(z)?;
        Ok(Self {
            z: sample.into_values(),
            mu_hat: 0.0,
            sigma_hat: 1.0,
            divisor: Divisor::N,
        })
    }
}

/// Arithmetic mean; two-pass corrected so that the residuals sum to ~0.
pub(crate) fn mean(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let m = values.iter().sum::<f64>() / n;
    let correction = values.iter().map(|x| x - m).sum::<f64>() / n;
    m + correction
}

pub fn studentize(sample: &Sample, divisor: Divisor) -> Result<StudentizedSample> {
    let x = sample.values();
    let n = x.len();
    if n < 2 {
        return Err(Error::DegenerateSample(format!(
            "studentization needs at least 2 observations, got {n}"
        )));
    }
    let mu_hat = mean(x);
    let ss: f64 = x.iter().map(|v| (v - mu_hat).powi(2)).sum();
    let sigma_hat = (ss / divisor.denominator(n)).sqrt();
    if !(sigma_hat.is_finite() && sigma_hat > 0.0) {
        return Err(Error::DegenerateSample(
            "sample has zero variance".to_string(),
        ));
    }
    let z = x.iter().map(|v| (v - mu_hat) / sigma_hat).collect();
    Ok(StudentizedSample {
        z,
        mu_hat,
        sigma_hat,
        divisor,
    })
}

/// Central moments `m2, m3, m4` with divisor `n`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct CentralMoments {
    pub m2: f64,
    pub m3: f64,
    pub m4: f64,
}

impl CentralMoments {
    pub fn of(x: &[f64]) -> Result<Self> {
        let n = x.len() as f64;
        let mu = mean(x);
        let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
        for v in x {
            let d = v - mu;
            let d2 = d * d;
            m2 += d2;
            m3 += d2 * d;
            m4 += d2 * d2;
        }
        m2 /= n;
        m3 /= n;
        m4 /= n;
        if m2.is_nan() || m2 <= 0.0 {
            return Err(Error::DegenerateSample(
                "sample has zero variance".to_string(),
            ));
        }
        Ok(Self { m2, m3, m4 })
    }

    /// Signed sample skewness `sqrt(b1) = m3 / m2^{3/2}`.
    pub fn skewness(&self) -> f64 {
        self.m3 / self.m2.powf(1.5)
    }

    /// Raw (non-excess) sample kurtosis `b2 = m4 / m2^2`.
    pub fn kurtosis(&self) -> f64 {
        self.m4 / (self.m2 * self.m2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn rejects_non_finite_and_empty() {
        assert_eq!(Sample::new(vec![]), Err(Error::EmptyInput));
        assert!(matches!(
            Sample::new(vec![1.0, f64::NAN]),
            Err(Error::NonFinite { index: 1, .. })
        ));
        assert!(Sample::new(vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn symmetric_two_point() {
        let s = studentize(&Sample::new(vec![-1.0, 1.0]).unwrap(), Divisor::N).unwrap();
        assert_eq!(s.z(), &[-1.0, 1.0]);
        assert_eq!(s.mu_hat(), 0.0);
        assert_eq!(s.sigma_hat(), 1.0);
    }

    #[test]
    fn constant_sample_is_degenerate() {
        let x = Sample::new(vec![5.0, 5.0, 5.0]).unwrap();
        for d in [Divisor::N, Divisor::NMinusOne] {
            assert!(matches!(studentize(&x, d), Err(Error::DegenerateSample(_))));
        }
        let one = Sample::new(vec![1.0]).unwrap();
        assert!(matches!(studentize(&one, Divisor::N), Err(Error::DegenerateSample(_))));
    }

    #[test]
    fn four_point_example() {
        let s = studentize(&Sample::new(vec![-2.0, -1.0, 1.0, 2.0]).unwrap(), Divisor::N).unwrap();
        assert_abs_diff_eq!(s.sigma_hat(), 2.5f64.sqrt(), epsilon = 1e-15);
        let expected = [-1.264911, -0.632456, 0.632456, 1.264911];
        for (z, e) in s.z().iter().zip(expected) {
            assert_abs_diff_eq!(*z, e, epsilon = 1e-6);
        }
        let m: f64 = s.z().iter().sum::<f64>() / 4.0;
        let v: f64 = s.z().iter().map(|z| z * z).sum::<f64>() / 4.0;
        assert_abs_diff_eq!(m, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(v, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn moments_of_symmetric_sample() {
        let m = CentralMoments::of(&[-2.0, -1.0, 1.0, 2.0]).unwrap();
        assert_abs_diff_eq!(m.m2, 2.5);
        assert_abs_diff_eq!(m.skewness(), 0.0);
        assert_abs_diff_eq!(m.kurtosis(), 8.5 / 6.25);
    }
}
