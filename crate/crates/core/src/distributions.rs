//! Seeded samplers for the symmetric alternatives used in the power study.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, Open01, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::sample::Sample;
use crate::special::norm_cdf;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistributionSpec {
    Normal { mu: f64, sigma: f64 },
    Uniform01,
    StudentT { df: u32 },
    Laplace { mu: f64, b: f64 },
    Logistic { mu: f64, s: f64 },
    /// With probability `alpha` a draw comes from `N(0, sigma2nd^2)`,
    /// otherwise from `N(0, 1)`.
    NormalMixture { alpha: f64, sigma2nd: f64 },
}

impl DistributionSpec {
    pub const STANDARD_NORMAL: DistributionSpec = DistributionSpec::Normal { mu: 0.0, sigma: 1.0 };

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameters(msg));
        match *self {
            DistributionSpec::Normal { mu, sigma } => {
                if !mu.is_finite() || !(sigma.is_finite() && sigma > 0.0) {
                    return bad(format!("normal needs finite mu and sigma > 0, got ({mu}, {sigma})"));
                }
            }
            DistributionSpec::Uniform01 => {}
            DistributionSpec::StudentT { df } => {
                if df < 1 {
                    return bad("t needs df >= 1".to_string());
                }
            }
            DistributionSpec::Laplace { mu, b } => {
                if !mu.is_finite() || !(b.is_finite() && b > 0.0) {
                    return bad(format!("laplace needs finite mu and b > 0, got ({mu}, {b})"));
                }
            }
            DistributionSpec::Logistic { mu, s } => {
                if !mu.is_finite() || !(s.is_finite() && s > 0.0) {
                    return bad(format!("logistic needs finite mu and s > 0, got ({mu}, {s})"));
                }
            }
            DistributionSpec::NormalMixture { alpha, sigma2nd } => {
                if !(0.0..=1.0).contains(&alpha) {
                    return bad(format!("mixture proportion must lie in [0, 1], got {alpha}"));
                }
                if !(sigma2nd.is_finite() && sigma2nd > 0.0) {
                    return bad(format!("mixture sigma must be > 0, got {sigma2nd}"));
                }
            }
        }
        Ok(())
    }

    pub fn is_standard_normal(&self) -> bool {
        matches!(self, DistributionSpec::Normal { mu, sigma } if *mu == 0.0 && *sigma == 1.0)
    }

    pub fn is_normal(&self) -> bool {
        matches!(self, DistributionSpec::Normal { .. })
    }

    /// One draw; all randomness comes from `rng`.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            DistributionSpec::Normal { mu, sigma } => {
                let z: f64 = rng.sample(StandardNormal);
                mu + sigma * z
            }
            DistributionSpec::Uniform01 => rng.random::<f64>(),
            DistributionSpec::StudentT { df } => {
                let z: f64 = rng.sample(StandardNormal);
                let chi = ChiSquared::new(df as f64).expect("validated df");
                let v: f64 = chi.sample(rng);
                z / (v / df as f64).sqrt()
            }
            DistributionSpec::Laplace { mu, b } => {
                let u: f64 = rng.sample::<f64, _>(Open01) - 0.5;
                mu - b * u.signum() * (1.0 - 2.0 * u.abs()).ln()
            }
            DistributionSpec::Logistic { mu, s } => {
                let u: f64 = rng.sample(Open01);
                mu + s * (u / (1.0 - u)).ln()
            }
            DistributionSpec::NormalMixture { alpha, sigma2nd } => {
                let pick: f64 = rng.random();
                let z: f64 = rng.sample(StandardNormal);
                if pick < alpha {
                    sigma2nd * z
                } else {
                    z
                }
            }
        }
    }

    /// Fills `out` with independent draws.
    pub fn fill<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        for v in out {
            *v = self.draw(rng);
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            DistributionSpec::Normal { mu, sigma } => norm_cdf((x - mu) / sigma),
            DistributionSpec::Uniform01 => x.clamp(0.0, 1.0),
            DistributionSpec::StudentT { df } => {
                let nu = df as f64;
                let tail = 0.5 * beta_reg(0.5 * nu, 0.5, nu / (nu + x * x));
                if x > 0.0 {
                    1.0 - tail
                } else {
                    tail
                }
            }
            DistributionSpec::Laplace { mu, b } => {
                let d = (x - mu) / b;
                if d < 0.0 {
                    0.5 * d.exp()
                } else {
                    1.0 - 0.5 * (-d).exp()
                }
            }
            DistributionSpec::Logistic { mu, s } => 1.0 / (1.0 + (-(x - mu) / s).exp()),
            DistributionSpec::NormalMixture { alpha, sigma2nd } => {
                alpha * norm_cdf(x / sigma2nd) + (1.0 - alpha) * norm_cdf(x)
            }
        }
    }

    /// Population variance where finite.
    pub fn variance(&self) -> Option<f64> {
        match *self {
            DistributionSpec::Normal { sigma, .. } => Some(sigma * sigma),
            DistributionSpec::Uniform01 => Some(1.0 / 12.0),
            DistributionSpec::StudentT { df } if df > 2 => Some(df as f64 / (df as f64 - 2.0)),
            DistributionSpec::StudentT { .. } => None,
            DistributionSpec::Laplace { b, .. } => Some(2.0 * b * b),
            DistributionSpec::Logistic { s, .. } => Some(s * s * std::f64::consts::PI.powi(2) / 3.0),
            DistributionSpec::NormalMixture { alpha, sigma2nd } => {
                Some(alpha * sigma2nd * sigma2nd + (1.0 - alpha))
            }
        }
    }

    /// Centre of symmetry.
    pub fn center(&self) -> f64 {
        match *self {
            DistributionSpec::Normal { mu, .. }
            | DistributionSpec::Laplace { mu, .. }
            | DistributionSpec::Logistic { mu, .. } => mu,
            DistributionSpec::Uniform01 => 0.5,
            DistributionSpec::StudentT { .. } | DistributionSpec::NormalMixture { .. } => 0.0,
        }
    }
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            DistributionSpec::Normal { mu, sigma } => write!(f, "normal:{mu}:{sigma}"),
            DistributionSpec::Uniform01 => f.write_str("uniform"),
            DistributionSpec::StudentT { df } => write!(f, "t:{df}"),
            DistributionSpec::Laplace { mu, b } => write!(f, "laplace:{mu}:{b}"),
            DistributionSpec::Logistic { mu, s } => write!(f, "logistic:{mu}:{s}"),
            DistributionSpec::NormalMixture { alpha, sigma2nd } => {
                write!(f, "mix:{sigma2nd}:{alpha}")
            }
        }
    }
}

struct Tokens<'a> {
    parts: Vec<(usize, &'a str)>,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        let mut parts = Vec::new();
        let mut start = 0;
        for piece in text.split(':') {
            parts.push((start, piece));
            start += piece.len() + 1;
        }
        Self { parts }
    }

    fn end(&self) -> usize {
        self.parts.last().map(|(p, s)| p + s.len()).unwrap_or(0)
    }

    fn number(&self, idx: usize, expected: &str) -> Result<f64> {
        let (pos, tok) = self.parts.get(idx).copied().ok_or_else(|| Error::Parse {
            position: self.end(),
            message: "missing parameter".into(),
            expected: expected.into(),
        })?;
        tok.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| Error::Parse {
                position: pos,
                message: format!("invalid number {tok:?}"),
                expected: expected.into(),
            })
    }

    fn no_more(&self, count: usize, expected: &str) -> Result<()> {
        match self.parts.get(count) {
            None => Ok(()),
            Some((pos, tok)) => Err(Error::Parse {
                position: *pos,
                message: format!("unexpected trailing parameter {tok:?}"),
                expected: expected.into(),
            }),
        }
    }
}

/// Parses `normal[:mu:sigma] | uniform | t:df | laplace[:mu:b] |
/// logistic[:mu:s] | mix:sigma:alpha`.
pub fn parse_spec(text: &str) -> Result<DistributionSpec> {
    let text = text.trim();
    let tok = Tokens::new(text);
    let head = tok.parts[0].1.to_ascii_lowercase();
    let arity = tok.parts.len() - 1;
    let spec = match head.as_str() {
        "normal" | "n" => match arity {
            0 => DistributionSpec::STANDARD_NORMAL,
            2 => DistributionSpec::Normal {
                mu: tok.number(1, "mu")?,
                sigma: tok.number(2, "sigma")?,
            },
            _ => {
                let position = if arity == 1 { tok.end() } else { tok.parts[3].0 };
                return Err(Error::Parse {
                    position,
                    message: "normal takes no parameters or both mu and sigma".into(),
                    expected: "normal or normal:mu:sigma".into(),
                });
            }
        },
        "uniform" | "u" => {
            tok.no_more(1, "end of input after 'uniform'")?;
            DistributionSpec::Uniform01
        }
        "t" => {
            let df = tok.number(1, "degrees of freedom (positive integer)")?;
            tok.no_more(2, "end of input after t:df")?;
            if df < 1.0 || df.fract() != 0.0 || df > u32::MAX as f64 {
                return Err(Error::Parse {
                    position: tok.parts[1].0,
                    message: format!("degrees of freedom must be a positive integer, got {df}"),
                    expected: "positive integer".into(),
                });
            }
            DistributionSpec::StudentT { df: df as u32 }
        }
        "laplace" | "logistic" => {
            let (mu, scale) = match arity {
                0 => (0.0, 1.0),
                2 => (tok.number(1, "mu")?, tok.number(2, "scale")?),
                _ => {
                    let position = if arity == 1 { tok.end() } else { tok.parts[3].0 };
                    return Err(Error::Parse {
                        position,
                        message: format!("{head} takes no parameters or both mu and scale"),
                        expected: format!("{head} or {head}:mu:scale"),
                    });
                }
            };
            if head == "laplace" {
                DistributionSpec::Laplace { mu, b: scale }
            } else {
                DistributionSpec::Logistic { mu, s: scale }
            }
        }
        "mix" => {
            let sigma2nd = tok.number(1, "sigma of the second component")?;
            let alpha = tok.number(2, "mixing proportion alpha")?;
            tok.no_more(3, "end of input after mix:sigma:alpha")?;
            DistributionSpec::NormalMixture { alpha, sigma2nd }
        }
        _ => {
            return Err(Error::Parse {
                position: 0,
                message: format!("unknown distribution {:?}", tok.parts[0].1),
                expected: "normal, uniform, t, laplace, logistic or mix".into(),
            })
        }
    };
    spec.validate()?;
    Ok(spec)
}

impl FromStr for DistributionSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_spec(s)
    }
}

/// Parses a comma-separated list of specs.
pub fn parse_spec_list(text: &str) -> Result<Vec<DistributionSpec>> {
    let mut offset = 0;
    let mut out = Vec::new();
    for part in text.split(',') {
        let spec = parse_spec(part).map_err(|e| match e {
            Error::Parse {
                position,
                message,
                expected,
            } => Error::Parse {
                position: position + offset + (part.len() - part.trim_start().len()),
                message,
                expected,
            },
            other => other,
        })?;
        out.push(spec);
        offset += part.len() + 1;
    }
    Ok(out)
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A named position in the random-number space: a master seed plus a path
/// of indices (e.g. cell, replication). Equal streams produce identical
/// sequences; different paths hash to unrelated generator keys.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub master_seed: u64,
    pub path: Vec<u64>,
}

impl RngStream {
    pub fn new(master_seed: u64) -> Self {
        Self {
            master_seed,
            path: Vec::new(),
        }
    }

    pub fn child(&self, index: u64) -> Self {
        let mut path = self.path.clone();
        path.push(index);
        Self {
            master_seed: self.master_seed,
            path,
        }
    }

    pub fn with_path(master_seed: u64, path: &[u64]) -> Self {
        Self {
            master_seed,
            path: path.to_vec(),
        }
    }

    fn key(&self) -> [u8; 32] {
        let mut h = splitmix64(self.master_seed);
        for (depth, &p) in self.path.iter().enumerate() {
            // mixing the depth in keeps paths [a, b] and [b, a] apart
            h = splitmix64(h ^ splitmix64(p.wrapping_add((depth as u64 + 1) << 56)));
        }
        h = splitmix64(h ^ self.path.len() as u64);
        let mut key = [0u8; 32];
        let mut word = h;
        for chunk in key.chunks_exact_mut(8) {
            word = splitmix64(word);
            chunk.copy_from_slice(&word.to_le_bytes());
        }
        key
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::from_seed(self.key())
    }
}

pub fn draw_sample(spec: &DistributionSpec, n: usize, stream: &RngStream) -> Result<Sample> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::InvalidParameters("sample size must be at least 1".into()));
    }
    let mut rng = stream.rng();
    let mut values = vec![0.0; n];
    spec.fill(&mut rng, &mut values);
    Sample::new(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn parse_examples() {
        assert_eq!(parse_spec("t:4").unwrap(), DistributionSpec::StudentT { df: 4 });
        assert_eq!(
            parse_spec("mix:2.0:0.2").unwrap(),
            DistributionSpec::NormalMixture { alpha: 0.2, sigma2nd: 2.0 }
        );
        assert_eq!(parse_spec("normal").unwrap(), DistributionSpec::STANDARD_NORMAL);
        assert_eq!(
            parse_spec("normal:1:2").unwrap(),
            DistributionSpec::Normal { mu: 1.0, sigma: 2.0 }
        );
        assert_eq!(parse_spec("laplace").unwrap(), DistributionSpec::Laplace { mu: 0.0, b: 1.0 });
        assert_eq!(parse_spec("logistic").unwrap(), DistributionSpec::Logistic { mu: 0.0, s: 1.0 });
        assert_eq!(parse_spec(" uniform ").unwrap(), DistributionSpec::Uniform01);
    }

    #[test]
    fn parse_errors_carry_position() {
        match parse_spec("mix:2.0") {
            Err(Error::Parse { position, expected, .. }) => {
                assert_eq!(position, 7);
                assert!(expected.contains("alpha"));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_spec("t:x"), Err(Error::Parse { position: 2, .. })));
        assert!(matches!(parse_spec("t:2.5"), Err(Error::Parse { .. })));
        assert!(matches!(parse_spec("cauchy"), Err(Error::Parse { position: 0, .. })));
        assert!(matches!(parse_spec("uniform:1"), Err(Error::Parse { position: 8, .. })));
        assert!(matches!(parse_spec("normal:0"), Err(Error::Parse { .. })));
        assert!(matches!(parse_spec("normal:0:-1"), Err(Error::InvalidParameters(_))));
        assert!(matches!(parse_spec("mix:2:1.5"), Err(Error::InvalidParameters(_))));
        match parse_spec_list("t:4,mix:2") {
            Err(Error::Parse { position, .. }) => assert_eq!(position, 9),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn display_round_trips() {
        for s in ["t:10", "uniform", "mix:0.5:0.2", "laplace:0:1", "logistic:0:1", "normal:0:1"] {
            let spec = parse_spec(s).unwrap();
            assert_eq!(spec.to_string(), s);
            assert_eq!(parse_spec(&spec.to_string()).unwrap(), spec);
        }
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a = RngStream::with_path(7, &[1, 2]);
        let x = draw_sample(&DistributionSpec::STANDARD_NORMAL, 16, &a).unwrap();
        let y = draw_sample(&DistributionSpec::STANDARD_NORMAL, 16, &a).unwrap();
        assert_eq!(x, y);
        let b = RngStream::with_path(7, &[2, 1]);
        let c = RngStream::with_path(8, &[1, 2]);
        let d = RngStream::with_path(7, &[1, 2, 0]);
        for other in [b, c, d] {
            let z = draw_sample(&DistributionSpec::STANDARD_NORMAL, 16, &other).unwrap();
            assert_ne!(x, z);
        }
        assert_eq!(RngStream::new(7).child(1).child(2), a);
    }

    #[test]
    fn cdfs_at_known_points() {
        assert_abs_diff_eq!(DistributionSpec::StudentT { df: 1 }.cdf(1.0), 0.75, epsilon = 1e-12);
        assert_abs_diff_eq!(DistributionSpec::StudentT { df: 4 }.cdf(0.0), 0.5, epsilon = 1e-12);
        // t(4) upper 2.5% point is 2.776445
        assert_abs_diff_eq!(
            DistributionSpec::StudentT { df: 4 }.cdf(2.776_445_105_2),
            0.975,
            epsilon = 1e-9
        );
        assert_abs_diff_eq!(DistributionSpec::Laplace { mu: 0.0, b: 1.0 }.cdf(0.0), 0.5);
        assert_abs_diff_eq!(DistributionSpec::Logistic { mu: 0.0, s: 1.0 }.cdf(0.0), 0.5);
    }

    #[test]
    fn invalid_size() {
        assert!(draw_sample(&DistributionSpec::Uniform01, 0, &RngStream::new(1)).is_err());
    }
}
