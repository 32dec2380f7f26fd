//! Uniform interface over the seven tests.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::classical::{
    anderson_darling_statistic, dagostino_pearson_statistic, jarque_bera_statistic,
    lilliefors_statistic, ShapiroWilk,
};
use crate::critical::{CriticalSource, Scaling};
use crate::ecf::{check_alpha, ecft_studentized};
use crate::epps_pulley::{ep_statistic, EpForm};
use crate::error::{Error, Result};
use crate::sample::{studentize, Divisor, Sample, StudentizedSample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TestKind {
    #[serde(rename = "ECFT")]
    Ecft,
    #[serde(rename = "EP")]
    Ep,
    #[serde(rename = "LL")]
    Ll,
    #[serde(rename = "JB")]
    Jb,
    #[serde(rename = "SW")]
    Sw,
    #[serde(rename = "AD")]
    Ad,
    #[serde(rename = "DP")]
    Dp,
}

impl TestKind {
    /// Column order of the published tables.
    pub const ALL: [TestKind; 7] = [
        TestKind::Ecft,
        TestKind::Ep,
        TestKind::Ll,
        TestKind::Jb,
        TestKind::Sw,
        TestKind::Ad,
        TestKind::Dp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TestKind::Ecft => "ECFT",
            TestKind::Ep => "EP",
            TestKind::Ll => "LL",
            TestKind::Jb => "JB",
            TestKind::Sw => "SW",
            TestKind::Ad => "AD",
            TestKind::Dp => "DP",
        }
    }

    pub fn min_n(self) -> usize {
        match self {
            TestKind::Ecft | TestKind::Ep => 2,
            TestKind::Sw => crate::classical::SW_MIN_N,
            TestKind::Ll => 4,
            TestKind::Jb | TestKind::Ad => 8,
            TestKind::Dp => 20,
        }
    }

    pub fn max_n(self) -> Option<usize> {
        match self {
            TestKind::Sw => Some(crate::classical::SW_MAX_N),
            _ => None,
        }
    }

    pub(crate) fn critical_scaling(self) -> Scaling {
        match self {
            TestKind::Ll => Scaling::SqrtN,
            _ => Scaling::Flat,
        }
    }

    pub fn check_size(self, n: usize) -> Result<()> {
        let min = self.min_n();
        if n < min {
            return Err(Error::TooSmall { test: self.name(), min, n });
        }
        if let Some(max) = self.max_n() {
            if n > max {
                return Err(Error::TooLarge { test: self.name(), max, n });
            }
        }
        Ok(())
    }

    /// Parses a comma-separated list; `all` selects every test.
    pub fn parse_list(text: &str) -> Result<Vec<TestKind>> {
        let mut out = Vec::new();
        for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            if part.eq_ignore_ascii_case("all") {
                out.extend(TestKind::ALL);
            } else {
                out.push(part.parse()?);
            }
        }
        if out.is_empty() {
            return Err(Error::Parse {
                position: 0,
                message: "no tests given".into(),
                expected: "one of ECFT, EP, LL, JB, SW, AD, DP, all".into(),
            });
        }
        out.sort();
        out.dedup();
        Ok(out)
    }
}

impl fmt::Display for TestKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TestKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TestKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Parse {
                position: 0,
                message: format!("unknown test {s:?}"),
                expected: "one of ECFT, EP, LL, JB, SW, AD, DP".into(),
            })
    }
}

/// Outcome of any of the seven tests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub test: TestKind,
    pub statistic: f64,
    /// Present for tests calibrated by a reference distribution.
    pub p_value: Option<f64>,
    /// Present for tests calibrated by a simulated critical value.
    pub critical_value: Option<f64>,
    pub reject: bool,
    pub alpha: f64,
    pub n: usize,
}

impl TestResult {
    pub(crate) fn with_p_value(test: TestKind, statistic: f64, p: f64, alpha: f64, n: usize) -> Self {
        let p = p.clamp(0.0, 1.0);
        Self {
            test,
            statistic,
            p_value: Some(p),
            critical_value: None,
            reject: p < alpha,
            alpha,
            n,
        }
    }

    /// Rejects when the statistic exceeds the critical value, except for SW
    /// where small W is evidence against normality.
    pub(crate) fn with_critical(test: TestKind, statistic: f64, c: f64, alpha: f64, n: usize) -> Self {
        let reject = match test {
            TestKind::Sw => statistic < c,
            TestKind::Ecft => statistic.abs() > c,
            _ => statistic > c,
        };
        Self {
            test,
            statistic,
            p_value: None,
            critical_value: Some(c),
            reject,
            alpha,
            n,
        }
    }
}

/// How Jarque–Bera is calibrated.
#[derive(Debug, Clone, PartialEq)]
pub enum JbCalibration {
    ChiSquared,
    Critical(CriticalSource),
}

/// Settings shared by every test in a battery.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    pub alpha: f64,
    /// ECFT evaluation point.
    pub t: f64,
    pub divisor: Divisor,
    pub ep_form: EpForm,
    pub ep: CriticalSource,
    pub ll: CriticalSource,
    pub ad: CriticalSource,
    pub jb: JbCalibration,
}

/// Replications used when a critical value has to be simulated on demand.
pub const ON_DEMAND_REPS: usize = 20_000;
pub const ON_DEMAND_SEED: u64 = 0x5eed_c0de;

impl SuiteConfig {
    /// Bundled tables at the 5% level; for any other level the table-based
    /// tests switch to on-demand simulated critical values.
    pub fn for_alpha(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        let simulated = || CriticalSource::Simulated {
            reps: ON_DEMAND_REPS,
            seed: ON_DEMAND_SEED,
        };
        let five = (alpha - 0.05).abs() < 1e-12;
        let pick = |kind: TestKind| -> Result<CriticalSource> {
            if five {
                match kind {
                    TestKind::Ep => Ok(CriticalSource::published_ep()),
                    _ => CriticalSource::cached(kind),
                }
            } else {
                Ok(simulated())
            }
        };
        Ok(Self {
            alpha,
            t: 1.0,
            divisor: Divisor::NMinusOne,
            ep_form: EpForm::Reference,
            ep: pick(TestKind::Ep)?,
            ll: pick(TestKind::Ll)?,
            ad: pick(TestKind::Ad)?,
            jb: JbCalibration::Critical(pick(TestKind::Jb)?),
        })
    }
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self::for_alpha(0.05).expect("bundled tables load")
    }
}

/// Per-sample-size state needed to evaluate statistics quickly.
#[derive(Debug, Clone)]
pub struct Evaluator {
    n: usize,
    t: f64,
    divisor: Divisor,
    ep_form: EpForm,
    sw: Option<ShapiroWilk>,
}

/// Statistic values that share the studentization and sort of one sample.
struct Prepared {
    student: StudentizedSample,
    /// Sorted studentized values (divisor `n - 1`).
    sorted: Vec<f64>,
}

impl Evaluator {
    pub fn new(n: usize, t: f64, divisor: Divisor, ep_form: EpForm) -> Self {
        let sw = ShapiroWilk::new(n).ok();
        Self {
            n,
            t,
            divisor,
            ep_form,
            sw,
        }
    }

    /// ECFT at `t = 1`, divisor `n - 1`, reference EP form.
    pub fn standard(n: usize) -> Self {
        Self::new(n, 1.0, Divisor::NMinusOne, EpForm::Reference)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn prepare(&self, x: &[f64]) -> Result<Prepared> {
        if x.len() != self.n {
            return Err(Error::InvalidParameters(format!(
                "evaluator prepared for n = {}, got {}",
                self.n,
                x.len()
            )));
        }
        let sample = Sample::new(x.to_vec())?;
        let student = studentize(&sample, self.divisor)?;
        let sorted = {
            let mut z = if self.divisor == Divisor::NMinusOne {
                student.z().to_vec()
            } else {
                studentize(&sample, Divisor::NMinusOne)?.z().to_vec()
            };
            z.sort_by(f64::total_cmp);
            z
        };
        Ok(Prepared { student, sorted })
    }

    fn statistic_prepared(&self, kind: TestKind, p: &Prepared) -> Result<f64> {
        kind.check_size(self.n)?;
        match kind {
            TestKind::Ecft => Ok(ecft_studentized(&p.student, self.t, 0.05)?.standardized),
            TestKind::Ep => Ok(ep_statistic(&p.student, self.ep_form)?.t_n),
            TestKind::Ll => Ok(lilliefors_statistic(&p.sorted)),
            TestKind::Jb => jarque_bera_statistic(&p.sorted),
            TestKind::Sw => self
                .sw
                .as_ref()
                .expect("size checked above")
                .statistic_sorted(&p.sorted),
            TestKind::Ad => Ok(anderson_darling_statistic(&p.sorted).a2_star),
            TestKind::Dp => dagostino_pearson_statistic(&p.sorted),
        }
    }

    /// The statistic each test compares with its reference distribution:
    /// standardized `v_n` for ECFT, `T_n` for EP, `D` for LL, JB, `W`,
    /// `A*^2` and `K^2`.
    pub fn statistic(&self, kind: TestKind, x: &[f64]) -> Result<f64> {
        let p = self.prepare(x)?;
        self.statistic_prepared(kind, &p)
    }
}

/// Evaluator plus resolved critical values for one sample size.
#[derive(Debug, Clone)]
pub struct Battery {
    eval: Evaluator,
    alpha: f64,
    jb_chi2: bool,
    critical: [Option<f64>; 7],
}

fn slot(kind: TestKind) -> usize {
    TestKind::ALL.iter().position(|k| *k == kind).expect("listed")
}

impl Battery {
    /// Resolves critical values for `kinds` at sample size `n`. Tests whose
    /// size limits exclude `n` are skipped here and fail in [`Battery::run`].
    pub fn new(config: &SuiteConfig, n: usize, kinds: &[TestKind]) -> Result<Self> {
        check_alpha(config.alpha)?;
        if config.t == 0.0 || !config.t.is_finite() {
            return Err(Error::InvalidPoint { t: config.t });
        }
        let mut critical = [None; 7];
        let mut jb_chi2 = false;
        for &kind in kinds {
            if kind.check_size(n).is_err() {
                continue;
            }
            let source = match kind {
                TestKind::Ep => Some(&config.ep),
                TestKind::Ll => Some(&config.ll),
                TestKind::Ad => Some(&config.ad),
                TestKind::Jb => match &config.jb {
                    JbCalibration::ChiSquared => {
                        jb_chi2 = true;
                        None
                    }
                    JbCalibration::Critical(s) => Some(s),
                },
                _ => None,
            };
            if let Some(source) = source {
                critical[slot(kind)] = Some(source.critical_value(kind, n, config.alpha)?);
            }
        }
        Ok(Self {
            eval: Evaluator::new(n, config.t, config.divisor, config.ep_form),
            alpha: config.alpha,
            jb_chi2,
            critical,
        })
    }

    pub fn n(&self) -> usize {
        self.eval.n
    }

    pub fn critical_value(&self, kind: TestKind) -> Option<f64> {
        self.critical[slot(kind)]
    }

    fn result(&self, kind: TestKind, p: &Prepared) -> Result<TestResult> {
        let n = self.eval.n;
        let alpha = self.alpha;
        match kind {
            TestKind::Ecft => {
                kind.check_size(n)?;
                let r = ecft_studentized(&p.student, self.eval.t, alpha)?;
                Ok(TestResult::with_p_value(kind, r.standardized, r.p_value, alpha, n))
            }
            TestKind::Sw => {
                let w = self.eval.statistic_prepared(kind, p)?;
                let pv = self.eval.sw.as_ref().expect("size checked").p_value(w);
                Ok(TestResult::with_p_value(kind, w, pv, alpha, n))
            }
            TestKind::Dp => {
                let k2 = self.eval.statistic_prepared(kind, p)?;
                Ok(TestResult::with_p_value(kind, k2, (-0.5 * k2).exp(), alpha, n))
            }
            TestKind::Jb if self.jb_chi2 => {
                let jb = self.eval.statistic_prepared(kind, p)?;
                Ok(TestResult::with_p_value(kind, jb, (-0.5 * jb).exp(), alpha, n))
            }
            TestKind::Ep | TestKind::Ll | TestKind::Ad | TestKind::Jb => {
                let s = self.eval.statistic_prepared(kind, p)?;
                let c = self.critical[slot(kind)].ok_or_else(|| {
                    Error::InvalidConfig(format!("{kind} was not prepared in this battery"))
                })?;
                Ok(TestResult::with_critical(kind, s, c, alpha, n))
            }
        }
    }

    pub fn run(&self, kind: TestKind, x: &[f64]) -> Result<TestResult> {
        let p = self.eval.prepare(x)?;
        self.result(kind, &p)
    }

    /// Runs several tests on one sample, studentizing and sorting once.
    pub fn run_many(&self, kinds: &[TestKind], x: &[f64]) -> Result<Vec<TestResult>> {
        let p = self.eval.prepare(x)?;
        kinds.iter().map(|&k| self.result(k, &p)).collect()
    }
}

/// Runs each requested test on `sample`; per-test failures are returned in
/// place so one inapplicable test does not hide the others.
pub fn run_tests(
    sample: &Sample,
    kinds: &[TestKind],
    config: &SuiteConfig,
) -> Result<Vec<(TestKind, Result<TestResult>)>> {
    let battery = Battery::new(config, sample.len(), kinds)?;
    let prepared = battery.eval.prepare(sample.values());
    Ok(kinds
        .iter()
        .map(|&k| {
            let r = match &prepared {
                Ok(p) => battery.result(k, p),
                Err(e) => Err(e.clone()),
            };
            (k, r)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::{dagostino_pearson, jarque_bera, shapiro_wilk};

    fn data() -> Vec<f64> {
        (0..60)
            .map(|i| {
                let u = (i as f64 + 0.5) / 60.0;
                crate::special::norm_ppf(u) + 0.3 * (7.0 * u).sin()
            })
            .collect()
    }

    #[test]
    fn parse_names() {
        assert_eq!("ecft".parse::<TestKind>().unwrap(), TestKind::Ecft);
        assert_eq!(TestKind::parse_list("all").unwrap(), TestKind::ALL.to_vec());
        assert_eq!(
            TestKind::parse_list("sw, JB,sw").unwrap(),
            vec![TestKind::Jb, TestKind::Sw]
        );
        assert!(TestKind::parse_list("KS").is_err());
        assert!(TestKind::parse_list("").is_err());
    }

    #[test]
    fn battery_agrees_with_standalone_functions() {
        let x = data();
        let sample = Sample::new(x.clone()).unwrap();
        let cfg = SuiteConfig { jb: JbCalibration::ChiSquared, ..SuiteConfig::default() };
        let b = Battery::new(&cfg, x.len(), &TestKind::ALL).unwrap();
        let all = b.run_many(&TestKind::ALL, &x).unwrap();

        let jb = jarque_bera(&sample, 0.05).unwrap();
        assert!((all[3].statistic - jb.statistic).abs() < 1e-10);
        assert!((all[3].p_value.unwrap() - jb.p_value.unwrap()).abs() < 1e-10);
        let sw = shapiro_wilk(&sample, 0.05).unwrap();
        assert!((all[4].statistic - sw.statistic).abs() < 1e-12);
        let dp = dagostino_pearson(&sample, 0.05).unwrap();
        assert!((all[6].statistic - dp.statistic).abs() < 1e-10);
    }

    #[test]
    fn too_small_is_reported_per_test() {
        let sample = Sample::new(vec![0.3, -1.2, 0.8, 2.0, -0.1]).unwrap();
        let out = run_tests(&sample, &TestKind::ALL, &SuiteConfig::default()).unwrap();
        for (k, r) in out {
            match k {
                TestKind::Jb | TestKind::Ad | TestKind::Dp => {
                    assert!(matches!(r, Err(Error::TooSmall { .. })), "{k}")
                }
                _ => assert!(r.is_ok(), "{k}: {r:?}"),
            }
        }
    }

    #[test]
    fn p_value_invariant() {
        let x = data();
        let b = Battery::new(&SuiteConfig::default(), x.len(), &TestKind::ALL).unwrap();
        for r in b.run_many(&TestKind::ALL, &x).unwrap() {
            assert!(r.statistic.is_finite());
            if let Some(p) = r.p_value {
                assert_eq!(r.reject, p < r.alpha);
            } else {
                assert!(r.critical_value.is_some());
            }
        }
    }
}
