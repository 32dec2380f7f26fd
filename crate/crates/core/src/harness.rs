//! Seeded, parallel Monte Carlo engine for percentiles, size, power and the
//! bias/variance diagnostics of `v_n`.
//!
//! Every replication draws its sample from its own [`RngStream`] with path
//! `(dist index, n index, replication)`, so results do not depend on how the
//! work is scheduled. All tests in a cell see the same samples.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::time::Instant;

use crate::critical::{CriticalRow, CriticalTable, Provenance};
use crate::distributions::{DistributionSpec, RngStream};
use crate::ecf::{asymptotic_coeff, ecf_at, vn_statistic};
use crate::epps_pulley::EpForm;
use crate::error::{Error, Result};
use crate::sample::{studentize, Divisor, Sample};
use crate::suite::{Battery, Evaluator, SuiteConfig, TestKind};

const CHUNK: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub tests: Vec<TestKind>,
    pub dists: Vec<DistributionSpec>,
    pub sizes: Vec<usize>,
    pub reps: usize,
    pub alpha: f64,
    pub master_seed: u64,
    pub t_point: f64,
    #[serde(default)]
    pub ep_form: EpForm,
    /// Worker threads; `None` uses the global pool. Never changes results.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

pub const DEFAULT_REPS: usize = 5000;
pub const DEFAULT_SIZES: [usize; 6] = [50, 100, 250, 500, 750, 1000];

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            tests: TestKind::ALL.to_vec(),
            dists: vec![DistributionSpec::STANDARD_NORMAL],
            sizes: DEFAULT_SIZES.to_vec(),
            reps: DEFAULT_REPS,
            alpha: 0.05,
            master_seed: 1,
            t_point: 1.0,
            ep_form: EpForm::Reference,
            workers: None,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.reps < 100 {
            return Err(Error::InvalidConfig(format!(
                "reps must be at least 100, got {}",
                self.reps
            )));
        }
        if self.sizes.is_empty() {
            return Err(Error::InvalidConfig("sizes must not be empty".into()));
        }
        if let Some(&n) = self.sizes.iter().find(|&&n| n < 2) {
            return Err(Error::InvalidConfig(format!("sample sizes must be >= 2, got {n}")));
        }
        if self.tests.is_empty() {
            return Err(Error::InvalidConfig("no tests selected".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if self.t_point == 0.0 || !self.t_point.is_finite() {
            return Err(Error::InvalidPoint { t: self.t_point });
        }
        if self.workers == Some(0) {
            return Err(Error::InvalidConfig("workers must be at least 1".into()));
        }
        for d in &self.dists {
            d.validate()?;
        }
        Ok(())
    }

    /// Suite settings implied by this configuration.
    pub fn suite(&self) -> Result<SuiteConfig> {
        let mut suite = SuiteConfig::for_alpha(self.alpha)?;
        suite.t = self.t_point;
        suite.ep_form = self.ep_form;
        Ok(suite)
    }
}

fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// One `(dist, n, test)` entry of a [`PowerTable`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerCell {
    pub dist: String,
    pub n: usize,
    pub test: TestKind,
    pub reps: usize,
    pub rejections: u64,
    pub proportion: f64,
    pub std_error: f64,
    pub seed: u64,
}

impl PowerCell {
    fn new(dist: &DistributionSpec, n: usize, test: TestKind, reps: usize, rejections: u64, seed: u64) -> Self {
        let p = rejections as f64 / reps as f64;
        Self {
            dist: dist.to_string(),
            n,
            test,
            reps,
            rejections,
            proportion: p,
            std_error: (p * (1.0 - p) / reps as f64).sqrt(),
            seed,
        }
    }
}

/// A `(test, n)` pair left out because the test does not apply at that size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedCell {
    pub test: TestKind,
    pub n: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerTable {
    pub cells: Vec<PowerCell>,
    pub config: SimulationConfig,
    #[serde(default)]
    pub skipped: Vec<SkippedCell>,
    /// Wall-clock duration; not part of the serialized table.
    #[serde(skip)]
    pub elapsed_seconds: f64,
}

impl PowerTable {
    pub fn get(&self, dist: &DistributionSpec, n: usize, test: TestKind) -> Option<&PowerCell> {
        let label = dist.to_string();
        self.cells
            .iter()
            .find(|c| c.dist == label && c.n == n && c.test == test)
    }

    pub fn proportion(&self, dist: &DistributionSpec, n: usize, test: TestKind) -> Option<f64> {
        self.get(dist, n, test).map(|c| c.proportion)
    }

    /// CSV with columns `dist,n,test,reps,rejections,proportion,std_error,seed`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for c in &self.cells {
            w.serialize(c).map_err(|e| Error::Table(e.to_string()))?;
        }
        w.flush().map_err(|e| Error::Table(e.to_string()))
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("table serializes")
    }
}

fn count_cell(
    battery: &Battery,
    tests: &[TestKind],
    dist: &DistributionSpec,
    n: usize,
    reps: usize,
    stream: &RngStream,
    label: &str,
) -> Result<Vec<u64>> {
    let chunks: Vec<Result<Vec<u64>>> = (0..reps.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut counts = vec![0u64; tests.len()];
            let mut x = vec![0.0; n];
            for rep in c * CHUNK..((c + 1) * CHUNK).min(reps) {
                let mut rng = stream.child(rep as u64).rng();
                dist.fill(&mut rng, &mut x);
                let results = battery.run_many(tests, &x).map_err(|e| Error::Replication {
                    cell: label.to_string(),
                    replication: rep,
                    source: Box::new(e),
                })?;
                for (k, r) in results.iter().enumerate() {
                    counts[k] += r.reject as u64;
                }
            }
            Ok(counts)
        })
        .collect();
    let mut total = vec![0u64; tests.len()];
    for chunk in chunks {
        for (t, c) in total.iter_mut().zip(chunk?) {
            *t += c;
        }
    }
    Ok(total)
}

fn run_table(config: &SimulationConfig, suite: &SuiteConfig) -> Result<PowerTable> {
    config.validate()?;
    let start = Instant::now();
    let mut tests = config.tests.clone();
    tests.sort();
    tests.dedup();
    let mut skipped = Vec::new();
    let mut cells = Vec::new();
    let mut work = Vec::new();
    for (ni, &n) in config.sizes.iter().enumerate() {
        let usable: Vec<TestKind> = tests
            .iter()
            .copied()
            .filter(|k| match k.check_size(n) {
                Ok(()) => true,
                Err(e) => {
                    skipped.push(SkippedCell { test: *k, n, reason: e.to_string() });
                    false
                }
            })
            .collect();
        if usable.is_empty() {
            continue;
        }
        let battery = Battery::new(suite, n, &usable)?;
        work.push((ni, n, usable, battery));
    }
    let outcome = with_workers(config.workers, || -> Result<()> {
        for (di, dist) in config.dists.iter().enumerate() {
            for (ni, n, usable, battery) in &work {
                let stream = RngStream::with_path(config.master_seed, &[di as u64, *ni as u64]);
                let label = format!("{dist}/n={n}");
                let counts = count_cell(battery, usable, dist, *n, config.reps, &stream, &label)?;
                for (k, &test) in usable.iter().enumerate() {
                    cells.push(PowerCell::new(dist, *n, test, config.reps, counts[k], config.master_seed));
                }
            }
        }
        Ok(())
    })?;
    outcome?;
    Ok(PowerTable {
        cells,
        config: config.clone(),
        skipped,
        elapsed_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Rejection rates under the standard normal null. `dists` must be empty
/// or exactly `[normal:0:1]`.
pub fn estimate_type1(config: &SimulationConfig) -> Result<PowerTable> {
    let mut config = config.clone();
    match config.dists.as_slice() {
        [] => config.dists = vec![DistributionSpec::STANDARD_NORMAL],
        [d] if d.is_standard_normal() => {}
        _ => {
            return Err(Error::InvalidConfig(
                "Type I error runs use the standard normal only".into(),
            ))
        }
    }
    let suite = config.suite()?;
    run_table(&config, &suite)
}

/// Rejection rates under non-normal alternatives.
pub fn estimate_power(config: &SimulationConfig) -> Result<PowerTable> {
    let suite = config.suite()?;
    estimate_power_with(config, &suite)
}

/// As [`estimate_power`] with explicit critical-value sources.
pub fn estimate_power_with(config: &SimulationConfig, suite: &SuiteConfig) -> Result<PowerTable> {
    if config.dists.is_empty() {
        return Err(Error::InvalidConfig("no alternatives given".into()));
    }
    if let Some(d) = config.dists.iter().find(|d| d.is_normal()) {
        return Err(Error::InvalidConfig(format!(
            "{d} is normal; use a Type I error run instead"
        )));
    }
    run_table(config, suite)
}

/// Simulated null quantile of a statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PercentileEstimate {
    pub n: usize,
    pub q: f64,
    /// Order statistic of rank `ceil(q * reps)`.
    pub value: f64,
    pub reps: usize,
    pub mean: f64,
    pub variance: f64,
    pub seed: u64,
}

impl PercentileEstimate {
    pub fn to_row(&self) -> CriticalRow {
        CriticalRow {
            q95: self.value,
            mean: self.mean,
            variance: self.variance,
        }
    }
}

fn simulate_null<T, F>(
    n: usize,
    reps: usize,
    stream: &RngStream,
    workers: Option<usize>,
    statistic: F,
) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&[f64]) -> Result<T> + Sync,
{
    let normal = DistributionSpec::STANDARD_NORMAL;
    let label = format!("null/n={n}");
    let chunks: Vec<Result<Vec<T>>> = with_workers(workers, || {
        (0..reps.div_ceil(CHUNK))
            .into_par_iter()
            .map(|c| {
                let mut x = vec![0.0; n];
                let lo = c * CHUNK;
                let hi = ((c + 1) * CHUNK).min(reps);
                let mut out = Vec::with_capacity(hi - lo);
                for rep in lo..hi {
                    let mut rng = stream.child(rep as u64).rng();
                    normal.fill(&mut rng, &mut x);
                    out.push(statistic(&x).map_err(|e| Error::Replication {
                        cell: label.clone(),
                        replication: rep,
                        source: Box::new(e),
                    })?);
                }
                Ok(out)
            })
            .collect()
    })?;
    let mut all = Vec::with_capacity(reps);
    for c in chunks {
        all.extend(c?);
    }
    Ok(all)
}

/// Evaluates `statistic` on `reps` standard normal samples of size `n`,
/// returned in replication order.
pub fn simulate_null_statistics<F>(
    n: usize,
    reps: usize,
    stream: &RngStream,
    workers: Option<usize>,
    statistic: F,
) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    simulate_null(n, reps, stream, workers, statistic)
}

fn mean_variance(v: &[f64]) -> (f64, f64) {
    let m = v.len() as f64;
    let mean = v.iter().sum::<f64>() / m;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (m - 1.0);
    (mean, var)
}

pub fn percentile_of(values: &[f64], q: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

/// Null percentile of an arbitrary statistic. Stream path is `(0, n, rep)`.
pub fn estimate_percentile_with<F>(
    statistic: F,
    n: usize,
    q: f64,
    reps: usize,
    seed: u64,
    workers: Option<usize>,
) -> Result<PercentileEstimate>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    if reps < 1000 {
        return Err(Error::InvalidConfig(format!(
            "percentile estimation needs reps >= 1000, got {reps}"
        )));
    }
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::InvalidConfig(format!("q must lie in (0, 1), got {q}")));
    }
    let stream = RngStream::with_path(seed, &[0, n as u64]);
    let values = simulate_null_statistics(n, reps, &stream, workers, statistic)?;
    let (mean, variance) = mean_variance(&values);
    Ok(PercentileEstimate {
        n,
        q,
        value: percentile_of(&values, q),
        reps,
        mean,
        variance,
        seed,
    })
}

/// Null percentile of one of the seven statistics at the default settings.
pub fn estimate_null_percentile(
    kind: TestKind,
    n: usize,
    q: f64,
    reps: usize,
    seed: u64,
) -> Result<PercentileEstimate> {
    kind.check_size(n)?;
    let eval = Evaluator::standard(n);
    estimate_percentile_with(|x| eval.statistic(kind, x), n, q, reps, seed, None)
}

/// A 95% critical table for `kind` over `sizes`.
pub fn simulate_critical_table(
    kind: TestKind,
    sizes: &[usize],
    reps: usize,
    seed: u64,
    workers: Option<usize>,
) -> Result<CriticalTable> {
    let mut table = CriticalTable::new(Provenance::SelfSimulated { m: reps, seed });
    for &n in sizes {
        kind.check_size(n)?;
        let eval = Evaluator::standard(n);
        let est = estimate_percentile_with(|x| eval.statistic(kind, x), n, 0.95, reps, seed, workers)?;
        table.insert(n, est.to_row());
    }
    Ok(table)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasPoint {
    pub n: usize,
    /// Mean of `log |phi(t)|` over studentized samples.
    pub studentized: f64,
    /// Same on the raw standard normal draws.
    pub raw: f64,
    /// Standard deviations across replications.
    pub studentized_sd: f64,
    pub raw_sd: f64,
}

fn check_curve_args(sizes: &[usize], reps: usize, min_reps: usize, t: f64) -> Result<()> {
    if t == 0.0 || !t.is_finite() {
        return Err(Error::InvalidPoint { t });
    }
    if reps < min_reps {
        return Err(Error::InvalidConfig(format!("reps must be >= {min_reps}, got {reps}")));
    }
    if sizes.is_empty() || sizes.iter().any(|&n| n < 2) {
        return Err(Error::InvalidConfig("sizes must be non-empty and >= 2".into()));
    }
    Ok(())
}

/// Average log-modulus of the ecf at `t`, studentized and raw, per `n`.
/// The limit for both is `-t^2/2`.
pub fn bias_curve(
    sizes: &[usize],
    reps: usize,
    t: f64,
    seed: u64,
    workers: Option<usize>,
) -> Result<Vec<BiasPoint>> {
    check_curve_args(sizes, reps, 1000, t)?;
    sizes
        .iter()
        .enumerate()
        .map(|(ni, &n)| {
            let stream = RngStream::with_path(seed, &[0, ni as u64]);
            let pairs = simulate_null(n, reps, &stream, workers, |x| {
                let raw = 0.5 * ecf_at(x, t)?.modulus_sq().ln();
                let s = studentize(&Sample::new(x.to_vec())?, Divisor::NMinusOne)?;
                Ok((0.5 * ecf_at(s.z(), t)?.modulus_sq().ln(), raw))
            })?;
            let (stud, raw): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let (studentized, sv) = mean_variance(&stud);
            let (raw, rv) = mean_variance(&raw);
            Ok(BiasPoint {
                n,
                studentized,
                raw,
                studentized_sd: sv.sqrt(),
                raw_sd: rv.sqrt(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariancePoint {
    pub n: usize,
    /// Sample variance of `v_n(t)` over the replications.
    pub empirical: f64,
    /// `c(t) / n`.
    pub asymptotic: f64,
}

pub fn variance_curve(
    sizes: &[usize],
    reps: usize,
    t: f64,
    seed: u64,
    workers: Option<usize>,
) -> Result<Vec<VariancePoint>> {
    check_curve_args(sizes, reps, 500, t)?;
    sizes
        .iter()
        .enumerate()
        .map(|(ni, &n)| {
            let stream = RngStream::with_path(seed, &[0, ni as u64]);
            let v = simulate_null_statistics(n, reps, &stream, workers, |x| {
                let s = studentize(&Sample::new(x.to_vec())?, Divisor::NMinusOne)?;
                vn_statistic(&s, t)
            })?;
            Ok(VariancePoint {
                n,
                empirical: mean_variance(&v).1,
                asymptotic: asymptotic_coeff(t) / n as f64,
            })
        })
        .collect()
}

/// Standardized ECFT statistics under the null, for histograms.
pub fn null_ecft_statistics(
    n: usize,
    reps: usize,
    t: f64,
    seed: u64,
    workers: Option<usize>,
) -> Result<Vec<f64>> {
    check_curve_args(&[n], reps, 100, t)?;
    let eval = Evaluator::new(n, t, Divisor::NMinusOne, EpForm::Reference);
    let stream = RngStream::with_path(seed, &[0, n as u64]);
    simulate_null_statistics(n, reps, &stream, workers, |x| eval.statistic(TestKind::Ecft, x))
}

/// Sample mean and variance (divisor `m - 1`).
pub fn moments(values: &[f64]) -> (f64, f64) {
    mean_variance(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> SimulationConfig {
        SimulationConfig {
            tests: vec![TestKind::Ecft, TestKind::Sw, TestKind::Dp],
            dists: vec![DistributionSpec::Laplace { mu: 0.0, b: 1.0 }],
            sizes: vec![10, 30],
            reps: 300,
            master_seed: 42,
            ..SimulationConfig::default()
        }
    }

    #[test]
    fn config_validation() {
        let mut c = small_config();
        c.reps = 50;
        let e = estimate_power(&c).unwrap_err();
        assert!(e.to_string().contains("at least 100"), "{e}");
        let mut c = small_config();
        c.sizes.clear();
        assert!(estimate_power(&c).is_err());
        let mut c = small_config();
        c.alpha = 1.5;
        assert!(c.validate().is_err());
        let mut c = small_config();
        c.t_point = 0.0;
        assert!(matches!(c.validate(), Err(Error::InvalidPoint { .. })));
    }

    #[test]
    fn power_rejects_normal_and_type1_rejects_alternatives() {
        let mut c = small_config();
        c.dists = vec![DistributionSpec::STANDARD_NORMAL];
        assert!(estimate_power(&c).is_err());
        assert!(estimate_type1(&small_config()).is_err());
    }

    #[test]
    fn bookkeeping_and_skips() {
        let t = estimate_power(&small_config()).unwrap();
        // DP needs n >= 20, so only the n = 30 cell has it
        assert_eq!(t.cells.len(), 5);
        assert_eq!(t.skipped.len(), 1);
        assert_eq!(t.skipped[0].test, TestKind::Dp);
        for c in &t.cells {
            assert_eq!(c.proportion, c.rejections as f64 / c.reps as f64);
            let se = (c.proportion * (1.0 - c.proportion) / c.reps as f64).sqrt();
            assert_eq!(c.std_error, se);
            assert!((0.0..=1.0).contains(&c.proportion));
        }
        let csv = t.to_csv_string();
        assert!(csv.starts_with("dist,n,test,reps,rejections,proportion,std_error,seed\n"));
        assert!(csv.contains("laplace:0:1,30,ECFT,300,"));
        let back: PowerTable = serde_json::from_str(&t.to_json()).unwrap();
        assert_eq!(back.cells, t.cells);
    }

    #[test]
    fn worker_count_does_not_change_counts() {
        let mut a = small_config();
        a.workers = Some(1);
        let mut b = small_config();
        b.workers = Some(3);
        assert_eq!(estimate_power(&a).unwrap().cells, estimate_power(&b).unwrap().cells);
    }

    #[test]
    fn percentile_is_order_statistic() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(percentile_of(&v, 0.95), 95.0);
        assert_eq!(percentile_of(&v, 0.951), 96.0);
        assert_eq!(percentile_of(&v, 0.001), 1.0);
    }

    #[test]
    fn percentile_needs_enough_reps() {
        assert!(estimate_null_percentile(TestKind::Ep, 20, 0.95, 999, 1).is_err());
    }

    #[test]
    fn ecft_median_near_zero() {
        let est = estimate_null_percentile(TestKind::Ecft, 200, 0.5, 4000, 3).unwrap();
        assert!(est.value.abs() < 0.1, "{est:?}");
    }

    #[test]
    fn curves_reject_t_zero() {
        assert!(matches!(
            variance_curve(&[50], 1000, 0.0, 1, None),
            Err(Error::InvalidPoint { .. })
        ));
        let v = variance_curve(&[100], 500, 1.0, 1, None).unwrap();
        assert!((v[0].asymptotic - asymptotic_coeff(1.0) / 100.0).abs() < 1e-18);
    }

    #[test]
    fn bias_curve_is_deterministic_and_ordered() {
        let a = bias_curve(&[10], 1000, 1.0, 5, None).unwrap();
        let b = bias_curve(&[10], 1000, 1.0, 5, Some(2)).unwrap();
        assert_eq!(a, b);
        assert!(a[0].studentized_sd < a[0].raw_sd);
        assert!(a[0].studentized > -0.5 && a[0].raw > -0.5);
    }
}
