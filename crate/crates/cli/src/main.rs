mod input;
mod manifest;

use anyhow::{anyhow, bail, Context};
use chrono::Utc;
use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use ecf_normality::critical::{CriticalTable, Provenance, CACHE_SEED};
use ecf_normality::distributions::{draw_sample, parse_spec, parse_spec_list, RngStream};
use ecf_normality::harness::{
    bias_curve, estimate_percentile_with, estimate_power, estimate_type1, null_ecft_statistics,
    variance_curve, PercentileEstimate, SimulationConfig,
};
use ecf_normality::suite::Evaluator;
use ecf_normality::{
    run_tests, studentize, Divisor, EpForm, Error, Sample, SuiteConfig, TestKind, TestResult,
};

use manifest::RunManifest;

const AFTER_HELP: &str = "Exit status: 0 when every test runs and none rejects, \
2 when at least one test rejects normality, 1 on any error.";

#[derive(Parser, Debug)]
#[command(name = "ecfnorm", version, about = "Normality tests and Monte Carlo size/power studies", after_help = AFTER_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run normality tests on a data file.
    Test(TestArgs),
    /// Simulated power against non-normal alternatives.
    Power(PowerArgs),
    /// Simulated Type I error under the standard normal.
    Type1(Type1Args),
    /// Simulated null percentiles of a test statistic.
    Percentiles(PercentileArgs),
    /// Bias, variance and null-histogram data for the ECFT statistic.
    Curves(CurveArgs),
    /// Draw a seeded sample, one value per line.
    Sample(SampleArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum TextFormat {
    Text,
    Json,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum TableFormat {
    Csv,
    Json,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum PercentileFormat {
    Csv,
    Json,
    /// Critical-value table as bundled with the library (q = 0.95 only).
    Table,
}

#[derive(Args, Debug)]
struct TestArgs {
    #[arg(long)]
    input: PathBuf,
    /// CSV column (header name or 0-based index); without it the file holds one value per line.
    #[arg(long)]
    column: Option<String>,
    #[arg(long, default_value = "all")]
    tests: String,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// ECFT evaluation point.
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    #[arg(long, value_enum, default_value_t = TextFormat::Text)]
    format: TextFormat,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SimArgs {
    #[arg(long, value_delimiter = ',', default_value = "50,100,250,500,750,1000")]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 5000)]
    reps: usize,
    #[arg(long, default_value = "all")]
    tests: String,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    #[arg(long, default_value_t = CACHE_SEED)]
    seed: u64,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = TableFormat::Csv)]
    format: TableFormat,
}

#[derive(Args, Debug)]
struct PowerArgs {
    /// Comma-separated alternatives: t:df, uniform, laplace, logistic, mix:sigma:alpha.
    #[arg(long)]
    dists: String,
    #[command(flatten)]
    sim: SimArgs,
}

#[derive(Args, Debug)]
struct Type1Args {
    #[command(flatten)]
    sim: SimArgs,
}

#[derive(Args, Debug)]
struct PercentileArgs {
    #[arg(long, default_value = "EP")]
    test: String,
    #[arg(long, value_delimiter = ',', default_value = "50,100,250,500,750,1000")]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 200_000)]
    reps: usize,
    #[arg(long, default_value_t = 0.95)]
    q: f64,
    #[arg(long, default_value_t = CACHE_SEED)]
    seed: u64,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = PercentileFormat::Csv)]
    format: PercentileFormat,
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("curve").required(true).args(["bias", "variance", "histogram"])))]
struct CurveArgs {
    /// Mean log-modulus of the ecf, studentized and raw.
    #[arg(long)]
    bias: bool,
    /// Empirical variance of v_n against c(t)/n.
    #[arg(long)]
    variance: bool,
    /// Standardized ECFT statistics under the null.
    #[arg(long)]
    histogram: bool,
    #[arg(long, value_delimiter = ',', default_value = "10,20,50,100,250,500,1000")]
    sizes: Vec<usize>,
    /// Defaults to 1000 (bias, variance) or 5000 (histogram).
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    #[arg(long, default_value_t = CACHE_SEED)]
    seed: u64,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SampleArgs {
    /// One distribution in the --dists grammar.
    #[arg(long)]
    dist: String,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = CACHE_SEED)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ReplayArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Write to this path instead of the recorded one.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Six significant digits.
fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    if (-4..6).contains(&mag) {
        format!("{:.*}", (5 - mag).max(0) as usize, x)
    } else {
        format!("{x:.5e}")
    }
}

fn describe_error(e: &Error) -> String {
    match e {
        Error::Parse { position, message, expected } => {
            format!("ParseError at position {position}: {message} (expected {expected})")
        }
        other => other.to_string(),
    }
}

fn lib_err(e: Error) -> anyhow::Error {
    anyhow!(describe_error(&e))
}

struct Emitted {
    config: serde_json::Value,
    seed: Option<u64>,
    out: Option<PathBuf>,
    exit: u8,
}

fn emit(out: Option<&Path>, content: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            }
            std::fs::write(p, content).with_context(|| format!("writing {}", p.display()))
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(content.as_bytes())?;
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct TestError {
    test: TestKind,
    error: String,
}

#[derive(Serialize)]
struct TestReport<'a> {
    input: &'a Path,
    n: usize,
    alpha: f64,
    t: f64,
    results: Vec<TestResult>,
    errors: Vec<TestError>,
}

fn text_report(report: &TestReport) -> String {
    let mut s = format!("n = {}, alpha = {}\n", report.n, report.alpha);
    s += &format!(
        "{:<5} {:>13} {:>13} {:>13}  {}\n",
        "test", "statistic", "p-value", "critical", "decision"
    );
    for r in &report.results {
        let p = r.p_value.map(sig6).unwrap_or_else(|| "-".into());
        let c = r.critical_value.map(sig6).unwrap_or_else(|| "-".into());
        let d = if r.reject { "reject" } else { "fail to reject" };
        s += &format!("{:<5} {:>13} {:>13} {:>13}  {}\n", r.test.name(), sig6(r.statistic), p, c, d);
    }
    for e in &report.errors {
        s += &format!("{:<5} error: {}\n", e.test.name(), e.error);
    }
    s
}

fn cmd_test(a: &TestArgs) -> anyhow::Result<Emitted> {
    let kinds = TestKind::parse_list(&a.tests).map_err(lib_err)?;
    let values = input::read_values(&a.input, a.column.as_deref())?;
    if values.len() < 2 {
        bail!("need at least 2 values, found {}", values.len());
    }
    let n = values.len();
    let sample = Sample::new(values).map_err(lib_err)?;
    studentize(&sample, Divisor::NMinusOne).map_err(lib_err)?;
    if n < 50 {
        eprintln!("warning: n = {n} is below 50; ECFT p-values rely on a large-sample approximation");
    }
    let mut config = SuiteConfig::for_alpha(a.alpha).map_err(lib_err)?;
    config.t = a.t;
    let outcome = run_tests(&sample, &kinds, &config).map_err(lib_err)?;
    let mut results = Vec::new();
    let mut errors = Vec::new();
    for (k, r) in outcome {
        match r {
            Ok(r) => results.push(r),
            Err(e) => errors.push(TestError { test: k, error: describe_error(&e) }),
        }
    }
    let report = TestReport { input: &a.input, n, alpha: a.alpha, t: a.t, results, errors };
    let body = match a.format {
        TextFormat::Text => text_report(&report),
        TextFormat::Json => serde_json::to_string_pretty(&report)? + "\n",
    };
    emit(a.out.as_deref(), &body)?;
    for e in &report.errors {
        eprintln!("error: {}: {}", e.test, e.error);
    }
    let exit = if !report.errors.is_empty() {
        1
    } else if report.results.iter().any(|r| r.reject) {
        2
    } else {
        0
    };
    Ok(Emitted {
        config: serde_json::json!({
            "input": a.input, "column": a.column, "tests": kinds,
            "alpha": a.alpha, "t": a.t,
        }),
        seed: None,
        out: a.out.clone(),
        exit,
    })
}

fn sim_config(sim: &SimArgs, dists: Vec<ecf_normality::DistributionSpec>) -> anyhow::Result<SimulationConfig> {
    Ok(SimulationConfig {
        tests: TestKind::parse_list(&sim.tests).map_err(lib_err)?,
        dists,
        sizes: sim.sizes.clone(),
        reps: sim.reps,
        alpha: sim.alpha,
        master_seed: sim.seed,
        t_point: sim.t,
        ep_form: EpForm::Reference,
        workers: sim.workers,
    })
}

fn emit_table(sim: &SimArgs, config: &SimulationConfig, table: &ecf_normality::PowerTable) -> anyhow::Result<Emitted> {
    let body = match sim.format {
        TableFormat::Csv => table.to_csv_string(),
        TableFormat::Json => table.to_json() + "\n",
    };
    emit(sim.out.as_deref(), &body)?;
    for s in &table.skipped {
        eprintln!("note: {} skipped at n = {}: {}", s.test, s.n, s.reason);
    }
    let mut echo = config.clone();
    echo.workers = None;
    Ok(Emitted {
        config: serde_json::to_value(echo)?,
        seed: Some(config.master_seed),
        out: sim.out.clone(),
        exit: 0,
    })
}

fn cmd_power(a: &PowerArgs) -> anyhow::Result<Emitted> {
    let dists = parse_spec_list(&a.dists).map_err(|e| {
        let caret = match &e {
            Error::Parse { position, .. } => format!("\n  {}\n  {}^", a.dists, " ".repeat(*position)),
            _ => String::new(),
        };
        anyhow!("{}{caret}", describe_error(&e))
    })?;
    let config = sim_config(&a.sim, dists)?;
    let table = estimate_power(&config).map_err(lib_err)?;
    emit_table(&a.sim, &config, &table)
}

fn cmd_type1(a: &Type1Args) -> anyhow::Result<Emitted> {
    let config = sim_config(&a.sim, Vec::new())?;
    let table = estimate_type1(&config).map_err(lib_err)?;
    emit_table(&a.sim, &table.config, &table)
}

#[derive(Serialize)]
struct PercentileRow {
    test: TestKind,
    n: usize,
    q: f64,
    value: f64,
    reps: usize,
    mean: f64,
    variance: f64,
    seed: u64,
}

impl PercentileRow {
    fn new(test: TestKind, e: &PercentileEstimate) -> Self {
        Self {
            test,
            n: e.n,
            q: e.q,
            value: e.value,
            reps: e.reps,
            mean: e.mean,
            variance: e.variance,
            seed: e.seed,
        }
    }
}

fn cmd_percentiles(a: &PercentileArgs) -> anyhow::Result<Emitted> {
    let kind: TestKind = a.test.parse().map_err(lib_err)?;
    if a.sizes.is_empty() {
        bail!("sizes must not be empty");
    }
    if a.format == PercentileFormat::Table && a.q != 0.95 {
        bail!("table output holds 95% points only; got --q {}", a.q);
    }
    let mut rows = Vec::new();
    for &n in &a.sizes {
        kind.check_size(n).map_err(lib_err)?;
        let eval = Evaluator::standard(n);
        let est = estimate_percentile_with(|x| eval.statistic(kind, x), n, a.q, a.reps, a.seed, a.workers)
            .map_err(lib_err)?;
        rows.push((PercentileRow::new(kind, &est), est));
    }
    let body = match a.format {
        PercentileFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for (r, _) in &rows {
                w.serialize(r)?;
            }
            String::from_utf8(w.into_inner()?)?
        }
        PercentileFormat::Json => {
            let json: Vec<&PercentileRow> = rows.iter().map(|(r, _)| r).collect();
            serde_json::to_string_pretty(&json)? + "\n"
        }
        PercentileFormat::Table => {
            let mut t = CriticalTable::new(Provenance::SelfSimulated { m: a.reps, seed: a.seed });
            for (_, e) in &rows {
                t.insert(e.n, e.to_row());
            }
            t.to_csv_string()
        }
    };
    emit(a.out.as_deref(), &body)?;
    Ok(Emitted {
        config: serde_json::json!({
            "test": kind, "sizes": a.sizes, "reps": a.reps, "q": a.q, "seed": a.seed,
        }),
        seed: Some(a.seed),
        out: a.out.clone(),
        exit: 0,
    })
}

fn cmd_curves(a: &CurveArgs) -> anyhow::Result<Emitted> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let kind;
    let reps;
    if a.bias {
        kind = "bias";
        reps = a.reps.unwrap_or(1000);
        w.write_record(["n", "studentized", "raw", "limit", "studentized_sd", "raw_sd"])?;
        for p in bias_curve(&a.sizes, reps, a.t, a.seed, a.workers).map_err(lib_err)? {
            let limit = -0.5 * a.t * a.t;
            w.serialize((p.n, p.studentized, p.raw, limit, p.studentized_sd, p.raw_sd))?;
        }
    } else if a.variance {
        kind = "variance";
        reps = a.reps.unwrap_or(1000);
        w.write_record(["n", "empirical", "asymptotic"])?;
        for p in variance_curve(&a.sizes, reps, a.t, a.seed, a.workers).map_err(lib_err)? {
            w.serialize((p.n, p.empirical, p.asymptotic))?;
        }
    } else {
        kind = "histogram";
        reps = a.reps.unwrap_or(5000);
        w.write_record(["n", "replication", "standardized"])?;
        for &n in &a.sizes {
            let v = null_ecft_statistics(n, reps, a.t, a.seed, a.workers).map_err(lib_err)?;
            for (i, s) in v.into_iter().enumerate() {
                w.serialize((n, i, s))?;
            }
        }
    }
    let body = String::from_utf8(w.into_inner()?)?;
    emit(a.out.as_deref(), &body)?;
    Ok(Emitted {
        config: serde_json::json!({
            "curve": kind, "sizes": a.sizes, "reps": reps, "t": a.t, "seed": a.seed,
        }),
        seed: Some(a.seed),
        out: a.out.clone(),
        exit: 0,
    })
}

fn cmd_sample(a: &SampleArgs) -> anyhow::Result<Emitted> {
    let spec = parse_spec(&a.dist).map_err(lib_err)?;
    let x = draw_sample(&spec, a.n, &RngStream::new(a.seed)).map_err(lib_err)?;
    let mut body = String::with_capacity(a.n * 24);
    for v in x.values() {
        body += &format!("{v}\n");
    }
    emit(a.out.as_deref(), &body)?;
    Ok(Emitted {
        config: serde_json::json!({ "dist": spec.to_string(), "n": a.n, "seed": a.seed }),
        seed: Some(a.seed),
        out: a.out.clone(),
        exit: 0,
    })
}

/// Drops `--out` (and its value) from a recorded argument list.
fn strip_out(argv: &[String]) -> Vec<String> {
    let mut out = Vec::new();
    let mut skip = false;
    for a in argv {
        if skip {
            skip = false;
        } else if a == "--out" {
            skip = true;
        } else if !a.starts_with("--out=") {
            out.push(a.clone());
        }
    }
    out
}

fn run(argv: Vec<String>) -> anyhow::Result<u8> {
    let cli = Cli::try_parse_from(std::iter::once("ecfnorm".to_string()).chain(argv.iter().cloned()))?;
    let started_at = Utc::now();
    let (name, emitted) = match &cli.command {
        Command::Test(a) => ("test", cmd_test(a)?),
        Command::Power(a) => ("power", cmd_power(a)?),
        Command::Type1(a) => ("type1", cmd_type1(a)?),
        Command::Percentiles(a) => ("percentiles", cmd_percentiles(a)?),
        Command::Curves(a) => ("curves", cmd_curves(a)?),
        Command::Sample(a) => ("sample", cmd_sample(a)?),
        Command::Replay(a) => {
            let m = RunManifest::read(&a.manifest)
                .with_context(|| format!("reading manifest {}", a.manifest.display()))?;
            let mut replay = m.argv.clone();
            if let Some(out) = &a.out {
                replay = strip_out(&replay);
                replay.push("--out".into());
                replay.push(out.display().to_string());
            }
            return run(replay);
        }
    };
    if let Some(out) = &emitted.out {
        let manifest = RunManifest {
            command: name.to_string(),
            argv,
            config: emitted.config,
            library_version: env!("CARGO_PKG_VERSION").to_string(),
            master_seed: emitted.seed,
            started_at,
            finished_at: Utc::now(),
            outputs: vec![out.clone()],
        };
        manifest.write(out)?;
    }
    Ok(emitted.exit)
}

fn main() -> ExitCode {
    match run(std::env::args().skip(1).collect()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            if let Some(clap_err) = e.downcast_ref::<clap::Error>() {
                let _ = clap_err.print();
                return match clap_err.kind() {
                    clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                        ExitCode::SUCCESS
                    }
                    _ => ExitCode::from(1),
                };
            }
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
