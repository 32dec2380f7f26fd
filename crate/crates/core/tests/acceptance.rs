//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on failure.

use std::time::Instant;

use ecf_normality::distributions::DistributionSpec;
use ecf_normality::ecf::{asymptotic_coeff, ecf_at, vn_statistic};
use ecf_normality::epps_pulley::{ep_quadrature_oracle, ep_statistic, EpForm, QuadratureSettings};
use ecf_normality::harness::{
    estimate_null_percentile, estimate_power, estimate_type1, moments, null_ecft_statistics,
    variance_curve, PowerTable, SimulationConfig,
};
use ecf_normality::sample::{studentize, Divisor, Sample, StudentizedSample};
use ecf_normality::suite::{Evaluator, TestKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 1;
const M: usize = 5000;

struct Outcome {
    pass: bool,
    detail: String,
}

fn report(id: usize, name: &str, started: Instant, o: &Outcome) {
    println!(
        "criterion {id} [{name}]: {} ({:.1}s) {}",
        if o.pass { "PASS" } else { "FAIL" },
        started.elapsed().as_secs_f64(),
        o.detail
    );
}

fn analytic_constant() -> Outcome {
    let t0 = Instant::now();
    let c = asymptotic_coeff(1.0);
    let exact = (c - (1f64.cosh() - 1.5)).abs() < 1e-15;
    let rounded = (c * 1e4).round() / 1e4 == 0.0431;
    let k = 1.0 / 0.0431f64.sqrt();
    let k5 = (k * 1e4).round() / 1e4 == 4.8168;
    let fast = t0.elapsed().as_secs_f64() < 1e-3;
    Outcome {
        pass: exact && rounded && k5 && fast,
        detail: format!("c(1) = {c:.10}, 1/sqrt(0.0431) = {k:.6}, 1/sqrt(c(1)) = {:.6}", 1.0 / c.sqrt()),
    }
}

const TYPE1: [(usize, [f64; 7]); 6] = [
    (50, [0.0406, 0.0476, 0.0544, 0.0484, 0.0478, 0.0506, 0.0568]),
    (100, [0.0460, 0.0508, 0.0468, 0.0524, 0.0460, 0.0496, 0.0602]),
    (250, [0.0470, 0.0536, 0.0574, 0.0546, 0.0454, 0.0526, 0.0582]),
    (500, [0.0470, 0.0556, 0.0526, 0.0526, 0.0442, 0.0546, 0.0510]),
    (750, [0.0512, 0.0528, 0.0480, 0.0522, 0.0432, 0.0532, 0.0520]),
    (1000, [0.0478, 0.0496, 0.0486, 0.0482, 0.0466, 0.0456, 0.0500]),
];

fn null_calibration() -> Outcome {
    let config = SimulationConfig {
        sizes: TYPE1.iter().map(|r| r.0).collect(),
        reps: M,
        master_seed: SEED,
        ..SimulationConfig::default()
    };
    let table = estimate_type1(&config).expect("type I run");
    let normal = DistributionSpec::STANDARD_NORMAL;
    let mut worst = (0.0, String::new());
    let mut misses = Vec::new();
    for (n, row) in TYPE1 {
        for (k, &kind) in TestKind::ALL.iter().enumerate() {
            let p = table.proportion(&normal, n, kind).expect("cell present");
            let d = (p - row[k]).abs();
            if d > worst.0 {
                worst = (d, format!("{kind}/n={n}: {p:.4} vs {:.4}", row[k]));
            }
            if d > 0.012 {
                misses.push(format!("{kind}/n={n}: {p:.4} vs {:.4}", row[k]));
            }
        }
    }
    Outcome {
        pass: misses.is_empty(),
        detail: format!(
            "{} of 42 cells within 0.012; largest gap {:.4} ({}){}",
            42 - misses.len(),
            worst.0,
            worst.1,
            fmt_misses(&misses)
        ),
    }
}

fn fmt_misses(m: &[String]) -> String {
    if m.is_empty() {
        String::new()
    } else {
        format!("; outside: {}", m.join(", "))
    }
}

fn power(dist: DistributionSpec, sizes: &[usize]) -> PowerTable {
    let config = SimulationConfig {
        dists: vec![dist],
        sizes: sizes.to_vec(),
        reps: M,
        master_seed: SEED,
        ..SimulationConfig::default()
    };
    estimate_power(&config).expect("power run")
}

fn power_reproduction(t10: &PowerTable, logistic: &PowerTable) -> Outcome {
    let mix = |sigma2nd, alpha| DistributionSpec::NormalMixture { alpha, sigma2nd };
    let cells: [(DistributionSpec, usize, [f64; 7]); 8] = [
        (DistributionSpec::StudentT { df: 4 }, 250, [0.9892, 0.9574, 0.8394, 0.9790, 0.9636, 0.9410, 0.9654]),
        (DistributionSpec::StudentT { df: 10 }, 1000, [0.9648, 0.8296, 0.5112, 0.9422, 0.8862, 0.7756, 0.9208]),
        (DistributionSpec::StudentT { df: 15 }, 500, [0.5144, 0.2540, 0.1292, 0.4800, 0.3550, 0.2190, 0.4226]),
        (DistributionSpec::Uniform01, 100, [0.9496, 0.9228, 0.5860, 0.7396, 0.9844, 0.9486, 0.9962]),
        (DistributionSpec::Laplace { mu: 0.0, b: 1.0 }, 100, [0.8666, 0.8148, 0.7026, 0.8008, 0.7804, 0.8276, 0.7326]),
        (DistributionSpec::Logistic { mu: 0.0, s: 1.0 }, 500, [0.9344, 0.7960, 0.5164, 0.8876, 0.8264, 0.7514, 0.8494]),
        (mix(2.0, 0.2), 250, [0.8804, 0.6776, 0.3696, 0.8482, 0.7640, 0.6134, 0.7928]),
        (mix(0.5, 0.2), 1000, [0.7110, 0.6284, 0.4668, 0.5420, 0.4822, 0.6352, 0.4710]),
    ];
    let mut misses = Vec::new();
    let mut worst = (0.0, String::new());
    let mut ecft = Vec::new();
    for (dist, n, row) in cells {
        let table = match dist {
            DistributionSpec::StudentT { df: 10 } => t10.clone(),
            DistributionSpec::Logistic { .. } => logistic.clone(),
            _ => power(dist, &[n]),
        };
        for (k, &kind) in TestKind::ALL.iter().enumerate() {
            let p = table.proportion(&dist, n, kind).expect("cell present");
            let d = (p - row[k]).abs();
            let label = format!("{dist}/n={n}/{kind}: {p:.4} vs {:.4}", row[k]);
            if kind == TestKind::Ecft {
                ecft.push(format!("{dist}/{n}={p:.4}"));
            }
            if d > worst.0 {
                worst = (d, label.clone());
            }
            if d > 0.02 {
                misses.push(label);
            }
        }
    }
    Outcome {
        pass: misses.is_empty(),
        detail: format!(
            "{} of 56 cells within 0.02; largest gap {:.4} ({}); ECFT {}{}",
            56 - misses.len(),
            worst.0,
            worst.1,
            ecft.join(" "),
            fmt_misses(&misses)
        ),
    }
}

fn dominance(t10: &PowerTable, logistic: &PowerTable) -> Outcome {
    let t = DistributionSpec::StudentT { df: 10 };
    let mut ok = true;
    let mut parts = Vec::new();
    for n in [250, 500, 750, 1000] {
        let e = t10.proportion(&t, n, TestKind::Ecft).unwrap();
        let p = t10.proportion(&t, n, TestKind::Ep).unwrap();
        ok &= e > p;
        parts.push(format!("t(10)/{n}: {e:.4}>{p:.4}"));
    }
    let l = DistributionSpec::Logistic { mu: 0.0, s: 1.0 };
    let e = logistic.get(&l, 1000, TestKind::Ecft).unwrap();
    for &kind in &TestKind::ALL[1..] {
        let o = logistic.get(&l, 1000, kind).unwrap();
        let se = (e.std_error.powi(2) + o.std_error.powi(2)).sqrt();
        if e.proportion < o.proportion - 2.0 * se {
            ok = false;
            parts.push(format!("logistic/1000 {kind} {:.4} above ECFT {:.4}", o.proportion, e.proportion));
        }
    }
    parts.push(format!("logistic/1000 ECFT {:.4}", e.proportion));
    Outcome { pass: ok, detail: parts.join(", ") }
}

fn ep_percentiles() -> Outcome {
    let published = [(50, 0.370), (100, 0.373), (250, 0.375), (500, 0.377), (750, 0.377), (1000, 0.377)];
    let mut ok = true;
    let mut parts = Vec::new();
    let mut last = None;
    for (n, q) in published {
        let est = estimate_null_percentile(TestKind::Ep, n, 0.95, 200_000, SEED).expect("percentile run");
        let good = (est.value - q).abs() <= 0.004;
        ok &= good;
        parts.push(format!("{n}:{:.4}{}", est.value, if good { "" } else { "(!)" }));
        last = Some(est);
    }
    let est = last.unwrap();
    let mean_ok = (est.mean - 0.1336).abs() <= 0.002 && (est.mean - 0.13397).abs() <= 0.002;
    let var_ok = (est.variance - 0.0151).abs() <= 0.001;
    ok &= mean_ok && var_ok;
    Outcome {
        pass: ok,
        detail: format!(
            "q95 {}; n=1000 mean {:.5}, variance {:.5}",
            parts.join(" "),
            est.mean,
            est.variance
        ),
    }
}

fn oracle_equivalence() -> Outcome {
    let grid = QuadratureSettings::default();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.random_range(2..=50);
        let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 4.0 - 2.0 + rng.random::<f64>().powi(3)).collect();
        let s = studentize(&Sample::new(x).unwrap(), Divisor::NMinusOne).unwrap();
        let direct = ep_statistic(&s, EpForm::Reference).unwrap().t_n / n as f64;
        let quad = ep_quadrature_oracle(&s, &grid).unwrap();
        worst = worst.max((direct - quad).abs());
    }
    let two = StudentizedSample::from_standardized(vec![-1.0, 1.0]).unwrap();
    let t2 = ep_statistic(&two, EpForm::Reference).unwrap().t_n;
    let hand = (1.0 + (-2f64).exp()) - 2.0 * 2f64.sqrt() * (-0.25f64).exp() + 2.0 / 3f64.sqrt();
    let formula_ok = (t2 - hand).abs() < 5e-7;
    let printed_ok = (t2 - 0.087312).abs() < 5e-7;
    let note = if printed_ok {
        ""
    } else {
        "; printed hand value 0.087312 not reproduced, it disagrees with its own formula"
    };
    Outcome {
        pass: worst < 1e-6 && formula_ok && printed_ok,
        detail: format!(
            "max |T_n/n - oracle| = {worst:.2e} over 100 samples; T_2 = {t2:.6}, (1+e^-2) - 2*sqrt(2)*e^-0.25 + 2/sqrt(3) = {hand:.6}{note}"
        ),
    }
}

fn property_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 7);
    let mut failures = Vec::new();
    let mut max_affine: f64 = 0.0;
    for case in 0..60 {
        let n = rng.random_range(20..=120);
        let x: Vec<f64> = (0..n).map(|_| (1.0 - rng.random::<f64>()).ln() * if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
        let a = rng.random_range(0.1..50.0) * if rng.random::<bool>() { 1.0 } else { -1.0 };
        let b = rng.random_range(-100.0..100.0);
        let y: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        let eval = Evaluator::standard(n);
        for kind in TestKind::ALL {
            let sx = eval.statistic(kind, &x).unwrap();
            let sy = eval.statistic(kind, &y).unwrap();
            let rel = (sx - sy).abs() / sx.abs().max(1.0);
            max_affine = max_affine.max(rel);
            if rel > 1e-9 {
                failures.push(format!("affine {kind} case {case}: {sx} vs {sy}"));
            }
        }
        let s = studentize(&Sample::new(x.clone()).unwrap(), Divisor::NMinusOne).unwrap();
        let mean = s.z().iter().sum::<f64>() / n as f64;
        let var = s.z().iter().map(|z| z * z).sum::<f64>() / (n as f64 - 1.0);
        if mean.abs() > 1e-12 || (var - 1.0).abs() > 1e-10 * n as f64 {
            failures.push(format!("studentize case {case}: mean {mean}, var {var}"));
        }
        for _ in 0..5 {
            let t: f64 = rng.random_range(-4.0..4.0);
            if t == 0.0 {
                continue;
            }
            let p = ecf_at(s.z(), t).unwrap();
            let q = ecf_at(s.z(), -t).unwrap();
            if (p.re - q.re).abs() > 1e-12 || (p.im + q.im).abs() > 1e-12 {
                failures.push(format!("conjugate symmetry t={t}"));
            }
            if p.modulus() > 1.0 + 1e-12 {
                failures.push(format!("|phi| > 1 at t={t}"));
            }
            if vn_statistic(&s, t).unwrap() > t * t / 2.0 + 1e-12 {
                failures.push(format!("v_n > t^2/2 at t={t}"));
            }
            if asymptotic_coeff(t) < 0.0 {
                failures.push(format!("c(t) < 0 at t={t}"));
            }
        }
    }
    let base = SimulationConfig {
        dists: vec![
            DistributionSpec::StudentT { df: 5 },
            DistributionSpec::NormalMixture { alpha: 0.3, sigma2nd: 2.0 },
        ],
        sizes: vec![25, 60],
        reps: 600,
        master_seed: SEED,
        ..SimulationConfig::default()
    };
    let tables: Vec<String> = [1, 4, 16]
        .iter()
        .map(|&w| {
            let mut c = base.clone();
            c.workers = Some(w);
            estimate_power(&c).unwrap().to_csv_string()
        })
        .collect();
    let identical = tables.iter().all(|t| t == &tables[0]);
    if !identical {
        failures.push("power tables differ across worker counts".into());
    }
    Outcome {
        pass: failures.is_empty(),
        detail: format!(
            "60 random samples x 7 tests, max affine rel. diff {max_affine:.1e}; tables at 1/4/16 workers identical: {identical}{}",
            fmt_misses(&failures)
        ),
    }
}

fn diagnostics() -> Outcome {
    let z = null_ecft_statistics(1000, M, 1.0, SEED, None).expect("null statistics");
    let (mean, var) = moments(&z);
    let sd = var.sqrt();
    let v = variance_curve(&[1000], M, 1.0, SEED, None).expect("variance curve");
    let n_var = v[0].empirical * 1000.0;
    let ratio = n_var / 0.0431;
    let pass = mean.abs() < 0.05 && sd > 0.95 && sd < 1.05 && (ratio - 1.0).abs() <= 0.15;
    Outcome {
        pass,
        detail: format!("standardized mean {mean:.4}, sd {sd:.4}; n*Var(v_n) = {n_var:.5} ({:.1}% of 0.0431)", ratio * 100.0),
    }
}

fn main() {
    let mut all = true;
    let mut run = |id: usize, name: &str, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let o = f();
        report(id, name, start, &o);
        all &= o.pass;
    };
    run(1, "analytic constant", &mut analytic_constant);
    run(2, "null calibration", &mut null_calibration);
    let t10 = power(DistributionSpec::StudentT { df: 10 }, &[250, 500, 750, 1000]);
    let logistic = power(DistributionSpec::Logistic { mu: 0.0, s: 1.0 }, &[500, 1000]);
    run(3, "power reproduction", &mut || power_reproduction(&t10, &logistic));
    run(4, "dominance", &mut || dominance(&t10, &logistic));
    run(5, "EP percentiles", &mut ep_percentiles);
    run(6, "oracle equivalence", &mut oracle_equivalence);
    run(7, "property suite", &mut property_suite);
    run(8, "null diagnostics", &mut diagnostics);
    if !all {
        std::process::exit(1);
    }
}
