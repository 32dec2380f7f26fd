//! Normality tests built around the empirical characteristic function,
//! together with Epps–Pulley, five classical tests and a seeded Monte Carlo
//! harness for size and power studies.

pub mod classical;
pub mod critical;
pub mod distributions;
pub mod ecf;
pub mod epps_pulley;
pub mod error;
pub mod harness;
pub mod sample;
pub mod special;
pub mod suite;

pub use critical::{CriticalSource, CriticalTable, Provenance};
pub use distributions::{draw_sample, parse_spec, DistributionSpec, RngStream};
pub use ecf::{asymptotic_coeff, ecf_at, ecft_test, vn_statistic, EcfValue, EcftConfig, EcftResult};
pub use epps_pulley::{ep_quadrature_oracle, ep_statistic, ep_test, EpForm, EpResult, QuadratureSettings};
pub use error::{Error, Result};
pub use harness::{
    bias_curve, estimate_null_percentile, estimate_power, estimate_type1, variance_curve,
    PercentileEstimate, PowerTable, SimulationConfig,
};
pub use sample::{studentize, Divisor, Sample, StudentizedSample};
pub use suite::{run_tests, Battery, SuiteConfig, TestKind, TestResult};
