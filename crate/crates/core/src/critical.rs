//! Null-distribution critical values: tabulated 95% quantiles per sample size,
//! with lookup by interpolation in `1/n`.
//!
//! Tables serialize to a small CSV with the columns
//! `n,q95,mean,variance,provenance,m,seed`, preceded by a `# critical-table v1`
//! comment line.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::suite::TestKind;

pub const TABLE_VERSION_LINE: &str = "# critical-table v1";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalRow {
    pub q95: f64,
    pub mean: f64,
    pub variance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    Published,
    SelfSimulated { m: usize, seed: u64 },
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Published => f.write_str("published"),
            Provenance::SelfSimulated { .. } => f.write_str("self_simulated"),
        }
    }
}

/// How a critical value varies with `n`; lookups interpolate `q * n^power`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scaling {
    Flat,
    SqrtN,
}

impl Scaling {
    fn factor(self, n: f64) -> f64 {
        match self {
            Scaling::Flat => 1.0,
            Scaling::SqrtN => n.sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalTable {
    rows: BTreeMap<usize, CriticalRow>,
    provenance: Provenance,
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRecord {
    n: usize,
    q95: f64,
    mean: f64,
    variance: f64,
    provenance: String,
    m: Option<usize>,
    seed: Option<u64>,
}

impl CriticalTable {
    pub fn new(provenance: Provenance) -> Self {
        Self {
            rows: BTreeMap::new(),
            provenance,
        }
    }

    pub fn with_rows<I: IntoIterator<Item = (usize, CriticalRow)>>(
        provenance: Provenance,
        rows: I,
    ) -> Self {
        Self {
            rows: rows.into_iter().collect(),
            provenance,
        }
    }

    /// The simulated Epps–Pulley percentiles at the 5% level (m = 200000).
    pub fn published_ep() -> Self {
        let rows = [
            (50, 0.370, 0.1303, 0.0148),
            (100, 0.373, 0.1321, 0.0150),
            (250, 0.375, 0.1338, 0.0151),
            (500, 0.377, 0.1338, 0.0152),
            (750, 0.377, 0.1334, 0.0151),
            (1000, 0.377, 0.1336, 0.0151),
        ];
        Self::with_rows(
            Provenance::Published,
            rows.into_iter().map(|(n, q95, mean, variance)| {
                (
                    n,
                    CriticalRow {
                        q95,
                        mean,
                        variance,
                    },
                )
            }),
        )
    }

    pub fn insert(&mut self, n: usize, row: CriticalRow) {
        self.rows.insert(n, row);
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn rows(&self) -> impl Iterator<Item = (usize, &CriticalRow)> {
        self.rows.iter().map(|(n, r)| (*n, r))
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn get(&self, n: usize) -> Option<&CriticalRow> {
        self.rows.get(&n)
    }

    /// 95% critical value for sample size `n`: exact row, else linear
    /// interpolation in `1/n` between the bracketing rows, else the nearest
    /// endpoint.
    pub fn q95(&self, n: usize, scaling: Scaling) -> Result<f64> {
        if n == 0 {
            return Err(Error::Table("sample size must be positive".into()));
        }
        if let Some(r) = self.rows.get(&n) {
            return Ok(r.q95);
        }
        let below = self.rows.range(..n).next_back();
        let above = self.rows.range(n..).next();
        let nf = n as f64;
        match (below, above) {
            (Some((&n0, r0)), Some((&n1, r1))) => {
                let (x0, x1, x) = (1.0 / n0 as f64, 1.0 / n1 as f64, 1.0 / nf);
                let y0 = r0.q95 * scaling.factor(n0 as f64);
                let y1 = r1.q95 * scaling.factor(n1 as f64);
                let w = (x - x0) / (x1 - x0);
                Ok((y0 + w * (y1 - y0)) / scaling.factor(nf))
            }
            (Some((&n0, r)), None) | (None, Some((&n0, r))) => {
                Ok(r.q95 * scaling.factor(n0 as f64) / scaling.factor(nf))
            }
            (None, None) => Err(Error::Table("table has no rows".into())),
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut out = out;
        writeln!(out, "{TABLE_VERSION_LINE}").map_err(|e| Error::Table(e.to_string()))?;
        let mut w = csv::Writer::from_writer(out);
        let (m, seed) = match self.provenance {
            Provenance::Published => (None, None),
            Provenance::SelfSimulated { m, seed } => (Some(m), Some(seed)),
        };
        for (n, r) in self.rows() {
            w.serialize(CsvRecord {
                n,
                q95: r.q95,
                mean: r.mean,
                variance: r.variance,
                provenance: self.provenance.to_string(),
                m,
                seed,
            })
            .map_err(|e| Error::Table(e.to_string()))?;
        }
        w.flush().map_err(|e| Error::Table(e.to_string()))?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut text = String::new();
        let mut input = input;
        input
            .read_to_string(&mut text)
            .map_err(|e| Error::Table(e.to_string()))?;
        let first = text.lines().next().unwrap_or("");
        if first.trim() != TABLE_VERSION_LINE {
            return Err(Error::Table(format!(
                "missing or unsupported version line {first:?}"
            )));
        }
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let mut provenance = None;
        let mut rows = BTreeMap::new();
        for rec in rdr.deserialize::<CsvRecord>() {
            let rec = rec.map_err(|e| Error::Table(e.to_string()))?;
            let p = match rec.provenance.as_str() {
                "published" => Provenance::Published,
                "self_simulated" => Provenance::SelfSimulated {
                    m: rec
                        .m
                        .ok_or_else(|| Error::Table("self_simulated row without m".into()))?,
                    seed: rec
                        .seed
                        .ok_or_else(|| Error::Table("self_simulated row without seed".into()))?,
                },
                other => return Err(Error::Table(format!("unknown provenance {other:?}"))),
            };
            match provenance {
                None => provenance = Some(p),
                Some(q) if q != p => {
                    return Err(Error::Table("rows disagree on provenance".into()))
                }
                _ => {}
            }
            rows.insert(
                rec.n,
                CriticalRow {
                    q95: rec.q95,
                    mean: rec.mean,
                    variance: rec.variance,
                },
            );
        }
        let provenance = provenance.ok_or_else(|| Error::Table("table has no rows".into()))?;
        Ok(Self { rows, provenance })
    }
}

/// Seed used to generate the bundled Lilliefors, Anderson–Darling and
/// Jarque–Bera tables.
pub const CACHE_SEED: u64 = 20_170_501;
/// Replications per row of the bundled tables.
pub const CACHE_REPS: usize = 100_000;

/// Sample sizes covered by the bundled tables (from each test's minimum `n`).
pub const CACHE_SIZES: &[usize] = &[
    4, 5, 6, 7, 8, 9, 10, 12, 15, 20, 25, 30, 40, 50, 60, 75, 100, 125, 150, 200, 250, 300, 400,
    500, 600, 750, 1000, 1500, 2000, 3000, 5000,
];

pub fn cache_sizes(kind: TestKind) -> Vec<usize> {
    CACHE_SIZES
        .iter()
        .copied()
        .filter(|&n| n >= kind.min_n())
        .collect()
}

const LL_CSV: &str = include_str!("../data/lilliefors_q95.csv");
const AD_CSV: &str = include_str!("../data/anderson_darling_q95.csv");
const JB_CSV: &str = include_str!("../data/jarque_bera_q95.csv");

fn load_cached(kind: TestKind) -> Result<Arc<CriticalTable>> {
    static LL: OnceLock<Result<Arc<CriticalTable>>> = OnceLock::new();
    static AD: OnceLock<Result<Arc<CriticalTable>>> = OnceLock::new();
    static JB: OnceLock<Result<Arc<CriticalTable>>> = OnceLock::new();
    let (cell, text) = match kind {
        TestKind::Ll => (&LL, LL_CSV),
        TestKind::Ad => (&AD, AD_CSV),
        TestKind::Jb => (&JB, JB_CSV),
        other => {
            return Err(Error::Table(format!(
                "no bundled critical-value table for {other}"
            )))
        }
    };
    cell.get_or_init(|| CriticalTable::read_csv(text.as_bytes()).map(Arc::new))
        .clone()
}

/// Bundled self-simulated table for LL, AD or JB.
pub fn cached_table(kind: TestKind) -> Result<Arc<CriticalTable>> {
    load_cached(kind)
}

/// Where a table-calibrated test gets its critical value from.
#[derive(Debug, Clone, PartialEq)]
pub enum CriticalSource {
    /// 95% quantiles; only `alpha = 0.05` is available.
    Table(Arc<CriticalTable>),
    /// Simulate the null quantile on demand.
    Simulated { reps: usize, seed: u64 },
}

impl CriticalSource {
    pub fn published_ep() -> Self {
        CriticalSource::Table(Arc::new(CriticalTable::published_ep()))
    }

    pub fn cached(kind: TestKind) -> Result<Self> {
        Ok(CriticalSource::Table(cached_table(kind)?))
    }

    pub fn critical_value(&self, kind: TestKind, n: usize, alpha: f64) -> Result<f64> {
        match self {
            CriticalSource::Table(t) => {
                if (alpha - 0.05).abs() > 1e-12 {
                    return Err(Error::UnsupportedAlpha(format!(
                        "{kind} table ({}) holds only 5% critical values, requested alpha = {alpha}",
                        t.provenance()
                    )));
                }
                t.q95(n, kind.critical_scaling())
            }
            CriticalSource::Simulated { reps, seed } => {
                let est = crate::harness::estimate_null_percentile(
                    kind,
                    n,
                    1.0 - alpha,
                    *reps,
                    *seed,
                )?;
                Ok(est.value)
            }
        }
    }
}
