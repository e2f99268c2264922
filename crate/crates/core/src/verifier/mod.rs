//! Inequality suites, report assembly and the JSON/CSV writers.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub mod config;
pub mod report;
pub mod suites;

pub use config::{load_config, parse_config, ExperimentConfig, Times};
pub use report::{Expectation, InequalityReport, Method, Provenance, Relation, Verdict};
pub use suites::{run_suite, suite_names};

pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable capping the worker threads.
pub const THREADS_ENV: &str = "HEATGAUGE_THREADS";

/// Rows of one suite on one geometry, ordered by claim id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub geometry: Option<String>,
    pub config: ExperimentConfig,
    pub rows: Vec<InequalityReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: u32,
    pub suites: Vec<SuiteReport>,
}

/// Flat CSV record; one per report row.
#[derive(Serialize)]
struct CsvRow<'a> {
    suite: &'a str,
    claim: &'a str,
    geometry: &'a str,
    function: &'a str,
    instance: &'a str,
    x: Option<f64>,
    relation: Relation,
    lhs: f64,
    rhs: f64,
    lhs_stderr: f64,
    rhs_stderr: f64,
    allowance: f64,
    margin: f64,
    verdict: &'a str,
    expectation: Expectation,
    seed: Option<u64>,
    n: usize,
    dt: Option<f64>,
    method: &'a str,
    note: &'a str,
}

impl RunReport {
    pub fn rows(&self) -> impl Iterator<Item = &InequalityReport> {
        self.suites.iter().flat_map(|s| s.rows.iter())
    }

    /// Claims that FAILed and controls that did not.
    pub fn unexpected(&self) -> Vec<&InequalityReport> {
        self.rows().filter(|r| !r.as_expected()).collect()
    }

    pub fn inconclusive_count(&self) -> usize {
        self.rows().filter(|r| r.verdict == Verdict::Inconclusive).count()
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::invalid(format!("report serialization: {e}")))
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for s in &self.suites {
            for r in &s.rows {
                out.serialize(CsvRow {
                    suite: &s.suite,
                    claim: &r.claim,
                    geometry: &r.geometry,
                    function: &r.function,
                    instance: &r.instance,
                    x: r.x,
                    relation: r.relation,
                    lhs: r.lhs,
                    rhs: r.rhs,
                    lhs_stderr: r.lhs_stderr,
                    rhs_stderr: r.rhs_stderr,
                    allowance: r.allowance,
                    margin: r.margin,
                    verdict: r.verdict.as_str(),
                    expectation: r.expectation,
                    seed: r.provenance.seed,
                    n: r.provenance.n,
                    dt: r.provenance.dt,
                    method: r.provenance.method.as_str(),
                    note: r.note.as_deref().unwrap_or(""),
                })
                .map_err(|e| Error::invalid(format!("csv: {e}")))?;
            }
        }
        out.flush()?;
        Ok(())
    }

    /// Writes `report.json` and `report.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir)?;
        let json = dir.join("report.json");
        let csv = dir.join("report.csv");
        std::fs::write(&json, self.to_json()?)?;
        self.write_csv(std::fs::File::create(&csv)?)?;
        Ok((json, csv))
    }
}

/// Runs every experiment in order on the current thread pool.
pub fn run_experiments(configs: &[ExperimentConfig]) -> Result<RunReport> {
    let mut suites = Vec::new();
    for cfg in configs {
        suites.extend(run_suite(cfg)?);
    }
    Ok(RunReport {
        schema: SCHEMA_VERSION,
        suites,
    })
}

/// Runs on a dedicated pool of `threads` workers, or the global pool.
/// Results do not depend on the worker count.
pub fn run_with_threads(configs: &[ExperimentConfig], threads: Option<usize>) -> Result<RunReport> {
    match threads {
        None => run_experiments(configs),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            pool.install(|| run_experiments(configs))
        }
    }
}

/// Reads `HEATGAUGE_THREADS`; unset or empty means no cap.
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) if v.trim().is_empty() => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(Error::Config(format!("{THREADS_ENV} must be a positive integer, got `{v}`"))),
        },
    }
}
