use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use heatgauge::verifier::suites::cd_table;
use heatgauge::verifier::{
    load_config, run_with_threads, suite_names, threads_from_env, ExperimentConfig, RunReport, Verdict,
};
use heatgauge::{Error, Geometry};

#[derive(Parser)]
#[command(name = "heatgauge", version, about = "Numerical checks of heat semigroup estimates on model geometries")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Selection {
    /// JSON experiment file (one object, an array, or {"experiments": [...]}).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Suites to run; filters the config when one is given.
    #[arg(long = "suite")]
    suites: Vec<String>,
    /// Overrides the seed of every experiment.
    #[arg(long)]
    seed: Option<u64>,
    /// Restricts every experiment to one geometry, e.g. `euclidean:1`.
    #[arg(long)]
    geometry: Option<String>,
    /// Overrides the path count of every experiment.
    #[arg(long)]
    paths: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run suites and write report.json and report.csv.
    Run {
        #[command(flatten)]
        selection: Selection,
        /// Output directory.
        #[arg(long, default_value = "heatgauge-out")]
        out: PathBuf,
    },
    /// Curvature-dimension margins of the catalog polynomials, then the cd-check suite.
    CdCheck {
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Emit (x, lhs, rhs) columns of a suite's rows as CSV on stdout.
    PlotData {
        #[command(flatten)]
        selection: Selection,
    },
    /// List the suite ids.
    List,
}

fn experiments(sel: &Selection) -> heatgauge::Result<Vec<ExperimentConfig>> {
    let geometry = sel
        .geometry
        .as_deref()
        .map(|g| g.parse::<Geometry>())
        .transpose()
        .map_err(|e| Error::Config(format!("--geometry: {e}")))?;
    let mut list = match &sel.config {
        Some(path) => {
            let mut all = load_config(path)?;
            if !sel.suites.is_empty() {
                all.retain(|e| sel.suites.contains(&e.suite));
                if all.is_empty() {
                    return Err(Error::Config(format!(
                        "{}: no experiment matches --suite {}",
                        path.display(),
                        sel.suites.join(", ")
                    )));
                }
            }
            all
        }
        None if sel.suites.is_empty() => {
            return Err(Error::Config("give --config FILE or at least one --suite NAME".into()));
        }
        None => sel.suites.iter().map(|s| ExperimentConfig::for_suite(s)).collect(),
    };
    for e in &mut list {
        if let Some(seed) = sel.seed {
            e.seed = Some(seed);
        }
        if geometry.is_some() {
            e.geometry = geometry;
        }
        if let Some(n) = sel.paths {
            e.n_paths = Some(n);
        }
    }
    Ok(list)
}

fn run(list: &[ExperimentConfig]) -> heatgauge::Result<RunReport> {
    run_with_threads(list, threads_from_env()?)
}

fn summarize(report: &RunReport) -> ExitCode {
    for s in &report.suites {
        let count = |v: Verdict| s.rows.iter().filter(|r| r.verdict == v).count();
        println!(
            "{:<22} {:<13} rows={:<4} pass={:<4} pass-exact={:<4} inconclusive={:<3} fail={:<3} (controls={})",
            s.suite,
            s.geometry.as_deref().unwrap_or("-"),
            s.rows.len(),
            count(Verdict::Pass),
            count(Verdict::PassExact),
            count(Verdict::Inconclusive),
            count(Verdict::Fail),
            s.rows.iter().filter(|r| r.expectation == heatgauge::verifier::Expectation::Violated).count(),
        );
    }
    let unexpected = report.unexpected();
    for r in &unexpected {
        let what = if r.verdict.is_fail() { "FAIL" } else { "control did not fail" };
        eprintln!(
            "{what}: {} [{}] {} {}: lhs={:e} rhs={:e} margin={:e}",
            r.claim, r.geometry, r.function, r.instance, r.lhs, r.rhs, r.margin
        );
    }
    let inconclusive = report.inconclusive_count();
    if inconclusive > 0 {
        eprintln!("warning: {inconclusive} INCONCLUSIVE row(s)");
    }
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn fail(e: Error) -> ExitCode {
    eprintln!("error: {e}");
    match e {
        Error::Config(_) => ExitCode::from(2),
        _ => ExitCode::from(3),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::List => {
            for name in suite_names() {
                println!("{name}");
            }
            return ExitCode::SUCCESS;
        }
        Command::Run { selection, out } => experiments(&selection).and_then(|list| {
            let report = run(&list)?;
            let (json, csv) = report.write(&out)?;
            println!("wrote {} and {}", json.display(), csv.display());
            Ok(summarize(&report))
        }),
        Command::CdCheck { seed } => (|| {
            println!("{:<10} {:>14} {:>28} {:>6}", "function", "worst margin", "witness", "ν");
            for (id, m) in cd_table()? {
                let w = m.witness_point;
                println!(
                    "{id:<10} {:>14.6e} {:>28} {:>6}",
                    m.worst_margin,
                    format!("({}, {}, {})", w[0], w[1], w[2]),
                    m.witness_nu
                );
            }
            let mut cfg = ExperimentConfig::for_suite("cd-check");
            cfg.seed = seed;
            let report = run(&[cfg])?;
            Ok(summarize(&report))
        })(),
        Command::PlotData { selection } => experiments(&selection).and_then(|list| {
            let report = run(&list)?;
            println!("suite,claim,geometry,function,x,lhs,rhs,verdict");
            for s in &report.suites {
                for r in s.rows.iter().filter(|r| r.x.is_some()) {
                    println!(
                        "{},{},{},\"{}\",{},{},{},{}",
                        s.suite,
                        r.claim,
                        r.geometry,
                        r.function.replace('"', "\"\""),
                        r.x.unwrap_or(f64::NAN),
                        r.lhs,
                        r.rhs,
                        r.verdict
                    );
                }
            }
            Ok(ExitCode::SUCCESS)
        }),
    };
    result.unwrap_or_else(|e| fail(root(e)))
}

/// Config errors keep their exit code when wrapped with a claim id.
fn root(e: Error) -> Error {
    match e {
        Error::Claim { source, .. } if matches!(*source, Error::Config(_)) => *source,
        other => other,
    }
}
