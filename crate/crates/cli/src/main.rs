use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use mdlab_core::lab::{
    catalog, find_scenario, md_at_point, run, show, ExperimentReport, LabConfig, Suite,
    SuiteSettings,
};

/// Environment variable that sets the worker-thread count.
const WORKERS_ENV: &str = "MDLAB_WORKERS";

#[derive(Debug, Parser)]
#[command(name = "mdlab", version, about = "Numerical metric differentials of maps into metric spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
struct Common {
    /// TOML experiment configuration
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output root; reports land in <DIR>/<scenario>/<suite>/
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Number of gauge functionals
    #[arg(long, value_name = "K")]
    k: Option<usize>,
    /// Finite-difference convergence tolerance
    #[arg(long, value_name = "T")]
    tol: Option<f64>,
    /// Scenario name or label (repeatable); defaults to the config or the whole catalog
    #[arg(long = "scenario", short = 's', value_name = "NAME")]
    scenarios: Vec<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the scenario catalog
    ListScenarios {
        #[arg(long)]
        json: bool,
    },
    /// Run the configured suites
    Run {
        #[command(flatten)]
        common: Common,
        /// Suite name (repeatable)
        #[arg(long = "suite", value_name = "SUITE")]
        suites: Vec<String>,
    },
    /// Fit the metric differential at one point
    MdAtPoint {
        #[command(flatten)]
        common: Common,
        /// Comma-separated coordinates
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        point: Vec<f64>,
    },
    /// Audit gauge quality against sampled distances
    GaugeAudit {
        #[command(flatten)]
        common: Common,
    },
    /// Maximal-function restriction and truncation report
    SobolevReport {
        #[command(flatten)]
        common: Common,
    },
    /// Difference-quotient fields in the W^{1,p} norm
    W1pCheck {
        #[command(flatten)]
        common: Common,
    },
    /// Every suite on every selected scenario
    VerifyAll {
        #[command(flatten)]
        common: Common,
    },
}

fn configure(common: &Common) -> anyhow::Result<LabConfig> {
    let mut config = match &common.config {
        Some(path) => LabConfig::load(path)?,
        None => LabConfig::default(),
    };
    if let Some(dir) = &common.out {
        config.output.dir = dir.clone();
    }
    if let Some(seed) = common.seed {
        config.gauge.seed = seed;
    }
    if let Some(k) = common.k {
        config.gauge.k = k;
    }
    if let Some(tol) = common.tol {
        config.schedules.tol = Some(tol);
    }
    if !common.scenarios.is_empty() {
        config.scenario.names = common.scenarios.clone();
    }
    config.validate()?;
    Ok(config)
}

fn configure_workers() -> anyhow::Result<()> {
    let Ok(value) = std::env::var(WORKERS_ENV) else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .with_context(|| format!("{WORKERS_ENV} must be a positive integer, got '{value}'"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .context("worker pool already initialised")?;
    Ok(())
}

fn print_report(r: &ExperimentReport, dir: &Path) {
    let status = if r.passed { "PASS" } else { "FAIL" };
    println!(
        "{status} {}/{} ({} checks) -> {}",
        r.scenario,
        r.suite,
        r.assertions.len(),
        dir.display()
    );
    for a in r.failures() {
        let op = match a.comparison {
            mdlab_core::lab::Comparison::AtMost => "<=",
            mdlab_core::lab::Comparison::AtLeast => ">=",
        };
        println!("    {}: {} !{op} {}", a.name, show(a.measured), show(a.tolerance));
    }
}

fn run_suites(mut config: LabConfig, suites: Vec<String>) -> anyhow::Result<bool> {
    config.suites.names = suites;
    let outcome = run(&config)?;
    for (r, dir) in outcome.reports.iter().zip(&outcome.directories) {
        print_report(r, dir);
    }
    let failed = outcome.reports.iter().filter(|r| !r.passed).count();
    println!("{} reports, {failed} failed", outcome.reports.len());
    Ok(outcome.passed())
}

fn list_scenarios(json: bool) -> anyhow::Result<bool> {
    let infos: Vec<_> = catalog().iter().map(|s| s.info()).collect();
    if json {
        println!("{}", serde_json::to_string_pretty(&infos)?);
    } else {
        for s in catalog() {
            println!("{:<4} {:<22} {}", s.label, s.name, s.summary);
        }
    }
    Ok(true)
}

fn single_point(common: &Common, point: &[f64]) -> anyhow::Result<bool> {
    let config = configure(common)?;
    let [name] = config.scenario.names.as_slice() else {
        bail!("md-at-point needs exactly one --scenario");
    };
    let scenario = find_scenario(name)?;
    let report = md_at_point(&scenario, point, &SuiteSettings::from_config(&config))?;
    let dir = report.write(&config.output.dir)?;
    print_report(&report, &dir);
    Ok(report.passed)
}

fn dispatch(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::ListScenarios { json } => list_scenarios(json),
        Command::Run { common, suites } => {
            let config = configure(&common)?;
            let suites = if suites.is_empty() {
                config.suites.names.clone()
            } else {
                suites
            };
            run_suites(config, suites)
        }
        Command::MdAtPoint { common, point } => single_point(&common, &point),
        Command::GaugeAudit { common } => {
            run_suites(configure(&common)?, vec![Suite::GaugeAudit.name().into()])
        }
        Command::SobolevReport { common } => {
            run_suites(configure(&common)?, vec![Suite::SobolevReport.name().into()])
        }
        Command::W1pCheck { common } => {
            run_suites(configure(&common)?, vec![Suite::W1pCheck.name().into()])
        }
        Command::VerifyAll { common } => run_suites(configure(&common)?, Vec::new()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_workers() {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
