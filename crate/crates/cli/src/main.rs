//! Command-line front end: one subcommand per pipeline stage plus `report`.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use recovery_lab::error::Error;
use recovery_lab::experiments::{default_fixture_dir, write_report};
use recovery_lab::io::{run_experiment, write_synthetic_flows, AnalysisToggles, ExperimentConfig};

#[derive(Parser)]
#[command(
    name = "recovery-lab",
    version,
    about = "Fund-flow price model and time-scale analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to the config's `output`, else `out/<name>`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct ReportArgs {
    /// Directory holding scenario configs and fixture data.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "out/report")]
    out: PathBuf,
    /// Overrides the base seed of the synthetic sweeps.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate prices and write the path, overlay and fit.
    Simulate(RunArgs),
    /// Generate the synthetic fund-flow series.
    Synth(RunArgs),
    /// Decompose the price series into IMFs.
    Decompose(RunArgs),
    /// IMF time-scales.
    Timescale(RunArgs),
    /// IMF significance against white noise.
    Sst(RunArgs),
    /// Correlations of the simulated path and of each IMF with the data.
    Correlate(RunArgs),
    /// Run every canned scenario and write the pass/fail table.
    Report(ReportArgs),
}

fn toggles(emd: bool, sst: bool, timescale: bool, correlation: bool) -> AnalysisToggles {
    AnalysisToggles {
        emd,
        sst,
        timescale,
        correlation,
    }
}

fn staged(stage: &'static str) -> impl Fn(Error) -> Error {
    move |e| match e {
        e @ Error::Stage { .. } => e,
        e => Error::Stage {
            stage,
            source: Box::new(e),
        },
    }
}

fn load(args: &RunArgs) -> Result<(ExperimentConfig, PathBuf)> {
    let mut config = ExperimentConfig::load(&args.config).map_err(staged("config"))?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let out = recovery_lab::io::pipeline::output_dir(&config, args.out.as_deref());
    Ok((config, out))
}

fn run(args: &RunArgs, analysis: AnalysisToggles) -> Result<()> {
    let (mut config, out) = load(args)?;
    config.analysis = analysis;
    let summary = run_experiment(&config, &out)?;
    println!(
        "{}: {} files in {}",
        summary.name,
        summary.outputs.len(),
        out.display()
    );
    if let Some(r) = &summary.recovery {
        println!("recovery shape: {}", r.shape);
    }
    if let Some(fit) = &summary.fit {
        println!("fit: nu = {:.4}, p = {}", fit.nu, fit.p);
    }
    Ok(())
}

fn synth(args: &RunArgs) -> Result<()> {
    let (config, out) = load(args)?;
    let files = write_synthetic_flows(&config, &out)?;
    println!(
        "{}: {} files in {}",
        config.name,
        files.len(),
        out.display()
    );
    Ok(())
}

fn report(args: &ReportArgs) -> Result<()> {
    let dir = args.config.clone().unwrap_or_else(default_fixture_dir);
    let reports = write_report(&args.out, args.seed, Path::new(&dir)).map_err(staged("report"))?;
    for r in &reports {
        for c in &r.checks {
            println!("{:<13} {:<4} {}", r.id.as_str(), c.status(), c.name);
        }
    }
    let failed = reports.iter().filter(|r| !r.passed()).count();
    println!(
        "{} of {} scenarios passed; table in {}",
        reports.len() - failed,
        reports.len(),
        args.out.join("report.csv").display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(a) => run(a, toggles(false, false, false, true)),
        Command::Synth(a) => synth(a),
        Command::Decompose(a) => run(a, toggles(true, false, false, false)),
        Command::Timescale(a) => run(a, toggles(true, false, true, false)),
        Command::Sst(a) => run(a, toggles(true, true, false, false)),
        Command::Correlate(a) => run(a, toggles(true, true, true, true)),
        Command::Report(a) => report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
