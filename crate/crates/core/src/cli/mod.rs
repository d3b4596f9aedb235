//! Batch command-line front end.
//!
//! Exit codes: 0 success, 2 usage, 3 configuration or input, 4 runtime.
//! Failures print exactly one line on stderr: `error[<kind>]: <message>`.

pub mod config;
pub mod export;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::engine::{pareto_sweep, run};
use crate::error::Error;
use crate::metrics::objective;

pub use config::{parse_config, parse_config_str, Experiment};
pub use export::ExportBundle;

#[derive(Parser, Debug)]
#[command(name = "mimo-islr", version, about = "Waveform design for joint spatial and range sidelobe suppression")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Optimize one waveform set and export it.
    Run {
        config: PathBuf,
        /// Overrides `output_dir` from the config.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Sweep the weight list, keeping the best trial per weight.
    Pareto {
        config: PathBuf,
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Evaluate the metrics of an existing waveform table.
    Metrics {
        waveform: PathBuf,
        config: PathBuf,
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    Usage = 2,
    Config = 3,
    Runtime = 4,
}

/// A CLI failure with its exit code.
#[derive(Debug)]
pub struct CliError {
    pub kind: ExitKind,
    pub message: String,
}

impl CliError {
    fn runtime(e: Error) -> Self {
        Self { kind: ExitKind::Runtime, message: e.to_string() }
    }

    fn config(e: Error) -> Self {
        Self { kind: ExitKind::Config, message: e.to_string() }
    }

    /// The single stderr line.
    pub fn line(&self) -> String {
        let kind = match self.kind {
            ExitKind::Usage => "usage",
            ExitKind::Config => "config",
            ExitKind::Runtime => "runtime",
        };
        format!("error[{kind}]: {}", self.message.replace(['\n', '\r'], " "))
    }
}

fn load(path: &Path, output_dir: Option<PathBuf>) -> Result<Experiment, CliError> {
    let mut exp = parse_config(path).map_err(CliError::config)?;
    if let Some(dir) = output_dir {
        exp.output_dir = dir;
    }
    Ok(exp)
}

fn cmd_run(exp: &Experiment) -> Result<String, CliError> {
    if exp.sweep {
        return Err(CliError::config(Error::Config(
            "eta is a list; use the pareto subcommand for sweeps".into(),
        )));
    }
    let record = run(&exp.run, None).map_err(CliError::runtime)?;
    ExportBundle::from_run(&record, &exp.run.scenario, exp.run.eta, &exp.echo)
        .write(&exp.output_dir)
        .map_err(CliError::runtime)?;
    let r = &record.final_report;
    Ok(format!(
        "f_o={} spatial_islr_db={:.4} range_islr_db={:.4} sweeps={} stop={}",
        r.objective,
        r.spatial_islr_db,
        r.range_islr_db,
        record.sweeps_used,
        record.stop_reason.as_str()
    ))
}

fn cmd_pareto(exp: &Experiment) -> Result<String, CliError> {
    let points = pareto_sweep(&exp.run, &exp.etas, exp.trials).map_err(CliError::runtime)?;
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (i, p) in points.iter().enumerate() {
        rows.push((p.eta, p.spatial_islr_db, p.range_islr_db));
        match &p.record {
            Ok(rec) => ExportBundle::from_run(rec, &exp.run.scenario, p.eta, &exp.echo)
                .write(&exp.output_dir.join(format!("eta_{i:02}")))
                .map_err(CliError::runtime)?,
            Err(e) => failures.push(format!("eta={}: {e}", p.eta)),
        }
    }
    export::write_files(&exp.output_dir, &[(export::PARETO_FILE, &export::pareto_table(&rows))])
        .map_err(CliError::runtime)?;
    if !failures.is_empty() {
        return Err(CliError { kind: ExitKind::Runtime, message: failures.join("; ") });
    }
    Ok(format!("{} points written to {}", points.len(), exp.output_dir.display()))
}

fn cmd_metrics(waveform: &Path, exp: &Experiment) -> Result<String, CliError> {
    let s = export::read_waveform(waveform, exp.run.mt, exp.run.n).map_err(CliError::config)?;
    let report = objective(&s, &exp.run.scenario, exp.run.eta).map_err(CliError::runtime)?;
    let json = export::metrics_json(&report, exp.run.eta, None, &exp.echo);
    let text = serde_json::to_string_pretty(&json).map_err(|e| CliError::runtime(Error::Config(e.to_string())))?;
    export::write_files(&exp.output_dir, &[(export::METRICS_FILE, &text)]).map_err(CliError::runtime)?;
    Ok(format!(
        "f_o={} spatial_islr_db={:.4} range_islr_db={:.4}",
        report.objective, report.spatial_islr_db, report.range_islr_db
    ))
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn execute<I, T>(args: I) -> Result<String, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = Args::try_parse_from(args).map_err(|e| CliError {
        kind: ExitKind::Usage,
        message: e.to_string().lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ").into(),
    })?;
    match args.command {
        Command::Run { config, output_dir } => cmd_run(&load(&config, output_dir)?),
        Command::Pareto { config, output_dir } => cmd_pareto(&load(&config, output_dir)?),
        Command::Metrics { waveform, config, output_dir } => cmd_metrics(&waveform, &load(&config, output_dir)?),
    }
}

/// Entry point for the binary; returns the process exit code.
pub fn main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<T> = args.into_iter().collect();
    // Help and version requests are not errors.
    if let Err(e) = Args::try_parse_from(args.clone()) {
        if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) {
            print!("{e}");
            return 0;
        }
    }
    match execute(args) {
        Ok(summary) => {
            println!("{summary}");
            0
        }
        Err(e) => {
            eprintln!("{}", e.line());
            e.kind as i32
        }
    }
}
