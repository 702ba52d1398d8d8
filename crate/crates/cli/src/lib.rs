//! Command-line front end for the `crfic-core` estimators.
//!
//! Options come from built-in defaults, then an optional JSON config file, then flags.
//! Every run produces a JSON report; tabular results are also written as CSV.

pub mod commands;
pub mod config;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::Parser;
use crfic_core::mc::config_digest;
use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

pub use commands::{Outcome, Table};
pub use config::{resolve, CommandKind, Format, Pairing, RunConfig};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numerical(_) => 2,
            CliError::Validation(_) | CliError::Io(_) => 1,
        }
    }
}

impl From<crfic_core::Error> for CliError {
    fn from(e: crfic_core::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "crfic", version, about = "Continuum random field Ising chain toolkit")]
pub struct Cli {
    /// Command to run; may instead be given as `command` in the config file.
    #[arg(value_enum)]
    pub command: Option<CommandKind>,
    /// JSON config file; flags override its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    pub workers: Option<usize>,
    #[command(flatten)]
    pub options: RunConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Runtime {
    pub workers: usize,
    pub elapsed: f64,
}

/// The JSON document written for every run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub version: &'static str,
    pub command: &'static str,
    pub seed: Option<u64>,
    pub config: RunConfig,
    /// SHA-256 of the configuration without output location and format.
    pub config_digest: String,
    /// Command results; wall-clock fields are excluded so equal configs give equal payloads.
    pub payload: Value,
    pub runtime: Runtime,
}

/// Removes `elapsed` entries at every depth.
fn strip_elapsed(v: &mut Value) {
    match v {
        Value::Object(map) => {
            map.remove("elapsed");
            map.values_mut().for_each(strip_elapsed);
        }
        Value::Array(items) => items.iter_mut().for_each(strip_elapsed),
        _ => {}
    }
}

/// Merges the config file under the flags and fills defaults.
pub fn effective_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let file = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let flags = RunConfig { command: cli.command, ..cli.options.clone() };
    resolve(file.overlay(flags))
}

/// Runs a resolved configuration on a pool of `workers` threads.
pub fn execute(cfg: &RunConfig, workers: usize) -> Result<(Report, Table), CliError> {
    if workers == 0 {
        return Err(CliError::Validation("workers must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Io(format!("cannot start worker pool: {e}")))?;
    let outcome = pool.install(|| commands::run_command(cfg))?;
    let mut payload = outcome.payload;
    strip_elapsed(&mut payload);
    let report = Report {
        version: VERSION,
        command: cfg.command.expect("resolved").name(),
        seed: cfg.seed,
        config: cfg.clone(),
        config_digest: config_digest(&cfg.scientific()),
        payload,
        runtime: Runtime { workers, elapsed: outcome.elapsed },
    };
    Ok((report, outcome.table))
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

pub fn report_json(report: &Report) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("reports serialize to JSON");
    s.push('\n');
    s
}

pub fn table_csv(report: &Report, table: &Table) -> Result<String, CliError> {
    let seed = report.seed.map_or_else(|| "none".to_string(), |s| s.to_string());
    let mut out = format!(
        "# crfic {} command={} seed={} config_digest={}\n",
        report.version, report.command, seed, report.config_digest
    );
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| CliError::Io(format!("cannot format CSV: {e}"));
    w.write_record(&table.header).map_err(fail)?;
    for row in &table.rows {
        w.write_record(row).map_err(fail)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(format!("cannot format CSV: {e}")))?;
    out.push_str(&String::from_utf8(bytes).expect("CSV of UTF-8 fields is UTF-8"));
    Ok(out)
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

/// Output format: explicit, else from the `--out` extension, else JSON.
fn output_format(cfg: &RunConfig) -> Format {
    cfg.format.unwrap_or_else(|| match cfg.out_path.as_ref().and_then(|p| p.extension()) {
        Some(ext) if ext.eq_ignore_ascii_case("csv") => Format::Csv,
        _ => Format::Json,
    })
}

/// Writes the primary output to `--out` (or stdout) and the other rendering next to it.
/// Returns the files written.
pub fn write_outputs(cfg: &RunConfig, report: &Report, table: &Table) -> Result<Vec<PathBuf>, CliError> {
    let json = report_json(report);
    let csv = table_csv(report, table)?;
    let format = output_format(cfg);
    let primary = match format {
        Format::Json => &json,
        Format::Csv => &csv,
    };
    let Some(out) = &cfg.out_path else {
        io::stdout()
            .write_all(primary.as_bytes())
            .map_err(|e| CliError::Io(format!("cannot write to stdout: {e}")))?;
        return Ok(Vec::new());
    };
    let (side_ext, side) = match format {
        Format::Json => ("csv", &csv),
        Format::Csv => ("json", &json),
    };
    let sidecar = out.with_extension(side_ext);
    if &sidecar == out {
        return Err(CliError::Validation(format!(
            "output {} would be overwritten by its {side_ext} sidecar",
            out.display()
        )));
    }
    write_file(out, primary)?;
    write_file(&sidecar, side)?;
    Ok(vec![out.clone(), sidecar])
}

/// Parses, runs and writes; the return value is the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = effective_config(&cli).and_then(|cfg| {
        let workers = cli.workers.unwrap_or_else(default_workers);
        let (report, table) = execute(&cfg, workers)?;
        write_outputs(&cfg, &report, &table)
    });
    match result {
        Ok(_) => 0,
        Err(e) => {
            eprintln!("crfic: {e}");
            e.exit_code()
        }
    }
}
