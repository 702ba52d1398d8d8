//! Run configuration: one flat set of options shared by flags and JSON config files.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use crfic_core::mc::default_dt;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Extrema,
    Simulate,
    EstimateD,
    EstimateDhat,
    Ergodic,
    FreeEnergy,
    Analytic,
    Distributions,
    DiscreteScaling,
    Overlap,
    Report,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::Extrema => "extrema",
            CommandKind::Simulate => "simulate",
            CommandKind::EstimateD => "estimate-d",
            CommandKind::EstimateDhat => "estimate-dhat",
            CommandKind::Ergodic => "ergodic",
            CommandKind::FreeEnergy => "free-energy",
            CommandKind::Analytic => "analytic",
            CommandKind::Distributions => "distributions",
            CommandKind::DiscreteScaling => "discrete-scaling",
            CommandKind::Overlap => "overlap",
            CommandKind::Report => "report",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Json,
    Csv,
}

/// How lattice disorder relates to the continuum path in `discrete-scaling`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Pairing {
    Common,
    Independent,
}

/// Every option of every command. Unset fields take per-command defaults in [`resolve`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[arg(skip)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<CommandKind>,
    /// Disorder strength parameter Γ.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    /// Drift of the disorder.
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// Length of the time window.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ell: Option<f64>,
    /// Grid step.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replicas: Option<usize>,
    /// Window extension beyond the confirming stop time, as a multiple of it.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window_factor: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Output file; the report is JSON, tables are CSV next to it.
    #[arg(long = "out")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_path: Option<PathBuf>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    /// Comma-separated Γ values.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_grid: Option<Vec<f64>>,
    /// Half-width of the extrema window.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<f64>,
    /// Finite initial value of `l`; unset starts from +∞.
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x0: Option<f64>,
    /// Keep every `stride`-th grid point in trajectory tables.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stride: Option<usize>,
    /// Number of samples for the statistical checks.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    /// Comma-separated lattice spacings.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deltas: Option<Vec<f64>>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub continuum_dt: Option<f64>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pairing: Option<Pairing>,
    /// Number of lattice sites.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sites: Option<usize>,
    /// Lattice coupling J.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coupling: Option<f64>,
    /// Homogeneous lattice field h.
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<f64>,
    /// Lattice disorder amplitude δ.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub disorder: Option<f64>,
}

macro_rules! overlay {
    ($base:expr, $top:expr, $($f:ident),+) => {
        RunConfig { $($f: $top.$f.or($base.$f)),+ }
    };
}

impl RunConfig {
    /// Fields set in `top` win over those in `self`.
    pub fn overlay(self, top: RunConfig) -> RunConfig {
        overlay!(
            self, top, command, gamma, alpha, ell, dt, replicas, window_factor, seed, out_path, format, gamma_grid,
            window, x0, stride, samples, deltas, continuum_dt, pairing, sites, coupling, field, disorder
        )
    }

    pub fn load(path: &Path) -> Result<RunConfig, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("malformed config {}: {e}", path.display())))
    }

    /// The options that determine the payload; output location and format are dropped.
    pub fn scientific(&self) -> RunConfig {
        RunConfig { out_path: None, format: None, ..self.clone() }
    }
}

fn positive(name: &str, x: Option<f64>) -> Result<(), CliError> {
    match x {
        Some(v) if !(v > 0.0 && v.is_finite()) => {
            Err(CliError::Validation(format!("{name} must be positive and finite, got {v}")))
        }
        _ => Ok(()),
    }
}

fn finite(name: &str, x: Option<f64>) -> Result<(), CliError> {
    match x {
        Some(v) if !v.is_finite() => Err(CliError::Validation(format!("{name} must be finite, got {v}"))),
        _ => Ok(()),
    }
}

fn at_least_one(name: &str, x: Option<usize>) -> Result<(), CliError> {
    match x {
        Some(0) => Err(CliError::Validation(format!("{name} must be at least 1"))),
        _ => Ok(()),
    }
}

/// Fills per-command defaults and keeps only the options the command reads.
pub fn resolve(cfg: RunConfig) -> Result<RunConfig, CliError> {
    let command = cfg.command.ok_or_else(|| CliError::Validation("no command given".into()))?;
    positive("gamma", cfg.gamma)?;
    positive("ell", cfg.ell)?;
    positive("dt", cfg.dt)?;
    positive("window", cfg.window)?;
    positive("continuum_dt", cfg.continuum_dt)?;
    finite("alpha", cfg.alpha)?;
    finite("x0", cfg.x0)?;
    finite("field", cfg.field)?;
    if let Some(w) = cfg.window_factor {
        if !(w >= 0.0 && w.is_finite()) {
            return Err(CliError::Validation(format!("window_factor must be non-negative, got {w}")));
        }
    }
    for (name, v) in [("coupling", cfg.coupling), ("disorder", cfg.disorder)] {
        if let Some(v) = v {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(CliError::Validation(format!("{name} must be non-negative, got {v}")));
            }
        }
    }
    at_least_one("replicas", cfg.replicas)?;
    at_least_one("samples", cfg.samples)?;
    at_least_one("stride", cfg.stride)?;
    at_least_one("sites", cfg.sites)?;
    for (name, grid) in [("gamma_grid", &cfg.gamma_grid), ("deltas", &cfg.deltas)] {
        if let Some(g) = grid {
            if g.is_empty() || g.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                return Err(CliError::Validation(format!("{name} must be a non-empty list of positive numbers")));
            }
        }
    }

    let seed = Some(cfg.seed.unwrap_or(42));
    let keep = RunConfig { command: Some(command), out_path: cfg.out_path.clone(), format: cfg.format, ..Default::default() };
    let gamma_or = |g: f64| cfg.gamma.unwrap_or(g);
    let dt_for = |g: f64| Some(cfg.dt.unwrap_or_else(|| default_dt(g)));
    let out = match command {
        CommandKind::Extrema => {
            let gamma = gamma_or(1.0);
            RunConfig {
                gamma: Some(gamma),
                window: Some(cfg.window.unwrap_or(50.0)),
                dt: Some(cfg.dt.unwrap_or(1e-3)),
                seed,
                ..keep
            }
        }
        CommandKind::Simulate => {
            let gamma = gamma_or(2.0);
            RunConfig {
                gamma: Some(gamma),
                alpha: Some(cfg.alpha.unwrap_or(0.0)),
                ell: Some(cfg.ell.unwrap_or(50.0)),
                dt: dt_for(gamma),
                x0: cfg.x0,
                stride: Some(cfg.stride.unwrap_or(10)),
                seed,
                ..keep
            }
        }
        CommandKind::EstimateD | CommandKind::EstimateDhat => {
            let (gamma, replicas) = if command == CommandKind::EstimateD { (5.0, 10_000) } else { (10.0, 100_000) };
            let gamma = gamma_or(gamma);
            RunConfig {
                gamma: Some(gamma),
                replicas: Some(cfg.replicas.unwrap_or(replicas)),
                dt: dt_for(gamma),
                window_factor: Some(cfg.window_factor.unwrap_or(2.0)),
                seed,
                ..keep
            }
        }
        CommandKind::Ergodic => {
            let gamma = gamma_or(5.0);
            RunConfig {
                gamma: Some(gamma),
                ell: Some(cfg.ell.unwrap_or(1e3 * gamma * gamma)),
                dt: dt_for(gamma),
                seed,
                ..keep
            }
        }
        CommandKind::FreeEnergy => {
            let gamma = gamma_or(2.0);
            RunConfig {
                gamma: Some(gamma),
                alpha: Some(cfg.alpha.unwrap_or(0.0)),
                ell: Some(cfg.ell.unwrap_or(1e4)),
                dt: dt_for(gamma),
                seed,
                ..keep
            }
        }
        CommandKind::Analytic => RunConfig {
            gamma_grid: Some(cfg.gamma_grid.clone().unwrap_or_else(|| vec![1.0, 2.0, 5.0, 10.0, 20.0])),
            alpha: Some(cfg.alpha.unwrap_or(0.0)),
            ..keep
        },
        CommandKind::Distributions => {
            let gamma = gamma_or(2.0);
            RunConfig {
                gamma: Some(gamma),
                samples: Some(cfg.samples.unwrap_or(10_000)),
                dt: Some(cfg.dt.unwrap_or(1e-5 * gamma * gamma)),
                window_factor: Some(cfg.window_factor.unwrap_or(2.0)),
                seed,
                ..keep
            }
        }
        CommandKind::DiscreteScaling => {
            let deltas = cfg.deltas.clone().unwrap_or_else(|| vec![1e-2, 1e-3, 1e-4]);
            let finest = deltas.iter().copied().fold(f64::INFINITY, f64::min);
            RunConfig {
                gamma: Some(gamma_or(1.0)),
                alpha: Some(cfg.alpha.unwrap_or(0.0)),
                ell: Some(cfg.ell.unwrap_or(1.0)),
                continuum_dt: Some(cfg.continuum_dt.unwrap_or(finest / 10.0)),
                deltas: Some(deltas),
                samples: Some(cfg.samples.unwrap_or(1000)),
                pairing: Some(cfg.pairing.unwrap_or(Pairing::Common)),
                seed,
                ..keep
            }
        }
        CommandKind::Overlap => RunConfig {
            sites: Some(cfg.sites.unwrap_or(50)),
            coupling: Some(cfg.coupling.unwrap_or(2.0)),
            field: Some(cfg.field.unwrap_or(0.0)),
            disorder: Some(cfg.disorder.unwrap_or(0.3)),
            samples: Some(cfg.samples.unwrap_or(10_000)),
            seed,
            ..keep
        },
        CommandKind::Report => RunConfig {
            gamma_grid: Some(cfg.gamma_grid.clone().unwrap_or_else(|| vec![5.0, 10.0, 20.0])),
            samples: Some(cfg.samples.unwrap_or(2000)),
            window_factor: Some(cfg.window_factor.unwrap_or(2.0)),
            seed,
            ..keep
        },
    };
    Ok(out)
}
