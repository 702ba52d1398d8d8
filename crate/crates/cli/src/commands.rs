//! Dispatch from a resolved [`RunConfig`] to the core routines.

use crfic_core::analytic;
use crfic_core::discrete::{self, Coupling, OverlapConfig, ScalingConfig};
use crfic_core::extrema::{bilateral_extrema, brute_force_extrema};
use crfic_core::mc::{self, DistributionConfig, EstimateReport, PathAverageConfig, ReplicaConfig};
use crfic_core::path::sample_bilateral;
use crfic_core::sde::{self, LinearSystemConfig};
use serde::Serialize;
use serde_json::{json, Value};
use std::time::Instant;

use crate::config::{CommandKind, Pairing, RunConfig};
use crate::CliError;

/// Rows of the CSV rendering of a command's result.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&'static str]) -> Self {
        Self { header: header.to_vec(), rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

/// Result of one command before it is written out.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub payload: Value,
    pub table: Table,
    pub elapsed: f64,
}

fn cell<T: ToString>(x: T) -> String {
    x.to_string()
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("results serialize to JSON")
}

fn estimate_row(r: &EstimateReport) -> Vec<String> {
    vec![r.name.clone(), cell(r.estimate), cell(r.stderr), cell(r.n)]
}

const ESTIMATE_HEADER: [&str; 4] = ["name", "estimate", "stderr", "n"];

fn replica_config(cfg: &RunConfig) -> ReplicaConfig {
    let gamma = cfg.gamma.expect("resolved");
    ReplicaConfig {
        dt: cfg.dt.expect("resolved"),
        window_factor: cfg.window_factor.expect("resolved"),
        ..ReplicaConfig::new(gamma, cfg.replicas.expect("resolved"), cfg.seed.expect("resolved"))
    }
}

fn path_average_config(cfg: &RunConfig) -> PathAverageConfig {
    PathAverageConfig {
        dt: cfg.dt.expect("resolved"),
        alpha: cfg.alpha.unwrap_or(0.0),
        ..PathAverageConfig::new(cfg.gamma.expect("resolved"), cfg.ell.expect("resolved"), cfg.seed.expect("resolved"))
    }
}

/// Runs the command named in a resolved configuration on the current rayon pool.
pub fn run_command(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let started = Instant::now();
    let (payload, table) = match cfg.command.expect("resolved") {
        CommandKind::Extrema => extrema(cfg)?,
        CommandKind::Simulate => simulate(cfg)?,
        CommandKind::EstimateD => estimate_d(cfg)?,
        CommandKind::EstimateDhat => estimate_dhat(cfg)?,
        CommandKind::Ergodic => ergodic(cfg)?,
        CommandKind::FreeEnergy => free_energy(cfg)?,
        CommandKind::Analytic => analytic_table(cfg)?,
        CommandKind::Distributions => distributions(cfg)?,
        CommandKind::DiscreteScaling => discrete_scaling(cfg)?,
        CommandKind::Overlap => overlap(cfg)?,
        CommandKind::Report => report(cfg)?,
    };
    Ok(Outcome { payload, table, elapsed: started.elapsed().as_secs_f64() })
}

fn extrema(cfg: &RunConfig) -> Result<(Value, Table), CliError> {
    let (gamma, w) = (cfg.gamma.expect("resolved"), cfg.window.expect("resolved"));
    let path = sample_bilateral(cfg.seed.expect("resolved"), -w, w, cfg.dt.expect("resolved"), 0.0, 1.0)?;
    let b = bilateral_extrema(&path, gamma)?;
    let bf = brute_force_extrema(&path, gamma)?;
    let agrees = b.sequence.confirmed_keys() == bf.confirmed_keys();
    let events = b.sequence.confirmed_events();
    let mut table = Table::new(&["index", "time", "value", "kind"]);
    for e in &events {
        table.push(vec![cell(e.index), cell(e.time), cell(e.value), e.kind.as_str().into()]);
    }
    let payload = json!({
        "origin_label": b.origin_label,
        "case": b.case,
        "forward_first": b.forward_first,
        "backward_first": b.backward_first,
        "events": events,
        "brute_force_agrees": agrees,
    });
    Ok((payload, table))
}

fn simulate(cfg: &RunConfig) -> Result<(Value, Table), CliError> {
    let gamma = cfg.gamma.expect("resolved");
    let ell = cfg.ell.expect("resolved");
    let path = sample_bilateral(
        cfg.seed.expect("resolved"),
        0.0,
        ell,
        cfg.dt.expect("resolved"),
        cfg.alpha.expect("resolved"),
        1.0,
    )?;
    let l = sde::integrate_l(&path, gamma, 0.0, cfg.x0.unwrap_or(f64::INFINITY))?;
    let lin = sde::integrate_linear_system(&path, gamma, 0.0)?;
    let hat = sde::reflect_simplified(&path, gamma, 0.0)?;
    let log_z = sde::log_partition_free(&path, gamma, LinearSystemConfig::default())?;
    let last = l.len() - 1;
    let mut payload = json!({
        "steps": last,
        "l_final": l.values[last],
        "l_check_final": lin.l_check[last],
        "l_hat_final": hat.values[last],
        "log_partition_free": log_z,
        "free_energy_rate": log_z / ell + sde::epsilon(gamma),
    });
    match cfg.x0 {
        None => {
            let gap = l.values.iter().zip(&lin.l_check).skip(1).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            payload["max_l_check_gap"] = json!(gap);
        }
        Some(_) => {
            payload["envelope_violation"] = json!(sde::envelope_violation(&path, &l)?);
        }
    }
    let stride = cfg.stride.expect("resolved");
    let mut table = Table::new(&["t", "B", "l", "l_check", "l_hat"]);
    let v = path.values();
    for k in (0..=last).step_by(stride) {
        table.push(vec![cell(path.time(k)), cell(v[k]), cell(l.values[k]), cell(lin.l_check[k]), cell(hat.values[k])]);
    }
    Ok((payload, table))
}

fn estimate_d(cfg: &RunConfig) -> Result<(Value, Table), CliError> {
    let rc = replica_config(cfg);
    rc.validate(2)?;
    let started = Instant::now();
    let outcomes = mc::replica_outcomes(&rc)?;
    let d = mc::d_report(&rc, &outcomes, started);
    let dm = mc::d_sign_m_report(&rc, &outcomes, started);
    let lhat = mc::lhat_row(&rc, &outcomes);
    let exact = analytic::d_m_exact(rc.gamma)?;
    let mut table = Table::new(&ESTIMATE_HEADER);
    table.push(estimate_row(&d));
    table.push(estimate_row(&dm));
    let payload = json!({
        "d": d,
        "d_sign_m": dm,
        "d_m_exact": exact,
        "d_sign_m_z": (dm.estimate - exact) / dm.stderr,
        "gamma_times_d": rc.gamma * d.estimate,
        "lhat": lhat,
    });
    Ok((payload, table))
}

fn estimate_dhat(cfg: &RunConfig) -> Result<(Value, Table), CliError> {
    let rc = replica_config(cfg);
    let r = mc::estimate_d_hat(&rc)?;
    let exact = analytic::d_hat(rc.gamma)?;
    let mut table = Table::new(&ESTIMATE_HEADER);
    table.push(estimate_row(&r));
    let payload = json!({ "d_hat": r, "exact": exact, "z": (r.estimate - exact) / r.stderr });
    Ok((payload, table))
}

fn ergodic(cfg: &RunConfig) -> Result<(Value, Table), CliError> {
    let r = mc::ergodic_discrepancy(&path_average_config(cfg))?;
    let mut table = Table::new(&ESTIMATE_HEADER);
    table.push(estimate_row(&r));
    Ok((json!({ "ergodic": r }), table))
}

fn free_energy(cfg: &RunConfig) -> Result<(Value, Table), CliError> {
    let pc = path_average_config(cfg);
    let r = mc::estimate_free_energy(&pc)?;
    let exact = analytic::free_energy(pc.gamma, pc.alpha)?;
    let mut table = Table::new(&ESTIMATE_HEADER);
    table.push(estimate_row(&r));
    let payload = json!({
        "free_energy": r,
        "exact": exact,
        "relative_error": (r.estimate - exact) / exact.abs(),
    });
    Ok((payload, table))
}

const ANALYTIC_HEADER: [&str; 11] = [
    "gamma",
    "epsilon",
    "free_energy",
    "wall_density",
    "disorder_energy",
    "overlap_density",
    "p_gamma_0",
    "d_hat",
    "d_m_exact",
    "d_m_expansion",
    "free_energy_asymptote",
];

fn analytic_table(cfg: &RunConfig) -> Result<(Value, Table), CliError> {
    let alpha = cfg.alpha.expect("resolved");
    let mut table = Table::new(&ANALYTIC_HEADER);
    let mut rows = Vec::new();
    for &g in cfg.gamma_grid.as_ref().expect("resolved") {
        let values = [
            g,
            sde::epsilon(g),
            analytic::free_energy(g, alpha)?,
            analytic::wall_density(g)?,
            analytic::disorder_energy(g)?,
            analytic::overlap_density(g)?,
            analytic::p_gamma(g, 0.0)?,
            analytic::d_hat(g)?,
            analytic::d_m_exact(g)?,
            analytic::d_m_expansion(g)?,
            analytic::free_energy_asymptote(g),
        ];
        table.push(values.iter().map(|v| cell(v)).collect());
        let row: serde_json::Map<String, Value> =
            ANALYTIC_HEADER.iter().zip(values).map(|(k, v)| (k.to_string(), json!(v))).collect();
        rows.push(Value::Object(row));
    }
    Ok((json!({ "alpha": alpha, "rows": rows }), table))
}

fn distributions(cfg: &RunConfig) -> Result<(Value, Table), CliError> {
    let dc = DistributionConfig {
        dt: cfg.dt.expect("resolved"),
        window_factor: cfg.window_factor.expect("resolved"),
        ..DistributionConfig::new(cfg.gamma.expect("resolved"), cfg.samples.expect("resolved"), cfg.seed.expect("resolved"))
    };
    let reports = mc::test_distributions(&dc)?;
    let mut table = Table::new(&["name", "statistic", "threshold", "pass", "n", "target"]);
    for r in &reports {
        table.push(vec![r.name.clone(), cell(r.statistic), cell(r.threshold), cell(r.pass), cell(r.n), r.target.clone()]);
    }
    let passed = reports.iter().filter(|r| r.pass).count();
    Ok((json!({ "checks": reports, "passed": passed }), table))
}

fn discrete_scaling(cfg: &RunConfig) -> Result<(Value, Table), CliError> {
    let sc = ScalingConfig {
        continuum_dt: cfg.continuum_dt.expect("resolved"),
        coupling: match cfg.pairing.expect("resolved") {
            Pairing::Common => Coupling::Common,
            Pairing::Independent => Coupling::Independent,
        },
        ..ScalingConfig::new(
            cfg.gamma.expect("resolved"),
            cfg.alpha.expect("resolved"),
            cfg.ell.expect("resolved"),
            cfg.deltas.clone().expect("resolved"),
            cfg.samples.expect("resolved"),
            cfg.seed.expect("resolved"),
        )
    };
    let r = discrete::scaling_limit_check(&sc)?;
    let mut table = Table::new(&["delta", "mean_log_ratio", "var_log_ratio", "continuum_mean", "continuum_var", "gap"]);
    for row in &r.rows {
        table.push(vec![
            cell(row.delta),
            cell(row.mean_log_ratio),
            cell(row.var_log_ratio),
            cell(row.continuum_mean),
            cell(row.continuum_var),
            cell(row.gap),
        ]);
    }
    Ok((to_value(&r), table))
}

fn overlap(cfg: &RunConfig) -> Result<(Value, Table), CliError> {
    let oc = OverlapConfig::new(
        cfg.sites.expect("resolved"),
        cfg.coupling.expect("resolved"),
        cfg.field.expect("resolved"),
        cfg.disorder.expect("resolved"),
        cfg.samples.expect("resolved"),
        cfg.seed.expect("resolved"),
    );
    let r = discrete::overlap_identity_check(&oc)?;
    let mut table = Table::new(&["lhs", "lhs_stderr", "rhs", "rhs_stderr", "z", "pass"]);
    table.push(vec![cell(r.lhs), cell(r.lhs_stderr), cell(r.rhs), cell(r.rhs_stderr), cell(r.z), cell(r.pass)]);
    Ok((to_value(&r), table))
}

fn report(cfg: &RunConfig) -> Result<(Value, Table), CliError> {
    let rows = mc::compare_l_lhat(
        cfg.gamma_grid.as_ref().expect("resolved"),
        cfg.samples.expect("resolved"),
        cfg.seed.expect("resolved"),
        cfg.window_factor.expect("resolved"),
    )?;
    let mut table = Table::new(&["gamma", "n", "median", "p99", "sign_agreement", "sign_agreement_stderr"]);
    for r in &rows {
        table.push(vec![
            cell(r.gamma),
            cell(r.n),
            cell(r.median),
            cell(r.p99),
            cell(r.sign_agreement),
            cell(r.sign_agreement_stderr),
        ]);
    }
    Ok((json!({ "rows": rows }), table))
}
