//! Monte Carlo estimators and the statistical checks built on them.
//!
//! Every estimator is a deterministic function of its configuration: replica `i` reads its
//! own RNG streams, replicas run in parallel, and results are reduced in index order with
//! pairwise summation.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analytic::{AnalyticConfig, StationaryCdf};
use crate::error::{invalid, Error, Result};
use crate::extrema::{bilateral_extrema, fisher_trajectory, forward_neveu_pitman, ForwardScanner, MatchCase, Record};
use crate::path::{self, grid_index, SampledPath};
use crate::rng::{self, stream_id, tag, GaussianWalk, Side};
use crate::sde::{closed_form_from_records, epsilon, evolve_l, evolve_r, StrangStepper};
use crate::stats::{batch_means, mean_stderr, pairwise_sum, quantile_sorted, sorted};

/// Default grid step: `Γ²·10⁻³`, capped at `10⁻²`.
pub fn default_dt(gamma: f64) -> f64 {
    (1e-3 * gamma * gamma).min(1e-2)
}

/// Hex SHA-256 of the canonical JSON encoding of `config`.
pub fn config_digest<T: Serialize>(config: &T) -> String {
    let json = serde_json::to_vec(config).expect("configs serialize");
    hex::encode(Sha256::digest(&json))
}

/// Point estimate with its standard error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub name: String,
    pub estimate: f64,
    pub stderr: f64,
    pub n: usize,
    pub ci_level: f64,
    pub seed: u64,
    pub config_digest: String,
    /// Wall-clock seconds; not part of the reproducible payload.
    pub elapsed: f64,
    /// Estimator-specific counters.
    pub diagnostics: BTreeMap<String, f64>,
}

impl EstimateReport {
    /// Half-width of the normal confidence interval at `ci_level`.
    pub fn half_width(&self) -> f64 {
        normal_quantile(0.5 + 0.5 * self.ci_level) * self.stderr
    }
}

/// Goodness-of-fit outcome. For the moment checks the statistic is `|z|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KsReport {
    pub name: String,
    pub statistic: f64,
    pub n: usize,
    pub threshold: f64,
    pub pass: bool,
    pub target: String,
}

impl KsReport {
    fn new(name: &str, statistic: f64, n: usize, threshold: f64, target: String) -> Self {
        Self { name: name.into(), statistic, n, threshold, pass: statistic < threshold, target }
    }
}

/// Abramowitz–Stegun starting guess refined by Newton steps.
pub(crate) fn normal_quantile(p: f64) -> f64 {
    if p == 0.5 {
        return 0.0;
    }
    if p < 0.5 {
        return -normal_quantile(1.0 - p);
    }
    let t = (-2.0 * (1.0 - p).ln()).sqrt();
    let mut x = t - (2.515_517 + 0.802_853 * t + 0.010_328 * t * t)
        / (1.0 + 1.432_788 * t + 0.189_269 * t * t + 0.001_308 * t * t * t);
    for _ in 0..3 {
        let cdf = 0.5 * erfc(-x / std::f64::consts::SQRT_2);
        let pdf = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        x -= (cdf - p) / pdf;
    }
    x
}

fn erfc(x: f64) -> f64 {
    // Numerical Recipes erfcc, relative error below 1.2e-7
    let z = x.abs();
    let t = 1.0 / (1.0 + 0.5 * z);
    let r = t * (-z * z - 1.265_512_23
        + t * (1.000_023_68
            + t * (0.374_091_96
                + t * (0.096_784_18
                    + t * (-0.186_288_06
                        + t * (0.278_868_07
                            + t * (-1.135_203_98 + t * (1.488_515_87 + t * (-0.822_152_23 + t * 0.170_872_77)))))))))
        .exp();
    if x >= 0.0 {
        r
    } else {
        2.0 - r
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("gamma must be positive and finite, got {gamma}")))
    }
}

fn check_dt(dt: f64) -> Result<()> {
    if dt > 0.0 && dt.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("dt must be positive and finite, got {dt}")))
    }
}

/// Settings shared by the replica estimators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicaConfig {
    pub gamma: f64,
    pub replicas: usize,
    pub dt: f64,
    /// After the one-sided scan confirms its first extremum at the stop time `T₂`, the side
    /// is extended to `(1 + window_factor)·T₂`.
    pub window_factor: f64,
    /// Largest window per side, in units of `Γ²`, before giving up.
    pub max_window: f64,
    pub seed: u64,
    pub ci_level: f64,
}

impl ReplicaConfig {
    pub fn new(gamma: f64, replicas: usize, seed: u64) -> Self {
        Self { gamma, replicas, dt: default_dt(gamma), window_factor: 2.0, max_window: 200.0, seed, ci_level: 0.95 }
    }

    pub fn validate(&self, min_replicas: usize) -> Result<()> {
        check_gamma(self.gamma)?;
        check_dt(self.dt)?;
        if self.replicas < min_replicas {
            return Err(invalid(format!("need at least {min_replicas} replicas, got {}", self.replicas)));
        }
        if !(self.window_factor >= 0.0 && self.window_factor.is_finite()) {
            return Err(invalid("window_factor must be finite and non-negative"));
        }
        if !(self.max_window > 0.0) {
            return Err(invalid("max_window must be positive"));
        }
        if !(self.ci_level > 0.0 && self.ci_level < 1.0) {
            return Err(invalid("ci_level must lie in (0, 1)"));
        }
        Ok(())
    }

    fn max_steps(&self) -> usize {
        (self.max_window * self.gamma * self.gamma / self.dt).ceil() as usize
    }
}

/// One side of a bilateral path grown from the origin until its first extremum is confirmed
/// by the second stop time, then extended by the window factor. `values[k]` is `B` at `±k·dt`.
struct Side1 {
    values: Vec<f64>,
    first: Record,
}

fn grow_side(seed: u64, id: u64, cfg: &ReplicaConfig, extend: bool) -> Result<Side1> {
    let mut walk = GaussianWalk::new(rng::stream(seed, id), cfg.dt);
    let mut scanner = ForwardScanner::new(cfg.gamma);
    let max = cfg.max_steps();
    let mut values = vec![0.0];
    scanner.push(0, 0.0);
    let first = loop {
        if values.len() > max {
            return Err(Error::WindowExhausted(format!(
                "no stop time within {} time units of the origin",
                cfg.max_window * cfg.gamma * cfg.gamma
            )));
        }
        let v = walk.step();
        let k = values.len() as u64;
        values.push(v);
        if let Some(rec) = scanner.push(k, v) {
            break rec;
        }
    };
    if extend {
        let confirm = loop {
            if values.len() > max {
                return Err(Error::WindowExhausted(format!(
                    "first extremum unconfirmed within {} time units of the origin",
                    cfg.max_window * cfg.gamma * cfg.gamma
                )));
            }
            let v = walk.step();
            let k = values.len() as u64;
            values.push(v);
            if let Some(rec) = scanner.push(k, v) {
                break rec;
            }
        };
        let target = ((1.0 + cfg.window_factor) * confirm.stop_index as f64).ceil() as usize;
        values.reserve(target + 1 - values.len().min(target + 1));
        while values.len() <= target {
            values.push(walk.step());
        }
    }
    Ok(Side1 { values, first })
}

/// First stop record of a fresh walk, without storing it.
fn stream_first_record(seed: u64, id: u64, cfg: &ReplicaConfig) -> Result<Record> {
    let mut walk = GaussianWalk::new(rng::stream(seed, id), cfg.dt);
    let mut scanner = ForwardScanner::new(cfg.gamma);
    scanner.push(0, 0.0);
    for k in 1..=cfg.max_steps() as u64 {
        if let Some(rec) = scanner.push(k, walk.step()) {
            return Ok(rec);
        }
    }
    Err(Error::WindowExhausted("no stop time within the maximal window".into()))
}

/// Everything the replica estimators read from one bilateral path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplicaOutcome {
    pub l0: f64,
    pub r0: f64,
    pub m0: f64,
    /// Fisher label of the origin.
    pub label: i8,
    pub case: MatchCase,
    pub l_hat: f64,
    pub r_hat: f64,
    pub m_hat: f64,
    pub sign_hat: i8,
    /// Window `[−left, right]` in time units.
    pub left: f64,
    pub right: f64,
}

fn replica_ids(index: u64) -> (u64, u64) {
    (stream_id(tag::REPLICA, index, Side::Right), stream_id(tag::REPLICA, index, Side::Left))
}

/// Samples replica `index` on an adaptive window and evaluates `l₀`, `r₀`, the origin label
/// and the simplified model at the origin.
pub fn replica_outcome(cfg: &ReplicaConfig, index: u64) -> Result<ReplicaOutcome> {
    let (rid, lid) = replica_ids(index);
    let right = grow_side(cfg.seed, rid, cfg, true)?;
    let left = grow_side(cfg.seed, lid, cfg, true)?;
    let nl = left.values.len() - 1;
    let mut values = Vec::with_capacity(nl + right.values.len());
    values.extend(left.values.iter().rev());
    values.extend(&right.values[1..]);
    let path = SampledPath::from_index(-(nl as i64), cfg.dt, values)?;
    let k0 = nl;

    let stepper = StrangStepper::new(cfg.gamma, cfg.dt);
    let l0 = evolve_l(&path, &stepper, 0, k0, f64::INFINITY);
    let r0 = evolve_r(&path, &stepper, path.len() - 1, k0, f64::INFINITY);
    let bil = bilateral_extrema(&path, cfg.gamma)?;
    let cf = closed_form_from_records(
        cfg.gamma,
        (left.first.kind, left.first.event_value),
        (right.first.kind, right.first.event_value),
    );
    Ok(ReplicaOutcome {
        l0,
        r0,
        m0: l0 + r0,
        label: bil.origin_label,
        case: bil.case,
        l_hat: cf.l_hat,
        r_hat: cf.r_hat,
        m_hat: cf.m_hat,
        sign_hat: cf.sign,
        left: nl as f64 * cfg.dt,
        right: (right.values.len() - 1) as f64 * cfg.dt,
    })
}

/// All replicas of `cfg`, in index order.
pub fn replica_outcomes(cfg: &ReplicaConfig) -> Result<Vec<ReplicaOutcome>> {
    (0..cfg.replicas as u64).into_par_iter().map(|i| replica_outcome(cfg, i)).collect()
}

fn build_report(
    name: &str,
    values: &[f64],
    seed: u64,
    digest: String,
    ci_level: f64,
    started: Instant,
    diagnostics: BTreeMap<String, f64>,
) -> EstimateReport {
    let (estimate, stderr) = mean_stderr(values);
    EstimateReport {
        name: name.into(),
        estimate,
        stderr,
        n: values.len(),
        ci_level,
        seed,
        config_digest: digest,
        elapsed: started.elapsed().as_secs_f64(),
        diagnostics,
    }
}

/// `(1 + e^{m·s})⁻¹`, with the label-0 case contributing ½.
#[inline]
pub fn discrepancy_integrand(m: f64, s: i8) -> f64 {
    if s == 0 {
        0.5
    } else {
        1.0 / (1.0 + (m * s as f64).exp())
    }
}

fn window_diagnostics(outcomes: &[ReplicaOutcome]) -> BTreeMap<String, f64> {
    let mut d = BTreeMap::new();
    let zeros = outcomes.iter().filter(|o| o.label == 0).count();
    d.insert("label_zero_count".into(), zeros as f64);
    let widths: Vec<f64> = outcomes.iter().map(|o| o.left + o.right).collect();
    d.insert("mean_window".into(), pairwise_sum(&widths) / widths.len() as f64);
    d
}

/// `D_Γ` from replica outcomes: average of `(1 + e^{m₀ s₀})⁻¹` with the Fisher label `s₀`.
pub fn d_report(cfg: &ReplicaConfig, outcomes: &[ReplicaOutcome], started: Instant) -> EstimateReport {
    let values: Vec<f64> = outcomes.iter().map(|o| discrepancy_integrand(o.m0, o.label)).collect();
    build_report("D", &values, cfg.seed, config_digest(cfg), cfg.ci_level, started, window_diagnostics(outcomes))
}

/// `D^{(m)}_Γ` from replica outcomes: the label replaced by `sign(m₀)`.
pub fn d_sign_m_report(cfg: &ReplicaConfig, outcomes: &[ReplicaOutcome], started: Instant) -> EstimateReport {
    let values: Vec<f64> = outcomes.iter().map(|o| discrepancy_integrand(o.m0, sign(o.m0))).collect();
    build_report("D_sign_m", &values, cfg.seed, config_digest(cfg), cfg.ci_level, started, window_diagnostics(outcomes))
}

fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

pub fn estimate_d(cfg: &ReplicaConfig) -> Result<EstimateReport> {
    cfg.validate(100)?;
    let started = Instant::now();
    let outcomes = replica_outcomes(cfg)?;
    Ok(d_report(cfg, &outcomes, started))
}

pub fn estimate_d_sign_m(cfg: &ReplicaConfig) -> Result<EstimateReport> {
    cfg.validate(100)?;
    let started = Instant::now();
    let outcomes = replica_outcomes(cfg)?;
    Ok(d_sign_m_report(cfg, &outcomes, started))
}

/// `(l̂₀, r̂₀, m̂₀)` of replica `index` read from the first stop on each side only.
pub fn simplified_outcome(cfg: &ReplicaConfig, index: u64) -> Result<(f64, f64, f64)> {
    let (rid, lid) = replica_ids(index);
    let right = stream_first_record(cfg.seed, rid, cfg)?;
    let left = stream_first_record(cfg.seed, lid, cfg)?;
    let cf = closed_form_from_records(cfg.gamma, (left.kind, left.event_value), (right.kind, right.event_value));
    Ok((cf.l_hat, cf.r_hat, cf.m_hat))
}

/// `D̂_Γ`: average of `(1 + e^{|m̂₀|})⁻¹` over replicas of the simplified model.
pub fn estimate_d_hat(cfg: &ReplicaConfig) -> Result<EstimateReport> {
    cfg.validate(100)?;
    let started = Instant::now();
    let values: Vec<f64> = (0..cfg.replicas as u64)
        .into_par_iter()
        .map(|i| simplified_outcome(cfg, i).map(|(_, _, m)| 1.0 / (1.0 + m.abs().exp())))
        .collect::<Result<_>>()?;
    Ok(build_report("D_hat", &values, cfg.seed, config_digest(cfg), cfg.ci_level, started, BTreeMap::new()))
}

/// Settings for the single-path time averages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathAverageConfig {
    pub gamma: f64,
    /// Drift of the disorder, `B_t + αt`; only the free energy accepts `α ≠ 0`.
    pub alpha: f64,
    pub ell: f64,
    pub dt: f64,
    pub seed: u64,
    /// Padding on each side of `[0, ℓ]`, in units of `Γ²`, doubled until the Fisher labels
    /// of `[0, ℓ]` are determined.
    pub pad: f64,
    pub max_pad_doublings: usize,
    pub ci_level: f64,
}

impl PathAverageConfig {
    pub fn new(gamma: f64, ell: f64, seed: u64) -> Self {
        Self { gamma, alpha: 0.0, ell, dt: default_dt(gamma), seed, pad: 10.0, max_pad_doublings: 6, ci_level: 0.95 }
    }

    fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0) {
            return Err(invalid(format!("gamma must be positive, got {}", self.gamma)));
        }
        check_dt(self.dt)?;
        if !self.alpha.is_finite() {
            return Err(invalid(format!("alpha must be finite, got {}", self.alpha)));
        }
        if !(self.ell.is_finite() && self.ell >= 4.0 * self.dt) {
            return Err(invalid(format!("ell = {} is too short for dt = {}", self.ell, self.dt)));
        }
        if !(self.pad > 0.0) {
            return Err(invalid("pad must be positive"));
        }
        if !(self.ci_level > 0.0 && self.ci_level < 1.0) {
            return Err(invalid("ci_level must lie in (0, 1)"));
        }
        Ok(())
    }

    fn batches(&self) -> usize {
        (self.ell.sqrt().floor() as usize).max(2)
    }
}

/// Trapezoid time average of `g` and batch-means standard error.
fn time_average(g: &[f64], batches: usize) -> (f64, f64) {
    let n = g.len() - 1;
    let trap = (pairwise_sum(g) - 0.5 * (g[0] + g[n])) / n as f64;
    let (_, se) = batch_means(&g[..n], batches);
    (trap, se)
}

/// `(1/ℓ)∫₀^ℓ (1 + exp(m^{(0,ℓ)}_t s^F_t))⁻¹ dt` along one long path.
pub fn ergodic_discrepancy(cfg: &PathAverageConfig) -> Result<EstimateReport> {
    cfg.validate()?;
    check_gamma(cfg.gamma)?;
    if cfg.alpha != 0.0 {
        return Err(invalid("the ergodic average is defined for alpha = 0"));
    }
    let started = Instant::now();
    let dt = cfg.dt;
    let k_ell = grid_index(cfg.ell, dt).ok_or_else(|| invalid("ell must be a multiple of dt"))?;
    let rid = stream_id(tag::ERGODIC, 0, Side::Right);
    let lid = stream_id(tag::ERGODIC, 0, Side::Left);
    let mut pad = cfg.pad * cfg.gamma * cfg.gamma;
    for _ in 0..=cfg.max_pad_doublings {
        let kp = (pad / dt).ceil() as i64;
        let unit = path::unit_bilateral(cfg.seed, rid, lid, -kp, k_ell + kp, dt);
        let path = SampledPath::from_index(-kp, dt, unit)?;
        let seq = forward_neveu_pitman(&path, cfg.gamma)?;
        let confirmed = seq.confirmed_events();
        let covered = confirmed.first().is_some_and(|e| e.time <= 0.0)
            && confirmed.last().is_some_and(|e| e.time >= cfg.ell);
        if !covered {
            pad *= 2.0;
            continue;
        }
        let fisher = fisher_trajectory(&seq)?;
        let k0 = kp as usize;
        let kl = k0 + k_ell as usize;
        let stepper = StrangStepper::new(cfg.gamma, dt);
        let v = path.values();
        let mut l = vec![0.0; kl - k0 + 1];
        l[0] = f64::INFINITY;
        for k in k0..kl {
            l[k - k0 + 1] = stepper.step(l[k - k0], v[k + 1] - v[k]);
        }
        let mut r = vec![0.0; kl - k0 + 1];
        r[kl - k0] = f64::INFINITY;
        for k in (k0 + 1..=kl).rev() {
            r[k - k0 - 1] = stepper.step(r[k - k0], v[k] - v[k - 1]);
        }
        // sweep the Fisher breakpoints alongside the grid
        let mut g = Vec::with_capacity(kl - k0 + 1);
        let mut zeros = 0usize;
        let bps = &fisher.breakpoints;
        let mut j = bps.partition_point(|&b| b < path.time(k0));
        for k in k0..=kl {
            let t = path.time(k);
            while j < bps.len() && bps[j] < t {
                j += 1;
            }
            let s = if j < bps.len() && bps[j] == t { 0 } else { fisher.labels[j] };
            if s == 0 {
                zeros += 1;
            }
            let m = l[k - k0] + r[k - k0];
            g.push(discrepancy_integrand(m, s));
        }
        let (estimate, stderr) = time_average(&g, cfg.batches());
        let mut diagnostics = BTreeMap::new();
        diagnostics.insert("pad".into(), pad);
        diagnostics.insert("breakpoint_samples".into(), zeros as f64);
        diagnostics.insert("batches".into(), cfg.batches() as f64);
        return Ok(EstimateReport {
            name: "ergodic_D".into(),
            estimate,
            stderr,
            n: g.len(),
            ci_level: cfg.ci_level,
            seed: cfg.seed,
            config_digest: config_digest(cfg),
            elapsed: started.elapsed().as_secs_f64(),
            diagnostics,
        });
    }
    Err(Error::WindowExhausted(format!(
        "Γ-extrema do not bracket [0, {}] after {} pad doublings",
        cfg.ell, cfg.max_pad_doublings
    )))
}

/// `α + (1/ℓ)·ε·∫₀^ℓ e^{−l_t} dt` along one trajectory started from `l₀ = +∞` and driven by
/// `B_t + αt`. `Γ = +∞` is accepted and gives `ε = 0`.
pub fn estimate_free_energy(cfg: &PathAverageConfig) -> Result<EstimateReport> {
    cfg.validate()?;
    let started = Instant::now();
    let dt = cfg.dt;
    let n = grid_index(cfg.ell, dt).ok_or_else(|| invalid("ell must be a multiple of dt"))? as usize;
    let eps = epsilon(cfg.gamma);
    let stepper = StrangStepper::new(cfg.gamma, dt);
    let mut walk = GaussianWalk::new(rng::stream(cfg.seed, stream_id(tag::FREE_ENERGY, 0, Side::Right)), dt);
    let batches = cfg.batches().min(n);
    let size = n / batches;
    let mut sums = vec![0.0; batches];
    let mut chunk = Vec::with_capacity(size);
    let mut l = f64::INFINITY;
    let mut b = 0.0;
    let mut prev = eps * (-l).exp();
    let mut trapezoid = Vec::with_capacity(n / 1024 + 1);
    let mut block = Vec::with_capacity(1024);
    for k in 0..n {
        let nb = walk.step();
        l = stepper.step(l, nb - b + cfg.alpha * dt);
        b = nb;
        let g = eps * (-l).exp();
        block.push(0.5 * (prev + g));
        if block.len() == 1024 {
            trapezoid.push(pairwise_sum(&block));
            block.clear();
        }
        let i = k / size;
        if i < batches {
            chunk.push(0.5 * (prev + g));
            if chunk.len() == size {
                sums[i] = pairwise_sum(&chunk) / size as f64;
                chunk.clear();
            }
        }
        prev = g;
    }
    trapezoid.push(pairwise_sum(&block));
    let estimate = cfg.alpha + pairwise_sum(&trapezoid) / n as f64;
    let (_, se) = mean_stderr(&sums);
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("batches".into(), batches as f64);
    Ok(EstimateReport {
        name: "free_energy".into(),
        estimate,
        stderr: if eps == 0.0 { 0.0 } else { se },
        n,
        ci_level: cfg.ci_level,
        seed: cfg.seed,
        config_digest: config_digest(cfg),
        elapsed: started.elapsed().as_secs_f64(),
        diagnostics,
    })
}

/// Settings for [`test_distributions`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionConfig {
    pub gamma: f64,
    pub n: usize,
    pub seed: u64,
    /// Grid step for the Γ-extrema statistics (a)–(e); grid overshoot biases `Γ` upward by
    /// about `√dt`, so the default is `10⁻⁵·Γ²`.
    pub dt: f64,
    /// Grid step for the SDE check (f).
    pub sde_dt: f64,
    pub window_factor: f64,
    /// KS threshold is `ks_coefficient/√n`.
    pub ks_coefficient: f64,
    /// Threshold on `|z|` for the moment checks.
    pub z_threshold: f64,
}

impl DistributionConfig {
    pub fn new(gamma: f64, n: usize, seed: u64) -> Self {
        Self {
            gamma,
            n,
            seed,
            dt: 1e-5 * gamma * gamma,
            sde_dt: default_dt(gamma),
            window_factor: 2.0,
            ks_coefficient: 1.63,
            z_threshold: 3.0,
        }
    }
}

const SPACING_CHUNK: usize = 500;

/// Runs the six distributional checks: (a) `l̂₀` uniform on `[−Γ, Γ]`; (b) `B` at the first
/// Γ-maximum exponential with mean `Γ`; (c) largest drop before it uniform on `[0, Γ]`;
/// (d) mean spacing of Γ-extrema equal to `Γ²`; (e) `E[e^{−λΔu}] = 1/cosh 1` at
/// `λ = 1/(2Γ²)`; (f) `l₀` distributed as `p_Γ`.
pub fn test_distributions(cfg: &DistributionConfig) -> Result<Vec<KsReport>> {
    check_gamma(cfg.gamma)?;
    check_dt(cfg.dt)?;
    check_dt(cfg.sde_dt)?;
    if cfg.n < 2 {
        return Err(invalid("need at least two samples"));
    }
    let gamma = cfg.gamma;
    let n = cfg.n;
    let ks = cfg.ks_coefficient / (n as f64).sqrt();
    let scan_cfg = ReplicaConfig { dt: cfg.dt, ..ReplicaConfig::new(gamma, n, cfg.seed) };
    let mut out = Vec::new();

    let l_hat: Vec<f64> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let rec = stream_first_record(cfg.seed, stream_id(tag::DISTRIBUTION, i, Side::Left), &scan_cfg)?;
            Ok(rec.kind.arrow() as f64 * gamma - 2.0 * rec.event_value)
        })
        .collect::<Result<_>>()?;
    let d = crate::stats::ks_statistic(&l_hat, |x| ((x + gamma) / (2.0 * gamma)).clamp(0.0, 1.0));
    out.push(KsReport::new("l_hat_uniform", d, n, ks, format!("uniform[-{gamma}, {gamma}]")));

    let drawdown: Vec<(f64, f64)> = (0..n as u64)
        .into_par_iter()
        .map(|i| first_drawdown(cfg.seed, i, gamma, cfg.dt, scan_cfg.max_steps()))
        .collect::<Result<_>>()?;
    let tops: Vec<f64> = drawdown.iter().map(|p| p.0).collect();
    let d = crate::stats::ks_statistic(&tops, |x| if x <= 0.0 { 0.0 } else { -(-x / gamma).exp_m1() });
    out.push(KsReport::new("max_before_drawdown_exponential", d, n, ks, format!("exponential(mean {gamma})")));
    let drops: Vec<f64> = drawdown.iter().map(|p| p.1).collect();
    let d = crate::stats::ks_statistic(&drops, |x| (x / gamma).clamp(0.0, 1.0));
    out.push(KsReport::new("largest_drop_uniform", d, n, ks, format!("uniform[0, {gamma}]")));

    let spacings = extrema_spacings(cfg.seed, gamma, cfg.dt, n)?;
    let scaled: Vec<f64> = spacings.iter().map(|s| s / (gamma * gamma)).collect();
    let (m, se) = mean_stderr(&scaled);
    out.push(KsReport::new("spacing_mean", ((m - 1.0) / se).abs(), n, cfg.z_threshold, format!("mean {}", gamma * gamma)));
    let lambda = 1.0 / (2.0 * gamma * gamma);
    let lt: Vec<f64> = spacings.iter().map(|s| (-lambda * s).exp()).collect();
    let target = 1.0 / 1.0f64.cosh();
    let (m, se) = mean_stderr(&lt);
    out.push(KsReport::new("spacing_laplace", ((m - target) / se).abs(), n, cfg.z_threshold, format!("1/cosh(1) = {target:.6}")));

    let sde_cfg = ReplicaConfig { dt: cfg.sde_dt, window_factor: cfg.window_factor, ..ReplicaConfig::new(gamma, n, cfg.seed) };
    let l0 = stationary_l_samples(&sde_cfg)?;
    let cdf = StationaryCdf::new(&AnalyticConfig::default(), gamma)?;
    let d = crate::stats::ks_statistic(&l0, |x| cdf.cdf(x));
    out.push(KsReport::new("l_stationary", d, n, ks, format!("p_gamma(gamma = {gamma})")));
    Ok(out)
}

/// `(B at the first Γ-maximum, largest drop before it)` for a walk started at 0, where the
/// first Γ-maximum is the running maximum when the drawdown first exceeds `Γ`.
fn first_drawdown(seed: u64, index: u64, gamma: f64, dt: f64, max_steps: usize) -> Result<(f64, f64)> {
    let mut walk = GaussianWalk::new(rng::stream(seed, stream_id(tag::DRAWDOWN, index, Side::Right)), dt);
    let mut top = 0.0f64;
    let mut drop = 0.0f64;
    let mut drop_at_top = 0.0;
    for _ in 0..max_steps {
        let v = walk.step();
        if v > top {
            top = v;
            drop_at_top = drop;
        } else {
            let d = top - v;
            if d > gamma {
                return Ok((top, drop_at_top));
            }
            drop = drop.max(d);
        }
    }
    Err(Error::WindowExhausted("drawdown never exceeded gamma".into()))
}

/// `n` consecutive spacings of confirmed Γ-extrema, in chunks of 500 per stream.
pub fn extrema_spacings(seed: u64, gamma: f64, dt: f64, n: usize) -> Result<Vec<f64>> {
    let chunks = n.div_ceil(SPACING_CHUNK);
    let max_steps = (1e4 * gamma * gamma / dt) as u64 + 1;
    let parts: Vec<Vec<f64>> = (0..chunks as u64)
        .into_par_iter()
        .map(|c| {
            let want = SPACING_CHUNK.min(n - c as usize * SPACING_CHUNK);
            let mut walk = GaussianWalk::new(rng::stream(seed, stream_id(tag::SPACING, c, Side::Right)), dt);
            let mut scanner = ForwardScanner::new(gamma);
            scanner.push(0, 0.0);
            let mut last: Option<u64> = None;
            let mut out = Vec::with_capacity(want);
            for k in 1..max_steps {
                if let Some(rec) = scanner.push(k, walk.step()) {
                    if rec.first {
                        continue;
                    }
                    if let Some(prev) = last {
                        out.push((rec.event_index - prev) as f64 * dt);
                        if out.len() == want {
                            return Ok(out);
                        }
                    }
                    last = Some(rec.event_index);
                }
            }
            Err(Error::WindowExhausted("not enough Γ-extrema in the spacing stream".into()))
        })
        .collect::<Result<_>>()?;
    Ok(parts.concat())
}

/// `l₀` from the left half of each replica, started at `+∞` at the left window end.
pub fn stationary_l_samples(cfg: &ReplicaConfig) -> Result<Vec<f64>> {
    (0..cfg.replicas as u64)
        .into_par_iter()
        .map(|i| {
            let (_, lid) = replica_ids(i);
            let left = grow_side(cfg.seed, lid, cfg, true)?;
            let stepper = StrangStepper::new(cfg.gamma, cfg.dt);
            // the left half read forward in time is the reversed walk
            let v = &left.values;
            let mut l = f64::INFINITY;
            for k in (1..v.len()).rev() {
                l = stepper.step(l, v[k - 1] - v[k]);
            }
            Ok(l)
        })
        .collect()
}

/// One row of the `|l₀ − l̂₀|` diagnostic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LhatRow {
    pub gamma: f64,
    pub n: usize,
    pub median: f64,
    pub p99: f64,
    /// Fraction of replicas with `sign(m₀) = sign(m̂₀)`.
    pub sign_agreement: f64,
    pub sign_agreement_stderr: f64,
}

/// Quantiles of `|l₀ − l̂₀|` and the sign agreement of `m₀` and `m̂₀` over a Γ grid.
pub fn compare_l_lhat(gammas: &[f64], n: usize, seed: u64, window_factor: f64) -> Result<Vec<LhatRow>> {
    gammas
        .iter()
        .map(|&gamma| {
            let cfg = ReplicaConfig { window_factor, ..ReplicaConfig::new(gamma, n, seed) };
            cfg.validate(2)?;
            Ok(lhat_row(&cfg, &replica_outcomes(&cfg)?))
        })
        .collect()
}

pub fn lhat_row(cfg: &ReplicaConfig, outcomes: &[ReplicaOutcome]) -> LhatRow {
    let gaps = sorted(&outcomes.iter().map(|o| (o.l0 - o.l_hat).abs()).collect::<Vec<_>>());
    let agree: Vec<f64> = outcomes.iter().map(|o| if sign(o.m0) == o.sign_hat { 1.0 } else { 0.0 }).collect();
    let (p, se) = mean_stderr(&agree);
    LhatRow {
        gamma: cfg.gamma,
        n: outcomes.len(),
        median: quantile_sorted(&gaps, 0.5),
        p99: quantile_sorted(&gaps, 0.99),
        sign_agreement: p,
        sign_agreement_stderr: se,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extrema::bilateral_extrema;
    use crate::sde::simplified_closed_form;

    #[test]
    fn normal_quantiles() {
        assert!((normal_quantile(0.975) - 1.959_964).abs() < 1e-5);
        assert!((normal_quantile(0.5)).abs() < 1e-9);
        assert!((normal_quantile(0.025) + 1.959_964).abs() < 1e-5);
    }

    #[test]
    fn replica_is_consistent_with_path_level_functions() {
        let cfg = ReplicaConfig::new(2.0, 100, 5);
        for i in 0..20 {
            let o = replica_outcome(&cfg, i).unwrap();
            assert_eq!(o.sign_hat, o.label, "replica {i}");
            let (lh, rh, mh) = simplified_outcome(&cfg, i).unwrap();
            assert_eq!((lh, rh, mh), (o.l_hat, o.r_hat, o.m_hat));
            assert!(o.left > 0.0 && o.right > 0.0);
        }
        // rebuild the window of replica 0 and compare against the path-level functions
        let (rid, lid) = replica_ids(0);
        let o = replica_outcome(&cfg, 0).unwrap();
        let nl = (o.left / cfg.dt).round() as i64;
        let nr = (o.right / cfg.dt).round() as i64;
        let unit = path::unit_bilateral(cfg.seed, rid, lid, -nl, nr, cfg.dt);
        let p = SampledPath::from_index(-nl, cfg.dt, unit).unwrap();
        let cf = simplified_closed_form(&p, cfg.gamma).unwrap();
        assert_eq!(cf.l_hat, o.l_hat);
        assert_eq!(bilateral_extrema(&p, cfg.gamma).unwrap().origin_label, o.label);
        let l = crate::sde::integrate_l(&p, cfg.gamma, p.t0(), f64::INFINITY).unwrap();
        assert_eq!(l.at(0.0).unwrap(), o.l0);
        let r = crate::sde::integrate_r(&p, cfg.gamma, p.t_end(), f64::INFINITY).unwrap();
        assert_eq!(r.at(0.0).unwrap(), o.r0);
    }

    #[test]
    fn sign_m_ordering_is_pathwise() {
        let cfg = ReplicaConfig::new(2.0, 200, 11);
        let t = Instant::now();
        let outcomes = replica_outcomes(&cfg).unwrap();
        let d = d_report(&cfg, &outcomes, t);
        let dm = d_sign_m_report(&cfg, &outcomes, t);
        assert!(d.estimate >= dm.estimate);
        for o in &outcomes {
            let a = discrepancy_integrand(o.m0, sign(o.m0));
            assert_eq!(a, 1.0 / (1.0 + o.m0.abs().exp()));
            assert!(discrepancy_integrand(o.m0, o.label) >= a);
        }
    }

    #[test]
    fn estimators_are_deterministic() {
        let cfg = ReplicaConfig::new(1.0, 100, 3);
        let a = estimate_d_hat(&cfg).unwrap();
        let b = estimate_d_hat(&cfg).unwrap();
        assert_eq!(a.estimate, b.estimate);
        assert_eq!(a.config_digest, b.config_digest);
        let other = ReplicaConfig { seed: 4, ..cfg.clone() };
        assert_ne!(config_digest(&cfg), config_digest(&other));
    }

    #[test]
    fn free_energy_without_drift_is_zero() {
        let cfg = PathAverageConfig { dt: 0.01, ..PathAverageConfig::new(f64::INFINITY, 100.0, 1) };
        let r = estimate_free_energy(&cfg).unwrap();
        assert_eq!(r.estimate, 0.0);
        assert_eq!(r.stderr, 0.0);
        let drifted = estimate_free_energy(&PathAverageConfig { alpha: 0.3, ..cfg }).unwrap();
        assert_eq!(drifted.estimate, 0.3);
    }

    #[test]
    fn bad_configs() {
        assert!(estimate_d(&ReplicaConfig::new(2.0, 10, 1)).is_err());
        assert!(estimate_d(&ReplicaConfig::new(-1.0, 100, 1)).is_err());
        let cfg = ReplicaConfig { max_window: 1e-3, ..ReplicaConfig::new(2.0, 100, 1) };
        assert!(matches!(estimate_d_hat(&cfg), Err(Error::WindowExhausted(_))));
        let short = PathAverageConfig::new(2.0, 0.001, 1);
        assert!(ergodic_discrepancy(&short).is_err());
    }
}
