//! Transfer-matrix engine for the lattice random field Ising chain
//!
//! `Z = Σ_σ exp(J Σⱼ σⱼσⱼ₋₁ + Σⱼ (δωⱼ + h)σⱼ)` over `σ ∈ {−1, 1}^N` with `σ₀ = +1`, together
//! with the continuum scaling check and the Gaussian overlap identity.
//!
//! Spin states are indexed `0 ↦ +1`, `1 ↦ −1`; replica pairs `(σ, τ)` are indexed `2a + b`.
//! Every site matrix is stored divided by its largest entry, so entries lie in `(0, 1]` and
//! the dropped factor is accumulated in log scale.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_positive, invalid, Result};
use crate::mc::{config_digest, normal_quantile};
use crate::path::{grid_index, SampledPath};
use crate::rng::{self, stream_id, tag, GaussianWalk, Side};
use crate::sde::{log_partition_free, LinearSystemConfig};
use crate::stats::{mean, mean_stderr, variance};

const SPIN: [f64; 2] = [1.0, -1.0];

/// Boundary spins: the left spin `σ₀` is always `+1`; the right end is free or pinned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    PlusFree,
    PlusPlus,
    PlusMinus,
}

impl Boundary {
    fn right(self) -> [f64; 2] {
        match self {
            Boundary::PlusFree => [1.0, 1.0],
            Boundary::PlusPlus => [1.0, 0.0],
            Boundary::PlusMinus => [0.0, 1.0],
        }
    }

    fn right_pair(self) -> [f64; 4] {
        let r = self.right();
        [r[0] * r[0], r[0] * r[1], r[1] * r[0], r[1] * r[1]]
    }
}

/// Order in which the transfer matrices are multiplied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sweep {
    LeftToRight,
    RightToLeft,
}

/// One disorder realization of the lattice chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteChain {
    pub n: usize,
    pub j: f64,
    pub h: f64,
    pub delta: f64,
    pub omega: Vec<f64>,
    pub boundary: Boundary,
}

impl DiscreteChain {
    pub fn new(j: f64, h: f64, delta: f64, omega: Vec<f64>, boundary: Boundary) -> Result<Self> {
        let chain = Self { n: omega.len(), j, h, delta, omega, boundary };
        chain.validate()?;
        Ok(chain)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.omega.len() != self.n {
            return Err(invalid(format!("need N ≥ 1 disorder values, got N = {} with {}", self.n, self.omega.len())));
        }
        ensure_finite("J", self.j)?;
        ensure_finite("h", self.h)?;
        ensure_finite("delta", self.delta)?;
        if self.j < 0.0 || self.delta < 0.0 {
            return Err(invalid("J and delta must be non-negative"));
        }
        if let Some(w) = self.omega.iter().find(|w| !w.is_finite()) {
            return Err(invalid(format!("disorder must be finite, got {w}")));
        }
        Ok(())
    }

    /// External field `δωⱼ + h` at site `j ∈ 1..=N`.
    #[inline]
    pub fn field(&self, j: usize) -> f64 {
        self.delta * self.omega[j - 1] + self.h
    }

    /// The same chain with `h` and `δ` multiplied by `lambda`.
    pub fn scaled(&self, lambda: f64) -> Self {
        Self { h: lambda * self.h, delta: lambda * self.delta, ..self.clone() }
    }
}

/// Site matrix `M[a][b] = exp(J σ_a σ_b + f σ_b)` divided by `exp(J + |f|)`, and that log
/// factor. Row `a` is the spin at `j − 1`, column `b` the spin at `j`.
pub fn site_matrix(j: f64, f: f64) -> ([[f64; 2]; 2], f64) {
    let mut m = [[0.0; 2]; 2];
    for (a, row) in m.iter_mut().enumerate() {
        for (b, x) in row.iter_mut().enumerate() {
            *x = (j * (SPIN[a] * SPIN[b] - 1.0) + f * SPIN[b] - f.abs()).exp();
        }
    }
    (m, j + f.abs())
}

/// Two-replica site matrix built from the pair energy `J(στ-couplings) + f(σ + τ)`, divided
/// by `exp(2J + 2|f|)`, and that log factor.
pub fn pair_matrix(j: f64, f: f64) -> ([[f64; 4]; 4], f64) {
    let mut m = [[0.0; 4]; 4];
    for (p, row) in m.iter_mut().enumerate() {
        let (s0, t0) = (SPIN[p / 2], SPIN[p % 2]);
        for (q, x) in row.iter_mut().enumerate() {
            let (s1, t1) = (SPIN[q / 2], SPIN[q % 2]);
            let energy = j * (s0 * s1 + t0 * t1) + f * (s1 + t1);
            *x = (energy - 2.0 * j - 2.0 * f.abs()).exp();
        }
    }
    (m, 2.0 * j + 2.0 * f.abs())
}

/// `v ← v·M`, renormalized to unit sum; returns the log of the dropped factor.
#[inline]
fn push_right<const S: usize>(v: &mut [f64; S], m: &[[f64; S]; S]) -> f64 {
    let mut out = [0.0; S];
    for (a, &va) in v.iter().enumerate() {
        for (b, o) in out.iter_mut().enumerate() {
            *o += va * m[a][b];
        }
    }
    let s: f64 = out.iter().sum();
    for (x, o) in v.iter_mut().zip(out) {
        *x = o / s;
    }
    s.ln()
}

/// `w ← M·w`, renormalized to unit sum; returns the log of the dropped factor.
#[inline]
fn push_left<const S: usize>(w: &mut [f64; S], m: &[[f64; S]; S]) -> f64 {
    let mut out = [0.0; S];
    for (o, row) in out.iter_mut().zip(m) {
        *o = row.iter().zip(w.iter()).map(|(x, y)| x * y).sum();
    }
    let s: f64 = out.iter().sum();
    for (x, o) in w.iter_mut().zip(out) {
        *x = o / s;
    }
    s.ln()
}

fn dot<const S: usize>(a: &[f64; S], b: &[f64; S]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Neumaier-compensated running sum.
#[derive(Default)]
struct Accumulator {
    sum: f64,
    carry: f64,
}

impl Accumulator {
    #[inline]
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// `log Z` of the chain, multiplying the site matrices in the given order.
pub fn log_partition_with(chain: &DiscreteChain, sweep: Sweep) -> f64 {
    let mut acc = Accumulator::default();
    match sweep {
        Sweep::LeftToRight => {
            let mut v = [1.0, 0.0];
            for j in 1..=chain.n {
                let (m, c) = site_matrix(chain.j, chain.field(j));
                acc.add(c + push_right(&mut v, &m));
            }
            acc.add(dot(&v, &chain.boundary.right()).ln());
        }
        Sweep::RightToLeft => {
            let mut w = chain.boundary.right();
            for j in (1..=chain.n).rev() {
                let (m, c) = site_matrix(chain.j, chain.field(j));
                acc.add(c + push_left(&mut w, &m));
            }
            acc.add(w[0].ln());
        }
    }
    acc.value()
}

pub fn log_partition(chain: &DiscreteChain) -> f64 {
    log_partition_with(chain, Sweep::LeftToRight)
}

/// `log(Z_{N,ω,J,h,δ} / Z_{N,J,0})`, the reference chain sharing `N`, `J` and the boundary.
pub fn transfer_ratio(chain: &DiscreteChain) -> f64 {
    transfer_ratio_with(chain, Sweep::LeftToRight)
}

/// Sweeps the chain and its zero-field reference side by side and sums the per-site
/// differences of their log factors, so the `N·J` parts cancel exactly.
pub fn transfer_ratio_with(chain: &DiscreteChain, sweep: Sweep) -> f64 {
    let (m0, _) = site_matrix(chain.j, 0.0);
    let right = chain.boundary.right();
    let mut acc = Accumulator::default();
    match sweep {
        Sweep::LeftToRight => {
            let (mut v, mut v0) = ([1.0, 0.0], [1.0, 0.0]);
            for j in 1..=chain.n {
                let f = chain.field(j);
                let (m, _) = site_matrix(chain.j, f);
                acc.add(f.abs() + push_right(&mut v, &m) - push_right(&mut v0, &m0));
            }
            acc.add((dot(&v, &right) / dot(&v0, &right)).ln());
        }
        Sweep::RightToLeft => {
            let (mut w, mut w0) = (right, right);
            for j in (1..=chain.n).rev() {
                let f = chain.field(j);
                let (m, _) = site_matrix(chain.j, f);
                acc.add(f.abs() + push_left(&mut w, &m) - push_left(&mut w0, &m0));
            }
            acc.add((w[0] / w0[0]).ln());
        }
    }
    acc.value()
}

/// Gibbs magnetizations `⟨σⱼ⟩`, `j = 1..=N`, by forward-backward sweeps.
pub fn magnetizations(chain: &DiscreteChain) -> Vec<f64> {
    let mut back = vec![[0.0; 2]; chain.n + 1];
    back[chain.n] = chain.boundary.right();
    for j in (1..=chain.n).rev() {
        let (m, _) = site_matrix(chain.j, chain.field(j));
        let mut w = back[j];
        push_left(&mut w, &m);
        back[j - 1] = w;
    }
    let mut v = [1.0, 0.0];
    (1..=chain.n)
        .map(|j| {
            let (m, _) = site_matrix(chain.j, chain.field(j));
            push_right(&mut v, &m);
            let (p, q) = (v[0] * back[j][0], v[1] * back[j][1]);
            (p - q) / (p + q)
        })
        .collect()
}

/// Two-replica overlaps `⟨σⱼτⱼ⟩` under the product Gibbs measure, by forward-backward
/// sweeps of the 4×4 pair matrices.
pub fn replica_overlaps(chain: &DiscreteChain) -> Vec<f64> {
    let mut back = vec![[0.0; 4]; chain.n + 1];
    back[chain.n] = chain.boundary.right_pair();
    for j in (1..=chain.n).rev() {
        let (m, _) = pair_matrix(chain.j, chain.field(j));
        let mut w = back[j];
        push_left(&mut w, &m);
        back[j - 1] = w;
    }
    let sign = [1.0, -1.0, -1.0, 1.0];
    let mut v = [1.0, 0.0, 0.0, 0.0];
    (1..=chain.n)
        .map(|j| {
            let (m, _) = pair_matrix(chain.j, chain.field(j));
            push_right(&mut v, &m);
            let mut num = 0.0;
            let mut den = 0.0;
            for s in 0..4 {
                let p = v[s] * back[j][s];
                num += sign[s] * p;
                den += p;
            }
            num / den
        })
        .collect()
}

/// How the lattice disorder and the continuum path of one sample are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Coupling {
    /// `ωⱼ = (B_{jΔ} − B_{(j−1)Δ})/√Δ` read off the continuum path of the same sample.
    Common,
    /// Lattice disorder and continuum path from independent streams.
    Independent,
}

/// Settings for the lattice-to-continuum comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingConfig {
    pub gamma: f64,
    pub alpha: f64,
    pub ell: f64,
    pub deltas: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
    /// Grid step of the continuum reference; every `Δ` must be a multiple of it.
    pub continuum_dt: f64,
    pub coupling: Coupling,
    pub ci_level: f64,
}

impl ScalingConfig {
    pub fn new(gamma: f64, alpha: f64, ell: f64, deltas: Vec<f64>, samples: usize, seed: u64) -> Self {
        let finest = deltas.iter().copied().fold(f64::INFINITY, f64::min);
        Self {
            gamma,
            alpha,
            ell,
            deltas,
            samples,
            seed,
            continuum_dt: finest / 10.0,
            coupling: Coupling::Common,
            ci_level: 0.95,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("gamma", self.gamma)?;
        ensure_finite("alpha", self.alpha)?;
        ensure_positive("ell", self.ell)?;
        ensure_positive("continuum_dt", self.continuum_dt)?;
        if self.deltas.is_empty() {
            return Err(invalid("need at least one lattice spacing"));
        }
        if self.samples < 2 {
            return Err(invalid("need at least two disorder samples"));
        }
        grid_index(self.ell, self.continuum_dt)
            .ok_or_else(|| invalid("ell must be a multiple of continuum_dt"))?;
        for &d in &self.deltas {
            ensure_positive("delta", d)?;
            grid_index(d, self.continuum_dt).ok_or_else(|| invalid(format!("Δ = {d} is not a multiple of continuum_dt")))?;
            grid_index(self.ell, d).ok_or_else(|| invalid(format!("ell is not a multiple of Δ = {d}")))?;
        }
        if !(self.ci_level > 0.0 && self.ci_level < 1.0) {
            return Err(invalid("ci_level must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// Moments of the lattice log-ratio at one `Δ` against the continuum `log Z^f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub delta: f64,
    pub sites: usize,
    pub coupling_j: f64,
    pub mean_log_ratio: f64,
    pub var_log_ratio: f64,
    pub continuum_mean: f64,
    pub continuum_var: f64,
    /// `|Δmean| + |Δvar|`.
    pub gap: f64,
    pub gap_stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub config: ScalingConfig,
    pub config_digest: String,
    /// Rows ordered by decreasing `Δ`.
    pub rows: Vec<ScalingRow>,
    pub continuum_mean_stderr: f64,
    /// Each gap is below its predecessor, up to the combined confidence half-width.
    pub decreasing: bool,
    /// Each point estimate of the gap is strictly below its predecessor.
    pub strictly_decreasing: bool,
    pub elapsed: f64,
}

impl ScalingReport {
    pub const CSV_HEADER: &'static str = "delta,mean_log_ratio,var_log_ratio,continuum_mean,continuum_var,gap";

    pub fn csv_rows(&self) -> Vec<String> {
        self.rows
            .iter()
            .map(|r| {
                format!(
                    "{},{},{},{},{},{}",
                    r.delta, r.mean_log_ratio, r.var_log_ratio, r.continuum_mean, r.continuum_var, r.gap
                )
            })
            .collect()
    }
}

/// Lattice parameters `(N, δ, h, J)` for spacing `Δ`.
pub fn scaling_parameters(gamma: f64, alpha: f64, ell: f64, delta: f64) -> (usize, f64, f64, f64) {
    let n = (ell / delta).round() as usize;
    (n, delta.sqrt(), alpha * delta, 0.5 * gamma - 0.5 * delta.ln())
}

struct ScalingSample {
    continuum: f64,
    lattice: Vec<f64>,
}

fn scaling_sample(cfg: &ScalingConfig, deltas: &[f64], index: u64) -> ScalingSample {
    let dt = cfg.continuum_dt;
    let steps = grid_index(cfg.ell, dt).expect("validated") as usize;
    let mut walk = GaussianWalk::new(rng::stream(cfg.seed, stream_id(tag::CONTINUUM, index, Side::Right)), dt);
    let mut b = Vec::with_capacity(steps + 1);
    b.push(0.0);
    b.extend((0..steps).map(|_| walk.step()));
    let drifted: Vec<f64> = b.iter().enumerate().map(|(k, x)| x + cfg.alpha * k as f64 * dt).collect();
    let path = SampledPath::from_index(0, dt, drifted).expect("finite path");
    let continuum = log_partition_free(&path, cfg.gamma, LinearSystemConfig::default()).expect("validated gamma");
    let mut disorder = GaussianWalk::new(rng::stream(cfg.seed, stream_id(tag::DISCRETE, index, Side::Right)), 1.0);
    let lattice = deltas
        .iter()
        .map(|&d| {
            let (n, delta, h, j) = scaling_parameters(cfg.gamma, cfg.alpha, cfg.ell, d);
            let omega: Vec<f64> = match cfg.coupling {
                Coupling::Common => {
                    let stride = grid_index(d, dt).expect("validated") as usize;
                    (1..=n).map(|i| (b[i * stride] - b[(i - 1) * stride]) / delta).collect()
                }
                Coupling::Independent => (0..n).map(|_| disorder.draw(1.0)).collect(),
            };
            let chain = DiscreteChain { n, j, h, delta, omega, boundary: Boundary::PlusFree };
            transfer_ratio(&chain)
        })
        .collect();
    ScalingSample { continuum, lattice }
}

/// Compares mean and variance of the lattice log-ratio under the continuum scaling with
/// those of the continuum `log Z^f` on `[0, ℓ]`.
pub fn scaling_limit_check(cfg: &ScalingConfig) -> Result<ScalingReport> {
    cfg.validate()?;
    let started = Instant::now();
    let mut deltas = cfg.deltas.clone();
    deltas.sort_by(|a, b| b.total_cmp(a));
    let samples: Vec<ScalingSample> =
        (0..cfg.samples as u64).into_par_iter().map(|i| scaling_sample(cfg, &deltas, i)).collect();
    let c: Vec<f64> = samples.iter().map(|s| s.continuum).collect();
    let (c_mean, c_se) = mean_stderr(&c);
    let c_var = variance(&c);
    let rows: Vec<ScalingRow> = deltas
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            let x: Vec<f64> = samples.iter().map(|s| s.lattice[i]).collect();
            let (m, v) = (mean(&x), variance(&x));
            let (dm, dv) = (m - c_mean, v - c_var);
            // influence function of |Δmean| + |Δvar|
            let psi: Vec<f64> = x
                .iter()
                .zip(&c)
                .map(|(xi, ci)| dm.signum() * (xi - ci) + dv.signum() * ((xi - m).powi(2) - (ci - c_mean).powi(2)))
                .collect();
            let (n, _, _, j) = scaling_parameters(cfg.gamma, cfg.alpha, cfg.ell, d);
            ScalingRow {
                delta: d,
                sites: n,
                coupling_j: j,
                mean_log_ratio: m,
                var_log_ratio: v,
                continuum_mean: c_mean,
                continuum_var: c_var,
                gap: dm.abs() + dv.abs(),
                gap_stderr: mean_stderr(&psi).1,
            }
        })
        .collect();
    let z = normal_quantile(0.5 + 0.5 * cfg.ci_level);
    let decreasing = rows.windows(2).all(|w| {
        let slack = z * (w[0].gap_stderr.powi(2) + w[1].gap_stderr.powi(2)).sqrt();
        w[1].gap < w[0].gap + slack
    });
    let strictly_decreasing = rows.windows(2).all(|w| w[1].gap < w[0].gap);
    Ok(ScalingReport {
        config: cfg.clone(),
        config_digest: config_digest(cfg),
        rows,
        continuum_mean_stderr: c_se,
        decreasing,
        strictly_decreasing,
        elapsed: started.elapsed().as_secs_f64(),
    })
}

/// Settings for the Gaussian overlap identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapConfig {
    pub n: usize,
    pub j: f64,
    pub h: f64,
    pub delta: f64,
    pub samples: usize,
    pub seed: u64,
    /// Central finite-difference step in `λ`.
    pub lambda_step: f64,
    pub boundary: Boundary,
    /// Acceptance threshold in combined standard errors.
    pub z_threshold: f64,
}

impl OverlapConfig {
    pub fn new(n: usize, j: f64, h: f64, delta: f64, samples: usize, seed: u64) -> Self {
        Self { n, j, h, delta, samples, seed, lambda_step: 1e-3, boundary: Boundary::PlusFree, z_threshold: 3.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(invalid("N must be at least 1"));
        }
        if self.samples < 2 {
            return Err(invalid("need at least two disorder samples"));
        }
        ensure_finite("J", self.j)?;
        ensure_finite("h", self.h)?;
        ensure_finite("delta", self.delta)?;
        if self.j < 0.0 || self.delta < 0.0 {
            return Err(invalid("J and delta must be non-negative"));
        }
        ensure_positive("lambda_step", self.lambda_step)?;
        ensure_positive("z_threshold", self.z_threshold)
    }
}

/// Both sides of the overlap identity with their standard errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapReport {
    pub config: OverlapConfig,
    pub config_digest: String,
    /// `∂_λ E log Z` with `h` and `δ` both scaled by `λ`.
    pub lhs: f64,
    pub lhs_stderr: f64,
    /// `h E Σ⟨σⱼ⟩ + δ² E Σ(1 − ⟨σⱼσ'ⱼ⟩)`.
    pub rhs: f64,
    pub rhs_stderr: f64,
    pub magnetization_term: f64,
    pub overlap_term: f64,
    pub combined_stderr: f64,
    /// Standard error of the per-sample difference.
    pub paired_stderr: f64,
    pub z: f64,
    pub pass: bool,
    pub elapsed: f64,
}

/// Per-sample `(finite-difference LHS, magnetization term, overlap term)`.
pub fn overlap_sides(chain: &DiscreteChain, lambda_step: f64) -> (f64, f64, f64) {
    let up = log_partition(&chain.scaled(1.0 + lambda_step));
    let down = log_partition(&chain.scaled(1.0 - lambda_step));
    let lhs = (up - down) / (2.0 * lambda_step);
    let mag: f64 = magnetizations(chain).iter().sum();
    let over: f64 = replica_overlaps(chain).iter().map(|q| 1.0 - q).sum();
    (lhs, chain.h * mag, chain.delta * chain.delta * over)
}

pub fn overlap_identity_check(cfg: &OverlapConfig) -> Result<OverlapReport> {
    cfg.validate()?;
    let started = Instant::now();
    let sides: Vec<(f64, f64, f64)> = (0..cfg.samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::stream(cfg.seed, stream_id(tag::OVERLAP, i, Side::Right));
            let omega = (0..cfg.n).map(|_| rng::normal(&mut rng)).collect();
            let chain = DiscreteChain { n: cfg.n, j: cfg.j, h: cfg.h, delta: cfg.delta, omega, boundary: cfg.boundary };
            overlap_sides(&chain, cfg.lambda_step)
        })
        .collect();
    let lhs: Vec<f64> = sides.iter().map(|s| s.0).collect();
    let rhs: Vec<f64> = sides.iter().map(|s| s.1 + s.2).collect();
    let diff: Vec<f64> = lhs.iter().zip(&rhs).map(|(a, b)| a - b).collect();
    let (l, l_se) = mean_stderr(&lhs);
    let (r, r_se) = mean_stderr(&rhs);
    let combined = (l_se * l_se + r_se * r_se).sqrt();
    let z = if combined > 0.0 { (l - r) / combined } else if l == r { 0.0 } else { f64::INFINITY };
    Ok(OverlapReport {
        config: cfg.clone(),
        config_digest: config_digest(cfg),
        lhs: l,
        lhs_stderr: l_se,
        rhs: r,
        rhs_stderr: r_se,
        magnetization_term: mean(&sides.iter().map(|s| s.1).collect::<Vec<_>>()),
        overlap_term: mean(&sides.iter().map(|s| s.2).collect::<Vec<_>>()),
        combined_stderr: combined,
        paired_stderr: mean_stderr(&diff).1,
        z,
        pass: z.abs() <= cfg.z_threshold,
        elapsed: started.elapsed().as_secs_f64(),
    })
}
