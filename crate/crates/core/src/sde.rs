//! One-sided processes `l`, `r`, the magnetization field and the simplified model.
//!
//! `l` solves `dl = −2ε·sinh(l)·dt + 2·dB` with `ε = e^{−Γ}`. The integrator is a Strang
//! splitting whose drift part is the exact flow `tanh(l/2) ↦ e^{−2ετ}·tanh(l/2)`, which
//! extends continuously to `l = ±∞`. `r` is obtained by running the same scheme leftward.
//! The linear system for `(X1, X2)` is kept as an independent Euler–Maruyama cross-check.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, invalid, Error, Result};
use crate::extrema::{ExtremumKind, ForwardScanner, Record};
use crate::path::SampledPath;

/// `ε = e^{−Γ}`; `Γ = +∞` is allowed and gives `ε = 0`.
pub fn epsilon(gamma: f64) -> f64 {
    (-gamma).exp()
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("gamma must be positive, got {gamma}")))
    }
}

/// `ln(1 + e^z)` without overflow.
#[inline]
pub fn softplus(z: f64) -> f64 {
    if z > 35.0 {
        z + (-z).exp()
    } else {
        z.exp().ln_1p()
    }
}

/// `ln(e^a + e^b)`.
#[inline]
pub fn logaddexp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + (-(a - b).abs()).exp().ln_1p()
}

/// One Strang step of size `h`: half drift flow, noise kick `2ΔB`, half drift flow.
#[derive(Debug, Clone, Copy)]
pub struct StrangStepper {
    q: f64,
    one_minus_q: f64,
}

impl StrangStepper {
    pub fn new(gamma: f64, h: f64) -> Self {
        let eps_half = epsilon(gamma) * h;
        // two half steps of length h/2 with rate 2ε each
        Self { q: (-eps_half).exp(), one_minus_q: -(-eps_half).exp_m1() }
    }

    /// Exact drift flow over half a step.
    #[inline]
    pub fn flow(&self, l: f64) -> f64 {
        if self.one_minus_q == 0.0 {
            return l;
        }
        let a = l.abs();
        let q = self.q;
        let y = if a == f64::INFINITY {
            (1.0 + q).ln() - self.one_minus_q.ln()
        } else if a < 1.0 {
            2.0 * (q * (0.5 * a).tanh()).atanh()
        } else {
            let e = (-a).exp();
            let w = 2.0 * e / (1.0 + e);
            (1.0 + q - q * w).ln() - (self.one_minus_q + q * w).ln()
        };
        y.copysign(l)
    }

    #[inline]
    pub fn step(&self, l: f64, db: f64) -> f64 {
        self.flow(self.flow(l) + 2.0 * db)
    }
}

/// Integrator metadata carried by every trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scheme {
    pub step: f64,
    pub splitting: String,
}

impl Scheme {
    fn strang(dt: f64) -> Self {
        Self { step: dt, splitting: "strang: exact sinh drift flow / noise kick / exact flow".into() }
    }
}

/// Grid samples of `l` (or `r`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdeTrajectory {
    /// Grid index of the first sample.
    pub start: i64,
    pub dt: f64,
    pub gamma: f64,
    pub epsilon: f64,
    pub values: Vec<f64>,
    pub scheme: Scheme,
}

impl SdeTrajectory {
    pub fn time(&self, k: usize) -> f64 {
        (self.start + k as i64) as f64 * self.dt
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value at grid time `t`.
    pub fn at(&self, t: f64) -> Result<f64> {
        let j = crate::path::grid_index(t, self.dt).ok_or(Error::OffGrid { time: t })?;
        let k = j - self.start;
        if k < 0 || k as usize >= self.len() {
            return Err(Error::OffGrid { time: t });
        }
        Ok(self.values[k as usize])
    }
}

/// Runs `l` from sample `from` (value `l0`) to sample `to ≥ from` and returns `l` there.
pub fn evolve_l(path: &SampledPath, stepper: &StrangStepper, from: usize, to: usize, l0: f64) -> f64 {
    let v = path.values();
    let mut l = l0;
    for k in from..to {
        l = stepper.step(l, v[k + 1] - v[k]);
    }
    l
}

/// Runs `r` leftward from sample `from` (value `r0`) to sample `to ≤ from`.
pub fn evolve_r(path: &SampledPath, stepper: &StrangStepper, from: usize, to: usize, r0: f64) -> f64 {
    let v = path.values();
    let mut r = r0;
    for k in (to + 1..=from).rev() {
        r = stepper.step(r, v[k] - v[k - 1]);
    }
    r
}

/// `l^{(a, l0)}` on the grid points of `[a, t_end]`.
pub fn integrate_l(path: &SampledPath, gamma: f64, a: f64, l0: f64) -> Result<SdeTrajectory> {
    check_gamma(gamma)?;
    if l0.is_nan() {
        return Err(invalid("initial condition is NaN"));
    }
    let ka = path.index_of(a)?;
    let stepper = StrangStepper::new(gamma, path.dt());
    let v = path.values();
    let mut values = Vec::with_capacity(path.len() - ka);
    let mut l = l0;
    values.push(l);
    for k in ka..path.len() - 1 {
        l = stepper.step(l, v[k + 1] - v[k]);
        values.push(l);
    }
    Ok(SdeTrajectory {
        start: path.start_index() + ka as i64,
        dt: path.dt(),
        gamma,
        epsilon: epsilon(gamma),
        values,
        scheme: Scheme::strang(path.dt()),
    })
}

/// `r^{(b, r0)}` on the grid points of `[t_start, b]`: the `l` scheme applied to
/// `s ↦ −B(−s)` from `−b`, read back on the original time axis.
pub fn integrate_r(path: &SampledPath, gamma: f64, b: f64, r0: f64) -> Result<SdeTrajectory> {
    check_gamma(gamma)?;
    if r0.is_nan() {
        return Err(invalid("initial condition is NaN"));
    }
    let kb = path.index_of(b)?;
    let stepper = StrangStepper::new(gamma, path.dt());
    let v = path.values();
    let mut values = vec![0.0; kb + 1];
    let mut r = r0;
    values[kb] = r;
    for k in (1..=kb).rev() {
        r = stepper.step(r, v[k] - v[k - 1]);
        values[k - 1] = r;
    }
    Ok(SdeTrajectory {
        start: path.start_index(),
        dt: path.dt(),
        gamma,
        epsilon: epsilon(gamma),
        values,
        scheme: Scheme::strang(path.dt()),
    })
}

/// Probability of spin up given the field `m`.
#[inline]
pub fn p_up(m: f64) -> f64 {
    1.0 / (1.0 + (-m).exp())
}

/// `(m_t, p_up_t)` with `m = l + r` on a common grid.
pub fn magnetization(l: &SdeTrajectory, r: &SdeTrajectory) -> Result<Vec<(f64, f64)>> {
    if l.start != r.start || l.len() != r.len() || l.dt != r.dt {
        return Err(Error::GridMismatch(format!(
            "l covers {} samples from index {}, r covers {} from index {}",
            l.len(),
            l.start,
            r.len(),
            r.start
        )));
    }
    Ok(l.values
        .iter()
        .zip(&r.values)
        .map(|(a, b)| {
            let m = a + b;
            (m, p_up(m))
        })
        .collect())
}

/// Substep control for the linear system: each grid step is split so that the stiff rate
/// times the substep stays below `kappa`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearSystemConfig {
    pub kappa: f64,
    pub max_substeps: usize,
}

impl Default for LinearSystemConfig {
    fn default() -> Self {
        Self { kappa: 0.01, max_substeps: 100_000 }
    }
}

/// Euler–Maruyama for `(y1, y2) = (log X1, log X2)`:
/// `dy1 = ε e^{y2−y1} dt`, `dy2 = ε e^{y1−y2} dt − 2 dB`, from `(X1, X2) = (1, 0)`.
#[derive(Debug, Clone, Copy)]
pub struct LogLinearSystem {
    eps: f64,
    h: f64,
    cfg: LinearSystemConfig,
    pub y1: f64,
    pub y2: f64,
}

impl LogLinearSystem {
    pub fn new(gamma: f64, h: f64, cfg: LinearSystemConfig) -> Self {
        Self { eps: epsilon(gamma), h, cfg, y1: 0.0, y2: f64::NEG_INFINITY }
    }

    /// Advances one grid step with increment `db`.
    pub fn step(&mut self, db: f64) {
        let (eps, h) = (self.eps, self.h);
        if self.y2 == f64::NEG_INFINITY {
            // X2 starts at zero: trapezoid rule for X2(h) = ε ∫ e^{−2(B_h − B_s)} ds.
            self.y2 = (eps * 0.5 * h * (1.0 + (-2.0 * db).exp())).ln();
            return;
        }
        let d = self.y1 - self.y2;
        let stiff = eps * h * d.abs().exp();
        let n = ((stiff / self.cfg.kappa).ceil() as usize).clamp(1, self.cfg.max_substeps);
        let hs = h / n as f64;
        let dbs = db / n as f64;
        for _ in 0..n {
            let d = self.y1 - self.y2;
            let d1 = eps * (-d).exp() * hs;
            let d2 = eps * d.exp() * hs - 2.0 * dbs;
            self.y1 += d1;
            self.y2 += d2;
        }
    }

    pub fn l_check(&self) -> f64 {
        self.y1 - self.y2
    }
}

/// Output of [`integrate_linear_system`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSystemTrajectory {
    pub start: i64,
    pub dt: f64,
    pub gamma: f64,
    /// `log X1 = ε ∫ e^{−l}`.
    pub log_x1: Vec<f64>,
    pub log_x2: Vec<f64>,
    /// `log(X1/X2)`, an independent estimate of `l^{(a, +∞)}`.
    pub l_check: Vec<f64>,
}

pub fn integrate_linear_system(path: &SampledPath, gamma: f64, a: f64) -> Result<LinearSystemTrajectory> {
    integrate_linear_system_with(path, gamma, a, LinearSystemConfig::default())
}

pub fn integrate_linear_system_with(
    path: &SampledPath,
    gamma: f64,
    a: f64,
    cfg: LinearSystemConfig,
) -> Result<LinearSystemTrajectory> {
    check_gamma(gamma)?;
    if !(cfg.kappa > 0.0) || cfg.max_substeps == 0 {
        return Err(invalid("substep control needs kappa > 0 and at least one substep"));
    }
    let ka = path.index_of(a)?;
    let v = path.values();
    let mut sys = LogLinearSystem::new(gamma, path.dt(), cfg);
    let n = path.len() - ka;
    let mut out = LinearSystemTrajectory {
        start: path.start_index() + ka as i64,
        dt: path.dt(),
        gamma,
        log_x1: Vec::with_capacity(n),
        log_x2: Vec::with_capacity(n),
        l_check: Vec::with_capacity(n),
    };
    let mut push = |s: &LogLinearSystem| {
        out.log_x1.push(s.y1);
        out.log_x2.push(s.y2);
        out.l_check.push(s.l_check());
    };
    push(&sys);
    for k in ka..path.len() - 1 {
        sys.step(v[k + 1] - v[k]);
        push(&sys);
    }
    Ok(out)
}

/// `log Z^f` for the path restricted to `[t_start, t_end]` (plus left boundary, free right
/// boundary): `B_ℓ − εℓ + log(X1 + X2)`, with `B` read from the path including its drift.
pub fn log_partition_free(path: &SampledPath, gamma: f64, cfg: LinearSystemConfig) -> Result<f64> {
    check_gamma(gamma)?;
    let v = path.values();
    let mut sys = LogLinearSystem::new(gamma, path.dt(), cfg);
    for k in 0..path.len() - 1 {
        sys.step(v[k + 1] - v[k]);
    }
    let ell = (path.len() - 1) as f64 * path.dt();
    Ok(v[path.len() - 1] - v[0] - epsilon(gamma) * ell + logaddexp(sys.y1, sys.y2))
}

/// Clamp scheme for the reflected simplified model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReflectedTrajectory {
    pub start: i64,
    pub dt: f64,
    pub gamma: f64,
    pub values: Vec<f64>,
}

/// `x ← clamp(x + 2ΔB, −Γ, Γ)` from `x(a) = Γ`.
pub fn reflect_simplified(path: &SampledPath, gamma: f64, a: f64) -> Result<ReflectedTrajectory> {
    check_gamma(gamma)?;
    ensure_finite("gamma", gamma)?;
    let ka = path.index_of(a)?;
    let v = path.values();
    let mut x = gamma;
    let mut values = Vec::with_capacity(path.len() - ka);
    values.push(x);
    for k in ka..path.len() - 1 {
        x = (x + 2.0 * (v[k + 1] - v[k])).clamp(-gamma, gamma);
        values.push(x);
    }
    Ok(ReflectedTrajectory { start: path.start_index() + ka as i64, dt: path.dt(), gamma, values })
}

/// Scans `values` (relative to the first one) until the first stop time.
pub fn first_record<I: Iterator<Item = f64>>(gamma: f64, values: I) -> Option<Record> {
    let mut sc = ForwardScanner::new(gamma);
    for (k, v) in values.enumerate() {
        if let Some(rec) = sc.push(k as u64, v) {
            return Some(rec);
        }
    }
    None
}

/// Stationary values of the simplified model at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimplifiedClosedForm {
    pub l_hat: f64,
    pub r_hat: f64,
    pub m_hat: f64,
    /// `sign(m̂₀)` in {−1, 0, +1}.
    pub sign: i8,
}

/// Combines the first backward record `(kind, value)` and the first forward record into
/// `(l̂₀, r̂₀, m̂₀)`, values measured from `B_0`.
pub fn closed_form_from_records(gamma: f64, left: (ExtremumKind, f64), right: (ExtremumKind, f64)) -> SimplifiedClosedForm {
    let l_hat = left.0.arrow() as f64 * gamma - 2.0 * left.1;
    let r_hat = -(right.0.arrow() as f64) * gamma + 2.0 * right.1;
    let m_hat = l_hat + r_hat;
    let sign = if m_hat > 0.0 {
        1
    } else if m_hat < 0.0 {
        -1
    } else {
        0
    };
    SimplifiedClosedForm { l_hat, r_hat, m_hat, sign }
}

/// `l̂₀ = a′₁Γ − 2B_{v₁}`, `r̂₀ = −a₁Γ + 2B_{u₁}` from the first one-sided extrema around the origin.
pub fn simplified_closed_form(path: &SampledPath, gamma: f64) -> Result<SimplifiedClosedForm> {
    check_gamma(gamma)?;
    let k0 = path
        .origin_index()
        .ok_or_else(|| invalid("the simplified closed form needs a window containing time 0"))?;
    let v = path.values();
    let b0 = v[k0];
    let right = first_record(gamma, v[k0..].iter().map(|x| x - b0))
        .ok_or_else(|| Error::WindowExhausted("no stop time right of the origin".into()))?;
    let left = first_record(gamma, v[..=k0].iter().rev().map(|x| x - b0))
        .ok_or_else(|| Error::WindowExhausted("no stop time left of the origin".into()))?;
    Ok(closed_form_from_records(gamma, (left.kind, left.event_value), (right.kind, right.event_value)))
}

/// Lower and upper envelopes of `l^{(a, x)}_t` for every grid `t > a`, entry `k` referring
/// to sample `ka + 1 + k`. Integrals are trapezoid sums evaluated in the log domain.
pub fn envelope_bounds_path(path: &SampledPath, gamma: f64, a: f64, x: f64) -> Result<Vec<(f64, f64)>> {
    check_gamma(gamma)?;
    if x.is_nan() {
        return Err(invalid("x is NaN"));
    }
    let ka = path.index_of(a)?;
    if ka + 1 >= path.len() {
        return Err(invalid("no grid time after a"));
    }
    if x == f64::NEG_INFINITY {
        let flipped = envelope_bounds_path(&path.negate(), gamma, a, f64::INFINITY)?;
        return Ok(flipped.into_iter().map(|(lo, up)| (-up, -lo)).collect());
    }
    let eps = epsilon(gamma);
    let log_eps = eps.ln();
    let h = path.dt();
    let log_half_h = (0.5 * h).ln();
    let v = path.values();
    let ba = v[ka];
    let mut out = Vec::with_capacity(path.len() - ka - 1);

    let mut log_i1 = f64::NEG_INFINITY;
    let mut log_i2 = f64::NEG_INFINITY;
    let mut inner = 0.0;
    let mut dd = 0.0;
    let mut log_j = f64::NEG_INFINITY;
    let mut theta_prev = x;
    for k in ka + 1..path.len() {
        let b_prev = v[k - 1] - ba;
        let b = v[k] - ba;
        log_i1 = logaddexp(log_i1, log_half_h + logaddexp(2.0 * b_prev, 2.0 * b));
        log_i2 = logaddexp(log_i2, log_half_h + logaddexp(-2.0 * b_prev, -2.0 * b));
        let inner_next = (-2.0 * (b - b_prev)).exp() * inner + 0.5 * h * ((2.0 * (b_prev - b)).exp() + 1.0);
        dd += 0.5 * h * (inner + inner_next);
        inner = inner_next;
        if x == f64::INFINITY {
            let log_tail = log_i1 - 2.0 * b;
            let lower = -log_eps - log_tail;
            let upper = -log_eps + eps * eps * dd - log_tail;
            out.push((lower, upper));
        } else {
            let lower = x + 2.0 * b - softplus(log_eps + x + log_i1);
            let theta = x + 2.0 * b + (log_eps - x + log_i2).exp() + eps * eps * dd;
            log_j = logaddexp(log_j, log_half_h + logaddexp(theta_prev, theta));
            theta_prev = theta;
            let upper = theta - softplus(log_eps + log_j);
            out.push((lower, upper));
        }
    }
    Ok(out)
}

/// Lower and upper envelopes of `l^{(a, x)}_t` at a single grid time `t > a`.
pub fn envelope_bounds(path: &SampledPath, gamma: f64, a: f64, x: f64, t: f64) -> Result<(f64, f64)> {
    let ka = path.index_of(a)?;
    let kt = path.index_of(t)?;
    if kt <= ka {
        return Err(invalid(format!("t = {t} must exceed a = {a}")));
    }
    let sub = path.slice(0, kt)?;
    let all = envelope_bounds_path(&sub, gamma, a, x)?;
    Ok(all[kt - ka - 1])
}

/// Largest violation of the two-sided bounds that hold for any solution restarted at
/// sample `kt` with its own value: returns `max_k max(lower_k − l_k, l_k − upper_k, 0)`.
pub fn deterministic_bound_violation(path: &SampledPath, traj: &SdeTrajectory, kt: usize) -> Result<f64> {
    let offset = traj.start - path.start_index();
    if offset < 0 || traj.dt != path.dt() {
        return Err(Error::GridMismatch("trajectory does not lie on the path grid".into()));
    }
    let offset = offset as usize;
    if kt >= traj.len() || offset + traj.len() > path.len() {
        return Err(Error::GridMismatch("restart index outside the trajectory".into()));
    }
    let l_t = traj.values[kt];
    if !l_t.is_finite() {
        return Err(invalid("restart value must be finite"));
    }
    let log_eps = traj.epsilon.ln();
    let log_half_h = (0.5 * path.dt()).ln();
    let v = path.values();
    let bt = v[offset + kt];
    let mut log_i1 = f64::NEG_INFINITY;
    let mut log_i2 = f64::NEG_INFINITY;
    let mut worst = 0.0f64;
    for k in kt + 1..traj.len() {
        let b_prev = v[offset + k - 1] - bt;
        let b = v[offset + k] - bt;
        log_i1 = logaddexp(log_i1, log_half_h + logaddexp(2.0 * b_prev, 2.0 * b));
        log_i2 = logaddexp(log_i2, log_half_h + logaddexp(-2.0 * b_prev, -2.0 * b));
        let base = l_t + 2.0 * b;
        let lower = base - softplus(log_eps + l_t + log_i1);
        let upper = base + softplus(log_eps - l_t + log_i2);
        let l = traj.values[k];
        worst = worst.max(lower - l).max(l - upper);
    }
    Ok(worst)
}

/// Largest violation of the envelope bounds by `traj`, which must start at `a` with value `x`.
pub fn envelope_violation(path: &SampledPath, traj: &SdeTrajectory) -> Result<f64> {
    let a = traj.time(0);
    let bounds = envelope_bounds_path(path, traj.gamma, a, traj.values[0])?;
    let mut worst = 0.0f64;
    for (k, (lo, up)) in bounds.iter().enumerate() {
        let Some(&l) = traj.values.get(k + 1) else { break };
        worst = worst.max(lo - l).max(l - up);
    }
    Ok(worst)
}

/// Result of [`contraction_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContractionCheck {
    /// Largest `tanh(Δ_t/4) − e^{−2ε(t−s)} tanh(Δ_s/4)(1 + slack)` over checked pairs.
    pub max_violation: f64,
    /// Largest `lower − upper`, zero when the order is kept.
    pub max_order_violation: f64,
}

/// Checks the tanh contraction between `upper` (started above) and `lower` on consecutive
/// grid pairs and on pairs `(first sample, t)`.
pub fn contraction_check(lower: &SdeTrajectory, upper: &SdeTrajectory, slack: f64) -> Result<ContractionCheck> {
    if lower.start != upper.start || lower.len() != upper.len() || lower.dt != upper.dt {
        return Err(Error::GridMismatch("contraction needs trajectories on one grid".into()));
    }
    let rate = 2.0 * lower.epsilon;
    let th = |k: usize| ((upper.values[k] - lower.values[k]) / 4.0).tanh();
    let first = th(0);
    let mut worst = 0.0f64;
    let mut order = 0.0f64;
    for k in 1..lower.len() {
        let crossing = lower.values[k] - upper.values[k];
        order = if crossing.is_nan() { f64::INFINITY } else { order.max(crossing) };
        let now = th(k);
        let step = (-rate * lower.dt).exp() * th(k - 1) * (1.0 + slack);
        let from_start = (-rate * lower.dt * k as f64).exp() * first * (1.0 + slack);
        worst = worst.max(now - step).max(now - from_start);
    }
    Ok(ContractionCheck { max_violation: worst, max_order_violation: order })
}
