//! Sampled bilateral Brownian paths.
//!
//! A [`SampledPath`] lives on the grid `{j·dt : j ∈ ℤ}`. It stores the integer index of its
//! first sample rather than a floating start time, so the time of sample `k` is always
//! `(start + k)·dt`. Reversal and shifts are then exact index arithmetic.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_positive, invalid, Error, Result};
use crate::rng::{self, tag, GaussianWalk, Side};

/// Relative slack used when mapping a real time onto the grid.
const GRID_SLACK: f64 = 1e-9;

/// A real-valued path sampled on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledPath {
    dt: f64,
    start: i64,
    values: Vec<f64>,
    drift: f64,
    scale: f64,
}

impl SampledPath {
    /// Builds a path whose first sample sits at grid index `start`.
    pub fn from_index(start: i64, dt: f64, values: Vec<f64>) -> Result<Self> {
        Self::with_parameters(start, dt, values, 0.0, 1.0)
    }

    /// Builds a path whose first sample sits at time `t0`, which must be a multiple of `dt`.
    pub fn new(t0: f64, dt: f64, values: Vec<f64>) -> Result<Self> {
        ensure_positive("dt", dt)?;
        ensure_finite("t0", t0)?;
        let start = grid_index(t0, dt).ok_or(Error::OffGrid { time: t0 })?;
        Self::from_index(start, dt, values)
    }

    pub(crate) fn with_parameters(
        start: i64,
        dt: f64,
        values: Vec<f64>,
        drift: f64,
        scale: f64,
    ) -> Result<Self> {
        ensure_positive("dt", dt)?;
        if values.len() < 2 {
            return Err(invalid("a path needs at least two samples"));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(invalid(format!("path values must be finite, got {v}")));
        }
        Ok(Self { dt, start, values, drift, scale })
    }

    #[inline]
    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Grid index of the first sample.
    #[inline]
    pub fn start_index(&self) -> i64 {
        self.start
    }

    /// Time of the first sample.
    #[inline]
    pub fn t0(&self) -> f64 {
        self.start as f64 * self.dt
    }

    /// Time of the last sample.
    pub fn t_end(&self) -> f64 {
        self.time(self.len() - 1)
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Drift `α` the path was generated with (zero for user-supplied values).
    pub fn drift(&self) -> f64 {
        self.drift
    }

    /// Noise scale `λ` the path was generated with (one for user-supplied values).
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Time of sample `k`.
    #[inline]
    pub fn time(&self, k: usize) -> f64 {
        (self.start + k as i64) as f64 * self.dt
    }

    /// Sample position of time `t`, if `t` is a grid point inside the window.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let j = grid_index(t, self.dt).ok_or(Error::OffGrid { time: t })?;
        let k = j - self.start;
        if k < 0 || k >= self.len() as i64 {
            return Err(Error::OffGrid { time: t });
        }
        Ok(k as usize)
    }

    /// Sample position of time zero, if the window contains it.
    pub fn origin_index(&self) -> Option<usize> {
        let k = -self.start;
        (k >= 0 && k < self.len() as i64).then_some(k as usize)
    }

    /// Increment `B(t_{k+1}) − B(t_k)`.
    #[inline]
    pub fn increment(&self, k: usize) -> f64 {
        self.values[k + 1] - self.values[k]
    }

    /// The path `t ↦ B(−t)` on the mirrored grid.
    pub fn reverse(&self) -> SampledPath {
        let mut values = self.values.clone();
        values.reverse();
        SampledPath {
            dt: self.dt,
            start: -(self.start + self.len() as i64 - 1),
            values,
            drift: -self.drift,
            scale: self.scale,
        }
    }

    /// The path `t ↦ −B(t)`.
    pub fn negate(&self) -> SampledPath {
        SampledPath {
            dt: self.dt,
            start: self.start,
            values: self.values.iter().map(|v| -v).collect(),
            drift: -self.drift,
            scale: self.scale,
        }
    }

    /// The path `s ↦ B(t + s) − B(t)`; `t` must be a grid point of the window.
    pub fn shift(&self, t: f64) -> Result<SampledPath> {
        let k = self.index_of(t)?;
        Ok(self.shift_index(k))
    }

    /// Same as [`SampledPath::shift`] with the new origin given as a sample position.
    pub fn shift_index(&self, k: usize) -> SampledPath {
        let base = self.values[k];
        SampledPath {
            dt: self.dt,
            start: -(k as i64),
            values: self.values.iter().map(|v| v - base).collect(),
            drift: self.drift,
            scale: self.scale,
        }
    }

    /// Restricts the path to sample positions `from..=to`.
    pub fn slice(&self, from: usize, to: usize) -> Result<SampledPath> {
        if to <= from || to >= self.len() {
            return Err(invalid(format!("bad slice {from}..={to} of a path of length {}", self.len())));
        }
        Ok(SampledPath {
            dt: self.dt,
            start: self.start + from as i64,
            values: self.values[from..=to].to_vec(),
            drift: self.drift,
            scale: self.scale,
        })
    }

    /// Largest `|B_s − B_u|` over grid pairs with `|s − u| ≤ a`.
    pub fn max_modulus(&self, a: f64) -> Result<f64> {
        ensure_positive("a", a)?;
        let span = ((a / self.dt) * (1.0 + GRID_SLACK)).floor();
        let m = if span >= self.len() as f64 { self.len() - 1 } else { span as usize };
        Ok(sliding_range_max(&self.values, m))
    }
}

/// Maps `t` to its grid index when `t/dt` is within rounding of an integer.
pub fn grid_index(t: f64, dt: f64) -> Option<i64> {
    let x = t / dt;
    let j = x.round();
    let tol = GRID_SLACK * x.abs().max(1.0);
    ((x - j).abs() <= tol && j.abs() < 9.0e15).then_some(j as i64)
}

/// Largest `max − min` over all windows of `m + 1` consecutive samples.
fn sliding_range_max(v: &[f64], m: usize) -> f64 {
    if m == 0 {
        return 0.0;
    }
    let mut maxq: VecDeque<usize> = VecDeque::new();
    let mut minq: VecDeque<usize> = VecDeque::new();
    let mut best = 0.0f64;
    for (k, &x) in v.iter().enumerate() {
        while maxq.back().is_some_and(|&j| v[j] <= x) {
            maxq.pop_back();
        }
        maxq.push_back(k);
        while minq.back().is_some_and(|&j| v[j] >= x) {
            minq.pop_back();
        }
        minq.push_back(k);
        if k >= m {
            let lo = k - m;
            while maxq.front().is_some_and(|&j| j < lo) {
                maxq.pop_front();
            }
            while minq.front().is_some_and(|&j| j < lo) {
                minq.pop_front();
            }
        }
        best = best.max(v[maxq[0]] - v[minq[0]]);
    }
    best
}

/// Grid index range `[lo, hi]` covered by the window `[t_min, t_max]`.
pub fn grid_range(t_min: f64, t_max: f64, dt: f64) -> Result<(i64, i64)> {
    ensure_positive("dt", dt)?;
    ensure_finite("t_min", t_min)?;
    ensure_finite("t_max", t_max)?;
    if t_min > t_max {
        return Err(invalid(format!("empty window [{t_min}, {t_max}]")));
    }
    let lo = (t_min / dt - GRID_SLACK * (t_min / dt).abs().max(1.0)).ceil();
    let hi = (t_max / dt + GRID_SLACK * (t_max / dt).abs().max(1.0)).floor();
    if hi - lo < 1.0 {
        return Err(invalid(format!("window [{t_min}, {t_max}] holds fewer than two grid points at dt = {dt}")));
    }
    if lo.abs() > 9.0e15 || hi.abs() > 9.0e15 {
        return Err(invalid("window too large for the grid"));
    }
    Ok((lo as i64, hi as i64))
}

/// Unit Brownian motion `W` on grid indices `lo..=hi`, built from two independent one-sided
/// walks glued at the origin. The right walk reads stream `(seed, right)`, the left walk
/// reads stream `(seed, left)`. Windows that miss the origin start from the marginal law
/// of `W` at the nearest end.
pub fn unit_bilateral(seed: u64, right: u64, left: u64, lo: i64, hi: i64, dt: f64) -> Vec<f64> {
    let n = (hi - lo + 1) as usize;
    let mut values = Vec::with_capacity(n);
    if lo >= 0 {
        let mut walk = GaussianWalk::new(rng::stream(seed, right), dt);
        let first = if lo > 0 { walk.draw((lo as f64 * dt).sqrt()) } else { 0.0 };
        let mut walk = walk.with_start(first);
        values.push(first);
        for _ in 1..n {
            values.push(walk.step());
        }
    } else if hi <= 0 {
        let mut walk = GaussianWalk::new(rng::stream(seed, left), dt);
        let first = if hi < 0 { walk.draw((-hi as f64 * dt).sqrt()) } else { 0.0 };
        let mut walk = walk.with_start(first);
        values.push(first);
        for _ in 1..n {
            values.push(walk.step());
        }
        values.reverse();
    } else {
        let mut lw = GaussianWalk::new(rng::stream(seed, left), dt);
        values.extend((0..-lo).map(|_| lw.step()));
        values.reverse();
        values.push(0.0);
        let mut rw = GaussianWalk::new(rng::stream(seed, right), dt);
        values.extend((0..hi).map(|_| rw.step()));
    }
    values
}

/// Samples `α·t + λ·W(t)` on the grid points of `[t_min, t_max]`, with `W` a bilateral
/// Brownian motion pinned at `W(0) = 0`.
pub fn sample_bilateral(
    seed: u64,
    t_min: f64,
    t_max: f64,
    dt: f64,
    alpha: f64,
    scale: f64,
) -> Result<SampledPath> {
    ensure_finite("alpha", alpha)?;
    ensure_finite("scale", scale)?;
    let (lo, hi) = grid_range(t_min, t_max, dt)?;
    let right = rng::stream_id(tag::PATH, 0, Side::Right);
    let left = rng::stream_id(tag::PATH, 0, Side::Left);
    let unit = unit_bilateral(seed, right, left, lo, hi, dt);
    Ok(assemble(unit, lo, dt, alpha, scale))
}

/// Applies drift and scale to a unit walk sampled from grid index `lo`.
pub(crate) fn assemble(unit: Vec<f64>, lo: i64, dt: f64, alpha: f64, scale: f64) -> SampledPath {
    let values = if alpha == 0.0 {
        if scale == 1.0 {
            unit
        } else {
            unit.into_iter().map(|w| scale * w).collect()
        }
    } else {
        unit.into_iter()
            .enumerate()
            .map(|(k, w)| alpha * ((lo + k as i64) as f64 * dt) + scale * w)
            .collect()
    };
    SampledPath { dt, start: lo, values, drift: alpha, scale }
}
