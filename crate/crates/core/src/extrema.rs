//! Γ-extrema of sampled paths.
//!
//! A grid point is a Γ-maximum when on both sides the path falls more than Γ below it
//! before rising above it (dually for minima). [`ForwardScanner`] extracts them in one
//! streaming pass with O(1) state; the forward, backward and bilateral procedures are
//! thin drivers around it. [`brute_force_extrema`] checks the definition directly and is
//! used as an oracle.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, invalid, Error, Result};
use crate::path::SampledPath;

/// Whether an extremum is a maximum or a minimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtremumKind {
    Max,
    Min,
}

impl ExtremumKind {
    /// `+1` for a maximum and `−1` for a minimum.
    #[inline]
    pub fn arrow(self) -> i8 {
        match self {
            ExtremumKind::Max => 1,
            ExtremumKind::Min => -1,
        }
    }

    pub fn opposite(self) -> Self {
        match self {
            ExtremumKind::Max => ExtremumKind::Min,
            ExtremumKind::Min => ExtremumKind::Max,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ExtremumKind::Max => "max",
            ExtremumKind::Min => "min",
        }
    }
}

/// Direction of the move that triggered a stop time, in scan order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// A rise of more than Γ above the running minimum.
    Up,
    /// A drop of more than Γ below the running maximum.
    Down,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtremaEvent {
    pub index: usize,
    pub time: f64,
    pub value: f64,
    pub kind: ExtremumKind,
    pub provisional: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StopTime {
    pub index: usize,
    pub time: f64,
    pub direction: Direction,
}

/// Outcome flag of a one-sided scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanStatus {
    Complete,
    /// The window ended before the first stop time.
    NoStopTime,
}

/// Ordered Γ-extrema of a path together with the stop times that confirmed them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremaSequence {
    pub gamma: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub events: Vec<ExtremaEvent>,
    pub stop_times: Vec<StopTime>,
    pub status: ScanStatus,
}

impl ExtremaSequence {
    pub fn confirmed(&self) -> impl Iterator<Item = &ExtremaEvent> + '_ {
        self.events.iter().filter(|e| !e.provisional)
    }

    pub fn confirmed_events(&self) -> Vec<ExtremaEvent> {
        self.confirmed().copied().collect()
    }

    /// `(index, kind)` of every confirmed event.
    pub fn confirmed_keys(&self) -> Vec<(usize, ExtremumKind)> {
        self.confirmed().map(|e| (e.index, e.kind)).collect()
    }
}

/// What the scanner reports at each stop time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Record {
    pub stop_index: u64,
    pub direction: Direction,
    pub event_index: u64,
    pub event_value: f64,
    pub kind: ExtremumKind,
    /// True for the first record, whose extremum is only provisional.
    pub first: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Phase {
    Empty,
    Initial,
    SeekMax,
    SeekMin,
}

/// Streaming forward Neveu–Pitman scan.
///
/// Feed samples in scan order with [`ForwardScanner::push`]; a [`Record`] comes back at
/// every stop time. Ties in the running extremum keep the earliest sample in scan order.
#[derive(Debug, Clone)]
pub struct ForwardScanner {
    gamma: f64,
    phase: Phase,
    min_v: f64,
    min_i: u64,
    max_v: f64,
    max_i: u64,
}

impl ForwardScanner {
    pub fn new(gamma: f64) -> Self {
        Self { gamma, phase: Phase::Empty, min_v: 0.0, min_i: 0, max_v: 0.0, max_i: 0 }
    }

    #[inline]
    pub fn push(&mut self, index: u64, v: f64) -> Option<Record> {
        match self.phase {
            Phase::SeekMax => {
                if self.max_v - v > self.gamma {
                    let rec = self.record(index, Direction::Down, self.max_i, self.max_v, ExtremumKind::Max, false);
                    self.phase = Phase::SeekMin;
                    self.min_v = v;
                    self.min_i = index;
                    return Some(rec);
                }
                if v > self.max_v {
                    self.max_v = v;
                    self.max_i = index;
                }
                None
            }
            Phase::SeekMin => {
                if v - self.min_v > self.gamma {
                    let rec = self.record(index, Direction::Up, self.min_i, self.min_v, ExtremumKind::Min, false);
                    self.phase = Phase::SeekMax;
                    self.max_v = v;
                    self.max_i = index;
                    return Some(rec);
                }
                if v < self.min_v {
                    self.min_v = v;
                    self.min_i = index;
                }
                None
            }
            Phase::Initial => {
                if v - self.min_v > self.gamma {
                    let rec = self.record(index, Direction::Up, self.min_i, self.min_v, ExtremumKind::Min, true);
                    self.phase = Phase::SeekMax;
                    self.max_v = v;
                    self.max_i = index;
                    return Some(rec);
                }
                if self.max_v - v > self.gamma {
                    let rec = self.record(index, Direction::Down, self.max_i, self.max_v, ExtremumKind::Max, true);
                    self.phase = Phase::SeekMin;
                    self.min_v = v;
                    self.min_i = index;
                    return Some(rec);
                }
                if v < self.min_v {
                    self.min_v = v;
                    self.min_i = index;
                }
                if v > self.max_v {
                    self.max_v = v;
                    self.max_i = index;
                }
                None
            }
            Phase::Empty => {
                self.phase = Phase::Initial;
                self.min_v = v;
                self.max_v = v;
                self.min_i = index;
                self.max_i = index;
                None
            }
        }
    }

    fn record(&self, stop: u64, direction: Direction, i: u64, v: f64, kind: ExtremumKind, first: bool) -> Record {
        Record { stop_index: stop, direction, event_index: i, event_value: v, kind, first }
    }

    /// The extremum being tracked since the last stop time, if any stop time occurred.
    pub fn candidate(&self) -> Option<(u64, f64, ExtremumKind)> {
        match self.phase {
            Phase::SeekMax => Some((self.max_i, self.max_v, ExtremumKind::Max)),
            Phase::SeekMin => Some((self.min_i, self.min_v, ExtremumKind::Min)),
            _ => None,
        }
    }

    /// Whether at least one stop time has been seen.
    pub fn has_stopped(&self) -> bool {
        matches!(self.phase, Phase::SeekMax | Phase::SeekMin)
    }
}

/// Runs the scanner over `indices` and returns events and stop times in scan order.
fn scan<I>(path: &SampledPath, gamma: f64, indices: I) -> (Vec<ExtremaEvent>, Vec<StopTime>)
where
    I: Iterator<Item = usize>,
{
    let v = path.values();
    let mut sc = ForwardScanner::new(gamma);
    let mut events = Vec::new();
    let mut stops = Vec::new();
    for k in indices {
        if let Some(rec) = sc.push(k as u64, v[k]) {
            let i = rec.event_index as usize;
            events.push(ExtremaEvent {
                index: i,
                time: path.time(i),
                value: rec.event_value,
                kind: rec.kind,
                provisional: rec.first,
            });
            stops.push(StopTime { index: k, time: path.time(k), direction: rec.direction });
        }
    }
    if let Some((i, value, kind)) = sc.candidate() {
        let i = i as usize;
        events.push(ExtremaEvent { index: i, time: path.time(i), value, kind, provisional: true });
    }
    (events, stops)
}

fn sequence(path: &SampledPath, gamma: f64, events: Vec<ExtremaEvent>, stops: Vec<StopTime>) -> ExtremaSequence {
    let status = if stops.is_empty() { ScanStatus::NoStopTime } else { ScanStatus::Complete };
    ExtremaSequence { gamma, t_start: path.t0(), t_end: path.t_end(), events, stop_times: stops, status }
}

/// Forward Neveu–Pitman procedure started at the first sample of `path`.
///
/// The first event and the trailing candidate are flagged provisional. A window without
/// any stop time yields an empty sequence with [`ScanStatus::NoStopTime`].
pub fn forward_neveu_pitman(path: &SampledPath, gamma: f64) -> Result<ExtremaSequence> {
    ensure_positive("gamma", gamma)?;
    let (events, stops) = scan(path, gamma, 0..path.len());
    Ok(sequence(path, gamma, events, stops))
}

/// Backward Neveu–Pitman procedure started at the last sample of `path`.
///
/// Events are returned in increasing time. Stop-time directions refer to the leftward
/// scan.
pub fn backward_neveu_pitman(path: &SampledPath, gamma: f64) -> Result<ExtremaSequence> {
    ensure_positive("gamma", gamma)?;
    let (mut events, mut stops) = scan(path, gamma, (0..path.len()).rev());
    events.reverse();
    stops.reverse();
    Ok(sequence(path, gamma, events, stops))
}

/// How the two provisional events around the origin were resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchCase {
    /// Opposite kinds, gap above Γ: both events are extrema.
    OppositeFar,
    /// Opposite kinds, gap at most Γ: neither event is an extremum.
    OppositeNear,
    /// Same kind, the forward event is the more extreme one.
    SameForward,
    /// Same kind, the backward event is the more extreme one.
    SameBackward,
    /// Same kind and equal values: the origin itself is an extremum.
    Degenerate,
}

/// Bilateral Γ-extrema around the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BilateralExtrema {
    /// Confirmed events only.
    pub sequence: ExtremaSequence,
    /// Fisher label of the origin, in {−1, 0, +1}.
    pub origin_label: i8,
    pub case: MatchCase,
    /// First event of the forward scan from the origin.
    pub forward_first: ExtremaEvent,
    /// First event of the backward scan from the origin.
    pub backward_first: ExtremaEvent,
}

impl BilateralExtrema {
    /// Whether the origin label hit the measure-zero `0` case.
    pub fn is_degenerate(&self) -> bool {
        self.case == MatchCase::Degenerate
    }
}

/// Merges a forward scan on `[0, t_max]` with a backward scan on `[t_min, 0]` and resolves
/// the two events nearest the origin.
pub fn bilateral_extrema(path: &SampledPath, gamma: f64) -> Result<BilateralExtrema> {
    ensure_positive("gamma", gamma)?;
    let k0 = path
        .origin_index()
        .ok_or_else(|| invalid("bilateral extrema need a window containing time 0"))?;
    let (fwd, fstops) = scan(path, gamma, k0..path.len());
    if fstops.is_empty() {
        return Err(Error::WindowExhausted(format!(
            "no stop time on the right of the origin within [0, {}]",
            path.t_end()
        )));
    }
    let (mut bwd, mut bstops) = scan(path, gamma, (0..=k0).rev());
    if bstops.is_empty() {
        return Err(Error::WindowExhausted(format!(
            "no stop time on the left of the origin within [{}, 0]",
            path.t0()
        )));
    }
    bwd.reverse();
    bstops.reverse();

    let u1 = fwd[0];
    let v1 = *bwd.last().expect("a stop time yields an event");
    let a1 = u1.kind.arrow();
    let gap = u1.value - v1.value;
    let confirm = |e: ExtremaEvent| ExtremaEvent { provisional: false, ..e };
    let (case, label, middle): (MatchCase, i8, Vec<ExtremaEvent>) = if u1.kind != v1.kind {
        if gap.abs() > gamma {
            (MatchCase::OppositeFar, a1, vec![confirm(v1), confirm(u1)])
        } else {
            (MatchCase::OppositeNear, -a1, vec![])
        }
    } else if gap != 0.0 && (gap > 0.0) == (a1 > 0) {
        (MatchCase::SameForward, a1, vec![confirm(u1)])
    } else if gap != 0.0 {
        (MatchCase::SameBackward, -a1, vec![confirm(v1)])
    } else if u1.index == v1.index {
        (MatchCase::Degenerate, 0, vec![confirm(u1)])
    } else {
        (MatchCase::Degenerate, 0, vec![confirm(v1), confirm(u1)])
    };

    let mut events: Vec<ExtremaEvent> = bwd.iter().filter(|e| !e.provisional).copied().collect();
    events.extend(middle);
    events.extend(fwd.iter().filter(|e| !e.provisional).copied());
    let mut stop_times = bstops;
    stop_times.extend(fstops);
    let sequence = ExtremaSequence {
        gamma,
        t_start: path.t0(),
        t_end: path.t_end(),
        events,
        stop_times,
        status: ScanStatus::Complete,
    };
    Ok(BilateralExtrema { sequence, origin_label: label, case, forward_first: u1, backward_first: v1 })
}

/// For every sample, the minimum of the samples strictly between it and the nearest
/// earlier sample that is strictly larger (or the start of the path); `+∞` when that
/// stretch is empty.
fn min_since_dominating(v: &[f64]) -> Vec<f64> {
    let mut out = vec![f64::INFINITY; v.len()];
    // Each stack entry carries the minimum over its own stretch, itself included. The
    // stretches of the popped entries tile the samples between the dominating one and `k`.
    let mut stack: Vec<(f64, f64)> = Vec::new();
    for (k, &x) in v.iter().enumerate() {
        let mut acc = f64::INFINITY;
        while let Some(&(top, m)) = stack.last() {
            if top > x {
                break;
            }
            acc = acc.min(m);
            stack.pop();
        }
        out[k] = acc;
        stack.push((x, acc.min(x)));
    }
    out
}

/// Definition-based Γ-extrema: a sample `u` strictly inside the window is a Γ-maximum iff
/// there are samples `a < u < b` with `B_u = max B[a..=b]` and `B_a, B_b < B_u − Γ`; dually
/// for minima. The test is run through nearest-dominating-sample stretches, so the cost is
/// linear in the path length.
pub fn brute_force_extrema(path: &SampledPath, gamma: f64) -> Result<ExtremaSequence> {
    ensure_positive("gamma", gamma)?;
    let v = path.values();
    let n = v.len();
    let rev: Vec<f64> = v.iter().rev().copied().collect();
    let left_min = min_since_dominating(v);
    let right_min: Vec<f64> = min_since_dominating(&rev).into_iter().rev().collect();
    let left_max = stretch_max(v);
    let right_max: Vec<f64> = stretch_max(&rev).into_iter().rev().collect();

    let mut events = Vec::new();
    for u in 1..n.saturating_sub(1) {
        let x = v[u];
        let kind = if left_min[u] < x - gamma && right_min[u] < x - gamma {
            Some(ExtremumKind::Max)
        } else if left_max[u] > x + gamma && right_max[u] > x + gamma {
            Some(ExtremumKind::Min)
        } else {
            None
        };
        if let Some(kind) = kind {
            events.push(ExtremaEvent { index: u, time: path.time(u), value: x, kind, provisional: false });
        }
    }
    Ok(ExtremaSequence {
        gamma,
        t_start: path.t0(),
        t_end: path.t_end(),
        events,
        stop_times: Vec::new(),
        status: ScanStatus::Complete,
    })
}

/// Maximum over the stretch back to the nearest strictly smaller sample (`−∞` if empty).
fn stretch_max(v: &[f64]) -> Vec<f64> {
    let neg: Vec<f64> = v.iter().map(|x| -x).collect();
    min_since_dominating(&neg).into_iter().map(|m| -m).collect()
}

/// Piecewise-constant ±1 labelling of time induced by confirmed Γ-extrema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FisherTrajectory {
    pub gamma: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub breakpoints: Vec<f64>,
    /// One label per interval: before the first breakpoint, between consecutive ones, and
    /// after the last one.
    pub labels: Vec<i8>,
    pub origin_label: Option<i8>,
}

impl FisherTrajectory {
    /// Label at time `t`: zero exactly at a breakpoint, otherwise the interval label.
    pub fn label_at(&self, t: f64) -> i8 {
        match self.breakpoints.binary_search_by(|b| b.total_cmp(&t)) {
            Ok(_) => 0,
            Err(i) => self.labels[i],
        }
    }

    pub fn with_origin_label(mut self, label: i8) -> Self {
        self.origin_label = Some(label);
        self
    }
}

/// Builds the Fisher trajectory of the confirmed events of `seq`: ascending stretches
/// (towards a maximum) are labelled `+1`, descending ones `−1`.
pub fn fisher_trajectory(seq: &ExtremaSequence) -> Result<FisherTrajectory> {
    let events = seq.confirmed_events();
    let first = events.first().ok_or(Error::EmptySequence)?;
    let mut label = first.kind.arrow();
    let mut labels = Vec::with_capacity(events.len() + 1);
    labels.push(label);
    for _ in &events {
        label = -label;
        labels.push(label);
    }
    Ok(FisherTrajectory {
        gamma: seq.gamma,
        t_start: seq.t_start,
        t_end: seq.t_end,
        breakpoints: events.iter().map(|e| e.time).collect(),
        labels,
        origin_label: None,
    })
}

/// Bilateral Fisher trajectory with its origin label filled in.
pub fn bilateral_fisher(path: &SampledPath, gamma: f64) -> Result<FisherTrajectory> {
    let b = bilateral_extrema(path, gamma)?;
    Ok(fisher_trajectory(&b.sequence)?.with_origin_label(b.origin_label))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path::sample_bilateral;

    fn zigzag() -> SampledPath {
        SampledPath::new(0.0, 1.0, vec![0.0, 2.0, 0.5, 3.0, 1.5, 4.0, 0.0]).unwrap()
    }

    fn keys(v: &[(usize, ExtremumKind)]) -> Vec<(usize, &'static str)> {
        v.iter().map(|(i, k)| (*i, k.as_str())).collect()
    }

    /// Literal all-pairs check of the definition.
    fn naive(v: &[f64], gamma: f64) -> Vec<(usize, ExtremumKind)> {
        let n = v.len();
        let mut out = Vec::new();
        for u in 1..n - 1 {
            for kind in [ExtremumKind::Max, ExtremumKind::Min] {
                let s = kind.arrow() as f64;
                let mut found = false;
                'pairs: for a in 0..u {
                    for b in u + 1..n {
                        let top = (a..=b).all(|k| s * v[k] <= s * v[u]);
                        if top && s * (v[u] - v[a]) > gamma && s * (v[u] - v[b]) > gamma {
                            found = true;
                            break 'pairs;
                        }
                    }
                }
                if found {
                    out.push((u, kind));
                }
            }
        }
        out
    }

    #[test]
    fn zigzag_forward() {
        let seq = forward_neveu_pitman(&zigzag(), 1.0).unwrap();
        let conf = keys(&seq.confirmed_keys());
        assert_eq!(conf, vec![(1, "max"), (2, "min"), (3, "max"), (4, "min"), (5, "max")]);
        let first = seq.events[0];
        assert!(first.provisional);
        assert_eq!((first.index, first.kind), (0, ExtremumKind::Min));
        assert!(seq.events.last().unwrap().provisional);
        assert_eq!(seq.stop_times[0].index, 1);
        assert_eq!(seq.stop_times[0].direction, Direction::Up);
    }

    #[test]
    fn zigzag_backward() {
        let seq = backward_neveu_pitman(&zigzag(), 1.0).unwrap();
        let conf = keys(&seq.confirmed_keys());
        for needle in [(2, "min"), (3, "max"), (4, "min")] {
            assert!(conf.contains(&needle));
        }
        assert!(seq.events.last().unwrap().provisional);
        assert_eq!(seq.events.last().unwrap().index, 6);
    }

    #[test]
    fn zigzag_brute_force() {
        let seq = brute_force_extrema(&zigzag(), 1.0).unwrap();
        let conf = keys(&seq.confirmed_keys());
        assert_eq!(conf, vec![(1, "max"), (2, "min"), (3, "max"), (4, "min"), (5, "max")]);
        assert_eq!(naive(zigzag().values(), 1.0), seq.confirmed_keys());
    }

    #[test]
    fn zigzag_fisher() {
        let seq = brute_force_extrema(&zigzag(), 1.0).unwrap();
        let f = fisher_trajectory(&seq).unwrap();
        assert_eq!(f.labels, vec![1, -1, 1, -1, 1, -1]);
        assert_eq!(f.label_at(0.5), 1);
        assert_eq!(f.label_at(1.0), 0);
        assert_eq!(f.label_at(1.5), -1);
        assert_eq!(f.label_at(5.5), -1);
    }

    #[test]
    fn single_max_fisher() {
        let path = SampledPath::new(0.0, 1.0, vec![0.0, 3.0, 0.0]).unwrap();
        let seq = brute_force_extrema(&path, 1.0).unwrap();
        let f = fisher_trajectory(&seq).unwrap();
        assert_eq!(f.breakpoints, vec![1.0]);
        assert_eq!(f.labels, vec![1, -1]);
        assert!(fisher_trajectory(&brute_force_extrema(&path, 5.0).unwrap()).is_err());
    }

    #[test]
    fn monotone_paths() {
        let up = SampledPath::new(0.0, 1.0, (0..20).map(|k| k as f64).collect()).unwrap();
        let seq = forward_neveu_pitman(&up, 3.0).unwrap();
        assert_eq!(seq.confirmed().count(), 0);
        assert_eq!(seq.events[0].index, 0);
        assert_eq!(seq.events[0].kind, ExtremumKind::Min);
        assert!(seq.events[0].provisional);
        assert_eq!(backward_neveu_pitman(&up, 3.0).unwrap().confirmed().count(), 0);
        assert!(brute_force_extrema(&up, 3.0).unwrap().events.is_empty());

        let seq = forward_neveu_pitman(&up, 100.0).unwrap();
        assert_eq!(seq.status, ScanStatus::NoStopTime);
        assert!(seq.events.is_empty());
    }

    #[test]
    fn backward_is_mirrored_forward() {
        for seed in 0..20 {
            let p = sample_bilateral(seed, -3.0, 4.0, 0.01, 0.0, 1.0).unwrap();
            let b = backward_neveu_pitman(&p, 0.7).unwrap();
            let f = forward_neveu_pitman(&p.reverse(), 0.7).unwrap();
            let n = p.len();
            let mirrored: Vec<(usize, ExtremumKind, bool)> =
                f.events.iter().rev().map(|e| (n - 1 - e.index, e.kind, e.provisional)).collect();
            let got: Vec<(usize, ExtremumKind, bool)> = b.events.iter().map(|e| (e.index, e.kind, e.provisional)).collect();
            assert_eq!(got, mirrored);
        }
    }

    #[test]
    fn brute_force_matches_naive_on_small_paths() {
        for seed in 0..60 {
            let p = sample_bilateral(seed, 0.0, 0.6, 0.01, 0.0, 1.0).unwrap();
            for gamma in [0.05, 0.2, 0.5] {
                let fast = brute_force_extrema(&p, gamma).unwrap().confirmed_keys();
                assert_eq!(fast, naive(p.values(), gamma), "seed {seed} gamma {gamma}");
            }
        }
    }

    #[test]
    fn brute_force_handles_ties() {
        let v = vec![0.0, 2.0, 2.0, 0.5, 2.0, -1.0];
        let p = SampledPath::new(0.0, 1.0, v.clone()).unwrap();
        assert_eq!(brute_force_extrema(&p, 1.0).unwrap().confirmed_keys(), naive(&v, 1.0));
    }

    #[test]
    fn bilateral_matches_brute_force() {
        for seed in 0..40 {
            let p = sample_bilateral(seed, -10.0, 10.0, 0.001, 0.0, 1.0).unwrap();
            let b = bilateral_extrema(&p, 1.0).unwrap();
            let bf = brute_force_extrema(&p, 1.0).unwrap();
            assert_eq!(b.sequence.confirmed_keys(), bf.confirmed_keys(), "seed {seed}");
        }
    }

    fn bilateral_from(v: Vec<f64>, t0: f64) -> BilateralExtrema {
        bilateral_extrema(&SampledPath::new(t0, 1.0, v).unwrap(), 1.0).unwrap()
    }

    #[test]
    fn bilateral_four_cases() {
        let a = bilateral_from(vec![0.8, -0.5, 0.0, 0.8, -0.5], -2.0);
        assert_eq!(a.case, MatchCase::OppositeFar);
        assert_eq!(a.origin_label, 1);
        assert_eq!(a.sequence.confirmed_keys(), vec![(1, ExtremumKind::Min), (3, ExtremumKind::Max)]);

        let b = bilateral_from(vec![0.7, -0.4, 0.0, 0.3, -0.8], -2.0);
        assert_eq!(b.case, MatchCase::OppositeNear);
        assert_eq!(b.origin_label, -1);
        assert!(b.sequence.confirmed_keys().is_empty());

        let c = bilateral_from(vec![-0.6, 0.5, 0.0, 0.9, -0.3], -2.0);
        assert_eq!(c.case, MatchCase::SameForward);
        assert_eq!(c.origin_label, 1);
        assert_eq!(c.sequence.confirmed_keys(), vec![(3, ExtremumKind::Max)]);

        let d = bilateral_from(vec![-0.6, 0.9, 0.0, 0.5, -0.6], -2.0);
        assert_eq!(d.case, MatchCase::SameBackward);
        assert_eq!(d.origin_label, -1);
        assert_eq!(d.sequence.confirmed_keys(), vec![(1, ExtremumKind::Max)]);

        let e = bilateral_from(vec![-1.5, -0.5, 0.0, -0.5, -1.5], -2.0);
        assert_eq!(e.case, MatchCase::Degenerate);
        assert_eq!(e.origin_label, 0);
        assert_eq!(e.sequence.confirmed_keys(), vec![(2, ExtremumKind::Max)]);

        for x in [&a, &b, &c, &d, &e] {
            assert!(x.sequence.events.iter().all(|ev| !ev.provisional));
        }
    }

    #[test]
    fn bilateral_cases_agree_with_brute_force() {
        for v in [
            vec![0.8, -0.5, 0.0, 0.8, -0.5],
            vec![0.7, -0.4, 0.0, 0.3, -0.8],
            vec![-0.6, 0.5, 0.0, 0.9, -0.3],
            vec![-0.6, 0.9, 0.0, 0.5, -0.6],
            vec![-1.5, -0.5, 0.0, -0.5, -1.5],
        ] {
            let p = SampledPath::new(-2.0, 1.0, v).unwrap();
            let b = bilateral_extrema(&p, 1.0).unwrap();
            assert_eq!(b.sequence.confirmed_keys(), brute_force_extrema(&p, 1.0).unwrap().confirmed_keys());
        }
    }

    #[test]
    fn bilateral_needs_stop_times() {
        let p = SampledPath::new(-2.0, 1.0, vec![0.0, 0.1, 0.0, 0.2, 0.1]).unwrap();
        assert!(matches!(bilateral_extrema(&p, 1.0), Err(Error::WindowExhausted(_))));
        let q = SampledPath::new(1.0, 1.0, vec![0.0, 2.0]).unwrap();
        assert!(matches!(bilateral_extrema(&q, 1.0), Err(Error::InvalidParameter(_))));
    }
}
