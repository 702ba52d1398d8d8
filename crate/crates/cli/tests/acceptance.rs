//! Acceptance run: one PASS/FAIL line per criterion. The process exits 0 whatever the
//! outcome; the printed lines are the result.

use std::time::Instant;

use crfic_cli::{execute, resolve, CommandKind, RunConfig};
use crfic_core::analytic;
use crfic_core::discrete::{overlap_identity_check, scaling_limit_check, OverlapConfig, ScalingConfig};
use crfic_core::extrema::{bilateral_extrema, brute_force_extrema};
use crfic_core::mc::{self, DistributionConfig, PathAverageConfig, ReplicaConfig};
use crfic_core::path::sample_bilateral;
use crfic_core::sde::{
    contraction_check, deterministic_bound_violation, envelope_violation, integrate_l, integrate_linear_system,
};

const SEED: u64 = 42;

struct Tally {
    passed: usize,
    failed: usize,
}

impl Tally {
    fn line(&mut self, id: &str, name: &str, pass: bool, detail: String, started: Instant) {
        let status = if pass { "PASS" } else { "FAIL" };
        if pass {
            self.passed += 1;
        } else {
            self.failed += 1;
        }
        println!("{status} {id:<3} {name}: {detail} [{:.1}s]", started.elapsed().as_secs_f64());
    }
}

fn err_line<E: std::fmt::Display>(e: E) -> String {
    format!("error: {e}")
}

fn extrema_oracle(t: &mut Tally) {
    let started = Instant::now();
    let mut mismatches = Vec::new();
    let mut events = 0usize;
    for i in 0..1000u64 {
        let seed = SEED + i;
        let outcome = sample_bilateral(seed, -50.0, 50.0, 1e-3, 0.0, 1.0).and_then(|p| {
            let fast = bilateral_extrema(&p, 1.0)?.sequence.confirmed_keys();
            let slow = brute_force_extrema(&p, 1.0)?.confirmed_keys();
            Ok((fast == slow, fast.len()))
        });
        match outcome {
            Ok((true, n)) => events += n,
            _ => mismatches.push(seed),
        }
    }
    let detail = format!("1000 paths, {events} events, mismatching seeds {mismatches:?}");
    t.line("1", "extrema oracle equivalence", mismatches.is_empty(), detail, started);
}

fn simplified_constant(t: &mut Tally) {
    let started = Instant::now();
    let exact = analytic::d_hat(10.0).expect("closed form");
    match mc::estimate_d_hat(&ReplicaConfig::new(10.0, 100_000, SEED)) {
        Ok(r) => {
            let z = (r.estimate - exact) / r.stderr;
            let pass = z.abs() <= 3.0 && r.stderr <= 1e-3;
            let detail = format!("D_hat = {:.6} ± {:.6} vs {exact:.7}, z = {z:.2}", r.estimate, r.stderr);
            t.line("2", "simplified-model constant", pass, detail, started);
        }
        Err(e) => t.line("2", "simplified-model constant", false, err_line(e), started),
    }
}

fn distribution_suite(t: &mut Tally) {
    for gamma in [2.0, 5.0] {
        let started = Instant::now();
        let name = format!("distribution suite at gamma = {gamma}");
        match mc::test_distributions(&DistributionConfig::new(gamma, 10_000, SEED)) {
            Ok(reports) => {
                let detail = reports
                    .iter()
                    .map(|r| format!("{} {:.4}/{:.4}{}", r.name, r.statistic, r.threshold, if r.pass { "" } else { " FAIL" }))
                    .collect::<Vec<_>>()
                    .join("; ");
                let pass = reports.len() == 6 && reports.iter().all(|r| r.pass);
                t.line("3", &name, pass, detail, started);
            }
            Err(e) => t.line("3", &name, false, err_line(e), started),
        }
    }
}

fn free_energy(t: &mut Tally) {
    let started = Instant::now();
    let exact = analytic::free_energy(2.0, 0.0).expect("closed form");
    let cfg = PathAverageConfig { dt: 4e-3, ..PathAverageConfig::new(2.0, 1e4, SEED) };
    match mc::estimate_free_energy(&cfg) {
        Ok(r) => {
            let rel = (r.estimate - exact) / exact;
            let detail = format!(
                "f = {:.5} ± {:.5} vs {exact:.5}, relative error {:+.2}% (tolerance 2%)",
                r.estimate,
                r.stderr,
                100.0 * rel
            );
            t.line("4a", "free energy time average", rel.abs() <= 0.02, detail, started);
        }
        Err(e) => t.line("4a", "free energy time average", false, err_line(e), started),
    }

    let started = Instant::now();
    let mut worst = 0.0f64;
    let mut ok = true;
    for g in 1..=20 {
        let g = g as f64;
        match (analytic::free_energy_stationary(g), analytic::free_energy(g, 0.0)) {
            (Ok(a), Ok(b)) => worst = worst.max((a - b).abs()),
            _ => ok = false,
        }
    }
    let detail = format!("max |quadrature − Bessel ratio| = {worst:.2e} over gamma = 1..20");
    t.line("4b", "stationary quadrature identity", ok && worst <= 1e-8, detail, started);
}

fn sde_validators(t: &mut Tally) {
    let started = Instant::now();
    let mut worst = [0.0f64; 3];
    let mut order = 0.0f64;
    let mut errors = Vec::new();
    for gamma in [2.0, 5.0] {
        for i in 0..100u64 {
            let mut run = || -> crfic_core::Result<()> {
                let p = sample_bilateral(SEED + i, 0.0, 10.0 * gamma * gamma, 0.01, 0.0, 1.0)?;
                let hi = integrate_l(&p, gamma, 0.0, f64::INFINITY)?;
                let lo = integrate_l(&p, gamma, 0.0, f64::NEG_INFINITY)?;
                let c = contraction_check(&lo, &hi, 1e-3)?;
                order = order.max(c.max_order_violation);
                worst[0] = worst[0].max(c.max_violation);
                worst[1] = worst[1].max(envelope_violation(&p, &hi)?).max(envelope_violation(&p, &lo)?);
                let last = p.len() - 1;
                for kt in [1, last / 4, last / 2, 3 * last / 4] {
                    worst[2] = worst[2]
                        .max(deterministic_bound_violation(&p, &hi, kt)?)
                        .max(deterministic_bound_violation(&p, &lo, kt)?);
                }
                Ok(())
            };
            if let Err(e) = run() {
                errors.push(format!("gamma {gamma} seed {}: {e}", SEED + i));
            }
        }
    }
    let names = ["tanh contraction", "envelope bounds", "deterministic bounds"];
    for (k, name) in names.iter().enumerate() {
        let pass = errors.is_empty() && worst[k] <= 1e-3 && (k != 0 || order <= 1e-3);
        let mut detail = format!("200 trajectories, max violation {:.2e}", worst[k]);
        if k == 0 {
            detail.push_str(&format!(", max order crossing {order:.2e}"));
        }
        if !errors.is_empty() {
            detail.push_str(&format!(", errors {errors:?}"));
        }
        t.line("5", name, pass, detail, started);
    }

    let started = Instant::now();
    let gap = sample_bilateral(SEED, 0.0, 50.0, 1e-4, 0.0, 1.0).and_then(|p| {
        let l = integrate_l(&p, 2.0, 0.0, f64::INFINITY)?;
        let s = integrate_linear_system(&p, 2.0, 0.0)?;
        Ok(l.values[1..].iter().zip(&s.l_check[1..]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    });
    match gap {
        Ok(g) => t.line("5", "linear-system check", g <= 1e-2, format!("max |l − l_check| = {g:.2e}"), started),
        Err(e) => t.line("5", "linear-system check", false, err_line(e), started),
    }
}

fn discrepancy_properties(t: &mut Tally) {
    let started = Instant::now();
    let mut agreement = Vec::new();
    let mut d_at_5 = None;
    for gamma in [5.0, 10.0] {
        let cfg = ReplicaConfig::new(gamma, 10_000, SEED);
        let t0 = Instant::now();
        let outcomes = match mc::replica_outcomes(&cfg) {
            Ok(o) => o,
            Err(e) => {
                t.line("6", &format!("replicas at gamma = {gamma}"), false, err_line(e), started);
                continue;
            }
        };
        let d = mc::d_report(&cfg, &outcomes, t0);
        let dm = mc::d_sign_m_report(&cfg, &outcomes, t0);
        let exact = analytic::d_m_exact(gamma).expect("closed form");
        let z = (dm.estimate - exact) / dm.stderr;
        let detail = format!("D_sign_m = {:.5} ± {:.5} vs {exact:.5}, z = {z:.2}", dm.estimate, dm.stderr);
        t.line("6a", &format!("sign-of-m discrepancy at gamma = {gamma}"), z.abs() <= 3.0, detail, started);
        let scaled = gamma * d.estimate;
        let detail = format!("gamma·D = {scaled:.4} (D = {:.5} ± {:.5})", d.estimate, d.stderr);
        t.line("6b", &format!("lower bound at gamma = {gamma}"), scaled >= 0.45, detail, started);
        let detail = format!("D = {:.5} vs D_sign_m = {:.5}", d.estimate, dm.estimate);
        t.line("6c", &format!("D dominates D_sign_m at gamma = {gamma}"), d.estimate >= dm.estimate, detail, started);
        agreement.push(mc::lhat_row(&cfg, &outcomes));
        if gamma == 5.0 {
            d_at_5 = Some(d);
        }
    }

    let started = Instant::now();
    match (d_at_5, mc::ergodic_discrepancy(&PathAverageConfig::new(5.0, 1e3 * 25.0, SEED))) {
        (Some(d), Ok(e)) => {
            let combined = (d.stderr.powi(2) + e.stderr.powi(2)).sqrt();
            let z = (d.estimate - e.estimate) / combined;
            let detail = format!(
                "replica D = {:.5} ± {:.5}, ergodic = {:.5} ± {:.5}, z = {z:.2}",
                d.estimate, d.stderr, e.estimate, e.stderr
            );
            t.line("6d", "replica and ergodic estimates agree", z.abs() <= 3.0, detail, started);
        }
        (_, Err(e)) => t.line("6d", "replica and ergodic estimates agree", false, err_line(e), started),
        (None, _) => t.line("6d", "replica and ergodic estimates agree", false, "no replica estimate".into(), started),
    }

    let started = Instant::now();
    match mc::compare_l_lhat(&[20.0], 2500, SEED, 2.0) {
        Ok(rows) => agreement.extend(rows),
        Err(e) => {
            t.line("6e", "sign agreement increases", false, err_line(e), started);
            return;
        }
    }
    let increasing = agreement.len() == 3 && agreement.windows(2).all(|w| w[1].sign_agreement > w[0].sign_agreement);
    let detail = agreement
        .iter()
        .map(|r| format!("gamma {}: {:.4} ± {:.4}", r.gamma, r.sign_agreement, r.sign_agreement_stderr))
        .collect::<Vec<_>>()
        .join(", ");
    t.line("6e", "sign agreement increases", increasing, detail, started);
}

fn discrete_checks(t: &mut Tally) {
    let started = Instant::now();
    let cfg = ScalingConfig::new(1.0, 0.0, 1.0, vec![1e-2, 1e-3, 1e-4], 1000, SEED);
    match scaling_limit_check(&cfg) {
        Ok(r) => {
            let detail = r
                .rows
                .iter()
                .map(|row| format!("delta {}: gap {:.3e} ± {:.1e}", row.delta, row.gap, row.gap_stderr))
                .collect::<Vec<_>>()
                .join(", ");
            t.line("7a", "lattice moment gap decreases", r.decreasing, detail, started);
        }
        Err(e) => t.line("7a", "lattice moment gap decreases", false, err_line(e), started),
    }

    let started = Instant::now();
    match overlap_identity_check(&OverlapConfig::new(50, 2.0, 0.0, 0.3, 10_000, SEED)) {
        Ok(r) => {
            let detail = format!(
                "lhs = {:.4} ± {:.4}, rhs = {:.4} ± {:.4}, z = {:.2}",
                r.lhs, r.lhs_stderr, r.rhs, r.rhs_stderr, r.z
            );
            t.line("7b", "overlap identity", r.z.abs() <= 3.0, detail, started);
        }
        Err(e) => t.line("7b", "overlap identity", false, err_line(e), started),
    }
}

fn small_config(command: CommandKind) -> RunConfig {
    let base = RunConfig { command: Some(command), seed: Some(SEED), ..Default::default() };
    let cfg = match command {
        CommandKind::Extrema => RunConfig { window: Some(20.0), ..base },
        CommandKind::Simulate => RunConfig { ell: Some(10.0), ..base },
        CommandKind::EstimateD => RunConfig { gamma: Some(3.0), replicas: Some(400), ..base },
        CommandKind::EstimateDhat => RunConfig { replicas: Some(2000), ..base },
        CommandKind::Ergodic => RunConfig { ell: Some(500.0), ..base },
        CommandKind::FreeEnergy => RunConfig { ell: Some(500.0), ..base },
        CommandKind::Analytic => base,
        CommandKind::Distributions => RunConfig { samples: Some(300), ..base },
        CommandKind::DiscreteScaling => RunConfig { samples: Some(50), deltas: Some(vec![1e-2, 1e-3]), ..base },
        CommandKind::Overlap => RunConfig { samples: Some(500), ..base },
        CommandKind::Report => RunConfig { samples: Some(300), gamma_grid: Some(vec![2.0, 5.0]), ..base },
    };
    resolve(cfg).expect("valid config")
}

fn determinism(t: &mut Tally) {
    use clap::ValueEnum;
    let started = Instant::now();
    let mut differing = Vec::new();
    for &command in CommandKind::value_variants() {
        let cfg = small_config(command);
        let payloads: Vec<_> = [1, 2, 1]
            .iter()
            .map(|&w| {
                execute(&cfg, w).map(|(r, table)| {
                    (serde_json::to_string(&r.payload).expect("json"), r.config_digest, table)
                })
            })
            .collect();
        let same = match (&payloads[0], &payloads[1], &payloads[2]) {
            (Ok(a), Ok(b), Ok(c)) => a == b && a == c,
            _ => false,
        };
        if !same {
            differing.push(command.name());
        }
    }
    let n = CommandKind::value_variants().len();
    let detail = format!("{n} commands run with 1, 2, 1 workers; differing {differing:?}");
    t.line("8", "byte-identical payloads", differing.is_empty(), detail, started);
}

fn main() {
    let started = Instant::now();
    let mut t = Tally { passed: 0, failed: 0 };
    extrema_oracle(&mut t);
    simplified_constant(&mut t);
    distribution_suite(&mut t);
    free_energy(&mut t);
    sde_validators(&mut t);
    discrepancy_properties(&mut t);
    discrete_checks(&mut t);
    determinism(&mut t);
    println!(
        "acceptance: {} passed, {} failed in {:.0}s",
        t.passed,
        t.failed,
        started.elapsed().as_secs_f64()
    );
}
