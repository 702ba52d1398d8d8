use crfic_core::analytic;
use crfic_core::discrete::{self, Boundary, DiscreteChain, Sweep};
use crfic_core::extrema::{backward_neveu_pitman, bilateral_extrema, brute_force_extrema, forward_neveu_pitman};
use crfic_core::path::{sample_bilateral, SampledPath};
use crfic_core::sde::{
    contraction_check, integrate_l, integrate_r, reflect_simplified, simplified_closed_form, StrangStepper,
};
use crfic_core::stats::{ks_statistic, quantile_sorted, sorted};
use proptest::prelude::*;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn path_is_pinned_and_involutive(seed in any::<u64>(), lo in -5.0f64..-0.1, hi in 0.1f64..5.0) {
        let p = sample_bilateral(seed, lo, hi, 0.01, 0.0, 1.0).unwrap();
        let k0 = p.origin_index().unwrap();
        prop_assert_eq!(p.values()[k0], 0.0);
        prop_assert_eq!(p.reverse().reverse().into_values(), p.values().to_vec());
        prop_assert_eq!(p.negate().negate().into_values(), p.values().to_vec());
    }

    #[test]
    fn bilateral_scan_matches_definition(seed in any::<u64>(), gamma in 0.3f64..2.0) {
        let p = sample_bilateral(seed, -15.0, 15.0, 0.01, 0.0, 1.0).unwrap();
        if let Ok(b) = bilateral_extrema(&p, gamma) {
            let bf = brute_force_extrema(&p, gamma).unwrap();
            prop_assert_eq!(b.sequence.confirmed_keys(), bf.confirmed_keys());
        }
    }

    #[test]
    fn confirmed_extrema_alternate_and_are_separated(seed in any::<u64>(), gamma in 0.3f64..2.0) {
        let p = sample_bilateral(seed, 0.0, 30.0, 0.01, 0.0, 1.0).unwrap();
        let ev = forward_neveu_pitman(&p, gamma).unwrap().confirmed_events();
        for w in ev.windows(2) {
            prop_assert_ne!(w[0].kind, w[1].kind);
            prop_assert!((w[0].value - w[1].value).abs() > gamma);
            let seg = &p.values()[w[0].index..=w[1].index];
            let (a, b) = (w[0].value.min(w[1].value), w[0].value.max(w[1].value));
            prop_assert!(seg.iter().all(|&v| v >= a && v <= b));
        }
    }

    #[test]
    fn backward_scan_is_forward_scan_of_reversed_path(seed in any::<u64>(), gamma in 0.3f64..2.0) {
        let p = sample_bilateral(seed, 0.0, 20.0, 0.01, 0.0, 1.0).unwrap();
        let n = p.len() - 1;
        let back: Vec<_> = backward_neveu_pitman(&p, gamma).unwrap().confirmed_keys();
        let mut fwd: Vec<_> = forward_neveu_pitman(&p.reverse(), gamma)
            .unwrap()
            .confirmed_keys()
            .into_iter()
            .map(|(i, k)| (n - i, k))
            .collect();
        fwd.reverse();
        prop_assert_eq!(back, fwd);
    }

    #[test]
    fn drift_flow_contracts_and_is_odd(gamma in 0.1f64..20.0, h in 1e-5f64..0.1, l in -50.0f64..50.0) {
        let s = StrangStepper::new(gamma, h);
        let y = s.flow(l);
        prop_assert!(y.abs() <= l.abs());
        prop_assert_eq!(s.flow(-l), -y);
        prop_assert!(s.flow(f64::INFINITY).is_finite());
    }

    #[test]
    fn l_is_monotone_in_its_initial_condition(seed in any::<u64>(), x in -6.0f64..6.0, d in 0.01f64..5.0) {
        let p = sample_bilateral(seed, 0.0, 10.0, 0.005, 0.0, 1.0).unwrap();
        let lo = integrate_l(&p, 2.0, 0.0, x).unwrap();
        let hi = integrate_l(&p, 2.0, 0.0, x + d).unwrap();
        prop_assert!(lo.values.iter().zip(&hi.values).all(|(a, b)| a <= b));
        let c = contraction_check(&lo, &hi, 1e-6).unwrap();
        prop_assert_eq!(c.max_order_violation, 0.0);
        prop_assert!(c.max_violation < 1e-9);
    }

    #[test]
    fn l_and_r_are_sign_and_time_symmetric(seed in any::<u64>(), x in -4.0f64..4.0) {
        let p = sample_bilateral(seed, -3.0, 3.0, 0.01, 0.0, 1.0).unwrap();
        let a = integrate_l(&p, 1.5, -3.0, x).unwrap();
        let b = integrate_l(&p.negate(), 1.5, -3.0, -x).unwrap();
        prop_assert!(a.values.iter().zip(&b.values).all(|(u, w)| *u == -*w));
        let r = integrate_r(&p, 1.5, 3.0, x).unwrap();
        let q = integrate_l(&p.reverse().negate(), 1.5, -3.0, x).unwrap();
        let mirrored: Vec<f64> = q.values.iter().rev().copied().collect();
        prop_assert_eq!(r.values, mirrored);
    }

    #[test]
    fn simplified_closed_form_matches_clamp(seed in any::<u64>(), gamma in 0.5f64..3.0) {
        let p = sample_bilateral(seed, -40.0, 40.0, 0.01, 0.0, 1.0).unwrap();
        if let Ok(cf) = simplified_closed_form(&p, gamma) {
            let clamp = reflect_simplified(&p, gamma, -40.0).unwrap();
            let k0 = p.origin_index().unwrap();
            prop_assert!((clamp.values[k0] - cf.l_hat).abs() < 1e-9);
            prop_assert!(cf.l_hat.abs() <= gamma + 1e-12);
        }
    }

    #[test]
    fn transfer_ratio_is_direction_free(
        omega in prop::collection::vec(-3.0f64..3.0, 1..200),
        j in 0.0f64..6.0,
        h in -0.5f64..0.5,
        delta in 0.0f64..1.5,
        b in 0usize..3,
    ) {
        let boundary = [Boundary::PlusFree, Boundary::PlusPlus, Boundary::PlusMinus][b];
        let chain = DiscreteChain::new(j, h, delta, omega, boundary).unwrap();
        let a = discrete::transfer_ratio_with(&chain, Sweep::LeftToRight);
        let c = discrete::transfer_ratio_with(&chain, Sweep::RightToLeft);
        prop_assert!(a.is_finite());
        prop_assert!((a - c).abs() <= 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn log_partition_is_bracketed_by_ground_state(
        omega in prop::collection::vec(-3.0f64..3.0, 1..15),
        j in 0.0f64..3.0,
        delta in 0.0f64..1.5,
    ) {
        let n = omega.len();
        let chain = DiscreteChain::new(j, 0.0, delta, omega, Boundary::PlusFree).unwrap();
        let log_z = discrete::log_partition(&chain);
        // all-plus configuration, and the best configuration bounded above by the sum of maxima
        let all_plus: f64 = n as f64 * j + (1..=n).map(|k| chain.field(k)).sum::<f64>();
        let ceiling: f64 = n as f64 * j + (1..=n).map(|k| chain.field(k).abs()).sum::<f64>();
        prop_assert!(log_z >= all_plus - 1e-12);
        prop_assert!(log_z <= ceiling + n as f64 * std::f64::consts::LN_2 + 1e-12);
    }

    #[test]
    fn overlaps_are_squared_magnetizations(
        omega in prop::collection::vec(-3.0f64..3.0, 1..100),
        j in 0.0f64..4.0,
        h in -0.5f64..0.5,
        delta in 0.0f64..1.5,
    ) {
        let chain = DiscreteChain::new(j, h, delta, omega, Boundary::PlusFree).unwrap();
        let m = discrete::magnetizations(&chain);
        let q = discrete::replica_overlaps(&chain);
        for (mj, qj) in m.iter().zip(&q) {
            prop_assert!(mj.abs() <= 1.0 + 1e-12);
            prop_assert!((qj - mj * mj).abs() < 1e-10);
        }
    }

    #[test]
    fn bessel_is_even_in_order(nu in -4.0f64..4.0, x in 1e-3f64..30.0) {
        let a = analytic::AnalyticConfig::default().log_bessel_k(nu, x).unwrap();
        let b = analytic::AnalyticConfig::default().log_bessel_k(-nu, x).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn ks_statistic_is_a_distance(xs in prop::collection::vec(-3.0f64..3.0, 1..200)) {
        let d = ks_statistic(&xs, |x| ((x + 3.0) / 6.0).clamp(0.0, 1.0));
        prop_assert!((0.0..=1.0).contains(&d));
        let s = sorted(&xs);
        prop_assert!(quantile_sorted(&s, 0.25) <= quantile_sorted(&s, 0.75));
    }
}

proptest! {
    #![proptest_config(config(16))]

    #[test]
    fn free_energy_decreases_in_gamma(g in 0.2f64..15.0, dg in 0.05f64..2.0) {
        let a = analytic::free_energy(g, 0.0).unwrap();
        let b = analytic::free_energy(g + dg, 0.0).unwrap();
        prop_assert!(b < a);
        prop_assert!(analytic::wall_density(g).unwrap() > 0.0);
    }

    #[test]
    fn stationary_cdf_is_monotone(g in 0.5f64..10.0, x in -12.0f64..12.0, d in 0.01f64..3.0) {
        let cdf = analytic::StationaryCdf::new(&analytic::AnalyticConfig::default(), g).unwrap();
        let (a, b) = (cdf.cdf(x), cdf.cdf(x + d));
        prop_assert!((0.0..=1.0).contains(&a) && a <= b);
    }
}

#[test]
fn shifted_windows_give_identical_l() {
    let p = sample_bilateral(3, -5.0, 5.0, 0.01, 0.0, 1.0).unwrap();
    let k = p.index_of(-2.0).unwrap();
    let tail = SampledPath::new(-2.0, 0.01, p.values()[k..].to_vec()).unwrap();
    let a = integrate_l(&p, 2.0, -2.0, 1.0).unwrap();
    let b = integrate_l(&tail, 2.0, -2.0, 1.0).unwrap();
    assert_eq!(a.values, b.values);
}

#[test]
fn stationary_cdf_stays_in_unit_interval_at_truncation_edge() {
    let cdf = analytic::StationaryCdf::new(&analytic::AnalyticConfig::default(), 3.741_776_938_500_262_6).unwrap();
    let (a, b) = (cdf.cdf(8.664_672_177_308_534), cdf.cdf(8.674_672_177_308_534));
    assert!((0.0..=1.0).contains(&a) && a <= b && b <= 1.0);
    assert_eq!(cdf.cdf(100.0), 1.0);
    assert_eq!(cdf.cdf(-100.0), 0.0);
}
