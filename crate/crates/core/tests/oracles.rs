//! Independent checks of the integrator and the period estimator.

use std::f64::consts::PI;

use jjdyn::classifier::{classify, estimate_period, resolve_period, Thresholds};
use jjdyn::dynamics::{integrate, integrate_node_equations, integrate_window, node_to_reduced, Trajectory, DEFAULT_DTAU};
use jjdyn::{AttractorLabel, DynParams, PhaseState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn final_state(ic: PhaseState, d: &DynParams, end: f64, h: f64) -> PhaseState {
    *integrate(ic, d, end, h, 1).unwrap().samples.last().unwrap()
}

#[test]
fn node_equations_match_reduced_over_short_horizon() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let d = DynParams::new(rng.gen_range(0.3..0.6), 1e-2);
        let ic = PhaseState::new(rng.gen_range(0.5 * PI..PI), rng.gen_range(-0.2..0.2));
        let reduced = integrate(ic, &d, 50.0, DEFAULT_DTAU, 1).unwrap();
        let node = node_to_reduced(&integrate_node_equations(&d, 0.0, ic, 50.0, DEFAULT_DTAU).unwrap(), 0.0);
        assert_eq!(reduced.len(), node.len());
        for (a, b) in reduced.samples.iter().zip(&node.samples) {
            assert!((a.phi - b.phi).abs() < 1e-9 && (a.v - b.v).abs() < 1e-9, "{d:?} {ic:?}");
        }
    }
}

#[test]
fn rk4_step_halving_ratio() {
    // End time is a whole number of steps at every size.
    let end = 8.0 * PI;
    for (eps, phi0, v0) in [(0.45, 0.8 * PI, 0.0), (0.3, 0.6 * PI, 0.2), (0.56, 0.95 * PI, -0.1)] {
        let d = DynParams::new(eps, 1e-2);
        let ic = PhaseState::new(phi0, v0);
        let h = DEFAULT_DTAU;
        let reference = final_state(ic, &d, end, h / 8.0);
        let coarse = (final_state(ic, &d, end, h).phi - reference.phi).abs();
        let fine = (final_state(ic, &d, end, h / 2.0).phi - reference.phi).abs();
        let ratio = coarse / fine;
        assert!((12.0..=20.0).contains(&ratio), "eps={eps}: ratio {ratio}");
    }
}

#[test]
fn undriven_damped_closed_form() {
    for (kappa, phi0, v0) in [(1e-2, 0.3, 0.7), (0.1, -2.0, -0.4), (1e-3, 5.0, 0.05)] {
        let d = DynParams::new(0.0, kappa);
        let t = integrate(PhaseState::new(phi0, v0), &d, 300.0, DEFAULT_DTAU, 10).unwrap();
        for (i, s) in t.samples.iter().enumerate() {
            let tau = t.tau_at(i);
            let decay = (-kappa * tau).exp();
            assert!((s.phi - (phi0 + v0 * (1.0 - decay) / kappa)).abs() < 1e-6);
            assert!((s.v - v0 * decay).abs() < 1e-6);
        }
    }
}

/// Smallest lag whose normalized autocorrelation of the phase is a local
/// maximum above 0.999, refined by a parabola through the neighbouring lags.
fn autocorrelation_period(t: &Trajectory) -> f64 {
    let x: Vec<f64> = t.phases().collect();
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let dev: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let acf = |lag: usize| -> f64 {
        let m = n - lag;
        let num: f64 = (0..m).map(|i| dev[i] * dev[i + lag]).sum();
        let head: f64 = (0..m).map(|i| dev[i] * dev[i]).sum();
        let tail: f64 = (lag..n).map(|i| dev[i] * dev[i]).sum();
        num / (head * tail).sqrt()
    };
    let mut prev = (acf(1), acf(2));
    for lag in 3..n / 2 {
        let cur = acf(lag);
        if prev.1 > 0.999 && prev.1 >= prev.0 && prev.1 >= cur {
            let (a, b, c) = (prev.0, prev.1, cur);
            let shift = 0.5 * (a - c) / (a - 2.0 * b + c);
            return (lag as f64 - 1.0 + shift) * t.dtau;
        }
        prev = (prev.1, cur);
    }
    panic!("no periodic lag");
}

#[test]
fn three_cycle_period_matches_autocorrelation_oracle() {
    // This orbit escapes at the default step; a quarter step keeps it on the 3-cycle.
    let d = DynParams::new(0.37, 1e-2);
    let t = integrate_window(PhaseState::new(0.54 * PI, 0.0), &d, 4000.0, 4000.0 + 160.0 * PI, DEFAULT_DTAU / 4.0, 1).unwrap();
    let oracle = autocorrelation_period(&t);
    // Frozen output of the oracle above.
    const ORACLE_PERIOD: f64 = 25.132741257;
    assert!((oracle - ORACLE_PERIOD).abs() < 1e-8, "{oracle}");

    let estimate = estimate_period(&t).unwrap();
    assert!((estimate - ORACLE_PERIOD).abs() < 0.02 * ORACLE_PERIOD, "{estimate}");
    let resolved = resolve_period(&t, estimate).unwrap();
    assert!((resolved - ORACLE_PERIOD).abs() < 1e-6, "{resolved}");
    match classify(&t, &Thresholds::default()).unwrap() {
        AttractorLabel::NCycle(c) => {
            assert_eq!((c.n, c.turning, c.winding), (3, 3, 1));
            assert!((c.period - ORACLE_PERIOD).abs() < 1e-6);
        }
        other => panic!("{other}"),
    }
}
