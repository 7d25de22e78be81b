use approx::assert_relative_eq;
use proptest::prelude::*;

use thermoservo::estimation::{Estimate, SampleWindow};
use thermoservo::feasibility::{steady_state_temperature, view_factor_for_temperature};
use thermoservo::thermal::{lambdas, temperature_rate, Environment, LambdaParams, ThermoParams};

fn aluminum() -> LambdaParams {
    lambdas(&ThermoParams::aluminum_disk(), &Environment::reference()).unwrap()
}

fn last_estimate(samples: &[(f64, f64)]) -> Estimate {
    let mut w = SampleWindow::new();
    let mut out = None;
    for &(t, y) in samples {
        out = w.push_and_estimate(t, y).unwrap();
    }
    out.unwrap()
}

fn signal(t0: f64, dt: f64, coeffs: [f64; 4], noise: &[f64]) -> Vec<(f64, f64)> {
    noise
        .iter()
        .enumerate()
        .map(|(k, n)| {
            let s = k as f64 * dt;
            (t0 + s, 300.0 + coeffs[0] + coeffs[1] * s + coeffs[2] * s * s + coeffs[3] * s * s * s + n)
        })
        .collect()
}

#[test]
fn steady_state_of_a_fitted_view_factor_round_trips() {
    let l = aluminum();
    for c in [25.0, 35.0, 50.0, 60.0] {
        let t = c + 273.15;
        let f = view_factor_for_temperature(t, &l).unwrap();
        assert_relative_eq!(steady_state_temperature(f, &l), t, max_relative = 1e-12);
    }
}

proptest! {
    #[test]
    fn steady_state_rises_with_view_factor(a in 0.0..1.0f64, b in 0.0..1.0f64) {
        prop_assume!((a - b).abs() > 1e-9);
        let l = aluminum();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(steady_state_temperature(lo, &l) < steady_state_temperature(hi, &l));
    }

    #[test]
    fn rate_vanishes_at_steady_state(f in 0.0..1.0f64, scale in 0.1..1000.0f64) {
        let base = aluminum();
        let l = LambdaParams::new(base.l1 * scale, base.l2 * scale, base.l3 * scale).unwrap();
        let t = steady_state_temperature(f, &l);
        prop_assert!(temperature_rate(f, t, &l).abs() < 1e-12 * scale.max(1.0));
        prop_assert!(temperature_rate(f, t - 1.0, &l) > 0.0);
        prop_assert!(temperature_rate(f, t + 1.0, &l) < 0.0);
    }

    /// Adding a constant to every sample moves the estimate by that constant
    /// and leaves the rate alone.
    #[test]
    fn estimate_follows_a_temperature_offset(
        coeffs in prop::array::uniform4(-1.0..1.0f64),
        noise in prop::collection::vec(-0.1..0.1f64, 14),
        shift in -50.0..50.0f64,
    ) {
        let base = signal(0.0, 0.5, coeffs, &noise);
        let moved: Vec<_> = base.iter().map(|(t, y)| (*t, y + shift)).collect();
        let a = last_estimate(&base);
        let b = last_estimate(&moved);
        prop_assert!((b.temperature - a.temperature - shift).abs() < 1e-8);
        prop_assert!((b.rate - a.rate).abs() < 1e-8);
    }

    /// Relabelling the clock does not change the estimate.
    #[test]
    fn estimate_ignores_the_time_origin(
        coeffs in prop::array::uniform4(-1.0..1.0f64),
        noise in prop::collection::vec(-0.1..0.1f64, 12),
        t0 in 0.0..1.0e5f64,
    ) {
        let a = last_estimate(&signal(0.0, 1.0, coeffs, &noise));
        let b = last_estimate(&signal(t0, 1.0, coeffs, &noise));
        prop_assert!((a.temperature - b.temperature).abs() < 1e-7);
        prop_assert!((a.rate - b.rate).abs() < 1e-7);
    }
}
