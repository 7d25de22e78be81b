use nalgebra::Vector3;

use thermoservo::feasibility::{
    pairwise_feasibility, steady_state_temperature, target_bounds, GridAxis, GridSpec, HeldObject, SearchOptions,
    Workspace,
};
use thermoservo::geometry::{Contour, Pose};
use thermoservo::thermal::{celsius_to_kelvin, lambdas, Environment, LambdaParams, ThermoParams};
use thermoservo::viewfactor::{vf_general, QuadratureSpec};

fn aluminum(radius: f64) -> LambdaParams {
    let area = std::f64::consts::PI * radius * radius;
    let obj = ThermoParams::plate(area, 0.003, 2702.0, 903.0, 0.04, 0.04).unwrap();
    lambdas(&obj, &Environment::reference()).unwrap()
}

fn held(x: f64, radius: f64) -> HeldObject {
    HeldObject {
        offset: Vector3::new(x, 0.0, 0.0),
        contour: Contour::circle(radius).unwrap(),
        lambda: aluminum(radius),
    }
}

fn workspace(z_lo: f64) -> Workspace {
    Workspace {
        grid: GridSpec {
            axes: [
                GridAxis::cells(-0.20, 0.20, 0.01).unwrap(),
                GridAxis::cells(-0.20, 0.20, 0.01).unwrap(),
                GridAxis::cells(z_lo, 0.30, 0.01).unwrap(),
            ],
        },
        angles: [0.0; 3],
    }
}

fn kelvin(c: &[f64]) -> Vec<f64> {
    c.iter().map(|t| celsius_to_kelvin(*t)).collect()
}

#[test]
fn small_and_large_disk_pair() {
    let objects = [held(-0.02, 0.015), held(0.02, 0.045)];
    let ws = workspace(0.04);
    let opts = SearchOptions::default();

    let hot_small = pairwise_feasibility(&kelvin(&[50.0, 30.0]), &objects, &ws, &opts).unwrap();
    assert!(hot_small.within_bounds.iter().all(|b| *b));
    assert!(!hot_small.feasible(), "residual {}", hot_small.residual);
    assert!(!hot_small.pairs[0].within());
    assert!(hot_small.witness().is_none());

    let hot_large = pairwise_feasibility(&kelvin(&[30.0, 40.0]), &objects, &ws, &opts).unwrap();
    assert!(hot_large.feasible(), "residual {}", hot_large.residual);
    assert!(hot_large.residual <= opts.tolerance);
    let w = hot_large.witness().unwrap();
    let c = w.coords();
    assert!((0.04 - 0.005..=0.30 + 0.005).contains(&c[2]));
}

#[test]
fn identical_disks_meet_equal_targets_on_the_mirror_plane() {
    let objects = [held(-0.02, 0.015), held(0.02, 0.015)];
    let opts = SearchOptions::default();
    let report = pairwise_feasibility(&kelvin(&[30.0, 30.0]), &objects, &workspace(0.0), &opts).unwrap();
    assert!(report.feasible(), "residual {}", report.residual);
    let w = report.witness().unwrap().coords();
    assert!(w[0].abs() < 0.01, "witness p1 {}", w[0]);
    let pair = report.pairs[0];
    assert!(pair.within());
    assert!((pair.min_diff + pair.max_diff).abs() < 1e-6 * pair.max_diff.abs().max(1.0));
}

#[test]
fn one_object_reduces_to_its_bounds() {
    let objects = [held(0.0, 0.015)];
    let ws = workspace(0.0);
    let opts = SearchOptions::default();
    let bounds = target_bounds(&objects[0].lambda);

    let ok = pairwise_feasibility(&kelvin(&[45.0]), &objects, &ws, &opts).unwrap();
    assert!(ok.feasible());
    assert!(ok.pairs.is_empty());

    let too_hot = pairwise_feasibility(&[bounds.hi + 1.0], &objects, &ws, &opts).unwrap();
    assert!(!too_hot.within_bounds[0]);
    assert!(!too_hot.feasible());

    let too_cold = pairwise_feasibility(&[bounds.lo - 1.0], &objects, &ws, &opts).unwrap();
    assert!(!too_cold.feasible());
}

#[test]
fn steady_temperature_falls_along_the_axis() {
    let l = aluminum(0.015);
    let disk = Contour::circle(0.015).unwrap();
    let mut previous = f64::INFINITY;
    for k in 1..=60 {
        let z = 0.005 * k as f64;
        let f = vf_general(&Pose::translation(0.0, 0.0, z).unwrap(), 0.10, &disk, QuadratureSpec::PRODUCTION)
            .unwrap()
            .value();
        let t = steady_state_temperature(f, &l);
        assert!(t < previous, "z {z}: {t} after {previous}");
        previous = t;
    }
}

#[test]
fn mismatched_inputs_are_rejected() {
    let objects = [held(0.0, 0.015)];
    let opts = SearchOptions::default();
    assert!(pairwise_feasibility(&[300.0, 310.0], &objects, &workspace(0.0), &opts).is_err());
    assert!(pairwise_feasibility(&[], &[], &workspace(0.0), &opts).is_err());
}
