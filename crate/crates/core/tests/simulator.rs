use std::path::PathBuf;

use thermoservo::simulator::{run_simulation, scenario_feasibility, AtLimit, Scenario, SensingMode};
use thermoservo::thermal::celsius_to_kelvin;
use thermoservo::Error;

fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn load(name: &str) -> Scenario {
    Scenario::from_file(scenario_path(name)).unwrap()
}

const MINIMAL: &str = r#"
[[objects]]
shape = { kind = "circle", radius_cm = 1.5 }
material = { emittance = 0.9, absorptance = 0.9, specific_heat = 1800, density = 1240, thickness_mm = 0.2 }
initial_c = 23
target_c = 40

[controller]
kind = "model-based"
k = 0.05

[timing]
duration_s = 30
"#;

#[test]
fn shipped_scenarios_parse() {
    for name in [
        "film_disk.toml",
        "aluminum_disk.toml",
        "three_objects.toml",
        "moving_source.toml",
        "unreachable.toml",
    ] {
        let sc = load(name);
        assert!(!sc.objects.is_empty(), "{name}");
    }
}

#[test]
fn defaults_fill_missing_sections() {
    let sc = Scenario::from_toml_str(MINIMAL).unwrap();
    assert_eq!(sc.dofs, vec![0, 1, 2]);
    assert_eq!(sc.period, 1.0);
    assert_eq!(sc.ticks(), 31);
    assert_eq!(sc.sensing.mode, SensingMode::Estimated);
    assert_eq!(sc.at_limit, AtLimit::Stop);
    assert!((sc.source_radius - 0.10).abs() < 1e-15);
    assert!((sc.objects[0].target - celsius_to_kelvin(40.0)).abs() < 1e-12);
}

#[test]
fn rejects_bad_scenarios() {
    let cases = [
        MINIMAL.replace("kind = \"model-based\"", "kind = \"pid\""),
        MINIMAL.replace("initial_c = 23", "initial_c = 23\ncolour = \"red\""),
        MINIMAL.replace("initial_c = 23", "initial_c = 23\nknown = false"),
        MINIMAL.replace("[timing]", "[robot]\ndofs = [\"p9\"]\n[timing]"),
        MINIMAL.replace("[timing]", "[robot]\ninitial_pose = [0, 0, 50, 0, 0, 0]\n[timing]"),
        MINIMAL.replace("[timing]", "[robot]\nat_limit = \"bounce\"\n[timing]"),
        MINIMAL.replace("duration_s = 30", "duration_s = -1"),
        MINIMAL.replace("radius_cm = 1.5", "radius_cm = 0"),
        MINIMAL.replace("[timing]", "[robot]\ndofs = [\"p3\"]\n[timing]")
            + "[[objects]]\nshape = { kind = \"circle\", radius_cm = 1 }\nmaterial = { emittance = 0.9, absorptance = 0.9, specific_heat = 1800, density = 1240, thickness_mm = 0.2 }\ninitial_c = 23\ntarget_c = 40\n",
        "not toml at all [".to_string(),
    ];
    for text in cases {
        assert!(
            matches!(Scenario::from_toml_str(&text), Err(Error::Scenario(_))),
            "accepted:\n{text}"
        );
    }
}

#[test]
fn log_has_one_row_per_tick() {
    let mut sc = load("film_disk.toml");
    sc.duration = 20.0;
    let log = run_simulation(&sc).unwrap();
    assert!(log.completed());
    assert_eq!(log.records.len(), sc.ticks());
    assert!(log.records.windows(2).all(|w| w[1].time > w[0].time));
    let csv = log.to_csv();
    let mut lines = csv.lines();
    let width = lines.next().unwrap().split(',').count();
    assert_eq!(width, log.header().len());
    assert_eq!(lines.clone().count(), sc.ticks());
    assert!(lines.all(|l| l.split(',').count() == width));
}

#[test]
fn same_seed_gives_identical_csv() {
    let mut sc = load("three_objects.toml");
    sc.duration = 30.0;
    let a = run_simulation(&sc).unwrap().to_csv();
    let b = run_simulation(&sc).unwrap().to_csv();
    assert_eq!(a, b);
    sc.sensing.seed += 1;
    assert_ne!(a, run_simulation(&sc).unwrap().to_csv());
}

#[test]
fn controller_waits_for_full_window() {
    let mut sc = load("three_objects.toml");
    sc.duration = 10.0;
    let log = run_simulation(&sc).unwrap();
    for (k, r) in log.records.iter().enumerate() {
        assert_eq!(r.active, k >= 9, "tick {k}");
        if !r.active {
            assert!(r.u.iter().all(|u| *u == 0.0));
            assert_eq!(r.pose, sc.initial_pose.coords());
        }
    }
}

#[test]
fn noiseless_estimates_track_truth() {
    let mut sc = load("film_disk.toml");
    sc.sensing.mode = SensingMode::Estimated;
    sc.sensing.noise = 0.0;
    sc.duration = 40.0;
    let log = run_simulation(&sc).unwrap();
    for r in log.records.iter().skip(9) {
        let t_hat = r.t_hat[0].unwrap();
        assert!((t_hat - r.t_true[0]).abs() < 0.05, "{t_hat} vs {}", r.t_true[0]);
        assert_eq!(r.t_measured[0], r.t_true[0]);
    }
}

#[test]
fn leaving_the_workspace_stops_the_run() {
    let mut sc = load("film_disk.toml");
    sc.at_limit = AtLimit::Stop;
    sc.controller.gains.k = 0.5;
    let log = run_simulation(&sc).unwrap();
    let v = log.violation.as_ref().expect("expected a workspace violation");
    assert!(v.reason.contains("workspace"), "{}", v.reason);
    assert!(log.records.len() < sc.ticks());
    assert!(log.records.iter().all(|r| sc.inside_workspace(&thermoservo::geometry::Pose::from_coords(r.pose).unwrap())));
}

#[test]
fn holding_at_the_limit_marks_ticks_clamped() {
    let mut sc = load("film_disk.toml");
    sc.controller.gains.k = 0.5;
    sc.duration = 30.0;
    let log = run_simulation(&sc).unwrap();
    assert!(log.completed());
    let lowest = log.records.iter().map(|r| r.pose[2]).fold(f64::INFINITY, f64::min);
    assert!((lowest - sc.workspace_min[2]).abs() < 1e-12);
    assert!(log.records.iter().any(|r| r.clamped));
}

#[test]
fn source_schedule_interpolates() {
    let sc = load("moving_source.toml");
    assert_eq!(sc.source_pose(0.0).position().x, 0.0);
    assert!((sc.source_pose(255.0).position().x - 0.025).abs() < 1e-12);
    assert!((sc.source_pose(1000.0).position().x - 0.05).abs() < 1e-12);
}

#[test]
fn feasibility_of_shipped_scenarios() {
    let ok = scenario_feasibility(&load("three_objects.toml"), 0.01).unwrap();
    assert!(ok.feasible(), "{ok:?}");
    let bad = scenario_feasibility(&load("unreachable.toml"), 0.01).unwrap();
    assert!(!bad.feasible());
    assert!(bad.within_bounds.iter().all(|b| !b));
}
