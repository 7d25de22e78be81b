use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use thermoservo::estimation::SampleWindow;
use thermoservo::feasibility::{isosurface_grid, GridSpec, Subset};
use thermoservo::geometry::{Contour, Pose};
use thermoservo::simulator::{export_field, run_simulation, scenario_feasibility, Scenario};
use thermoservo::thermal::kelvin_to_celsius;
use thermoservo::viewfactor::{vf_dsi_oracle, vf_general, QuadratureSpec};
use thermoservo::Error;

#[derive(Parser)]
#[command(name = "thermoservo", version, about = "Radiative thermal servoing simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario in closed loop and write the per-tick log as CSV.
    Simulate {
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// View factor from a posed disk to the source.
    Viewfactor {
        /// p1 p2 p3 (cm) and theta_x theta_y theta_z (deg).
        #[arg(long, num_args = 6, allow_negative_numbers = true, value_names = ["P1", "P2", "P3", "TX", "TY", "TZ"])]
        pose: Vec<f64>,
        #[arg(long, value_enum, default_value_t = Method::Contour)]
        method: Method,
        #[arg(long, default_value_t = 1.5)]
        radius_cm: f64,
        #[arg(long, default_value_t = 10.0)]
        source_radius_cm: f64,
        /// Contour nodes per boundary, or DSI facets per surface.
        #[arg(long)]
        resolution: Option<usize>,
    },
    /// Evaluate the view factor of a disk over a pose grid and export it as CSV.
    Isosurface {
        #[arg(long, value_enum)]
        subset: SubsetArg,
        #[arg(long)]
        out: PathBuf,
        /// Cell size, cm for translation and degrees for rotation.
        #[arg(long)]
        step: Option<f64>,
        /// Fixed part of the pose (cm, deg) for the coordinates the grid does not vary.
        #[arg(long, num_args = 6, allow_negative_numbers = true, default_values_t = [0.0, 0.0, 5.0, 0.0, 0.0, 0.0])]
        base: Vec<f64>,
        #[arg(long, default_value_t = 1.5)]
        radius_cm: f64,
        #[arg(long, default_value_t = 10.0)]
        source_radius_cm: f64,
    },
    /// Check whether a scenario's targets can be held simultaneously.
    Feasibility {
        scenario: PathBuf,
        /// Search grid cell size, cm.
        #[arg(long, default_value_t = 0.5)]
        step_cm: f64,
    },
    /// Slope recovery of the windowed estimator on seeded noisy ramps.
    EstimateBench {
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        /// True slope of the ramp, K/s.
        #[arg(long, default_value_t = 2.0)]
        slope: f64,
        /// Half-width of the uniform noise, K.
        #[arg(long, default_value_t = 0.1)]
        noise: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Contour,
    Dsi,
}

#[derive(Clone, Copy, ValueEnum)]
enum SubsetArg {
    Translation,
    Rotation,
}

/// Process exit statuses.
enum Failure {
    InvalidInput(String),
    Workspace(String),
    Numerical(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::InvalidInput(_) => 2,
            Failure::Workspace(_) => 3,
            Failure::Numerical(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::InvalidInput(m) | Failure::Workspace(m) | Failure::Numerical(m) => m,
        }
    }
}

fn invalid(e: Error) -> Failure {
    Failure::InvalidInput(e.to_string())
}

fn classify(e: Error) -> Failure {
    match e {
        Error::Io(_) | Error::InvalidArgument(_) | Error::Scenario(_) | Error::EmptyGrid | Error::DegeneratePose(_) => {
            Failure::InvalidInput(e.to_string())
        }
        _ => Failure::Numerical(e.to_string()),
    }
}

fn pose_from(values: &[f64]) -> Result<Pose, Failure> {
    let c: [f64; 6] = values
        .try_into()
        .map_err(|_| Failure::InvalidInput("a pose needs six values".into()))?;
    Pose::from_cm_deg(c).map_err(invalid)
}

fn disk(radius_cm: f64) -> Result<Contour, Failure> {
    Contour::circle(radius_cm * 0.01).map_err(invalid)
}

fn simulate(scenario: PathBuf, out: PathBuf) -> Result<(), Failure> {
    let sc = Scenario::from_file(&scenario).map_err(invalid)?;
    let log = run_simulation(&sc).map_err(classify)?;
    log.write_csv(&out).map_err(invalid)?;
    println!("wrote {} ticks to {}", log.records.len(), out.display());
    if let Some(last) = log.last() {
        for (i, (t, target)) in last.t_true.iter().zip(&log.targets).enumerate() {
            println!(
                "object {i}: {:.2} C, target {:.2} C",
                kelvin_to_celsius(*t),
                kelvin_to_celsius(*target)
            );
        }
    }
    match log.violation {
        Some(v) => Err(Failure::Workspace(format!("stopped at t = {:.1} s: {}", v.time, v.reason))),
        None => Ok(()),
    }
}

fn viewfactor(
    pose: Vec<f64>,
    method: Method,
    radius_cm: f64,
    source_radius_cm: f64,
    resolution: Option<usize>,
) -> Result<(), Failure> {
    let pose = pose_from(&pose)?;
    let object = disk(radius_cm)?;
    let source = source_radius_cm * 0.01;
    let value = match method {
        Method::Contour => {
            let spec = match resolution {
                Some(n) => QuadratureSpec::new(n).map_err(invalid)?,
                None => QuadratureSpec::PRODUCTION,
            };
            vf_general(&pose, source, &object, spec).map_err(classify)?.value()
        }
        Method::Dsi => vf_dsi_oracle(&pose, source, &object, resolution.unwrap_or(20_000)).map_err(classify)?,
    };
    println!("{value:.9e}");
    Ok(())
}

fn isosurface(
    subset: SubsetArg,
    out: PathBuf,
    step: Option<f64>,
    base: Vec<f64>,
    radius_cm: f64,
    source_radius_cm: f64,
) -> Result<(), Failure> {
    let base = pose_from(&base)?;
    let (subset, grid) = match subset {
        SubsetArg::Translation => (
            Subset::Translation,
            GridSpec::translation_workspace(step.unwrap_or(1.0) * 0.01).map_err(invalid)?,
        ),
        SubsetArg::Rotation => (
            Subset::Rotation,
            GridSpec::rotation_workspace(step.unwrap_or(6.0).to_radians()).map_err(invalid)?,
        ),
    };
    let field = isosurface_grid(
        source_radius_cm * 0.01,
        &disk(radius_cm)?,
        subset,
        &grid,
        &base,
        QuadratureSpec::PRODUCTION,
    )
    .map_err(classify)?;
    export_field(&field, &out).map_err(invalid)?;
    let rejected = field.degenerate.iter().filter(|d| **d).count();
    println!("wrote {} cells to {} ({rejected} rejected poses)", field.values.len(), out.display());
    Ok(())
}

fn feasibility(scenario: PathBuf, step_cm: f64) -> Result<(), Failure> {
    let sc = Scenario::from_file(&scenario).map_err(invalid)?;
    let report = scenario_feasibility(&sc, step_cm * 0.01).map_err(classify)?;
    for (i, (ok, o)) in report.within_bounds.iter().zip(&sc.objects).enumerate() {
        let verdict = if *ok { "within bounds" } else { "outside bounds" };
        println!("object {i}: target {:.2} C {verdict}", kelvin_to_celsius(o.target));
    }
    for p in &report.pairs {
        println!(
            "pair ({}, {}): steady difference spans [{:.2}, {:.2}] K, target difference {:.2} K",
            p.i, p.j, p.min_diff, p.max_diff, p.target_diff
        );
    }
    if let Some(pose) = report.best_pose {
        let c = pose.coords();
        println!(
            "best end-effector position ({:.2}, {:.2}, {:.2}) cm, worst |T - T*| {:.3} K",
            c[0] * 100.0,
            c[1] * 100.0,
            c[2] * 100.0,
            report.residual
        );
    }
    println!("{}", if report.feasible() { "feasible" } else { "infeasible" });
    Ok(())
}

fn ramp_slope(seed: u64, slope: f64, noise: f64) -> Result<f64, Failure> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut window = SampleWindow::new();
    let mut est = None;
    for k in 0..10 {
        let t = k as f64;
        let y = 300.0 + slope * t + rng.random_range(-noise..=noise);
        est = window.push_and_estimate(t, y).map_err(classify)?;
    }
    est.map(|e| e.rate)
        .ok_or_else(|| Failure::Numerical("estimator produced no output".into()))
}

fn estimate_bench(seed: u64, trials: u64, slope: f64, noise: f64) -> Result<(), Failure> {
    if !(noise >= 0.0 && noise.is_finite() && slope.is_finite()) {
        return Err(Failure::InvalidInput("noise must be a finite value >= 0".into()));
    }
    let first = ramp_slope(seed, slope, noise)?;
    println!("seed {seed}: slope {first:.6} K/s (true {slope})");
    if trials > 0 {
        let mut errors = Vec::with_capacity(trials as usize);
        for s in seed..seed.saturating_add(trials) {
            errors.push((ramp_slope(s, slope, noise)? - slope).abs());
        }
        let within = errors.iter().filter(|e| **e <= 0.15).count();
        let worst = errors.iter().copied().fold(0.0, f64::max);
        let rms = (errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64).sqrt();
        println!(
            "{} seeds from {seed}: rms error {rms:.4}, worst {worst:.4}, {within} within 0.15 K/s",
            errors.len()
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate { scenario, out } => simulate(scenario, out),
        Command::Viewfactor {
            pose,
            method,
            radius_cm,
            source_radius_cm,
            resolution,
        } => viewfactor(pose, method, radius_cm, source_radius_cm, resolution),
        Command::Isosurface {
            subset,
            out,
            step,
            base,
            radius_cm,
            source_radius_cm,
        } => isosurface(subset, out, step, base, radius_cm, source_radius_cm),
        Command::Feasibility { scenario, step_cm } => feasibility(scenario, step_cm),
        Command::EstimateBench {
            seed,
            trials,
            slope,
            noise,
        } => estimate_bench(seed, trials, slope, noise),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
