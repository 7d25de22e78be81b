//! Closed-loop simulation: sense, estimate, control, move, heat.

mod log;
mod scenario;

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::control::{adaptive_control, adaptive_update, model_based_control, AdaptiveState, ControlOutput};
use crate::error::{Error, Result};
use crate::estimation::SampleWindow;
use crate::feasibility::{
    pairwise_feasibility, FeasibilityReport, GridAxis, GridSpec, HeldObject, ScalarField, SearchOptions, Subset,
    Workspace,
};
use crate::geometry::{Contour, Pose};
use crate::interaction::{assemble, fd_gradient, l_parallel, FdSteps};
use crate::thermal::MultiPlant;
use crate::viewfactor::{resolved_quadrature, vf_general, vf_general_fixed};

pub use log::{RunLog, TickRecord, Violation};
pub use scenario::{
    AdaptiveInit, AtLimit, ControllerConfig, ControllerKind, ObjectConfig, Scenario, Sensing, SensingMode, Waypoint,
    DOF_NAMES,
};

/// Pose of object `obj` in the source frame when the end-effector is at `ee`.
pub fn object_pose(ee: &Pose, obj: &ObjectConfig, source: &Pose) -> Result<Pose> {
    ee.attach(&obj.offset).relative_to(source)
}

fn view_factor(sc: &Scenario, ee: &Pose, obj: &ObjectConfig, source: &Pose) -> Result<f64> {
    Ok(vf_general(&object_pose(ee, obj, source)?, sc.source_radius, &obj.contour, sc.quadrature)?.value())
}

/// Gradient of an object's view factor with respect to the controlled
/// end-effector coordinates.
pub fn view_factor_gradient(sc: &Scenario, ee: &Pose, obj: &ObjectConfig, source: &Pose) -> Result<Vec<f64>> {
    let rel = object_pose(ee, obj, source)?;
    if let Contour::Circle { radius } = obj.contour {
        if rel.is_unrotated() && source.is_unrotated() && sc.dofs.iter().all(|d| *d < 3) {
            let g = l_parallel(&rel, sc.source_radius, radius, 1.0, sc.quadrature)?;
            return Ok(sc.dofs.iter().map(|d| g[*d]).collect());
        }
    }
    // Perturbed poses reuse the base resolution so the difference never
    // straddles a refinement step.
    let spec = resolved_quadrature(&rel, sc.source_radius, &obj.contour, sc.quadrature)?;
    fd_gradient(ee, &sc.dofs, FdSteps::default(), |p| {
        Ok(vf_general_fixed(&object_pose(p, obj, source)?, sc.source_radius, &obj.contour, spec)?.value())
    })
}

/// Starting parameter estimates. Nominal uses each object's configured
/// material; random scales those by seeded factors.
fn initial_estimates(sc: &Scenario) -> Result<AdaptiveState> {
    let a1_ref: Vec<f64> = sc.objects.iter().map(|o| 1.0 / o.lambda.l1).collect();
    let a2_ref: Vec<f64> = sc.objects.iter().map(|o| o.lambda.l2 / o.lambda.l1).collect();
    let (a1, a2) = match &sc.controller.init {
        AdaptiveInit::Nominal => (a1_ref, a2_ref),
        AdaptiveInit::Random { seed, factor_range } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let mut draw = || rng.random_range(factor_range[0]..=factor_range[1]);
            let a1: Vec<f64> = a1_ref.iter().map(|a| a * draw()).collect();
            let a2: Vec<f64> = a2_ref.iter().map(|a| a * draw()).collect();
            (a1, a2)
        }
        AdaptiveInit::Explicit { a1, a2 } => (a1.clone(), a2.clone()),
    };
    AdaptiveState::new(DVector::from_vec(a1), DVector::from_vec(a2))
}

fn degenerate_to_violation(e: Error, time: f64) -> std::result::Result<Violation, Error> {
    match e {
        Error::DegeneratePose(msg) => Ok(Violation {
            time,
            reason: format!("object pose rejected: {msg}"),
        }),
        other => Err(other),
    }
}

/// Runs a scenario to completion or until the end-effector leaves the workspace.
pub fn run_simulation(sc: &Scenario) -> Result<RunLog> {
    let n = sc.objects.len();
    let ticks = sc.ticks();
    let mut log = RunLog::new(sc);
    let mut ee = sc.initial_pose;
    let mut plant = MultiPlant::new(
        sc.objects.iter().map(|o| o.lambda).collect(),
        sc.objects.iter().map(|o| o.initial).collect(),
    )?;
    let mut windows = vec![SampleWindow::new(); n];
    let mut noise = ChaCha8Rng::seed_from_u64(sc.sensing.seed);
    let mut est = initial_estimates(sc)?;
    let a1_true = DVector::from_iterator(n, sc.objects.iter().map(|o| 1.0 / o.lambda.l1));
    let a2_true = DVector::from_iterator(n, sc.objects.iter().map(|o| o.lambda.l2 / o.lambda.l1));
    let targets = DVector::from_iterator(n, sc.objects.iter().map(|o| o.target));
    let substeps = (sc.period / sc.plant_dt).ceil().max(1.0) as usize;
    let h = sc.period / substeps as f64;
    let adaptive = sc.controller.kind == ControllerKind::Adaptive;

    for k in 0..ticks {
        let t = k as f64 * sc.period;
        let source = sc.source_pose(t);
        let f21: Vec<f64> = match sc
            .objects
            .iter()
            .map(|o| view_factor(sc, &ee, o, &source))
            .collect::<Result<Vec<f64>>>()
        {
            Ok(f) => f,
            Err(e) => {
                log.violation = Some(degenerate_to_violation(e, t)?);
                break;
            }
        };
        let rates = plant.rates(&f21);
        let truth = plant.temperatures.clone();

        let mut measured = truth.clone();
        let mut estimates: Vec<Option<(f64, f64)>> = Vec::with_capacity(n);
        match sc.sensing.mode {
            SensingMode::Exact => {
                for i in 0..n {
                    estimates.push(Some((truth[i], rates[i])));
                }
            }
            SensingMode::Estimated => {
                for i in 0..n {
                    if sc.sensing.noise > 0.0 {
                        measured[i] += noise.random_range(-sc.sensing.noise..=sc.sensing.noise);
                    }
                    let e = windows[i].push_and_estimate(t, measured[i])?;
                    estimates.push(e.map(|e| (e.temperature, e.rate)));
                }
            }
        }
        let active = estimates.iter().all(|e| e.is_some());

        let mut next = ee;
        if active {
            let t_hat = DVector::from_iterator(n, estimates.iter().map(|e| e.unwrap().0));
            let v_hat = DVector::from_iterator(n, estimates.iter().map(|e| e.unwrap().1));
            let dtau = &t_hat - &targets;
            let t3 = t_hat.map(|x| x.powi(3));
            let mut grads = Vec::with_capacity(n);
            for o in &sc.objects {
                match view_factor_gradient(sc, &ee, o, &source) {
                    Ok(g) => grads.push(g),
                    Err(e) => {
                        log.violation = Some(degenerate_to_violation(e, t)?);
                        break;
                    }
                }
            }
            if log.violation.is_some() {
                break;
            }
            let g = &sc.controller.gains;
            let mut out = if adaptive {
                let j = DMatrix::from_fn(n, sc.dofs.len(), |i, c| grads[i][c]);
                adaptive_control(&j, &v_hat, &dtau, &t3, &est, g, sc.controller.damping, Some((&a1_true, &a2_true)))?
            } else {
                let rows: Vec<Vec<f64>> = grads
                    .iter()
                    .zip(&sc.objects)
                    .map(|(gr, o)| gr.iter().map(|x| x * o.lambda.l1).collect())
                    .collect();
                let l1s: Vec<f64> = sc.objects.iter().map(|o| o.lambda.l1).collect();
                let (l, _) = assemble(&rows, &l1s)?;
                let l2 = DVector::from_iterator(n, sc.objects.iter().map(|o| o.lambda.l2));
                model_based_control(&l, &v_hat, &dtau, &t3, &l2, g, sc.controller.damping)?
            };
            if out.u.iter().any(|x| !x.is_finite()) {
                return Err(Error::Divergence(format!("non-finite velocity command at t = {t} s")));
            }
            out.clamp(&sc.dofs, &sc.limits);
            let mut c = ee.coords();
            for (d, u) in sc.dofs.iter().zip(out.u.iter()) {
                c[*d] += sc.period * u;
            }
            let mut stepped = Pose::from_coords(c)?;
            if sc.at_limit == AtLimit::Hold && !sc.inside_workspace(&stepped) {
                stepped = sc.clip_to_workspace(&stepped)?;
                out.clamped = true;
            }
            next = stepped;
            let inc = match &out.zeta {
                Some(zeta) if adaptive => Some(adaptive_update(&v_hat, zeta, &t3, g, sc.period)?),
                _ => None,
            };
            log.push(TickRecord::new(t, &ee, &truth, &measured, &estimates, &targets, &f21, &out, adaptive.then_some(&est)));
            if let Some(inc) = inc {
                est.apply(&inc);
            }
        } else {
            let idle = ControlOutput {
                u: DVector::zeros(sc.dofs.len()),
                lyapunov: None,
                error_norm: f64::NAN,
                zeta: None,
                clamped: false,
            };
            log.push(TickRecord::new(
                t,
                &ee,
                &truth,
                &measured,
                &estimates,
                &targets,
                &f21,
                &idle,
                adaptive.then_some(&est),
            ));
        }

        if k + 1 == ticks {
            break;
        }

        ee = next;
        let t_next = t + sc.period;
        if !sc.inside_workspace(&ee) {
            let p = ee.position();
            log.violation = Some(Violation {
                time: t_next,
                reason: format!(
                    "end-effector left the workspace at ({:.4}, {:.4}, {:.4}) m",
                    p.x, p.y, p.z
                ),
            });
            break;
        }
        let source_next = sc.source_pose(t_next);
        let f_next: Vec<f64> = match sc
            .objects
            .iter()
            .map(|o| view_factor(sc, &ee, o, &source_next))
            .collect::<Result<Vec<f64>>>()
        {
            Ok(f) => f,
            Err(e) => {
                log.violation = Some(degenerate_to_violation(e, t_next)?);
                break;
            }
        };
        for _ in 0..substeps {
            plant.step(&f_next, h)?;
        }
    }
    Ok(log)
}

/// Steady-state feasibility of the scenario targets over its workspace box,
/// scanned at `step` meters and the initial end-effector orientation.
pub fn scenario_feasibility(sc: &Scenario, step: f64) -> Result<FeasibilityReport> {
    let axes = [0, 1, 2].map(|k| GridAxis::cells(sc.workspace_min[k], sc.workspace_max[k], step));
    let [a, b, c] = axes;
    let ws = Workspace {
        grid: GridSpec { axes: [a?, b?, c?] },
        angles: sc.initial_pose.angles(),
    };
    let objects: Vec<HeldObject> = sc
        .objects
        .iter()
        .map(|o| HeldObject {
            offset: o.offset,
            contour: o.contour.clone(),
            lambda: o.lambda,
        })
        .collect();
    let targets: Vec<f64> = sc.objects.iter().map(|o| o.target).collect();
    let opts = SearchOptions {
        source_radius: sc.source_radius,
        ..SearchOptions::default()
    };
    pairwise_feasibility(&targets, &objects, &ws, &opts)
}

/// Writes a field as CSV: grid coordinates (cm for translations, degrees
/// for rotations) and the cell value, in row-major cell order.
pub fn write_field_csv(field: &ScalarField, out: &mut impl std::io::Write) -> Result<()> {
    if field.values.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let (header, scale) = match field.subset {
        Subset::Translation => ("p1,p2,p3,value", 100.0),
        Subset::Rotation => ("tx,ty,tz,value", 180.0 / std::f64::consts::PI),
    };
    let mut buf = String::with_capacity(field.values.len() * 64);
    buf.push_str(header);
    buf.push('\n');
    for (i, v) in field.values.iter().enumerate() {
        let p = field.grid.point(i);
        buf.push_str(&format!(
            "{:.8e},{:.8e},{:.8e},{:.8e}\n",
            p[0] * scale,
            p[1] * scale,
            p[2] * scale,
            v
        ));
    }
    out.write_all(buf.as_bytes())?;
    Ok(())
}

pub fn export_field(field: &ScalarField, path: impl AsRef<Path>) -> Result<()> {
    if field.values.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_field_csv(field, &mut f)?;
    std::io::Write::flush(&mut f)?;
    Ok(())
}
