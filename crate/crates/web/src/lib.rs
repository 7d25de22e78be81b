//! Browser bindings for the demo page in `www/`.
//!
//! Each exported function is a thin wrapper over a plain Rust function so the
//! numerics can be tested natively.

use wasm_bindgen::prelude::*;

use thermoservo::feasibility::{isosurface_grid, GridAxis, GridSpec, Subset};
use thermoservo::geometry::{Contour, Pose};
use thermoservo::simulator::{run_simulation, Scenario};
use thermoservo::thermal::kelvin_to_celsius;
use thermoservo::viewfactor::{vf_general, QuadratureSpec};

const SOURCE_RADIUS: f64 = 0.10;

/// View factor from a disk of `radius_cm` at the given pose (cm, degrees).
pub fn disk_view_factor(pose_cm_deg: [f64; 6], radius_cm: f64) -> Result<f64, String> {
    let pose = Pose::from_cm_deg(pose_cm_deg).map_err(|e| e.to_string())?;
    let disk = Contour::circle(radius_cm * 0.01).map_err(|e| e.to_string())?;
    vf_general(&pose, SOURCE_RADIUS, &disk, QuadratureSpec::PRODUCTION)
        .map(|f| f.value())
        .map_err(|e| e.to_string())
}

/// Row-major `cells x cells` view factors over `p1, p2` in
/// `[-half_width_cm, half_width_cm]` at height `height_cm`, disk parallel to the source.
pub fn height_slice(height_cm: f64, half_width_cm: f64, cells: usize, radius_cm: f64) -> Result<Vec<f64>, String> {
    if cells == 0 || cells > 200 {
        return Err("cells must be between 1 and 200".into());
    }
    let w = half_width_cm * 0.01;
    let z = height_cm * 0.01;
    let grid = GridSpec {
        axes: [
            GridAxis::cells(-w, w, 2.0 * w / cells as f64).map_err(|e| e.to_string())?,
            GridAxis::cells(-w, w, 2.0 * w / cells as f64).map_err(|e| e.to_string())?,
            GridAxis::new(z, 1.0, 1).map_err(|e| e.to_string())?,
        ],
    };
    let disk = Contour::circle(radius_cm * 0.01).map_err(|e| e.to_string())?;
    let field = isosurface_grid(
        SOURCE_RADIUS,
        &disk,
        Subset::Translation,
        &grid,
        &Pose::identity(),
        QuadratureSpec::INNER_LOOP,
    )
    .map_err(|e| e.to_string())?;
    Ok(field.values)
}

fn film_scenario(target_c: f64, gain: f64, duration_s: f64) -> String {
    format!(
        r#"
[robot]
initial_pose = [0, 0, 15, 0, 0, 0]
dofs = ["p3"]
workspace_min_cm = [-20, -20, 0.5]
workspace_max_cm = [20, 20, 30]
at_limit = "hold"

[[objects]]
shape = {{ kind = "circle", radius_cm = 1.5 }}
material = {{ emittance = 0.9, absorptance = 0.9, specific_heat = 1800, density = 1240, thickness_mm = 0.2, infill = 0.5 }}
initial_c = 23
target_c = {target_c}

[controller]
kind = "model-based"
d = 0.2
k = {gain}

[sensing]
mode = "exact"

[timing]
period_s = 0.5
duration_s = {duration_s}
"#
    )
}

/// Model-based run of a thin disk moving along the source axis.
/// Returns `[time_s, temperature_c, height_cm]` triples, flattened.
pub fn film_run(target_c: f64, gain: f64, duration_s: f64) -> Result<Vec<f64>, String> {
    if !(duration_s > 0.0 && duration_s <= 3600.0) {
        return Err("duration must be in (0, 3600] s".into());
    }
    let sc = Scenario::from_toml_str(&film_scenario(target_c, gain, duration_s)).map_err(|e| e.to_string())?;
    let log = run_simulation(&sc).map_err(|e| e.to_string())?;
    Ok(log
        .records
        .iter()
        .flat_map(|r| [r.time, kelvin_to_celsius(r.t_true[0]), r.pose[2] * 100.0])
        .collect())
}

fn js<T>(r: Result<T, String>) -> Result<T, JsValue> {
    r.map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = viewFactor)]
pub fn view_factor(p1: f64, p2: f64, p3: f64, tx: f64, ty: f64, tz: f64, radius_cm: f64) -> Result<f64, JsValue> {
    js(disk_view_factor([p1, p2, p3, tx, ty, tz], radius_cm))
}

#[wasm_bindgen(js_name = heightSlice)]
pub fn height_slice_js(height_cm: f64, half_width_cm: f64, cells: usize, radius_cm: f64) -> Result<Vec<f64>, JsValue> {
    js(height_slice(height_cm, half_width_cm, cells, radius_cm))
}

#[wasm_bindgen(js_name = filmRun)]
pub fn film_run_js(target_c: f64, gain: f64, duration_s: f64) -> Result<Vec<f64>, JsValue> {
    js(film_run(target_c, gain, duration_s))
}
