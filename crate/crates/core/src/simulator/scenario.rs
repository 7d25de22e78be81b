//! Scenario files: TOML in centimeters, degrees and Celsius.

use std::path::Path;

use nalgebra::Vector3;
use serde::Deserialize;

use crate::control::{Gains, VelocityLimits, DEFAULT_DAMPING};
use crate::error::{Error, Result};
use crate::geometry::{fourier_fit, Contour, Pose};
use crate::thermal::{celsius_to_kelvin, lambdas, Environment, LambdaParams, ThermoParams};
use crate::viewfactor::QuadratureSpec;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    #[serde(default)]
    environment: RawEnvironment,
    #[serde(default)]
    source: RawSource,
    #[serde(default)]
    robot: RawRobot,
    objects: Vec<RawObject>,
    controller: RawController,
    #[serde(default)]
    sensing: RawSensing,
    timing: RawTiming,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawEnvironment {
    source_temperature_c: f64,
    source_emittance: f64,
    ambient_c: f64,
}

impl Default for RawEnvironment {
    fn default() -> Self {
        Self {
            source_temperature_c: 200.0,
            source_emittance: 0.25,
            ambient_c: 23.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawSource {
    radius_cm: f64,
    #[serde(default)]
    waypoints: Vec<RawWaypoint>,
}

impl Default for RawSource {
    fn default() -> Self {
        Self {
            radius_cm: 10.0,
            waypoints: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWaypoint {
    time_s: f64,
    pose: [f64; 6],
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawRobot {
    initial_pose: [f64; 6],
    dofs: Vec<String>,
    workspace_min_cm: [f64; 3],
    workspace_max_cm: [f64; 3],
    max_speed_cm_s: f64,
    max_rotation_deg_s: f64,
    at_limit: String,
}

impl Default for RawRobot {
    fn default() -> Self {
        Self {
            initial_pose: [0.0, 0.0, 15.0, 0.0, 0.0, 0.0],
            dofs: vec!["p1".into(), "p2".into(), "p3".into()],
            workspace_min_cm: [-20.0, -20.0, 0.5],
            workspace_max_cm: [20.0, 20.0, 30.0],
            max_speed_cm_s: 5.0,
            max_rotation_deg_s: 0.2f64.to_degrees(),
            at_limit: "stop".into(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum RawShape {
    Circle { radius_cm: f64 },
    Polygon { points_cm: Vec<[f64; 2]>, harmonics: usize },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMaterial {
    emittance: f64,
    absorptance: f64,
    specific_heat: f64,
    density: f64,
    thickness_mm: f64,
    #[serde(default = "one")]
    infill: f64,
}

fn one() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawObject {
    #[serde(default)]
    name: Option<String>,
    shape: RawShape,
    material: RawMaterial,
    #[serde(default = "yes")]
    known: bool,
    #[serde(default)]
    offset_cm: [f64; 3],
    initial_c: f64,
    target_c: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawController {
    kind: String,
    #[serde(default = "default_d")]
    d: f64,
    k: f64,
    #[serde(default = "default_mu")]
    mu: f64,
    #[serde(default = "one")]
    gamma1: f64,
    #[serde(default = "default_gamma2")]
    gamma2: f64,
    #[serde(default = "default_damping")]
    damping: f64,
    #[serde(default)]
    init: Option<RawInit>,
}

fn default_d() -> f64 {
    0.2
}
fn default_mu() -> f64 {
    0.05
}
fn default_gamma2() -> f64 {
    1e-19
}
fn default_damping() -> f64 {
    DEFAULT_DAMPING
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase", deny_unknown_fields)]
enum RawInit {
    Nominal,
    Random { seed: u64, factor_range: [f64; 2] },
    Explicit { a1: Vec<f64>, a2: Vec<f64> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawSensing {
    mode: String,
    noise_c: f64,
    seed: u64,
}

impl Default for RawSensing {
    fn default() -> Self {
        Self {
            mode: "estimated".into(),
            noise_c: 0.1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTiming {
    #[serde(default = "one")]
    period_s: f64,
    duration_s: f64,
    #[serde(default = "default_plant_dt")]
    plant_dt_s: f64,
    #[serde(default = "default_quadrature")]
    quadrature: usize,
}

fn default_plant_dt() -> f64 {
    0.1
}
fn default_quadrature() -> usize {
    16
}

/// Source pose at a time; poses between waypoints are interpolated linearly.
#[derive(Debug, Clone, PartialEq)]
pub struct Waypoint {
    pub time: f64,
    pub pose: Pose,
}

/// A simulated object.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectConfig {
    pub name: String,
    pub contour: Contour,
    pub params: ThermoParams,
    pub lambda: LambdaParams,
    /// Whether the controller may use `lambda`.
    pub known: bool,
    /// Displacement from the end-effector, m, end-effector frame.
    pub offset: Vector3<f64>,
    /// K
    pub initial: f64,
    /// K
    pub target: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControllerKind {
    ModelBased,
    Adaptive,
}

/// Initial parameter estimates for the adaptive law.
#[derive(Debug, Clone, PartialEq)]
pub enum AdaptiveInit {
    /// Each object's own parameters.
    Nominal,
    /// Each object's parameters scaled by independent uniform factors.
    Random { seed: u64, factor_range: [f64; 2] },
    Explicit { a1: Vec<f64>, a2: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControllerConfig {
    pub kind: ControllerKind,
    pub gains: Gains,
    pub damping: f64,
    pub init: AdaptiveInit,
}

/// What happens when a commanded step would leave the workspace box.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AtLimit {
    /// End the run with a violation.
    Stop,
    /// Clip the position to the box and mark the tick as clamped.
    Hold,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SensingMode {
    /// Noisy samples through the sliding-window estimator.
    Estimated,
    /// True temperatures and rates, no noise.
    Exact,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sensing {
    pub mode: SensingMode,
    /// Uniform noise half-width, K.
    pub noise: f64,
    pub seed: u64,
}

/// Validated simulation input, SI units internally.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub environment: Environment,
    pub source_radius: f64,
    pub source_waypoints: Vec<Waypoint>,
    pub initial_pose: Pose,
    /// Controlled pose coordinates, 0..6.
    pub dofs: Vec<usize>,
    pub workspace_min: [f64; 3],
    pub workspace_max: [f64; 3],
    pub limits: VelocityLimits,
    pub at_limit: AtLimit,
    pub objects: Vec<ObjectConfig>,
    pub controller: ControllerConfig,
    pub sensing: Sensing,
    pub period: f64,
    pub duration: f64,
    pub plant_dt: f64,
    pub quadrature: QuadratureSpec,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Scenario(msg.into())
}

fn finite_all(xs: &[f64]) -> bool {
    xs.iter().all(|x| x.is_finite())
}

pub const DOF_NAMES: [&str; 6] = ["p1", "p2", "p3", "tx", "ty", "tz"];

fn pose_cm_deg(c: [f64; 6], what: &str) -> Result<Pose> {
    if !finite_all(&c) {
        return Err(bad(format!("{what}: non-finite pose")));
    }
    Pose::from_cm_deg(c).map_err(|e| bad(format!("{what}: {e}")))
}

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawScenario = toml::from_str(text).map_err(|e| bad(e.to_string()))?;
        Self::from_raw(raw)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    fn from_raw(raw: RawScenario) -> Result<Self> {
        let e = &raw.environment;
        let environment = Environment::new(
            celsius_to_kelvin(e.source_temperature_c),
            e.source_emittance,
            celsius_to_kelvin(e.ambient_c),
        )
        .map_err(|err| bad(format!("environment: {err}")))?;

        if !(raw.source.radius_cm > 0.0) {
            return Err(bad("source.radius_cm must be > 0"));
        }
        let mut source_waypoints = Vec::new();
        for (i, w) in raw.source.waypoints.iter().enumerate() {
            if let Some(prev) = source_waypoints.last().map(|p: &Waypoint| p.time) {
                if !(w.time_s > prev) {
                    return Err(bad("source.waypoints must have increasing time_s"));
                }
            }
            source_waypoints.push(Waypoint {
                time: w.time_s,
                pose: pose_cm_deg(w.pose, &format!("source.waypoints[{i}]"))?,
            });
        }

        let r = &raw.robot;
        let initial_pose = pose_cm_deg(r.initial_pose, "robot.initial_pose")?;
        let mut dofs = Vec::new();
        for name in &r.dofs {
            let idx = DOF_NAMES
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| bad(format!("unknown dof '{name}', expected one of {DOF_NAMES:?}")))?;
            if dofs.contains(&idx) {
                return Err(bad(format!("dof '{name}' listed twice")));
            }
            dofs.push(idx);
        }
        if dofs.is_empty() {
            return Err(bad("robot.dofs must not be empty"));
        }
        let workspace_min = r.workspace_min_cm.map(|x| x / 100.0);
        let workspace_max = r.workspace_max_cm.map(|x| x / 100.0);
        if !(0..3).all(|k| workspace_min[k] < workspace_max[k]) {
            return Err(bad("robot workspace must have min < max on every axis"));
        }
        let p0 = initial_pose.position();
        if !(0..3).all(|k| p0[k] >= workspace_min[k] && p0[k] <= workspace_max[k]) {
            return Err(bad("robot.initial_pose lies outside the workspace"));
        }
        if !(r.max_speed_cm_s > 0.0 && r.max_rotation_deg_s > 0.0) {
            return Err(bad("robot speed limits must be > 0"));
        }
        let limits = VelocityLimits {
            translational: r.max_speed_cm_s / 100.0,
            rotational: r.max_rotation_deg_s.to_radians(),
        };

        let at_limit = match r.at_limit.as_str() {
            "stop" => AtLimit::Stop,
            "hold" => AtLimit::Hold,
            other => return Err(bad(format!("robot.at_limit '{other}' must be 'stop' or 'hold'"))),
        };

        if raw.objects.is_empty() {
            return Err(bad("at least one object is required"));
        }
        if raw.objects.len() > dofs.len() {
            return Err(bad(format!(
                "{} objects need at least as many controlled dofs, got {}",
                raw.objects.len(),
                dofs.len()
            )));
        }
        let mut objects = Vec::new();
        for (i, o) in raw.objects.iter().enumerate() {
            let what = format!("objects[{i}]");
            let contour = match &o.shape {
                RawShape::Circle { radius_cm } => Contour::circle(radius_cm / 100.0),
                RawShape::Polygon { points_cm, harmonics } => {
                    let pts: Vec<[f64; 2]> = points_cm.iter().map(|p| [p[0] / 100.0, p[1] / 100.0]).collect();
                    fourier_fit(&pts, *harmonics)
                }
            }
            .map_err(|err| bad(format!("{what}.shape: {err}")))?;
            let m = &o.material;
            if !(m.infill > 0.0 && m.infill <= 1.0) {
                return Err(bad(format!("{what}.material.infill must lie in (0, 1]")));
            }
            let params = ThermoParams::plate(
                contour.area(),
                m.thickness_mm / 1000.0,
                m.density * m.infill,
                m.specific_heat,
                m.emittance,
                m.absorptance,
            )
            .map_err(|err| bad(format!("{what}.material: {err}")))?;
            let lambda = lambdas(&params, &environment).map_err(|err| bad(format!("{what}: {err}")))?;
            if !finite_all(&o.offset_cm) || !o.initial_c.is_finite() || !o.target_c.is_finite() {
                return Err(bad(format!("{what}: non-finite value")));
            }
            objects.push(ObjectConfig {
                name: o.name.clone().unwrap_or_else(|| format!("obj{i}")),
                contour,
                params,
                lambda,
                known: o.known,
                offset: Vector3::from(o.offset_cm.map(|x| x / 100.0)),
                initial: celsius_to_kelvin(o.initial_c),
                target: celsius_to_kelvin(o.target_c),
            });
        }

        let c = &raw.controller;
        let kind = match c.kind.as_str() {
            "model-based" => ControllerKind::ModelBased,
            "adaptive" => ControllerKind::Adaptive,
            other => return Err(bad(format!("controller.kind '{other}' must be 'model-based' or 'adaptive'"))),
        };
        if kind == ControllerKind::ModelBased && objects.iter().any(|o| !o.known) {
            return Err(bad("objects with unknown parameters require the adaptive controller"));
        }
        let gains = Gains::new(c.d, c.k, c.mu, c.gamma1, c.gamma2).map_err(|err| bad(format!("controller: {err}")))?;
        if !(c.damping >= 0.0) {
            return Err(bad("controller.damping must be >= 0"));
        }
        let init = match &c.init {
            None | Some(RawInit::Nominal) => AdaptiveInit::Nominal,
            Some(RawInit::Random { seed, factor_range }) => {
                if !(factor_range[0] > 0.0 && factor_range[1] >= factor_range[0]) {
                    return Err(bad("controller.init.factor_range must satisfy 0 < lo <= hi"));
                }
                AdaptiveInit::Random {
                    seed: *seed,
                    factor_range: *factor_range,
                }
            }
            Some(RawInit::Explicit { a1, a2 }) => {
                if a1.len() != objects.len() || a2.len() != objects.len() || !finite_all(a1) || !finite_all(a2) {
                    return Err(bad("controller.init explicit a1/a2 need one finite value per object"));
                }
                AdaptiveInit::Explicit {
                    a1: a1.clone(),
                    a2: a2.clone(),
                }
            }
        };

        let s = &raw.sensing;
        let mode = match s.mode.as_str() {
            "estimated" => SensingMode::Estimated,
            "exact" => SensingMode::Exact,
            other => return Err(bad(format!("sensing.mode '{other}' must be 'estimated' or 'exact'"))),
        };
        if !(s.noise_c >= 0.0) {
            return Err(bad("sensing.noise_c must be >= 0"));
        }

        let t = &raw.timing;
        if !(t.period_s > 0.0 && t.duration_s > 0.0 && t.plant_dt_s > 0.0) {
            return Err(bad("timing values must be > 0"));
        }
        if t.plant_dt_s > t.period_s {
            return Err(bad("timing.plant_dt_s must not exceed timing.period_s"));
        }
        let quadrature = QuadratureSpec::new(t.quadrature).map_err(|err| bad(format!("timing.quadrature: {err}")))?;

        Ok(Self {
            environment,
            source_radius: raw.source.radius_cm / 100.0,
            source_waypoints,
            initial_pose,
            dofs,
            workspace_min,
            workspace_max,
            limits,
            at_limit,
            objects,
            controller: ControllerConfig {
                kind,
                gains,
                damping: c.damping,
                init,
            },
            sensing: Sensing {
                mode,
                noise: s.noise_c,
                seed: s.seed,
            },
            period: t.period_s,
            duration: t.duration_s,
            plant_dt: t.plant_dt_s,
            quadrature,
        })
    }

    /// Number of control ticks, including the one at time zero.
    pub fn ticks(&self) -> usize {
        (self.duration / self.period).round() as usize + 1
    }

    /// Source pose at time `t`.
    pub fn source_pose(&self, t: f64) -> Pose {
        let w = &self.source_waypoints;
        match w.len() {
            0 => Pose::identity(),
            _ if t <= w[0].time => w[0].pose,
            _ => {
                for pair in w.windows(2) {
                    if t <= pair[1].time {
                        let s = (t - pair[0].time) / (pair[1].time - pair[0].time);
                        let (a, b) = (pair[0].pose.coords(), pair[1].pose.coords());
                        let c: [f64; 6] = std::array::from_fn(|k| a[k] + s * (b[k] - a[k]));
                        return Pose::from_coords(c).unwrap_or(pair[0].pose);
                    }
                }
                w[w.len() - 1].pose
            }
        }
    }

    /// Pose with its position clipped to the workspace box.
    pub fn clip_to_workspace(&self, pose: &Pose) -> Result<Pose> {
        let mut c = pose.coords();
        for (k, x) in c.iter_mut().take(3).enumerate() {
            *x = x.clamp(self.workspace_min[k], self.workspace_max[k]);
        }
        Pose::from_coords(c)
    }

    pub fn inside_workspace(&self, pose: &Pose) -> bool {
        let p = pose.position();
        (0..3).all(|k| p[k] >= self.workspace_min[k] && p[k] <= self.workspace_max[k])
    }
}
