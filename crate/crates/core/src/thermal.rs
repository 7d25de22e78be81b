//! Lumped radiative thermal plant.
//!
//! Each object obeys `dT2/dt = v = l1 F21 - l2 T2^4 + l3` with constant
//! parameters built from its thermophysical properties and the environment.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Stefan-Boltzmann constant in W m^-2 K^-4.
pub const STEFAN_BOLTZMANN: f64 = 5.670374419e-8;
/// Offset between Celsius and Kelvin.
pub const KELVIN_OFFSET: f64 = 273.15;

pub fn celsius_to_kelvin(c: f64) -> f64 {
    c + KELVIN_OFFSET
}

pub fn kelvin_to_celsius(k: f64) -> f64 {
    k - KELVIN_OFFSET
}

/// Gray-body properties of a heated object.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermoParams {
    pub emittance: f64,
    pub absorptance: f64,
    /// J kg^-1 K^-1
    pub specific_heat: f64,
    /// kg
    pub mass: f64,
    /// Radiating area, m^2
    pub area: f64,
}

impl ThermoParams {
    pub fn new(emittance: f64, absorptance: f64, specific_heat: f64, mass: f64, area: f64) -> Result<Self> {
        let unit = |x: f64| x > 0.0 && x <= 1.0;
        if !unit(emittance) || !unit(absorptance) {
            return Err(Error::InvalidArgument(format!(
                "emittance {emittance} and absorptance {absorptance} must lie in (0, 1]"
            )));
        }
        for (name, x) in [("specific heat", specific_heat), ("mass", mass), ("area", area)] {
            if !(x > 0.0 && x.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} {x} must be > 0")));
            }
        }
        Ok(Self {
            emittance,
            absorptance,
            specific_heat,
            mass,
            area,
        })
    }

    /// Flat plate of the given face area, with mass from density and thickness.
    pub fn plate(
        area: f64,
        thickness: f64,
        density: f64,
        specific_heat: f64,
        emittance: f64,
        absorptance: f64,
    ) -> Result<Self> {
        if !(thickness > 0.0 && density > 0.0) {
            return Err(Error::InvalidArgument("thickness and density must be > 0".into()));
        }
        Self::new(emittance, absorptance, specific_heat, density * area * thickness, area)
    }

    /// The 3 cm, 3 mm thick aluminum disk used as the reference object.
    pub fn aluminum_disk() -> Self {
        let area = std::f64::consts::PI * 0.015 * 0.015;
        Self::plate(area, 0.003, 2702.0, 903.0, 0.04, 0.04).expect("valid constants")
    }
}

/// Source and surroundings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    /// Source temperature, K
    pub t_source: f64,
    pub source_emittance: f64,
    /// Ambient temperature, K
    pub t_ambient: f64,
    pub sigma: f64,
}

impl Environment {
    pub fn new(t_source: f64, source_emittance: f64, t_ambient: f64) -> Result<Self> {
        if !(t_ambient > 0.0 && t_source > t_ambient) {
            return Err(Error::InvalidArgument(format!(
                "need source {t_source} K > ambient {t_ambient} K > 0"
            )));
        }
        if !(source_emittance > 0.0 && source_emittance <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "source emittance {source_emittance} must lie in (0, 1]"
            )));
        }
        Ok(Self {
            t_source,
            source_emittance,
            t_ambient,
            sigma: STEFAN_BOLTZMANN,
        })
    }

    /// 200 C source with emittance 0.25 in a 23 C room.
    pub fn reference() -> Self {
        Self::new(473.15, 0.25, 296.15).expect("valid constants")
    }

    /// Highest steady-state temperature any object with equal emittance and
    /// absorptance can approach: `eps1^(1/4) T1`.
    pub fn max_steady_temperature(&self) -> f64 {
        self.source_emittance.powf(0.25) * self.t_source
    }
}

/// Constant coefficients of the temperature-rate model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaParams {
    /// K/s
    pub l1: f64,
    /// K^-3 s^-1
    pub l2: f64,
    /// K/s
    pub l3: f64,
}

impl LambdaParams {
    pub fn new(l1: f64, l2: f64, l3: f64) -> Result<Self> {
        if !(l1 > 0.0 && l2 > 0.0 && l3 > 0.0) || !(l1.is_finite() && l2.is_finite() && l3.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "lambda parameters must be positive, got ({l1}, {l2}, {l3})"
            )));
        }
        Ok(Self { l1, l2, l3 })
    }
}

pub fn lambdas(obj: &ThermoParams, env: &Environment) -> Result<LambdaParams> {
    let t1_4 = env.t_source.powi(4);
    let t3_4 = env.t_ambient.powi(4);
    let drive = env.source_emittance * t1_4 - t3_4;
    if !(drive > 0.0) {
        return Err(Error::SourceTooCold(drive));
    }
    let k = obj.area * env.sigma / (obj.mass * obj.specific_heat);
    Ok(LambdaParams {
        l1: k * obj.absorptance * drive,
        l2: k * obj.emittance,
        l3: k * obj.absorptance * t3_4,
    })
}

/// `v = l1 F21 - l2 T2^4 + l3` in K/s.
pub fn temperature_rate(f21: f64, t2: f64, lambda: &LambdaParams) -> f64 {
    lambda.l1 * f21 - lambda.l2 * t2.powi(4) + lambda.l3
}

/// Object temperature and its rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalState {
    pub time: f64,
    /// K
    pub temperature: f64,
    /// K/s
    pub rate: f64,
}

/// One classical Runge-Kutta step of the plant with `f21` evaluated at
/// `t`, `t + dt/2` and `t + dt`.
pub fn rk4_step(t2: f64, t: f64, dt: f64, f21_of_t: impl Fn(f64) -> f64, lambda: &LambdaParams) -> Result<f64> {
    let rate = |time: f64, temp: f64| temperature_rate(f21_of_t(time), temp, lambda);
    let k1 = rate(t, t2);
    let k2 = rate(t + 0.5 * dt, t2 + 0.5 * dt * k1);
    let k3 = rate(t + 0.5 * dt, t2 + 0.5 * dt * k2);
    let k4 = rate(t + dt, t2 + dt * k3);
    let next = t2 + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if !next.is_finite() || next <= 0.0 {
        return Err(Error::Divergence(format!(
            "temperature {next} after step from {t2} K at t = {t} s"
        )));
    }
    Ok(next)
}

/// Integrates one object for `steps` steps from `start`, returning
/// `steps + 1` states including the initial one.
pub fn integrate_thermal(
    start: f64,
    t0: f64,
    dt: f64,
    steps: usize,
    f21_of_t: impl Fn(f64) -> f64,
    lambda: &LambdaParams,
) -> Result<Vec<ThermalState>> {
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("time step {dt} must be > 0")));
    }
    if !(start > 0.0) {
        return Err(Error::InvalidArgument(format!("temperature {start} K must be > 0")));
    }
    let mut out = Vec::with_capacity(steps + 1);
    let mut temp = start;
    for k in 0..=steps {
        let t = t0 + dt * k as f64;
        out.push(ThermalState {
            time: t,
            temperature: temp,
            rate: temperature_rate(f21_of_t(t), temp, lambda),
        });
        if k < steps {
            temp = rk4_step(temp, t, dt, &f21_of_t, lambda)?;
        }
    }
    Ok(out)
}

/// Independent per-object plants sharing one clock.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiPlant {
    pub lambdas: Vec<LambdaParams>,
    pub temperatures: Vec<f64>,
}

impl MultiPlant {
    pub fn new(lambdas: Vec<LambdaParams>, temperatures: Vec<f64>) -> Result<Self> {
        if lambdas.len() != temperatures.len() || lambdas.is_empty() {
            return Err(Error::Dimension(format!(
                "{} parameter sets for {} temperatures",
                lambdas.len(),
                temperatures.len()
            )));
        }
        Ok(Self { lambdas, temperatures })
    }

    pub fn rates(&self, f21: &[f64]) -> Vec<f64> {
        self.temperatures
            .iter()
            .zip(&self.lambdas)
            .zip(f21)
            .map(|((t, l), f)| temperature_rate(*f, *t, l))
            .collect()
    }

    /// Advances all objects by `dt` with per-object view factors held constant.
    pub fn step(&mut self, f21: &[f64], dt: f64) -> Result<()> {
        if f21.len() != self.temperatures.len() {
            return Err(Error::Dimension(format!(
                "{} view factors for {} objects",
                f21.len(),
                self.temperatures.len()
            )));
        }
        for ((t, l), f) in self.temperatures.iter_mut().zip(&self.lambdas).zip(f21) {
            *t = rk4_step(*t, 0.0, dt, |_| *f, l)?;
        }
        Ok(())
    }
}
