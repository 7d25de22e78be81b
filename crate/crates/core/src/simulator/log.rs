use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DVector;

use super::scenario::{Scenario, DOF_NAMES};
use crate::control::{AdaptiveState, ControlOutput};
use crate::error::Result;
use crate::geometry::Pose;
use crate::thermal::kelvin_to_celsius;

/// Why a run stopped early.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub time: f64,
    pub reason: String,
}

/// One control tick. Temperatures in K, rates in K/s, SI pose and velocity.
#[derive(Debug, Clone, PartialEq)]
pub struct TickRecord {
    pub time: f64,
    pub pose: [f64; 6],
    pub t_true: Vec<f64>,
    pub t_measured: Vec<f64>,
    pub t_hat: Vec<Option<f64>>,
    pub v_hat: Vec<Option<f64>>,
    /// `T_hat - T*`, or true error before the estimator fills.
    pub dtau: Vec<f64>,
    pub f21: Vec<f64>,
    pub u: Vec<f64>,
    pub lyapunov: Option<f64>,
    pub clamped: bool,
    pub active: bool,
    pub a1: Option<Vec<f64>>,
    pub a2: Option<Vec<f64>>,
}

impl TickRecord {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn new(
        time: f64,
        ee: &Pose,
        truth: &[f64],
        measured: &[f64],
        estimates: &[Option<(f64, f64)>],
        targets: &DVector<f64>,
        f21: &[f64],
        out: &ControlOutput,
        est: Option<&AdaptiveState>,
    ) -> Self {
        let active = estimates.iter().all(|e| e.is_some());
        Self {
            time,
            pose: ee.coords(),
            t_true: truth.to_vec(),
            t_measured: measured.to_vec(),
            t_hat: estimates.iter().map(|e| e.map(|x| x.0)).collect(),
            v_hat: estimates.iter().map(|e| e.map(|x| x.1)).collect(),
            dtau: estimates
                .iter()
                .zip(truth)
                .zip(targets.iter())
                .map(|((e, t), s)| e.map(|x| x.0).unwrap_or(*t) - s)
                .collect(),
            f21: f21.to_vec(),
            u: out.u.iter().copied().collect(),
            lyapunov: out.lyapunov,
            clamped: out.clamped,
            active,
            a1: est.map(|e| e.a1.iter().copied().collect()),
            a2: est.map(|e| e.a2.iter().copied().collect()),
        }
    }

    /// True temperature errors `T - T*`, K.
    pub fn true_errors(&self, targets: &[f64]) -> Vec<f64> {
        self.t_true.iter().zip(targets).map(|(t, s)| t - s).collect()
    }
}

/// Per-tick record of a run plus the early-stop reason, if any.
#[derive(Debug, Clone, PartialEq)]
pub struct RunLog {
    pub n_objects: usize,
    pub dofs: Vec<usize>,
    pub targets: Vec<f64>,
    pub records: Vec<TickRecord>,
    pub violation: Option<Violation>,
}

fn num(out: &mut String, x: f64) {
    if x.is_finite() {
        let _ = write!(out, ",{x:.8e}");
    } else {
        out.push_str(",nan");
    }
}

fn opt(out: &mut String, x: Option<f64>) {
    num(out, x.unwrap_or(f64::NAN));
}

impl RunLog {
    pub(crate) fn new(sc: &Scenario) -> Self {
        Self {
            n_objects: sc.objects.len(),
            dofs: sc.dofs.clone(),
            targets: sc.objects.iter().map(|o| o.target).collect(),
            records: Vec::with_capacity(sc.ticks()),
            violation: None,
        }
    }

    pub(crate) fn push(&mut self, r: TickRecord) {
        self.records.push(r);
    }

    pub fn completed(&self) -> bool {
        self.violation.is_none()
    }

    pub fn last(&self) -> Option<&TickRecord> {
        self.records.last()
    }

    /// CSV column names in output order.
    pub fn header(&self) -> Vec<String> {
        let mut h = vec!["time_s".to_string()];
        for d in DOF_NAMES {
            h.push(format!("x_{d}"));
        }
        for i in 0..self.n_objects {
            for c in ["T_true_c", "T_meas_c", "T_hat_c", "v_hat_k_s", "dT_k", "F21"] {
                h.push(format!("{c}_{i}"));
            }
        }
        for d in &self.dofs {
            h.push(format!("u_{}", DOF_NAMES[*d]));
        }
        h.push("lyapunov".into());
        h.push("clamped".into());
        h.push("active".into());
        for i in 0..self.n_objects {
            h.push(format!("a1_{i}"));
            h.push(format!("a2_{i}"));
        }
        h
    }

    /// Renders the log as CSV with every float in `{:.8e}` form.
    pub fn to_csv(&self) -> String {
        let mut out = self.header().join(",");
        out.push('\n');
        for r in &self.records {
            let mut line = format!("{:.8e}", r.time);
            for x in r.pose {
                num(&mut line, x);
            }
            for i in 0..self.n_objects {
                num(&mut line, kelvin_to_celsius(r.t_true[i]));
                num(&mut line, kelvin_to_celsius(r.t_measured[i]));
                opt(&mut line, r.t_hat[i].map(kelvin_to_celsius));
                opt(&mut line, r.v_hat[i]);
                num(&mut line, r.dtau[i]);
                num(&mut line, r.f21[i]);
            }
            for u in &r.u {
                num(&mut line, *u);
            }
            opt(&mut line, r.lyapunov);
            line.push_str(if r.clamped { ",1" } else { ",0" });
            line.push_str(if r.active { ",1" } else { ",0" });
            for i in 0..self.n_objects {
                opt(&mut line, r.a1.as_ref().map(|a| a[i]));
                opt(&mut line, r.a2.as_ref().map(|a| a[i]));
            }
            out.push_str(&line);
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}
