//! Thermal interaction matrices: how end-effector motion changes temperature rates.

use std::f64::consts::{PI, TAU};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::geometry::{Contour, Pose};
use crate::viewfactor::{
    circle_gap, resolved_quadrature, simpson_2d, vf_general, vf_general_fixed, QuadratureSpec, MIN_DISTANCE,
};

/// Source radius, object contour and quadrature used to evaluate view factors.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub source_radius: f64,
    pub object: Contour,
    pub spec: QuadratureSpec,
}

impl Scene {
    pub fn view_factor(&self, pose: &Pose) -> Result<f64> {
        Ok(vf_general(pose, self.source_radius, &self.object, self.spec)?.value())
    }
}

/// Finite-difference perturbations for translations (m) and rotations (rad).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdSteps {
    pub translation: f64,
    pub rotation: f64,
}

impl Default for FdSteps {
    fn default() -> Self {
        Self {
            translation: 1e-4,
            rotation: 1e-3,
        }
    }
}

impl FdSteps {
    pub fn for_index(&self, index: usize) -> f64 {
        if index < 3 {
            self.translation
        } else {
            self.rotation
        }
    }
}

/// Translational interaction row of a circular object parallel to the
/// source: `-lambda1 r1 r2 / (2 pi A2) oint oint cos(w1 - w2) (x2 - x1) / s^2`.
pub fn l_parallel(pose: &Pose, r1: f64, r2: f64, lambda1: f64, spec: QuadratureSpec) -> Result<[f64; 3]> {
    if !pose.is_unrotated() {
        return Err(Error::InvalidArgument(
            "parallel interaction row needs a zero-rotation pose".into(),
        ));
    }
    if !(pose.p3() > 0.0) {
        return Err(Error::DegeneratePose(format!("p3 = {} must be > 0", pose.p3())));
    }
    let p = pose.position();
    let spec = spec.resolve(TAU * r1.max(r2) / spec.n_per_dim() as f64, circle_gap(p.x.hypot(p.y), p.z, r1, r2));
    let scale = -lambda1 * r1 * r2 / (TAU * PI * r2 * r2);
    let mut out = [0.0; 3];
    for (k, slot) in out.iter_mut().enumerate() {
        let integral = simpson_2d(
            |w1, w2| {
                let d = [
                    p.x + r2 * w2.cos() - r1 * w1.cos(),
                    p.y + r2 * w2.sin() - r1 * w1.sin(),
                    p.z,
                ];
                let s_sq = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).max(MIN_DISTANCE * MIN_DISTANCE);
                (w1 - w2).cos() * d[k] / s_sq
            },
            (0.0, TAU),
            (0.0, TAU),
            spec,
        )?;
        *slot = scale * integral;
    }
    Ok(out)
}

/// Forward-difference gradient of `f` with respect to the pose coordinates
/// listed in `dofs`. A component whose forward pose is rejected falls back to
/// a backward difference.
pub fn fd_gradient(
    pose: &Pose,
    dofs: &[usize],
    steps: FdSteps,
    f: impl Fn(&Pose) -> Result<f64>,
) -> Result<Vec<f64>> {
    let base = f(pose)?;
    dofs.iter()
        .map(|&i| {
            if i >= 6 {
                return Err(Error::InvalidArgument(format!("pose coordinate {i} out of range")));
            }
            let h = steps.for_index(i);
            let forward = pose.perturbed(i, h).and_then(|p| f(&p));
            match forward {
                Ok(v) => Ok((v - base) / h),
                Err(first) => {
                    let backward = pose.perturbed(i, -h).and_then(|p| f(&p));
                    match backward {
                        Ok(v) => Ok((base - v) / h),
                        Err(_) => Err(first),
                    }
                }
            }
        })
        .collect()
}

/// Six-component interaction row `lambda1 dF/dx` by forward differences,
/// every evaluation at the resolution chosen for `pose`.
pub fn l_finite_diff(pose: &Pose, scene: &Scene, lambda1: f64, steps: FdSteps) -> Result<[f64; 6]> {
    let spec = resolved_quadrature(pose, scene.source_radius, &scene.object, scene.spec)?;
    let g = fd_gradient(pose, &[0, 1, 2, 3, 4, 5], steps, |p| {
        Ok(vf_general_fixed(p, scene.source_radius, &scene.object, spec)?.value())
    })?;
    let mut out = [0.0; 6];
    for (o, gi) in out.iter_mut().zip(g) {
        *o = lambda1 * gi;
    }
    Ok(out)
}

/// Stacks per-object rows into `L` and divides each by its `lambda1` for `J`.
pub fn assemble(rows: &[Vec<f64>], lambda1s: &[f64]) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let n_obj = rows.len();
    if n_obj == 0 || n_obj != lambda1s.len() {
        return Err(Error::Dimension(format!("{n_obj} rows for {} lambda1 values", lambda1s.len())));
    }
    let dof = rows[0].len();
    if rows.iter().any(|r| r.len() != dof) {
        return Err(Error::Dimension("interaction rows differ in length".into()));
    }
    if n_obj > dof {
        return Err(Error::TooManyObjects { objects: n_obj, dof });
    }
    if lambda1s.iter().any(|l| !(*l > 0.0)) {
        return Err(Error::InvalidArgument("lambda1 must be > 0 for every object".into()));
    }
    let l = DMatrix::from_fn(n_obj, dof, |i, j| rows[i][j]);
    let jm = DMatrix::from_fn(n_obj, dof, |i, j| rows[i][j] / lambda1s[i]);
    Ok((l, jm))
}
