//! Velocity controllers driving object temperatures to their targets.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default damping added to `M M^T` before inversion.
pub const DEFAULT_DAMPING: f64 = 1e-6;

/// Controller gains. Each controller reads only the gains it needs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gains {
    pub d: f64,
    pub k: f64,
    pub mu: f64,
    pub gamma1: f64,
    pub gamma2: f64,
}

impl Gains {
    pub fn new(d: f64, k: f64, mu: f64, gamma1: f64, gamma2: f64) -> Result<Self> {
        for (name, x) in [("D", d), ("K", k), ("mu", mu), ("gamma1", gamma1), ("gamma2", gamma2)] {
            if !(x > 0.0 && x.is_finite()) {
                return Err(Error::InvalidArgument(format!("gain {name} = {x} must be > 0")));
            }
        }
        Ok(Self { d, k, mu, gamma1, gamma2 })
    }
}

/// Per-object estimates of `1/lambda1` and `lambda2/lambda1`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveState {
    pub a1: DVector<f64>,
    pub a2: DVector<f64>,
}

impl AdaptiveState {
    pub fn new(a1: DVector<f64>, a2: DVector<f64>) -> Result<Self> {
        if a1.len() != a2.len() {
            return Err(Error::Dimension(format!("{} vs {} estimates", a1.len(), a2.len())));
        }
        if a1.iter().chain(a2.iter()).any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("non-finite parameter estimate".into()));
        }
        Ok(Self { a1, a2 })
    }

    pub fn apply(&mut self, inc: &AdaptiveIncrement) {
        self.a1 += &inc.da1;
        self.a2 += &inc.da2;
    }
}

/// One explicit step of the parameter update laws.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveIncrement {
    pub da1: DVector<f64>,
    pub da2: DVector<f64>,
}

/// Translational and rotational speed limits applied to the commanded velocity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VelocityLimits {
    /// m/s
    pub translational: f64,
    /// rad/s
    pub rotational: f64,
}

impl Default for VelocityLimits {
    fn default() -> Self {
        Self {
            translational: 0.05,
            rotational: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlOutput {
    /// Velocity over the controlled pose coordinates.
    pub u: DVector<f64>,
    /// `Q` for the model-based law; `H` for the adaptive law when true parameters are supplied.
    pub lyapunov: Option<f64>,
    /// Norm of the temperature error.
    pub error_norm: f64,
    /// Combined error `v + mu dtau` of the adaptive law.
    pub zeta: Option<DVector<f64>>,
    pub clamped: bool,
}

impl ControlOutput {
    /// Scales `u` uniformly so both its translational and rotational parts
    /// respect `limits`. `dofs` names the pose coordinate (0..6) of each entry.
    pub fn clamp(&mut self, dofs: &[usize], limits: &VelocityLimits) {
        let norm_of = |rot: bool| {
            dofs.iter()
                .zip(self.u.iter())
                .filter(|(d, _)| (**d >= 3) == rot)
                .map(|(_, x)| x * x)
                .sum::<f64>()
                .sqrt()
        };
        let mut scale: f64 = 1.0;
        let (vt, vr) = (norm_of(false), norm_of(true));
        if vt > limits.translational {
            scale = scale.min(limits.translational / vt);
        }
        if vr > limits.rotational {
            scale = scale.min(limits.rotational / vr);
        }
        if scale < 1.0 {
            self.u *= scale;
            self.clamped = true;
        }
    }
}

/// `M^T (M M^T + damping I)^-1`.
pub fn damped_pseudoinverse(m: &DMatrix<f64>, damping: f64) -> Result<DMatrix<f64>> {
    if m.nrows() > m.ncols() {
        return Err(Error::TooManyObjects {
            objects: m.nrows(),
            dof: m.ncols(),
        });
    }
    if !(damping >= 0.0) {
        return Err(Error::InvalidArgument(format!("damping {damping} must be >= 0")));
    }
    let mut gram = m * m.transpose();
    for i in 0..gram.nrows() {
        gram[(i, i)] += damping;
    }
    if damping == 0.0 {
        let sv = gram.singular_values();
        let max = sv.max();
        if !(sv.min() > max * 1e-14 * gram.nrows() as f64) {
            return Err(Error::RankDeficient);
        }
    }
    let inv = gram.cholesky().ok_or(Error::RankDeficient)?.inverse();
    Ok(m.transpose() * inv)
}

fn check_dims(rows: usize, vecs: &[&DVector<f64>]) -> Result<()> {
    if vecs.iter().any(|v| v.len() != rows) {
        return Err(Error::Dimension(format!("expected {rows}-vectors for {rows} objects")));
    }
    Ok(())
}

/// `u = L^+ (-D v - K dtau + 4 T Lambda v)` with `T = diag(T2^3)` and `Lambda = diag(lambda2)`.
pub fn model_based_control(
    l: &DMatrix<f64>,
    v: &DVector<f64>,
    dtau: &DVector<f64>,
    t_cubed: &DVector<f64>,
    lambda2: &DVector<f64>,
    gains: &Gains,
    damping: f64,
) -> Result<ControlOutput> {
    check_dims(l.nrows(), &[v, dtau, t_cubed, lambda2])?;
    let rhs = -v * gains.d - dtau * gains.k + (t_cubed.component_mul(lambda2).component_mul(v)) * 4.0;
    let u = damped_pseudoinverse(l, damping)? * rhs;
    let q = 0.5 * v.norm_squared() + 0.5 * gains.k * dtau.norm_squared();
    Ok(ControlOutput {
        u,
        lyapunov: Some(q),
        error_norm: dtau.norm(),
        zeta: None,
        clamped: false,
    })
}

/// `H = 1/2 zeta^T A1 zeta + |a1 - a1_hat|^2 / (2 gamma1) + |a2 - a2_hat|^2 / (2 gamma2)`.
pub fn adaptive_lyapunov(
    zeta: &DVector<f64>,
    a1_true: &DVector<f64>,
    a2_true: &DVector<f64>,
    est: &AdaptiveState,
    gains: &Gains,
) -> f64 {
    let kinetic = 0.5 * zeta.component_mul(zeta).dot(a1_true);
    let e1 = (a1_true - &est.a1).norm_squared() / (2.0 * gains.gamma1);
    let e2 = (a2_true - &est.a2).norm_squared() / (2.0 * gains.gamma2);
    kinetic + e1 + e2
}

/// `u = J^+ (-mu A1_hat v - K zeta + 4 T A2_hat v)` with `zeta = v + mu dtau`.
///
/// `truth` carries the true `(a1, a2)` when known, to report `H`.
#[allow(clippy::too_many_arguments)]
pub fn adaptive_control(
    j: &DMatrix<f64>,
    v: &DVector<f64>,
    dtau: &DVector<f64>,
    t_cubed: &DVector<f64>,
    est: &AdaptiveState,
    gains: &Gains,
    damping: f64,
    truth: Option<(&DVector<f64>, &DVector<f64>)>,
) -> Result<ControlOutput> {
    check_dims(j.nrows(), &[v, dtau, t_cubed, &est.a1, &est.a2])?;
    let zeta = v + dtau * gains.mu;
    let rhs = -est.a1.component_mul(v) * gains.mu - &zeta * gains.k
        + t_cubed.component_mul(&est.a2).component_mul(v) * 4.0;
    let u = damped_pseudoinverse(j, damping)? * rhs;
    let lyapunov = truth.map(|(a1, a2)| adaptive_lyapunov(&zeta, a1, a2, est, gains));
    Ok(ControlOutput {
        u,
        lyapunov,
        error_norm: dtau.norm(),
        zeta: Some(zeta),
        clamped: false,
    })
}

/// `da1 = gamma1 mu v zeta dt`, `da2 = -4 gamma2 v zeta T2^3 dt`, elementwise.
pub fn adaptive_update(
    v: &DVector<f64>,
    zeta: &DVector<f64>,
    t_cubed: &DVector<f64>,
    gains: &Gains,
    dt: f64,
) -> Result<AdaptiveIncrement> {
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("update step {dt} must be > 0")));
    }
    check_dims(v.len(), &[zeta, t_cubed])?;
    let vz = v.component_mul(zeta);
    Ok(AdaptiveIncrement {
        da1: &vz * (gains.gamma1 * gains.mu * dt),
        da2: vz.component_mul(t_cubed) * (-4.0 * gains.gamma2 * dt),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gains() -> Gains {
        Gains::new(0.2, 0.15, 0.05, 1.0, 1.0).unwrap()
    }

    #[test]
    fn gains_must_be_positive() {
        assert!(Gains::new(0.0, 1.0, 1.0, 1.0, 1.0).is_err());
        assert!(Gains::new(1.0, 1.0, 1.0, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn pseudoinverse_of_unit_row() {
        let m = DMatrix::from_row_slice(1, 3, &[1.0, 0.0, 0.0]);
        let p = damped_pseudoinverse(&m, 0.0).unwrap();
        assert_eq!(p, DMatrix::from_row_slice(3, 1, &[1.0, 0.0, 0.0]));
    }

    #[test]
    fn zero_row_damped_gives_zero() {
        let m = DMatrix::zeros(1, 3);
        let p = damped_pseudoinverse(&m, 1e-6).unwrap();
        assert!(p.iter().all(|x| *x == 0.0));
        assert_eq!(damped_pseudoinverse(&m, 0.0), Err(Error::RankDeficient));
    }

    #[test]
    fn full_rank_right_inverse() {
        let m = DMatrix::from_row_slice(2, 6, &[0.3, -1.2, 0.5, 2.0, 0.1, -0.7, 1.1, 0.4, -0.9, 0.2, 1.5, 0.6]);
        let p = damped_pseudoinverse(&m, 0.0).unwrap();
        let r = &m * &p - DMatrix::identity(2, 2);
        assert!(r.abs().max() < 1e-10);
    }

    #[test]
    fn rank_deficient_rejected_without_damping() {
        let m = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0]);
        assert_eq!(damped_pseudoinverse(&m, 0.0), Err(Error::RankDeficient));
        assert!(damped_pseudoinverse(&m, 1e-6).is_ok());
    }

    #[test]
    fn equilibrium_commands_nothing() {
        let l = DMatrix::from_row_slice(1, 3, &[0.1, 0.2, -0.3]);
        let z = DVector::zeros(1);
        let t3 = DVector::from_element(1, 300f64.powi(3));
        let l2 = DVector::from_element(1, 3e-13);
        let out = model_based_control(&l, &z, &z, &t3, &l2, &gains(), DEFAULT_DAMPING).unwrap();
        assert!(out.u.iter().all(|x| *x == 0.0));
        assert_eq!(out.lyapunov, Some(0.0));
        let est = AdaptiveState::new(DVector::from_element(1, 500.0), DVector::from_element(1, 1e-10)).unwrap();
        let out = adaptive_control(&l, &z, &z, &t3, &est, &gains(), DEFAULT_DAMPING, None).unwrap();
        assert!(out.u.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn model_based_achieves_requested_rate_change() {
        let l = DMatrix::from_row_slice(2, 3, &[0.1, 0.2, -0.3, -0.05, 0.4, 0.1]);
        let v = DVector::from_vec(vec![0.01, -0.02]);
        let dtau = DVector::from_vec(vec![-3.0, 1.5]);
        let t3 = DVector::from_vec(vec![320f64.powi(3), 310f64.powi(3)]);
        let l2 = DVector::from_vec(vec![3e-13, 2e-11]);
        let g = gains();
        let out = model_based_control(&l, &v, &dtau, &t3, &l2, &g, 0.0).unwrap();
        // vdot = L u - 4 T Lambda v must equal -D v - K dtau
        let vdot = &l * &out.u - t3.component_mul(&l2).component_mul(&v) * 4.0;
        let want = -&v * g.d - &dtau * g.k;
        assert!((vdot - want).abs().max() < 1e-12);
    }

    #[test]
    fn adaptive_direct_substitution() {
        let j = DMatrix::from_row_slice(1, 3, &[1.0, 0.0, 0.0]);
        let est = AdaptiveState::new(DVector::zeros(1), DVector::zeros(1)).unwrap();
        let g = gains();
        // zeta = v + mu dtau = 1 with v = 0
        let dtau = DVector::from_element(1, 1.0 / g.mu);
        let v = DVector::zeros(1);
        let t3 = DVector::from_element(1, 300f64.powi(3));
        let out = adaptive_control(&j, &v, &dtau, &t3, &est, &g, 0.0, None).unwrap();
        assert!((out.zeta.unwrap()[0] - 1.0).abs() < 1e-15);
        assert!((out.u[0] + 0.15).abs() < 1e-15);
        assert_eq!(out.u[1], 0.0);
    }

    #[test]
    fn update_direct_substitution() {
        let g = Gains::new(0.2, 0.15, 0.05, 1.0, 1.0).unwrap();
        let one = DVector::from_element(1, 1.0);
        let t3 = DVector::from_element(1, 300f64.powi(3));
        let inc = adaptive_update(&one, &one, &t3, &g, 1.0).unwrap();
        assert!((inc.da1[0] - 0.05).abs() < 1e-15);
        assert_eq!(inc.da2[0], -4.0 * 300f64.powi(3));
        let zero = adaptive_update(&DVector::zeros(1), &one, &t3, &g, 1.0).unwrap();
        assert_eq!(zero.da1[0], 0.0);
        assert_eq!(zero.da2[0], 0.0);
    }

    #[test]
    fn adaptive_energy_derivative() {
        // continuous-time check: dH/dt = -K |zeta|^2 under the exact plant
        let j = DMatrix::from_row_slice(2, 3, &[0.4, -0.1, 0.2, 0.3, 0.5, -0.2]);
        let lam1 = DVector::from_vec(vec![1.5e-3, 0.3]);
        let lam2 = DVector::from_vec(vec![3.1e-13, 2e-11]);
        let a1 = lam1.map(|x| 1.0 / x);
        let a2 = lam2.component_div(&lam1);
        let est = AdaptiveState::new(a1.map(|x| 0.7 * x), a2.map(|x| 1.4 * x)).unwrap();
        let v = DVector::from_vec(vec![2e-4, -0.01]);
        let dtau = DVector::from_vec(vec![-4.0, 2.5]);
        let t3 = DVector::from_vec(vec![310f64.powi(3), 330f64.powi(3)]);
        let g = Gains::new(0.2, 0.15, 0.05, 2.0, 1e-12).unwrap();
        let out = adaptive_control(&j, &v, &dtau, &t3, &est, &g, 0.0, Some((&a1, &a2))).unwrap();
        let zeta = out.zeta.unwrap();
        let lu = (&j * &out.u).component_mul(&lam1);
        let vdot = lu - t3.component_mul(&lam2).component_mul(&v) * 4.0;
        let zdot = &vdot + &v * g.mu;
        let inc = adaptive_update(&v, &zeta, &t3, &g, 1.0).unwrap();
        let hdot = zeta.component_mul(&zdot).dot(&a1) - (&a1 - &est.a1).dot(&inc.da1) / g.gamma1
            - (&a2 - &est.a2).dot(&inc.da2) / g.gamma2;
        let want = -g.k * zeta.norm_squared();
        assert!((hdot - want).abs() < 1e-9 * want.abs(), "{hdot} vs {want}");
    }

    #[test]
    fn clamp_scales_uniformly() {
        let mut out = ControlOutput {
            u: DVector::from_vec(vec![0.3, 0.4, 0.0, 0.1]),
            lyapunov: None,
            error_norm: 0.0,
            zeta: None,
            clamped: false,
        };
        out.clamp(&[0, 1, 2, 5], &VelocityLimits::default());
        assert!(out.clamped);
        assert!((out.u[0] / out.u[1] - 0.75).abs() < 1e-15);
        assert!((out.u.rows(0, 3).norm() - 0.05).abs() < 1e-15);
        let mut small = ControlOutput {
            u: DVector::from_vec(vec![0.01]),
            lyapunov: None,
            error_norm: 0.0,
            zeta: None,
            clamped: false,
        };
        small.clamp(&[2], &VelocityLimits::default());
        assert!(!small.clamped);
        assert_eq!(small.u[0], 0.01);
    }
}
