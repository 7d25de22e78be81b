//! Source-to-object view factors by contour double integration.
//!
//! Stokes' theorem turns the four-fold surface integral of the view factor
//! into a double line integral over the two boundaries:
//!
//! ```text
//! F21 = 1 / (2 pi A2) * oint_G1 oint_G2 ln|s2 - s1| ds2 . ds1
//! ```
//!
//! with each boundary oriented by the right-hand rule about its radiating
//! normal. Contours here are parametrized counterclockwise in their local
//! frames, and the object's radiating normal is its local `-z`, so the
//! implementation carries an explicit minus sign.

mod dsi;
mod quadrature;

use std::f64::consts::{PI, TAU};

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::geometry::{classify_occlusion, source_pieces, Contour, Occlusion, Pose, SourcePiece};

pub use dsi::{dsi_exchange, vf_dsi_oracle, vf_dsi_polygon, DsiExchange};
pub use quadrature::{simpson_1d, simpson_2d, QuadratureSpec};

/// Distances below this are floored inside `ln s`.
pub const MIN_DISTANCE: f64 = 1e-9;
/// Poses whose object boundary comes closer than this to the source plane are rejected.
pub const MIN_GAP: f64 = 1e-6;

/// Fraction of the object's radiosity-weighted field of view occupied by the source.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ViewFactor(f64);

impl ViewFactor {
    pub const ZERO: ViewFactor = ViewFactor(0.0);

    /// Validates a raw quadrature value. Tiny negative noise is clamped to zero.
    pub fn new(raw: f64) -> Result<Self> {
        if !raw.is_finite() || raw >= 1.0 || raw <= -1e-9 {
            return Err(Error::ViewFactorRange(raw));
        }
        Ok(Self(raw.max(0.0)))
    }

    pub fn value(&self) -> f64 {
        self.0
    }
}

impl From<ViewFactor> for f64 {
    fn from(v: ViewFactor) -> f64 {
        v.0
    }
}

/// Parallel coaxially-oriented disks: the `omega1 x omega2` integral with the
/// explicit separation `s(p, omega1, omega2)`.
pub fn vf_parallel_disks(pose: &Pose, r1: f64, r2: f64, spec: QuadratureSpec) -> Result<ViewFactor> {
    if !pose.is_unrotated() {
        return Err(Error::InvalidArgument(
            "parallel-disk view factor needs a zero-rotation pose".into(),
        ));
    }
    if !(pose.p3() > 0.0) {
        return Err(Error::DegeneratePose(format!("p3 = {} must be > 0", pose.p3())));
    }
    if !(r1 > 0.0 && r2 > 0.0) {
        return Err(Error::InvalidArgument("disk radii must be > 0".into()));
    }
    let [p1, p2, p3] = [pose.position().x, pose.position().y, pose.p3()];
    let spec = spec.resolve(TAU * r1.max(r2) / spec.n_per_dim() as f64, circle_gap(p1.hypot(p2), p3, r1, r2));
    let base = p1 * p1 + p2 * p2 + p3 * p3 + r1 * r1 + r2 * r2;
    let integral = simpson_2d(
        |w1, w2| {
            let (s1, c1) = w1.sin_cos();
            let (s2, c2) = w2.sin_cos();
            let s_sq = base + 2.0 * p1 * (r2 * c2 - r1 * c1) + 2.0 * p2 * (r2 * s2 - r1 * s1)
                - 2.0 * r1 * r2 * (w2 - w1).cos();
            (w1 - w2).cos() * 0.5 * s_sq.max(MIN_DISTANCE * MIN_DISTANCE).ln()
        },
        (0.0, TAU),
        (0.0, TAU),
        spec,
    )?;
    let area = PI * r2 * r2;
    // inner integral runs from 2 pi down to 0
    ViewFactor::new(-r1 * r2 / (TAU * area) * integral)
}

/// Closest distance between two parallel circles whose centers are `lateral`
/// apart in-plane and `height` apart along the normal.
pub(crate) fn circle_gap(lateral: f64, height: f64, r1: f64, r2: f64) -> f64 {
    let planar = (lateral - r1 - r2).max((r1 - r2).abs() - lateral).max(0.0);
    planar.hypot(height)
}

/// Quadrature nodes of one boundary piece: world point and weighted tangent.
pub(crate) struct BoundaryNodes {
    points: Vec<Vector3<f64>>,
    tangents: Vec<Vector3<f64>>,
}

impl BoundaryNodes {
    fn with_capacity(n: usize) -> Self {
        Self {
            points: Vec::with_capacity(n),
            tangents: Vec::with_capacity(n),
        }
    }

    fn push(&mut self, point: Vector3<f64>, weighted_tangent: Vector3<f64>) {
        self.points.push(point);
        self.tangents.push(weighted_tangent);
    }

    /// Largest gap between consecutive nodes.
    fn spacing(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| (w[1] - w[0]).norm())
            .fold(0.0, f64::max)
    }

    pub(crate) fn object(contour: &Contour, pose: &Pose, spec: QuadratureSpec) -> Self {
        let r = pose.rotation();
        let m = r.matrix();
        let origin = pose.position();
        let (lo, hi) = contour.domain();
        let mut nodes = Self::with_capacity(spec.n_per_dim() + 1);
        for (t, w) in spec.nodes(lo, hi) {
            let (pt, d) = contour.eval_local_unchecked(t);
            let world = origin + m.column(0) * pt[0] + m.column(1) * pt[1];
            let tangent = m.column(0) * d[0] + m.column(1) * d[1];
            nodes.push(world, tangent * w);
        }
        nodes
    }

    fn source(pieces: &[SourcePiece], spec: QuadratureSpec) -> Self {
        let mut nodes = Self::with_capacity(pieces.len() * (spec.n_per_dim() + 1));
        for piece in pieces {
            let (lo, hi) = piece.domain();
            for (t, w) in spec.nodes(lo, hi) {
                let (pt, d) = piece.eval_unchecked(t);
                nodes.push(pt, d * w);
            }
        }
        nodes
    }
}

/// `oint oint ln s ds1 . ds2` over prepared node sets.
fn log_kernel_sum(source: &BoundaryNodes, object: &BoundaryNodes) -> f64 {
    let mut acc = 0.0;
    for (p1, t1) in source.points.iter().zip(&source.tangents) {
        let mut inner = 0.0;
        for (p2, t2) in object.points.iter().zip(&object.tangents) {
            let s_sq = (p2 - p1).norm_squared().max(MIN_DISTANCE * MIN_DISTANCE);
            inner += 0.5 * s_sq.ln() * t1.dot(t2);
        }
        acc += inner;
    }
    acc
}

/// Lowest height of the object boundary above the source plane.
fn min_height(contour: &Contour, pose: &Pose, object: &BoundaryNodes) -> f64 {
    match contour {
        Contour::Circle { radius } => {
            let m = *pose.rotation().matrix();
            pose.p3() - radius * m[(2, 0)].hypot(m[(2, 1)])
        }
        Contour::Fourier(_) => object.points.iter().map(|p| p.z).fold(f64::INFINITY, f64::min),
    }
}

/// View factor from a posed object to the circular source of radius
/// `source_radius`, handling self-obstruction.
///
/// Common poses integrate over the full source circle; partial obstruction
/// integrates over the contributing arc plus the chord that closes it;
/// complete obstruction yields zero. The resolution is raised above `spec`
/// when the object boundary comes close to the source rim.
pub fn vf_general(pose: &Pose, source_radius: f64, object: &Contour, spec: QuadratureSpec) -> Result<ViewFactor> {
    contour_view_factor(pose, source_radius, object, spec, true)
}

/// [`vf_general`] at exactly the resolution `spec`. Use with
/// [`resolved_quadrature`] to difference nearby poses without resolution jumps.
pub fn vf_general_fixed(pose: &Pose, source_radius: f64, object: &Contour, spec: QuadratureSpec) -> Result<ViewFactor> {
    contour_view_factor(pose, source_radius, object, spec, false)
}

/// Resolution [`vf_general`] would use at this pose.
pub fn resolved_quadrature(
    pose: &Pose,
    source_radius: f64,
    object: &Contour,
    spec: QuadratureSpec,
) -> Result<QuadratureSpec> {
    let occlusion = classify_occlusion(pose, source_radius)?;
    let nodes = BoundaryNodes::object(object, pose, spec);
    let h = min_height(object, pose, &nodes);
    let chord = occlusion != Occlusion::Common;
    Ok(resolve_nodes(object, pose, source_radius, spec, nodes, chord.then_some(h)).0)
}

fn contour_view_factor(
    pose: &Pose,
    source_radius: f64,
    object: &Contour,
    spec: QuadratureSpec,
    refine: bool,
) -> Result<ViewFactor> {
    let occlusion = classify_occlusion(pose, source_radius)?;
    let object_nodes = BoundaryNodes::object(object, pose, spec);
    let h = min_height(object, pose, &object_nodes);
    if h < MIN_GAP {
        return Err(Error::DegeneratePose(format!(
            "object boundary reaches {h:.3e} m from the source plane"
        )));
    }
    if occlusion == Occlusion::Complete {
        return Ok(ViewFactor::ZERO);
    }
    let pieces = source_pieces(&occlusion, source_radius);
    let (spec, object_nodes) = if refine {
        let chord = occlusion != Occlusion::Common;
        resolve_nodes(object, pose, source_radius, spec, object_nodes, chord.then_some(h))
    } else {
        (spec, object_nodes)
    };
    let source_nodes = BoundaryNodes::source(&pieces, spec);
    ViewFactor::new(-log_kernel_sum(&source_nodes, &object_nodes) / (TAU * object.area()))
}

/// Raises the resolution until the node spacing resolves the closest
/// approach between the object boundary and the source rim (or, when a chord
/// is present, the source plane).
fn resolve_nodes(
    object: &Contour,
    pose: &Pose,
    source_radius: f64,
    mut spec: QuadratureSpec,
    mut nodes: BoundaryNodes,
    plane_gap: Option<f64>,
) -> (QuadratureSpec, BoundaryNodes) {
    loop {
        let rim = nodes
            .points
            .iter()
            .map(|p| p.z.hypot(p.x.hypot(p.y) - source_radius))
            .fold(f64::INFINITY, f64::min);
        let closest = plane_gap.map_or(rim, |h| rim.min(h));
        let spacing = nodes.spacing().max(TAU * source_radius / spec.n_per_dim() as f64);
        let fine = spec.resolve(spacing, closest);
        if fine == spec {
            return (spec, nodes);
        }
        spec = fine;
        nodes = BoundaryNodes::object(object, pose, spec);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Closed-form view factor from disk `i` to a parallel coaxial disk `j`.
    pub(crate) fn coaxial(r_from: f64, r_to: f64, gap: f64) -> f64 {
        let ri = r_from / gap;
        let rj = r_to / gap;
        let s = 1.0 + (1.0 + rj * rj) / (ri * ri);
        0.5 * (s - (s * s - 4.0 * (rj / ri).powi(2)).sqrt())
    }

    #[test]
    fn oracle_value() {
        assert!((coaxial(0.015, 0.015, 0.05) - 0.0767).abs() < 1e-4);
    }

    #[test]
    fn coaxial_equal_disks() {
        let pose = Pose::translation(0.0, 0.0, 0.05).unwrap();
        let f = vf_parallel_disks(&pose, 0.015, 0.015, QuadratureSpec::PRODUCTION).unwrap();
        assert!((f.value() - coaxial(0.015, 0.015, 0.05)).abs() < 1e-4, "{f:?}");
    }

    #[test]
    fn vanishes_far_away() {
        let pose = Pose::translation(0.0, 0.0, 10.0).unwrap();
        let f = vf_parallel_disks(&pose, 0.015, 0.015, QuadratureSpec::PRODUCTION).unwrap();
        assert!(f.value() < 1e-4);
    }

    #[test]
    fn lateral_offset_reduces_view_factor() {
        let spec = QuadratureSpec::PRODUCTION;
        let on = vf_parallel_disks(&Pose::translation(0.0, 0.0, 0.05).unwrap(), 0.015, 0.015, spec).unwrap();
        let off = vf_parallel_disks(&Pose::translation(0.10, 0.0, 0.05).unwrap(), 0.015, 0.015, spec).unwrap();
        assert!(off.value() < on.value());
    }

    #[test]
    fn parallel_disks_rejects_bad_input() {
        let spec = QuadratureSpec::PRODUCTION;
        assert!(vf_parallel_disks(&Pose::translation(0.0, 0.0, 0.0).unwrap(), 0.1, 0.1, spec).is_err());
        let tilted = Pose::new(0.0, 0.0, 0.05, 0.1, 0.0, 0.0).unwrap();
        assert!(vf_parallel_disks(&tilted, 0.1, 0.1, spec).is_err());
    }

    #[test]
    fn general_reduces_to_parallel() {
        let spec = QuadratureSpec::PRODUCTION;
        let object = Contour::circle(0.015).unwrap();
        for (p1, p2, p3) in [(0.0, 0.0, 0.05), (0.03, -0.02, 0.04), (0.12, 0.05, 0.02)] {
            let pose = Pose::translation(p1, p2, p3).unwrap();
            let a = vf_parallel_disks(&pose, 0.10, 0.015, spec).unwrap().value();
            let b = vf_general(&pose, 0.10, &object, spec).unwrap().value();
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn complete_obstruction_is_zero() {
        let pose = Pose::new(0.0, 0.0, 0.05, PI, 0.0, 0.0).unwrap();
        let object = Contour::circle(0.015).unwrap();
        let f = vf_general(&pose, 0.10, &object, QuadratureSpec::PRODUCTION).unwrap();
        assert_eq!(f, ViewFactor::ZERO);
    }

    #[test]
    fn touching_pose_rejected() {
        let pose = Pose::new(0.0, 0.0, 0.01, PI / 2.0, 0.0, 0.0).unwrap();
        let object = Contour::circle(0.015).unwrap();
        assert!(matches!(
            vf_general(&pose, 0.10, &object, QuadratureSpec::PRODUCTION),
            Err(Error::DegeneratePose(_))
        ));
    }

    #[test]
    fn view_factor_range() {
        assert_eq!(ViewFactor::new(-1e-12).unwrap().value(), 0.0);
        assert!(ViewFactor::new(-1e-6).is_err());
        assert!(ViewFactor::new(1.0).is_err());
        assert!(ViewFactor::new(f64::NAN).is_err());
    }

    #[test]
    fn refinement_converges() {
        let pose = Pose::translation(0.02, 0.01, 0.03).unwrap();
        let coarse = vf_parallel_disks(&pose, 0.1, 0.015, QuadratureSpec::new(32).unwrap()).unwrap().value();
        let fine = vf_parallel_disks(&pose, 0.1, 0.015, QuadratureSpec::new(64).unwrap()).unwrap().value();
        let finer = vf_parallel_disks(&pose, 0.1, 0.015, QuadratureSpec::new(128).unwrap()).unwrap().value();
        assert!((finer - fine).abs() <= (fine - coarse).abs() + 1e-15);
        assert!((finer - fine).abs() < 1e-5);
    }
}
