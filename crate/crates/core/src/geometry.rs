//! Frames, rotations and contour parametrizations.
//!
//! Everything is expressed in the source frame: the circular source lies in
//! the plane `z = 0`, centered at the origin, radiating towards `+z`. An
//! object is a planar region described by a [`Contour`] in its own local
//! `xy` plane and placed by a [`Pose`]. With zero rotation the object's
//! radiating face points back at the source (`-z`).
//!
//! Rotations use the extrinsic X-Y-Z convention: the local frame is rotated
//! about the fixed source `x` axis, then `y`, then `z`, so `R = Rz * Ry * Rx`.

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};

use crate::error::{Error, Result};

/// Wraps an angle to `(-pi, pi]`.
pub fn wrap_angle(theta: f64) -> f64 {
    let w = theta - TAU * ((theta - PI) / TAU).ceil();
    // ceil can land exactly on -pi through rounding
    if w <= -PI {
        w + TAU
    } else {
        w
    }
}

fn wrap_positive(theta: f64) -> f64 {
    let w = theta.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// 6-DOF configuration of an object (or end-effector) in the source frame.
///
/// Translation in meters, angles in radians (stored wrapped to `(-pi, pi]`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    p: [f64; 3],
    theta: [f64; 3],
}

impl Pose {
    pub fn new(p1: f64, p2: f64, p3: f64, theta_x: f64, theta_y: f64, theta_z: f64) -> Result<Self> {
        Self::from_coords([p1, p2, p3, theta_x, theta_y, theta_z])
    }

    /// Builds a pose from `[p1, p2, p3, theta_x, theta_y, theta_z]`.
    pub fn from_coords(c: [f64; 6]) -> Result<Self> {
        if c.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite pose {c:?}")));
        }
        Ok(Self {
            p: [c[0], c[1], c[2]],
            theta: [wrap_angle(c[3]), wrap_angle(c[4]), wrap_angle(c[5])],
        })
    }

    /// Pose from centimeters and degrees, the units used in scenario files.
    pub fn from_cm_deg(c: [f64; 6]) -> Result<Self> {
        Self::from_coords([
            c[0] * 0.01,
            c[1] * 0.01,
            c[2] * 0.01,
            c[3].to_radians(),
            c[4].to_radians(),
            c[5].to_radians(),
        ])
    }

    /// Unrotated pose at the given translation.
    pub fn translation(p1: f64, p2: f64, p3: f64) -> Result<Self> {
        Self::new(p1, p2, p3, 0.0, 0.0, 0.0)
    }

    pub fn identity() -> Self {
        Self {
            p: [0.0; 3],
            theta: [0.0; 3],
        }
    }

    pub fn position(&self) -> Vector3<f64> {
        Vector3::new(self.p[0], self.p[1], self.p[2])
    }

    pub fn angles(&self) -> [f64; 3] {
        self.theta
    }

    pub fn coords(&self) -> [f64; 6] {
        [
            self.p[0],
            self.p[1],
            self.p[2],
            self.theta[0],
            self.theta[1],
            self.theta[2],
        ]
    }

    pub fn p3(&self) -> f64 {
        self.p[2]
    }

    pub fn is_unrotated(&self) -> bool {
        self.theta == [0.0; 3]
    }

    pub fn rotation(&self) -> RotationMatrix {
        rotation_from_euler(self.theta[0], self.theta[1], self.theta[2])
    }

    /// Same pose with coordinate `index` (0..6) shifted by `delta`.
    pub fn perturbed(&self, index: usize, delta: f64) -> Result<Self> {
        let mut c = self.coords();
        c[index] += delta;
        Self::from_coords(c)
    }

    /// Pose of a body rigidly attached at `offset` (expressed in this pose's
    /// frame) and sharing its orientation.
    pub fn attach(&self, offset: &Vector3<f64>) -> Self {
        let world = self.position() + self.rotation().matrix() * offset;
        Self {
            p: [world.x, world.y, world.z],
            theta: self.theta,
        }
    }

    /// Expresses this pose (given in a world frame) in the frame of `frame`.
    pub fn relative_to(&self, frame: &Pose) -> Result<Self> {
        if frame.is_unrotated() {
            let d = self.position() - frame.position();
            return Self::from_coords([d.x, d.y, d.z, self.theta[0], self.theta[1], self.theta[2]]);
        }
        let rf = frame.rotation();
        let d = rf.matrix().transpose() * (self.position() - frame.position());
        let rel = RotationMatrix(rf.matrix().transpose() * self.rotation().matrix());
        let [tx, ty, tz] = euler_from_rotation(&rel);
        Self::from_coords([d.x, d.y, d.z, tx, ty, tz])
    }
}

/// Proper rotation matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationMatrix(Matrix3<f64>);

impl RotationMatrix {
    pub fn identity() -> Self {
        Self(Matrix3::identity())
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn apply(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.0 * v
    }
}

/// Rotation `Rz(theta_z) * Ry(theta_y) * Rx(theta_x)` (extrinsic X, then Y, then Z).
pub fn rotation_from_euler(theta_x: f64, theta_y: f64, theta_z: f64) -> RotationMatrix {
    let (sx, cx) = theta_x.sin_cos();
    let (sy, cy) = theta_y.sin_cos();
    let (sz, cz) = theta_z.sin_cos();
    let rx = Matrix3::new(1.0, 0.0, 0.0, 0.0, cx, -sx, 0.0, sx, cx);
    let ry = Matrix3::new(cy, 0.0, sy, 0.0, 1.0, 0.0, -sy, 0.0, cy);
    let rz = Matrix3::new(cz, -sz, 0.0, sz, cz, 0.0, 0.0, 0.0, 1.0);
    RotationMatrix(rz * ry * rx)
}

/// Inverse of [`rotation_from_euler`]. At gimbal lock `theta_x` is set to 0.
pub fn euler_from_rotation(r: &RotationMatrix) -> [f64; 3] {
    let m = r.matrix();
    let sy = (-m[(2, 0)]).clamp(-1.0, 1.0);
    let theta_y = sy.asin();
    if sy.abs() < 1.0 - 1e-12 {
        [m[(2, 1)].atan2(m[(2, 2)]), theta_y, m[(1, 0)].atan2(m[(0, 0)])]
    } else {
        [0.0, theta_y, (-m[(0, 1)]).atan2(m[(1, 1)])]
    }
}

/// Unit normal of the object's radiating face: `R * [0, 0, -1]`.
pub fn object_normal(r: &RotationMatrix) -> Vector3<f64> {
    -r.matrix().column(2).into_owned()
}

/// Planar closed boundary of a surface, in its local frame.
#[derive(Debug, Clone, PartialEq)]
pub enum Contour {
    Circle { radius: f64 },
    Fourier(FourierContour),
}

impl Contour {
    pub fn circle(radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidArgument(format!("circle radius {radius} must be > 0")));
        }
        Ok(Contour::Circle { radius })
    }

    /// Enclosed area in m^2.
    pub fn area(&self) -> f64 {
        match self {
            Contour::Circle { radius } => PI * radius * radius,
            Contour::Fourier(f) => f.area,
        }
    }

    /// Parameter domain: `[0, 2pi]` for circles, `[0, 1]` for Fourier contours.
    pub fn domain(&self) -> (f64, f64) {
        match self {
            Contour::Circle { .. } => (0.0, TAU),
            Contour::Fourier(_) => (0.0, 1.0),
        }
    }

    /// Local-frame point and derivative with respect to the parameter.
    pub fn eval_local(&self, param: f64) -> Result<([f64; 2], [f64; 2])> {
        let (lo, hi) = self.domain();
        if !(param >= lo && param <= hi) {
            return Err(Error::ParamOutOfDomain { value: param, lo, hi });
        }
        Ok(self.eval_local_unchecked(param))
    }

    pub(crate) fn eval_local_unchecked(&self, param: f64) -> ([f64; 2], [f64; 2]) {
        match self {
            Contour::Circle { radius } => {
                let (s, c) = param.sin_cos();
                ([radius * c, radius * s], [-radius * s, radius * c])
            }
            Contour::Fourier(f) => f.eval(param),
        }
    }

    /// Upper bound on the distance of any contour point from the local origin.
    pub fn max_extent(&self) -> f64 {
        match self {
            Contour::Circle { radius } => *radius,
            Contour::Fourier(f) => f
                .beta
                .iter()
                .zip(&f.b)
                .map(|(be, b)| be.hypot(*b))
                .sum(),
        }
    }

    /// `count` boundary points sampled uniformly in the parameter, first point at param 0.
    pub fn sample_boundary(&self, count: usize) -> Vec<[f64; 2]> {
        let (lo, hi) = self.domain();
        (0..count)
            .map(|k| {
                let t = lo + (hi - lo) * k as f64 / count as f64;
                self.eval_local_unchecked(t).0
            })
            .collect()
    }
}

/// Truncated Fourier contour with harmonics `j = -F..=F`:
///
/// ```text
/// x(phi) = sum_j beta_j sin(2 pi j phi) + b_j cos(2 pi j phi)
/// y(phi) = sum_j beta_j cos(2 pi j phi) - b_j sin(2 pi j phi)
/// ```
///
/// Equivalently `y + i x = sum_j (beta_j + i b_j) exp(2 pi i j phi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierContour {
    harmonics: usize,
    beta: Vec<f64>,
    b: Vec<f64>,
    area: f64,
}

impl FourierContour {
    /// Coefficients indexed by `j + F`. The contour must enclose a positive
    /// (counterclockwise) area.
    pub fn new(beta: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if beta.len() != b.len() || beta.len().is_multiple_of(2) {
            return Err(Error::InvalidArgument(
                "coefficient vectors must have equal odd length 2F+1".into(),
            ));
        }
        if beta.iter().chain(&b).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite Fourier coefficient".into()));
        }
        let harmonics = beta.len() / 2;
        // area = -pi * sum_j j |c_j|^2
        let area = -PI
            * beta
                .iter()
                .zip(&b)
                .enumerate()
                .map(|(idx, (be, bb))| (idx as f64 - harmonics as f64) * (be * be + bb * bb))
                .sum::<f64>();
        if !(area > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "Fourier contour must enclose positive area, got {area}"
            )));
        }
        Ok(Self {
            harmonics,
            beta,
            b,
            area,
        })
    }

    pub fn harmonics(&self) -> usize {
        self.harmonics
    }

    /// `(beta_j, b_j)` for `j` in `-F..=F`.
    pub fn coefficient(&self, j: i64) -> Option<(f64, f64)> {
        let idx = j + self.harmonics as i64;
        if idx < 0 || idx as usize >= self.beta.len() {
            return None;
        }
        Some((self.beta[idx as usize], self.b[idx as usize]))
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    fn eval(&self, phi: f64) -> ([f64; 2], [f64; 2]) {
        let f = self.harmonics as i64;
        let (mut x, mut y, mut dx, mut dy) = (0.0, 0.0, 0.0, 0.0);
        for (idx, (be, bb)) in self.beta.iter().zip(&self.b).enumerate() {
            let j = (idx as i64 - f) as f64;
            let w = TAU * j;
            let (s, c) = (w * phi).sin_cos();
            x += be * s + bb * c;
            y += be * c - bb * s;
            dx += w * (be * c - bb * s);
            dy -= w * (be * s + bb * c);
        }
        ([x, y], [dx, dy])
    }
}

/// Which part of the source disk lies in front of the object's radiating face.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Occlusion {
    /// The whole disk faces the object.
    Common,
    /// Only the region bounded by the counterclockwise arc from `phi1` to
    /// `phi2` and the chord back to `phi1` faces the object.
    /// `phi1` is in `[0, 2pi)` and `phi2` in `(phi1, phi1 + 2pi)`.
    Partial { phi1: f64, phi2: f64 },
    /// No part of the disk faces the object.
    Complete,
}

/// Classifies self-obstruction by intersecting the object plane with the
/// source disk.
///
/// Substituting `(r1 cos phi, r1 sin phi, 0)` into the plane equation
/// `n2 . (x - p) = 0` gives `a cos phi + b sin phi = c`. Two roots mean the
/// plane cuts the disk; otherwise the disk lies entirely on one side.
pub fn classify_occlusion(pose: &Pose, source_radius: f64) -> Result<Occlusion> {
    if !(source_radius > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "source radius {source_radius} must be > 0"
        )));
    }
    let n2 = object_normal(&pose.rotation());
    let p = pose.position();
    let a = n2.x * source_radius;
    let b = n2.y * source_radius;
    let c = n2.dot(&p);
    let rho = a.hypot(b);
    if rho <= 1e-12 * source_radius && pose.p3().abs() <= 1e-12 {
        return Err(Error::DegeneratePose(
            "object lies in the source plane".into(),
        ));
    }
    if c.abs() < rho {
        let half = (c / rho).acos();
        let psi = b.atan2(a);
        let phi1 = wrap_positive(psi - half);
        return Ok(Occlusion::Partial {
            phi1,
            phi2: phi1 + 2.0 * half,
        });
    }
    // source points satisfy n2.(x - p) = a cos + b sin - c, whose sign is that of -c here
    if c < 0.0 {
        Ok(Occlusion::Common)
    } else {
        Ok(Occlusion::Complete)
    }
}

/// Piece of the (contributing) source boundary in the source plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SourcePiece {
    /// Counterclockwise arc of radius `radius` between two angles.
    Arc { radius: f64, start: f64, end: f64 },
    /// Straight segment parametrized by arc length from `from` to `to`.
    Chord { from: [f64; 2], to: [f64; 2] },
}

impl SourcePiece {
    pub fn domain(&self) -> (f64, f64) {
        match *self {
            SourcePiece::Arc { start, end, .. } => (start, end),
            SourcePiece::Chord { from, to } => (0.0, (to[0] - from[0]).hypot(to[1] - from[1])),
        }
    }

    /// Point and parameter derivative on the piece.
    pub fn eval(&self, t: f64) -> Result<(Vector3<f64>, Vector3<f64>)> {
        let (lo, hi) = self.domain();
        if !(t >= lo && t <= hi) {
            return Err(Error::ParamOutOfDomain { value: t, lo, hi });
        }
        Ok(self.eval_unchecked(t))
    }

    pub(crate) fn eval_unchecked(&self, t: f64) -> (Vector3<f64>, Vector3<f64>) {
        match *self {
            SourcePiece::Arc { radius, .. } => {
                let (s, c) = t.sin_cos();
                (
                    Vector3::new(radius * c, radius * s, 0.0),
                    Vector3::new(-radius * s, radius * c, 0.0),
                )
            }
            SourcePiece::Chord { from, to } => {
                let len = (to[0] - from[0]).hypot(to[1] - from[1]);
                let ux = (to[0] - from[0]) / len;
                let uy = (to[1] - from[1]) / len;
                (
                    Vector3::new(from[0] + ux * t, from[1] + uy * t, 0.0),
                    Vector3::new(ux, uy, 0.0),
                )
            }
        }
    }
}

/// Boundary of the contributing source region, counterclockwise about `+z`.
/// Empty for complete self-obstruction.
pub fn source_pieces(occlusion: &Occlusion, source_radius: f64) -> Vec<SourcePiece> {
    match *occlusion {
        Occlusion::Common => vec![SourcePiece::Arc {
            radius: source_radius,
            start: 0.0,
            end: TAU,
        }],
        Occlusion::Partial { phi1, phi2 } => {
            let d1 = [source_radius * phi1.cos(), source_radius * phi1.sin()];
            let d2 = [source_radius * phi2.cos(), source_radius * phi2.sin()];
            vec![
                SourcePiece::Arc {
                    radius: source_radius,
                    start: phi1,
                    end: phi2,
                },
                SourcePiece::Chord { from: d2, to: d1 },
            ]
        }
        Occlusion::Complete => Vec::new(),
    }
}

/// World-frame point on a posed contour and its derivative with respect to
/// the contour parameter.
pub fn contour_eval(contour: &Contour, pose: &Pose, param: f64) -> Result<(Vector3<f64>, Vector3<f64>)> {
    let (pt, d) = contour.eval_local(param)?;
    let r = pose.rotation();
    Ok((
        r.apply(&Vector3::new(pt[0], pt[1], 0.0)) + pose.position(),
        r.apply(&Vector3::new(d[0], d[1], 0.0)),
    ))
}

pub(crate) fn signed_area(points: &[[f64; 2]]) -> f64 {
    let n = points.len();
    0.5 * (0..n)
        .map(|i| {
            let a = points[i];
            let b = points[(i + 1) % n];
            a[0] * b[1] - b[0] * a[1]
        })
        .sum::<f64>()
}

fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn on_segment(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> bool {
    p[0] >= a[0].min(b[0]) && p[0] <= a[0].max(b[0]) && p[1] >= a[1].min(b[1]) && p[1] <= a[1].max(b[1])
}

fn segments_intersect(p1: [f64; 2], p2: [f64; 2], q1: [f64; 2], q2: [f64; 2]) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(q1, q2, p1))
        || (d2 == 0.0 && on_segment(q1, q2, p2))
        || (d3 == 0.0 && on_segment(p1, p2, q1))
        || (d4 == 0.0 && on_segment(p1, p2, q2))
}

/// Returns the first pair of non-adjacent intersecting edges, if any.
pub fn find_self_intersection(points: &[[f64; 2]]) -> Option<(usize, usize)> {
    let n = points.len();
    for i in 0..n {
        let (a1, a2) = (points[i], points[(i + 1) % n]);
        for j in (i + 2)..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            if segments_intersect(a1, a2, points[j], points[(j + 1) % n]) {
                return Some((i, j));
            }
        }
    }
    None
}

/// Least-squares truncated Fourier fit of a closed polygon.
///
/// Vertices are parametrized by normalized arc length `phi` in `[0, 1)`,
/// starting at the first vertex and running counterclockwise (clockwise
/// input is reversed). The `2(2F+1)` real coefficients minimize the summed
/// squared position residual over the vertices.
pub fn fourier_fit(polyline: &[[f64; 2]], harmonics: usize) -> Result<Contour> {
    let mut pts: Vec<[f64; 2]> = Vec::with_capacity(polyline.len());
    for p in polyline {
        if !p[0].is_finite() || !p[1].is_finite() {
            return Err(Error::InvalidArgument("non-finite contour point".into()));
        }
        if pts.last() != Some(p) {
            pts.push(*p);
        }
    }
    while pts.len() > 1 && pts.first() == pts.last() {
        pts.pop();
    }
    let need = 2 * harmonics + 2;
    if pts.len() < need {
        return Err(Error::TooFewPoints {
            got: pts.len(),
            need,
        });
    }
    if let Some((i, j)) = find_self_intersection(&pts) {
        return Err(Error::SelfIntersecting(i, j));
    }
    let area = signed_area(&pts);
    if area == 0.0 {
        return Err(Error::InvalidArgument("polygon encloses zero area".into()));
    }
    if area < 0.0 {
        pts[1..].reverse();
    }

    let n = pts.len();
    let mut cumulative = Vec::with_capacity(n);
    let mut length = 0.0;
    for i in 0..n {
        cumulative.push(length);
        let a = pts[i];
        let b = pts[(i + 1) % n];
        length += (b[0] - a[0]).hypot(b[1] - a[1]);
    }

    let terms = 2 * harmonics + 1;
    let mut design = DMatrix::<f64>::zeros(2 * n, 2 * terms);
    let mut rhs = DVector::<f64>::zeros(2 * n);
    for (k, p) in pts.iter().enumerate() {
        let phi = cumulative[k] / length;
        for idx in 0..terms {
            let j = idx as f64 - harmonics as f64;
            let (s, c) = (TAU * j * phi).sin_cos();
            // x row: beta_j sin + b_j cos
            design[(2 * k, idx)] = s;
            design[(2 * k, terms + idx)] = c;
            // y row: beta_j cos - b_j sin
            design[(2 * k + 1, idx)] = c;
            design[(2 * k + 1, terms + idx)] = -s;
        }
        rhs[2 * k] = p[0];
        rhs[2 * k + 1] = p[1];
    }
    let solution = design
        .svd(true, true)
        .solve(&rhs, 1e-12)
        .map_err(|e| Error::InvalidArgument(format!("Fourier least squares failed: {e}")))?;
    let beta = solution.rows(0, terms).iter().copied().collect();
    let b = solution.rows(terms, terms).iter().copied().collect();
    Ok(Contour::Fourier(FourierContour::new(beta, b)?))
}
