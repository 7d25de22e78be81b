//! Double-surface-integral view factors by facet summation.
//!
//! Independent of the contour method: both surfaces are cut into small
//! planar facets and the point-to-point kernel
//! `cos(b1) cos(b2) / (pi s^2)` is summed over facet centroids.

use std::f64::consts::{PI, TAU};

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::geometry::{object_normal, signed_area, Contour, Pose};

#[derive(Debug, Clone, Copy)]
struct Facet {
    center: Vector3<f64>,
    area: f64,
}

/// Facets of a disk of radius `r` with near-square cells, in its local plane.
fn disk_facets(r: f64, n: usize) -> Vec<([f64; 2], f64)> {
    let rings = ((n as f64 / PI).sqrt().round() as usize).max(1);
    let mut out = Vec::new();
    for k in 1..=rings {
        let r_in = r * (k - 1) as f64 / rings as f64;
        let r_out = r * k as f64 / rings as f64;
        let sectors = ((PI * (2 * k - 1) as f64).ceil() as usize).max(1);
        let dphi = TAU / sectors as f64;
        let area = 0.5 * dphi * (r_out * r_out - r_in * r_in);
        let r_c = 2.0 / 3.0 * (r_out.powi(3) - r_in.powi(3)) / (r_out * r_out - r_in * r_in) * (0.5 * dphi).sin()
            / (0.5 * dphi);
        for m in 0..sectors {
            let phi = (m as f64 + 0.5) * dphi;
            out.push(([r_c * phi.cos(), r_c * phi.sin()], area));
        }
    }
    out
}

fn triangle(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> Result<([f64; 2], f64)> {
    let area = 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]));
    if !(area > 0.0) {
        return Err(Error::BadFacet);
    }
    Ok(([(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0], area))
}

/// Fan triangulation of a counterclockwise star-shaped boundary about its
/// vertex centroid, with `rings` scaled copies of the boundary.
fn fan_facets(boundary: &[[f64; 2]], rings: usize) -> Result<Vec<([f64; 2], f64)>> {
    let m = boundary.len();
    let cx = boundary.iter().map(|p| p[0]).sum::<f64>() / m as f64;
    let cy = boundary.iter().map(|p| p[1]).sum::<f64>() / m as f64;
    let scaled = |i: usize, k: usize| {
        let s = k as f64 / rings as f64;
        let p = boundary[i % m];
        [cx + s * (p[0] - cx), cy + s * (p[1] - cy)]
    };
    let mut out = Vec::with_capacity(m * (2 * rings - 1));
    for i in 0..m {
        out.push(triangle([cx, cy], scaled(i, 1), scaled(i + 1, 1))?);
        for k in 2..=rings {
            let (a, b) = (scaled(i, k - 1), scaled(i + 1, k - 1));
            let (c, d) = (scaled(i + 1, k), scaled(i, k));
            out.push(triangle(a, d, c)?);
            out.push(triangle(a, c, b)?);
        }
    }
    Ok(out)
}

/// Ring and boundary-point counts giving roughly `n` fan facets.
fn fan_shape(n: usize) -> (usize, usize) {
    let m = ((PI * n as f64).sqrt().round() as usize).max(8);
    let rings = ((n as f64 / (2.0 * m as f64)).round() as usize).max(1);
    (m, rings)
}

fn object_local_facets(contour: &Contour, n: usize) -> Result<Vec<([f64; 2], f64)>> {
    match contour {
        Contour::Circle { radius } => Ok(disk_facets(*radius, n)),
        Contour::Fourier(_) => {
            let (m, rings) = fan_shape(n);
            fan_facets(&contour.sample_boundary(m), rings)
        }
    }
}

/// Splits polygon edges so that the boundary has about `target` points.
fn densify(polygon: &[[f64; 2]], target: usize) -> Vec<[f64; 2]> {
    let n = polygon.len();
    let len = |i: usize| {
        let (a, b) = (polygon[i], polygon[(i + 1) % n]);
        (b[0] - a[0]).hypot(b[1] - a[1])
    };
    let perimeter: f64 = (0..n).map(len).sum();
    let step = perimeter / target as f64;
    let mut out = Vec::new();
    for i in 0..n {
        let (a, b) = (polygon[i], polygon[(i + 1) % n]);
        let pieces = ((len(i) / step).ceil() as usize).max(1);
        for k in 0..pieces {
            let t = k as f64 / pieces as f64;
            out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
        }
    }
    out
}

fn to_world(local: &[([f64; 2], f64)], pose: &Pose) -> Vec<Facet> {
    let r = pose.rotation();
    let m = r.matrix();
    let origin = pose.position();
    local
        .iter()
        .map(|&(c, area)| Facet {
            center: origin + m.column(0) * c[0] + m.column(1) * c[1],
            area,
        })
        .collect()
}

/// Sum of `A1 A2 cos(b1) cos(b2) / (pi s^2)` over all visible facet pairs.
fn exchange(source: &[Facet], object: &[Facet], n2: &Vector3<f64>) -> f64 {
    let chunk_sum = |chunk: &[Facet]| -> f64 {
        let mut acc = 0.0;
        for o in chunk {
            let mut inner = 0.0;
            for s in source {
                let d = o.center - s.center;
                let c1 = d.z;
                let c2 = -n2.dot(&d);
                if c1 > 0.0 && c2 > 0.0 {
                    let r2 = d.norm_squared();
                    inner += c1 * c2 / (r2 * r2) * s.area;
                }
            }
            acc += inner * o.area;
        }
        acc
    };
    const CHUNK: usize = 64;
    #[cfg(feature = "parallel")]
    let parts: Vec<f64> = {
        use rayon::prelude::*;
        object.par_chunks(CHUNK).map(chunk_sum).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let parts: Vec<f64> = object.chunks(CHUNK).map(chunk_sum).collect();
    parts.iter().sum::<f64>() / PI
}

fn check_inputs(pose: &Pose, source_radius: f64, n: usize) -> Result<()> {
    if !(source_radius > 0.0 && source_radius.is_finite()) {
        return Err(Error::InvalidArgument("source radius must be > 0".into()));
    }
    if n < 16 {
        return Err(Error::InvalidArgument(format!("facet count {n} must be >= 16")));
    }
    if !(pose.p3() > 0.0) {
        return Err(Error::DegeneratePose(format!("p3 = {} must be > 0", pose.p3())));
    }
    Ok(())
}

/// Facet-pair exchange between the source disk and a posed object.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DsiExchange {
    /// `A1 F12 = A2 F21` from the discrete sum.
    pub exchange: f64,
    /// Discrete source area.
    pub source_area: f64,
    /// Discrete object area.
    pub object_area: f64,
}

impl DsiExchange {
    pub fn f12(&self) -> f64 {
        self.exchange / self.source_area
    }

    pub fn f21(&self) -> f64 {
        self.exchange / self.object_area
    }
}

/// Exchange with separate facet budgets for the source and the object.
pub fn dsi_exchange(
    pose: &Pose,
    source_radius: f64,
    object: &Contour,
    n_source: usize,
    n_object: usize,
) -> Result<DsiExchange> {
    check_inputs(pose, source_radius, n_source.min(n_object))?;
    let src_local = disk_facets(source_radius, n_source);
    let obj_local = object_local_facets(object, n_object)?;
    let source = to_world(&src_local, &Pose::identity());
    let obj = to_world(&obj_local, pose);
    let n2 = object_normal(&pose.rotation());
    Ok(DsiExchange {
        exchange: exchange(&source, &obj, &n2),
        source_area: src_local.iter().map(|f| f.1).sum(),
        object_area: obj_local.iter().map(|f| f.1).sum(),
    })
}

/// Object-to-source view factor from about `n` facets on each surface.
pub fn vf_dsi_oracle(pose: &Pose, source_radius: f64, object: &Contour, n: usize) -> Result<f64> {
    Ok(dsi_exchange(pose, source_radius, object, n, n)?.f21())
}

/// Object-to-source view factor for a star-shaped polygonal object.
pub fn vf_dsi_polygon(pose: &Pose, source_radius: f64, polygon: &[[f64; 2]], n: usize) -> Result<f64> {
    check_inputs(pose, source_radius, n)?;
    if polygon.len() < 3 {
        return Err(Error::TooFewPoints { got: polygon.len(), need: 3 });
    }
    let mut pts = polygon.to_vec();
    if signed_area(&pts) < 0.0 {
        pts.reverse();
    }
    let (m, rings) = fan_shape(n);
    let obj_local = fan_facets(&densify(&pts, m), rings)?;
    let source = to_world(&disk_facets(source_radius, n), &Pose::identity());
    let obj = to_world(&obj_local, pose);
    let n2 = object_normal(&pose.rotation());
    let area: f64 = obj_local.iter().map(|f| f.1).sum();
    Ok(exchange(&source, &obj, &n2) / area)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disk_facets_cover_exact_area() {
        let f = disk_facets(0.1, 1000);
        let total: f64 = f.iter().map(|x| x.1).sum();
        assert!((total - PI * 0.01).abs() < 1e-15);
        assert!((f.len() as f64 - 1000.0).abs() < 100.0, "{}", f.len());
    }

    #[test]
    fn fan_of_square_has_square_area() {
        let sq = [[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]];
        let f = fan_facets(&densify(&sq, 40), 5).unwrap();
        let total: f64 = f.iter().map(|x| x.1).sum();
        assert!((total - 4.0).abs() < 1e-12);
    }

    #[test]
    fn clockwise_fan_is_rejected() {
        let sq = [[-1.0, -1.0], [-1.0, 1.0], [1.0, 1.0], [1.0, -1.0]];
        assert_eq!(fan_facets(&sq, 2).unwrap_err(), Error::BadFacet);
    }

    #[test]
    fn coaxial_matches_closed_form() {
        let pose = Pose::translation(0.0, 0.0, 0.05).unwrap();
        let obj = Contour::circle(0.015).unwrap();
        let f = vf_dsi_oracle(&pose, 0.015, &obj, 2000).unwrap();
        let exact = super::super::tests::coaxial(0.015, 0.015, 0.05);
        assert!((f - exact).abs() < 1e-3 * exact.max(1e-3) * 10.0, "{f} vs {exact}");
    }

    #[test]
    fn reciprocity_with_unequal_discretizations() {
        let pose = Pose::new(0.02, -0.01, 0.04, 0.3, -0.2, 0.1).unwrap();
        let obj = Contour::circle(0.015).unwrap();
        let a = dsi_exchange(&pose, 0.05, &obj, 1500, 600).unwrap();
        let b = dsi_exchange(&pose, 0.05, &obj, 600, 1500).unwrap();
        let lhs = a.source_area * a.f12();
        let rhs = b.object_area * b.f21();
        assert!((lhs - rhs).abs() < 5e-3 * lhs, "{lhs} vs {rhs}");
    }
}
