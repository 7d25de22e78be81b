use crate::error::{Error, Result};

/// Composite Simpson resolution: `n_per_dim` subintervals per dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadratureSpec {
    n_per_dim: usize,
}

impl QuadratureSpec {
    /// Resolution used for reported view factors.
    pub const PRODUCTION: QuadratureSpec = QuadratureSpec { n_per_dim: 64 };
    /// Resolution used inside interaction-matrix loops.
    pub const INNER_LOOP: QuadratureSpec = QuadratureSpec { n_per_dim: 16 };

    pub fn new(n_per_dim: usize) -> Result<Self> {
        if n_per_dim < 2 || !n_per_dim.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "Simpson subinterval count must be even and >= 2, got {n_per_dim}"
            )));
        }
        Ok(Self { n_per_dim })
    }

    /// Upper bound on the resolution chosen by [`QuadratureSpec::resolve`].
    pub const MAX_REFINED: usize = 1024;

    pub fn n_per_dim(&self) -> usize {
        self.n_per_dim
    }

    /// Node spacing kept below the closest approach divided by this.
    pub const SPACING_RATIO: f64 = 3.0;

    /// Resolution, a multiple of four, whose node spacing stays below the closest approach between
    /// the two curves over `SPACING_RATIO`. `spacing` is the node spacing at
    /// the current resolution. Never lowers the resolution and stops at
    /// `MAX_REFINED`.
    pub fn resolve(self, spacing: f64, distance: f64) -> Self {
        let spacing = spacing * Self::SPACING_RATIO;
        if !(distance > 0.0) || spacing <= distance {
            return self;
        }
        let want = (self.n_per_dim as f64 * spacing / distance).ceil();
        let n = if want.is_finite() && want < Self::MAX_REFINED as f64 {
            want as usize
        } else {
            Self::MAX_REFINED
        };
        // a multiple of four keeps the rule symmetric under a half-turn shift
        Self {
            n_per_dim: n.next_multiple_of(4).max(self.n_per_dim),
        }
    }

    /// Nodes and weights of the composite rule on `[a, b]`.
    pub fn nodes(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> {
        let n = self.n_per_dim;
        let h = (b - a) / n as f64;
        (0..=n).map(move |j| {
            let w = if j == 0 || j == n {
                1.0
            } else if j % 2 == 1 {
                4.0
            } else {
                2.0
            };
            // hit the end point exactly
            let x = if j == n { b } else { a + h * j as f64 };
            (x, w * h / 3.0)
        })
    }
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self::PRODUCTION
    }
}

/// Composite Simpson estimate of a one-dimensional integral.
pub fn simpson_1d(f: impl Fn(f64) -> f64, range: (f64, f64), spec: QuadratureSpec) -> Result<f64> {
    let mut acc = 0.0;
    for (x, w) in spec.nodes(range.0, range.1) {
        let v = f(x);
        if !v.is_finite() {
            return Err(Error::NonFiniteIntegrand { x, y: f64::NAN });
        }
        acc += w * v;
    }
    Ok(acc)
}

/// Tensor-product composite Simpson estimate of `int int f(x, y) dy dx`.
///
/// Exact for polynomials of degree three or less in each variable.
pub fn simpson_2d(
    f: impl Fn(f64, f64) -> f64,
    x_range: (f64, f64),
    y_range: (f64, f64),
    spec: QuadratureSpec,
) -> Result<f64> {
    let ys: Vec<(f64, f64)> = spec.nodes(y_range.0, y_range.1).collect();
    let mut acc = 0.0;
    for (x, wx) in spec.nodes(x_range.0, x_range.1) {
        let mut inner = 0.0;
        for &(y, wy) in &ys {
            let v = f(x, y);
            if !v.is_finite() {
                return Err(Error::NonFiniteIntegrand { x, y });
            }
            inner += wy * v;
        }
        acc += wx * inner;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn resolve_refines_only_when_needed() {
        let s = QuadratureSpec::INNER_LOOP;
        assert_eq!(s.resolve(0.01, 0.03), s);
        assert_eq!(s.resolve(0.01, 0.015).n_per_dim(), 32);
        assert_eq!(s.resolve(0.01, 0.009).n_per_dim(), 56);
        assert_eq!(s.resolve(0.01, 1e-9).n_per_dim(), QuadratureSpec::MAX_REFINED);
    }

    #[test]
    fn spec_validation() {
        assert!(QuadratureSpec::new(0).is_err());
        assert!(QuadratureSpec::new(3).is_err());
        assert!(QuadratureSpec::new(2).is_ok());
    }

    #[test]
    fn constant_and_cubic_are_exact() {
        let s2 = QuadratureSpec::new(2).unwrap();
        let c = simpson_2d(|_, _| 1.0, (0.0, 1.0), (0.0, 1.0), s2).unwrap();
        assert!((c - 1.0).abs() < 1e-15);
        let v = simpson_2d(|x, y| x.powi(3) * y.powi(3), (0.0, 1.0), (0.0, 1.0), s2).unwrap();
        assert!((v - 1.0 / 16.0).abs() < 1e-15, "{v}");
    }

    #[test]
    fn smooth_product() {
        let s = QuadratureSpec::new(64).unwrap();
        let v = simpson_2d(|x, y| x.sin() * y.sin(), (0.0, PI), (0.0, PI), s).unwrap();
        // h^4 error term of the composite rule
        assert!((v - 4.0).abs() < 5e-7, "{v}");
    }

    #[test]
    fn non_finite_sample_reports_location() {
        let s = QuadratureSpec::new(2).unwrap();
        let err = simpson_2d(|x, y| 1.0 / (x + y), (0.0, 1.0), (0.0, 1.0), s).unwrap_err();
        assert_eq!(err, Error::NonFiniteIntegrand { x: 0.0, y: 0.0 });
    }

    #[test]
    fn one_dimensional_rule() {
        let s = QuadratureSpec::new(4).unwrap();
        let v = simpson_1d(|x| x * x * x - x, (0.0, 2.0), s).unwrap();
        assert!((v - 2.0).abs() < 1e-14);
    }
}
