//! Steady-state temperatures, target feasibility and view-factor grids.

use nalgebra::{DMatrix, DVector, Vector3};

use crate::error::{Error, Result};
use crate::geometry::{Contour, Pose};
use crate::thermal::LambdaParams;
use crate::viewfactor::{vf_general, QuadratureSpec};

/// Temperature at which `v = 0` for a fixed view factor: `((l1 F + l3) / l2)^(1/4)`.
pub fn steady_state_temperature(f21: f64, lambda: &LambdaParams) -> f64 {
    ((lambda.l1 * f21 + lambda.l3) / lambda.l2).powf(0.25)
}

/// View factor whose steady-state temperature is `t`.
pub fn view_factor_for_temperature(t: f64, lambda: &LambdaParams) -> Result<f64> {
    let f = (lambda.l2 * t.powi(4) - lambda.l3) / lambda.l1;
    if !(0.0..1.0).contains(&f) {
        return Err(Error::InvalidArgument(format!(
            "temperature {t} K needs view factor {f}, outside [0, 1)"
        )));
    }
    Ok(f)
}

/// Half-open interval `[lo, hi)` of reachable single-object steady temperatures, K.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetBounds {
    pub lo: f64,
    pub hi: f64,
}

impl TargetBounds {
    pub fn contains(&self, t: f64) -> bool {
        t >= self.lo && t < self.hi
    }
}

/// Steady temperatures for `F` from 0 up to (but excluding) 1.
pub fn target_bounds(lambda: &LambdaParams) -> TargetBounds {
    TargetBounds {
        lo: steady_state_temperature(0.0, lambda),
        hi: steady_state_temperature(1.0, lambda),
    }
}

/// Evenly spaced coordinate values `start + i * step`, `i < count`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridAxis {
    pub start: f64,
    pub step: f64,
    pub count: usize,
}

impl GridAxis {
    pub fn new(start: f64, step: f64, count: usize) -> Result<Self> {
        if !(step > 0.0 && start.is_finite() && step.is_finite()) {
            return Err(Error::InvalidArgument(format!("bad grid axis start {start} step {step}")));
        }
        Ok(Self { start, step, count })
    }

    /// Cell centers covering `[lo, hi]` with the given step.
    pub fn cells(lo: f64, hi: f64, step: f64) -> Result<Self> {
        if !(hi > lo) {
            return Err(Error::InvalidArgument(format!("empty range [{lo}, {hi}]")));
        }
        let count = ((hi - lo) / step).round() as usize;
        Self::new(lo + 0.5 * step, step, count)
    }

    pub fn value(&self, i: usize) -> f64 {
        self.start + self.step * i as f64
    }

    pub fn end(&self) -> f64 {
        self.value(self.count.saturating_sub(1))
    }
}

/// Three-axis grid, row-major with the first axis slowest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub axes: [GridAxis; 3],
}

impl GridSpec {
    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.count).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, index: usize) -> [f64; 3] {
        let n2 = self.axes[2].count;
        let n1 = self.axes[1].count;
        let i2 = index % n2;
        let i1 = (index / n2) % n1;
        let i0 = index / (n1 * n2);
        [self.axes[0].value(i0), self.axes[1].value(i1), self.axes[2].value(i2)]
    }

    /// Translation grid over `p1, p2` in `[-20, 20]` cm and `p3` in `[0, 30]` cm, in meters.
    pub fn translation_workspace(step: f64) -> Result<Self> {
        Ok(Self {
            axes: [
                GridAxis::cells(-0.20, 0.20, step)?,
                GridAxis::cells(-0.20, 0.20, step)?,
                GridAxis::cells(0.0, 0.30, step)?,
            ],
        })
    }

    /// Rotation grid over all three angles in `[-90, 90]` degrees, in radians.
    pub fn rotation_workspace(step: f64) -> Result<Self> {
        let h = std::f64::consts::FRAC_PI_2;
        Ok(Self {
            axes: [GridAxis::cells(-h, h, step)?, GridAxis::cells(-h, h, step)?, GridAxis::cells(-h, h, step)?],
        })
    }
}

/// Which three pose coordinates a grid varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subset {
    Translation,
    Rotation,
}

impl Subset {
    /// Pose with the subset coordinates replaced by `point`.
    pub fn pose(&self, base: &Pose, point: [f64; 3]) -> Result<Pose> {
        let mut c = base.coords();
        let off = match self {
            Subset::Translation => 0,
            Subset::Rotation => 3,
        };
        c[off..off + 3].copy_from_slice(&point);
        Pose::from_coords(c)
    }
}

/// View factors over a grid. Cells whose pose is rejected hold 0 and are flagged.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub subset: Subset,
    pub grid: GridSpec,
    pub values: Vec<f64>,
    pub degenerate: Vec<bool>,
}

fn map_cells<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Object view factor at every grid cell, varying `subset` of `base`.
pub fn isosurface_grid(
    source_radius: f64,
    object: &Contour,
    subset: Subset,
    grid: &GridSpec,
    base: &Pose,
    spec: QuadratureSpec,
) -> Result<ScalarField> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let cells = map_cells(grid.len(), |i| {
        subset
            .pose(base, grid.point(i))
            .and_then(|p| vf_general(&p, source_radius, object, spec))
            .map(|v| v.value())
    });
    let mut values = Vec::with_capacity(cells.len());
    let mut degenerate = Vec::with_capacity(cells.len());
    for c in cells {
        match c {
            Ok(v) => {
                values.push(v);
                degenerate.push(false);
            }
            Err(Error::DegeneratePose(_)) => {
                values.push(0.0);
                degenerate.push(true);
            }
            Err(e) => return Err(e),
        }
    }
    Ok(ScalarField {
        subset,
        grid: *grid,
        values,
        degenerate,
    })
}

/// An object rigidly held by the end-effector.
#[derive(Debug, Clone, PartialEq)]
pub struct HeldObject {
    /// Displacement from the end-effector origin, end-effector frame, m.
    pub offset: Vector3<f64>,
    pub contour: Contour,
    pub lambda: LambdaParams,
}

/// End-effector positions searched for a joint solution, at a fixed orientation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Workspace {
    pub grid: GridSpec,
    pub angles: [f64; 3],
}

impl Workspace {
    fn lower(&self) -> [f64; 3] {
        std::array::from_fn(|k| self.grid.axes[k].start - 0.5 * self.grid.axes[k].step)
    }

    fn upper(&self) -> [f64; 3] {
        std::array::from_fn(|k| self.grid.axes[k].end() + 0.5 * self.grid.axes[k].step)
    }
}

/// Range of `T_v0^i - T_v0^j` seen over the workspace against the target difference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairDiagnostic {
    pub i: usize,
    pub j: usize,
    pub min_diff: f64,
    pub max_diff: f64,
    pub target_diff: f64,
}

impl PairDiagnostic {
    pub fn within(&self) -> bool {
        self.target_diff >= self.min_diff && self.target_diff <= self.max_diff
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    /// Per object: target inside its single-object bounds.
    pub within_bounds: Vec<bool>,
    /// Some end-effector pose puts every object within tolerance of its target.
    pub reachable: bool,
    /// Best end-effector pose found.
    pub best_pose: Option<Pose>,
    /// Largest `|T_v0 - T*|` at the best pose, K.
    pub residual: f64,
    /// Steady temperatures at the best pose, K.
    pub best_temperatures: Vec<f64>,
    pub pairs: Vec<PairDiagnostic>,
}

impl FeasibilityReport {
    pub fn feasible(&self) -> bool {
        self.within_bounds.iter().all(|b| *b) && self.reachable
    }

    /// Witness pose when feasible.
    pub fn witness(&self) -> Option<Pose> {
        if self.feasible() {
            self.best_pose
        } else {
            None
        }
    }
}

/// Search settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    pub source_radius: f64,
    /// Target met when `|T_v0 - T*|` is at most this, K.
    pub tolerance: f64,
    /// Quadrature for the coarse grid scan.
    pub scan_spec: QuadratureSpec,
    /// Quadrature for local refinement and the reported residual.
    pub refine_spec: QuadratureSpec,
    /// Number of best grid cells used as refinement seeds.
    pub seeds: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            source_radius: 0.10,
            tolerance: 0.5,
            scan_spec: QuadratureSpec::INNER_LOOP,
            refine_spec: QuadratureSpec::PRODUCTION,
            seeds: 8,
        }
    }
}

fn steady_temperatures(
    objects: &[HeldObject],
    ee: &[f64; 3],
    angles: &[f64; 3],
    opts: &SearchOptions,
    spec: QuadratureSpec,
) -> Result<Vec<f64>> {
    let pose = Pose::from_coords([ee[0], ee[1], ee[2], angles[0], angles[1], angles[2]])?;
    objects
        .iter()
        .map(|o| {
            let f = vf_general(&pose.attach(&o.offset), opts.source_radius, &o.contour, spec)?.value();
            Ok(steady_state_temperature(f, &o.lambda))
        })
        .collect()
}

fn residual(temps: &[f64], targets: &[f64]) -> f64 {
    temps.iter().zip(targets).map(|(t, s)| (t - s).abs()).fold(0.0, f64::max)
}

/// Damped Gauss-Newton on `T_v0(x) - T*` over the end-effector position,
/// kept inside the workspace box.
fn refine(
    objects: &[HeldObject],
    targets: &[f64],
    ws: &Workspace,
    start: [f64; 3],
    opts: &SearchOptions,
) -> Option<([f64; 3], Vec<f64>)> {
    let lo = ws.lower();
    let hi = ws.upper();
    let eval = |x: &[f64; 3]| steady_temperatures(objects, x, &ws.angles, opts, opts.refine_spec).ok();
    let mut x = start;
    let mut temps = eval(&x)?;
    let mut mu = 1e-2;
    let h = 1e-5;
    for _ in 0..40 {
        if residual(&temps, targets) <= opts.tolerance * 0.5 {
            break;
        }
        let r = DVector::from_iterator(targets.len(), temps.iter().zip(targets).map(|(t, s)| t - s));
        let mut jac = DMatrix::zeros(targets.len(), 3);
        for k in 0..3 {
            let mut xp = x;
            xp[k] += h;
            let tp = match eval(&xp) {
                Some(t) => t,
                None => {
                    xp[k] -= 2.0 * h;
                    let tm = eval(&xp)?;
                    tm.iter().zip(&temps).map(|(m, t)| 2.0 * t - m).collect()
                }
            };
            for i in 0..targets.len() {
                jac[(i, k)] = (tp[i] - temps[i]) / h;
            }
        }
        let cost = r.norm_squared();
        let mut improved = false;
        for _ in 0..8 {
            let mut a = jac.transpose() * &jac;
            for k in 0..3 {
                a[(k, k)] += mu * (1.0 + a[(k, k)]);
            }
            let step = match a.cholesky() {
                Some(c) => c.solve(&(-jac.transpose() * &r)),
                None => break,
            };
            let mut cand = x;
            for k in 0..3 {
                // at most 2 cm per iteration
                cand[k] = (x[k] + step[k].clamp(-0.02, 0.02)).clamp(lo[k], hi[k]);
            }
            if let Some(t) = eval(&cand) {
                let c: f64 = t.iter().zip(targets).map(|(a, b)| (a - b).powi(2)).sum();
                if c < cost {
                    x = cand;
                    temps = t;
                    mu = (mu * 0.3).max(1e-9);
                    improved = true;
                    break;
                }
            }
            mu *= 10.0;
        }
        if !improved {
            break;
        }
    }
    Some((x, temps))
}

/// Checks both feasibility conditions for targets (K) of objects held by
/// one end-effector: each target inside its single-object bounds, and some
/// end-effector position in the workspace placing every object within
/// tolerance of its target. The joint search scans the grid, then refines
/// the best cells locally.
pub fn pairwise_feasibility(
    targets: &[f64],
    objects: &[HeldObject],
    ws: &Workspace,
    opts: &SearchOptions,
) -> Result<FeasibilityReport> {
    if targets.is_empty() || targets.len() != objects.len() {
        return Err(Error::Dimension(format!(
            "{} targets for {} objects",
            targets.len(),
            objects.len()
        )));
    }
    if ws.grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let within_bounds = targets
        .iter()
        .zip(objects)
        .map(|(t, o)| target_bounds(&o.lambda).contains(*t))
        .collect();

    let scan = map_cells(ws.grid.len(), |i| {
        steady_temperatures(objects, &ws.grid.point(i), &ws.angles, opts, opts.scan_spec).ok()
    });

    let n = objects.len();
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for t in scan.iter().flatten() {
                let d = t[i] - t[j];
                lo = lo.min(d);
                hi = hi.max(d);
            }
            pairs.push(PairDiagnostic {
                i,
                j,
                min_diff: lo,
                max_diff: hi,
                target_diff: targets[i] - targets[j],
            });
        }
    }

    let mut ranked: Vec<(f64, usize)> = scan
        .iter()
        .enumerate()
        .filter_map(|(i, t)| t.as_ref().map(|t| (residual(t, targets), i)))
        .collect();
    if ranked.is_empty() {
        return Err(Error::EmptyGrid);
    }
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut best: Option<([f64; 3], Vec<f64>, f64)> = None;
    for &(_, idx) in ranked.iter().take(opts.seeds.max(1)) {
        if let Some((x, temps)) = refine(objects, targets, ws, ws.grid.point(idx), opts) {
            let r = residual(&temps, targets);
            if best.as_ref().is_none_or(|b| r < b.2) {
                best = Some((x, temps, r));
            }
            if r <= opts.tolerance {
                break;
            }
        }
    }
    let (best_pose, best_temperatures, res) = match best {
        Some((x, temps, r)) => (
            Some(Pose::from_coords([x[0], x[1], x[2], ws.angles[0], ws.angles[1], ws.angles[2]])?),
            temps,
            r,
        ),
        None => (None, Vec::new(), f64::INFINITY),
    };
    Ok(FeasibilityReport {
        within_bounds,
        reachable: res <= opts.tolerance,
        best_pose,
        residual: res,
        best_temperatures,
        pairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thermal::{celsius_to_kelvin, lambdas, temperature_rate, Environment, ThermoParams};

    fn aluminum() -> LambdaParams {
        lambdas(&ThermoParams::aluminum_disk(), &Environment::reference()).unwrap()
    }

    #[test]
    fn ambient_at_zero_view_factor() {
        let t = steady_state_temperature(0.0, &aluminum());
        assert!((t - 296.15).abs() < 1e-9);
    }

    #[test]
    fn consistent_with_rate() {
        let l = aluminum();
        for k in 0..100 {
            let f = k as f64 / 100.0;
            let t = steady_state_temperature(f, &l);
            assert!(temperature_rate(f, t, &l).abs() < 1e-12);
            assert!(t > steady_state_temperature(f - 0.01, &l));
        }
    }

    #[test]
    fn inverse_round_trip() {
        let l = aluminum();
        let f = view_factor_for_temperature(celsius_to_kelvin(40.0), &l).unwrap();
        assert!((steady_state_temperature(f, &l) - celsius_to_kelvin(40.0)).abs() < 1e-9);
        assert!(view_factor_for_temperature(celsius_to_kelvin(80.0), &l).is_err());
    }

    #[test]
    fn bounds() {
        let b = target_bounds(&aluminum());
        assert!((b.lo - 296.15).abs() < 1e-9);
        assert!((b.hi - 0.25f64.powf(0.25) * 473.15).abs() < 1e-9);
        assert!(b.contains(296.15));
        assert!(!b.contains(353.15));
        assert!(!b.contains(b.hi));
    }

    #[test]
    fn grid_shapes() {
        let g = GridSpec::translation_workspace(0.01).unwrap();
        assert_eq!(g.len(), 48_000);
        assert!((g.point(0)[0] + 0.195).abs() < 1e-12);
        assert!((g.point(47_999)[2] - 0.295).abs() < 1e-12);
        assert_eq!(g.axes[2].count, 30);
    }

    #[test]
    fn small_field_symmetry_and_monotonicity() {
        let grid = GridSpec {
            axes: [
                GridAxis::cells(-0.06, 0.06, 0.02).unwrap(),
                GridAxis::cells(-0.02, 0.02, 0.02).unwrap(),
                GridAxis::cells(0.0, 0.10, 0.01).unwrap(),
            ],
        };
        let c = Contour::circle(0.015).unwrap();
        let field =
            isosurface_grid(0.1, &c, Subset::Translation, &grid, &Pose::identity(), QuadratureSpec::PRODUCTION)
                .unwrap();
        let (n0, n1, n2) = (grid.axes[0].count, grid.axes[1].count, grid.axes[2].count);
        let at = |i: usize, j: usize, k: usize| field.values[(i * n1 + j) * n2 + k];
        for i in 0..n0 {
            for j in 0..n1 {
                for k in 0..n2 {
                    let v = at(i, j, k);
                    assert!((0.0..1.0).contains(&v));
                    assert!((v - at(n0 - 1 - i, j, k)).abs() < 1e-9, "{i} {j} {k} {v} {}", at(n0 - 1 - i, j, k));
                }
            }
        }
        assert!(field.degenerate.iter().all(|d| !d));
    }

    #[test]
    fn empty_grid_rejected() {
        let grid = GridSpec {
            axes: [GridAxis::new(0.0, 1.0, 0).unwrap(); 3],
        };
        let c = Contour::circle(0.015).unwrap();
        assert_eq!(
            isosurface_grid(0.1, &c, Subset::Translation, &grid, &Pose::identity(), QuadratureSpec::INNER_LOOP),
            Err(Error::EmptyGrid)
        );
    }
}
