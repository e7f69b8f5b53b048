//! Region I membership, curvature and slope checks, and curve and slice sampling.
//!
//! Region I (three levels only) is the set of states lying strictly above all
//! three partial-fixed-point surfaces:
//!
//! ```text
//! x > phi_hub(y),   y > phi_middle(x, z),   z > phi_leaf(y).
//! ```

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fixedpoint::{
    phi_hub, phi_hub_inverse, phi_leaf, phi_middle, tail_composition, tail_curve,
};
use crate::meanfield::step_level;
use crate::model::{check_len, LevelState, ModelParams, StarlikeTopology};

/// Second differences within this tolerance count as zero curvature.
pub const CONVEXITY_TOL: f64 = 1e-12;
/// Curve grids start here, away from the origin.
pub const CURVE_GRID_START: f64 = 1e-3;
/// One-sided finite-difference step for slopes at the origin.
pub const SLOPE_STEP: f64 = 1e-7;

fn require_three_levels(topo: &StarlikeTopology) -> Result<()> {
    match topo.levels() {
        3 => Ok(()),
        levels => Err(Error::RequiresThreeLevels { levels }),
    }
}

/// Right-hand sides of the three Region I inequalities at `d`.
pub fn region_one_bounds(
    d: &LevelState,
    params: &ModelParams,
    topo: &StarlikeTopology,
) -> Result<[f64; 3]> {
    require_three_levels(topo)?;
    check_len(3, d.levels())?;
    let n = topo.branching();
    let (x, y, z) = (d[0], d[1], d[2]);
    Ok([
        phi_hub(y, params, n[0]),
        phi_middle(x, z, params, n[1]),
        phi_leaf(y, params),
    ])
}

/// Strict membership in Region I; boundary points are outside.
pub fn in_region_one(
    d: &LevelState,
    params: &ModelParams,
    topo: &StarlikeTopology,
) -> Result<bool> {
    let bounds = region_one_bounds(d, params, topo)?;
    Ok(d.as_slice().iter().zip(bounds).all(|(&v, bound)| v > bound))
}

/// Region I membership on an xy grid at fixed z. `members[row][col]` refers to
/// y = grid[row], x = grid[col].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionSlice {
    pub z: f64,
    pub grid: Vec<f64>,
    pub members: Vec<Vec<bool>>,
}

impl RegionSlice {
    pub fn count(&self) -> usize {
        self.members.iter().flatten().filter(|&&m| m).count()
    }

    /// True when every member of `self` is also a member of `other`.
    pub fn is_subset_of(&self, other: &RegionSlice) -> bool {
        self.grid == other.grid
            && self
                .members
                .iter()
                .flatten()
                .zip(other.members.iter().flatten())
                .all(|(&a, &b)| !a || b)
    }
}

pub fn region_slice(
    z: f64,
    grid_n: usize,
    params: &ModelParams,
    topo: &StarlikeTopology,
) -> Result<RegionSlice> {
    require_three_levels(topo)?;
    if !(0.0..=1.0).contains(&z) {
        return Err(Error::OutOfUnitInterval { index: 2, value: z });
    }
    if grid_n < 2 {
        return Err(Error::InvalidArgument(format!(
            "grid_n must be >= 2, got {grid_n}"
        )));
    }
    let grid = unit_grid(0.0, 1.0, grid_n);
    let members = grid
        .par_iter()
        .map(|&y| {
            grid.iter()
                .map(|&x| in_region_one(&LevelState::from_raw(vec![x, y, z]), params, topo))
                .collect::<Result<Vec<bool>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RegionSlice { z, grid, members })
}

/// Whether one application of F strictly decreases every coordinate of a
/// Region I point. Points outside Region I are rejected.
pub fn strict_decrease_check(
    d: &LevelState,
    params: &ModelParams,
    topo: &StarlikeTopology,
) -> Result<bool> {
    if !in_region_one(d, params, topo)? {
        return Err(Error::NotInRegionOne {
            state: d.as_slice().to_vec(),
        });
    }
    let next = step_level(d, params, topo)?;
    Ok(next.as_slice().iter().zip(d.as_slice()).all(|(n, c)| n < c))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Convex,
    Concave,
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvexityReport {
    pub grid: Vec<f64>,
    pub min_second_difference: f64,
    pub max_second_difference: f64,
    pub verdict: Verdict,
}

/// Samples `f` on a uniform grid of `grid_n` points over [lo, hi] and
/// classifies it by the sign of its central second differences
/// f(x - h) - 2 f(x) + f(x + h). An affine function passes both tests and is
/// reported `Convex`.
pub fn check_convexity(
    mut f: impl FnMut(f64) -> f64,
    lo: f64,
    hi: f64,
    grid_n: usize,
    tol: f64,
) -> Result<ConvexityReport> {
    if !(lo < hi) || grid_n < 3 {
        return Err(Error::InvalidArgument(format!(
            "convexity grid needs lo < hi and at least 3 points, got [{lo}, {hi}] with {grid_n}"
        )));
    }
    let grid = unit_grid(lo, hi, grid_n);
    let values: Vec<f64> = grid.iter().map(|&x| f(x)).collect();
    let (min, max) = values
        .windows(3)
        .map(|w| w[0] - 2.0 * w[1] + w[2])
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
            (lo.min(s), hi.max(s))
        });
    let verdict = if min >= -tol {
        Verdict::Convex
    } else if max <= tol {
        Verdict::Concave
    } else {
        Verdict::Indeterminate
    };
    Ok(ConvexityReport {
        grid,
        min_second_difference: min,
        max_second_difference: max,
        verdict,
    })
}

/// Curvature of the two fixed-point curves, in both readings.
///
/// Read as graphs over the hub coordinate d1 (the plane in which the curves
/// are usually drawn), the hub curve d2 = phi_hub^-1(d1) is convex and the
/// tail composition d2 = phi_(2..k)(d1) is concave. Read the other way round,
/// d1 = phi_hub(d2) is concave in d2 and the tail hub value is convex in the
/// curve parameter.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveCurvature {
    pub hub_over_hub: ConvexityReport,
    pub tail_over_hub: ConvexityReport,
    pub hub_over_d2: ConvexityReport,
    pub tail_over_parameter: ConvexityReport,
}

pub fn curve_curvature(
    params: &ModelParams,
    topo: &StarlikeTopology,
    grid_n: usize,
    tol: f64,
) -> Result<CurveCurvature> {
    let n1 = topo.branching()[0];
    let hub_over_hub = check_convexity(
        |x| phi_hub_inverse(x, params, n1),
        CURVE_GRID_START,
        1.0,
        grid_n,
        tol,
    )?;
    // tail_composition can fail; surface the first error after sampling
    let mut failure = None;
    let tail_over_hub = check_convexity(
        |x| match tail_composition(x, params, topo) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        },
        CURVE_GRID_START,
        1.0,
        grid_n,
        tol,
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    let hub_over_d2 = check_convexity(
        |y| phi_hub(y, params, n1),
        CURVE_GRID_START,
        1.0,
        grid_n,
        tol,
    )?;
    let t_max = crate::fixedpoint::admissible_limit(params, topo).unwrap_or(1.0);
    let tail_over_parameter = check_convexity(
        |t| {
            tail_curve(t, params, topo)
                .map(|p| p.hub())
                .unwrap_or(f64::NAN)
        },
        CURVE_GRID_START * t_max,
        t_max,
        grid_n,
        tol,
    )?;
    Ok(CurveCurvature {
        hub_over_hub,
        tail_over_hub,
        hub_over_d2,
        tail_over_parameter,
    })
}

/// Closed-form slopes of the hub curve and the tail curve at the origin (as
/// d1 per unit d2) next to one-sided finite-difference estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlopesAtZero {
    pub hub: f64,
    pub tail: f64,
    pub hub_fd: f64,
    pub tail_fd: f64,
    pub step: f64,
}

impl SlopesAtZero {
    pub fn hub_rel_error(&self) -> f64 {
        ((self.hub_fd - self.hub) / self.hub).abs()
    }

    pub fn tail_rel_error(&self) -> f64 {
        ((self.tail_fd - self.tail) / self.tail).abs()
    }
}

pub fn slopes_at_zero(params: &ModelParams, topo: &StarlikeTopology) -> Result<SlopesAtZero> {
    slopes_at_zero_with_step(params, topo, SLOPE_STEP)
}

pub fn slopes_at_zero_with_step(
    params: &ModelParams,
    topo: &StarlikeTopology,
    step: f64,
) -> Result<SlopesAtZero> {
    require_three_levels(topo)?;
    if !(step > 0.0 && step <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "slope step must lie in (0, 1], got {step}"
        )));
    }
    let (a, b) = (params.a(), params.b());
    let (n1, n2) = (topo.branching()[0] as f64, topo.branching()[1] as f64);
    Ok(SlopesAtZero {
        hub: b * n1 / (1.0 - a),
        tail: ((1.0 - a).powi(2) - b * b * n2) / (b * (1.0 - a)),
        hub_fd: phi_hub(step, params, topo.branching()[0]) / step,
        tail_fd: tail_curve(step, params, topo)?.hub() / step,
        step,
    })
}

/// One sample of the two curves at tail parameter `t`: the tail state has
/// d2 = `d2`, the tail curve's hub value `tail_d1`, and the hub curve's value
/// at the same d2 is `hub_d1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurveSample {
    pub t: f64,
    pub hub_d1: f64,
    pub tail_d1: f64,
    pub d2: f64,
    pub admissible: bool,
}

/// Samples both curves on a uniform grid of t over [`CURVE_GRID_START`, 1].
pub fn sample_curves(
    params: &ModelParams,
    topo: &StarlikeTopology,
    grid_n: usize,
) -> Result<Vec<CurveSample>> {
    if grid_n < 2 {
        return Err(Error::InvalidArgument(format!(
            "grid_n must be >= 2, got {grid_n}"
        )));
    }
    unit_grid(CURVE_GRID_START, 1.0, grid_n)
        .into_iter()
        .map(|t| {
            let point = tail_curve(t, params, topo)?;
            Ok(CurveSample {
                t,
                hub_d1: phi_hub(point.levels[1], params, topo.branching()[0]),
                tail_d1: point.levels[0],
                d2: point.levels[1],
                admissible: point.admissible,
            })
        })
        .collect()
}

/// Interior intersections: sign changes of tail_d1 - hub_d1 between
/// consecutive admissible samples.
pub fn count_intersections(samples: &[CurveSample]) -> usize {
    samples
        .windows(2)
        .filter(|w| w[0].admissible && w[1].admissible)
        .filter(|w| {
            let (g0, g1) = (w[0].tail_d1 - w[0].hub_d1, w[1].tail_d1 - w[1].hub_d1);
            (g0 < 0.0 && g1 >= 0.0) || (g0 > 0.0 && g1 <= 0.0)
        })
        .count()
}

/// `n` evenly spaced points from `lo` to `hi`, endpoints exact.
pub(crate) fn unit_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let step = (hi - lo) / (n - 1) as f64;
    (0..n)
        .map(|i| if i + 1 == n { hi } else { lo + i as f64 * step })
        .collect()
}
