//! Thresholds, partial-fixed-point functions and the fixed-point solver.
//!
//! Fixed points of F are intersections of the hub curve d1 = phi_hub(d2) with
//! the tail curve obtained by chaining the partial-fixed-point relations of
//! levels 2..k. The tail curve is parameterized by t = d(k-1): the leaf value
//! follows from `phi_leaf`, and each level-m equation is solved for d(m-1),
//!
//! ```text
//! d(m-1) = 1/b + (dm - 1) / (b (1 - a dm) (1 - b d(m+1))^nm),
//! ```
//!
//! walking up to the hub. The scalar gap h(t) = d1_tail(t) - phi_hub(d2(t))
//! vanishes exactly at fixed points.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::meanfield::{level_residual, step_level_into};
use crate::model::{check_open_unit, sup_distance, LevelState, ModelParams, StarlikeTopology};

/// (1 - a) / sqrt(n1 + ... + n(k-1)).
pub fn critical_b(a: f64, branching: &[usize]) -> Result<f64> {
    check_open_unit("a", a)?;
    StarlikeTopology::new(branching)?;
    let total: usize = branching.iter().sum();
    Ok((1.0 - a) / (total as f64).sqrt())
}

/// Value of b at which the spectral radius of the Jacobian of F at the origin,
/// a + b * rho(M), equals 1. `M` is the level adjacency matrix with
/// M[m][m+1] = n_m and M[m+1][m] = 1.
///
/// Coincides with [`critical_b`] for k = 2 and k = 3. For k >= 4 it is
/// strictly larger, since rho(M)^2 < n1 + ... + n(k-1) once two non-adjacent
/// branching factors exist.
pub fn linearized_threshold(a: f64, branching: &[usize]) -> Result<f64> {
    check_open_unit("a", a)?;
    StarlikeTopology::new(branching)?;
    Ok((1.0 - a) / level_adjacency_radius(branching))
}

/// Largest eigenvalue of the level adjacency matrix. The matrix is similar to
/// the symmetric tridiagonal matrix with zero diagonal and off-diagonal
/// entries sqrt(n_m); its top eigenvalue is located by Sturm-count bisection.
pub fn level_adjacency_radius(branching: &[usize]) -> f64 {
    // eigenvalues strictly below x
    let count_below = |x: f64| -> usize {
        let mut count = 0;
        let mut q = -x;
        if q < 0.0 {
            count += 1;
        }
        for &n in branching {
            let denom = if q == 0.0 { f64::MIN_POSITIVE } else { q };
            q = -x - n as f64 / denom;
            if q < 0.0 {
                count += 1;
            }
        }
        count
    };
    let size = branching.len() + 1;
    let mut lo = 0.0;
    // Gershgorin bound on the symmetric form
    let mut hi = 2.0
        * branching
            .iter()
            .map(|&n| (n as f64).sqrt())
            .fold(0.0, f64::max)
        + 1.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if count_below(mid) == size {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeKind {
    Subcritical,
    Critical,
    Supercritical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Regime {
    pub kind: RegimeKind,
    pub b_crit: f64,
}

impl Regime {
    /// Subcritical and critical parameters both lead to extinction.
    pub fn dies_out(&self) -> bool {
        self.kind != RegimeKind::Supercritical
    }
}

/// Compares b against [`critical_b`]; |b - b_crit| <= eq_tol is `Critical`.
pub fn classify_regime(params: &ModelParams, topo: &StarlikeTopology, eq_tol: f64) -> Regime {
    let total: usize = topo.branching().iter().sum();
    let b_crit = (1.0 - params.a()) / (total as f64).sqrt();
    let b = params.b();
    let kind = if (b - b_crit).abs() <= eq_tol {
        RegimeKind::Critical
    } else if b < b_crit {
        RegimeKind::Subcritical
    } else {
        RegimeKind::Supercritical
    };
    Regime { kind, b_crit }
}

/// Hub partial fixed point: the d1 left invariant by F given d2.
pub fn phi_hub(d2: f64, params: &ModelParams, n1: usize) -> f64 {
    let q = (1.0 - params.b() * d2).powi(n1 as i32);
    (1.0 - q) / (1.0 - params.a() * q)
}

/// Inverse of [`phi_hub`]: the d2 at which the hub curve passes through `d1`.
/// This is the hub curve read as a graph over the hub coordinate.
pub fn phi_hub_inverse(d1: f64, params: &ModelParams, n1: usize) -> f64 {
    let q = (1.0 - d1) / (1.0 - params.a() * d1);
    (1.0 - q.powf(1.0 / n1 as f64)) / params.b()
}

/// Middle-level partial fixed point: the dm left invariant by F given its
/// parent value `d_prev` and child value `d_next`.
pub fn phi_middle(d_prev: f64, d_next: f64, params: &ModelParams, n: usize) -> f64 {
    let b = params.b();
    let q = (1.0 - b * d_prev) * (1.0 - b * d_next).powi(n as i32);
    (1.0 - q) / (1.0 - params.a() * q)
}

/// Leaf partial fixed point b d / (1 - a + a b d).
pub fn phi_leaf(d_parent: f64, params: &ModelParams) -> f64 {
    let (a, b) = (params.a(), params.b());
    b * d_parent / (1.0 - a + a * b * d_parent)
}

/// A point of the tail curve. `levels` holds raw values; the hub entry may
/// leave [0, 1] and, for k >= 4, so may intermediate levels.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailPoint {
    pub t: f64,
    pub levels: Vec<f64>,
    /// Every coordinate, hub included, lies in [0, 1].
    pub in_range: bool,
    /// Levels 2..k lie in [0, 1]; the hub value is unconstrained.
    pub admissible: bool,
}

impl TailPoint {
    pub fn to_level_state(&self) -> Option<LevelState> {
        if self.in_range {
            Some(LevelState::from_raw(self.levels.clone()))
        } else {
            None
        }
    }

    pub fn hub(&self) -> f64 {
        self.levels[0]
    }
}

/// Evaluates the tail curve at t = d(k-1), t in (0, 1].
pub fn tail_curve(t: f64, params: &ModelParams, topo: &StarlikeTopology) -> Result<TailPoint> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "tail curve parameter must lie in (0, 1], got {t}"
        )));
    }
    let levels = tail_levels(t, params, topo.branching());
    let admissible = levels[1..].iter().all(|v| (0.0..=1.0).contains(v));
    let in_range = admissible && (0.0..=1.0).contains(&levels[0]);
    Ok(TailPoint {
        t,
        levels,
        in_range,
        admissible,
    })
}

fn tail_levels(t: f64, params: &ModelParams, branching: &[usize]) -> Vec<f64> {
    let (a, b) = (params.a(), params.b());
    let k = branching.len() + 1;
    let mut d = vec![0.0; k];
    d[k - 2] = t;
    d[k - 1] = phi_leaf(t, params);
    // 0-based index m is level m+1; solve its equation for d[m-1]
    for m in (1..k - 1).rev() {
        let denom = b * (1.0 - a * d[m]) * (1.0 - b * d[m + 1]).powi(branching[m] as i32);
        d[m - 1] = 1.0 / b + (d[m] - 1.0) / denom;
    }
    d
}

/// h(t) = d1_tail(t) - phi_hub(d2(t)).
pub fn curve_gap(t: f64, params: &ModelParams, topo: &StarlikeTopology) -> Result<f64> {
    let point = tail_curve(t, params, topo)?;
    Ok(gap_of(&point.levels, params, topo.branching()))
}

fn gap_of(levels: &[f64], params: &ModelParams, branching: &[usize]) -> f64 {
    levels[0] - phi_hub(levels[1], params, branching[0])
}

/// Largest t in (0, 1] for which the tail curve is admissible, assuming the
/// admissible set is an interval starting at 0. `None` when even tiny t is
/// inadmissible.
pub fn admissible_limit(params: &ModelParams, topo: &StarlikeTopology) -> Option<f64> {
    let admissible = |t: f64| {
        tail_levels(t, params, topo.branching())[1..]
            .iter()
            .all(|v| (0.0..=1.0).contains(v))
    };
    if admissible(1.0) {
        return Some(1.0);
    }
    let mut lo = 1e-12;
    if !admissible(lo) {
        return None;
    }
    let mut hi = 1.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if admissible(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(lo)
}

/// The tail composition read as a graph over the hub coordinate: the d2 at
/// which the tail curve passes through `d1`. Requires d1_tail to increase
/// along the admissible part of the curve.
pub fn tail_composition(d1: f64, params: &ModelParams, topo: &StarlikeTopology) -> Result<f64> {
    let branching = topo.branching();
    if topo.levels() == 2 {
        return Ok(phi_leaf(d1, params));
    }
    let t_max = admissible_limit(params, topo).ok_or_else(|| {
        Error::InvalidArgument("tail curve leaves the unit cube near the origin".into())
    })?;
    let hub_at = |t: f64| tail_levels(t, params, branching)[0];
    if !(d1 > 0.0 && d1 <= hub_at(t_max)) || hub_at(1e-12) <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "hub value {d1} is not reached by an increasing tail curve"
        )));
    }
    let (mut lo, mut hi) = (0.0, t_max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if hub_at(mid) < d1 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(tail_levels(0.5 * (lo + hi), params, branching)[1])
}

/// Counts sign changes of h on a uniform grid of `n` points over [lo, hi],
/// comparing consecutive samples where the tail curve is admissible.
pub fn count_sign_changes(
    params: &ModelParams,
    topo: &StarlikeTopology,
    lo: f64,
    hi: f64,
    n: usize,
) -> Result<usize> {
    if !(lo > 0.0 && hi <= 1.0 && lo < hi) || n < 2 {
        return Err(Error::InvalidArgument(format!(
            "invalid sign-change grid [{lo}, {hi}] with {n} points"
        )));
    }
    let step = (hi - lo) / (n - 1) as f64;
    let mut prev: Option<f64> = None;
    let mut changes = 0;
    for i in 0..n {
        let t = if i + 1 == n { hi } else { lo + i as f64 * step };
        let point = tail_curve(t, params, topo)?;
        if !point.admissible {
            prev = None;
            continue;
        }
        let h = gap_of(&point.levels, params, topo.branching());
        if let Some(p) = prev {
            if (p < 0.0 && h >= 0.0) || (p > 0.0 && h <= 0.0) {
                changes += 1;
            }
        }
        prev = Some(h);
    }
    Ok(changes)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub eq_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 1_000_000,
            eq_tol: 0.0,
        }
    }
}

/// Lower end of the geometric bracketing grid.
pub const BRACKET_START: f64 = 1e-9;
const BRACKET_POINTS: usize = 4000;
/// Bisection stops once the bracket is at most this wide.
pub const BISECTION_WIDTH: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixedPointReport {
    pub regime: Regime,
    pub trivial_point: LevelState,
    pub nontrivial_point: Option<LevelState>,
    /// Limit of the iteration from the all-ones state (supercritical only).
    pub iteration_point: Option<LevelState>,
    /// Root of the curve gap mapped back to a state (supercritical only).
    pub curve_point: Option<LevelState>,
    pub curve_parameter: Option<f64>,
    pub iteration_residual: f64,
    pub curve_root_residual: f64,
    pub agreement: f64,
    pub iterations: usize,
    pub iteration_converged: bool,
}

/// Classifies the regime and, above threshold, computes the nontrivial fixed
/// point twice: by iterating F from the all-ones state and by bisecting the
/// curve gap h(t). `nontrivial_point` is the iteration limit when it
/// converged and the curve root otherwise.
pub fn solve_fixed_point(
    params: &ModelParams,
    topo: &StarlikeTopology,
    opts: &SolverOptions,
) -> Result<FixedPointReport> {
    if !(opts.tol > 0.0) || opts.max_iter == 0 || !(opts.eq_tol >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "invalid solver options {opts:?}"
        )));
    }
    let k = topo.levels();
    let regime = classify_regime(params, topo, opts.eq_tol);
    let mut report = FixedPointReport {
        regime,
        trivial_point: LevelState::zeros(k),
        nontrivial_point: None,
        iteration_point: None,
        curve_point: None,
        curve_parameter: None,
        iteration_residual: 0.0,
        curve_root_residual: 0.0,
        agreement: 0.0,
        iterations: 0,
        iteration_converged: true,
    };
    if regime.dies_out() {
        return Ok(report);
    }

    let branching = topo.branching();
    let iter = iterate_with_error_bound(&vec![1.0; k], params, branching, opts.tol, opts.max_iter);
    let (t_root, curve) = bracket_and_bisect(params, topo, opts.tol)?;

    report.iteration_residual = level_residual(&iter.state, params, branching);
    report.curve_root_residual = level_residual(&curve, params, branching);
    report.agreement = sup_distance(&iter.state, &curve);
    report.iterations = iter.iterations;
    report.iteration_converged = iter.converged;
    report.curve_parameter = Some(t_root);
    let iteration_point = LevelState::from_raw(iter.state);
    let curve_point = LevelState::from_raw(curve);
    report.nontrivial_point = Some(if iter.converged {
        iteration_point.clone()
    } else {
        curve_point.clone()
    });
    report.iteration_point = Some(iteration_point);
    report.curve_point = Some(curve_point);
    Ok(report)
}

struct IterationOutcome {
    state: Vec<f64>,
    iterations: usize,
    converged: bool,
}

/// Iterates F until both the residual and the contraction-based bound on the
/// distance to the limit, r * rho / (1 - rho) with rho estimated from the
/// ratio of successive residuals, are at most `tol`.
fn iterate_with_error_bound(
    start: &[f64],
    params: &ModelParams,
    branching: &[usize],
    tol: f64,
    max_iter: usize,
) -> IterationOutcome {
    let floor = 8.0 * f64::EPSILON;
    let mut cur = start.to_vec();
    let mut next = vec![0.0; cur.len()];
    let mut prev_residual = f64::INFINITY;
    for step in 0..max_iter {
        step_level_into(&cur, params, branching, &mut next);
        let residual = sup_distance(&next, &cur);
        std::mem::swap(&mut cur, &mut next);
        let rate = residual / prev_residual;
        let bounded = rate < 1.0 && residual * rate / (1.0 - rate) <= tol;
        if residual <= floor || (residual <= tol && bounded) {
            return IterationOutcome {
                state: cur,
                iterations: step + 1,
                converged: true,
            };
        }
        prev_residual = residual;
    }
    IterationOutcome {
        state: cur,
        iterations: max_iter,
        converged: false,
    }
}

/// Scans a geometric grid of t from [`BRACKET_START`] to 1 for a sign change
/// of h between admissible samples, bisects it and accepts the first root
/// that maps to a genuine fixed point (sign flips across poles of the raw
/// curve are skipped).
fn bracket_and_bisect(
    params: &ModelParams,
    topo: &StarlikeTopology,
    tol: f64,
) -> Result<(f64, Vec<f64>)> {
    let branching = topo.branching();
    let ratio = (1.0 / BRACKET_START).powf(1.0 / (BRACKET_POINTS - 1) as f64);
    let grid: Vec<f64> = (0..BRACKET_POINTS)
        .map(|i| {
            if i + 1 == BRACKET_POINTS {
                1.0
            } else {
                BRACKET_START * ratio.powi(i as i32)
            }
        })
        .collect();
    let sample = |t: f64| -> Option<f64> {
        let levels = tail_levels(t, params, branching);
        levels[1..]
            .iter()
            .all(|v| (0.0..=1.0).contains(v))
            .then(|| gap_of(&levels, params, branching))
    };
    let accept = (1e3 * tol).max(1e-9);
    let mut admissible = 0usize;
    let mut rejected = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for &t in &grid {
        let Some(h) = sample(t) else {
            prev = None;
            continue;
        };
        admissible += 1;
        if let Some((t_prev, h_prev)) = prev {
            if h_prev.signum() != h.signum() && h_prev != 0.0 {
                let root = bisect(
                    |s| gap_of(&tail_levels(s, params, branching), params, branching),
                    t_prev,
                    t,
                    h_prev,
                );
                let levels = tail_levels(root, params, branching);
                let in_cube = levels.iter().all(|v| (0.0..=1.0).contains(v));
                let residual = level_residual(&levels, params, branching);
                if in_cube && residual <= accept {
                    return Ok((root, levels));
                }
                rejected.push(root);
            }
        }
        prev = Some((t, h));
    }
    let h_first = sample(grid[0]);
    let h_last = sample(1.0);
    Err(Error::BracketFailure {
        diagnostics: format!(
            "a = {}, b = {}, branching = {:?}, closed-form threshold = {}, linearized threshold = {}, \
             admissible samples = {admissible}/{BRACKET_POINTS}, h({BRACKET_START}) = {h_first:?}, \
             h(1) = {h_last:?}, rejected roots = {rejected:?}",
            params.a(),
            params.b(),
            branching,
            critical_b(params.a(), branching).unwrap_or(f64::NAN),
            linearized_threshold(params.a(), branching).unwrap_or(f64::NAN),
        ),
    })
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, f_lo: f64) -> f64 {
    let lo_sign = f_lo.signum();
    while hi - lo > BISECTION_WIDTH {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if fm.signum() == lo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn topo(branching: &[usize]) -> StarlikeTopology {
        StarlikeTopology::new(branching).unwrap()
    }

    fn params(a: f64, b: f64) -> ModelParams {
        ModelParams::new(a, b).unwrap()
    }

    #[test]
    fn thresholds() {
        assert_eq!(critical_b(0.5, &[6, 10]).unwrap(), 0.125);
        assert!((critical_b(0.5, &[6]).unwrap() - 0.5 / 6f64.sqrt()).abs() < 1e-16);
        assert!((critical_b(0.5, &[6, 10, 4]).unwrap() - 0.5 / 20f64.sqrt()).abs() < 1e-16);
        assert!(critical_b(1.5, &[6]).is_err());
        assert!(critical_b(0.5, &[]).is_err());
    }

    #[test]
    fn linearized_threshold_matches_closed_form_up_to_three_levels() {
        for branching in [&[6][..], &[6, 10], &[1, 1], &[3, 7]] {
            let closed = critical_b(0.4, branching).unwrap();
            let lin = linearized_threshold(0.4, branching).unwrap();
            assert!(
                (closed - lin).abs() < 1e-14,
                "{branching:?}: {closed} vs {lin}"
            );
        }
    }

    #[test]
    fn linearized_threshold_exceeds_closed_form_for_four_levels() {
        // char. polynomial x^4 - 20 x^2 + 24 for (6, 10, 4)
        let rho = ((20.0 + (400.0f64 - 96.0).sqrt()) / 2.0).sqrt();
        assert!((level_adjacency_radius(&[6, 10, 4]) - rho).abs() < 1e-13);
        let lin = linearized_threshold(0.5, &[6, 10, 4]).unwrap();
        assert!((lin - 0.5 / rho).abs() < 1e-14);
        assert!(lin > critical_b(0.5, &[6, 10, 4]).unwrap() + 3e-3);
    }

    #[test]
    fn regimes_at_reference_values() {
        let t = topo(&[6, 10]);
        assert_eq!(
            classify_regime(&params(0.5, 0.08), &t, 0.0).kind,
            RegimeKind::Subcritical
        );
        assert_eq!(
            classify_regime(&params(0.5, 0.125), &t, 1e-12).kind,
            RegimeKind::Critical
        );
        assert_eq!(
            classify_regime(&params(0.5, 0.125), &t, 0.0).kind,
            RegimeKind::Critical
        );
        assert_eq!(
            classify_regime(&params(0.5, 0.15), &t, 0.0).kind,
            RegimeKind::Supercritical
        );
        assert!(classify_regime(&params(0.5, 0.125), &t, 0.0).dies_out());
    }

    #[test]
    fn phi_values() {
        let p = params(0.5, 0.08);
        assert_eq!(phi_hub(0.0, &p, 6), 0.0);
        assert_eq!(phi_middle(0.0, 0.0, &p, 10), 0.0);
        assert_eq!(phi_leaf(0.0, &p), 0.0);
        let q = 0.92f64.powi(6);
        assert!((phi_hub(1.0, &p, 6) - (1.0 - q) / (1.0 - 0.5 * q)).abs() < 1e-15);

        let p = params(0.5, 0.15);
        assert!((phi_middle(1.0, 0.0, &p, 10) - 0.15 / 0.575).abs() < 1e-15);
        assert!((phi_leaf(1.0, &p) - 0.15 / 0.575).abs() < 1e-15);
    }

    #[test]
    fn phi_leaf_bounded_below_one() {
        for (a, b) in [(0.01, 0.99), (0.99, 0.99), (0.5, 0.5), (0.99, 0.01)] {
            let p = params(a, b);
            let v = phi_leaf(1.0, &p);
            assert!(v < 1.0);
            assert!((v - b / (1.0 - a + a * b)).abs() < 1e-15);
        }
    }

    #[test]
    fn hub_inverse_round_trip() {
        let p = params(0.5, 0.15);
        for i in 1..100 {
            let y = i as f64 / 100.0;
            let x = phi_hub(y, &p, 6);
            assert!((phi_hub_inverse(x, &p, 6) - y).abs() < 1e-12);
        }
    }

    #[test]
    fn tail_curve_matches_three_level_closed_form() {
        let (a, b, n2) = (0.5, 0.15, 10);
        let p = params(a, b);
        let t = topo(&[6, n2]);
        for i in 1..=200 {
            let y = i as f64 / 200.0;
            let point = tail_curve(y, &p, &t).unwrap();
            let z = b * y / (1.0 - a + a * b * y);
            let x = 1.0 / b
                + (y - 1.0)
                    / (b * (1.0 - a * y)
                        * (1.0 - b * b * y / (1.0 - a + a * b * y)).powi(n2 as i32));
            assert!((point.levels[0] - x).abs() < 1e-14);
            assert_eq!(point.levels[1], y);
            assert!((point.levels[2] - z).abs() < 1e-15);
        }
    }

    #[test]
    fn tail_curve_at_one_hits_inverse_b() {
        let p = params(0.5, 0.15);
        let point = tail_curve(1.0, &p, &topo(&[6, 10])).unwrap();
        assert!((point.levels[0] - 1.0 / 0.15).abs() < 1e-12);
        assert!((point.levels[2] - 0.15 / 0.575).abs() < 1e-15);
        assert!(!point.in_range);
        assert!(point.admissible);
        assert!(point.to_level_state().is_none());
    }

    #[test]
    fn tail_curve_rejects_zero() {
        let p = params(0.5, 0.15);
        assert!(tail_curve(0.0, &p, &topo(&[6, 10])).is_err());
        assert!(tail_curve(1.5, &p, &topo(&[6, 10])).is_err());
    }

    #[test]
    fn tail_curve_fixes_levels_two_to_k() {
        let p = params(0.5, 0.12);
        for branching in [&[6, 10][..], &[6, 10, 4]] {
            let t = topo(branching);
            let limit = admissible_limit(&p, &t).unwrap();
            for i in 1..=50 {
                let s = limit * i as f64 / 50.0;
                let point = tail_curve(s, &p, &t).unwrap();
                let mut next = vec![0.0; point.levels.len()];
                step_level_into(&point.levels, &p, branching, &mut next);
                for (n, l) in next.iter().zip(&point.levels).skip(1) {
                    assert!((n - l).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn subcritical_report_has_no_nontrivial_point() {
        let report = solve_fixed_point(
            &params(0.5, 0.08),
            &topo(&[6, 10]),
            &SolverOptions::default(),
        )
        .unwrap();
        assert_eq!(report.regime.kind, RegimeKind::Subcritical);
        assert!(report.nontrivial_point.is_none());
        assert_eq!(report.trivial_point.as_slice(), &[0.0; 3]);
    }

    #[test]
    fn supercritical_solvers_agree() {
        let opts = SolverOptions::default();
        let report = solve_fixed_point(&params(0.5, 0.15), &topo(&[6, 10]), &opts).unwrap();
        let point = report.nontrivial_point.clone().unwrap();
        assert!(point.as_slice().iter().all(|&v| v > 0.0 && v < 1.0));
        assert!(report.iteration_residual <= opts.tol);
        assert!(report.curve_root_residual <= opts.tol);
        assert!(report.agreement <= 10.0 * opts.tol, "{}", report.agreement);
    }

    #[test]
    fn four_level_supercritical() {
        let opts = SolverOptions::default();
        let report = solve_fixed_point(&params(0.5, 0.12), &topo(&[6, 10, 4]), &opts).unwrap();
        assert_eq!(report.regime.kind, RegimeKind::Supercritical);
        assert!(report
            .nontrivial_point
            .unwrap()
            .as_slice()
            .iter()
            .all(|&v| v > 0.0 && v < 1.0));
        assert!(report.agreement <= 10.0 * opts.tol, "{}", report.agreement);
    }

    #[test]
    fn bracket_failure_between_thresholds() {
        // above the closed-form threshold but below the linearized one
        let p = params(0.5, 0.113);
        let t = topo(&[6, 10, 4]);
        assert_eq!(classify_regime(&p, &t, 0.0).kind, RegimeKind::Supercritical);
        let err = solve_fixed_point(&p, &t, &SolverOptions::default()).unwrap_err();
        assert!(matches!(err, Error::BracketFailure { .. }));
    }

    #[test]
    fn tail_composition_inverts_the_tail_curve() {
        let p = params(0.5, 0.12);
        for branching in [&[6, 10][..], &[6, 10, 4]] {
            let t = topo(branching);
            for s in [0.01, 0.05, 0.1, 0.2] {
                let point = tail_curve(s, &p, &t).unwrap();
                if point.levels[0] > 1.0 || !point.admissible {
                    continue;
                }
                let d2 = tail_composition(point.levels[0], &p, &t).unwrap();
                assert!((d2 - point.levels[1]).abs() < 1e-12);
            }
        }
    }
}
