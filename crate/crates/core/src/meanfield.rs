//! Deterministic mean-field dynamics.
//!
//! The level-reduced map F acts on d = (d1, ..., dk):
//!
//! ```text
//! d1' = 1 - (1 - a d1) (1 - b d2)^n1
//! dm' = 1 - (1 - a dm) (1 - b d(m-1)) (1 - b d(m+1))^nm      2 <= m <= k-1
//! dk' = 1 - (1 - a dk) (1 - b d(k-1))
//! ```
//!
//! and the per-node recursion is p_i' = 1 - (1 - a p_i) * prod_{j ~ i} (1 - b p_j).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{
    check_len, sup_distance, LevelState, ModelParams, NodeProbState, StarlikeTopology,
};

/// Applies F once.
pub fn step_level(
    d: &LevelState,
    params: &ModelParams,
    topo: &StarlikeTopology,
) -> Result<LevelState> {
    check_len(topo.levels(), d.levels())?;
    let mut out = vec![0.0; d.levels()];
    step_level_into(d.as_slice(), params, topo.branching(), &mut out);
    Ok(LevelState::from_raw(out))
}

/// Unchecked F on raw slices; `out.len() == d.len() == branching.len() + 1`.
pub(crate) fn step_level_into(
    d: &[f64],
    params: &ModelParams,
    branching: &[usize],
    out: &mut [f64],
) {
    let (a, b) = (params.a(), params.b());
    let k = d.len();
    for m in 0..k {
        let mut survive = 1.0 - a * d[m];
        if m > 0 {
            survive *= 1.0 - b * d[m - 1];
        }
        if m + 1 < k {
            survive *= (1.0 - b * d[m + 1]).powi(branching[m] as i32);
        }
        out[m] = 1.0 - survive;
    }
}

/// Residual sup-norm of F(d) - d on raw slices.
pub(crate) fn level_residual(d: &[f64], params: &ModelParams, branching: &[usize]) -> f64 {
    let mut next = vec![0.0; d.len()];
    step_level_into(d, params, branching, &mut next);
    sup_distance(&next, d)
}

/// The 3-level map written out coordinate by coordinate.
pub fn step_three_level(
    x: f64,
    y: f64,
    z: f64,
    params: &ModelParams,
    n1: usize,
    n2: usize,
) -> [f64; 3] {
    let (a, b) = (params.a(), params.b());
    [
        1.0 - (1.0 - a * x) * (1.0 - b * y).powi(n1 as i32),
        1.0 - (1.0 - a * y) * (1.0 - b * x) * (1.0 - b * z).powi(n2 as i32),
        1.0 - (1.0 - a * z) * (1.0 - b * y),
    ]
}

/// Applies the exact per-node recursion once.
pub fn step_full(
    p: &NodeProbState,
    params: &ModelParams,
    topo: &StarlikeTopology,
) -> Result<NodeProbState> {
    check_len(topo.node_count(), p.len())?;
    let mut out = vec![0.0; p.len()];
    step_full_into(p.as_slice(), params, topo, &mut out);
    Ok(NodeProbState::from_raw(out))
}

pub(crate) fn step_full_into(
    p: &[f64],
    params: &ModelParams,
    topo: &StarlikeTopology,
    out: &mut [f64],
) {
    let (a, b) = (params.a(), params.b());
    let k = topo.levels();
    for level in 1..=k {
        let range = topo.level_range(level);
        let level_start = range.start;
        for i in range {
            // neighbors in ascending index order: parent, then children
            let mut not_infected = 1.0;
            if level > 1 {
                let n_up = topo.children_per_node(level - 1);
                let parent = topo.level_range(level - 1).start + (i - level_start) / n_up;
                not_infected *= 1.0 - b * p[parent];
            }
            if level < k {
                let n = topo.children_per_node(level);
                let first = topo.level_range(level + 1).start + (i - level_start) * n;
                for &pj in &p[first..first + n] {
                    not_infected *= 1.0 - b * pj;
                }
            }
            out[i] = 1.0 - (1.0 - a * p[i]) * not_infected;
        }
    }
}

/// Stopping rule and storage policy for [`iterate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterateOptions {
    /// Stop once the sup-norm of F(d) - d is at most `tol`.
    pub tol: f64,
    pub max_iter: usize,
    /// Keep every `thin`-th state (first and last are always kept).
    pub thin: usize,
}

impl Default for IterateOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 1_000_000,
            thin: 1,
        }
    }
}

impl IterateOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "tol must be > 0, got {}",
                self.tol
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be >= 1".into()));
        }
        if self.thin == 0 {
            return Err(Error::InvalidArgument("thin must be >= 1".into()));
        }
        Ok(())
    }
}

/// One recorded state of a trajectory with its residual |F(d) - d|.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryPoint {
    pub step: usize,
    pub state: LevelState,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub states: Vec<TrajectoryPoint>,
    pub converged: bool,
    /// Index of the final state (number of applications of F).
    pub iterations: usize,
    pub final_residual: f64,
    pub limit: LevelState,
}

/// Iterates F from `d0` until the successive difference drops to `opts.tol`
/// or `opts.max_iter` applications have been made. Running out of iterations
/// is reported through `converged = false`, not as an error.
pub fn iterate(
    d0: &LevelState,
    params: &ModelParams,
    topo: &StarlikeTopology,
    opts: &IterateOptions,
) -> Result<Trajectory> {
    opts.validate()?;
    check_len(topo.levels(), d0.levels())?;
    let branching = topo.branching();
    let mut cur = d0.as_slice().to_vec();
    let mut next = vec![0.0; cur.len()];
    let mut states = Vec::new();
    let mut step = 0usize;
    loop {
        step_level_into(&cur, params, branching, &mut next);
        let residual = sup_distance(&next, &cur);
        let converged = residual <= opts.tol;
        let last = converged || step == opts.max_iter;
        if step.is_multiple_of(opts.thin) || last {
            states.push(TrajectoryPoint {
                step,
                state: LevelState::from_raw(cur.clone()),
                residual,
            });
        }
        if last {
            return Ok(Trajectory {
                states,
                converged,
                iterations: step,
                final_residual: residual,
                limit: LevelState::from_raw(cur),
            });
        }
        std::mem::swap(&mut cur, &mut next);
        step += 1;
    }
}

/// Largest spread max|p_i - p_j| among nodes of each level. Level 1 holds a
/// single node, so its gap is 0.
pub fn coalescence_gap(p: &NodeProbState, topo: &StarlikeTopology) -> Result<Vec<f64>> {
    check_len(topo.node_count(), p.len())?;
    Ok((1..=topo.levels())
        .map(|m| spread(&p.as_slice()[topo.level_range(m)]))
        .collect())
}

/// Like [`coalescence_gap`] but only over groups of siblings (nodes sharing a
/// parent). Leaf siblings have the same single neighbor, so at the leaf level
/// this gap shrinks by at least a factor `a` per step of the full recursion.
pub fn sibling_gap(p: &NodeProbState, topo: &StarlikeTopology) -> Result<Vec<f64>> {
    check_len(topo.node_count(), p.len())?;
    let mut gaps = vec![0.0];
    for level in 2..=topo.levels() {
        let n = topo.children_per_node(level - 1);
        let values = &p.as_slice()[topo.level_range(level)];
        gaps.push(values.chunks(n).map(spread).fold(0.0, f64::max));
    }
    Ok(gaps)
}

fn spread(values: &[f64]) -> f64 {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    hi - lo
}
