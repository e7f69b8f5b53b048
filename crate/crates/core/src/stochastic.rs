//! Seeded Markov-chain simulation of the per-node SIS process.
//!
//! Per step, every infected node stays infected with probability `a`, and every
//! infected neighbor of a node transmits to it with probability `b`, all draws
//! independent. A node is infected at t + 1 iff it stayed infected or received
//! at least one transmission, so its conditional infection probability is
//! `1 - (1 - a s_i) prod_{j ~ i} (1 - b s_j)`.

use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{check_len, ModelParams, StarlikeTopology};

/// Default window for [`plateau_mean`].
pub const DEFAULT_PLATEAU_WINDOW: Range<usize> = 100..500;

/// Infection indicators of all nodes (breadth-first order) at step `t`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChainState {
    pub infected: Vec<bool>,
    pub t: u64,
}

impl ChainState {
    pub fn new(infected: Vec<bool>, topo: &StarlikeTopology) -> Result<Self> {
        check_len(topo.node_count(), infected.len())?;
        Ok(Self { infected, t: 0 })
    }

    pub fn all_infected(topo: &StarlikeTopology) -> Self {
        Self {
            infected: vec![true; topo.node_count()],
            t: 0,
        }
    }

    pub fn all_healthy(topo: &StarlikeTopology) -> Self {
        Self {
            infected: vec![false; topo.node_count()],
            t: 0,
        }
    }

    pub fn is_extinct(&self) -> bool {
        !self.infected.iter().any(|&s| s)
    }

    /// Number of infected nodes on each level.
    pub fn level_counts(&self, topo: &StarlikeTopology) -> Vec<u64> {
        (1..=topo.levels())
            .map(|m| {
                self.infected[topo.level_range(m)]
                    .iter()
                    .filter(|&&s| s)
                    .count() as u64
            })
            .collect()
    }

    /// Fraction of infected nodes on each level.
    pub fn level_prevalence(&self, topo: &StarlikeTopology) -> Vec<f64> {
        self.level_counts(topo)
            .into_iter()
            .enumerate()
            .map(|(m, c)| c as f64 / topo.level_size(m + 1) as f64)
            .collect()
    }
}

fn adjacency(topo: &StarlikeTopology) -> Vec<Vec<usize>> {
    (0..topo.node_count())
        .map(|i| topo.neighbors(i).expect("index in range"))
        .collect()
}

/// Advances the chain one step.
///
/// Draw order is fixed: nodes in index order; for each node the survival draw
/// (if infected) and then one transmission draw per infected neighbor in
/// ascending neighbor order.
///
/// # Panics
///
/// Panics if the state length does not match the topology.
pub fn step_chain<R: Rng + ?Sized>(
    state: &ChainState,
    params: &ModelParams,
    topo: &StarlikeTopology,
    rng: &mut R,
) -> ChainState {
    assert_eq!(
        state.infected.len(),
        topo.node_count(),
        "state does not match topology"
    );
    let adj = adjacency(topo);
    let mut next = vec![false; state.infected.len()];
    step_into(&state.infected, &adj, params, rng, &mut next);
    ChainState {
        infected: next,
        t: state.t + 1,
    }
}

fn step_into<R: Rng + ?Sized>(
    cur: &[bool],
    adj: &[Vec<usize>],
    params: &ModelParams,
    rng: &mut R,
    next: &mut [bool],
) {
    let (a, b) = (params.a(), params.b());
    for (i, neighbors) in adj.iter().enumerate() {
        let mut infected = cur[i] && rng.gen_bool(a);
        for &j in neighbors {
            if cur[j] {
                infected |= rng.gen_bool(b);
            }
        }
        next[i] = infected;
    }
}

/// Per-trial RNG: ChaCha8 keyed by the master seed, one stream per trial.
pub fn trial_rng(master_seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial);
    rng
}

/// Averages over independent runs of the chain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    /// `prevalence[t][m]` is the fraction of infected level-(m+1) nodes at
    /// step t, averaged over trials; `horizon + 1` rows.
    pub prevalence: Vec<Vec<f64>>,
    /// Step by which every trial had reached the all-healthy state.
    pub extinction_step: Option<usize>,
    /// Per-trial extinction steps.
    pub trial_extinction: Vec<Option<usize>>,
    pub extinct_trials: usize,
    pub seed: u64,
    pub trials: usize,
    pub horizon: usize,
}

struct TrialCounts {
    counts: Vec<u64>,
    extinction: Option<usize>,
}

fn run_one(
    params: &ModelParams,
    topo: &StarlikeTopology,
    adj: &[Vec<usize>],
    init: &ChainState,
    horizon: usize,
    mut rng: ChaCha8Rng,
) -> TrialCounts {
    let k = topo.levels();
    let mut counts = Vec::with_capacity((horizon + 1) * k);
    let mut cur = init.infected.clone();
    let mut next = vec![false; cur.len()];
    let mut extinction = None;
    for t in 0..=horizon {
        if extinction.is_none() && !cur.iter().any(|&s| s) {
            extinction = Some(t);
        }
        for m in 1..=k {
            counts.push(cur[topo.level_range(m)].iter().filter(|&&s| s).count() as u64);
        }
        if t < horizon {
            if extinction.is_some() {
                continue;
            }
            step_into(&cur, adj, params, &mut rng, &mut next);
            std::mem::swap(&mut cur, &mut next);
        }
    }
    TrialCounts { counts, extinction }
}

/// Runs `trials` independent chains for `horizon` steps from `init`.
///
/// Trial i uses [`trial_rng`]`(master_seed, i)` and infection counts are summed
/// as integers, so the result does not depend on scheduling.
pub fn run_trials(
    params: &ModelParams,
    topo: &StarlikeTopology,
    init: &ChainState,
    horizon: usize,
    trials: usize,
    master_seed: u64,
) -> Result<RunSummary> {
    check_len(topo.node_count(), init.infected.len())?;
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be >= 1".into()));
    }
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be >= 1".into()));
    }
    let adj = adjacency(topo);
    let runs: Vec<TrialCounts> = (0..trials)
        .into_par_iter()
        .map(|i| {
            run_one(
                params,
                topo,
                &adj,
                init,
                horizon,
                trial_rng(master_seed, i as u64),
            )
        })
        .collect();

    let k = topo.levels();
    let mut totals = vec![0u64; (horizon + 1) * k];
    for run in &runs {
        for (tot, c) in totals.iter_mut().zip(&run.counts) {
            *tot += c;
        }
    }
    let prevalence = totals
        .chunks(k)
        .map(|row| {
            row.iter()
                .enumerate()
                .map(|(m, &c)| c as f64 / (trials * topo.level_size(m + 1)) as f64)
                .collect()
        })
        .collect();
    let trial_extinction: Vec<Option<usize>> = runs.iter().map(|r| r.extinction).collect();
    let extinct_trials = trial_extinction.iter().filter(|e| e.is_some()).count();
    let extinction_step = if extinct_trials == trials {
        trial_extinction.iter().flatten().copied().max()
    } else {
        None
    };
    Ok(RunSummary {
        prevalence,
        extinction_step,
        trial_extinction,
        extinct_trials,
        seed: master_seed,
        trials,
        horizon,
    })
}

/// Mean per-level prevalence over the steps in `window`.
pub fn plateau_mean(summary: &RunSummary, window: Range<usize>) -> Result<Vec<f64>> {
    if window.is_empty() || window.end > summary.prevalence.len() {
        return Err(Error::InvalidArgument(format!(
            "window {}..{} not inside 0..{}",
            window.start,
            window.end,
            summary.prevalence.len()
        )));
    }
    let k = summary.prevalence[0].len();
    let len = window.len() as f64;
    let mut mean = vec![0.0; k];
    for row in &summary.prevalence[window] {
        for (acc, v) in mean.iter_mut().zip(row) {
            *acc += v;
        }
    }
    Ok(mean.into_iter().map(|s| s / len).collect())
}
