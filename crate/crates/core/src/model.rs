//! Parameters, topology and state containers shared by every other module.
//!
//! Nodes of a starlike graph are numbered breadth-first: the hub is node 0,
//! followed by the level-2 block, the level-3 block and so on. Within a level,
//! children of lower-index parents come first. This ordering is part of the
//! external file format.

use std::ops::Range;

use serde::Serialize;

use crate::error::{Error, Result};

/// Retention probability `a` (an infected node stays infected) and per-edge
/// transmission probability `b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelParams {
    a: f64,
    b: f64,
}

impl ModelParams {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        check_open_unit("a", a)?;
        check_open_unit("b", b)?;
        Ok(Self { a, b })
    }

    /// Builds parameters from the cure probability `delta` and the
    /// transmission probability `beta` (a = 1 - delta, b = beta).
    pub fn from_cure_rate(delta: f64, beta: f64) -> Result<Self> {
        check_open_unit("delta", delta)?;
        Self::new(1.0 - delta, beta)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn delta(&self) -> f64 {
        1.0 - self.a
    }

    pub fn beta(&self) -> f64 {
        self.b
    }

    pub fn with_b(&self, b: f64) -> Result<Self> {
        Self::new(self.a, b)
    }
}

pub(crate) fn check_open_unit(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidProbability { name, value })
    }
}

/// A k-level starlike tree: one hub, `n1` level-2 nodes, `n2` children under
/// each level-2 node, and so on down to the leaves at level k.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StarlikeTopology {
    branching: Vec<usize>,
    #[serde(skip)]
    level_sizes: Vec<usize>,
    #[serde(skip)]
    level_offsets: Vec<usize>,
}

impl StarlikeTopology {
    pub fn new(branching: &[usize]) -> Result<Self> {
        if branching.is_empty() {
            return Err(Error::EmptyBranching);
        }
        if let Some(pos) = branching.iter().position(|&n| n == 0) {
            return Err(Error::ZeroBranch { level: pos + 1 });
        }
        let mut level_sizes = Vec::with_capacity(branching.len() + 1);
        level_sizes.push(1usize);
        for &n in branching {
            let prev = *level_sizes.last().unwrap();
            let size = prev
                .checked_mul(n)
                .ok_or_else(|| Error::InvalidArgument("graph too large".into()))?;
            level_sizes.push(size);
        }
        let mut level_offsets = Vec::with_capacity(level_sizes.len() + 1);
        let mut acc = 0usize;
        for &s in &level_sizes {
            level_offsets.push(acc);
            acc = acc
                .checked_add(s)
                .ok_or_else(|| Error::InvalidArgument("graph too large".into()))?;
        }
        level_offsets.push(acc);
        Ok(Self {
            branching: branching.to_vec(),
            level_sizes,
            level_offsets,
        })
    }

    /// Number of levels k (branching length + 1).
    pub fn levels(&self) -> usize {
        self.branching.len() + 1
    }

    pub fn branching(&self) -> &[usize] {
        &self.branching
    }

    /// Children per node at `level` (1-based, `1..k`).
    pub fn children_per_node(&self, level: usize) -> usize {
        self.branching[level - 1]
    }

    pub fn node_count(&self) -> usize {
        *self.level_offsets.last().unwrap()
    }

    /// Number of nodes on `level` (1-based).
    pub fn level_size(&self, level: usize) -> usize {
        self.level_sizes[level - 1]
    }

    /// Index range of the nodes on `level` (1-based).
    pub fn level_range(&self, level: usize) -> Range<usize> {
        self.level_offsets[level - 1]..self.level_offsets[level]
    }

    /// Level (1-based) of a node index.
    pub fn level_of(&self, index: usize) -> Result<usize> {
        let count = self.node_count();
        if index >= count {
            return Err(Error::NodeOutOfRange { index, count });
        }
        // offsets are strictly increasing, so the partition point is the level
        Ok(self.level_offsets.partition_point(|&off| off <= index))
    }

    pub fn parent(&self, index: usize) -> Result<Option<usize>> {
        let level = self.level_of(index)?;
        if level == 1 {
            return Ok(None);
        }
        let pos = index - self.level_offsets[level - 1];
        let parent_pos = pos / self.branching[level - 2];
        Ok(Some(self.level_offsets[level - 2] + parent_pos))
    }

    pub fn children(&self, index: usize) -> Result<Range<usize>> {
        let level = self.level_of(index)?;
        if level == self.levels() {
            return Ok(index..index);
        }
        let n = self.branching[level - 1];
        let pos = index - self.level_offsets[level - 1];
        let start = self.level_offsets[level] + pos * n;
        Ok(start..start + n)
    }

    /// Neighbors of a node in ascending index order (parent, then children).
    pub fn neighbors(&self, index: usize) -> Result<Vec<usize>> {
        let mut out: Vec<usize> = self.parent(index)?.into_iter().collect();
        out.extend(self.children(index)?);
        Ok(out)
    }

    /// Undirected edge list `(parent, child)` in breadth-first order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        (1..self.node_count())
            .map(|i| (self.parent(i).unwrap().unwrap(), i))
            .collect()
    }
}

/// Per-level infection probabilities d = (d1, ..., dk); d1 is the hub.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct LevelState(Vec<f64>);

impl LevelState {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        check_unit_entries(&values)?;
        if values.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: 0,
            });
        }
        Ok(Self(values))
    }

    pub fn for_topology(values: Vec<f64>, topo: &StarlikeTopology) -> Result<Self> {
        check_len(topo.levels(), values.len())?;
        Self::new(values)
    }

    pub fn uniform(levels: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; levels])
    }

    pub fn zeros(levels: usize) -> Self {
        Self(vec![0.0; levels])
    }

    pub fn ones(levels: usize) -> Self {
        Self(vec![1.0; levels])
    }

    pub fn levels(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Sup-norm distance to another state of the same length.
    pub fn sup_distance(&self, other: &LevelState) -> f64 {
        sup_distance(&self.0, &other.0)
    }

    /// Spreads each level value uniformly over that level's nodes.
    pub fn expand(&self, topo: &StarlikeTopology) -> Result<NodeProbState> {
        check_len(topo.levels(), self.levels())?;
        let mut p = Vec::with_capacity(topo.node_count());
        for (m, &v) in self.0.iter().enumerate() {
            p.extend(std::iter::repeat_n(v, topo.level_size(m + 1)));
        }
        Ok(NodeProbState(p))
    }

    pub(crate) fn from_raw(values: Vec<f64>) -> Self {
        debug_assert!(values.iter().all(|v| (0.0..=1.0).contains(v)));
        Self(values)
    }
}

impl std::ops::Index<usize> for LevelState {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Per-node infection probabilities p_i on the full graph.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct NodeProbState(Vec<f64>);

impl NodeProbState {
    pub fn new(values: Vec<f64>, topo: &StarlikeTopology) -> Result<Self> {
        check_len(topo.node_count(), values.len())?;
        check_unit_entries(&values)?;
        Ok(Self(values))
    }

    pub fn zeros(topo: &StarlikeTopology) -> Self {
        Self(vec![0.0; topo.node_count()])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Per-level mean. A level holding identical values reduces to exactly
    /// that value.
    pub fn reduce(&self, topo: &StarlikeTopology) -> Result<LevelState> {
        check_len(topo.node_count(), self.0.len())?;
        let d = (1..=topo.levels())
            .map(|m| shifted_mean(&self.0[topo.level_range(m)]))
            .collect();
        Ok(LevelState::from_raw(d))
    }

    pub(crate) fn from_raw(values: Vec<f64>) -> Self {
        Self(values)
    }
}

impl std::ops::Index<usize> for NodeProbState {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

fn shifted_mean(values: &[f64]) -> f64 {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let excess: f64 = values.iter().map(|v| v - lo).sum();
    (lo + excess / values.len() as f64).min(1.0)
}

pub(crate) fn sup_distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

fn check_unit_entries(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !(0.0..=1.0).contains(v)) {
        Some(index) => Err(Error::OutOfUnitInterval {
            index,
            value: values[index],
        }),
        None => Ok(()),
    }
}
