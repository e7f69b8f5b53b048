//! Discrete-time SIS dynamics on k-level starlike graphs.
//!
//! The crate provides the level-reduced mean-field map and the exact per-node
//! probability recursion ([`meanfield`]), threshold classification and a
//! cross-checked fixed-point solver ([`fixedpoint`]), Region I and curvature
//! diagnostics ([`geometry`]) and a seeded Markov-chain simulator
//! ([`stochastic`]).

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fixedpoint;
pub mod geometry;
pub mod meanfield;
pub mod model;
pub mod stochastic;

pub use error::{Error, Result};
pub use model::{LevelState, ModelParams, NodeProbState, StarlikeTopology};
