//! Finite permutation models of finitely generated groups, path-partition
//! model measures built from Markov chains, and exact entropy checks of
//! uniform model-mixing on them.
//!
//! The pipeline is: pick a [`group::GroupPresentation`], build a
//! [`sofic::SoficMap`], turn it into a weighted [`modelmetric::ModelMetric`],
//! cut the cycles of one generator into paths ([`construction`]), place
//! independent copies of a process marginal on the paths ([`measures`],
//! [`processes`]), then certify entropy inequalities ([`verify`]).
//! [`cli`] wires the stages together behind JSON configs.

pub mod cli;
pub mod construction;
pub mod error;
pub mod group;
pub mod measures;
pub mod modelmetric;
pub mod processes;
pub mod sofic;
pub mod verify;

/// One letter of the finite alphabet `A = {0, .., k-1}`.
pub type Symbol = u8;

pub use error::{Error, Result};
pub use group::{CosetDecomposition, GroupKind, GroupPresentation, GroupWord};
pub use measures::{BlockProductMeasure, ExplicitMeasure, MarkovChain, Measure};
pub use modelmetric::ModelMetric;
pub use processes::{Process, ProcessOracle};
pub use sofic::{Permutation, SoficMap};
