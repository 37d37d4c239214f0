//! Coupled ac/dc power-network modelling under geomagnetic disturbances.
//!
//! The crate covers the full pipeline: case ingestion ([`model`]), the dc
//! GIC solve and transformer reactive-loss coupling ([`gic`]), a heuristic
//! maximum-load-delivered evaluator ([`mld`]), budget-constrained blocker
//! placement ([`placement`]), heterogeneous graph construction ([`hgraph`]),
//! a small deterministic autograd and HGNN ([`nn`]), physics-informed
//! training ([`train`]), dataset generation ([`dataset`]), and evaluation
//! utilities ([`metrics`], [`eval`]).

pub mod dataset;
pub mod error;
pub mod gic;
mod linalg;
pub mod mld;
pub mod placement;
pub mod model;

pub use error::{Error, Result};
