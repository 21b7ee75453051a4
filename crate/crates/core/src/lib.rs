//! Data-poisoning attacks against locally differentially private trajectory
//! collection.
//!
//! The crate generates constraint-satisfying fake trajectories with a
//! prefix-suffix heuristic ([`generator::trap_generate`]), feeds them to two
//! simplified victim protocols as input or output poisoning, applies two
//! server-side defenses, and scores the outcome with AvgScore / AvgPR.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod attack;
pub mod defense;
pub mod error;
pub mod experiment;
pub mod generator;
pub mod io;
pub mod ldp;
pub mod metrics;
pub mod protocol;
pub mod rng;
pub mod trajectory;

pub use error::{Error, Result};
