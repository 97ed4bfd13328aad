//! Deterministic simulator for federated nonconvex minimax optimization.
//!
//! The crate provides FedSGDA-M and FedSGDA+ with the Local SGDA family of
//! baselines, test problems whose stationarity measures are computable, and an
//! experiment harness that writes CSV summaries and static plots.

#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::too_many_arguments,
    clippy::needless_range_loop
)]

pub mod algorithms;
pub mod error;
pub mod estimators;
pub mod federation;
pub mod harness;
pub mod metrics;
pub mod problems;
pub mod rng;

pub use error::{Error, Result};
