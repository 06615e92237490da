//! Distributed Kalman filtering for networks of output-coupled linear
//! subsystems.
//!
//! Each node runs a local filter over its own state, treating the measured
//! outputs of its neighbors as known inputs. The crate provides that
//! distributed filter, the optimal centralized filter on the aggregated
//! model, and the tools to measure how far apart the two are: the
//! Riemannian distance between covariance matrices, the contraction and
//! gap bounds, and a seeded simulation harness.
//!
//! Module map:
//!
//! - [`netmodel`]: subsystems, couplings, aggregated model.
//! - [`central`]: centralized filter with correlated process/measurement noise.
//! - [`distributed`]: per-node filter and synchronized broadcast rounds.
//! - [`analysis`]: Riemannian distance, bound constants, gap trajectories,
//!   error dynamics, stability checks.
//! - [`sim`]: deterministic simulation and the five-agent experiments.
//! - [`config`] and [`cli`]: configuration files, CSV outputs, command driver.

pub mod analysis;
pub mod central;
pub mod cli;
pub mod config;
pub mod distributed;
pub mod error;
pub mod linalg;
pub mod netmodel;
pub mod output;
pub mod sim;

pub use error::{Error, Result};
pub use linalg::{Matrix, Vector};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/network-model.md")]
    mod network_model {}
    #[doc = include_str!("../../../book/src/filters.md")]
    mod filters {}
    #[doc = include_str!("../../../book/src/riemannian-distance.md")]
    mod riemannian_distance {}
    #[doc = include_str!("../../../book/src/bounds.md")]
    mod bounds {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
