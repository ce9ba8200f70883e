//! Multi-location stochastic inventory control: exact dynamic programming,
//! simple decoupled and online policies, ordering-cost envelopes, and
//! Monte Carlo cost-ratio estimation.
//!
//! A [`model::Problem`] describes the instance. [`dp`] solves it exactly on
//! the state grid, [`policies`] and [`balancing`] build the policies under
//! comparison, [`bounds`] computes the worst-case guarantees, and [`sim`]
//! measures what the policies actually cost.

pub mod balancing;
pub mod bounds;
pub mod config;
pub mod dp;
pub mod error;
pub mod instances;
pub mod model;
pub mod policies;
pub mod rng;
pub mod sim;
pub mod stationary;

pub use error::{Error, Result};
