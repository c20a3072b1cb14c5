//! Persistent monitoring of targets with linear-Gaussian dynamics on a
//! travel network.
//!
//! Agents cycle through the network and observe one target at a time; every
//! target's Kalman-filter covariance grows while it is alone and shrinks
//! while observed. The planners here choose visiting sequences, dwell times
//! and (for fleets) a partition of the targets so that the worst steady-state
//! weighted covariance peak is as small as possible.
//!
//! * [`model`]: instances, validation, shortest paths, random generation.
//! * [`covariance`]: propagation, algebraic and periodic steady states.
//! * [`dwell`]: dwell balancing and period search for a fixed cycle.
//! * [`cycle`]: the revisit lower bound and greedy cycle construction.
//! * [`fleet`]: disparity-driven spectral partitioning and target exchange.
//! * [`sim`]: forward simulation and plan validation.

pub mod covariance;
pub mod cycle;
pub mod dwell;
pub mod error;
pub mod fleet;
pub mod linalg;
pub mod model;
mod serde_inf;
pub mod sim;

pub use error::{Error, Result};
