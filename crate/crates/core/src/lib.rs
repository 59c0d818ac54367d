//! Finite Markov chains viewed as random dynamical systems.
//!
//! A chain is given by its [`TransitionKernel`](chain::TransitionKernel); an
//! [`RdsRepresentation`](rds::RdsRepresentation) realizes it as a random map
//! driven by a counter-based noise path ([`noise::Scenario`]). On top of
//! that the crate computes the insulation structure and attractor size
//! exactly, samples random attractors by backward composition, draws
//! perfect samples when the representation synchronizes, and estimates
//! synchronization and attraction times.

pub mod attractor;
pub mod catalog;
pub mod chain;
pub mod clique;
pub mod hitting;
pub mod noise;
pub mod rds;
pub mod spec;
pub mod stats;
pub mod two_point;
pub mod verify;

mod error;

pub use error::Error;
