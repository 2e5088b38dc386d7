//! Link-quality modelling for semantic communication systems.
//!
//! An ABG curve `phi(rho) = alpha - gamma / (1 + (beta * rho)^tau)` maps a
//! linear SNR to a task metric. On top of it the crate provides curve fitting,
//! Rayleigh channel sampling, single-user energy-efficiency maximization and
//! max-min power allocation across users.

pub mod channel;
pub mod cli;
pub mod error;
pub mod experiments;
pub mod fit;
pub mod fixtures;
pub mod model;
pub mod multi_user;
pub mod single_user;

pub use channel::LinkState;
pub use error::{Error, Result};
pub use model::{AbgParams, BitScalingParams, MetricSample};
