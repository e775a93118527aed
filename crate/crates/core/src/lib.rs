//! Desk-scale agent-based traffic simulation with congestion pricing and
//! autonomous vehicle modes.

pub mod analytics;
pub mod demand;
pub mod dispatch;
pub mod error;
pub mod experiment;
pub mod fixtures;
pub mod mobsim;
pub mod network;
pub mod pricing;
pub mod replanning;
pub mod rng;
pub mod routing;
pub mod scenario;
pub mod scoring;

pub use error::{Error, Result};
