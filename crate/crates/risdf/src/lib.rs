//! Simulator and learned joint optimizer for downlinks assisted by
//! reconfigurable intelligent surfaces and decode-and-forward relays.
//!
//! The crate covers channel generation, strategy evaluation, a two-phase
//! GNN producing beamformers / RIS phases / relay selection, unsupervised
//! penalty-method training, reference baselines and dataset/checkpoint
//! persistence.

pub mod baselines;
pub mod channel;
pub mod config;
pub mod dataset;
pub mod error;
pub mod gnn;
pub mod phases;
pub mod phy;
pub mod tape;
pub mod train;

pub use error::{Error, Result};
