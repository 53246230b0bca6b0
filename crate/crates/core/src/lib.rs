//! Scheduling over unprobed Markov ON/OFF downlink channels.
//!
//! The base station sees a channel's state only through the ACK/NACK of a
//! packet sent on it. This crate provides the belief dynamics, round-robin
//! policies that exploit channel memory, closed-form capacity bounds, a
//! slot-level simulator, and Monte-Carlo oracles that check the analysis.

pub mod activation;
pub mod capacity;
pub mod channel;
pub mod config;
pub mod error;
pub mod experiment;
pub mod lp;
pub mod oracles;
pub mod policy;
pub mod simulator;
pub mod stats;

pub use activation::ActivationVector;
pub use channel::{BeliefVector, ChannelParams, ChannelState};
pub use error::{Error, Result};
