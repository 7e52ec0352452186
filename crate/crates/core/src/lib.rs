//! Secrecy-rate optimization for a full-duplex base station serving grouped
//! downlink and uplink users in the presence of eavesdroppers.

extern crate openblas_src;

pub mod algorithms;
pub mod approx;
pub mod conic;
pub mod error;
pub mod harness;
pub mod rates;
pub mod scalar;
pub mod scenario;
pub mod solver;
pub mod testkit;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type ChannelSet = scenario::ChannelSet<f64>;
pub type Instance = rates::Instance<f64>;
pub type DesignPoint = rates::DesignPoint<f64>;
