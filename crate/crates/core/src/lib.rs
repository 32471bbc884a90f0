//! Simulation and optimization of OFDM links assisted by reconfigurable
//! intelligent surfaces whose elements can add a per-element delay.

pub mod ao;
pub mod channel;
pub mod error;
pub mod harness;
pub mod ofdm;
pub mod power;
pub mod reflection;
pub mod rng;
pub mod sdp;
pub mod sta;

pub use error::{Error, Result};
