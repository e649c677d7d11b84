//! Out-of-band aided millimeter-wave link configuration.

pub mod array;
pub mod channel;
pub mod codebook;
pub mod config;
pub mod error;
pub mod eval;
pub mod link;
pub mod position;
pub mod rng;
pub mod sparse;
pub mod textio;
pub mod translation;

pub use error::{Error, Result};
