//! Simulator and analysis toolkit for partitioned and permuted transaction
//! ordering on top of a block-based atomic broadcast chain.

pub mod adversary;
pub mod amount;
pub mod analysis;
pub mod basechain;
pub mod checks;
pub mod error;
pub mod execution;
pub mod protocol;
pub mod randomness;
pub mod rewards;
pub mod rng;
pub mod scenario;
pub mod sim;
pub mod types;

pub use error::{Error, Result};
