//! Binary transaction pool.
//!
//! Complete transactions live once in a [`GlobalPool`] sorted by generation
//! time. Node mempools and block contents are [`TxBitset`]s over the same
//! index space, so propagation, removal and release are pointer moves and
//! word-wise AND-NOT / OR.

mod bitset;
mod pool;

pub use bitset::TxBitset;
pub use pool::{GlobalPool, Transaction, ValueDist, FEE_UNITS_PER_COIN};

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum TxPoolError {
    #[error("transaction rate must be positive and finite, got {0}")]
    InvalidRate(f64),
    #[error("bitset lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
}
