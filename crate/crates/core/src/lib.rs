//! Discrete-event blockchain simulator.
//!
//! Nodes mine blocks under PoW or PoS, blocks travel over a generated P2P
//! topology with protocol-specific per-hop delays, and every node applies a
//! fork-choice rule to what it hears. Transactions are pre-generated once
//! and tracked per node and per block as bitsets.

pub mod config;
pub mod consensus;
pub mod engine;
pub mod incentive;
pub mod ledger;
pub mod metrics;
pub mod network;
pub mod report;
pub mod rng;
pub mod txpool;

use thiserror::Error;

pub use config::{ConfigError, SimulationConfig};
pub use consensus::ConsensusError;
pub use engine::{run, EngineError, SimulationOutput};
pub use incentive::IncentiveError;
pub use network::NetworkError;
pub use report::SimulationReport;
pub use txpool::TxPoolError;

/// Any failure of a simulation run.
#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Consensus(#[from] ConsensusError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    TxPool(#[from] TxPoolError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Incentive(#[from] IncentiveError),
}
