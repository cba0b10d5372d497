//! P2P network: topology generation, regions and block propagation delay.

mod delay;
mod propagate;
mod region;
mod topology;

use thiserror::Error;

pub use delay::{DelayModel, Propagation, ETH_ANNOUNCE_WAITS_S};
pub use propagate::{fixed_delays, propagate, shortest_delays};
pub use region::{RegionProfile, RegionTable, BUILTIN_PREFIX};
pub use topology::{generate_network, Graph, Link, Topology, TopologyParams};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum NetworkError {
    #[error("invalid topology parameters: {0}")]
    InvalidTopology(String),
    #[error("invalid delay model: {0}")]
    InvalidDelayModel(String),
    #[error("region table is empty")]
    EmptyRegions,
    #[error("invalid region table: {0}")]
    InvalidRegions(String),
    #[error("unknown builtin region table `{0}`")]
    UnknownBuiltin(String),
    #[error("cannot load region data from {path}: {reason}")]
    RegionFile { path: String, reason: String },
    #[error("nodes {u} and {v} are not adjacent")]
    NotAdjacent { u: usize, v: usize },
    #[error("node {node} is unreachable from {sender}")]
    Unreachable { sender: usize, node: usize },
}
