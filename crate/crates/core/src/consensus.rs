//! Block proposal timing.
//!
//! Each miner's time to its next block is exponential with a rate
//! proportional to its share of hash power (PoW) or of stake times coin age
//! (PoS), scaled so the whole network proposes once per block interval.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::exponential;

#[derive(Debug, Error, PartialEq)]
pub enum ConsensusError {
    #[error("total proposal weight must be positive, got {0}")]
    NonPositiveTotal(f64),
    #[error("miner weight must be non-negative and finite, got {0}")]
    InvalidWeight(f64),
    #[error("block interval must be positive, got {0}")]
    InvalidInterval(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Pow,
    Pos,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsensusParams {
    pub protocol: Protocol,
    pub block_interval: f64,
}

impl ConsensusParams {
    pub fn new(protocol: Protocol, block_interval: f64) -> Result<Self, ConsensusError> {
        if !(block_interval > 0.0 && block_interval.is_finite()) {
            return Err(ConsensusError::InvalidInterval(block_interval));
        }
        Ok(ConsensusParams { protocol, block_interval })
    }
}

/// Proposal weight of one miner.
///
/// `stake_acquired_at` may lie before the start of the run (negative) to
/// model stake that was already aged when the simulation begins.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MinerWeight {
    pub hash_power: f64,
    pub stake: f64,
    pub stake_acquired_at: f64,
}

impl MinerWeight {
    pub fn pow(hash_power: f64) -> Self {
        MinerWeight { hash_power, ..Default::default() }
    }

    pub fn pos(stake: f64, stake_acquired_at: f64) -> Self {
        MinerWeight { stake, stake_acquired_at, ..Default::default() }
    }

    /// Coin age at `now`, in seconds.
    pub fn age(&self, now: f64) -> f64 {
        (now - self.stake_acquired_at).max(0.0)
    }

    pub fn stake_age(&self, now: f64) -> f64 {
        self.stake * self.age(now)
    }

    /// Restarts coin age at `now`.
    #[must_use]
    pub fn reset_stake_age(self, now: f64) -> Self {
        MinerWeight { stake_acquired_at: now, ..self }
    }

    /// The proposal weight under `protocol` at `now`.
    pub fn weight(&self, protocol: Protocol, now: f64) -> f64 {
        match protocol {
            Protocol::Pow => self.hash_power,
            Protocol::Pos => self.stake_age(now),
        }
    }
}

/// Sum of all miners' proposal weights at `now`.
pub fn total_weight(weights: &[MinerWeight], protocol: Protocol, now: f64) -> f64 {
    weights.iter().map(|w| w.weight(protocol, now)).sum()
}

/// Proposal rate `(w_i / total) / block_interval`.
pub fn proposal_rate(weight: f64, total: f64, params: &ConsensusParams) -> Result<f64, ConsensusError> {
    if !(total > 0.0 && total.is_finite()) {
        return Err(ConsensusError::NonPositiveTotal(total));
    }
    if !(weight >= 0.0 && weight.is_finite()) {
        return Err(ConsensusError::InvalidWeight(weight));
    }
    Ok(weight / total / params.block_interval)
}

fn next_generation<R: Rng + ?Sized>(rate: f64, now: f64, rng: &mut R) -> Option<f64> {
    (rate > 0.0).then(|| now + exponential(rng, rate))
}

/// Next PoW generation time, or `None` for a miner with no hash power.
pub fn pow_next_generation<R: Rng + ?Sized>(
    weight: &MinerWeight,
    total_hash: f64,
    params: &ConsensusParams,
    now: f64,
    rng: &mut R,
) -> Result<Option<f64>, ConsensusError> {
    let rate = proposal_rate(weight.hash_power, total_hash, params)?;
    Ok(next_generation(rate, now, rng))
}

/// Next PoS generation time; `None` when the miner's stake-age is zero.
///
/// `aggregate` is the network-wide stake-age sum evaluated at `now`.
pub fn pos_next_generation<R: Rng + ?Sized>(
    weight: &MinerWeight,
    aggregate: f64,
    params: &ConsensusParams,
    now: f64,
    rng: &mut R,
) -> Result<Option<f64>, ConsensusError> {
    let rate = proposal_rate(weight.stake_age(now), aggregate, params)?;
    Ok(next_generation(rate, now, rng))
}
