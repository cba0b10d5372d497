//! Post-run reward distribution.
//!
//! Amounts are integer micro-units (see [`FEE_UNITS_PER_COIN`]) so the
//! total paid out can be checked for exact conservation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ledger::{BlockId, BlockStore};
use crate::txpool::FEE_UNITS_PER_COIN;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum IncentiveError {
    #[error("block reward must be finite and >= 0, got {0}")]
    InvalidBlockReward(f64),
    #[error("uncle reward fraction must be in [0, 1], got {0}")]
    InvalidUncleFraction(f64),
    #[error("rewards not conserved: paid {paid} units, expected {expected}")]
    NotConserved { paid: u64, expected: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardKind {
    /// Only canonical-chain miners are paid.
    CanonicalOnly,
    /// Canonical miners plus a fraction of the block reward for each uncle
    /// referenced by the canonical chain.
    CanonicalPlusUncles,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardScheme {
    pub kind: RewardKind,
    pub block_reward: f64,
    #[serde(default = "default_uncle_fraction")]
    pub uncle_reward_fraction: f64,
    #[serde(default = "default_fees_to_miner")]
    pub fees_to_miner: bool,
}

fn default_uncle_fraction() -> f64 {
    7.0 / 8.0
}

fn default_fees_to_miner() -> bool {
    true
}

impl RewardScheme {
    pub fn canonical_only(block_reward: f64) -> Self {
        RewardScheme {
            kind: RewardKind::CanonicalOnly,
            block_reward,
            uncle_reward_fraction: default_uncle_fraction(),
            fees_to_miner: true,
        }
    }

    pub fn canonical_plus_uncles(block_reward: f64) -> Self {
        RewardScheme { kind: RewardKind::CanonicalPlusUncles, ..Self::canonical_only(block_reward) }
    }

    pub fn validate(&self) -> Result<(), IncentiveError> {
        if !(self.block_reward >= 0.0 && self.block_reward.is_finite()) {
            return Err(IncentiveError::InvalidBlockReward(self.block_reward));
        }
        if !(0.0..=1.0).contains(&self.uncle_reward_fraction) {
            return Err(IncentiveError::InvalidUncleFraction(self.uncle_reward_fraction));
        }
        Ok(())
    }

    pub fn block_reward_units(&self) -> u64 {
        to_units(self.block_reward)
    }

    pub fn uncle_reward_units(&self) -> u64 {
        to_units(self.block_reward * self.uncle_reward_fraction)
    }
}

fn to_units(coins: f64) -> u64 {
    (coins * FEE_UNITS_PER_COIN).round() as u64
}

/// One row of the reward table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MinerReward {
    pub node_id: usize,
    pub canonical_blocks: u64,
    pub uncle_blocks: u64,
    /// Balance in coins.
    pub balance: f64,
    #[serde(skip)]
    pub balance_units: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RewardDistribution {
    /// Rows sorted by node id.
    pub rows: Vec<MinerReward>,
    pub canonical_blocks: u64,
    pub accepted_uncles: u64,
    pub fee_units: u64,
    pub total_units: u64,
}

impl RewardDistribution {
    pub fn balance_units(&self, node: usize) -> u64 {
        self.rows.iter().find(|r| r.node_id == node).map_or(0, |r| r.balance_units)
    }
}

/// Pays the miners of the chain ending at `canonical`.
///
/// Uncles are the blocks referenced by canonical blocks; they earn
/// `uncle_reward_fraction * block_reward` under
/// [`RewardKind::CanonicalPlusUncles`] and nothing otherwise. `miners`
/// lists nodes that get a row even when they earned nothing.
pub fn distribute_rewards(
    store: &BlockStore,
    canonical: BlockId,
    scheme: &RewardScheme,
    miners: &[usize],
) -> Result<RewardDistribution, IncentiveError> {
    scheme.validate()?;
    let mut rows = BTreeMap::new();
    for &m in miners {
        entry(&mut rows, m);
    }

    let block_units = scheme.block_reward_units();
    let uncle_units = scheme.uncle_reward_units();
    let pay_uncles = scheme.kind == RewardKind::CanonicalPlusUncles;
    let (mut canonical_blocks, mut accepted_uncles, mut fee_units) = (0u64, 0u64, 0u64);

    for id in store.chain(canonical).into_iter().skip(1) {
        let block = store.get(id);
        let miner = block.miner.expect("mined block has a miner");
        let fees = if scheme.fees_to_miner { block.fees } else { 0 };
        let row = entry(&mut rows, miner);
        row.canonical_blocks += 1;
        row.balance_units += block_units + fees;
        canonical_blocks += 1;
        fee_units += fees;
        if pay_uncles {
            for &u in &block.uncles {
                let uncle_miner = store.get(u).miner.expect("uncle has a miner");
                let row = entry(&mut rows, uncle_miner);
                row.uncle_blocks += 1;
                row.balance_units += uncle_units;
                accepted_uncles += 1;
            }
        }
    }

    let expected = canonical_blocks * block_units + accepted_uncles * uncle_units + fee_units;
    let mut rows: Vec<MinerReward> = rows.into_values().collect();
    let paid: u64 = rows.iter().map(|r| r.balance_units).sum();
    if paid != expected {
        return Err(IncentiveError::NotConserved { paid, expected });
    }
    for r in &mut rows {
        r.balance = r.balance_units as f64 / FEE_UNITS_PER_COIN;
    }
    Ok(RewardDistribution { rows, canonical_blocks, accepted_uncles, fee_units, total_units: paid })
}

fn entry(rows: &mut BTreeMap<usize, MinerReward>, node_id: usize) -> &mut MinerReward {
    rows.entry(node_id).or_insert(MinerReward {
        node_id,
        canonical_blocks: 0,
        uncle_blocks: 0,
        balance: 0.0,
        balance_units: 0,
    })
}
