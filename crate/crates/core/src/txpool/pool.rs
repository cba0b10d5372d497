use rand::Rng;
use serde::{Deserialize, Serialize};

use super::TxPoolError;
use crate::rng::exponential;

/// Fees are accounted in integer micro-units so reward totals add up exactly.
pub const FEE_UNITS_PER_COIN: f64 = 1_000_000.0;

/// A scalar distribution used for transaction sizes and fees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ValueDist {
    Constant { value: f64 },
    Uniform { min: f64, max: f64 },
    Exponential { mean: f64 },
}

impl ValueDist {
    pub fn mean(&self) -> f64 {
        match *self {
            ValueDist::Constant { value } => value,
            ValueDist::Uniform { min, max } => 0.5 * (min + max),
            ValueDist::Exponential { mean } => mean,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        match *self {
            ValueDist::Constant { value } if !(value >= 0.0 && value.is_finite()) => {
                Err(format!("constant value must be finite and >= 0, got {value}"))
            }
            ValueDist::Uniform { min, max } if !(min >= 0.0 && max >= min && max.is_finite()) => {
                Err(format!("uniform bounds must satisfy 0 <= min <= max, got [{min}, {max}]"))
            }
            ValueDist::Exponential { mean } if !(mean > 0.0 && mean.is_finite()) => {
                Err(format!("exponential mean must be > 0, got {mean}"))
            }
            _ => Ok(()),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            ValueDist::Constant { value } => value,
            ValueDist::Uniform { min, max } => min + (max - min) * rng.random::<f64>(),
            ValueDist::Exponential { mean } => exponential(rng, 1.0 / mean),
        }
    }
}

/// One pre-generated transaction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transaction {
    pub index: usize,
    pub timestamp: f64,
    pub size_mb: f64,
    /// Fee in micro-units of the reward currency.
    pub fee: u64,
}

/// All transactions of a run, stored once and shared by every node.
///
/// Indices are dense and sorted by generation time.
#[derive(Debug, Clone, Default)]
pub struct GlobalPool {
    timestamps: Vec<f64>,
    sizes: Vec<f64>,
    fees: Vec<u64>,
}

impl GlobalPool {
    /// Poisson arrivals with the given rate on `[0, sim_time]`.
    pub fn pregenerate<R: Rng + ?Sized>(
        rate_per_second: f64,
        sim_time: f64,
        size_dist: &ValueDist,
        fee_dist: &ValueDist,
        rng: &mut R,
    ) -> Result<Self, TxPoolError> {
        if !(rate_per_second > 0.0 && rate_per_second.is_finite()) {
            return Err(TxPoolError::InvalidRate(rate_per_second));
        }
        let expected = (rate_per_second * sim_time.max(0.0)) as usize;
        let mut pool = GlobalPool {
            timestamps: Vec::with_capacity(expected + expected / 16),
            sizes: Vec::with_capacity(expected + expected / 16),
            fees: Vec::with_capacity(expected + expected / 16),
        };
        let mut t = 0.0;
        loop {
            t += exponential(rng, rate_per_second);
            if t > sim_time {
                break;
            }
            pool.timestamps.push(t);
            pool.sizes.push(size_dist.sample(rng));
            pool.fees.push((fee_dist.sample(rng) * FEE_UNITS_PER_COIN).round() as u64);
        }
        Ok(pool)
    }

    /// Builds a pool from explicit transactions (sorted by timestamp).
    pub fn from_transactions(txs: &[(f64, f64, u64)]) -> Self {
        debug_assert!(txs.windows(2).all(|w| w[0].0 <= w[1].0));
        GlobalPool {
            timestamps: txs.iter().map(|t| t.0).collect(),
            sizes: txs.iter().map(|t| t.1).collect(),
            fees: txs.iter().map(|t| t.2).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn get(&self, index: usize) -> Transaction {
        Transaction { index, timestamp: self.timestamps[index], size_mb: self.sizes[index], fee: self.fees[index] }
    }

    #[inline]
    pub fn size_mb(&self, index: usize) -> f64 {
        self.sizes[index]
    }

    #[inline]
    pub fn fee(&self, index: usize) -> u64 {
        self.fees[index]
    }

    pub fn timestamps(&self) -> &[f64] {
        &self.timestamps
    }

    /// Index of the last transaction generated at or before `clock`.
    pub fn last_at_or_before(&self, clock: f64) -> Option<usize> {
        self.timestamps.partition_point(|&t| t <= clock).checked_sub(1)
    }

    pub fn iter(&self) -> impl Iterator<Item = Transaction> + '_ {
        (0..self.len()).map(|i| self.get(i))
    }

    /// CSV trace `index,timestamp,sizeMB,fee` (fee in coins).
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "index,timestamp,sizeMB,fee")?;
        for tx in self.iter() {
            writeln!(out, "{},{},{},{}", tx.index, tx.timestamp, tx.size_mb, tx.fee as f64 / FEE_UNITS_PER_COIN)?;
        }
        Ok(())
    }
}
