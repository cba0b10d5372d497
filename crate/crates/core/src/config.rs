//! Simulation configuration, presets and validation.
//!
//! A configuration document is a JSON object. An optional `preset` key
//! selects the base values; every other key overrides one field of the
//! preset. Nested objects merge key by key unless the override switches a
//! tagged variant (`kind`).

use std::path::Path;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::consensus::Protocol;
use crate::incentive::RewardScheme;
use crate::ledger::ForkRule;
use crate::network::{Propagation, RegionTable};
use crate::txpool::ValueDist;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {reason}")]
    Io { path: String, reason: String },
    #[error("config is not valid JSON: {0}")]
    Syntax(String),
    #[error("config must be a JSON object")]
    NotAnObject,
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("unknown preset `{0}` (expected bitcoin or ethereum)")]
    UnknownPreset(String),
    #[error("invalid value for `{field}`: {message}")]
    Invalid { field: String, message: String },
}

impl ConfigError {
    fn invalid(field: &str, message: impl Into<String>) -> Self {
        ConfigError::Invalid { field: field.to_owned(), message: message.into() }
    }

    /// The config field the error refers to, when there is one.
    pub fn field(&self) -> Option<&str> {
        match self {
            ConfigError::UnknownKey(k) => Some(k),
            ConfigError::UnknownPreset(_) => Some("preset"),
            ConfigError::Invalid { field, .. } => Some(field),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Bitcoin,
    Ethereum,
}

impl FromStr for Preset {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bitcoin" => Ok(Preset::Bitcoin),
            "ethereum" => Ok(Preset::Ethereum),
            other => Err(ConfigError::UnknownPreset(other.to_owned())),
        }
    }
}

/// How hash power or stake is spread over nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightDist {
    /// Every node gets weight 1.
    Equal,
    /// Each share goes to a distinct node chosen at random.
    Pools { shares: Vec<f64> },
    /// One weight per node, by node id.
    PerNode { weights: Vec<f64> },
}

impl WeightDist {
    fn validate(&self, field: &str, nodes: usize) -> Result<(), ConfigError> {
        let values = match self {
            WeightDist::Equal => return Ok(()),
            WeightDist::Pools { shares } => {
                if shares.len() > nodes {
                    return Err(ConfigError::invalid(
                        field,
                        format!("{} pools do not fit on {nodes} nodes", shares.len()),
                    ));
                }
                shares
            }
            WeightDist::PerNode { weights } => {
                if weights.len() != nodes {
                    return Err(ConfigError::invalid(
                        field,
                        format!("expected {nodes} per-node weights, got {}", weights.len()),
                    ));
                }
                weights
            }
        };
        if let Some(bad) = values.iter().find(|w| !(**w >= 0.0 && w.is_finite())) {
            return Err(ConfigError::invalid(field, format!("weights must be finite and >= 0, got {bad}")));
        }
        Ok(())
    }

    /// Per-node weights for `nodes` nodes.
    pub fn assign<R: Rng + ?Sized>(&self, nodes: usize, rng: &mut R) -> Vec<f64> {
        match self {
            WeightDist::Equal => vec![1.0; nodes],
            WeightDist::Pools { shares } => {
                let mut out = vec![0.0; nodes];
                for (node, &share) in sample(rng, nodes, shares.len()).iter().zip(shares) {
                    out[node] = share;
                }
                out
            }
            WeightDist::PerNode { weights } => weights.clone(),
        }
    }
}

/// A fully resolved simulation configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub preset: Option<Preset>,
    pub nodes: usize,
    /// Simulated duration in seconds.
    pub sim_time: f64,
    /// Expected network-wide time between blocks, in seconds.
    pub block_interval: f64,
    pub consensus: Protocol,
    pub finalization: ForkRule,
    pub propagation: Propagation,
    /// Mean per-receiver delay in `fixed` propagation mode.
    pub fixed_delay_mean: f64,
    pub avg_degree: f64,
    pub beta: f64,
    /// Block processing delay in seconds per MB.
    pub processing_delay_per_mb: f64,
    /// Block size the derived transaction rate aims for.
    pub target_block_size_mb: f64,
    pub max_block_size_mb: f64,
    /// Transactions per second; derived from the target block size when null.
    pub tx_rate: Option<f64>,
    pub tx_size_mb: ValueDist,
    /// Fee per transaction, in coins.
    pub tx_fee: ValueDist,
    /// `builtin:bitcoin`, `builtin:ethereum` or a path to a region table.
    pub region_data_path: String,
    pub hash_power_dist: WeightDist,
    pub stake_dist: WeightDist,
    /// Coin age every stake already has at time 0, in seconds.
    pub pos_initial_age: f64,
    /// Most uncles a block may reference.
    pub max_uncle_refs: usize,
    /// Adds request waits to the Ethereum hash-announce path.
    pub protocol_waits: bool,
    pub reward_scheme: RewardScheme,
    pub seed: u64,
}

/// Placeholder mining pool shares; edit the config to use measured ones.
const BITCOIN_POOLS: [f64; 13] = [0.18, 0.15, 0.13, 0.11, 0.09, 0.08, 0.07, 0.05, 0.04, 0.03, 0.03, 0.02, 0.02];
const ETHEREUM_POOLS: [f64; 15] =
    [0.25, 0.22, 0.12, 0.08, 0.06, 0.05, 0.04, 0.03, 0.03, 0.02, 0.02, 0.02, 0.02, 0.02, 0.02];

impl Preset {
    pub fn config(self) -> SimulationConfig {
        match self {
            Preset::Bitcoin => SimulationConfig {
                preset: Some(Preset::Bitcoin),
                nodes: 11_000,
                sim_time: 600_000.0,
                block_interval: 600.0,
                consensus: Protocol::Pow,
                finalization: ForkRule::Longest,
                propagation: Propagation::Cbr,
                fixed_delay_mean: 0.7,
                avg_degree: 12.0,
                beta: 1.0,
                processing_delay_per_mb: 0.05,
                target_block_size_mb: 1.22,
                max_block_size_mb: 4.0,
                tx_rate: None,
                tx_size_mb: ValueDist::Uniform { min: 0.00025, max: 0.00075 },
                tx_fee: ValueDist::Exponential { mean: 0.0001 },
                region_data_path: "builtin:bitcoin".to_owned(),
                hash_power_dist: WeightDist::Pools { shares: BITCOIN_POOLS.to_vec() },
                stake_dist: WeightDist::Pools { shares: BITCOIN_POOLS.to_vec() },
                pos_initial_age: 86_400.0,
                max_uncle_refs: 0,
                protocol_waits: false,
                reward_scheme: RewardScheme::canonical_only(6.25),
                seed: 1,
            },
            Preset::Ethereum => SimulationConfig {
                preset: Some(Preset::Ethereum),
                nodes: 8_223,
                sim_time: 86_400.0,
                block_interval: 13.05,
                consensus: Protocol::Pow,
                finalization: ForkRule::Ghost,
                propagation: Propagation::Ethwire,
                fixed_delay_mean: 0.7,
                avg_degree: 19.747,
                beta: 0.24,
                processing_delay_per_mb: 2.68,
                target_block_size_mb: 0.023,
                max_block_size_mb: 0.12,
                tx_rate: None,
                tx_size_mb: ValueDist::Uniform { min: 0.000075, max: 0.000225 },
                tx_fee: ValueDist::Exponential { mean: 0.0005 },
                region_data_path: "builtin:ethereum".to_owned(),
                hash_power_dist: WeightDist::Pools { shares: ETHEREUM_POOLS.to_vec() },
                stake_dist: WeightDist::Pools { shares: ETHEREUM_POOLS.to_vec() },
                pos_initial_age: 86_400.0,
                max_uncle_refs: 2,
                protocol_waits: false,
                reward_scheme: RewardScheme::canonical_plus_uncles(2.0),
                seed: 1,
            },
        }
    }
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Preset::Bitcoin.config()
    }
}

/// Short names accepted for config keys on the command line.
pub fn canonical_key(key: &str) -> &str {
    match key {
        "degree" | "d" => "avg_degree",
        "nodes" | "n" => "nodes",
        "interval" => "block_interval",
        "block_size" | "block_size_mb" => "target_block_size_mb",
        "pd" => "processing_delay_per_mb",
        other => other,
    }
}

fn merge(slot: &mut Value, value: Value) {
    match (slot, value) {
        (Value::Object(base), Value::Object(over)) => {
            let switches_variant = over.get("kind").is_some_and(|k| Some(k) != base.get("kind"));
            if switches_variant {
                *base = over;
            } else {
                for (k, v) in over {
                    match base.get_mut(&k) {
                        Some(inner) => merge(inner, v),
                        None => {
                            base.insert(k, v);
                        }
                    }
                }
            }
        }
        (slot, value) => *slot = value,
    }
}

impl SimulationConfig {
    /// Expands the preset, applies overrides and validates.
    pub fn resolve(mut doc: Map<String, Value>) -> Result<Self, ConfigError> {
        let preset = match doc.remove("preset") {
            None | Some(Value::Null) => None,
            Some(Value::String(s)) => Some(s.parse::<Preset>()?),
            Some(other) => return Err(ConfigError::invalid("preset", format!("expected a string, got {other}"))),
        };
        let mut base = preset.unwrap_or(Preset::Bitcoin).config();
        base.preset = preset;
        let Value::Object(mut merged) = serde_json::to_value(&base).expect("config serializes") else {
            unreachable!("config serializes to an object")
        };
        for (key, value) in doc {
            let key = canonical_key(&key).to_owned();
            match merged.get_mut(&key) {
                Some(slot) => merge(slot, value),
                None => return Err(ConfigError::UnknownKey(key)),
            }
        }
        let config: SimulationConfig = serde_path_to_error::deserialize(Value::Object(merged)).map_err(|e| {
            let field = e.path().to_string();
            ConfigError::Invalid { field, message: e.into_inner().to_string() }
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_json_str(text: &str) -> Result<Self, ConfigError> {
        match serde_json::from_str::<Value>(text).map_err(|e| ConfigError::Syntax(e.to_string()))? {
            Value::Object(doc) => Self::resolve(doc),
            _ => Err(ConfigError::NotAnObject),
        }
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        Self::from_json_str(&read_document(path)?)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Transactions per second, explicit or derived from the target block
    /// size as `target / (mean tx size * block interval)`.
    pub fn effective_tx_rate(&self) -> f64 {
        self.tx_rate.unwrap_or_else(|| self.target_block_size_mb / (self.tx_size_mb.mean() * self.block_interval))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        fn positive(field: &str, v: f64) -> Result<(), ConfigError> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(ConfigError::invalid(field, format!("must be positive and finite, got {v}")))
            }
        }
        fn non_negative(field: &str, v: f64) -> Result<(), ConfigError> {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(ConfigError::invalid(field, format!("must be finite and >= 0, got {v}")))
            }
        }
        if self.nodes < 2 {
            return Err(ConfigError::invalid("nodes", format!("need at least 2 nodes, got {}", self.nodes)));
        }
        positive("sim_time", self.sim_time)?;
        positive("block_interval", self.block_interval)?;
        positive("fixed_delay_mean", self.fixed_delay_mean)?;
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(ConfigError::invalid("beta", format!("must be in [0, 1], got {}", self.beta)));
        }
        if self.propagation != Propagation::Fixed && !(self.avg_degree > 0.0 && self.avg_degree < self.nodes as f64) {
            return Err(ConfigError::invalid(
                "avg_degree",
                format!("must be in (0, {}), got {}", self.nodes, self.avg_degree),
            ));
        }
        non_negative("processing_delay_per_mb", self.processing_delay_per_mb)?;
        positive("target_block_size_mb", self.target_block_size_mb)?;
        positive("max_block_size_mb", self.max_block_size_mb)?;
        if let Some(rate) = self.tx_rate {
            positive("tx_rate", rate)?;
        }
        self.tx_size_mb.validate().map_err(|m| ConfigError::invalid("tx_size_mb", m))?;
        if self.tx_size_mb.mean() <= 0.0 {
            return Err(ConfigError::invalid("tx_size_mb", "mean transaction size must be positive"));
        }
        self.tx_fee.validate().map_err(|m| ConfigError::invalid("tx_fee", m))?;
        self.hash_power_dist.validate("hash_power_dist", self.nodes)?;
        self.stake_dist.validate("stake_dist", self.nodes)?;
        non_negative("pos_initial_age", self.pos_initial_age)?;
        self.reward_scheme.validate().map_err(|e| ConfigError::invalid("reward_scheme", e.to_string()))?;
        RegionTable::load(&self.region_data_path)
            .map_err(|e| ConfigError::invalid("region_data_path", e.to_string()))?;
        Ok(())
    }
}

/// Reads a config file as text, naming the path on failure.
pub fn read_document(path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path)
        .map_err(|e| ConfigError::Io { path: path.display().to_string(), reason: e.to_string() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};

    fn parse(text: &str) -> Result<SimulationConfig, ConfigError> {
        SimulationConfig::from_json_str(text)
    }

    #[test]
    fn ethereum_preset() {
        let c = parse(r#"{"preset": "ethereum"}"#).unwrap();
        assert_eq!(c.block_interval, 13.05);
        assert_eq!((c.nodes, c.sim_time), (8223, 86_400.0));
        assert_eq!((c.avg_degree, c.beta), (19.747, 0.24));
        assert_eq!(c.propagation, Propagation::Ethwire);
    }

    #[test]
    fn bitcoin_preset() {
        let c = parse(r#"{"preset": "bitcoin"}"#).unwrap();
        assert_eq!((c.nodes, c.sim_time, c.block_interval), (11_000, 600_000.0, 600.0));
        assert_eq!((c.avg_degree, c.beta, c.propagation), (12.0, 1.0, Propagation::Cbr));
    }

    #[test]
    fn derived_tx_rate_hits_target_block_size() {
        let c = parse(r#"{"preset": "bitcoin"}"#).unwrap();
        let per_block = c.effective_tx_rate() * c.block_interval * c.tx_size_mb.mean();
        assert!((per_block - 1.22).abs() < 1e-12);
        let c = parse(r#"{"preset": "bitcoin", "tx_rate": 3.5}"#).unwrap();
        assert_eq!(c.effective_tx_rate(), 3.5);
    }

    #[test]
    fn override_beats_preset() {
        let c = parse(r#"{"preset": "bitcoin", "nodes": 1000}"#).unwrap();
        assert_eq!(c.nodes, 1000);
    }

    #[test]
    fn beta_out_of_range_names_field() {
        let err = parse(r#"{"preset": "ethereum", "beta": 1.5}"#).unwrap_err();
        assert_eq!(err.field(), Some("beta"));
    }

    #[test]
    fn unknown_key_is_rejected() {
        assert_eq!(parse(r#"{"blocksize": 1}"#).unwrap_err(), ConfigError::UnknownKey("blocksize".into()));
    }

    #[test]
    fn type_errors_name_nested_field() {
        let err = parse(r#"{"reward_scheme": {"block_reward": "lots"}}"#).unwrap_err();
        assert_eq!(err.field(), Some("reward_scheme.block_reward"));
        let err = parse(r#"{"finalization": "heaviest"}"#).unwrap_err();
        assert_eq!(err.field(), Some("finalization"));
    }

    #[test]
    fn missing_region_file_names_field() {
        let err = parse(r#"{"region_data_path": "/nonexistent/regions.json"}"#).unwrap_err();
        assert_eq!(err.field(), Some("region_data_path"));
    }

    #[test]
    fn nested_merge_and_variant_switch() {
        let c = parse(r#"{"preset": "ethereum", "reward_scheme": {"block_reward": 3.0}}"#).unwrap();
        assert_eq!(c.reward_scheme, RewardScheme { block_reward: 3.0, ..RewardScheme::canonical_plus_uncles(2.0) });
        let c = parse(r#"{"tx_size_mb": {"kind": "constant", "value": 0.001}}"#).unwrap();
        assert_eq!(c.tx_size_mb, ValueDist::Constant { value: 0.001 });
    }

    #[test]
    fn unknown_preset() {
        assert_eq!(parse(r#"{"preset": "dogecoin"}"#).unwrap_err().field(), Some("preset"));
    }

    #[test]
    fn round_trip() {
        for text in [r#"{"preset": "ethereum", "nodes": 500}"#, r#"{"seed": 9}"#] {
            let c = parse(text).unwrap();
            assert_eq!(parse(&c.to_json_string()).unwrap(), c);
        }
    }

    #[test]
    fn short_key_names() {
        let c = parse(r#"{"preset": "ethereum", "degree": 40}"#).unwrap();
        assert_eq!(c.avg_degree, 40.0);
    }

    #[test]
    fn pools_land_on_distinct_nodes() {
        let dist = WeightDist::Pools { shares: vec![0.5, 0.3, 0.2] };
        let w = dist.assign(10, &mut stream(3, Stream::Placement));
        assert_eq!(w.iter().filter(|&&x| x > 0.0).count(), 3);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let err = WeightDist::Pools { shares: vec![1.0; 3] }.validate("hash_power_dist", 2).unwrap_err();
        assert_eq!(err.field(), Some("hash_power_dist"));
    }
}
