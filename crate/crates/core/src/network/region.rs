use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::NetworkError;
use crate::rng::open_unit;

const BUILTIN_BITCOIN: &str = include_str!("../../data/regions_bitcoin.json");
const BUILTIN_ETHEREUM: &str = include_str!("../../data/regions_ethereum.json");

/// Prefix selecting one of the bundled region tables instead of a file.
pub const BUILTIN_PREFIX: &str = "builtin:";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionProfile {
    pub name: String,
    pub node_share: f64,
    /// Upload bandwidth in MB/s.
    pub upload_bandwidth_mb_s: f64,
    /// Mean one-way latency in seconds to every region, by region index.
    pub latency_s: Vec<f64>,
}

/// Geographic node distribution with its latency matrix and bandwidths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionTable {
    #[serde(default)]
    pub description: String,
    /// Pareto shape of per-link latency around the matrix mean; `None`
    /// uses the mean as is.
    #[serde(default)]
    pub latency_jitter_shape: Option<f64>,
    pub regions: Vec<RegionProfile>,
}

impl RegionTable {
    /// Loads `builtin:bitcoin`, `builtin:ethereum` or a JSON file path.
    pub fn load(source: &str) -> Result<Self, NetworkError> {
        let text = match source.strip_prefix(BUILTIN_PREFIX) {
            Some("bitcoin") => BUILTIN_BITCOIN.to_owned(),
            Some("ethereum") => BUILTIN_ETHEREUM.to_owned(),
            Some(other) => return Err(NetworkError::UnknownBuiltin(other.to_owned())),
            None => std::fs::read_to_string(Path::new(source))
                .map_err(|e| NetworkError::RegionFile { path: source.to_owned(), reason: e.to_string() })?,
        };
        let table: RegionTable = serde_json::from_str(&text)
            .map_err(|e| NetworkError::RegionFile { path: source.to_owned(), reason: e.to_string() })?;
        table.validate()?;
        Ok(table)
    }

    pub fn single(name: &str, latency_s: f64, upload_bandwidth_mb_s: f64) -> Self {
        RegionTable {
            description: String::new(),
            latency_jitter_shape: None,
            regions: vec![RegionProfile {
                name: name.to_owned(),
                node_share: 1.0,
                upload_bandwidth_mb_s,
                latency_s: vec![latency_s],
            }],
        }
    }

    pub fn validate(&self) -> Result<(), NetworkError> {
        let n = self.regions.len();
        if n == 0 {
            return Err(NetworkError::EmptyRegions);
        }
        let bad = |reason: String| Err(NetworkError::InvalidRegions(reason));
        let total: f64 = self.regions.iter().map(|r| r.node_share).sum();
        if (total - 1.0).abs() > 1e-9 {
            return bad(format!("node shares sum to {total}, expected 1"));
        }
        for r in &self.regions {
            if r.node_share.is_nan() || r.node_share < 0.0 {
                return bad(format!("region {}: negative node share", r.name));
            }
            if !(r.upload_bandwidth_mb_s > 0.0 && r.upload_bandwidth_mb_s.is_finite()) {
                return bad(format!("region {}: bandwidth must be positive", r.name));
            }
            if r.latency_s.len() != n {
                return bad(format!("region {}: latency row has {} entries, expected {n}", r.name, r.latency_s.len()));
            }
            if r.latency_s.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
                return bad(format!("region {}: latencies must be positive", r.name));
            }
        }
        if let Some(shape) = self.latency_jitter_shape {
            if !(shape > 1.0 && shape.is_finite()) {
                return bad(format!("latency_jitter_shape must exceed 1, got {shape}"));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.regions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }

    pub fn mean_latency(&self, a: usize, b: usize) -> f64 {
        self.regions[a].latency_s[b]
    }

    /// Draws a latency for a link between regions `a` and `b`.
    ///
    /// With a jitter shape `k` the draw is Pareto with mean equal to the
    /// matrix entry; every draw is at least `mean * (k - 1) / k`.
    pub fn sample_latency<R: Rng + ?Sized>(&self, a: usize, b: usize, rng: &mut R) -> f64 {
        let mean = self.mean_latency(a, b);
        match self.latency_jitter_shape {
            Some(shape) => {
                let scale = mean * (shape - 1.0) / shape;
                scale * open_unit(rng).powf(-1.0 / shape)
            }
            None => mean,
        }
    }

    /// Assigns each of `n` nodes independently to a region by node share.
    pub fn assign<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<usize>, NetworkError> {
        if self.regions.is_empty() {
            return Err(NetworkError::EmptyRegions);
        }
        let last = self.regions.len() - 1;
        Ok((0..n)
            .map(|_| {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (i, r) in self.regions.iter().enumerate() {
                    acc += r.node_share;
                    if u < acc {
                        return i;
                    }
                }
                last
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};

    fn two(shares: [f64; 2]) -> RegionTable {
        RegionTable {
            description: String::new(),
            latency_jitter_shape: Some(5.0),
            regions: vec![
                RegionProfile {
                    name: "a".into(),
                    node_share: shares[0],
                    upload_bandwidth_mb_s: 1.0,
                    latency_s: vec![0.01, 0.1],
                },
                RegionProfile {
                    name: "b".into(),
                    node_share: shares[1],
                    upload_bandwidth_mb_s: 1.0,
                    latency_s: vec![0.1, 0.04],
                },
            ],
        }
    }

    #[test]
    fn builtins_are_valid() {
        for name in ["builtin:bitcoin", "builtin:ethereum"] {
            let t = RegionTable::load(name).unwrap();
            assert_eq!(t.len(), 6);
        }
        assert!(matches!(RegionTable::load("builtin:dogecoin"), Err(NetworkError::UnknownBuiltin(_))));
    }

    #[test]
    fn missing_file_names_path() {
        let err = RegionTable::load("/nonexistent/regions.json").unwrap_err();
        assert!(err.to_string().contains("/nonexistent/regions.json"));
    }

    #[test]
    fn rejects_bad_shares() {
        assert!(two([0.5, 0.6]).validate().is_err());
        let empty = RegionTable { description: String::new(), latency_jitter_shape: None, regions: vec![] };
        assert!(matches!(empty.validate(), Err(NetworkError::EmptyRegions)));
        assert!(empty.assign(3, &mut stream(1, Stream::Regions)).is_err());
    }

    #[test]
    fn single_region_takes_everyone() {
        let t = RegionTable::single("x", 0.05, 1.0);
        let regions = t.assign(100, &mut stream(1, Stream::Regions)).unwrap();
        assert!(regions.iter().all(|&r| r == 0));
    }

    #[test]
    fn even_split_concentrates() {
        let t = two([0.5, 0.5]);
        let regions = t.assign(10_000, &mut stream(2, Stream::Regions)).unwrap();
        let a = regions.iter().filter(|&&r| r == 0).count() as f64;
        assert!((a - 5000.0).abs() <= 0.02 * 5000.0, "count {a}");
    }

    #[test]
    fn jittered_latency_keeps_mean() {
        let t = two([0.5, 0.5]);
        let mut rng = stream(3, Stream::Latency);
        let n = 200_000;
        let mean = (0..n).map(|_| t.sample_latency(0, 1, &mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 0.1).abs() < 0.002, "mean {mean}");
    }
}
