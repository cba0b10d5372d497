//! Run report: JSON payload and a plain-text summary.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::incentive::MinerReward;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub bpd_p50_s: Option<f64>,
    pub bpd_p90_s: Option<f64>,
    pub avg_block_size_mb: Option<f64>,
    pub stale_uncle_rate: Option<f64>,
    pub total_blocks: usize,
    pub canonical_length: usize,
    pub rewards: Vec<MinerReward>,
    pub runtime_s: f64,
    #[serde(skip)]
    pub peak_memory_mb: Option<f64>,
}

impl SimulationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// The JSON report without wall-clock fields, for reproducibility checks.
    pub fn payload_json(&self) -> String {
        let mut value = serde_json::to_value(self).expect("report serializes");
        if let Some(map) = value.as_object_mut() {
            map.remove("runtime_s");
        }
        serde_json::to_string_pretty(&value).expect("report serializes")
    }

    pub fn summary(&self) -> String {
        fn opt(v: Option<f64>, scale: f64, unit: &str) -> String {
            v.map_or_else(|| "n/a".to_owned(), |x| format!("{:.4}{unit}", x * scale))
        }
        let mut s = String::new();
        let rows = [
            ("BPD p50", opt(self.bpd_p50_s, 1.0, " s")),
            ("BPD p90", opt(self.bpd_p90_s, 1.0, " s")),
            ("avg block size", opt(self.avg_block_size_mb, 1.0, " MB")),
            ("stale/uncle rate", opt(self.stale_uncle_rate, 100.0, " %")),
            ("total blocks", self.total_blocks.to_string()),
            ("canonical length", self.canonical_length.to_string()),
            ("runtime", format!("{:.2} s", self.runtime_s)),
            ("peak memory", opt(self.peak_memory_mb, 1.0, " MB")),
        ];
        for (label, value) in rows {
            let _ = writeln!(s, "{label:<18} {value}");
        }
        if !self.rewards.is_empty() {
            let _ = writeln!(s, "\n{:>8} {:>10} {:>8} {:>14}", "node", "canonical", "uncles", "balance");
            for r in &self.rewards {
                let _ = writeln!(
                    s,
                    "{:>8} {:>10} {:>8} {:>14.6}",
                    r.node_id, r.canonical_blocks, r.uncle_blocks, r.balance
                );
            }
        }
        s
    }
}

/// Peak resident set size of this process, where the OS reports it.
pub fn peak_memory_mb() -> Option<f64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    let kb: f64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb / 1024.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SimulationReport {
        SimulationReport {
            bpd_p50_s: Some(0.5),
            bpd_p90_s: Some(1.7),
            avg_block_size_mb: None,
            stale_uncle_rate: Some(0.05),
            total_blocks: 20,
            canonical_length: 19,
            rewards: vec![MinerReward {
                node_id: 3,
                canonical_blocks: 19,
                uncle_blocks: 1,
                balance: 39.75,
                balance_units: 0,
            }],
            runtime_s: 1.25,
            peak_memory_mb: Some(12.0),
        }
    }

    #[test]
    fn json_keys_are_exact() {
        let v: serde_json::Value = serde_json::from_str(&sample().to_json()).unwrap();
        let mut keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
        keys.sort_unstable();
        assert_eq!(
            keys,
            [
                "avg_block_size_mb",
                "bpd_p50_s",
                "bpd_p90_s",
                "canonical_length",
                "rewards",
                "runtime_s",
                "stale_uncle_rate",
                "total_blocks"
            ]
        );
        assert!(v["avg_block_size_mb"].is_null());
        let row = &v["rewards"][0];
        assert_eq!(row["nodeId"], 3);
        assert_eq!(row["uncleBlocks"], 1);
    }

    #[test]
    fn payload_drops_runtime() {
        let mut a = sample();
        let b = sample();
        a.runtime_s = 99.0;
        assert_eq!(a.payload_json(), b.payload_json());
        assert!(!a.payload_json().contains("runtime_s"));
    }

    #[test]
    fn summary_mentions_metrics() {
        let s = sample().summary();
        assert!(s.contains("BPD p50") && s.contains("5.0000 %") && s.contains("n/a"));
    }
}
