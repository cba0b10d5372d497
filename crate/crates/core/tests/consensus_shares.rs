use chainsim::engine::Simulation;
use chainsim::SimulationConfig;
use serde_json::{json, Value};

fn zero_delay_run(overrides: Value) -> chainsim::SimulationOutput {
    let mut doc = json!({
        "preset": "bitcoin",
        "block_interval": 10,
        "sim_time": 60000,
        "target_block_size_mb": 0.002,
        "max_block_size_mb": 0.01,
        "propagation": "fixed",
    });
    doc.as_object_mut().unwrap().extend(overrides.as_object().unwrap().clone());
    let cfg = SimulationConfig::from_json_str(&doc.to_string()).unwrap();
    Simulation::new(cfg).unwrap().with_zero_delays().run().unwrap()
}

#[test]
fn pow_block_shares_follow_hash_power() {
    let mut weights = vec![0.3, 0.2, 0.1, 0.08, 0.05];
    weights.extend(std::iter::repeat_n(0.27 / 27.0, 27));
    let n = weights.len();
    let out = zero_delay_run(json!({ "nodes": n, "hash_power_dist": { "kind": "per_node", "weights": weights } }));
    let total = out.report.canonical_length as f64;
    assert!(total >= 5000.0, "{total} blocks");
    for (i, &w) in weights.iter().enumerate().filter(|(_, &w)| w >= 0.05) {
        let mined = out.report.rewards.iter().find(|r| r.node_id == i).unwrap().canonical_blocks as f64;
        let share = mined / total;
        assert!((share - w).abs() / w < 0.1, "node {i}: share {share} vs {w}");
    }
}

#[test]
fn equal_miners_earn_equal_rewards() {
    let n = 10;
    let out = zero_delay_run(
        json!({ "nodes": n, "hash_power_dist": { "kind": "equal" }, "stake_dist": { "kind": "equal" } }),
    );
    let total: f64 = out.report.rewards.iter().map(|r| r.balance).sum();
    assert_eq!(out.report.rewards.len(), n);
    for r in &out.report.rewards {
        let share = r.balance / total;
        assert!((share - 0.1).abs() / 0.1 < 0.1, "node {}: {share}", r.node_id);
    }
}

#[test]
fn mean_inter_block_time_matches_interval() {
    for consensus in ["pow", "pos"] {
        let out = zero_delay_run(json!({
            "nodes": 20,
            "consensus": consensus,
            "hash_power_dist": { "kind": "equal" },
            "stake_dist": { "kind": "equal" },
        }));
        let blocks = out.report.total_blocks as f64;
        assert!(blocks >= 5000.0);
        let mean = 60000.0 / blocks;
        assert!((mean - 10.0).abs() / 10.0 < 0.05, "{consensus}: mean interval {mean}");
    }
}
