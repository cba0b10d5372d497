use chainsim::config::{ConfigError, Preset};
use chainsim::metrics::{nearest_rank, DelayMetrics};
use chainsim::SimulationConfig;
use proptest::prelude::*;
use serde_json::json;

proptest! {
    #[test]
    fn percentiles_match_full_sort(values in proptest::collection::vec(0.0..100.0f64, 1..500), percent in 1u32..=100) {
        let mut m = DelayMetrics::new();
        for (i, &v) in values.iter().enumerate() {
            m.record_arrival(0, i, v).unwrap();
        }
        let mut sorted = values.clone();
        sorted.sort_by(f64::total_cmp);
        // nearest rank: smallest value with at least percent% of samples at or below it, floor-plus-one
        let rank = ((percent as usize * sorted.len()) / 100 + 1).min(sorted.len());
        prop_assert_eq!(nearest_rank(percent, sorted.len()), rank);
        prop_assert_eq!(m.percentile(percent), Some(sorted[rank - 1]));
    }

    #[test]
    fn negative_delays_are_rejected(v in -1e6..-1e-12f64) {
        prop_assert!(DelayMetrics::new().record_arrival(3, 4, v).is_err());
    }

    #[test]
    fn config_round_trips(nodes in 16usize..5000, seed in any::<u64>(), beta in 0.0..=1.0f64, eth in any::<bool>()) {
        let preset = if eth { "ethereum" } else { "bitcoin" };
        let degree = 8.0;
        let doc = json!({ "preset": preset, "nodes": nodes, "seed": seed, "beta": beta, "avg_degree": degree });
        let cfg = SimulationConfig::from_json_str(&doc.to_string()).unwrap();
        prop_assert_eq!(cfg.nodes, nodes);
        prop_assert_eq!(cfg.seed, seed);
        let again = SimulationConfig::from_json_str(&cfg.to_json_string()).unwrap();
        prop_assert_eq!(again, cfg);
    }
}

#[test]
fn empty_metrics_have_no_percentiles() {
    assert_eq!(DelayMetrics::new().p50_p90(), (None, None));
}

#[test]
fn presets_are_valid() {
    for p in [Preset::Bitcoin, Preset::Ethereum] {
        let cfg = p.config();
        cfg.validate().unwrap();
        assert_eq!(SimulationConfig::from_json_str(&cfg.to_json_string()).unwrap(), cfg);
    }
}

#[test]
fn invalid_fields_are_named() {
    for (doc, field) in [
        (json!({ "preset": "ethereum", "beta": 1.5 }), "beta"),
        (json!({ "preset": "bitcoin", "nodes": 0 }), "nodes"),
        (json!({ "preset": "bitcoin", "block_interval": -1 }), "block_interval"),
        (json!({ "preset": "bitcoin", "consensus": "pox" }), "consensus"),
    ] {
        let err = SimulationConfig::from_json_str(&doc.to_string()).unwrap_err();
        assert_eq!(err.field(), Some(field), "{err}");
    }
    let err = SimulationConfig::from_json_str(r#"{"preset":"bitcoin","bogus":1}"#).unwrap_err();
    assert!(matches!(err, ConfigError::UnknownKey(_)), "{err}");
}
