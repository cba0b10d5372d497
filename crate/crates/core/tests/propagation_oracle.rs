//! Shortest-delay propagation against exhaustive path enumeration.

use chainsim::network::{propagate, shortest_delays, DelayModel, Propagation, Topology};
use chainsim::rng::{stream, Stream};
use proptest::prelude::*;
use rand::Rng;

/// Minimum over all simple paths from `sender`, by depth-first enumeration.
fn brute_force(n: usize, weight: &[Vec<Option<f64>>], sender: usize) -> Vec<f64> {
    fn walk(u: usize, acc: f64, weight: &[Vec<Option<f64>>], seen: &mut Vec<bool>, best: &mut Vec<f64>) {
        best[u] = best[u].min(acc);
        for (v, w) in weight[u].iter().enumerate() {
            if let (Some(w), false) = (w, seen[v]) {
                seen[v] = true;
                walk(v, acc + w, weight, seen, best);
                seen[v] = false;
            }
        }
    }
    let mut best = vec![f64::INFINITY; n];
    let mut seen = vec![false; n];
    seen[sender] = true;
    walk(sender, 0.0, weight, &mut seen, &mut best);
    best
}

fn random_graph(seed: u64) -> (usize, Vec<(usize, usize, f64)>) {
    let mut rng = stream(seed, Stream::Topology);
    let n = rng.random_range(1..=10);
    let p: f64 = rng.random_range(0.2..0.9);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < p {
                edges.push((i, j, rng.random_range(0.001..1.0)));
            }
        }
    }
    (n, edges)
}

fn close(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| (x.is_infinite() && y.is_infinite()) || (x - y).abs() < 1e-9)
}

#[test]
fn asymmetric_edge_delays_match_exhaustive_search() {
    for seed in 0..100 {
        let (n, edges) = random_graph(seed);
        let topology = Topology::from_links(n, &edges, 1.0);
        let mut rng = stream(seed, Stream::Wire);
        let mut weight = vec![vec![None; n]; n];
        for &(u, v, _) in &edges {
            weight[u][v] = Some(rng.random_range(0.0..2.0));
            weight[v][u] = Some(rng.random_range(0.0..2.0));
        }
        for sender in 0..n {
            let fast = shortest_delays(topology.all_links(), sender, |u, link| {
                weight[u][link.to as usize].expect("link exists")
            });
            let slow = brute_force(n, &weight, sender);
            assert!(close(&fast, &slow), "seed {seed} sender {sender}: {fast:?} vs {slow:?}");
        }
    }
}

#[test]
fn cbr_propagation_matches_exhaustive_search() {
    let model = DelayModel::new(Propagation::Cbr, 0.05, 1.0).unwrap();
    for seed in 0..100 {
        let (n, mut edges) = random_graph(seed);
        // a spanning path keeps every graph connected
        for i in 1..n {
            if !edges.iter().any(|&(u, v, _)| (u, v) == (i - 1, i)) {
                edges.push((i - 1, i, 0.5));
            }
        }
        let topology = Topology::from_links(n, &edges, 1.0);
        let mut weight = vec![vec![None; n]; n];
        for &(u, v, lat) in &edges {
            weight[u][v] = Some(model.cbr_delay(lat, 1.22));
            weight[v][u] = weight[u][v];
        }
        let sender = seed as usize % n;
        let fast = propagate(sender, 1.22, &topology, &model, &mut stream(seed, Stream::Wire)).unwrap();
        assert!(close(&fast, &brute_force(n, &weight, sender)), "seed {seed}");
    }
}

proptest! {
    #[test]
    fn ethwire_delays_are_sane(seed in 0u64..10_000, size in 0.0..0.2f64) {
        let (n, mut edges) = random_graph(seed);
        for i in 1..n {
            edges.push((i - 1, i, 0.05));
        }
        edges.sort_by_key(|e| (e.0, e.1));
        edges.dedup_by(|a, b| (a.0, a.1) == (b.0, b.1));
        let topology = Topology::from_links(n, &edges, 2.0);
        let model = DelayModel::new(Propagation::Ethwire, 2.68, 1.0).unwrap();
        let sender = seed as usize % n;
        let d = propagate(sender, size, &topology, &model, &mut stream(seed, Stream::Wire)).unwrap();
        prop_assert_eq!(d[sender], 0.0);
        let floor = topology.min_latency().unwrap_or(0.0) + size * (0.5 + 2.68);
        for (v, &x) in d.iter().enumerate() {
            prop_assert!(x.is_finite() && x >= 0.0);
            if v != sender {
                prop_assert!(x >= floor - 1e-12);
            }
        }
    }
}
