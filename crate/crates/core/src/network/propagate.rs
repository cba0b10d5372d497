use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::Rng;

use super::{DelayModel, Link, NetworkError, Propagation, Topology};
use crate::rng::exponential;

#[derive(Debug, Clone, Copy)]
struct Frontier {
    delay: f64,
    node: u32,
}

impl PartialEq for Frontier {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Frontier {}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on (delay, node)
        other.delay.total_cmp(&self.delay).then_with(|| other.node.cmp(&self.node))
    }
}

/// Single-source shortest delays over `links`.
///
/// `edge_delay(u, link)` is called once for each directed link leaving a
/// settled node towards an unsettled one. Unreachable nodes get infinity.
pub fn shortest_delays<F>(links: &[Vec<Link>], sender: usize, mut edge_delay: F) -> Vec<f64>
where
    F: FnMut(usize, &Link) -> f64,
{
    let n = links.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut settled = vec![false; n];
    let mut heap = BinaryHeap::with_capacity(n);
    dist[sender] = 0.0;
    heap.push(Frontier { delay: 0.0, node: sender as u32 });
    while let Some(Frontier { delay, node }) = heap.pop() {
        let u = node as usize;
        if settled[u] {
            continue;
        }
        settled[u] = true;
        for link in &links[u] {
            let v = link.to as usize;
            if settled[v] {
                continue;
            }
            let candidate = delay + edge_delay(u, link);
            if candidate < dist[v] {
                dist[v] = candidate;
                heap.push(Frontier { delay: candidate, node: link.to });
            }
        }
    }
    dist
}

/// One independent exponential delay per receiver; the sender gets 0.
pub fn fixed_delays<R: Rng + ?Sized>(sender: usize, nodes: usize, mean: f64, rng: &mut R) -> Vec<f64> {
    (0..nodes).map(|v| if v == sender { 0.0 } else { exponential(rng, 1.0 / mean) }).collect()
}

/// Arrival delay of a block of `size_mb` from `sender` at every node.
///
/// Per-hop delays come from the delay model and are drawn once per directed
/// link for this block. Fails if some node cannot be reached.
pub fn propagate<R: Rng + ?Sized>(
    sender: usize,
    size_mb: f64,
    topology: &Topology,
    model: &DelayModel,
    rng: &mut R,
) -> Result<Vec<f64>, NetworkError> {
    if model.kind == Propagation::Fixed {
        return Ok(fixed_delays(sender, topology.len(), model.fixed_mean, rng));
    }
    let delays = shortest_delays(topology.all_links(), sender, |u, link| {
        model.hop_delay(topology, u, link.latency, size_mb, rng)
    });
    if let Some(node) = delays.iter().position(|d| d.is_infinite()) {
        return Err(NetworkError::Unreachable { sender, node });
    }
    Ok(delays)
}
