//! Block propagation delay accumulator and nearest-rank percentiles.

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
#[error("arrival delay of block {block} at node {node} must be finite and >= 0, got {delay}")]
pub struct NegativeDelay {
    pub block: u32,
    pub node: usize,
    pub delay: f64,
}

/// Multiset of (block, receiver) arrival delays, measured from the block's
/// generation time.
#[derive(Debug, Clone, Default)]
pub struct DelayMetrics {
    delays: Vec<f64>,
}

impl DelayMetrics {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(capacity: usize) -> Self {
        DelayMetrics { delays: Vec::with_capacity(capacity) }
    }

    pub fn record_arrival(&mut self, block: u32, node: usize, delay: f64) -> Result<(), NegativeDelay> {
        if !(delay >= 0.0 && delay.is_finite()) {
            return Err(NegativeDelay { block, node, delay });
        }
        self.delays.push(delay);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.delays.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delays.is_empty()
    }

    pub fn delays(&self) -> &[f64] {
        &self.delays
    }

    /// Nearest-rank percentile; `None` when nothing was recorded.
    pub fn percentile(&self, percent: u32) -> Option<f64> {
        let mut scratch = self.delays.clone();
        percentile_in_place(&mut scratch, percent)
    }

    /// The 50th and 90th percentiles, sharing one working copy.
    pub fn p50_p90(&self) -> (Option<f64>, Option<f64>) {
        let mut scratch = self.delays.clone();
        let p50 = percentile_in_place(&mut scratch, 50);
        let p90 = percentile_in_place(&mut scratch, 90);
        (p50, p90)
    }
}

/// 1-based nearest rank `floor(percent * n / 100) + 1`, capped at `n`.
pub fn nearest_rank(percent: u32, n: usize) -> usize {
    assert!(percent <= 100, "percent must be in [0, 100]");
    (percent as usize * n / 100 + 1).min(n)
}

/// Nearest-rank percentile of `values`, which gets reordered.
pub fn percentile_in_place(values: &mut [f64], percent: u32) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let k = nearest_rank(percent, values.len()) - 1;
    let (_, v, _) = values.select_nth_unstable_by(k, f64::total_cmp);
    Some(*v)
}
