use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{NetworkError, Topology};
use crate::rng::exponential;

/// Extra waits of the hash-announce path when protocol waits are enabled:
/// 400 ms before requesting the header and 100 ms before the body.
pub const ETH_ANNOUNCE_WAITS_S: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Propagation {
    /// Bitcoin compact block relay.
    Cbr,
    /// Ethereum wire protocol.
    Ethwire,
    /// Topology-free exponential delay per receiver.
    Fixed,
}

/// How a block's per-link (or per-receiver) delay is computed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayModel {
    pub kind: Propagation,
    /// Block processing delay per MB, in seconds.
    pub processing_delay_per_mb: f64,
    /// Mean of the exponential delay in [`Propagation::Fixed`] mode.
    pub fixed_mean: f64,
    /// Adds [`ETH_ANNOUNCE_WAITS_S`] to the Ethereum hash-announce path.
    pub protocol_waits: bool,
}

impl DelayModel {
    pub fn new(kind: Propagation, processing_delay_per_mb: f64, fixed_mean: f64) -> Result<Self, NetworkError> {
        let model = DelayModel { kind, processing_delay_per_mb, fixed_mean, protocol_waits: false };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<(), NetworkError> {
        if !(self.processing_delay_per_mb >= 0.0 && self.processing_delay_per_mb.is_finite()) {
            return Err(NetworkError::InvalidDelayModel(format!(
                "processing delay must be >= 0, got {}",
                self.processing_delay_per_mb
            )));
        }
        if self.kind == Propagation::Fixed && !(self.fixed_mean > 0.0 && self.fixed_mean.is_finite()) {
            return Err(NetworkError::InvalidDelayModel(format!(
                "fixed delay mean must be > 0, got {}",
                self.fixed_mean
            )));
        }
        Ok(())
    }

    /// Compact block relay: three latencies plus processing, `3L + pd * size`.
    pub fn cbr_delay(&self, latency: f64, size_mb: f64) -> f64 {
        3.0 * latency + self.processing_delay_per_mb * size_mb
    }

    /// Ethereum wire delay for a sender with `peers` connections.
    ///
    /// The receiver is one of the ~sqrt(M) peers that get the full block
    /// (`L + size * (1/B + pd)`) with probability `sqrt(M)/M`; otherwise the
    /// block is announced by hash and fetched in four more messages
    /// (`5L + size * (1/B + pd)`).
    pub fn ethwire_delay<R: Rng + ?Sized>(
        &self,
        latency: f64,
        peers: usize,
        upload_mb_s: f64,
        size_mb: f64,
        rng: &mut R,
    ) -> f64 {
        let transfer = size_mb * (1.0 / upload_mb_s + self.processing_delay_per_mb);
        let m = peers.max(1) as f64;
        // uniform on (0, M]
        let draw = m * (1.0 - rng.random::<f64>());
        if draw <= m.sqrt() {
            latency + transfer
        } else {
            let waits = if self.protocol_waits { ETH_ANNOUNCE_WAITS_S } else { 0.0 };
            5.0 * latency + transfer + waits
        }
    }

    /// Delay of one hop from `sender` over a link of the given latency.
    pub fn hop_delay<R: Rng + ?Sized>(
        &self,
        topology: &Topology,
        sender: usize,
        latency: f64,
        size_mb: f64,
        rng: &mut R,
    ) -> f64 {
        match self.kind {
            Propagation::Cbr => self.cbr_delay(latency, size_mb),
            Propagation::Ethwire => {
                self.ethwire_delay(latency, topology.degree(sender), topology.bandwidth(sender), size_mb, rng)
            }
            Propagation::Fixed => exponential(rng, 1.0 / self.fixed_mean),
        }
    }

    /// Delay over the edge `(u, v)`; fails if the nodes are not adjacent.
    pub fn link_delay<R: Rng + ?Sized>(
        &self,
        u: usize,
        v: usize,
        size_mb: f64,
        topology: &Topology,
        rng: &mut R,
    ) -> Result<f64, NetworkError> {
        let latency = topology.latency(u, v).ok_or(NetworkError::NotAdjacent { u, v })?;
        Ok(self.hop_delay(topology, u, latency, size_mb, rng))
    }
}
