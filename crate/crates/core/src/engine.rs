//! Discrete-event core.
//!
//! Events sit in a min-heap keyed by timestamp with FIFO order among equal
//! timestamps. The loop stops at the first event past the simulated
//! horizon; such events stay in the pool.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use thiserror::Error;

use crate::config::SimulationConfig;
use crate::consensus::{
    pos_next_generation, pow_next_generation, total_weight, ConsensusParams, MinerWeight, Protocol,
};
use crate::incentive::distribute_rewards;
use crate::ledger::{canonical_tip, chain_metrics, BlockId, BlockStore, ChainUpdate, ForkRule, NodeChainState};
use crate::metrics::{DelayMetrics, NegativeDelay};
use crate::network::{
    fixed_delays, generate_network, propagate, DelayModel, Propagation, RegionTable, Topology, TopologyParams,
};
use crate::report::{peak_memory_mb, SimulationReport};
use crate::rng::{stream, SimRng, Stream};
use crate::txpool::{GlobalPool, TxBitset};
use crate::SimError;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum EngineError {
    #[error("event at t={timestamp} scheduled before the clock (t={now})")]
    PastEvent { timestamp: f64, now: f64 },
    #[error("event timestamp must be finite, got {0}")]
    InvalidTimestamp(f64),
    #[error(transparent)]
    Delay(#[from] NegativeDelay),
    #[error("{blocks} blocks on {nodes} nodes scheduled {scheduled} receive events")]
    Fanout { blocks: u64, nodes: usize, scheduled: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    /// `epoch` lets a PoS re-draw invalidate earlier generation events.
    GenerateBlock {
        epoch: u64,
    },
    ReceiveBlock {
        block: BlockId,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub timestamp: f64,
    pub node: usize,
    pub kind: EventKind,
}

impl Event {
    pub fn generate(timestamp: f64, node: usize) -> Self {
        Event { timestamp, node, kind: EventKind::GenerateBlock { epoch: 0 } }
    }

    pub fn receive(timestamp: f64, node: usize, block: BlockId) -> Self {
        Event { timestamp, node, kind: EventKind::ReceiveBlock { block } }
    }
}

#[derive(Debug, Clone, Copy)]
struct Queued {
    event: Event,
    seq: u64,
}

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Queued {}

impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Queued {
    fn cmp(&self, other: &Self) -> Ordering {
        // reversed for a min-heap on (timestamp, insertion order)
        other.event.timestamp.total_cmp(&self.event.timestamp).then_with(|| other.seq.cmp(&self.seq))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Clock {
    pub now: f64,
    pub sim_time: f64,
}

#[derive(Debug, Clone)]
pub struct EventPool {
    heap: BinaryHeap<Queued>,
    seq: u64,
    clock: Clock,
}

impl EventPool {
    pub fn new(sim_time: f64) -> Self {
        EventPool { heap: BinaryHeap::new(), seq: 0, clock: Clock { now: 0.0, sim_time } }
    }

    pub fn clock(&self) -> Clock {
        self.clock
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn schedule(&mut self, event: Event) -> Result<(), EngineError> {
        if !event.timestamp.is_finite() {
            return Err(EngineError::InvalidTimestamp(event.timestamp));
        }
        if event.timestamp < self.clock.now {
            return Err(EngineError::PastEvent { timestamp: event.timestamp, now: self.clock.now });
        }
        self.heap.push(Queued { event, seq: self.seq });
        self.seq += 1;
        Ok(())
    }

    /// Pops the earliest event if it is due by the horizon and advances the
    /// clock to it.
    pub fn pop_due(&mut self) -> Option<Event> {
        if self.heap.peek()?.event.timestamp > self.clock.sim_time {
            return None;
        }
        let Queued { event, .. } = self.heap.pop()?;
        self.clock.now = event.timestamp;
        Some(event)
    }
}

/// Event counters of one run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunStats {
    pub generate_dispatched: u64,
    pub receive_scheduled: u64,
    pub receive_dispatched: u64,
    /// PoS generation events superseded by a later re-draw.
    pub superseded: u64,
}

/// Everything a run produces.
#[derive(Debug)]
pub struct SimulationOutput {
    pub config: SimulationConfig,
    pub report: SimulationReport,
    pub store: BlockStore,
    pub canonical: BlockId,
    pub topology: Option<Topology>,
    pub pool: GlobalPool,
    pub metrics: DelayMetrics,
    pub stats: RunStats,
}

/// A prepared simulation.
pub struct Simulation {
    config: SimulationConfig,
    nodes: usize,
    topology: Option<Topology>,
    delay: DelayModel,
    consensus: ConsensusParams,
    rule: ForkRule,
    weights: Vec<MinerWeight>,
    miners: Vec<usize>,
    total_hash: f64,
    pool: GlobalPool,
    store: BlockStore,
    chains: Vec<NodeChainState>,
    mempools: Vec<TxBitset>,
    events: EventPool,
    metrics: DelayMetrics,
    consensus_rng: SimRng,
    wire_rng: SimRng,
    epoch: u64,
    zero_delay: bool,
    stats: RunStats,
}

impl Simulation {
    /// Builds topology, miners and transactions from a validated config.
    pub fn new(config: SimulationConfig) -> Result<Self, SimError> {
        config.validate()?;
        let n = config.nodes;
        let seed = config.seed;
        let regions = RegionTable::load(&config.region_data_path)?;
        let topology = if config.propagation == Propagation::Fixed {
            None
        } else {
            let params = TopologyParams::new(n, config.beta, config.avg_degree)?;
            let graph = generate_network(&params, &mut stream(seed, Stream::Topology))?;
            let region_of = regions.assign(n, &mut stream(seed, Stream::Regions))?;
            Some(Topology::new(&graph, &regions, region_of, &mut stream(seed, Stream::Latency)))
        };
        let mut delay = DelayModel::new(config.propagation, config.processing_delay_per_mb, config.fixed_delay_mean)?;
        delay.protocol_waits = config.protocol_waits;

        let mut placement = stream(seed, Stream::Placement);
        let hash = config.hash_power_dist.assign(n, &mut placement);
        let stake = config.stake_dist.assign(n, &mut placement);
        let weights: Vec<MinerWeight> = hash
            .iter()
            .zip(&stake)
            .map(|(&h, &s)| MinerWeight { hash_power: h, stake: s, stake_acquired_at: -config.pos_initial_age })
            .collect();
        let consensus = ConsensusParams::new(config.consensus, config.block_interval)?;
        let miners: Vec<usize> = (0..n).filter(|&i| weights[i].weight(config.consensus, 0.0) > 0.0).collect();
        let total_hash = total_weight(&weights, Protocol::Pow, 0.0);

        let pool = GlobalPool::pregenerate(
            config.effective_tx_rate(),
            config.sim_time,
            &config.tx_size_mb,
            &config.tx_fee,
            &mut stream(seed, Stream::Transactions),
        )?;
        let store = BlockStore::new(pool.len());
        let mempools = vec![TxBitset::mempool(pool.len()); n];

        Ok(Simulation {
            nodes: n,
            topology,
            delay,
            consensus,
            rule: config.finalization,
            weights,
            miners,
            total_hash,
            store,
            chains: vec![NodeChainState::new(); n],
            mempools,
            events: EventPool::new(config.sim_time),
            metrics: DelayMetrics::with_capacity(expected_arrivals(&config)),
            consensus_rng: stream(seed, Stream::Consensus),
            wire_rng: stream(seed, Stream::Wire),
            epoch: 0,
            zero_delay: false,
            stats: RunStats::default(),
            pool,
            config,
        })
    }

    /// Test harness: every block reaches every node the instant it is mined.
    #[must_use]
    pub fn with_zero_delays(mut self) -> Self {
        self.zero_delay = true;
        self
    }

    pub fn topology(&self) -> Option<&Topology> {
        self.topology.as_ref()
    }

    /// Nodes with a positive proposal weight at time 0.
    pub fn miners(&self) -> &[usize] {
        &self.miners
    }

    pub fn run(self) -> Result<SimulationOutput, SimError> {
        self.run_observed(|_| {})
    }

    /// Runs to the horizon, calling `observe` on every dispatched event.
    pub fn run_observed<F: FnMut(&Event)>(mut self, mut observe: F) -> Result<SimulationOutput, SimError> {
        let started = Instant::now();
        self.schedule_initial()?;
        while let Some(event) = self.events.pop_due() {
            match event.kind {
                EventKind::GenerateBlock { epoch } => {
                    if self.config.consensus == Protocol::Pos && epoch != self.epoch {
                        self.stats.superseded += 1;
                        continue;
                    }
                    observe(&event);
                    self.generate(event.node, event.timestamp)?;
                }
                EventKind::ReceiveBlock { block } => {
                    observe(&event);
                    self.receive(event.node, block)?;
                }
            }
        }
        self.finish(started)
    }

    fn schedule_initial(&mut self) -> Result<(), SimError> {
        if self.miners.is_empty() {
            return Ok(());
        }
        match self.config.consensus {
            Protocol::Pow => {
                for i in 0..self.miners.len() {
                    self.schedule_pow(self.miners[i], 0.0)?;
                }
                Ok(())
            }
            Protocol::Pos => self.redraw_pos(0.0),
        }
    }

    fn schedule_pow(&mut self, miner: usize, now: f64) -> Result<(), SimError> {
        let next =
            pow_next_generation(&self.weights[miner], self.total_hash, &self.consensus, now, &mut self.consensus_rng)?;
        if let Some(t) = next {
            self.events.schedule(Event::generate(t, miner))?;
        }
        Ok(())
    }

    /// Draws a fresh generation time for every staker and invalidates the
    /// previous draws.
    fn redraw_pos(&mut self, now: f64) -> Result<(), SimError> {
        self.epoch += 1;
        let aggregate = total_weight(&self.weights, Protocol::Pos, now);
        if aggregate <= 0.0 {
            return Ok(());
        }
        for k in 0..self.miners.len() {
            let m = self.miners[k];
            let next = pos_next_generation(&self.weights[m], aggregate, &self.consensus, now, &mut self.consensus_rng)?;
            if let Some(t) = next {
                self.events.schedule(Event {
                    timestamp: t,
                    node: m,
                    kind: EventKind::GenerateBlock { epoch: self.epoch },
                })?;
            }
        }
        Ok(())
    }

    fn generate(&mut self, miner: usize, now: f64) -> Result<(), SimError> {
        self.stats.generate_dispatched += 1;
        let mempool = &mut self.mempools[miner];
        mempool.advance_window(now, &self.pool);
        let uncles = self.chains[miner].pick_uncles(&self.store, self.config.max_uncle_refs);
        let txs = mempool.select(self.config.max_block_size_mb, &self.pool);
        let (size, fees) = txs.iter().fold((0.0, 0u64), |(s, f), k| (s + self.pool.size_mb(k), f + self.pool.fee(k)));
        mempool.remove_included(&txs)?;
        let parent = self.chains[miner].tip();
        let block = self.store.push(parent, miner, now, txs, size, fees, uncles);
        self.chains[miner].append_own(&self.store, block);

        let delays = if self.zero_delay {
            vec![0.0; self.nodes]
        } else {
            match &self.topology {
                Some(topology) => propagate(miner, size, topology, &self.delay, &mut self.wire_rng)?,
                None => fixed_delays(miner, self.nodes, self.config.fixed_delay_mean, &mut self.wire_rng),
            }
        };
        for (v, &d) in delays.iter().enumerate() {
            if v == miner {
                continue;
            }
            self.metrics.record_arrival(block.0, v, d).map_err(EngineError::from)?;
            self.events.schedule(Event::receive(now + d, v, block))?;
            self.stats.receive_scheduled += 1;
        }

        match self.config.consensus {
            Protocol::Pow => self.schedule_pow(miner, now),
            Protocol::Pos => {
                self.weights[miner] = self.weights[miner].reset_stake_age(now);
                self.redraw_pos(now)
            }
        }
    }

    fn receive(&mut self, node: usize, block: BlockId) -> Result<(), SimError> {
        self.stats.receive_dispatched += 1;
        let mempool = &mut self.mempools[node];
        match self.chains[node].receive(&self.store, block, self.rule) {
            ChainUpdate::Appended(b) => mempool.remove_included(&self.store.get(b).txs)?,
            ChainUpdate::Adopted { displaced, adopted } => {
                for b in displaced {
                    mempool.release(&self.store.get(b).txs)?;
                }
                for b in adopted {
                    mempool.remove_included(&self.store.get(b).txs)?;
                }
            }
            ChainUpdate::Uncled(_) | ChainUpdate::Known(_) => {}
        }
        Ok(())
    }

    fn finish(self, started: Instant) -> Result<SimulationOutput, SimError> {
        let blocks = (self.store.len() - 1) as u64;
        let expected = blocks * (self.nodes as u64 - 1);
        if self.stats.receive_scheduled != expected {
            return Err(
                EngineError::Fanout { blocks, nodes: self.nodes, scheduled: self.stats.receive_scheduled }.into()
            );
        }
        let canonical = canonical_tip(&self.chains, &self.store, self.rule);
        let chain = chain_metrics(&self.store, canonical);
        let rewards = distribute_rewards(&self.store, canonical, &self.config.reward_scheme, &self.miners)?;
        let (p50, p90) = self.metrics.p50_p90();
        let report = SimulationReport {
            bpd_p50_s: p50,
            bpd_p90_s: p90,
            avg_block_size_mb: chain.avg_block_size_mb,
            stale_uncle_rate: chain.stale_rate,
            total_blocks: chain.total_blocks,
            canonical_length: chain.canonical_length,
            rewards: rewards.rows,
            runtime_s: started.elapsed().as_secs_f64(),
            peak_memory_mb: peak_memory_mb(),
        };
        Ok(SimulationOutput {
            config: self.config,
            report,
            store: self.store,
            canonical,
            topology: self.topology,
            pool: self.pool,
            metrics: self.metrics,
            stats: self.stats,
        })
    }
}

fn expected_arrivals(config: &SimulationConfig) -> usize {
    let blocks = config.sim_time / config.block_interval;
    ((blocks * 1.1 + 16.0) * (config.nodes - 1) as f64).min(1e9) as usize
}

/// Runs one simulation.
pub fn run(config: SimulationConfig) -> Result<SimulationOutput, SimError> {
    Simulation::new(config)?.run()
}
