//! Blocks, per-node chain state and fork choice.
//!
//! Blocks live in one append-only [`BlockStore`]. A node's main chain is the
//! ancestry of its tip, so adopting another chain only walks back to the
//! common ancestor.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::txpool::TxBitset;

/// Uncles must be at most this many generations older than the block that
/// references them.
pub const UNCLE_DEPTH_WINDOW: u64 = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BlockId(pub u32);

impl BlockId {
    pub const GENESIS: BlockId = BlockId(0);

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone)]
pub struct Block {
    pub id: BlockId,
    pub parent: Option<BlockId>,
    pub miner: Option<usize>,
    pub depth: u64,
    pub gen_timestamp: f64,
    pub size_mb: f64,
    /// Total fee of the included transactions, in micro-units.
    pub fees: u64,
    pub txs: TxBitset,
    /// Uncle blocks referenced by this block.
    pub uncles: Vec<BlockId>,
    /// Uncle references accumulated along the chain ending at this block.
    pub uncle_count: u64,
}

/// Linear processing delay: `pd_per_mb * size_mb`.
pub fn processing_delay(size_mb: f64, pd_per_mb: f64) -> f64 {
    pd_per_mb * size_mb
}

#[derive(Debug, Clone)]
pub struct BlockStore {
    blocks: Vec<Block>,
}

impl BlockStore {
    /// A store holding only the genesis block; `tx_len` is the length of
    /// every block's transaction bitset.
    pub fn new(tx_len: usize) -> Self {
        let genesis = Block {
            id: BlockId::GENESIS,
            parent: None,
            miner: None,
            depth: 0,
            gen_timestamp: 0.0,
            size_mb: 0.0,
            fees: 0,
            txs: TxBitset::block(tx_len),
            uncles: Vec::new(),
            uncle_count: 0,
        };
        BlockStore { blocks: vec![genesis] }
    }

    pub fn get(&self, id: BlockId) -> &Block {
        &self.blocks[id.index()]
    }

    /// Number of blocks including genesis.
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Mined blocks (genesis excluded).
    pub fn mined(&self) -> &[Block] {
        &self.blocks[1..]
    }

    #[allow(clippy::too_many_arguments)]
    pub fn push(
        &mut self,
        parent: BlockId,
        miner: usize,
        gen_timestamp: f64,
        txs: TxBitset,
        size_mb: f64,
        fees: u64,
        uncles: Vec<BlockId>,
    ) -> BlockId {
        let id = BlockId(u32::try_from(self.blocks.len()).expect("block count exceeds u32"));
        let p = self.get(parent);
        let block = Block {
            id,
            parent: Some(parent),
            miner: Some(miner),
            depth: p.depth + 1,
            gen_timestamp,
            size_mb,
            fees,
            txs,
            uncle_count: p.uncle_count + uncles.len() as u64,
            uncles,
        };
        self.blocks.push(block);
        id
    }

    /// Ancestor of `id` at `depth` (which must not exceed `id`'s depth).
    pub fn ancestor_at(&self, mut id: BlockId, depth: u64) -> BlockId {
        debug_assert!(self.get(id).depth >= depth);
        while self.get(id).depth > depth {
            id = self.get(id).parent.expect("non-genesis block has a parent");
        }
        id
    }

    pub fn is_ancestor(&self, ancestor: BlockId, of: BlockId) -> bool {
        let d = self.get(ancestor).depth;
        self.get(of).depth >= d && self.ancestor_at(of, d) == ancestor
    }

    /// Blocks from genesis to `tip`, inclusive.
    pub fn chain(&self, tip: BlockId) -> Vec<BlockId> {
        let mut out = Vec::with_capacity(self.get(tip).depth as usize + 1);
        let mut cur = Some(tip);
        while let Some(id) = cur {
            out.push(id);
            cur = self.get(id).parent;
        }
        out.reverse();
        out
    }

    /// Blocks leaving and entering the main chain when switching from tip
    /// `from` to tip `to`, each listed from the tip downwards, excluding the
    /// common ancestor.
    pub fn divergence(&self, from: BlockId, to: BlockId) -> (Vec<BlockId>, Vec<BlockId>) {
        let (mut a, mut b) = (from, to);
        let (mut leaving, mut entering) = (Vec::new(), Vec::new());
        while self.get(a).depth > self.get(b).depth {
            leaving.push(a);
            a = self.get(a).parent.expect("deeper block has a parent");
        }
        while self.get(b).depth > self.get(a).depth {
            entering.push(b);
            b = self.get(b).parent.expect("deeper block has a parent");
        }
        while a != b {
            leaving.push(a);
            entering.push(b);
            a = self.get(a).parent.expect("distinct blocks at equal depth have parents");
            b = self.get(b).parent.expect("distinct blocks at equal depth have parents");
        }
        (leaving, entering)
    }

    /// CSV trace `blockId,parentId,minerId,depth,genTimestamp,sizeMB,canonical`.
    /// Genesis has parent and miner `-1`.
    pub fn write_csv<W: Write>(&self, canonical_tip: BlockId, mut out: W) -> std::io::Result<()> {
        let mut canonical = vec![false; self.blocks.len()];
        for id in self.chain(canonical_tip) {
            canonical[id.index()] = true;
        }
        writeln!(out, "blockId,parentId,minerId,depth,genTimestamp,sizeMB,canonical")?;
        for b in &self.blocks {
            let parent = b.parent.map_or(-1, |p| i64::from(p.0));
            let miner = b.miner.map_or(-1, |m| m as i64);
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                b.id.0,
                parent,
                miner,
                b.depth,
                b.gen_timestamp,
                b.size_mb,
                u8::from(canonical[b.id.index()])
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ForkRule {
    /// Longest chain by depth.
    Longest,
    /// Heaviest chain by depth plus referenced uncles.
    Ghost,
}

impl ForkRule {
    pub fn weight(self, block: &Block) -> u64 {
        match self {
            ForkRule::Longest => block.depth,
            ForkRule::Ghost => block.depth + block.uncle_count,
        }
    }
}

/// Outcome of receiving a block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ChainUpdate {
    /// The block extended the tip.
    Appended(BlockId),
    /// The node switched to the chain ending at the incoming block.
    Adopted { displaced: Vec<BlockId>, adopted: Vec<BlockId> },
    /// The block lost fork choice and went to the uncle chain.
    Uncled(BlockId),
    /// The block was already part of the main chain.
    Known(BlockId),
}

/// One node's view of the chain.
#[derive(Debug, Clone)]
pub struct NodeChainState {
    tip: BlockId,
    unclechain: Vec<BlockId>,
    uncle_candidates: Vec<BlockId>,
}

impl NodeChainState {
    pub fn new() -> Self {
        NodeChainState { tip: BlockId::GENESIS, unclechain: Vec::new(), uncle_candidates: Vec::new() }
    }

    /// A state whose main chain ends at `tip`.
    pub fn at(tip: BlockId) -> Self {
        NodeChainState { tip, ..NodeChainState::new() }
    }

    pub fn tip(&self) -> BlockId {
        self.tip
    }

    pub fn main_chain(&self, store: &BlockStore) -> Vec<BlockId> {
        store.chain(self.tip)
    }

    pub fn unclechain(&self) -> &[BlockId] {
        &self.unclechain
    }

    /// Uncle references carried by the main chain.
    pub fn uncle_count(&self, store: &BlockStore) -> u64 {
        store.get(self.tip).uncle_count
    }

    fn note_uncle(&mut self, id: BlockId) {
        self.unclechain.push(id);
        self.uncle_candidates.push(id);
    }

    /// Records a block this node mined on top of its own tip.
    pub fn append_own(&mut self, store: &BlockStore, block: BlockId) {
        assert_eq!(store.get(block).parent, Some(self.tip), "own block must extend the tip");
        self.tip = block;
    }

    /// Fork choice for an incoming block.
    pub fn receive(&mut self, store: &BlockStore, incoming: BlockId, rule: ForkRule) -> ChainUpdate {
        let block = store.get(incoming);
        let tip = store.get(self.tip);
        if block.parent == Some(self.tip) {
            self.tip = incoming;
            return ChainUpdate::Appended(incoming);
        }
        if rule.weight(block) > rule.weight(tip) {
            let (displaced, adopted) = store.divergence(self.tip, incoming);
            for &id in &displaced {
                self.note_uncle(id);
            }
            self.tip = incoming;
            return ChainUpdate::Adopted { displaced, adopted };
        }
        if block.depth <= tip.depth && store.ancestor_at(self.tip, block.depth) == incoming {
            return ChainUpdate::Known(incoming);
        }
        self.note_uncle(incoming);
        ChainUpdate::Uncled(incoming)
    }

    /// Picks up to `max` uncles for a block built on the current tip.
    ///
    /// An uncle sits within [`UNCLE_DEPTH_WINDOW`] generations of the new
    /// block, is off the main chain, branches directly from it and has not
    /// been referenced by a recent ancestor.
    pub fn pick_uncles(&mut self, store: &BlockStore, max: usize) -> Vec<BlockId> {
        if max == 0 {
            return Vec::new();
        }
        let parent = self.tip;
        let new_depth = store.get(parent).depth + 1;
        let min_depth = new_depth.saturating_sub(UNCLE_DEPTH_WINDOW).max(1);
        self.uncle_candidates.retain(|&c| store.get(c).depth >= min_depth);
        self.uncle_candidates.sort_unstable();
        self.uncle_candidates.dedup();

        let mut referenced = Vec::new();
        let mut cur = Some(parent);
        for _ in 0..=UNCLE_DEPTH_WINDOW {
            let Some(id) = cur else { break };
            referenced.extend_from_slice(&store.get(id).uncles);
            cur = store.get(id).parent;
        }

        let mut picked = Vec::new();
        for &c in &self.uncle_candidates {
            if picked.len() == max {
                break;
            }
            let cb = store.get(c);
            if cb.depth >= new_depth || store.ancestor_at(parent, cb.depth) == c || referenced.contains(&c) {
                continue;
            }
            let Some(cp) = cb.parent else { continue };
            if store.ancestor_at(parent, cb.depth - 1) != cp {
                continue;
            }
            picked.push(c);
        }
        picked
    }
}

impl Default for NodeChainState {
    fn default() -> Self {
        Self::new()
    }
}

/// Longest-chain fork choice.
pub fn apply_longest_rule(receiver: &mut NodeChainState, store: &BlockStore, incoming: BlockId) -> ChainUpdate {
    receiver.receive(store, incoming, ForkRule::Longest)
}

/// GHOST fork choice (depth plus referenced uncles).
pub fn apply_ghost_rule(receiver: &mut NodeChainState, store: &BlockStore, incoming: BlockId) -> ChainUpdate {
    receiver.receive(store, incoming, ForkRule::Ghost)
}

/// Tip of the canonical chain: the heaviest node tip under `rule`, ties to
/// the lowest node id.
pub fn canonical_tip(nodes: &[NodeChainState], store: &BlockStore, rule: ForkRule) -> BlockId {
    let mut best = BlockId::GENESIS;
    let mut best_weight = 0;
    for node in nodes {
        let w = rule.weight(store.get(node.tip));
        if w > best_weight {
            best_weight = w;
            best = node.tip;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainMetrics {
    pub total_blocks: usize,
    pub canonical_length: usize,
    /// Fraction of mined blocks off the canonical chain; `None` without blocks.
    pub stale_rate: Option<f64>,
    /// Mean size of canonical blocks; `None` without canonical blocks.
    pub avg_block_size_mb: Option<f64>,
}

pub fn chain_metrics(store: &BlockStore, canonical: BlockId) -> ChainMetrics {
    let total = store.len() - 1;
    let chain = store.chain(canonical);
    let canonical_length = chain.len() - 1;
    let stale_rate = (total > 0).then(|| (total - canonical_length) as f64 / total as f64);
    let avg_block_size_mb = (canonical_length > 0)
        .then(|| chain[1..].iter().map(|&id| store.get(id).size_mb).sum::<f64>() / canonical_length as f64);
    ChainMetrics { total_blocks: total, canonical_length, stale_rate, avg_block_size_mb }
}
