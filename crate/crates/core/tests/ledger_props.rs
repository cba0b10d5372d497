use std::collections::BTreeSet;

use chainsim::ledger::{canonical_tip, BlockId, BlockStore, ChainUpdate, ForkRule, NodeChainState};
use chainsim::txpool::{GlobalPool, TxBitset};
use proptest::prelude::*;

const TXS: usize = 64;

/// Parent choice, uncle picks and transaction picks for each new block.
type Recipe = Vec<(usize, Vec<usize>, Vec<usize>)>;

fn recipe() -> impl Strategy<Value = (Recipe, Vec<usize>)> {
    let block =
        (any::<usize>(), proptest::collection::vec(any::<usize>(), 0..3), proptest::collection::vec(0..TXS, 0..6));
    proptest::collection::vec(block, 1..40).prop_flat_map(|blocks| {
        let order = Just((1..=blocks.len()).collect::<Vec<_>>()).prop_shuffle();
        (Just(blocks), order)
    })
}

/// Builds a block tree; each block takes transactions unused by its ancestors.
fn build(recipe: &Recipe) -> BlockStore {
    let mut store = BlockStore::new(TXS);
    for (parent, uncles, txs) in recipe {
        let parent = BlockId((parent % store.len()) as u32);
        let used: BTreeSet<usize> = store.chain(parent).iter().flat_map(|&b| store.get(b).txs.iter()).collect();
        let txs: Vec<usize> =
            txs.iter().copied().filter(|k| !used.contains(k)).collect::<BTreeSet<_>>().into_iter().collect();
        let mut picked: Vec<BlockId> = uncles
            .iter()
            .map(|u| BlockId((u % store.len()) as u32))
            .filter(|&u| u != BlockId::GENESIS && !store.is_ancestor(u, parent))
            .collect();
        picked.sort();
        picked.dedup();
        store.push(parent, 0, 0.0, TxBitset::from_indices(TXS, &txs), 0.0, 0, picked);
    }
    store
}

fn pool() -> GlobalPool {
    let txs: Vec<(f64, f64, u64)> = (0..TXS).map(|k| (k as f64, 0.001, 1)).collect();
    GlobalPool::from_transactions(&txs)
}

fn expected_mempool(store: &BlockStore, tip: BlockId) -> Vec<usize> {
    let used: BTreeSet<usize> = store.chain(tip).iter().flat_map(|&b| store.get(b).txs.iter()).collect();
    (0..TXS).filter(|k| !used.contains(k)).collect()
}

proptest! {
    #[test]
    fn fork_choice_invariants((recipe, order) in recipe(), ghost in any::<bool>()) {
        let rule = if ghost { ForkRule::Ghost } else { ForkRule::Longest };
        let store = build(&recipe);
        let pool = pool();
        let mut node = NodeChainState::new();
        let mut mempool = TxBitset::mempool(TXS);
        mempool.advance_window(f64::INFINITY, &pool);

        for &b in &order {
            let id = BlockId(b as u32);
            let before = node.tip();
            let update = node.receive(&store, id, rule);
            match &update {
                ChainUpdate::Appended(x) => {
                    prop_assert_eq!(store.get(*x).parent, Some(before));
                    mempool.remove_included(&store.get(*x).txs).unwrap();
                }
                ChainUpdate::Adopted { displaced, adopted } => {
                    prop_assert_eq!(adopted.first(), Some(&id));
                    for x in displaced {
                        mempool.release(&store.get(*x).txs).unwrap();
                    }
                    for x in adopted {
                        mempool.remove_included(&store.get(*x).txs).unwrap();
                    }
                }
                ChainUpdate::Known(_) => prop_assert!(store.is_ancestor(id, before)),
                ChainUpdate::Uncled(_) => prop_assert_eq!(node.tip(), before),
            }
            // chosen chain never gets lighter
            prop_assert!(rule.weight(store.get(node.tip())) >= rule.weight(store.get(before)));
            if rule == ForkRule::Longest {
                prop_assert!(store.get(node.tip()).depth >= store.get(before).depth);
            }
            let chain = node.main_chain(&store);
            for (depth, &b) in chain.iter().enumerate() {
                prop_assert_eq!(store.get(b).depth, depth as u64);
            }
            prop_assert_eq!(mempool.iter().collect::<Vec<_>>(), expected_mempool(&store, node.tip()));
        }
        // after every block has arrived the node sits on a heaviest tip
        let best = store.mined().iter().map(|b| rule.weight(b)).max().unwrap();
        prop_assert_eq!(rule.weight(store.get(node.tip())), best);
    }

    #[test]
    fn canonical_tip_is_heaviest_with_lowest_node_tiebreak(recipe in recipe().prop_map(|r| r.0), picks in proptest::collection::vec(any::<usize>(), 1..8)) {
        let store = build(&recipe);
        let nodes: Vec<NodeChainState> = picks.iter().map(|p| NodeChainState::at(BlockId((p % store.len()) as u32))).collect();
        for rule in [ForkRule::Longest, ForkRule::Ghost] {
            let tip = canonical_tip(&nodes, &store, rule);
            let best = nodes.iter().map(|n| rule.weight(store.get(n.tip()))).max().unwrap();
            let first = nodes.iter().find(|n| rule.weight(store.get(n.tip())) == best).unwrap();
            prop_assert_eq!(tip, first.tip());
        }
    }

    #[test]
    fn divergence_splits_at_common_ancestor(recipe in recipe().prop_map(|r| r.0), a in any::<usize>(), b in any::<usize>()) {
        let store = build(&recipe);
        let (a, b) = (BlockId((a % store.len()) as u32), BlockId((b % store.len()) as u32));
        let (leaving, entering) = store.divergence(a, b);
        let ca: BTreeSet<BlockId> = store.chain(a).into_iter().collect();
        let cb: BTreeSet<BlockId> = store.chain(b).into_iter().collect();
        prop_assert_eq!(leaving.iter().copied().collect::<BTreeSet<_>>(), &ca - &cb);
        prop_assert_eq!(entering.iter().copied().collect::<BTreeSet<_>>(), &cb - &ca);
        // both lists run from the tip downwards
        prop_assert!(entering.windows(2).all(|w| store.get(w[0]).parent == Some(w[1])));
        prop_assert!(leaving.windows(2).all(|w| store.get(w[0]).parent == Some(w[1])));
    }
}
