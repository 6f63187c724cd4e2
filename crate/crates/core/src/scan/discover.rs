use std::collections::{BTreeMap, VecDeque};

use super::{CallSite, Classification, SourceKind, TPath};
use crate::graph::{NodeId, NodeKind, PdgNode, Tsdg};
use crate::lang::{ContractIR, BALANCE_OF};

pub struct Discovery {
    pub tpaths: Vec<TPath>,
    pub dropped_by_depth: usize,
}

/// A data source: the entry of a function taking arguments, or a compound
/// assignment.
pub fn is_arg_or_comp(node: &PdgNode) -> bool {
    match node.kind {
        NodeKind::Entry => !node.defs.is_empty(),
        NodeKind::CompoundAssign => true,
        _ => false,
    }
}

/// Collapse the chain's functions into a call sequence (repeated adjacent
/// functions are one call).
pub(crate) fn call_runs(tsdg: &Tsdg, chain: &[NodeId]) -> Vec<(usize, Vec<NodeId>)> {
    let mut runs: Vec<(usize, Vec<NodeId>)> = Vec::new();
    for id in chain {
        let f = id.func as usize;
        match runs.last_mut() {
            Some((g, nodes)) if *g == f => nodes.push(*id),
            _ => runs.push((f, vec![*id])),
        }
    }
    debug_assert!(runs.iter().all(|(f, _)| *f < tsdg.functions.len()));
    runs
}

pub(crate) fn renamed_params(contract: &ContractIR, func: usize, call: usize) -> Vec<String> {
    contract.functions[func].params.iter().map(|p| format!("{}_a{call}", p.name)).collect()
}

/// Backward spanning tree from every balanceOf return; one tPath per tree
/// path that ends at a data source outside balanceOf and spans at most
/// `depth` calls.
pub fn discover_tpaths(tsdg: &Tsdg, contract: &ContractIR, depth: usize) -> Discovery {
    let bal = contract.function_index(BALANCE_OF).map(|i| i as u32);
    let mut tpaths = Vec::new();
    let mut dropped = 0;
    for &root in &tsdg.roots {
        let mut parent: BTreeMap<NodeId, NodeId> = BTreeMap::new();
        let mut order = Vec::new();
        let mut queue = VecDeque::from([root]);
        parent.insert(root, root);
        while let Some(n) = queue.pop_front() {
            order.push(n);
            for (src, _) in tsdg.preds(n) {
                if !parent.contains_key(src) {
                    parent.insert(*src, n);
                    queue.push_back(*src);
                }
            }
        }
        for n in order {
            let Some(node) = tsdg.node(n) else { continue };
            if n == root || Some(n.func) == bal || !is_arg_or_comp(node) {
                continue;
            }
            let mut chain = vec![n];
            let mut cur = n;
            while cur != root {
                cur = parent[&cur];
                chain.push(cur);
            }
            let runs = call_runs(tsdg, &chain);
            if runs.len() > depth {
                dropped += 1;
                continue;
            }
            let call_sequence = runs
                .iter()
                .enumerate()
                .map(|(i, (f, _))| CallSite { function: tsdg.functions[*f].clone(), args: renamed_params(contract, *f, i) })
                .collect();
            let source_kind =
                if node.kind == NodeKind::Entry { SourceKind::Argument } else { SourceKind::CompoundAssignment };
            tpaths.push(TPath {
                root,
                source: n,
                source_kind,
                node_chain: chain,
                call_sequence,
                constraints: vec![],
                classification: Classification::Candidate,
                reason: None,
                witness: None,
            });
        }
    }
    Discovery { tpaths, dropped_by_depth: dropped }
}
