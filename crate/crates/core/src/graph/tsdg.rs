use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use super::{intra_pdg, pdg::flatten, EdgeKind, GraphError, NodeId, NodeKind, PdgEdge, PdgNode, Tsdg, TsdgStats, VarSites};
use crate::lang::{ContractIR, BALANCE_OF};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GraphOptions {
    pub unroll: usize,
    /// Follow control edges when looking for data origins.
    pub track_control_origins: bool,
}

impl Default for GraphOptions {
    fn default() -> Self {
        GraphOptions { unroll: 1, track_control_origins: true }
    }
}

impl From<&crate::config::Config> for GraphOptions {
    fn from(c: &crate::config::Config) -> Self {
        GraphOptions { unroll: c.unroll, track_control_origins: c.track_control_origins }
    }
}

/// Backward walk inside one function from `start`, returning each state
/// variable read at function entry together with the node reading it.
pub fn backward_origins(
    nodes: &HashMap<NodeId, PdgNode>,
    preds: &HashMap<NodeId, Vec<(NodeId, EdgeKind)>>,
    start: NodeId,
    follow_control: bool,
) -> BTreeSet<(String, NodeId)> {
    let mut seen = BTreeSet::from([start]);
    let mut stack = vec![start];
    let mut out = BTreeSet::new();
    while let Some(n) = stack.pop() {
        if let Some(node) = nodes.get(&n) {
            for v in &node.entry_reads {
                out.insert((v.clone(), n));
            }
        }
        for (src, kind) in preds.get(&n).map(Vec::as_slice).unwrap_or(&[]) {
            let follow = match kind {
                EdgeKind::Data => true,
                EdgeKind::Control => follow_control,
                EdgeKind::InterprocDefUse => false,
            };
            if follow && seen.insert(*src) {
                stack.push(*src);
            }
        }
    }
    out
}

pub fn construct_tsdg(contract: &ContractIR, opts: GraphOptions) -> Result<Tsdg, GraphError> {
    let bal_idx =
        contract.function_index(BALANCE_OF).ok_or_else(|| GraphError::MissingBalanceOf(contract.name.clone()))?;
    let state: BTreeSet<&str> = contract.state_vars.iter().map(|v| v.name.as_str()).collect();

    // Syntactic definition sites of every state variable, across all functions.
    let mut def_sites: BTreeMap<String, Vec<NodeId>> = BTreeMap::new();
    for fi in 0..contract.functions.len() {
        for n in flatten(contract, fi, opts.unroll) {
            if matches!(n.kind, NodeKind::Assign | NodeKind::CompoundAssign) && state.contains(n.defs[0].as_str()) {
                def_sites.entry(n.defs[0].clone()).or_default().push(n.id);
            }
        }
    }

    let mut stats = TsdgStats::default();
    let mut nodes: HashMap<NodeId, PdgNode> = HashMap::new();
    let mut preds: HashMap<NodeId, Vec<(NodeId, EdgeKind)>> = HashMap::new();
    let mut edges: BTreeSet<PdgEdge> = BTreeSet::new();
    let mut visited: BTreeSet<usize> = BTreeSet::new();

    let mut load = |fi: usize,
                    visited: &mut BTreeSet<usize>,
                    nodes: &mut HashMap<NodeId, PdgNode>,
                    preds: &mut HashMap<NodeId, Vec<(NodeId, EdgeKind)>>,
                    edges: &mut BTreeSet<PdgEdge>| {
        if visited.insert(fi) {
            stats.intra_pdg_calls += 1;
            let (ns, es) = intra_pdg(contract, fi, opts.unroll);
            for n in ns {
                nodes.insert(n.id, n);
            }
            for e in es {
                preds.entry(e.dst).or_default().push((e.src, e.kind));
                edges.insert(e);
            }
        }
    };

    load(bal_idx, &mut visited, &mut nodes, &mut preds, &mut edges);
    let mut roots: Vec<NodeId> =
        nodes.values().filter(|n| n.id.func as usize == bal_idx && n.kind == NodeKind::Return).map(|n| n.id).collect();
    roots.sort();
    if roots.is_empty() {
        return Err(GraphError::BalanceOfNotReturning(contract.name.clone()));
    }

    let mut queue: VecDeque<NodeId> = roots.iter().copied().collect();
    let mut considered: BTreeSet<String> = BTreeSet::new();
    let mut interproc: BTreeSet<PdgEdge> = BTreeSet::new();
    while let Some(s) = queue.pop_front() {
        stats.dequeues += 1;
        load(s.func as usize, &mut visited, &mut nodes, &mut preds, &mut edges);
        for (v, use_node) in backward_origins(&nodes, &preds, s, opts.track_control_origins) {
            let defs = def_sites.get(&v).map(Vec::as_slice).unwrap_or(&[]);
            for d in defs {
                if *d != use_node {
                    interproc.insert(PdgEdge { src: *d, dst: use_node, kind: EdgeKind::InterprocDefUse });
                }
            }
            if considered.insert(v) {
                queue.extend(defs.iter().copied());
            }
        }
    }
    edges.extend(interproc);

    let mut var_index: BTreeMap<String, VarSites> = BTreeMap::new();
    for n in nodes.values() {
        for d in &n.defs {
            if state.contains(d.as_str()) && n.kind != NodeKind::Entry {
                var_index.entry(d.clone()).or_default().defs.insert(n.id);
            }
        }
        for u in &n.uses {
            if state.contains(u.as_str()) {
                var_index.entry(u.clone()).or_default().uses.insert(n.id);
            }
        }
    }

    let functions = contract.functions.iter().map(|f| f.name.clone()).collect();
    Ok(Tsdg::assemble(contract.name.clone(), functions, nodes.into_values().collect(), edges, roots, var_index, stats))
}
