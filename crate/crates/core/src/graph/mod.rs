//! Token system dependency graph: per-function dependency graphs joined by
//! state-variable def-use edges.

mod pdg;
mod tsdg;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lang::{CompoundOp, Expr, LValue};

pub use pdg::{flatten, intra_pdg};
pub use tsdg::{backward_origins, construct_tsdg, GraphOptions};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("contract `{0}` does not define balanceOf")]
    MissingBalanceOf(String),
    #[error("balanceOf in `{0}` has no return statement")]
    BalanceOfNotReturning(String),
}

/// Node identity: function index within the contract and position in that
/// function's flattened statement list. Local 0 is always the entry node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId {
    pub func: u32,
    pub local: u32,
}

impl NodeId {
    pub fn new(func: usize, local: usize) -> NodeId {
        NodeId { func: func as u32, local: local as u32 }
    }

    pub fn is_entry(self) -> bool {
        self.local == 0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.func, self.local)
    }
}

impl FromStr for NodeId {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, b) = s.split_once(':').ok_or_else(|| format!("bad node id `{s}`"))?;
        let func = a.parse().map_err(|_| format!("bad node id `{s}`"))?;
        let local = b.parse().map_err(|_| format!("bad node id `{s}`"))?;
        Ok(NodeId { func, local })
    }
}

impl Serialize for NodeId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for NodeId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeKind {
    Entry,
    Return,
    Assign,
    CompoundAssign,
    Branch,
    Decl,
}

impl NodeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::Entry => "entry",
            NodeKind::Return => "return",
            NodeKind::Assign => "assign",
            NodeKind::CompoundAssign => "compound_assign",
            NodeKind::Branch => "branch",
            NodeKind::Decl => "decl",
        }
    }
}

/// The statement a node stands for, with loop bodies already unrolled.
#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Entry { params: Vec<String> },
    Assign { lhs: LValue, expr: Expr },
    Compound { lhs: LValue, op: CompoundOp, expr: Expr },
    Decl { name: String, expr: Expr },
    Branch { cond: Expr },
    Return(Option<Expr>),
}

/// One branch decision on the way from the function entry to a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Guard {
    pub branch: NodeId,
    pub taken: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdgNode {
    pub id: NodeId,
    pub function: String,
    /// Dotted path into the function body: `2.t.0` is the first statement of
    /// the then-branch of statement 2, `1.w0.0` the first statement of the
    /// first unrolled iteration of the loop at statement 1.
    pub stmt_ref: String,
    pub kind: NodeKind,
    pub payload: Payload,
    /// Names this node writes (parameters for the entry node).
    pub defs: Vec<String>,
    /// Names this node reads.
    pub uses: Vec<String>,
    /// State variables read here whose value may still be the one held at
    /// function entry.
    pub entry_reads: Vec<String>,
    /// Branch decisions required to reach this node from the entry.
    pub guards: Vec<Guard>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EdgeKind {
    Data,
    Control,
    InterprocDefUse,
}

impl EdgeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EdgeKind::Data => "data",
            EdgeKind::Control => "control",
            EdgeKind::InterprocDefUse => "interproc_def_use",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PdgEdge {
    pub src: NodeId,
    pub dst: NodeId,
    pub kind: EdgeKind,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VarSites {
    pub defs: BTreeSet<NodeId>,
    pub uses: BTreeSet<NodeId>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TsdgStats {
    pub intra_pdg_calls: usize,
    pub dequeues: usize,
}

#[derive(Debug, Clone)]
pub struct Tsdg {
    pub contract: String,
    /// Function names by index.
    pub functions: Vec<String>,
    /// Sorted by id.
    pub nodes: Vec<PdgNode>,
    /// Sorted and free of duplicates.
    pub edges: Vec<PdgEdge>,
    pub roots: Vec<NodeId>,
    pub var_index: BTreeMap<String, VarSites>,
    pub stats: TsdgStats,
    preds: BTreeMap<NodeId, Vec<(NodeId, EdgeKind)>>,
}

impl Tsdg {
    pub(crate) fn assemble(
        contract: String,
        functions: Vec<String>,
        mut nodes: Vec<PdgNode>,
        edges: BTreeSet<PdgEdge>,
        roots: Vec<NodeId>,
        var_index: BTreeMap<String, VarSites>,
        stats: TsdgStats,
    ) -> Tsdg {
        nodes.sort_by_key(|n| n.id);
        let edges: Vec<PdgEdge> = edges.into_iter().collect();
        let mut preds: BTreeMap<NodeId, Vec<(NodeId, EdgeKind)>> = BTreeMap::new();
        for e in &edges {
            preds.entry(e.dst).or_default().push((e.src, e.kind));
        }
        Tsdg { contract, functions, nodes, edges, roots, var_index, stats, preds }
    }

    pub fn node(&self, id: NodeId) -> Option<&PdgNode> {
        self.nodes.binary_search_by_key(&id, |n| n.id).ok().map(|i| &self.nodes[i])
    }

    /// Incoming edges of `id` as (source, kind), ordered by source id.
    pub fn preds(&self, id: NodeId) -> &[(NodeId, EdgeKind)] {
        self.preds.get(&id).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn has_edge(&self, src: NodeId, dst: NodeId) -> bool {
        self.preds(dst).iter().any(|(s, _)| *s == src)
    }

    pub fn edges_of_kind(&self, kind: EdgeKind) -> impl Iterator<Item = &PdgEdge> {
        self.edges.iter().filter(move |e| e.kind == kind)
    }

    /// Line-oriented export: `N <id> <func> <stmt> <kind>` per node, then
    /// `E <src> <dst> <kind>` per edge, both sorted.
    pub fn export(&self) -> String {
        let mut out = String::new();
        for n in &self.nodes {
            out.push_str(&format!("N {} {} {} {}\n", n.id, n.function, n.stmt_ref, n.kind.as_str()));
        }
        for e in &self.edges {
            out.push_str(&format!("E {} {} {}\n", e.src, e.dst, e.kind.as_str()));
        }
        out
    }
}
