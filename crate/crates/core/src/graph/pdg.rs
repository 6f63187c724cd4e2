use std::collections::{BTreeMap, BTreeSet};

use super::{EdgeKind, Guard, NodeId, NodeKind, Payload, PdgEdge, PdgNode};
use crate::lang::{ContractIR, Expr, LValue, Stmt};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Def {
    Initial,
    Node(NodeId),
}

type Env = BTreeMap<String, BTreeSet<Def>>;

fn merge(into: &mut Env, other: Env) {
    for (k, v) in other {
        into.entry(k).or_default().extend(v);
    }
}

struct Builder<'a> {
    func: usize,
    name: &'a str,
    unroll: usize,
    nodes: Vec<PdgNode>,
    edges: BTreeSet<PdgEdge>,
}

fn join_ref(prefix: &str, i: usize) -> String {
    if prefix.is_empty() {
        i.to_string()
    } else {
        format!("{prefix}.{i}")
    }
}

fn lvalue_uses(lhs: &LValue, out: &mut Vec<String>) {
    if let LValue::Index(_, key) = lhs {
        key.reads(out);
    }
}

impl Builder<'_> {
    #[allow(clippy::too_many_arguments)]
    fn add_node(
        &mut self,
        stmt_ref: String,
        kind: NodeKind,
        payload: Payload,
        defs: Vec<String>,
        mut uses: Vec<String>,
        guards: Vec<Guard>,
        control_parents: &[Guard],
        env: &Env,
    ) -> NodeId {
        let id = NodeId::new(self.func, self.nodes.len());
        uses.sort();
        uses.dedup();
        let mut entry_reads = Vec::new();
        for u in &uses {
            let Some(defs) = env.get(u) else { continue };
            for d in defs {
                match d {
                    Def::Initial => entry_reads.push(u.clone()),
                    Def::Node(src) => {
                        self.edges.insert(PdgEdge { src: *src, dst: id, kind: EdgeKind::Data });
                    }
                }
            }
        }
        for g in control_parents {
            self.edges.insert(PdgEdge { src: g.branch, dst: id, kind: EdgeKind::Control });
        }
        self.nodes.push(PdgNode {
            id,
            function: self.name.to_string(),
            stmt_ref,
            kind,
            payload,
            defs,
            uses,
            entry_reads,
            guards,
        });
        id
    }

    /// Walk one block. Returns the block-local guards in force at its end, or
    /// `None` when no path falls through.
    fn block(
        &mut self,
        body: &[Stmt],
        prefix: &str,
        outer: &[Guard],
        opening: Option<Guard>,
        env: &mut Env,
    ) -> Option<Vec<Guard>> {
        let mut local: Vec<Guard> = opening.into_iter().collect();
        for (i, s) in body.iter().enumerate() {
            let sref = join_ref(prefix, i);
            let full: Vec<Guard> = outer.iter().chain(local.iter()).copied().collect();
            match s {
                Stmt::Assign { lhs, expr } => {
                    let mut uses = expr.read_set();
                    lvalue_uses(lhs, &mut uses);
                    let payload = Payload::Assign { lhs: lhs.clone(), expr: expr.clone() };
                    let id = self.add_node(
                        sref,
                        NodeKind::Assign,
                        payload,
                        vec![lhs.base().to_string()],
                        uses,
                        full,
                        &local,
                        env,
                    );
                    define(env, lhs, id);
                }
                Stmt::Compound { lhs, op, expr } => {
                    let mut uses = expr.read_set();
                    lvalue_uses(lhs, &mut uses);
                    uses.push(lhs.base().to_string());
                    let payload = Payload::Compound { lhs: lhs.clone(), op: *op, expr: expr.clone() };
                    let id = self.add_node(
                        sref,
                        NodeKind::CompoundAssign,
                        payload,
                        vec![lhs.base().to_string()],
                        uses,
                        full,
                        &local,
                        env,
                    );
                    define(env, lhs, id);
                }
                Stmt::LocalDecl { name, expr, .. } => {
                    let payload = Payload::Decl { name: name.clone(), expr: expr.clone() };
                    let id = self.add_node(
                        sref,
                        NodeKind::Decl,
                        payload,
                        vec![name.clone()],
                        expr.read_set(),
                        full,
                        &local,
                        env,
                    );
                    env.insert(name.clone(), BTreeSet::from([Def::Node(id)]));
                }
                Stmt::Return(value) => {
                    let uses = value.as_ref().map(Expr::read_set).unwrap_or_default();
                    self.add_node(sref, NodeKind::Return, Payload::Return(value.clone()), vec![], uses, full, &local, env);
                    return None;
                }
                Stmt::If { cond, then_body, else_body } => {
                    let payload = Payload::Branch { cond: cond.clone() };
                    let b = self.add_node(
                        sref.clone(),
                        NodeKind::Branch,
                        payload,
                        vec![],
                        cond.read_set(),
                        full.clone(),
                        &local,
                        env,
                    );
                    let mut env_t = env.clone();
                    let mut env_e = env.clone();
                    let then_ft = self
                        .block(then_body, &format!("{sref}.t"), &full, Some(Guard { branch: b, taken: true }), &mut env_t)
                        .is_some();
                    let else_ft = self
                        .block(else_body, &format!("{sref}.e"), &full, Some(Guard { branch: b, taken: false }), &mut env_e)
                        .is_some();
                    match (then_ft, else_ft) {
                        (true, true) => {
                            *env = env_t;
                            merge(env, env_e);
                        }
                        (true, false) => {
                            *env = env_t;
                            local.push(Guard { branch: b, taken: true });
                        }
                        (false, true) => {
                            *env = env_e;
                            local.push(Guard { branch: b, taken: false });
                        }
                        (false, false) => return None,
                    }
                }
                Stmt::While { cond, body } => {
                    let (b, body_ft) = self.loop_iteration(cond, body, &sref, 0, &full, &local, env);
                    if !body_ft {
                        local.push(Guard { branch: b, taken: false });
                    }
                }
            }
        }
        Some(local)
    }

    /// One unrolled loop iteration, modeled as `if (cond) { body; <next> }`.
    /// Returns the iteration's branch node and whether the body can fall
    /// through.
    #[allow(clippy::too_many_arguments)]
    fn loop_iteration(
        &mut self,
        cond: &Expr,
        body: &[Stmt],
        sref: &str,
        k: usize,
        outer: &[Guard],
        local: &[Guard],
        env: &mut Env,
    ) -> (NodeId, bool) {
        let bref = if k == 0 { sref.to_string() } else { format!("{sref}.w{k}") };
        let full: Vec<Guard> = outer.iter().chain(local.iter()).copied().collect();
        let payload = Payload::Branch { cond: cond.clone() };
        let b = self.add_node(bref, NodeKind::Branch, payload, vec![], cond.read_set(), full.clone(), local, env);
        let mut env_t = env.clone();
        let ft = self.block(body, &format!("{sref}.w{k}"), &full, Some(Guard { branch: b, taken: true }), &mut env_t);
        let Some(after_body) = ft else {
            return (b, false);
        };
        if k + 1 < self.unroll {
            self.loop_iteration(cond, body, sref, k + 1, &full, &after_body, &mut env_t);
        }
        merge(env, env_t);
        (b, true)
    }
}

fn define(env: &mut Env, lhs: &LValue, id: NodeId) {
    match lhs {
        LValue::Var(v) => {
            env.insert(v.clone(), BTreeSet::from([Def::Node(id)]));
        }
        // Field-insensitive: a keyed write may leave other keys untouched.
        LValue::Index(m, _) => {
            env.entry(m.clone()).or_default().insert(Def::Node(id));
        }
    }
}

fn build(contract: &ContractIR, func: usize, unroll: usize) -> Builder<'_> {
    let f = &contract.functions[func];
    let mut b = Builder { func, name: &f.name, unroll: unroll.max(1), nodes: Vec::new(), edges: BTreeSet::new() };
    let mut env: Env = BTreeMap::new();
    for v in &contract.state_vars {
        env.insert(v.name.clone(), BTreeSet::from([Def::Initial]));
    }
    let params: Vec<String> = f.params.iter().map(|p| p.name.clone()).collect();
    let entry = b.add_node(
        "entry".into(),
        NodeKind::Entry,
        Payload::Entry { params: params.clone() },
        params.clone(),
        vec![],
        vec![],
        &[],
        &env,
    );
    for p in params {
        env.insert(p, BTreeSet::from([Def::Node(entry)]));
    }
    b.block(&f.body, "", &[], None, &mut env);
    b
}

/// Nodes of one function with loops unrolled `unroll` times, without edges.
pub fn flatten(contract: &ContractIR, func: usize, unroll: usize) -> Vec<PdgNode> {
    build(contract, func, unroll).nodes
}

/// Intra-procedural dependency graph: data edges from reaching definitions,
/// control edges from the branch each node directly depends on.
pub fn intra_pdg(contract: &ContractIR, func: usize, unroll: usize) -> (Vec<PdgNode>, Vec<PdgEdge>) {
    let b = build(contract, func, unroll);
    (b.nodes, b.edges.into_iter().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse;

    fn pdg(src: &str, f: &str) -> (Vec<PdgNode>, Vec<PdgEdge>) {
        let unit = parse(src).unwrap();
        let c = &unit.contracts[0];
        intra_pdg(c, c.function_index(f).unwrap(), 1)
    }

    #[test]
    fn straight_line_chain() {
        let (nodes, edges) = pdg("contract C { int a; int b; f(int x) returns (int) { a = x; b = a; return b; } }", "f");
        assert_eq!(nodes.len(), 4);
        let data: Vec<(u32, u32)> =
            edges.iter().filter(|e| e.kind == EdgeKind::Data).map(|e| (e.src.local, e.dst.local)).collect();
        assert_eq!(data, vec![(0, 1), (1, 2), (2, 3)]);
    }

    #[test]
    fn single_return_constant() {
        let (nodes, edges) = pdg("contract C { f() returns (int) { return 0; } }", "f");
        assert_eq!(nodes.len(), 2);
        assert!(edges.is_empty());
    }

    #[test]
    fn early_return_guards_rest() {
        let (nodes, edges) =
            pdg("contract C { bool p; int s; g() returns (int) { if (p) { return 0; } return s; } }", "g");
        let last = nodes.last().unwrap();
        assert_eq!(last.stmt_ref, "1");
        assert_eq!(last.guards, vec![Guard { branch: NodeId::new(0, 1), taken: false }]);
        assert!(edges.contains(&PdgEdge { src: NodeId::new(0, 1), dst: last.id, kind: EdgeKind::Control }));
        assert_eq!(last.entry_reads, vec!["s".to_string()]);
    }

    #[test]
    fn loop_unrolled_twice() {
        let src = "contract C { uint i; w() { while (i < 3) { i += 1; } } }";
        let unit = parse(src).unwrap();
        let nodes = flatten(&unit.contracts[0], 0, 2);
        let refs: Vec<&str> = nodes.iter().map(|n| n.stmt_ref.as_str()).collect();
        assert_eq!(refs, vec!["entry", "0", "0.w0.0", "0.w1", "0.w1.0"]);
        assert_eq!(nodes[4].guards.len(), 2);
    }
}
