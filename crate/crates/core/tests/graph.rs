use std::collections::BTreeSet;
use std::path::PathBuf;

use tmev_core::corpus_gen;
use tmev_core::graph::{construct_tsdg, intra_pdg, EdgeKind, GraphError, GraphOptions, NodeId, NodeKind, Tsdg};
use tmev_core::lang::{parse, ContractIR};

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn corpus_contract(file: &str) -> ContractIR {
    let src = std::fs::read_to_string(root().join("../../corpus").join(file)).unwrap();
    parse(&src).unwrap().contracts.remove(0)
}

fn tsdg(c: &ContractIR) -> Tsdg {
    construct_tsdg(c, GraphOptions::default()).unwrap()
}

fn id(s: &str) -> NodeId {
    let (f, l) = s.split_once(':').unwrap();
    NodeId::new(f.parse().unwrap(), l.parse().unwrap())
}

#[test]
fn erc20_matches_golden_graph() {
    let g = tsdg(&corpus_contract("erc20_plain.tok"));
    let golden = std::fs::read_to_string(root().join("tests/golden/erc20_plain.tsdg")).unwrap();
    assert_eq!(g.export(), golden);
    let supply = g.var_index.get("totalSupply");
    assert!(supply.is_none_or(|s| s.defs.is_empty() && s.uses.is_empty()));
    for e in g.edges_of_kind(EdgeKind::InterprocDefUse) {
        assert_eq!(g.node(e.src).unwrap().function, "transfer");
    }
}

#[test]
fn staged_rebase_balance_of_pdg() {
    let c = corpus_contract("staged_rebase.tok");
    let (nodes, edges) = intra_pdg(&c, 0, 1);
    let kinds: Vec<NodeKind> = nodes.iter().filter(|n| !n.id.is_entry()).map(|n| n.kind).collect();
    assert_eq!(kinds, [NodeKind::Decl, NodeKind::Branch, NodeKind::Return, NodeKind::Return]);
    let has = |s: &str, d: &str, k: EdgeKind| edges.iter().any(|e| e.src == id(s) && e.dst == id(d) && e.kind == k);
    assert!(has("0:1", "0:3", EdgeKind::Data));
    assert!(has("0:2", "0:3", EdgeKind::Control));
    assert!(has("0:2", "0:4", EdgeKind::Control));
    assert!(!has("0:1", "0:4", EdgeKind::Data));
}

#[test]
fn staged_rebase_interproc_chain() {
    let c = corpus_contract("staged_rebase.tok");
    let g = tsdg(&c);
    let stage = id("2:1");
    let apply = id("1:1");
    let ret = id("0:3");
    assert_eq!(g.node(stage).unwrap().function, "rebase2");
    assert_eq!(g.node(apply).unwrap().function, "rebase1");
    let inter: BTreeSet<(NodeId, NodeId)> = g.edges_of_kind(EdgeKind::InterprocDefUse).map(|e| (e.src, e.dst)).collect();
    assert!(inter.contains(&(stage, apply)));
    assert!(inter.contains(&(apply, ret)));
}

#[test]
fn constant_balance_has_no_interproc_edges() {
    let c = parse("contract K { uint s = 1; balanceOf(address a) returns (uint) { return 42; } set(uint v) { s = v; } }")
        .unwrap()
        .contracts
        .remove(0);
    let g = tsdg(&c);
    assert_eq!(g.roots.len(), 1);
    assert_eq!(g.edges_of_kind(EdgeKind::InterprocDefUse).count(), 0);
}

#[test]
fn missing_balance_of_is_an_error() {
    let c = parse("contract N { f() {} }").unwrap().contracts.remove(0);
    assert!(matches!(construct_tsdg(&c, GraphOptions::default()), Err(GraphError::MissingBalanceOf(_))));
}

fn all_contracts() -> Vec<ContractIR> {
    let mut out: Vec<ContractIR> = std::fs::read_dir(root().join("../../corpus"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "tok"))
        .flat_map(|p| parse(&std::fs::read_to_string(p).unwrap()).unwrap().contracts)
        .collect();
    out.extend(corpus_gen::generate(11, 200).into_iter().flat_map(|g| parse(&g.source).unwrap().contracts));
    out
}

#[test]
fn structural_invariants_hold_across_corpus() {
    for c in all_contracts() {
        let g = tsdg(&c);
        let ids: BTreeSet<NodeId> = g.nodes.iter().map(|n| n.id).collect();
        assert_eq!(ids.len(), g.nodes.len(), "{}: duplicate node ids", c.name);
        for e in &g.edges {
            assert!(ids.contains(&e.src) && ids.contains(&e.dst), "{}: dangling edge", c.name);
            if e.kind != EdgeKind::InterprocDefUse {
                assert_eq!(e.src.func, e.dst.func, "{}: intra edge crosses functions", c.name);
            }
        }

        let bal = c.function_index("balanceOf").unwrap();
        let returns: BTreeSet<NodeId> =
            g.nodes.iter().filter(|n| n.id.func as usize == bal && n.kind == NodeKind::Return).map(|n| n.id).collect();
        assert_eq!(g.roots.iter().copied().collect::<BTreeSet<_>>(), returns, "{}: roots", c.name);

        assert!(g.stats.intra_pdg_calls <= c.functions.len(), "{}: intra_pdg called twice", c.name);
        let stmts = g.nodes.len();
        assert!(g.stats.dequeues <= stmts * c.state_vars.len().max(1), "{}: dequeues", c.name);

        for e in g.edges_of_kind(EdgeKind::InterprocDefUse) {
            let linked = g.var_index.values().any(|s| s.defs.contains(&e.src) && s.uses.contains(&e.dst));
            assert!(linked, "{}: interproc edge {} -> {} not backed by a state variable", c.name, e.src, e.dst);
        }
    }
}

#[test]
fn construction_is_deterministic() {
    for c in all_contracts().iter().take(50) {
        assert_eq!(tsdg(c).export(), tsdg(c).export());
    }
}
