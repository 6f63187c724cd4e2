use std::path::PathBuf;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use tmev_core::config::Config;
use tmev_core::par::Mode;
use tmev_core::pipeline::{build_watchlist, plans_from_jsonl, plans_to_jsonl, replay_all, search, VictimResult};
use tmev_core::scan::{scan_source, TscReport};
use tmev_core::search::{catalog, parse_mempool, replay_plan, SearchError, Template, TemplateId};
use tmev_core::sim::{load_fixture, Address, ChainState, Fixture, TokenId, Tx, Value};

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn fixture(name: &str) -> Fixture {
    load_fixture(&root().join("fixtures").join(name)).unwrap()
}

fn reports() -> Vec<TscReport> {
    let cfg = Config::default();
    ["rebase_mul.tok", "rebase_div.tok"]
        .iter()
        .flat_map(|f| {
            let p = root().join("corpus").join(f);
            scan_source(f, &std::fs::read_to_string(p).unwrap(), &cfg).unwrap()
        })
        .collect()
}

fn run(fx: &Fixture, mempool: &str, templates: &[Template], mode: Mode) -> Vec<VictimResult> {
    let text = std::fs::read_to_string(root().join("fixtures").join(mempool)).unwrap();
    let watch = build_watchlist(&fx.state, &reports(), templates);
    search(fx, &watch, &parse_mempool(&text), &Config::default(), mode)
}

fn only(id: TemplateId) -> Vec<Template> {
    vec![Template::new(id)]
}

fn int(n: &BigInt) -> Value {
    Value::Int(n.clone())
}

/// Searcher X after a swap-in / victim / swap-out sandwich whose last leg
/// sells everything the first leg bought. `None` if any leg faults.
fn sandwich_profit(st: &ChainState, first_pool: &str, last_pool: &str, victim: &Tx, dx: &BigInt) -> Option<BigInt> {
    let alice = Address::new("alice");
    let (x, y) = (TokenId::new("X"), TokenId::new("Y"));
    let mut s = st.clone();
    let x0 = s.balance_of(&x, &alice).ok()?;
    s.exec_tx(&Tx::new("alice", first_pool, "swap_xy", vec![int(dx)])).ok()?;
    let mut baseline = st.clone();
    baseline.exec_tx(victim).ok()?;
    s.exec_tx(victim).ok()?;
    let y_ref = baseline.balance_of(&y, &alice).ok()?;
    let sell = s.balance_of(&y, &alice).ok()? - &y_ref;
    if !sell.is_positive() {
        return None;
    }
    s.exec_tx(&Tx::new("alice", last_pool, "swap_yx", vec![Value::Int(sell)])).ok()?;
    Some(s.balance_of(&x, &alice).ok()? - x0)
}

/// Best profit over a 1000-point grid on [1, budget].
fn grid_best(st: &ChainState, first: &str, last: &str, victim: &Tx, budget: u64) -> BigInt {
    (1..=1000u64)
        .filter_map(|i| sandwich_profit(st, first, last, victim, &BigInt::from((budget * i / 1000).max(1))))
        .max()
        .unwrap()
}

fn within_tenth_percent(got: &BigInt, want: &BigInt) -> bool {
    let diff = (got - want).abs() * BigInt::from(1000);
    diff <= want.abs()
}

#[test]
fn b1_is_unprofitable_across_the_grid() {
    let fx = fixture("b1_only.scn");
    let victim = Tx::new("owner", "Y", "rebase", vec![Value::int(2)]);
    let best = grid_best(&fx.state, "p", "p", &victim, Config::default().budget);
    assert!(best >= BigInt::from(-2) && best <= BigInt::zero(), "best B1 profit {best}");
    let res = run(&fx, "demo_mempool.jsonl", &catalog(), Mode::Sequential);
    assert!(res.iter().all(|r| r.winner.is_none()));
}

#[test]
fn d1_plus_solver_matches_grid() {
    let fx = fixture("demo.scn");
    let res = run(&fx, "demo_mempool.jsonl", &only(TemplateId::D1Plus), Mode::Sequential);
    assert_eq!(res.len(), 1);
    let plan = res[0].winner.clone().expect("a D1+ plan");
    assert_eq!(plan.template_id, TemplateId::D1Plus);
    let victim = Tx::new("owner", "Y", "rebase", vec![Value::int(2)]);
    let grid = grid_best(&fx.state, "p", "q", &victim, Config::default().budget);
    assert!(grid.is_positive());
    assert!(within_tenth_percent(&plan.profit, &grid), "solver {} grid {grid}", plan.profit);
    assert_eq!(replay_plan(&fx.state, &plan).unwrap(), plan.profit);
}

#[test]
fn b0_solver_matches_grid() {
    let fx = fixture("b0.scn");
    let res = run(&fx, "b0_mempool.jsonl", &only(TemplateId::B0), Mode::Sequential);
    let plan = res[0].winner.clone().expect("a B0 plan");
    let victim = Tx::new("bob", "p", "swap_xy", vec![Value::int(100_000)]);
    let grid = grid_best(&fx.state, "p", "p", &victim, Config::default().budget);
    assert!(grid.is_positive());
    assert!(within_tenth_percent(&plan.profit, &grid), "solver {} grid {grid}", plan.profit);
}

#[test]
fn negative_rebase_templates_profit() {
    let fx = fixture("negative.scn");
    let res = run(&fx, "negative_mempool.jsonl", &catalog(), Mode::Sequential);
    let r = &res[0];
    let ids: Vec<(TemplateId, bool)> = r.candidates.iter().map(|p| (p.template_id, p.extended)).collect();
    for want in [(TemplateId::D1Minus, false), (TemplateId::D2Minus, false), (TemplateId::D2Minus, true)] {
        assert!(ids.contains(&want), "missing {want:?} in {ids:?}");
    }
    let w = r.winner.as_ref().unwrap();
    assert!(r.candidates.iter().all(|p| p.profit <= w.profit));
    for p in &r.candidates {
        assert_eq!(replay_plan(&fx.state, p).unwrap(), p.profit);
    }
}

#[test]
fn replay_detects_staleness_and_tampering() {
    let fx = fixture("demo.scn");
    let plans: Vec<_> = run(&fx, "demo_mempool.jsonl", &catalog(), Mode::Sequential).into_iter().filter_map(|r| r.winner).collect();
    assert!(!plans.is_empty());
    assert!(replay_all(&fx.state, &plans).iter().all(|o| o.verified()));

    let perturbed = fixture("demo_perturbed.scn");
    for o in replay_all(&perturbed.state, &plans) {
        assert!(matches!(o.result, Err(SearchError::StaleState(_))), "{o:?}");
    }

    let text = plans_to_jsonl(&plans).replacen(&format!("\"profit\":\"{}\"", plans[0].profit), "\"profit\":\"999999\"", 1);
    let edited = plans_from_jsonl(&text).unwrap();
    let o = &replay_all(&fx.state, &edited)[0];
    assert!(!o.verified());
    assert_eq!(o.result.as_ref().unwrap(), &plans[0].profit);
}

#[test]
fn search_is_deterministic_across_modes() {
    let fx = fixture("demo.scn");
    let out = |mode| {
        let plans: Vec<_> = run(&fx, "demo_mempool.jsonl", &catalog(), mode).into_iter().filter_map(|r| r.winner).collect();
        plans_to_jsonl(&plans)
    };
    let a = out(Mode::Sequential);
    assert_eq!(a, out(Mode::Sequential));
    assert_eq!(a, out(Mode::Parallel));
}

#[test]
fn empty_mempool_yields_nothing() {
    let fx = fixture("demo.scn");
    assert!(run(&fx, "empty_mempool.jsonl", &catalog(), Mode::Sequential).is_empty());
}
