use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use num_bigint::BigInt;
use proptest::prelude::*;
use tmev_core::sim::pool::{ACTIVE_TICK, INACTIVE_TICK};
use tmev_core::sim::{
    classify_pool, load_fixture, parse_fixture, pitex_test, Address, ChainState, PoolId, PoolState, Sensitivity, SimError,
    TokenId, Tx, Value,
};

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn state(text: &str) -> ChainState {
    parse_fixture(text, Path::new(".")).unwrap().state
}

fn big(n: i64) -> BigInt {
    BigInt::from(n)
}

fn addr(s: &str) -> Address {
    Address::new(s)
}

fn pair(kind: &str, x: i64, y: i64, extra: &str) -> String {
    format!(
        r#"
[[token]]
id = "X"
model = "erc20"
balances = {{ alice = "1e12", p = {x} }}

[[token]]
id = "Y"
model = "erc20"
balances = {{ alice = "1e12", p = {y} }}

[[pool]]
id = "p"
kind = "{kind}"
token_x = "X"
token_y = "Y"
{extra}
"#
    )
}

fn swap(st: &mut ChainState, x_to_y: bool, amount: i64) -> Result<BigInt, SimError> {
    st.swap(&PoolId::new("p"), &addr("alice"), x_to_y, &big(amount))
}

/// Independent constant-product oracle in machine integers.
fn cpmm_oracle(r_in: i128, r_out: i128, d: i128) -> i128 {
    r_out * d / (r_in + d)
}

#[test]
fn reserve_swap_examples() {
    let mut st = state(&pair("reserve_cpmm", 1000, 1000, ""));
    assert_eq!(swap(&mut st, true, 1000).unwrap(), big(500));
    let mut st = state(&pair("reserve_cpmm", 2000, 1000, ""));
    assert_eq!(swap(&mut st, true, 100).unwrap(), big(cpmm_oracle(2000, 1000, 100) as i64));
    assert_eq!(swap(&mut state(&pair("reserve_cpmm", 2000, 1000, "")), true, 100).unwrap(), big(47));
    assert!(matches!(swap(&mut st, true, 0), Err(SimError::InsufficientTrade)));
}

#[test]
fn fee_is_taken_from_the_input() {
    let mut st = state(&pair("reserve_cpmm", 10_000, 10_000, "fee_bps = 30"));
    let eff = 1000 * (10_000 - 30) / 10_000;
    assert_eq!(swap(&mut st, true, 1000).unwrap(), big(cpmm_oracle(10_000, 10_000, eff) as i64));
    let PoolState::ReserveCpmm { rx, .. } = &st.pool(&PoolId::new("p")).unwrap().state else { panic!() };
    assert_eq!(*rx, big(10_000 + eff as i64));
}

#[test]
fn balance_pool_prices_off_live_balances() {
    let mut st = state(&pair("balance_cpmm", 1000, 1000, ""));
    st.transfer(&TokenId::new("Y"), &addr("alice"), &Address::from(&PoolId::new("p")), &big(1000)).unwrap();
    assert_eq!(swap(&mut st, true, 1000).unwrap(), big(1000));
}

#[test]
fn lending_examples() {
    let lend = |num: i64, den: i64| state(&pair("lending_fixed", 1000, 1000, &format!("price_num = {num}\nprice_den = {den}")));
    let p = PoolId::new("p");
    let mut st = lend(1, 1);
    assert_eq!(st.lend(&p, &addr("alice"), true, &big(100)).unwrap(), big(100));
    let mut st = lend(3, 2);
    let before = st.clone();
    assert_eq!(st.lend(&p, &addr("alice"), true, &big(100)).unwrap(), big(150));
    assert_eq!(st.lend(&p, &addr("alice"), false, &big(150)).unwrap(), big(100));
    assert_eq!(st, before);
    assert!(matches!(st.lend(&p, &addr("alice"), true, &big(10_000)), Err(SimError::InsufficientPoolLiquidity(_))));
}

#[test]
fn inactive_tick_liquidity_examples() {
    let tick = |num: i64, den: i64| state(&pair("conc_tick", 1000, 1000, &format!("tick_price_num = {num}\ntick_price_den = {den}")));
    let p = PoolId::new("p");
    let mut st = tick(1, 1);
    let before = st.clone();
    assert_eq!(st.add_liquidity(&p, &addr("alice"), INACTIVE_TICK, &big(500)).unwrap(), big(500));
    assert_eq!(st.remove_liquidity(&p, &addr("alice"), INACTIVE_TICK, &big(500)).unwrap(), big(500));
    for t in ["X", "Y", "p.L"] {
        let id = TokenId::new(t);
        assert_eq!(st.holders(&id).unwrap(), before.holders(&id).unwrap(), "{t}");
    }
    let mut st = tick(2, 1);
    assert_eq!(st.add_liquidity(&p, &addr("alice"), INACTIVE_TICK, &big(100)).unwrap(), big(200));
    assert!(matches!(st.add_liquidity(&p, &addr("alice"), ACTIVE_TICK, &big(100)), Err(SimError::ActiveTickError(_))));
}

#[test]
fn pitex_matrix() {
    let fx = load_fixture(&fixtures().join("pitex.scn")).unwrap();
    let class = |pool: &str, tick| {
        let o = classify_pool(&fx.state, &PoolId::new(pool), tick).unwrap();
        assert_eq!(o.class == Sensitivity::Insensitive, o.dx1 == o.dx2);
        o.class
    };
    assert_eq!(class("v3", None), Sensitivity::Insensitive);
    assert_eq!(class("v2", None), Sensitivity::Sensitive);
    assert_eq!(class("aave", None), Sensitivity::Insensitive);
    assert_eq!(class("cl", None), Sensitivity::Sensitive);
    assert_eq!(class("cl", Some(INACTIVE_TICK)), Sensitivity::Insensitive);
}

#[test]
fn pitex_leaves_the_state_alone() {
    let fx = load_fixture(&fixtures().join("pitex.scn")).unwrap();
    let before = fx.state.canonical_text();
    pitex_test(&fx.state, &PoolId::new("v2"), &TokenId::new("Y"), &big(1000), &big(1000), None).unwrap();
    assert_eq!(fx.state.canonical_text(), before);
}

#[test]
fn d1_plus_bundle_executes() {
    let fx = load_fixture(&fixtures().join("demo.scn")).unwrap();
    let x = TokenId::new("X");
    let before = fx.state.balance_of(&x, &fx.searcher).unwrap();
    let (mid, _) = fx.state.exec_bundle(&[Tx::new("alice", "q", "swap_xy", vec![Value::int(100_000)])]).unwrap();
    let got_y = mid.balance_of(&TokenId::new("Y"), &fx.searcher).unwrap();
    let bundle = [
        Tx::new("alice", "q", "swap_xy", vec![Value::int(100_000)]),
        Tx::new("owner", "Y", "rebase", vec![Value::int(2)]),
        Tx::new("alice", "q", "swap_yx", vec![Value::Int(got_y * 2)]),
    ];
    let (post, receipts) = fx.state.exec_bundle(&bundle).unwrap();
    assert_eq!(receipts.len(), 3);
    assert!(receipts.iter().all(|r| r.ok));
    assert!(post.balance_of(&x, &fx.searcher).unwrap() > before);
    assert_eq!(post.block_number, fx.state.block_number + 1);
}

#[test]
fn faulting_bundle_reverts_whole() {
    let fx = load_fixture(&fixtures().join("negative.scn")).unwrap();
    let before = fx.state.canonical_text();
    let bundle = [
        Tx::new("alice", "Y", "transfer", vec![Value::Addr(addr("bob")), Value::int(10)]),
        Tx::new("owner", "Y", "contract_by", vec![Value::int(0)]),
    ];
    match fx.state.exec_bundle(&bundle) {
        Err(SimError::BundleReverted { index: 1, cause }) => assert!(matches!(*cause, SimError::DivisionByZero)),
        other => panic!("{other:?}"),
    }
    assert_eq!(fx.state.canonical_text(), before);
}

#[test]
fn query_bundle_changes_nothing_but_the_block() {
    let fx = load_fixture(&fixtures().join("demo.scn")).unwrap();
    let (post, r) = fx.state.exec_bundle(&[Tx::new("bob", "Y", "balanceOf", vec![Value::Addr(addr("bob"))])]).unwrap();
    assert!(r[0].balance_deltas.is_empty());
    assert_eq!(post.tokens, fx.state.tokens);
    assert_eq!(post.pools, fx.state.pools);
    assert!(matches!(fx.state.exec_bundle(&[]), Err(SimError::EmptyBundle)));
}

#[test]
fn rebase_multiplies_every_holder() {
    let st = state(
        r#"
[[token]]
id = "Y"
model = "rebase"
balances = { a = 100, b = 250, c = 650 }
"#,
    );
    let y = TokenId::new("Y");
    assert_eq!(st.supply(&y).unwrap(), big(1000));
    let (post, _) = st.exec_bundle(&[Tx::new("owner", "Y", "rebase", vec![Value::int(2)])]).unwrap();
    assert_eq!(post.supply(&y).unwrap(), big(2000));
    for (a, b) in st.holders(&y).unwrap() {
        assert_eq!(post.balance_of(&y, &a).unwrap(), b * 2);
    }
}

fn conservation_fixture() -> ChainState {
    load_fixture(&fixtures().join("pitex.scn")).unwrap().state
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn cpmm_monotone_and_bounded(rx in 1i64..1_000_000_000, ry in 1i64..1_000_000_000, a in 1i64..1_000_000_000, b in 1i64..1_000_000_000) {
        let (lo, hi) = (a.min(b), a.max(b));
        let text = pair("reserve_cpmm", rx, ry, "");
        let out_lo = swap(&mut state(&text), true, lo).unwrap();
        let out_hi = swap(&mut state(&text), true, hi).unwrap();
        prop_assert!(out_lo <= out_hi);
        prop_assert!(out_hi < big(ry));
        prop_assert_eq!(out_lo, big(cpmm_oracle(rx as i128, ry as i128, lo as i128) as i64));
    }

    #[test]
    fn direct_transfers_never_move_reserves(dx in 1i64..1_000_000, dy in 1i64..1_000_000, probe in 1i64..100_000) {
        let st = state(&pair("reserve_cpmm", 1_000_000, 1_000_000, ""));
        let reserves = |s: &ChainState| s.pool(&PoolId::new("p")).unwrap().state.clone();
        let mut pushed = st.clone();
        let pa = Address::from(&PoolId::new("p"));
        pushed.transfer(&TokenId::new("X"), &addr("alice"), &pa, &big(dx)).unwrap();
        pushed.transfer(&TokenId::new("Y"), &addr("alice"), &pa, &big(dy)).unwrap();
        prop_assert_eq!(reserves(&pushed), reserves(&st));
        prop_assert_eq!(swap(&mut pushed.clone(), false, probe).unwrap(), swap(&mut st.clone(), false, probe).unwrap());
    }

    #[test]
    fn bundles_never_touch_their_source(ops in prop::collection::vec((0usize..4, any::<bool>(), 1i64..200_000), 1..6)) {
        let st = conservation_fixture();
        let before = st.canonical_text();
        let pools = ["v2", "v3", "aave", "cl"];
        let txs: Vec<Tx> = ops
            .iter()
            .map(|(p, dir, amt)| Tx::new("alice", pools[*p], if *dir { "swap_xy" } else { "swap_yx" }, vec![Value::int(*amt)]))
            .collect();
        let _ = st.exec_bundle(&txs);
        prop_assert_eq!(st.canonical_text(), before);
    }

    #[test]
    fn non_supply_operations_conserve_and_deltas_match_supply(ops in prop::collection::vec((0usize..4, any::<bool>(), 1i64..200_000), 1..6), t in 1i64..5) {
        let mut st = conservation_fixture();
        let pools = ["v2", "v3", "aave", "cl"];
        let mut txs: Vec<Tx> = ops
            .iter()
            .map(|(p, dir, amt)| Tx::new("alice", pools[*p], if *dir { "swap_xy" } else { "swap_yx" }, vec![Value::int(*amt)]))
            .collect();
        txs.insert(txs.len() / 2, Tx::new("owner", "Y", "rebase", vec![Value::int(t)]));
        for tx in &txs {
            let supply: BTreeMap<TokenId, BigInt> = st.tokens.keys().map(|id| (id.clone(), st.supply(id).unwrap())).collect();
            let Ok(r) = st.exec_tx(tx) else { continue };
            for (id, s0) in &supply {
                let change = st.supply(id).unwrap() - s0;
                let sum: BigInt = r.balance_deltas.iter().filter(|((_, tok), _)| tok == id).map(|(_, d)| d.clone()).sum();
                prop_assert_eq!(&sum, &change, "{} on {}", tx.function, id);
                if tx.function != "rebase" {
                    prop_assert_eq!(change, BigInt::from(0), "{} changed supply of {}", tx.function, id);
                }
            }
        }
    }
}
