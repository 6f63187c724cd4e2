use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use super::template::{Action, Actor, Amount, Template, TemplateId, Venue};
use super::watch::WatchKey;
use crate::lang::eval::holds;
use crate::lang::{self, Expr};
use crate::scan::{TPath, TscReport};
use crate::sim::{classify_pool, ChainState, PoolId, PoolInstance, PoolKind, Sensitivity, TokenId};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoolInfo {
    pub pool: PoolInstance,
    pub sensitivity: Sensitivity,
}

/// Probe every pool in `state`. Concentrated-liquidity pools are probed as a
/// whole, which exercises the active tick.
pub fn classify_pools(state: &ChainState) -> Vec<PoolInfo> {
    state
        .pools
        .values()
        .filter_map(|p| match classify_pool(state, &p.id, None) {
            Ok(o) => Some(PoolInfo { pool: p.clone(), sensitivity: o.class }),
            Err(e) => {
                log::warn!("pool {}: probe failed: {e}", p.id);
                None
            }
        })
        .collect()
}

/// The tPath a constraint was compiled from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TPathRef {
    pub functions: Vec<String>,
    /// Renamed symbolic arguments per call.
    pub args: Vec<Vec<String>>,
    /// Stitched path conditions, as expression text.
    pub conditions: Vec<String>,
}

impl TPathRef {
    fn of(tp: &TPath) -> TPathRef {
        TPathRef {
            functions: tp.functions(),
            args: tp.call_sequence.iter().map(|c| c.args.clone()).collect(),
            conditions: tp.constraints.iter().map(|c| lang::expr_text(&c.expr)).collect(),
        }
    }

    /// Calls the victim must make, balanceOf excluded.
    pub fn triggers(&self) -> &[String] {
        &self.functions[..self.functions.len().saturating_sub(1)]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StaticConstraint {
    pub template_id: TemplateId,
    pub extended: bool,
    /// The supply-controlled token (pool Y side).
    pub token: TokenId,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub tpath: Option<TPathRef>,
    pub pool_bindings: BTreeMap<Venue, PoolId>,
    pub pool_kinds: BTreeMap<Venue, PoolKind>,
    /// Searcher leg inputs and outputs; the free leg input is the first.
    pub symbolic_vars: Vec<String>,
    /// Pool and holding symbols; version 0 is bound at instantiation.
    pub state_symbols: Vec<String>,
    pub victim_symbols: Vec<String>,
    pub relations: Vec<String>,
    pub objective: String,
    pub key: WatchKey,
}

impl StaticConstraint {
    pub fn template(&self) -> Template {
        Template::new(self.template_id)
    }

    pub fn legs(&self) -> Vec<super::Leg> {
        self.template().legs(self.extended).to_vec()
    }
}

/// Symbol bookkeeping while writing relations leg by leg.
#[derive(Default)]
struct Sym {
    ver: BTreeMap<String, usize>,
    state: BTreeSet<String>,
    vars: Vec<String>,
    rel: Vec<String>,
}

impl Sym {
    fn cur(&mut self, base: &str) -> String {
        let v = *self.ver.entry(base.to_string()).or_insert(0);
        let s = format!("{base}{v}");
        self.state.insert(s.clone());
        s
    }

    fn next(&mut self, base: &str) -> String {
        *self.ver.entry(base.to_string()).or_insert(0) += 1;
        self.cur(base)
    }

    fn fixed(&mut self, s: String) -> String {
        self.state.insert(s.clone());
        s
    }
}

/// Function names allowed in relation text besides symbols.
pub const RELATION_VOCABULARY: [&str; 4] = ["cpmm", "fixed", "g", "restore"];

fn tokens_of(v: Venue) -> (&'static str, &'static str) {
    match v {
        Venue::PoolZ => ("hZ", "hY"),
        _ => ("hX", "hY"),
    }
}

fn is_balance_priced(k: PoolKind) -> bool {
    matches!(k, PoolKind::BalanceCpmm | PoolKind::ConcTick)
}

struct Compiled {
    vars: Vec<String>,
    state: Vec<String>,
    victim: Vec<String>,
    relations: Vec<String>,
    objective: String,
}

/// Walk the legs writing one relation per pricing step and holding update.
/// Symbols carry a version suffix bumped at every write.
fn compile(legs: &[super::Leg], kinds: &BTreeMap<Venue, PoolKind>, victim_args: &[String], extended: bool) -> Compiled {
    let mut s = Sym::default();
    let holdings: &[&str] = if extended { &["hX", "hY", "hZ"] } else { &["hX", "hY"] };
    for h in holdings {
        s.cur(h);
    }
    let mut victim = victim_args.to_vec();
    for (i, leg) in legs.iter().enumerate() {
        if leg.actor == Actor::Victim {
            if leg.action == Action::TscCall {
                for (v, k) in kinds {
                    if is_balance_priced(*k) {
                        let base = format!("y_{}", v.slot());
                        let (a, b) = (s.cur(&base), s.next(&base));
                        s.rel.push(format!("{b} == g({a})"));
                    }
                }
                let (a, b) = (s.cur("hY"), s.next("hY"));
                s.rel.push(format!("{b} == g({a})"));
            } else {
                let slot = leg.venue.slot();
                let (xb, yb) = (format!("x_{slot}"), format!("y_{slot}"));
                let (x, y) = (s.cur(&xb), s.cur(&yb));
                let fee = s.fixed(format!("fee_{slot}"));
                s.rel.push(format!("vout == cpmm({x}, {y}, vin, {fee})"));
                let (x1, y1) = (s.next(&xb), s.next(&yb));
                s.rel.push(format!("{x1} == {x} + vin"));
                s.rel.push(format!("{y1} == {y} - vout"));
                victim.extend(["vin".to_string(), "vout".to_string()]);
            }
            continue;
        }
        let slot = leg.venue.slot();
        let kind = kinds[&leg.venue];
        let buy = leg.action == Action::SwapXy;
        let (hx, hy) = tokens_of(leg.venue);
        let (hin, hout) = if buy { (hx, hy) } else { (hy, hx) };
        let d = match leg.amount {
            Amount::Free => format!("d{}", &hin[1..]),
            _ => format!("d{i}"),
        };
        let o = format!("o{i}");
        s.vars.push(d.clone());
        s.vars.push(o.clone());
        match leg.amount {
            Amount::Acquired => {
                let now = s.cur(hin);
                s.rel.push(format!("{d} == {now} - {hin}0"));
            }
            Amount::RestoreY => {
                let now = s.cur("hY");
                s.rel.push(format!("{d} == restore(hY0 - {now}, {slot})"));
            }
            Amount::Free | Amount::Observed => {}
        }
        if kind == PoolKind::LendingFixed {
            let (n, dd) = (s.fixed(format!("pn_{slot}")), s.fixed(format!("pd_{slot}")));
            let (a, b) = if buy { (n, dd) } else { (dd, n) };
            s.rel.push(format!("{o} == fixed({d}, {a}, {b})"));
        } else {
            let (xb, yb) = (format!("x_{slot}"), format!("y_{slot}"));
            let (x, y) = (s.cur(&xb), s.cur(&yb));
            let fee = s.fixed(format!("fee_{slot}"));
            let (rin, rout) = if buy { (&x, &y) } else { (&y, &x) };
            s.rel.push(format!("{o} == cpmm({rin}, {rout}, {d}, {fee})"));
            let (x1, y1) = (s.next(&xb), s.next(&yb));
            if buy {
                s.rel.push(format!("{x1} == {x} + {d}"));
                s.rel.push(format!("{y1} == {y} - {o}"));
            } else {
                s.rel.push(format!("{x1} == {x} - {o}"));
                s.rel.push(format!("{y1} == {y} + {d}"));
            }
        }
        let (i0, o0) = (s.cur(hin), s.cur(hout));
        let (i1, o1) = (s.next(hin), s.next(hout));
        s.rel.push(format!("{i1} == {i0} - {d}"));
        s.rel.push(format!("{o1} == {o0} + {o}"));
    }
    let fy = s.cur("hY");
    s.rel.push(format!("{fy} >= hY0"));
    let profit = if extended {
        let fx = s.cur("hX");
        s.rel.push(format!("{fx} >= hX0"));
        "hZ"
    } else {
        "hX"
    };
    let objective = format!("{} - {profit}0", s.cur(profit));
    victim.dedup();
    Compiled { vars: s.vars, state: s.state.into_iter().collect(), victim, relations: s.rel, objective }
}

const FEASIBILITY_DOMAIN: [i64; 9] = [-1, 0, 1, 2, 3, 5, 10, 100, 1000];
const FEASIBILITY_CAP: usize = 200_000;

/// Is there an assignment of small values making every condition true?
/// Conditions that cannot be evaluated (mapping reads, addresses) count as
/// satisfiable.
pub fn statically_feasible(conditions: &[Expr]) -> bool {
    let mut names: Vec<String> = conditions.iter().flat_map(|c| c.read_set()).collect();
    names.sort();
    names.dedup();
    let total = FEASIBILITY_DOMAIN.len().checked_pow(names.len() as u32).unwrap_or(usize::MAX);
    if total > FEASIBILITY_CAP {
        return true;
    }
    let mut idx = vec![0usize; names.len()];
    loop {
        let env: BTreeMap<&str, BigInt> =
            names.iter().zip(&idx).map(|(n, i)| (n.as_str(), BigInt::from(FEASIBILITY_DOMAIN[*i]))).collect();
        let lookup = |n: &str| env.get(n).cloned();
        if conditions.iter().all(|c| holds(c, &lookup) != Some(false)) {
            return true;
        }
        let mut k = names.len();
        loop {
            if k == 0 {
                return false;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < FEASIBILITY_DOMAIN.len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

fn can_swap(k: PoolKind) -> bool {
    k != PoolKind::LendingFixed
}

/// q legs need a fixed price under direct transfers: reserve-tracking CPMMs
/// and fixed-price lending, certified by the probe.
fn q_capable(p: &PoolInfo) -> bool {
    p.sensitivity == Sensitivity::Insensitive && matches!(p.pool.kind(), PoolKind::ReserveCpmm | PoolKind::LendingFixed)
}

fn build(
    template: &Template,
    extended: bool,
    token: &TokenId,
    tpath: Option<TPathRef>,
    bindings: &BTreeMap<Venue, &PoolInfo>,
    key: WatchKey,
) -> StaticConstraint {
    let kinds: BTreeMap<Venue, PoolKind> = bindings.iter().map(|(v, p)| (*v, p.pool.kind())).collect();
    let victim_args: Vec<String> = tpath.as_ref().map(|t| t.args.concat()).unwrap_or_default();
    let c = compile(template.legs(extended), &kinds, &victim_args, extended);
    StaticConstraint {
        template_id: template.id,
        extended,
        token: token.clone(),
        tpath,
        pool_bindings: bindings.iter().map(|(v, p)| (*v, p.pool.id.clone())).collect(),
        pool_kinds: kinds,
        symbolic_vars: c.vars,
        state_symbols: c.state,
        victim_symbols: c.victim,
        relations: c.relations,
        objective: c.objective,
        key,
    }
}

/// Cross every feasible TSC tPath of `report` with the templates and the
/// pools trading `token`. The p and z slots take pools the probe finds
/// price-sensitive; the q slot only takes pools certified insensitive.
pub fn gen_static_constraints(
    report: &TscReport,
    token: &TokenId,
    pools: &[PoolInfo],
    templates: &[Template],
) -> Vec<StaticConstraint> {
    let mut seen = BTreeSet::new();
    let tpaths: Vec<TPathRef> = report
        .tsc_paths()
        .filter(|tp| statically_feasible(&tp.constraints.iter().map(|c| c.expr.clone()).collect::<Vec<_>>()))
        .map(TPathRef::of)
        .filter(|r| !r.triggers().is_empty() && seen.insert(r.functions.clone()))
        .collect();
    let on_token: Vec<&PoolInfo> = pools.iter().filter(|p| &p.pool.token_y == token).collect();
    let ps: Vec<&PoolInfo> =
        on_token.iter().copied().filter(|p| p.sensitivity == Sensitivity::Sensitive && can_swap(p.pool.kind())).collect();
    let qs: Vec<&PoolInfo> = on_token.iter().copied().filter(|p| q_capable(p)).collect();
    let mut out = Vec::new();
    for tp in &tpaths {
        let triggers = tp.triggers();
        let key = WatchKey {
            target: token.to_string(),
            function: triggers[triggers.len() - 1].clone(),
            prefix: triggers[..triggers.len() - 1].to_vec(),
        };
        for t in templates.iter().filter(|t| t.id != TemplateId::B0) {
            let mut assignments: Vec<BTreeMap<Venue, &PoolInfo>> = Vec::new();
            match (t.id.needs_p(), t.id.needs_q()) {
                (true, false) => assignments.extend(ps.iter().map(|p| BTreeMap::from([(Venue::PoolP, *p)]))),
                (false, true) => assignments.extend(qs.iter().map(|q| BTreeMap::from([(Venue::PoolQ, *q)]))),
                _ => {
                    for p in &ps {
                        for q in qs.iter().filter(|q| q.pool.id != p.pool.id && q.pool.token_x == p.pool.token_x) {
                            assignments.push(BTreeMap::from([(Venue::PoolP, *p), (Venue::PoolQ, *q)]));
                        }
                    }
                }
            }
            for a in assignments {
                out.push(build(t, false, token, Some(tp.clone()), &a, key.clone()));
                if t.extension_legs.is_none() {
                    continue;
                }
                let x = &a[&Venue::PoolQ].pool.token_x;
                for z in ps.iter().filter(|z| &z.pool.token_x != x && a.values().all(|b| b.pool.id != z.pool.id)) {
                    let mut ext = a.clone();
                    ext.insert(Venue::PoolZ, z);
                    out.push(build(t, true, token, Some(tp.clone()), &ext, key.clone()));
                }
            }
        }
    }
    out
}

/// B0 sandwiches around whale `swap_xy` calls, one per swap-capable pool.
pub fn gen_swap_baselines(pools: &[PoolInfo], templates: &[Template]) -> Vec<StaticConstraint> {
    let Some(b0) = templates.iter().find(|t| t.id == TemplateId::B0) else {
        return vec![];
    };
    pools
        .iter()
        .filter(|p| can_swap(p.pool.kind()))
        .map(|p| {
            let key = WatchKey { target: p.pool.id.to_string(), function: "swap_xy".into(), prefix: vec![] };
            build(b0, false, &p.pool.token_y, None, &BTreeMap::from([(Venue::PoolP, p)]), key)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse_expr;

    fn exprs(v: &[&str]) -> Vec<Expr> {
        v.iter().map(|s| parse_expr(s).unwrap()).collect()
    }

    #[test]
    fn contradictory_pause_is_infeasible() {
        assert!(!statically_feasible(&exprs(&["pause_0 == 0", "pause_0 != 0"])));
        assert!(statically_feasible(&exprs(&["!pause_0", "t_a0 > 1"])));
        assert!(!statically_feasible(&exprs(&["t_a0 > 1000"])));
        assert!(statically_feasible(&[]));
    }

    #[test]
    fn relations_only_use_declared_symbols() {
        let kinds = BTreeMap::from([(Venue::PoolP, PoolKind::BalanceCpmm), (Venue::PoolQ, PoolKind::ReserveCpmm), (Venue::PoolZ, PoolKind::BalanceCpmm)]);
        for t in super::super::catalog() {
            for ext in [false, true] {
                if ext && t.extension_legs.is_none() {
                    continue;
                }
                let c = compile(t.legs(ext), &kinds, &["t_a0".to_string()], ext);
                let known: BTreeSet<&str> = c
                    .vars
                    .iter()
                    .chain(&c.state)
                    .chain(&c.victim)
                    .map(String::as_str)
                    .chain(RELATION_VOCABULARY)
                    .chain(["p", "q", "z"])
                    .collect();
                for r in c.relations.iter().chain([&c.objective]) {
                    for word in r.split(|ch: char| !(ch.is_ascii_alphanumeric() || ch == '_')) {
                        if word.is_empty() || word.chars().all(|ch| ch.is_ascii_digit()) {
                            continue;
                        }
                        assert!(known.contains(word), "{}: `{word}` in `{r}`", t.id);
                    }
                }
            }
        }
    }
}
