use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use super::template::{Action, Actor, Amount, Leg, TscSign, Venue};
use super::{PendingTx, PlanTx, Price, SearchError, StaticConstraint};
use crate::config::Config;
use crate::sim::{Address, ChainState, PoolId, PoolKind, PoolState, SimError, TokenId, Tx};

/// A static constraint bound to an observed victim and a concrete state.
/// The only free symbol left is the searcher's free leg amount.
#[derive(Debug, Clone)]
pub struct DynamicConstraint {
    pub sc: StaticConstraint,
    pub legs: Vec<Leg>,
    pub victim_tx_id: String,
    pub victims: Vec<Tx>,
    pub pre_state: ChainState,
    pub searcher: Address,
    /// Version-0 state symbols and victim placeholders.
    pub bindings: BTreeMap<String, BigInt>,
    pub free_symbol: String,
    pub lo: BigInt,
    pub hi: BigInt,
    pub profit_token: TokenId,
    pub hold: Vec<TokenId>,
    pub residual_price: Option<Price>,
    /// `pre_state` after the victims alone.
    pub baseline: ChainState,
    initial: BTreeMap<TokenId, BigInt>,
    after_victims: BTreeMap<TokenId, BigInt>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Evaluation {
    pub bundle: Vec<PlanTx>,
    pub profit: BigInt,
    /// Input amount of every searcher leg, by symbol.
    pub amounts: BTreeMap<String, BigInt>,
}

/// Direction of the supply change `victims` cause on `token`; `None` when
/// the supply is unchanged.
pub fn victim_sign(state: &ChainState, token: &TokenId, victims: &[Tx]) -> Result<Option<TscSign>, SimError> {
    let before = state.supply(token)?;
    let mut s = state.clone();
    for tx in victims {
        s.exec_tx(tx)?;
    }
    let after = s.supply(token)?;
    Ok(match after.cmp(&before) {
        std::cmp::Ordering::Greater => Some(TscSign::Positive),
        std::cmp::Ordering::Less => Some(TscSign::Negative),
        std::cmp::Ordering::Equal => None,
    })
}

/// The state the victims leave behind when nobody interferes.
pub fn counterfactual(state: &ChainState, victims: &[Tx]) -> Result<ChainState, SimError> {
    let mut s = state.clone();
    for tx in victims {
        s.exec_tx(tx)?;
    }
    Ok(s)
}

/// Searcher profit of `post` over the no-attack `baseline`: the change in
/// `profit_token`, plus leftover Y at `residual` if given. `None` when a
/// held token ends lower.
pub(crate) fn measure(
    baseline: &ChainState,
    post: &ChainState,
    searcher: &Address,
    profit_token: &TokenId,
    token_y: &TokenId,
    hold: &[TokenId],
    residual: Option<&Price>,
) -> Result<Option<BigInt>, SimError> {
    for t in hold {
        if post.balance_of(t, searcher)? < baseline.balance_of(t, searcher)? {
            return Ok(None);
        }
    }
    let mut profit = post.balance_of(profit_token, searcher)? - baseline.balance_of(profit_token, searcher)?;
    if let Some(p) = residual {
        let left = post.balance_of(token_y, searcher)? - baseline.balance_of(token_y, searcher)?;
        if left.is_positive() {
            profit += left * &p.num / &p.den;
        }
    }
    Ok(Some(profit))
}

fn stale(what: impl std::fmt::Display) -> SearchError {
    SearchError::StaleState(what.to_string())
}

/// Bind `sc` to the observed `victims` (prefix calls first) and `state`.
pub fn instantiate_dynamic(
    sc: &StaticConstraint,
    victims: &[PendingTx],
    state: &ChainState,
    searcher: &Address,
    cfg: &Config,
) -> Result<DynamicConstraint, SearchError> {
    let victim_txs: Vec<Tx> = victims.iter().map(PendingTx::tx).collect();
    let victim_tx_id = victims.last().map(|v| v.id.clone()).ok_or_else(|| SearchError::NotApplicable("no victim".into()))?;
    state.token(&sc.token).map_err(|_| stale(format!("token {} not in state", sc.token)))?;
    let mut bindings = BTreeMap::new();
    for (venue, id) in &sc.pool_bindings {
        let p = state.pool(id).map_err(|_| stale(format!("pool {id} not in state")))?;
        if Some(&p.kind()) != sc.pool_kinds.get(venue) {
            return Err(stale(format!("pool {id} changed kind")));
        }
        let slot = venue.slot();
        bindings.insert(format!("fee_{slot}"), BigInt::from(p.fee_bps));
        match &p.state {
            PoolState::LendingFixed { price_num, price_den } => {
                bindings.insert(format!("pn_{slot}"), price_num.clone());
                bindings.insert(format!("pd_{slot}"), price_den.clone());
            }
            _ => {
                let (x, y) = state.spot_price_y_in_x(id)?;
                bindings.insert(format!("x_{slot}0"), x);
                bindings.insert(format!("y_{slot}0"), y);
            }
        }
    }
    let pool = |v: Venue| sc.pool_bindings.get(&v).map(|id| state.pool(id).expect("checked above"));
    let x_pool = pool(Venue::PoolQ).or(pool(Venue::PoolP)).ok_or_else(|| stale("no pool bound"))?;
    let token_x = x_pool.token_x.clone();
    let token_z = pool(Venue::PoolZ).map(|z| z.token_x.clone());

    let baseline = counterfactual(state, &victim_txs)
        .map_err(|e| SearchError::NotApplicable(format!("victim faults on the current state: {e}")))?;
    let sign = match baseline.supply(&sc.token)?.cmp(&state.supply(&sc.token)?) {
        std::cmp::Ordering::Greater => Some(TscSign::Positive),
        std::cmp::Ordering::Less => Some(TscSign::Negative),
        std::cmp::Ordering::Equal => None,
    };
    match (sc.template_id.sign(), sign) {
        (Some(TscSign::Negative), Some(TscSign::Negative)) => {}
        (Some(TscSign::Positive), Some(TscSign::Positive) | None) => {}
        (Some(want), got) => {
            return Err(SearchError::NotApplicable(format!("template needs a {want:?} supply change, victim gives {got:?}")))
        }
        (None, _) => {}
    }

    if let Some(tp) = &sc.tpath {
        let names = tp.args.concat();
        let observed: Vec<_> = victims.iter().flat_map(|v| v.args.iter()).collect();
        if names.len() == observed.len() {
            for (n, v) in names.iter().zip(observed) {
                if let Some(i) = v.as_int() {
                    bindings.insert(n.clone(), i);
                }
            }
        }
    } else if let Some(vin) = victims.last().and_then(|v| v.args.first()).and_then(|a| a.as_int()) {
        bindings.insert("vin".into(), vin);
    }

    let mut initial = BTreeMap::new();
    let mut after_victims = BTreeMap::new();
    for (h, t) in [("hX", Some(&token_x)), ("hY", Some(&sc.token)), ("hZ", token_z.as_ref())] {
        if let Some(t) = t {
            let b = state.balance_of(t, searcher)?;
            bindings.insert(format!("{h}0"), b.clone());
            initial.insert(t.clone(), b);
            after_victims.insert(t.clone(), baseline.balance_of(t, searcher)?);
        }
    }

    let legs = sc.legs();
    let free = legs.iter().find(|l| l.amount == Amount::Free).expect("every template has a free leg");
    let free_in = match (free.venue, free.action) {
        (Venue::PoolZ, _) => token_z.clone().expect("extension binds z"),
        (_, Action::SwapXy) => token_x.clone(),
        _ => sc.token.clone(),
    };
    let held = initial[&free_in].clone();
    let hi = if free_in == token_x { held.min(BigInt::from(cfg.budget)) } else { held };
    if hi < BigInt::one() {
        return Err(SearchError::NotApplicable(format!("searcher holds no {free_in}")));
    }
    let free_symbol = format!("d{}", if free_in == token_x { "X" } else if Some(&free_in) == token_z.as_ref() { "Z" } else { "Y" });

    let (profit_token, hold) = match &token_z {
        Some(z) if sc.extended => (z.clone(), vec![token_x.clone(), sc.token.clone()]),
        _ => (token_x.clone(), vec![sc.token.clone()]),
    };
    let residual_price = if cfg.value_residual_y && !sc.extended {
        let (num, den) = state.spot_price_y_in_x(&x_pool.id)?;
        (!den.is_zero()).then_some(Price { num, den })
    } else {
        None
    };
    Ok(DynamicConstraint {
        sc: sc.clone(),
        legs,
        victim_tx_id,
        victims: victim_txs,
        pre_state: state.clone(),
        searcher: searcher.clone(),
        bindings,
        free_symbol,
        lo: BigInt::one(),
        hi,
        profit_token,
        hold,
        residual_price,
        baseline,
        initial,
        after_victims,
    })
}

impl DynamicConstraint {
    fn pool_id(&self, v: Venue) -> &PoolId {
        &self.sc.pool_bindings[&v]
    }

    /// Are all searcher legs fixed-price? Then profit is linear in the free
    /// amount between faults.
    pub fn linear(&self) -> bool {
        self.legs
            .iter()
            .filter(|l| l.actor == Actor::Searcher)
            .all(|l| self.sc.pool_kinds.get(&l.venue) == Some(&PoolKind::LendingFixed))
    }

    fn searcher_tx(&self, st: &ChainState, leg: &Leg, amount: BigInt) -> PlanTx {
        let pool = self.pool_id(leg.venue);
        let lending = st.pool(pool).map(|p| p.kind() == PoolKind::LendingFixed).unwrap_or(false);
        let action = if lending { leg.action.on_lending() } else { leg.action };
        PlanTx {
            actor: Actor::Searcher,
            venue: leg.venue,
            action,
            sender: self.searcher.to_string(),
            target: pool.to_string(),
            function: action.function().to_string(),
            args: vec![crate::sim::Value::Int(amount)],
        }
    }

    fn input_token(&self, st: &ChainState, leg: &Leg) -> TokenId {
        let p = st.pool(self.pool_id(leg.venue)).expect("bound pool");
        if leg.action == Action::SwapXy {
            p.token_x.clone()
        } else {
            p.token_y.clone()
        }
    }

    /// Smallest input on `leg` after which the searcher's Y is back at the
    /// balance the victims alone would have left.
    fn restore_amount(&self, st: &ChainState, leg: &Leg) -> Option<BigInt> {
        let y = &self.sc.token;
        let target = &self.after_victims[y];
        if st.balance_of(y, &self.searcher).ok()? >= *target {
            return None;
        }
        let tin = self.input_token(st, leg);
        let ok = |a: &BigInt| {
            let mut t = st.clone();
            t.exec_tx(&self.searcher_tx(st, leg, a.clone()).tx()).is_ok()
                && t.balance_of(y, &self.searcher).is_ok_and(|b| b >= *target)
        };
        let mut hi = st.balance_of(&tin, &self.searcher).ok()?;
        if !hi.is_positive() || !ok(&hi) {
            return None;
        }
        let mut lo = BigInt::zero();
        while &hi - &lo > BigInt::one() {
            let mid: BigInt = (&lo + &hi) / 2;
            if ok(&mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Some(hi)
    }

    /// Build and run the bundle for free amount `v`. `None` if any leg
    /// faults, a derived amount is not positive, or a held token ends lower.
    pub fn evaluate(&self, v: &BigInt) -> Option<Evaluation> {
        let mut st = self.pre_state.clone();
        let mut bundle = Vec::new();
        let mut amounts = BTreeMap::new();
        let mut reference = &self.initial;
        for (i, leg) in self.legs.iter().enumerate() {
            if leg.actor == Actor::Victim {
                reference = &self.after_victims;
                for tx in &self.victims {
                    st.exec_tx(tx).ok()?;
                    let venue = if leg.action == Action::TscCall { Venue::Token } else { leg.venue };
                    bundle.push(PlanTx {
                        actor: Actor::Victim,
                        venue,
                        action: leg.action,
                        sender: tx.sender.to_string(),
                        target: tx.target.clone(),
                        function: tx.function.clone(),
                        args: tx.args.clone(),
                    });
                }
                continue;
            }
            let amount = match leg.amount {
                Amount::Free => v.clone(),
                Amount::Acquired => {
                    let t = self.input_token(&st, leg);
                    st.balance_of(&t, &self.searcher).ok()? - &reference[&t]
                }
                Amount::RestoreY => self.restore_amount(&st, leg)?,
                Amount::Observed => unreachable!("searcher legs are never observed"),
            };
            if !amount.is_positive() {
                return None;
            }
            let name = if leg.amount == Amount::Free { self.free_symbol.clone() } else { format!("d{i}") };
            amounts.insert(name, amount.clone());
            let ptx = self.searcher_tx(&st, leg, amount);
            st.exec_tx(&ptx.tx()).ok()?;
            bundle.push(ptx);
        }
        let profit = measure(
            &self.baseline,
            &st,
            &self.searcher,
            &self.profit_token,
            &self.sc.token,
            &self.hold,
            self.residual_price.as_ref(),
        )
        .ok()??;
        Some(Evaluation { bundle, profit, amounts })
    }
}
