use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};

use super::dynamic::{counterfactual, measure};
use super::template::Actor;
use super::{DynamicConstraint, MevPlan, PlanTx, SearchError};
use crate::sim::ChainState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverMethod {
    /// Endpoint comparison for objectives linear in the free amount.
    ClosedForm,
    GoldenSection,
}

/// Brackets at most this wide are searched exhaustively.
const EXHAUSTIVE_WIDTH: u32 = 64;

/// Integer golden-section search for the maximum of `f` on `[lo, hi]`,
/// finishing with an exhaustive scan of the last bracket. `None` values
/// (infeasible points) rank below every profit. Returns the best point.
pub fn golden_section_max(lo: &BigInt, hi: &BigInt, f: &mut dyn FnMut(&BigInt) -> Option<BigInt>) -> Option<(BigInt, BigInt)> {
    let mut memo: HashMap<BigInt, Option<BigInt>> = HashMap::new();
    let mut eval = |x: &BigInt, f: &mut dyn FnMut(&BigInt) -> Option<BigInt>| -> Option<BigInt> {
        memo.entry(x.clone()).or_insert_with(|| f(x)).clone()
    };
    let (mut a, mut b) = (lo.clone(), hi.clone());
    let width = BigInt::from(EXHAUSTIVE_WIDTH);
    while &b - &a > width {
        let span = &b - &a;
        let c = &b - &span * 618 / 1000;
        let d = &a + &span * 618 / 1000;
        if eval(&c, f) >= eval(&d, f) {
            b = d;
        } else {
            a = c;
        }
    }
    let mut best: Option<(BigInt, BigInt)> = None;
    let mut x = a;
    while x <= b {
        if let Some(p) = eval(&x, f) {
            if best.as_ref().is_none_or(|(_, bp)| p > *bp) {
                best = Some((x.clone(), p));
            }
        }
        x += 1;
    }
    best
}

/// Maximize the searcher's profit over the free amount, then replay the
/// winning bundle from the pre-state. Returns `None` when the best profit
/// is not positive.
pub fn solve(dc: &DynamicConstraint, max_iterations: usize) -> Result<Option<MevPlan>, SearchError> {
    let mut f = |v: &BigInt| dc.evaluate(v).map(|e| e.profit);
    let (method, best, iterations) = if dc.linear() {
        let ends = [dc.lo.clone(), dc.hi.clone()];
        let best = ends.into_iter().filter_map(|v| f(&v).map(|p| (v, p))).max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)));
        (SolverMethod::ClosedForm, best, 1)
    } else {
        let (mut lo, mut hi) = (dc.lo.clone(), dc.hi.clone());
        let mut best: Option<(BigInt, BigInt)> = None;
        let mut it = 0;
        loop {
            if it == max_iterations {
                return Err(SearchError::SolverTimeout(max_iterations));
            }
            it += 1;
            let round = golden_section_max(&lo, &hi, &mut f);
            let improved = match (&best, &round) {
                (None, Some(_)) => true,
                (Some((_, b)), Some((_, r))) => r - b >= BigInt::one(),
                _ => false,
            };
            if !improved {
                break;
            }
            best = round;
            let (x, _) = best.as_ref().expect("improved");
            let quarter = (&hi - &lo) / 4;
            let (l, h): (BigInt, BigInt) = (x - &quarter, x + &quarter);
            lo = l.max(dc.lo.clone());
            hi = h.min(dc.hi.clone());
        }
        (SolverMethod::GoldenSection, best, it)
    };
    let Some((v, profit)) = best else { return Ok(None) };
    if !profit.is_positive() {
        return Ok(None);
    }
    let eval = dc.evaluate(&v).expect("optimum is feasible");
    let plan = MevPlan {
        template_id: dc.sc.template_id,
        extended: dc.sc.extended,
        victim_tx_id: dc.victim_tx_id.clone(),
        token: dc.sc.token.clone(),
        pools: dc.sc.pool_bindings.clone(),
        searcher: dc.searcher.clone(),
        bundle: eval.bundle,
        solved_args: eval.amounts.iter().map(|(k, v)| (k.clone(), v.to_string())).collect::<BTreeMap<_, _>>(),
        profit,
        profit_token: dc.profit_token.clone(),
        hold: dc.hold.clone(),
        residual_price: dc.residual_price.clone(),
        solver: method,
        iterations,
        pre_state: dc.pre_state.fingerprint(),
    };
    let replayed = replay_plan(&dc.pre_state, &plan)?;
    if replayed != plan.profit {
        return Err(SearchError::ReplayMismatch { recorded: plan.profit, replayed });
    }
    Ok(Some(plan))
}

/// Execute a plan's bundle atomically on `state` and return the profit it
/// realizes. Fails with `StaleState` when `state` is not the state the plan
/// was solved against.
pub fn replay_plan(state: &ChainState, plan: &MevPlan) -> Result<BigInt, SearchError> {
    if state.fingerprint() != plan.pre_state {
        return Err(SearchError::StaleState(format!("state fingerprint differs from the plan's for victim {}", plan.victim_tx_id)));
    }
    let (post, _) = state.exec_bundle(&plan.txs())?;
    let victims: Vec<_> = plan.bundle.iter().filter(|t| t.actor == Actor::Victim).map(PlanTx::tx).collect();
    let baseline = counterfactual(state, &victims)?;
    let profit = measure(&baseline, &post, &plan.searcher, &plan.profit_token, &plan.token, &plan.hold, plan.residual_price.as_ref())?;
    profit.ok_or_else(|| SearchError::ReplayMismatch { recorded: plan.profit.clone(), replayed: BigInt::from(-1) })
}

/// Highest profit wins; ties go to the shorter bundle, then the smaller
/// template id. Plans without positive profit never win.
pub fn tournament(plans: Vec<MevPlan>) -> Option<MevPlan> {
    plans.into_iter().filter(|p| p.profit.is_positive()).min_by(|a, b| {
        b.profit
            .cmp(&a.profit)
            .then(a.bundle.len().cmp(&b.bundle.len()))
            .then(a.template_id.as_str().cmp(b.template_id.as_str()))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_interior_peak() {
        let peak = BigInt::from(73_421);
        let mut f = |x: &BigInt| Some(-(x - &peak) * (x - &peak));
        let (x, p) = golden_section_max(&BigInt::from(1), &BigInt::from(1_000_000), &mut f).unwrap();
        assert_eq!(x, peak);
        assert_eq!(p, BigInt::from(0));
    }

    #[test]
    fn golden_handles_boundary_and_infeasible_tail() {
        let mut f = |x: &BigInt| if *x > BigInt::from(5000) { None } else { Some(x.clone()) };
        let (x, _) = golden_section_max(&BigInt::from(1), &BigInt::from(100_000), &mut f).unwrap();
        assert_eq!(x, BigInt::from(5000));
        let mut g = |_: &BigInt| None;
        assert!(golden_section_max(&BigInt::from(1), &BigInt::from(10), &mut g).is_none());
    }
}
