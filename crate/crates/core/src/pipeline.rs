//! End-to-end flows behind the CLI subcommands.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use num_bigint::BigInt;

use crate::config::Config;
use crate::par::{self, Mode};
use crate::scan::{scan_source, TscReport, Verdict};
use crate::search::{
    classify_pools, gen_static_constraints, gen_swap_baselines, instantiate_dynamic, replay_plan, solve, tournament,
    watch_and_match, MevPlan, PendingTx, SearchError, Template, WatchList,
};
use crate::sim::{ChainState, Fixture};

pub struct ScanOutput {
    pub path: PathBuf,
    pub result: Result<Vec<TscReport>, String>,
}

/// Scan each file; results come back in input order whatever the mode.
pub fn scan_files(paths: &[PathBuf], cfg: &Config, mode: Mode) -> Vec<ScanOutput> {
    par::map(mode, paths, |p| {
        let result = std::fs::read_to_string(p)
            .map_err(|e| format!("{}: {e}", p.display()))
            .and_then(|src| scan_source(&p.display().to_string(), &src, cfg).map_err(|e| format!("{}: {e}", p.display())));
        ScanOutput { path: p.clone(), result }
    })
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabelSummary {
    pub true_pos: usize,
    pub true_neg: usize,
    pub false_pos: Vec<String>,
    pub false_neg: Vec<String>,
    /// Labeled TSC but marked as not detectable at the configured depth.
    pub expected_misses: Vec<String>,
    pub unlabeled: Vec<String>,
}

/// Compare verdicts against a `file,contract,label,detected_at_depth_3`
/// table. Rows are matched on file name and contract.
pub fn check_labels(reports: &[TscReport], labels_csv: &str) -> LabelSummary {
    let mut labels: BTreeMap<(String, String), (bool, bool)> = BTreeMap::new();
    for line in labels_csv.lines().skip(1).filter(|l| !l.trim().is_empty()) {
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() < 3 {
            continue;
        }
        let detectable = cols.get(3).is_none_or(|c| *c != "no");
        labels.insert((cols[0].to_string(), cols[1].to_string()), (cols[2] == "tsc", detectable));
    }
    let mut s = LabelSummary::default();
    for r in reports {
        let file = Path::new(&r.source).file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
        let name = format!("{file}:{}", r.contract);
        let Some((tsc, detectable)) = labels.get(&(file, r.contract.clone())) else {
            s.unlabeled.push(name);
            continue;
        };
        let got = r.verdict == Verdict::TscToken;
        match (tsc, got) {
            (true, true) => s.true_pos += 1,
            (false, false) => s.true_neg += 1,
            (false, true) => s.false_pos.push(name),
            (true, false) if !detectable => s.expected_misses.push(name),
            (true, false) => s.false_neg.push(name),
        }
    }
    s
}

/// Static constraints for every fixture token instantiating a reported
/// contract, plus swap baselines on every pool.
pub fn build_watchlist(state: &ChainState, reports: &[TscReport], templates: &[Template]) -> WatchList {
    let pools = classify_pools(state);
    let mut w = WatchList::default();
    for r in reports {
        for t in state.tokens.values().filter(|t| t.contract.as_deref() == Some(r.contract.as_str())) {
            w.extend(gen_static_constraints(r, &t.id, &pools, templates));
        }
    }
    w.extend(gen_swap_baselines(&pools, templates));
    w
}

#[derive(Debug, Clone)]
pub struct VictimResult {
    pub victim_tx_id: String,
    /// Every replay-verified plan, in constraint order.
    pub candidates: Vec<MevPlan>,
    pub winner: Option<MevPlan>,
    /// Constraints skipped for this victim, with the reason.
    pub skipped: Vec<String>,
}

/// Match the mempool against the watch list and solve every matched
/// constraint on an independent copy of the fixture state. Results are in
/// stream order.
pub fn search(fixture: &Fixture, watch: &WatchList, mempool: &[PendingTx], cfg: &Config, mode: Mode) -> Vec<VictimResult> {
    let matches = watch_and_match(mempool, watch, cfg.window);
    let mut groups: Vec<Vec<&crate::search::Match>> = Vec::new();
    for m in &matches {
        match groups.last_mut() {
            Some(g) if g[0].victim() == m.victim() => g.push(m),
            _ => groups.push(vec![m]),
        }
    }
    par::map(mode, &groups, |group| {
        let mut candidates = Vec::new();
        let mut skipped = Vec::new();
        for m in group {
            for sc in &watch.entries[&m.key] {
                let tag = format!("{}[{}]", sc.template_id, sc.pool_bindings.values().map(|p| p.as_str()).collect::<Vec<_>>().join(","));
                let dc = match instantiate_dynamic(sc, &m.victims, &fixture.state, &fixture.searcher, cfg) {
                    Ok(dc) => dc,
                    Err(e) => {
                        skipped.push(format!("{tag}: {e}"));
                        continue;
                    }
                };
                match solve(&dc, cfg.solver_iterations) {
                    Ok(Some(plan)) => candidates.push(plan),
                    Ok(None) => skipped.push(format!("{tag}: no positive profit")),
                    Err(e) => skipped.push(format!("{tag}: {e}")),
                }
            }
        }
        let winner = tournament(candidates.clone());
        VictimResult { victim_tx_id: group[0].victim().id.clone(), candidates, winner, skipped }
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayOutcome {
    pub victim_tx_id: String,
    pub recorded: BigInt,
    pub result: Result<BigInt, SearchError>,
}

impl ReplayOutcome {
    pub fn verified(&self) -> bool {
        matches!(&self.result, Ok(p) if *p == self.recorded)
    }
}

pub fn replay_all(state: &ChainState, plans: &[MevPlan]) -> Vec<ReplayOutcome> {
    plans
        .iter()
        .map(|p| ReplayOutcome { victim_tx_id: p.victim_tx_id.clone(), recorded: p.profit.clone(), result: replay_plan(state, p) })
        .collect()
}

/// One JSON object per line.
pub fn plans_to_jsonl(plans: &[MevPlan]) -> String {
    plans.iter().map(|p| serde_json::to_string(p).expect("plans serialize") + "\n").collect()
}

pub fn plans_from_jsonl(text: &str) -> Result<Vec<MevPlan>, serde_json::Error> {
    text.lines().filter(|l| !l.trim().is_empty()).map(serde_json::from_str).collect()
}
