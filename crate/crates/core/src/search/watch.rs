use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::StaticConstraint;
use crate::sim::{Tx, Value};

/// A target contract, the function whose pending call triggers a match, and
/// the calls that must precede it in the window.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct WatchKey {
    pub target: String,
    pub function: String,
    #[serde(default)]
    pub prefix: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WatchEntry {
    pub key: WatchKey,
    pub constraints: Vec<StaticConstraint>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WatchList {
    pub entries: BTreeMap<WatchKey, Vec<StaticConstraint>>,
}

impl WatchList {
    pub fn new(constraints: impl IntoIterator<Item = StaticConstraint>) -> WatchList {
        let mut w = WatchList::default();
        w.extend(constraints);
        w
    }

    pub fn extend(&mut self, constraints: impl IntoIterator<Item = StaticConstraint>) {
        for c in constraints {
            let list = self.entries.entry(c.key.clone()).or_default();
            if !list.contains(&c) {
                list.push(c);
            }
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_entries(&self) -> Vec<WatchEntry> {
        self.entries.iter().map(|(k, c)| WatchEntry { key: k.clone(), constraints: c.clone() }).collect()
    }
}

/// One pending transaction record of the mempool stream.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PendingTx {
    pub id: String,
    pub sender: String,
    pub target: String,
    pub function: String,
    #[serde(default)]
    pub args: Vec<Value>,
}

impl PendingTx {
    pub fn tx(&self) -> Tx {
        Tx::new(&self.sender, &self.target, &self.function, self.args.clone())
    }
}

/// Parse a JSON-lines stream. Blank lines are ignored and malformed records
/// are skipped with a warning.
pub fn parse_mempool(text: &str) -> Vec<PendingTx> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .filter_map(|(i, l)| match serde_json::from_str::<PendingTx>(l) {
            Ok(tx) => Some(tx),
            Err(e) => {
                log::warn!("mempool line {}: skipped: {e}", i + 1);
                None
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Match {
    /// Prefix calls found in the window, then the triggering call.
    pub victims: Vec<PendingTx>,
    pub key: WatchKey,
}

impl Match {
    pub fn victim(&self) -> &PendingTx {
        self.victims.last().expect("match has a trigger")
    }
}

/// Match the stream against the watch list in stream order. A key with a
/// prefix matches when the prefix calls appear in order, on the same
/// target, among the `window` transactions before the trigger.
pub fn watch_and_match(stream: &[PendingTx], watch: &WatchList, window: usize) -> Vec<Match> {
    let mut out = Vec::new();
    for (i, tx) in stream.iter().enumerate() {
        for key in watch.entries.keys() {
            if key.target != tx.target || key.function != tx.function {
                continue;
            }
            let recent = &stream[i.saturating_sub(window)..i];
            let mut found = Vec::with_capacity(key.prefix.len());
            let mut want = key.prefix.iter().rev().peekable();
            for p in recent.iter().rev() {
                match want.peek() {
                    Some(f) if p.target == tx.target && &&p.function == f => {
                        found.push(p.clone());
                        want.next();
                    }
                    Some(_) => {}
                    None => break,
                }
            }
            if want.peek().is_some() {
                continue;
            }
            found.reverse();
            found.push(tx.clone());
            out.push(Match { victims: found, key: key.clone() });
        }
    }
    out
}
