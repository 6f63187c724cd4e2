//! tSCAN: tPath discovery on the tSDG, execution-path stitching and dynamic
//! supply-control validation.

mod discover;
mod stitch;
mod validate;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::Config;
use crate::graph::{construct_tsdg, GraphError, GraphOptions, NodeId};
use crate::lang::{self, ContractIR, Expr, LangError};
use crate::sim::{SimError, Value};

pub use discover::{discover_tpaths, is_arg_or_comp, Discovery};
pub use stitch::{negate, stitch_execution_path};
pub use validate::{validate_tsc, validation_fixture, Validator, VALIDATION_TOKEN};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScanError {
    #[error(transparent)]
    Lang(#[from] LangError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("infeasible stitch: {0}")]
    InfeasibleStitch(String),
    #[error("runtime fault: {0}")]
    RuntimeFault(SimError),
    #[error("no contract in the unit defines balanceOf")]
    NoTokenContract,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Candidate,
    Tsc1,
    Tsc1AndTsc2,
    Rejected,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Classification::Candidate => "candidate",
            Classification::Tsc1 => "tsc1",
            Classification::Tsc1AndTsc2 => "tsc1_and_tsc2",
            Classification::Rejected => "rejected",
        }
    }

    pub fn is_tsc(self) -> bool {
        matches!(self, Classification::Tsc1 | Classification::Tsc1AndTsc2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    Argument,
    CompoundAssignment,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallSite {
    pub function: String,
    /// Parameters renamed per call position, e.g. `t2_a0`.
    pub args: Vec<String>,
}

/// A branch condition that must hold, with names renamed per call.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathConstraint {
    pub call_index: usize,
    pub function: String,
    #[serde(with = "expr_text")]
    pub expr: Expr,
}

mod expr_text {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::lang::{self, Expr};

    pub fn serialize<S: Serializer>(e: &Expr, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&lang::expr_text(e))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Expr, D::Error> {
        let s = String::deserialize(d)?;
        lang::parse_expr(&s).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SharedG {
    Ratio,
    Difference,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessCall {
    pub sender: String,
    pub function: String,
    pub args: Vec<Value>,
}

/// The concrete execution that decided a classification.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    /// State variables set before the calls so the path constraints hold.
    pub seeded: BTreeMap<String, Value>,
    pub calls: Vec<WitnessCall>,
    pub supply_before: String,
    pub supply_after: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub shared_g: Option<SharedG>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TPath {
    pub root: NodeId,
    pub source: NodeId,
    pub source_kind: SourceKind,
    /// Source first, root last.
    pub node_chain: Vec<NodeId>,
    pub call_sequence: Vec<CallSite>,
    pub constraints: Vec<PathConstraint>,
    pub classification: Classification,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub reason: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub witness: Option<Witness>,
}

impl TPath {
    pub fn functions(&self) -> Vec<String> {
        self.call_sequence.iter().map(|c| c.function.clone()).collect()
    }

    /// Calls to execute before observing balances: everything but the
    /// trailing balanceOf.
    pub fn trigger_functions(&self) -> Vec<String> {
        let mut f = self.functions();
        f.pop();
        f
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    TscToken,
    NonTscToken,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::TscToken => "tsc_token",
            Verdict::NonTscToken => "non_tsc_token",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TscReport {
    pub contract: String,
    pub source: String,
    pub verdict: Verdict,
    pub tsc_kind_summary: BTreeMap<String, usize>,
    /// Tree paths whose call sequence exceeded the depth bound.
    pub dropped_by_depth: usize,
    pub tpaths: Vec<TPath>,
}

impl TscReport {
    fn assemble(contract: String, source: String, tpaths: Vec<TPath>, dropped_by_depth: usize) -> TscReport {
        let mut summary: BTreeMap<String, usize> = [
            Classification::Candidate,
            Classification::Tsc1,
            Classification::Tsc1AndTsc2,
            Classification::Rejected,
        ]
        .iter()
        .map(|c| (c.as_str().to_string(), 0))
        .collect();
        for t in &tpaths {
            *summary.get_mut(t.classification.as_str()).expect("all kinds present") += 1;
        }
        let verdict =
            if tpaths.iter().any(|t| t.classification.is_tsc()) { Verdict::TscToken } else { Verdict::NonTscToken };
        TscReport { contract, source, verdict, tsc_kind_summary: summary, dropped_by_depth, tpaths }
    }

    /// TSC-classified paths only.
    pub fn tsc_paths(&self) -> impl Iterator<Item = &TPath> {
        self.tpaths.iter().filter(|t| t.classification.is_tsc())
    }
}

/// Full pipeline for one contract: tSDG, tPaths, stitching and validation.
pub fn scan_ir(contract: &ContractIR, source_name: &str, cfg: &Config) -> Result<TscReport, ScanError> {
    let tsdg = construct_tsdg(contract, GraphOptions::from(cfg))?;
    let Discovery { tpaths, dropped_by_depth } = discover_tpaths(&tsdg, contract, cfg.depth);
    let mut validator = Validator::new(contract, cfg);
    let mut out = Vec::with_capacity(tpaths.len());
    for tp in tpaths {
        let tp = match stitch_execution_path(&tp, contract, &tsdg) {
            Ok(t) => t,
            Err(ScanError::InfeasibleStitch(why)) => {
                out.push(TPath { classification: Classification::Rejected, reason: Some(why), ..tp });
                continue;
            }
            Err(e) => return Err(e),
        };
        out.push(validator.classify(tp));
    }
    Ok(TscReport::assemble(contract.name.clone(), source_name.to_string(), out, dropped_by_depth))
}

/// Scan every contract in `source` that defines balanceOf.
pub fn scan_source(source_name: &str, source: &str, cfg: &Config) -> Result<Vec<TscReport>, ScanError> {
    let unit = lang::parse_named(source_name, source)?;
    let tokens: Vec<&ContractIR> = unit.contracts.iter().filter(|c| c.balance_of().is_some()).collect();
    if tokens.is_empty() {
        return Err(ScanError::NoTokenContract);
    }
    tokens.into_iter().map(|c| scan_ir(c, source_name, cfg)).collect()
}

/// Scan the first token contract in `source`.
pub fn scan_contract(source: &str, cfg: &Config) -> Result<TscReport, ScanError> {
    Ok(scan_source("<input>", source, cfg)?.remove(0))
}
