//! Search traces and the efficiency quantities derived from them.
//!
//! A trace stores pushes only. Each push carries its premises (backpointers)
//! and the rule applied, so the set of atoms that must have been popped is
//! the union of premises over all steps.

use std::collections::HashMap;

use indexmap::IndexSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::heuristics::HeuristicTable;
use crate::logic::{Atom, WeightTable};
use crate::weight::Weight;

/// One push: `premises ⊢_rule conclusion`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ProofStep {
    pub premises: Vec<Atom>,
    pub rule_index: usize,
    pub conclusion: Atom,
}

impl ProofStep {
    pub fn new(premises: Vec<Atom>, rule_index: usize, conclusion: Atom) -> Self {
        ProofStep {
            premises,
            rule_index,
            conclusion,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchTrace {
    pub program_id: String,
    pub goal: Option<Atom>,
    pub steps: Vec<ProofStep>,
}

impl SearchTrace {
    pub fn new(program_id: impl Into<String>, goal: Option<Atom>, steps: Vec<ProofStep>) -> Self {
        SearchTrace {
            program_id: program_id.into(),
            goal,
            steps,
        }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Keeps only the last push of each conclusion, dropping pushes that were
    /// superseded by a cheaper re-push.
    pub fn final_pushes_only(&self) -> SearchTrace {
        let mut last: HashMap<&Atom, usize> = HashMap::new();
        for (i, s) in self.steps.iter().enumerate() {
            last.insert(&s.conclusion, i);
        }
        let steps = self
            .steps
            .iter()
            .enumerate()
            .filter(|(i, s)| last[&s.conclusion] == *i)
            .map(|(_, s)| s.clone())
            .collect();
        SearchTrace::new(self.program_id.clone(), self.goal.clone(), steps)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TraceError {
    #[error("popped atom {0} is outside the minimal model")]
    OutsideModel(String),
    #[error("candidate trace is empty but the shortest proof has {0} steps")]
    EmptyCandidate(usize),
}

/// The unique premises of a trace in order of first appearance: the minimal
/// set of atoms that must have been popped to produce it.
pub fn pops_set(trace: &SearchTrace) -> IndexSet<Atom> {
    trace
        .steps
        .iter()
        .flat_map(|s| s.premises.iter().cloned())
        .collect()
}

/// Sum of `w + h` over the pop set; infinite if any popped atom has `h = ∞`.
pub fn raw_score(
    trace: &SearchTrace,
    weights: &WeightTable,
    heuristic: &HeuristicTable,
) -> Result<Weight, TraceError> {
    raw_score_capped(trace, weights, heuristic, None)
}

/// `raw_score` with infinite heuristic values replaced by `h_cap` when given.
pub fn raw_score_capped(
    trace: &SearchTrace,
    weights: &WeightTable,
    heuristic: &HeuristicTable,
    h_cap: Option<u64>,
) -> Result<Weight, TraceError> {
    let mut total = Weight::ZERO;
    for atom in pops_set(trace) {
        let w = weights.get(&atom);
        if !w.is_finite() {
            return Err(TraceError::OutsideModel(atom.to_string()));
        }
        let h = match (heuristic.get(&atom), h_cap) {
            (Weight::Infinite, Some(cap)) => Weight::Finite(cap),
            (h, _) => h,
        };
        total = total + w + h;
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EfficiencyMode {
    Pushes,
    Pops,
}

/// Ratio of the shortest proof's count to the candidate's, clamped to 1.
pub fn efficiency(
    trace: &SearchTrace,
    shortest: &SearchTrace,
    mode: EfficiencyMode,
) -> Result<f64, TraceError> {
    let (candidate, reference) = match mode {
        EfficiencyMode::Pushes => (trace.len(), shortest.len()),
        EfficiencyMode::Pops => (pops_set(trace).len(), pops_set(shortest).len()),
    };
    match (candidate, reference) {
        (0, 0) => Ok(1.0),
        (0, r) => Err(TraceError::EmptyCandidate(r)),
        (c, r) => Ok((r as f64 / c as f64).min(1.0)),
    }
}

/// Items verbalized across all steps: `K` premises, `K + 1` atoms in the
/// rule and one conclusion per step.
pub fn verbalization_length(trace: &SearchTrace) -> usize {
    trace.steps.iter().map(|s| 2 * s.premises.len() + 2).sum()
}
