//! Generalized A* over the implicit B-hypergraph of a logic program.
//!
//! Vertices are ground atoms and hyperedges are ground instantiations of
//! rules; neither is materialized. When an atom is popped into the chart, the
//! rules with a premise on its predicate are joined against the chart to
//! discover the instantiations it unlocks.
//!
//! The agenda uses lazy deletion: an improved weight re-pushes the atom and
//! any stale entry is discarded when popped if its atom is already charted.
//! Among equal priorities the lower heuristic value pops first, then the most
//! recent push.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use indexmap::IndexSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::heuristics::HeuristicTable;
use crate::logic::{apply_substitution, join_premises, match_atom, Atom, Program, WeightTable};
use crate::trace::{ProofStep, SearchTrace};
use crate::weight::Weight;

/// A hyperedge: the rule index with its ground premises and conclusion.
pub type GroundInstantiation = ProofStep;

/// Per-rule aggregation of premise weights.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CostFunction {
    /// `1 + max_k w_k`, axioms weigh 0. Proof size is depth.
    #[default]
    Depth,
    /// `1 + Σ_k w_k`, axioms weigh 1. Proof size is the number of vertices.
    VertexCount,
}

impl CostFunction {
    pub fn axiom_weight(self) -> u64 {
        match self {
            CostFunction::Depth => 0,
            CostFunction::VertexCount => 1,
        }
    }

    pub fn combine(self, premise_weights: &[u64]) -> u64 {
        let agg = match self {
            CostFunction::Depth => premise_weights.iter().copied().max().unwrap_or(0),
            CostFunction::VertexCount => premise_weights
                .iter()
                .fold(0u64, |acc, &w| acc.saturating_add(w)),
        };
        agg.saturating_add(1)
    }

    /// `combine` lifted to extended weights; any infinite premise gives infinity.
    pub fn combine_weights(self, premise_weights: &[Weight]) -> Weight {
        let finite: Option<Vec<u64>> = premise_weights.iter().map(|w| w.finite()).collect();
        finite.map_or(Weight::Infinite, |ws| Weight::Finite(self.combine(&ws)))
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CostFunction::Depth => "depth",
            CostFunction::VertexCount => "vertex-count",
        }
    }
}

impl fmt::Display for CostFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CostFunction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "depth" => Ok(CostFunction::Depth),
            "vertex-count" | "vertices" => Ok(CostFunction::VertexCount),
            _ => Err(format!("unknown cost function {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SearchError {
    #[error("goal {0} is not in the Herbrand base")]
    GoalNotInHerbrandBase(String),
    #[error("goal {0} is not provable")]
    Unprovable(String),
    #[error("search result has no goal")]
    NoGoal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct AgendaEntry {
    priority: u64,
    heuristic: u64,
    seq: u64,
    weight: u64,
    atom: usize,
}

impl Ord for AgendaEntry {
    // BinaryHeap pops the greatest entry: lowest f, then lowest h, then latest push.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .priority
            .cmp(&self.priority)
            .then_with(|| other.heuristic.cmp(&self.heuristic))
            .then_with(|| self.seq.cmp(&other.seq))
    }
}

impl PartialOrd for AgendaEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A popped atom with the priority it had when it entered the chart.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Pop {
    pub atom: Atom,
    pub weight: u64,
    pub heuristic: u64,
}

impl Pop {
    pub fn priority(&self) -> u64 {
        self.weight + self.heuristic
    }
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub goal: Option<Atom>,
    /// `w*_G`, or infinity when the goal was never popped.
    pub goal_weight: Weight,
    /// Every executed non-axiom push, in order.
    pub trace: SearchTrace,
    /// Atoms in the order they entered the chart.
    pub pops: Vec<Pop>,
    /// Number of agenda pushes including axioms.
    pub agenda_pushes: usize,
    weights: HashMap<Atom, u64>,
    backpointers: HashMap<Atom, GroundInstantiation>,
}

impl SearchResult {
    /// Current weight of an atom: final for charted atoms, best known otherwise.
    pub fn weight(&self, atom: &Atom) -> Weight {
        self.weights
            .get(atom)
            .map_or(Weight::Infinite, |&w| Weight::Finite(w))
    }

    pub fn backpointer(&self, atom: &Atom) -> Option<&GroundInstantiation> {
        self.backpointers.get(atom)
    }

    pub fn in_chart(&self, atom: &Atom) -> bool {
        self.pops.iter().any(|p| &p.atom == atom)
    }

    pub fn chart(&self) -> impl Iterator<Item = &Atom> {
        self.pops.iter().map(|p| &p.atom)
    }

    /// Weights of the charted atoms.
    pub fn chart_weights(&self) -> WeightTable {
        self.pops
            .iter()
            .map(|p| (p.atom.clone(), p.weight))
            .collect()
    }

    pub fn pop_count(&self) -> usize {
        self.pops.len()
    }

    pub fn is_provable(&self) -> bool {
        self.goal_weight.is_finite()
    }
}

/// Runs A* from the program's axioms towards `goal`.
///
/// Stops when the goal is popped unless `exhaustive` is set, in which case
/// the agenda is drained. Atoms whose heuristic value is infinite are never
/// pushed.
pub fn astar(
    program: &Program,
    goal: &Atom,
    heuristic: &HeuristicTable,
    cost: CostFunction,
    exhaustive: bool,
) -> Result<SearchResult, SearchError> {
    if !program.is_in_herbrand_base(goal) {
        return Err(SearchError::GoalNotInHerbrandBase(goal.to_string()));
    }
    Ok(run(program, Some(goal), &|a| heuristic.get(a), cost, exhaustive))
}

pub(crate) fn exhaustive_weights(program: &Program, cost: CostFunction) -> WeightTable {
    run(program, None, &|_| Weight::ZERO, cost, true).chart_weights()
}

struct Engine<'a> {
    program: &'a Program,
    heuristic: &'a dyn Fn(&Atom) -> Weight,
    cost: CostFunction,
    atoms: IndexSet<Atom>,
    h: Vec<Weight>,
    weight: Vec<Option<u64>>,
    charted: Vec<bool>,
    chart_by_pred: HashMap<String, Vec<Atom>>,
    backpointer: Vec<Option<GroundInstantiation>>,
    agenda: BinaryHeap<AgendaEntry>,
    seq: u64,
    steps: Vec<ProofStep>,
    pops: Vec<Pop>,
}

impl<'a> Engine<'a> {
    fn intern(&mut self, atom: &Atom) -> usize {
        if let Some(id) = self.atoms.get_index_of(atom) {
            return id;
        }
        let (id, _) = self.atoms.insert_full(atom.clone());
        self.h.push((self.heuristic)(atom));
        self.weight.push(None);
        self.charted.push(false);
        self.backpointer.push(None);
        id
    }

    fn push(&mut self, id: usize, w: u64) {
        let Weight::Finite(h) = self.h[id] else {
            return;
        };
        self.weight[id] = Some(w);
        self.agenda.push(AgendaEntry {
            priority: w.saturating_add(h),
            heuristic: h,
            seq: self.seq,
            weight: w,
            atom: id,
        });
        self.seq += 1;
    }

    /// Instantiations unlocked by the newly charted atom, deduplicated, in
    /// rule order then slot order then chart order.
    fn unlocked(&self, popped: &Atom) -> Vec<(usize, Vec<Atom>, Atom)> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for &(ri, slot) in self.program.rules_with_premise(&popped.pred) {
            let rule = &self.program.rules()[ri];
            let Some(seed) = match_atom(&rule.premises[slot], popped, &Default::default()) else {
                continue;
            };
            join_premises(
                &rule.premises,
                Some(slot),
                &seed,
                &self.chart_by_pred,
                &mut |sub| {
                    let premises: Vec<Atom> = rule
                        .premises
                        .iter()
                        .map(|p| apply_substitution(p, sub))
                        .collect();
                    if seen.insert((ri, premises.clone())) {
                        let conclusion = apply_substitution(&rule.conclusion, sub);
                        out.push((ri, premises, conclusion));
                    }
                },
            );
        }
        out
    }
}

fn run(
    program: &Program,
    goal: Option<&Atom>,
    heuristic: &dyn Fn(&Atom) -> Weight,
    cost: CostFunction,
    exhaustive: bool,
) -> SearchResult {
    let mut e = Engine {
        program,
        heuristic,
        cost,
        atoms: IndexSet::new(),
        h: Vec::new(),
        weight: Vec::new(),
        charted: Vec::new(),
        chart_by_pred: HashMap::new(),
        backpointer: Vec::new(),
        agenda: BinaryHeap::new(),
        seq: 0,
        steps: Vec::new(),
        pops: Vec::new(),
    };
    let goal_id = goal.map(|g| e.intern(g));

    for axiom in program.axioms() {
        let id = e.intern(axiom);
        if e.weight[id].is_none() {
            e.push(id, cost.axiom_weight());
        }
    }

    while let Some(entry) = e.agenda.pop() {
        let id = entry.atom;
        if e.charted[id] {
            continue;
        }
        e.charted[id] = true;
        let atom = e.atoms[id].clone();
        let Weight::Finite(h) = e.h[id] else {
            unreachable!("atoms with infinite heuristic are never pushed");
        };
        e.pops.push(Pop {
            atom: atom.clone(),
            weight: entry.weight,
            heuristic: h,
        });
        e.chart_by_pred
            .entry(atom.pred.clone())
            .or_default()
            .push(atom.clone());
        if Some(id) == goal_id && !exhaustive {
            break;
        }

        for (ri, premises, conclusion) in e.unlocked(&atom) {
            let cid = e.intern(&conclusion);
            if e.charted[cid] || !e.h[cid].is_finite() {
                continue;
            }
            let premise_weights: Vec<u64> = premises
                .iter()
                .map(|p| {
                    let pid = e.atoms.get_index_of(p).expect("premise is charted");
                    e.weight[pid].expect("charted atoms have weights")
                })
                .collect();
            let w = e.cost.combine(&premise_weights);
            if e.weight[cid].is_some_and(|old| old <= w) {
                continue;
            }
            let step = ProofStep::new(premises, ri, conclusion);
            e.backpointer[cid] = Some(step.clone());
            e.steps.push(step);
            e.push(cid, w);
        }
    }

    let goal_weight = match goal_id {
        Some(g) if e.charted[g] => Weight::Finite(e.weight[g].expect("charted")),
        _ => Weight::Infinite,
    };
    let agenda_pushes = e.seq as usize;
    let mut weights = HashMap::new();
    let mut backpointers = HashMap::new();
    for (id, atom) in e.atoms.iter().enumerate() {
        if let Some(w) = e.weight[id] {
            weights.insert(atom.clone(), w);
        }
        if let Some(bp) = e.backpointer[id].take() {
            backpointers.insert(atom.clone(), bp);
        }
    }
    SearchResult {
        goal: goal.cloned(),
        goal_weight,
        trace: SearchTrace::new(program.id.clone(), goal.cloned(), e.steps),
        pops: e.pops,
        agenda_pushes,
        weights,
        backpointers,
    }
}

/// The shortest proof found by the search: a backward traversal of
/// backpointers from the goal emitted premises-first, each atom once.
pub fn extract_shortest_proof(result: &SearchResult) -> Result<Vec<GroundInstantiation>, SearchError> {
    let goal = result.goal.as_ref().ok_or(SearchError::NoGoal)?;
    if !result.goal_weight.is_finite() {
        return Err(SearchError::Unprovable(goal.to_string()));
    }
    let mut out = Vec::new();
    let mut visited = HashSet::new();
    // iterative post-order DFS
    let mut stack: Vec<(&Atom, bool)> = vec![(goal, false)];
    while let Some((atom, expanded)) = stack.pop() {
        let Some(bp) = result.backpointers.get(atom) else {
            continue;
        };
        if expanded {
            out.push(bp.clone());
            continue;
        }
        if !visited.insert(atom) {
            continue;
        }
        stack.push((atom, true));
        for p in bp.premises.iter().rev() {
            if !visited.contains(p) {
                stack.push((p, false));
            }
        }
    }
    Ok(out)
}
