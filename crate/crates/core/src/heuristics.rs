//! Heuristic tables for A*: zero, the unary dependency relaxation and the
//! true cost-to-go, plus consistency and admissibility checks.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::logic::{
    apply_substitution, herbrand_base, join_premises, match_atom, minimal_model, Atom, Program,
    Substitution, Term, Tuples, WeightTable,
};
use crate::search::CostFunction;
use crate::weight::Weight;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HeuristicKind {
    #[serde(rename = "zero")]
    Zero,
    #[serde(rename = "dependency")]
    Dependency,
    #[serde(rename = "true")]
    TrueCostToGo,
    #[serde(rename = "custom")]
    Custom,
}

impl HeuristicKind {
    pub fn as_str(self) -> &'static str {
        match self {
            HeuristicKind::Zero => "zero",
            HeuristicKind::Dependency => "dependency",
            HeuristicKind::TrueCostToGo => "true",
            HeuristicKind::Custom => "custom",
        }
    }
}

impl fmt::Display for HeuristicKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for HeuristicKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "zero" | "dijkstra" => Ok(HeuristicKind::Zero),
            "dependency" | "dep" => Ok(HeuristicKind::Dependency),
            "true" | "true-cost-to-go" => Ok(HeuristicKind::TrueCostToGo),
            _ => Err(format!("unknown heuristic {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HeuristicError {
    #[error("goal {0} is not in the Herbrand base")]
    GoalNotInHerbrandBase(String),
    #[error("goal {0} is not provable")]
    Unprovable(String),
    #[error("custom heuristic tables cannot be built from a program")]
    NotBuildable,
}

/// Per-atom heuristic values for one goal. Atoms without an explicit entry
/// read as `default`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeuristicTable {
    goal: Atom,
    kind: HeuristicKind,
    values: HashMap<Atom, Weight>,
    default: Weight,
    unprovable: bool,
}

impl HeuristicTable {
    pub fn zero(goal: Atom) -> Self {
        HeuristicTable {
            goal,
            kind: HeuristicKind::Zero,
            values: HashMap::new(),
            default: Weight::ZERO,
            unprovable: false,
        }
    }

    /// A hand-built table, e.g. for probing the consistency checker.
    pub fn custom<I>(goal: Atom, values: I, default: Weight) -> Self
    where
        I: IntoIterator<Item = (Atom, Weight)>,
    {
        HeuristicTable {
            goal,
            kind: HeuristicKind::Custom,
            values: values.into_iter().collect(),
            default,
            unprovable: false,
        }
    }

    pub fn get(&self, atom: &Atom) -> Weight {
        self.values.get(atom).copied().unwrap_or(self.default)
    }

    pub fn goal(&self) -> &Atom {
        &self.goal
    }

    pub fn kind(&self) -> HeuristicKind {
        self.kind
    }

    /// Set on true cost-to-go tables built for an unprovable goal.
    pub fn is_unprovable(&self) -> bool {
        self.unprovable
    }

    /// Values over the Herbrand base keyed by the atom's textual form.
    pub fn dump(&self, program: &Program) -> BTreeMap<String, Weight> {
        herbrand_base(program)
            .into_iter()
            .map(|a| {
                let h = self.get(&a);
                (a.to_string(), h)
            })
            .collect()
    }
}

pub fn zero_heuristic(_program: &Program, goal: &Atom) -> HeuristicTable {
    HeuristicTable::zero(goal.clone())
}

/// Cost-to-go in the unary relaxation: every ground instantiation over the
/// Herbrand base contributes one unit edge from each premise to its
/// conclusion, and `h` is the edge distance to the goal.
pub fn dependency_heuristic(program: &Program, goal: &Atom) -> Result<HeuristicTable, HeuristicError> {
    if !program.is_in_herbrand_base(goal) {
        return Err(HeuristicError::GoalNotInHerbrandBase(goal.to_string()));
    }
    let mut dist: HashMap<Atom, Weight> = HashMap::new();
    dist.insert(goal.clone(), Weight::ZERO);
    let mut queue = VecDeque::from([(goal.clone(), 0u64)]);
    while let Some((c, d)) = queue.pop_front() {
        for rule in program.rules() {
            let Some(seed) = match_atom(&rule.conclusion, &c, &Substitution::new()) else {
                continue;
            };
            let free: Vec<&str> = rule
                .vars()
                .into_iter()
                .filter(|v| seed.get(v).is_none())
                .collect();
            for choice in Tuples::new(program.constants().len(), free.len()) {
                let mut sub = seed.clone();
                for (v, &ci) in free.iter().zip(&choice) {
                    sub.bind(*v, Term::constant(program.constants()[ci].clone()))
                        .expect("free variables are unbound");
                }
                for p in &rule.premises {
                    let b = apply_substitution(p, &sub);
                    if !dist.contains_key(&b) {
                        dist.insert(b.clone(), Weight::Finite(d + 1));
                        queue.push_back((b, d + 1));
                    }
                }
            }
        }
    }
    Ok(HeuristicTable {
        goal: goal.clone(),
        kind: HeuristicKind::Dependency,
        values: dist,
        default: Weight::Infinite,
        unprovable: false,
    })
}

fn facts_by_pred(model: &WeightTable) -> HashMap<String, Vec<Atom>> {
    let mut facts: HashMap<String, Vec<Atom>> = HashMap::new();
    for a in model.atoms() {
        facts.entry(a.pred.clone()).or_default().push(a.clone());
    }
    facts
}

/// Ground instantiations whose premises all lie in the model, each with its
/// rule index.
fn model_instantiations(program: &Program, model: &WeightTable) -> Vec<(usize, Vec<Atom>, Atom)> {
    let facts = facts_by_pred(model);
    let mut out = Vec::new();
    for (ri, rule) in program.rules().iter().enumerate() {
        join_premises(&rule.premises, None, &Substitution::new(), &facts, &mut |sub| {
            let premises = rule.premises.iter().map(|p| apply_substitution(p, sub)).collect();
            out.push((ri, premises, apply_substitution(&rule.conclusion, sub)));
        });
    }
    out
}

/// Outside weights on atoms that appear in a shortest proof of the goal
/// (`h = w*_G - w`), infinity elsewhere.
///
/// On-path atoms are found by walking backwards from the goal across tight
/// instantiations, those where the cost function applied to the premise
/// weights equals the conclusion weight.
pub fn true_cost_to_go(
    program: &Program,
    goal: &Atom,
    cost: CostFunction,
) -> Result<HeuristicTable, HeuristicError> {
    if !program.is_in_herbrand_base(goal) {
        return Err(HeuristicError::GoalNotInHerbrandBase(goal.to_string()));
    }
    let model = minimal_model(program, cost);
    Ok(true_cost_to_go_with_model(program, goal, cost, &model))
}

pub(crate) fn true_cost_to_go_with_model(
    program: &Program,
    goal: &Atom,
    cost: CostFunction,
    model: &WeightTable,
) -> HeuristicTable {
    let Weight::Finite(goal_weight) = model.get(goal) else {
        return HeuristicTable {
            goal: goal.clone(),
            kind: HeuristicKind::TrueCostToGo,
            values: HashMap::new(),
            default: Weight::Infinite,
            unprovable: true,
        };
    };
    let facts = facts_by_pred(model);
    let mut values = HashMap::new();
    values.insert(goal.clone(), Weight::ZERO);
    let mut queue = VecDeque::from([goal.clone()]);
    while let Some(c) = queue.pop_front() {
        let Weight::Finite(wc) = model.get(&c) else {
            continue;
        };
        for rule in program.rules() {
            let Some(seed) = match_atom(&rule.conclusion, &c, &Substitution::new()) else {
                continue;
            };
            let mut tight = Vec::new();
            join_premises(&rule.premises, None, &seed, &facts, &mut |sub| {
                let premises: Vec<Atom> =
                    rule.premises.iter().map(|p| apply_substitution(p, sub)).collect();
                let ws: Vec<u64> = premises
                    .iter()
                    .map(|p| model.get(p).finite().expect("joined against the model"))
                    .collect();
                if cost.combine(&ws) == wc {
                    tight.push(premises);
                }
            });
            for b in tight.into_iter().flatten() {
                if !values.contains_key(&b) {
                    let wb = model.get(&b).finite().expect("in model");
                    values.insert(b.clone(), Weight::Finite(goal_weight - wb));
                    queue.push_back(b);
                }
            }
        }
    }
    HeuristicTable {
        goal: goal.clone(),
        kind: HeuristicKind::TrueCostToGo,
        values,
        default: Weight::Infinite,
        unprovable: false,
    }
}

/// Builds a table of the given kind.
pub fn build_heuristic(
    program: &Program,
    goal: &Atom,
    kind: HeuristicKind,
    cost: CostFunction,
) -> Result<HeuristicTable, HeuristicError> {
    match kind {
        HeuristicKind::Zero => Ok(zero_heuristic(program, goal)),
        HeuristicKind::Dependency => dependency_heuristic(program, goal),
        HeuristicKind::TrueCostToGo => true_cost_to_go(program, goal, cost),
        HeuristicKind::Custom => Err(HeuristicError::NotBuildable),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConsistencyViolation {
    pub rule_index: usize,
    pub premises: Vec<String>,
    pub conclusion: String,
    pub slot: usize,
    /// `w(b_k) + h(b_k)`
    pub lhs: Weight,
    /// `g(w(b_1), ..., w(b_K)) + h(c)`
    pub rhs: Weight,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ConsistencyReport {
    pub checked: usize,
    pub violations: Vec<ConsistencyViolation>,
}

impl ConsistencyReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks `w(b_k) + h(b_k) <= g(w(b_1..K)) + h(c)` on every ground
/// instantiation within the minimal model whose atoms all have finite `h`.
pub fn check_consistency(
    heuristic: &HeuristicTable,
    program: &Program,
    cost: CostFunction,
) -> ConsistencyReport {
    let model = minimal_model(program, cost);
    let mut report = ConsistencyReport::default();
    for (ri, premises, conclusion) in model_instantiations(program, &model) {
        let hc = heuristic.get(&conclusion);
        let hs: Vec<Weight> = premises.iter().map(|p| heuristic.get(p)).collect();
        if !hc.is_finite() || hs.iter().any(|h| !h.is_finite()) {
            continue;
        }
        report.checked += 1;
        let ws: Vec<Weight> = premises.iter().map(|p| model.get(p)).collect();
        let rhs = cost.combine_weights(&ws) + hc;
        for (slot, (w, h)) in ws.iter().zip(&hs).enumerate() {
            let lhs = *w + *h;
            if lhs > rhs {
                report.violations.push(ConsistencyViolation {
                    rule_index: ri,
                    premises: premises.iter().map(ToString::to_string).collect(),
                    conclusion: conclusion.to_string(),
                    slot,
                    lhs,
                    rhs,
                });
            }
        }
    }
    report
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AdmissibilityViolation {
    pub atom: String,
    pub heuristic: Weight,
    pub true_cost_to_go: Weight,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct AdmissibilityReport {
    pub checked: usize,
    pub violations: Vec<AdmissibilityViolation>,
}

impl AdmissibilityReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks `h <= h_true` pointwise on the minimal model.
pub fn check_admissibility(
    heuristic: &HeuristicTable,
    program: &Program,
    goal: &Atom,
    cost: CostFunction,
) -> Result<AdmissibilityReport, HeuristicError> {
    if !program.is_in_herbrand_base(goal) {
        return Err(HeuristicError::GoalNotInHerbrandBase(goal.to_string()));
    }
    let model = minimal_model(program, cost);
    let truth = true_cost_to_go_with_model(program, goal, cost, &model);
    if truth.is_unprovable() {
        return Err(HeuristicError::Unprovable(goal.to_string()));
    }
    let mut report = AdmissibilityReport::default();
    for atom in model.atoms() {
        report.checked += 1;
        let h = heuristic.get(atom);
        let t = truth.get(atom);
        if h > t {
            report.violations.push(AdmissibilityViolation {
                atom: atom.to_string(),
                heuristic: h,
                true_cost_to_go: t,
            });
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct CacheKey {
    program: String,
    goal: Atom,
    kind: HeuristicKind,
    cost: CostFunction,
}

/// Memoizes heuristic tables per (program key, goal, kind, cost). Lookups
/// may race; a duplicate build produces an identical table and the first
/// insert wins.
#[derive(Debug, Default)]
pub struct HeuristicCache {
    tables: RwLock<HashMap<CacheKey, Arc<HeuristicTable>>>,
}

impl HeuristicCache {
    pub fn new() -> Self {
        HeuristicCache::default()
    }

    pub fn get_or_build(
        &self,
        program_key: &str,
        program: &Program,
        goal: &Atom,
        kind: HeuristicKind,
        cost: CostFunction,
    ) -> Result<Arc<HeuristicTable>, HeuristicError> {
        let key = CacheKey {
            program: program_key.to_string(),
            goal: goal.clone(),
            kind,
            cost,
        };
        if let Some(t) = self.tables.read().expect("cache lock").get(&key) {
            return Ok(Arc::clone(t));
        }
        let table = Arc::new(build_heuristic(program, goal, kind, cost)?);
        let mut tables = self.tables.write().expect("cache lock");
        Ok(Arc::clone(tables.entry(key).or_insert(table)))
    }

    pub fn len(&self) -> usize {
        self.tables.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
