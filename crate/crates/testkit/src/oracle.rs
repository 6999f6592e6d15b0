//! Naive reference implementations. Everything is enumerated over the full
//! Herbrand base, so these are only usable on small programs.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use astar_deduce::{Atom, CostFunction, Program, ProofStep, Term};

/// A ground instantiation `(rule index, premises, conclusion)`.
pub type Instantiation = (usize, Vec<Atom>, Atom);

fn ground(atom: &Atom, binding: &BTreeMap<&str, &str>) -> Atom {
    Atom::new(
        atom.pred.clone(),
        atom.args
            .iter()
            .map(|t| match t {
                Term::Var(v) => Term::Const(binding[v.as_str()].to_string()),
                Term::Const(c) => Term::Const(c.clone()),
            })
            .collect(),
    )
}

/// Every ground instantiation of every rule over the declared constants.
pub fn all_instantiations(program: &Program) -> Vec<Instantiation> {
    let consts = program.constants();
    let mut out = Vec::new();
    for (ri, rule) in program.rules().iter().enumerate() {
        let vars: Vec<&str> = rule
            .premises
            .iter()
            .chain(std::iter::once(&rule.conclusion))
            .flat_map(|a| a.vars())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let total = consts.len().pow(vars.len() as u32);
        for mut code in 0..total {
            let mut binding = BTreeMap::new();
            for v in &vars {
                binding.insert(*v, consts[code % consts.len()].as_str());
                code /= consts.len();
            }
            let premises = rule.premises.iter().map(|p| ground(p, &binding)).collect();
            out.push((ri, premises, ground(&rule.conclusion, &binding)));
        }
    }
    out
}

pub fn herbrand(program: &Program) -> Vec<Atom> {
    let consts = program.constants();
    let mut out = Vec::new();
    for p in program.predicates() {
        let total = consts.len().pow(p.arity as u32);
        for mut code in 0..total {
            let mut args = Vec::new();
            for _ in 0..p.arity {
                args.push(Term::Const(consts[code % consts.len()].clone()));
                code /= consts.len();
            }
            out.push(Atom::new(p.name.clone(), args));
        }
    }
    out
}

fn combine(cost: CostFunction, ws: &[u64]) -> u64 {
    match cost {
        CostFunction::Depth => 1 + ws.iter().copied().max().unwrap_or(0),
        CostFunction::VertexCount => 1 + ws.iter().sum::<u64>(),
    }
}

fn axiom_weight(cost: CostFunction) -> u64 {
    match cost {
        CostFunction::Depth => 0,
        CostFunction::VertexCount => 1,
    }
}

/// Inside weights by iterated relaxation until nothing changes. Atoms absent
/// from the map are outside the minimal model.
pub fn fixpoint_weights(program: &Program, cost: CostFunction) -> HashMap<Atom, u64> {
    let insts = all_instantiations(program);
    let mut w: HashMap<Atom, u64> = program.axioms().map(|a| (a.clone(), axiom_weight(cost))).collect();
    loop {
        let mut changed = false;
        for (_, premises, conclusion) in &insts {
            let Some(ws) = premises.iter().map(|p| w.get(p).copied()).collect::<Option<Vec<u64>>>() else {
                continue;
            };
            let cand = combine(cost, &ws);
            if w.get(conclusion).is_none_or(|&old| cand < old) {
                w.insert(conclusion.clone(), cand);
                changed = true;
            }
        }
        if !changed {
            return w;
        }
    }
}

/// The minimal model by iterating the consequence operator from the axioms.
pub fn naive_model(program: &Program) -> HashSet<Atom> {
    let insts = all_instantiations(program);
    let mut model: HashSet<Atom> = program.axioms().cloned().collect();
    loop {
        let before = model.len();
        for (_, premises, conclusion) in &insts {
            if premises.iter().all(|p| model.contains(p)) {
                model.insert(conclusion.clone());
            }
        }
        if model.len() == before {
            return model;
        }
    }
}

/// Atoms lying on some minimum-weight derivation of `goal`, found by walking
/// weight-tight instantiations backwards from the goal.
pub fn on_path_atoms(program: &Program, goal: &Atom, cost: CostFunction) -> HashSet<Atom> {
    let w = fixpoint_weights(program, cost);
    let mut marked = HashSet::new();
    if !w.contains_key(goal) {
        return marked;
    }
    let insts = all_instantiations(program);
    let mut stack = vec![goal.clone()];
    marked.insert(goal.clone());
    while let Some(c) = stack.pop() {
        if program.is_axiom(&c) && w[&c] == axiom_weight(cost) {
            continue;
        }
        for (_, premises, conclusion) in &insts {
            if conclusion != &c {
                continue;
            }
            let Some(ws) = premises.iter().map(|p| w.get(p).copied()).collect::<Option<Vec<u64>>>() else {
                continue;
            };
            if combine(cost, &ws) == w[&c] {
                for p in premises {
                    if marked.insert(p.clone()) {
                        stack.push(p.clone());
                    }
                }
            }
        }
    }
    marked
}

/// `w* - w` on atoms of a shortest proof, `None` (infinite) elsewhere.
pub fn true_cost_to_go(program: &Program, goal: &Atom, cost: CostFunction) -> HashMap<Atom, Option<u64>> {
    let w = fixpoint_weights(program, cost);
    let on = on_path_atoms(program, goal, cost);
    herbrand(program)
        .into_iter()
        .map(|a| {
            let h = if on.contains(&a) { Some(w[goal] - w[&a]) } else { None };
            (a, h)
        })
        .collect()
}

/// Whether `step` is a ground instantiation of its rule.
pub fn is_instantiation(program: &Program, step: &ProofStep) -> bool {
    all_instantiations(program)
        .iter()
        .any(|(ri, p, c)| *ri == step.rule_index && p == &step.premises && c == &step.conclusion)
}

/// A proof tree: the instantiation concluding the root and subtrees for its
/// non-axiom premises.
#[derive(Debug, Clone)]
pub struct ProofTree {
    pub step: ProofStep,
    pub children: Vec<ProofTree>,
}

impl ProofTree {
    pub fn depth(&self) -> u64 {
        1 + self.children.iter().map(ProofTree::depth).max().unwrap_or(0)
    }

    /// Distinct instantiations used.
    pub fn steps(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect(&mut out);
        out
    }

    fn collect(&self, out: &mut BTreeSet<String>) {
        out.insert(format!("{:?}", self.step));
        for c in &self.children {
            c.collect(out);
        }
    }

    /// Distinct premises used.
    pub fn pops(&self) -> BTreeSet<Atom> {
        let mut out: BTreeSet<Atom> = self.step.premises.iter().cloned().collect();
        for c in &self.children {
            out.extend(c.pops());
        }
        out
    }
}

/// Every proof tree of `goal` whose branches never repeat an atom, up to
/// `max_depth`. Axioms are leaves.
pub fn enumerate_proofs(program: &Program, goal: &Atom, max_depth: u64) -> Vec<ProofTree> {
    let insts = all_instantiations(program);
    let model = naive_model(program);
    let mut path = Vec::new();
    proofs_of(program, &insts, &model, goal, max_depth, &mut path)
}

fn proofs_of(
    program: &Program,
    insts: &[Instantiation],
    model: &HashSet<Atom>,
    atom: &Atom,
    budget: u64,
    path: &mut Vec<Atom>,
) -> Vec<ProofTree> {
    if budget == 0 || path.contains(atom) {
        return Vec::new();
    }
    path.push(atom.clone());
    let mut out = Vec::new();
    for (ri, premises, conclusion) in insts {
        if conclusion != atom || !premises.iter().all(|p| model.contains(p)) {
            continue;
        }
        // subtree choices per non-axiom premise
        let mut partial: Vec<Vec<ProofTree>> = vec![Vec::new()];
        for p in premises {
            if program.is_axiom(p) {
                continue;
            }
            let subs = proofs_of(program, insts, model, p, budget - 1, path);
            let mut next = Vec::new();
            for prefix in &partial {
                for s in &subs {
                    let mut v = prefix.clone();
                    v.push(s.clone());
                    next.push(v);
                }
            }
            partial = next;
        }
        for children in partial {
            out.push(ProofTree {
                step: ProofStep::new(premises.clone(), *ri, conclusion.clone()),
                children,
            });
        }
    }
    path.pop();
    out
}
