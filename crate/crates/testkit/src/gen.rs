//! Small random rulebases in the style of synthetic reasoning benchmarks:
//! unary attributes and binary relations over a handful of entities.

use std::collections::BTreeSet;

use astar_deduce::logic::PredicateDecl;
use astar_deduce::{Atom, Program, Rule, Term};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::oracle::{fixpoint_weights, naive_model};

const ATTRIBUTES: [&str; 8] = ["red", "big", "kind", "cold", "round", "young", "rough", "green"];
const RELATIONS: [&str; 4] = ["likes", "sees", "chases", "visits"];
const ENTITIES: [&str; 4] = ["anne", "bob", "dave", "fiona"];
const VARS: [&str; 3] = ["X", "Y", "Z"];

#[derive(Debug, Clone, Copy)]
pub struct RandomProgramConfig {
    /// Probability that the goal is drawn from outside the minimal model.
    pub unprovable_rate: f64,
}

impl Default for RandomProgramConfig {
    fn default() -> Self {
        RandomProgramConfig { unprovable_rate: 0.0 }
    }
}

fn random_atom(rng: &mut ChaCha8Rng, preds: &[(String, usize)], pool: &[Term]) -> Atom {
    let (name, arity) = preds.choose(rng).unwrap();
    Atom::new(name.clone(), (0..*arity).map(|_| pool.choose(rng).unwrap().clone()).collect())
}

fn random_rule(rng: &mut ChaCha8Rng, preds: &[(String, usize)], consts: &[String]) -> Rule {
    let k = rng.random_range(1..=3);
    let mut pool: Vec<Term> = VARS[..rng.random_range(1..=3)].iter().map(|v| Term::var(*v)).collect();
    if rng.random_bool(0.15) {
        pool.push(Term::constant(consts.choose(rng).unwrap().clone()));
    }
    let premises: Vec<Atom> = (0..k).map(|_| random_atom(rng, preds, &pool)).collect();
    let bound: Vec<Term> = premises
        .iter()
        .flat_map(|p| p.args.iter().cloned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let conclusion = random_atom(rng, preds, &bound);
    Rule::new(premises, conclusion)
}

/// A random program with 2 to 4 entities, 4 to 10 rules and |H| <= 200.
/// The goal is the heaviest derived atom, or an atom outside the model at
/// rate `unprovable_rate`.
pub fn random_program(seed: u64, index: u64, config: RandomProgramConfig) -> Program {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    loop {
        if let Some(p) = attempt(&mut rng, seed, index, config) {
            return p;
        }
    }
}

fn attempt(rng: &mut ChaCha8Rng, seed: u64, index: u64, config: RandomProgramConfig) -> Option<Program> {
    let n_entities = rng.random_range(2..=4);
    let consts: Vec<String> = ENTITIES[..n_entities].iter().map(|s| s.to_string()).collect();
    let n_attr = rng.random_range(2..=6);
    let n_rel = rng.random_range(0..=2);
    let mut preds: Vec<(String, usize)> = ATTRIBUTES[..n_attr].iter().map(|a| (a.to_string(), 1)).collect();
    preds.extend(RELATIONS[..n_rel].iter().map(|r| (r.to_string(), 2)));

    let n_rules = rng.random_range(4..=10);
    let mut seen = BTreeSet::new();
    let mut rules = Vec::new();
    while rules.len() < n_rules {
        let r = random_rule(rng, &preds, &consts);
        if seen.insert(r.to_string()) {
            rules.push(r);
        }
    }
    let const_terms: Vec<Term> = consts.iter().map(|c| Term::constant(c.clone())).collect();
    let h_size: usize = preds.iter().map(|(_, a)| n_entities.pow(*a as u32)).sum();
    let n_axioms = rng.random_range(2..=6).min(h_size / 2);
    let mut axioms: Vec<Atom> = Vec::new();
    while axioms.len() < n_axioms {
        let a = random_atom(rng, &preds, &const_terms);
        if !axioms.contains(&a) {
            axioms.push(a);
        }
    }

    let decls = preds
        .iter()
        .map(|(name, arity)| PredicateDecl {
            name: name.clone(),
            arity: *arity,
            template: if *arity == 1 {
                format!("{{0}} is {name}")
            } else {
                format!("{{0}} {name} {{1}}")
            },
        })
        .collect();
    let id = format!("rand-{seed}-{index}");
    let program = Program::new(id, decls, consts, rules, axioms, None).ok()?;
    if program.herbrand_size() > 200 {
        return None;
    }

    let goal = if rng.random_bool(config.unprovable_rate) {
        let model = naive_model(&program);
        let outside: Vec<Atom> = crate::oracle::herbrand(&program)
            .into_iter()
            .filter(|a| !model.contains(a))
            .collect();
        outside.choose(rng)?.clone()
    } else {
        let w = fixpoint_weights(&program, astar_deduce::CostFunction::Depth);
        let max = *w.values().max()?;
        if max == 0 {
            return None;
        }
        let mut heaviest: Vec<&Atom> = w.iter().filter(|(_, &v)| v == max).map(|(a, _)| a).collect();
        heaviest.sort();
        (*heaviest.choose(rng)?).clone()
    };
    program.with_goal(goal).ok()
}

/// `count` programs from consecutive streams of `seed`.
pub fn random_programs(seed: u64, count: u64, config: RandomProgramConfig) -> Vec<Program> {
    (0..count).map(|i| random_program(seed, i, config)).collect()
}
