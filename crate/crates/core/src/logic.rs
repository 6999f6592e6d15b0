//! Logic programs over function-free atoms: terms, atoms, rules, substitutions,
//! the Herbrand base, the one-step consequence operator and the minimal model.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use indexmap::IndexSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::search::{self, CostFunction};
use crate::weight::Weight;

/// Serialized as `{"const": name}` or `{"var": name}`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Term {
    Const(String),
    Var(String),
}

impl Term {
    pub fn constant(name: impl Into<String>) -> Self {
        Term::Const(name.into())
    }

    pub fn var(name: impl Into<String>) -> Self {
        Term::Var(name.into())
    }

    pub fn is_const(&self) -> bool {
        matches!(self, Term::Const(_))
    }

    pub fn name(&self) -> &str {
        match self {
            Term::Const(n) | Term::Var(n) => n,
        }
    }

    /// Textual-syntax convention: uppercase or `_` leading names are variables.
    fn from_identifier(ident: &str) -> Term {
        match ident.chars().next() {
            Some(c) if c.is_uppercase() || c == '_' => Term::Var(ident.to_string()),
            _ => Term::Const(ident.to_string()),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Atom {
    pub pred: String,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(pred: impl Into<String>, args: Vec<Term>) -> Self {
        Atom {
            pred: pred.into(),
            args,
        }
    }

    /// Ground atom from constant names.
    pub fn ground<S: AsRef<str>>(pred: impl Into<String>, consts: &[S]) -> Self {
        Atom::new(
            pred,
            consts.iter().map(|c| Term::constant(c.as_ref())).collect(),
        )
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(Term::is_const)
    }

    pub fn vars(&self) -> impl Iterator<Item = &str> {
        self.args.iter().filter_map(|t| match t {
            Term::Var(v) => Some(v.as_str()),
            Term::Const(_) => None,
        })
    }

    /// Parses `pred(t1, ..., tn)` or a bare `pred` for 0-ary predicates.
    pub fn parse(text: &str) -> Result<Atom, SyntaxError> {
        let text = text.trim();
        let Some(open) = text.find('(') else {
            check_identifier(text)?;
            return Ok(Atom::new(text, Vec::new()));
        };
        if !text.ends_with(')') {
            return Err(SyntaxError::new(text, "missing closing parenthesis"));
        }
        let pred = text[..open].trim();
        check_identifier(pred)?;
        let inner = text[open + 1..text.len() - 1].trim();
        let mut args = Vec::new();
        if !inner.is_empty() {
            for piece in inner.split(',') {
                let piece = piece.trim();
                check_identifier(piece)?;
                args.push(Term::from_identifier(piece));
            }
        }
        Ok(Atom::new(pred, args))
    }
}

fn check_identifier(s: &str) -> Result<(), SyntaxError> {
    if s.is_empty() {
        return Err(SyntaxError::new(s, "empty identifier"));
    }
    if !s.chars().all(|c| c.is_alphanumeric() || c == '_' || c == '-') {
        return Err(SyntaxError::new(s, "invalid identifier"));
    }
    Ok(())
}

impl FromStr for Atom {
    type Err = SyntaxError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Atom::parse(s)
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.pred)?;
        if self.args.is_empty() {
            return Ok(());
        }
        f.write_str("(")?;
        for (i, t) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            f.write_str(t.name())?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error in {input:?}: {message}")]
pub struct SyntaxError {
    pub input: String,
    pub message: String,
}

impl SyntaxError {
    fn new(input: &str, message: &str) -> Self {
        SyntaxError {
            input: input.to_string(),
            message: message.to_string(),
        }
    }
}

/// An inference rule `b1, ..., bK |- c` with `K >= 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rule {
    pub premises: Vec<Atom>,
    pub conclusion: Atom,
}

impl Rule {
    pub fn new(premises: Vec<Atom>, conclusion: Atom) -> Self {
        Rule {
            premises,
            conclusion,
        }
    }

    /// Parses `b1, ..., bK |- c` (also accepts `->` and `⊢`).
    pub fn parse(text: &str) -> Result<Rule, SyntaxError> {
        let (lhs, rhs) = ["|-", "⊢", "->"]
            .iter()
            .find_map(|sep| text.split_once(sep))
            .ok_or_else(|| SyntaxError::new(text, "missing turnstile"))?;
        let conclusion = Atom::parse(rhs)?;
        let premises = split_atoms(lhs)?;
        Ok(Rule::new(premises, conclusion))
    }

    /// Variables of the rule in order of first occurrence.
    pub fn vars(&self) -> Vec<&str> {
        let mut seen = IndexSet::new();
        for a in self.premises.iter().chain(std::iter::once(&self.conclusion)) {
            for v in a.vars() {
                seen.insert(v);
            }
        }
        seen.into_iter().collect()
    }

    pub fn is_range_restricted(&self) -> bool {
        let premise_vars: HashSet<&str> = self.premises.iter().flat_map(Atom::vars).collect();
        self.conclusion.vars().all(|v| premise_vars.contains(v))
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, p) in self.premises.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, " |- {}", self.conclusion)
    }
}

/// Splits a comma separated list of atoms, respecting parentheses.
fn split_atoms(text: &str) -> Result<Vec<Atom>, SyntaxError> {
    let mut atoms = Vec::new();
    let mut depth = 0usize;
    let mut start = 0;
    for (i, c) in text.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth = depth.saturating_sub(1),
            ',' if depth == 0 => {
                atoms.push(Atom::parse(&text[start..i])?);
                start = i + 1;
            }
            _ => {}
        }
    }
    if !text[start..].trim().is_empty() {
        atoms.push(Atom::parse(&text[start..])?);
    }
    if atoms.is_empty() {
        return Err(SyntaxError::new(text, "rule without premises"));
    }
    Ok(atoms)
}

/// A finite variable binding. No variable maps to itself and each variable
/// is bound at most once.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Substitution {
    bindings: BTreeMap<String, Term>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SubstitutionError {
    #[error("variable {0} cannot be bound to itself")]
    SelfBinding(String),
    #[error("variable {0} is already bound")]
    Rebinding(String),
}

impl Substitution {
    pub fn new() -> Self {
        Substitution::default()
    }

    pub fn from_pairs<I, K>(pairs: I) -> Result<Self, SubstitutionError>
    where
        I: IntoIterator<Item = (K, Term)>,
        K: Into<String>,
    {
        let mut sub = Substitution::new();
        for (k, t) in pairs {
            sub.bind(k, t)?;
        }
        Ok(sub)
    }

    pub fn bind(&mut self, var: impl Into<String>, term: Term) -> Result<(), SubstitutionError> {
        let var = var.into();
        if matches!(&term, Term::Var(v) if *v == var) {
            return Err(SubstitutionError::SelfBinding(var));
        }
        if self.bindings.contains_key(&var) {
            return Err(SubstitutionError::Rebinding(var));
        }
        self.bindings.insert(var, term);
        Ok(())
    }

    pub fn get(&self, var: &str) -> Option<&Term> {
        self.bindings.get(var)
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Term)> {
        self.bindings.iter().map(|(k, v)| (k.as_str(), v))
    }
}

/// Replaces every bound variable of `atom`; unbound variables pass through.
pub fn apply_substitution(atom: &Atom, sub: &Substitution) -> Atom {
    let args = atom
        .args
        .iter()
        .map(|t| match t {
            Term::Var(v) => sub.get(v).cloned().unwrap_or_else(|| t.clone()),
            Term::Const(_) => t.clone(),
        })
        .collect();
    Atom::new(atom.pred.clone(), args)
}

/// One-sided unification: the minimal extension of `seed` that maps
/// `pattern` onto the ground atom `ground`, or `None`.
pub fn match_atom(pattern: &Atom, ground: &Atom, seed: &Substitution) -> Option<Substitution> {
    if pattern.pred != ground.pred || pattern.args.len() != ground.args.len() {
        return None;
    }
    let mut sub = seed.clone();
    for (p, g) in pattern.args.iter().zip(&ground.args) {
        let Term::Const(gc) = g else {
            return None;
        };
        match p {
            Term::Const(pc) => {
                if pc != gc {
                    return None;
                }
            }
            Term::Var(v) => match sub.bindings.get(v) {
                Some(Term::Const(bound)) if bound == gc => {}
                Some(_) => return None,
                None => {
                    sub.bindings.insert(v.clone(), g.clone());
                }
            },
        }
    }
    Some(sub)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredicateDecl {
    pub name: String,
    pub arity: usize,
    /// Sentence template with positional slots `{0}`, `{1}`, ...
    pub template: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProgramError {
    #[error("duplicate predicate declaration {0}")]
    DuplicatePredicate(String),
    #[error("duplicate constant declaration {0}")]
    DuplicateConstant(String),
    #[error("undeclared predicate {pred} in {context}")]
    UndeclaredPredicate { pred: String, context: String },
    #[error("undeclared constant {name} in {context}")]
    UndeclaredConstant { name: String, context: String },
    #[error("predicate {pred} has arity {declared} but is used with {used} arguments in {context}")]
    ArityMismatch {
        pred: String,
        declared: usize,
        used: usize,
        context: String,
    },
    #[error("axiom {0} is not ground")]
    NonGroundAxiom(String),
    #[error("goal {0} is not ground")]
    NonGroundGoal(String),
    #[error("rule {0} has no premises; premise-free facts must be given as axioms")]
    EmptyPremises(usize),
    #[error("rule {0} is not range restricted")]
    NotRangeRestricted(usize),
    #[error("empty identifier in {0}")]
    EmptyIdentifier(String),
}

/// A logic program: rules, axioms, declared vocabulary and an optional goal.
#[derive(Debug, Clone)]
pub struct Program {
    pub id: String,
    predicates: Vec<PredicateDecl>,
    constants: Vec<String>,
    rules: Vec<Rule>,
    axioms: IndexSet<Atom>,
    goal: Option<Atom>,
    pred_index: HashMap<String, usize>,
    /// predicate name -> (rule index, premise slot)
    premise_index: HashMap<String, Vec<(usize, usize)>>,
}

impl Program {
    pub fn new(
        id: impl Into<String>,
        predicates: Vec<PredicateDecl>,
        constants: Vec<String>,
        rules: Vec<Rule>,
        axioms: Vec<Atom>,
        goal: Option<Atom>,
    ) -> Result<Program, ProgramError> {
        let mut pred_index = HashMap::new();
        for (i, p) in predicates.iter().enumerate() {
            if p.name.is_empty() {
                return Err(ProgramError::EmptyIdentifier("predicate declaration".into()));
            }
            if pred_index.insert(p.name.clone(), i).is_some() {
                return Err(ProgramError::DuplicatePredicate(p.name.clone()));
            }
        }
        let mut const_set = HashSet::new();
        for c in &constants {
            if c.is_empty() {
                return Err(ProgramError::EmptyIdentifier("constant declaration".into()));
            }
            if !const_set.insert(c.as_str()) {
                return Err(ProgramError::DuplicateConstant(c.clone()));
            }
        }

        let check_atom = |atom: &Atom, context: &str| -> Result<(), ProgramError> {
            let Some(&pi) = pred_index.get(&atom.pred) else {
                return Err(ProgramError::UndeclaredPredicate {
                    pred: atom.pred.clone(),
                    context: context.to_string(),
                });
            };
            let declared = predicates[pi].arity;
            if declared != atom.args.len() {
                return Err(ProgramError::ArityMismatch {
                    pred: atom.pred.clone(),
                    declared,
                    used: atom.args.len(),
                    context: context.to_string(),
                });
            }
            for t in &atom.args {
                match t {
                    Term::Const(c) if !const_set.contains(c.as_str()) => {
                        return Err(ProgramError::UndeclaredConstant {
                            name: c.clone(),
                            context: context.to_string(),
                        });
                    }
                    Term::Var(v) if v.is_empty() => {
                        return Err(ProgramError::EmptyIdentifier(context.to_string()));
                    }
                    _ => {}
                }
            }
            Ok(())
        };

        let mut premise_index: HashMap<String, Vec<(usize, usize)>> = HashMap::new();
        for (ri, rule) in rules.iter().enumerate() {
            if rule.premises.is_empty() {
                return Err(ProgramError::EmptyPremises(ri));
            }
            let context = format!("rule {ri}");
            for (slot, p) in rule.premises.iter().enumerate() {
                check_atom(p, &context)?;
                premise_index
                    .entry(p.pred.clone())
                    .or_default()
                    .push((ri, slot));
            }
            check_atom(&rule.conclusion, &context)?;
            if !rule.is_range_restricted() {
                return Err(ProgramError::NotRangeRestricted(ri));
            }
        }

        let mut axiom_set = IndexSet::new();
        for a in axioms {
            check_atom(&a, "axioms")?;
            if !a.is_ground() {
                return Err(ProgramError::NonGroundAxiom(a.to_string()));
            }
            axiom_set.insert(a);
        }
        if let Some(g) = &goal {
            check_atom(g, "goal")?;
            if !g.is_ground() {
                return Err(ProgramError::NonGroundGoal(g.to_string()));
            }
        }

        Ok(Program {
            id: id.into(),
            predicates,
            constants,
            rules,
            axioms: axiom_set,
            goal,
            pred_index,
            premise_index,
        })
    }

    pub fn predicates(&self) -> &[PredicateDecl] {
        &self.predicates
    }

    pub fn predicate(&self, name: &str) -> Option<&PredicateDecl> {
        self.pred_index.get(name).map(|&i| &self.predicates[i])
    }

    pub fn constants(&self) -> &[String] {
        &self.constants
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn axioms(&self) -> impl ExactSizeIterator<Item = &Atom> {
        self.axioms.iter()
    }

    pub fn is_axiom(&self, atom: &Atom) -> bool {
        self.axioms.contains(atom)
    }

    pub fn goal(&self) -> Option<&Atom> {
        self.goal.as_ref()
    }

    /// Same program with a different goal.
    pub fn with_goal(&self, goal: Atom) -> Result<Program, ProgramError> {
        if !self.is_in_herbrand_base(&goal) {
            if !goal.is_ground() {
                return Err(ProgramError::NonGroundGoal(goal.to_string()));
            }
            return Err(ProgramError::UndeclaredPredicate {
                pred: goal.pred.clone(),
                context: "goal".into(),
            });
        }
        let mut p = self.clone();
        p.goal = Some(goal);
        Ok(p)
    }

    /// `(rule index, premise slot)` pairs whose premise uses `pred`.
    pub(crate) fn rules_with_premise(&self, pred: &str) -> &[(usize, usize)] {
        self.premise_index.get(pred).map_or(&[], Vec::as_slice)
    }

    /// Whether a ground atom is formable from the declared vocabulary.
    pub fn is_in_herbrand_base(&self, atom: &Atom) -> bool {
        let Some(decl) = self.predicate(&atom.pred) else {
            return false;
        };
        decl.arity == atom.args.len()
            && atom
                .args
                .iter()
                .all(|t| matches!(t, Term::Const(c) if self.constants.contains(c)))
    }

    /// `Σ_p |constants|^arity(p)`, saturating.
    pub fn herbrand_size(&self) -> u64 {
        let n = self.constants.len() as u64;
        self.predicates
            .iter()
            .map(|p| n.saturating_pow(p.arity as u32))
            .fold(0u64, u64::saturating_add)
    }

    /// All ground instantiations of rule `ri` over the Herbrand base, by
    /// enumerating every assignment of constants to the rule's variables.
    pub fn ground_instantiations(&self, ri: usize) -> Vec<(Vec<Atom>, Atom)> {
        let rule = &self.rules[ri];
        let vars = rule.vars();
        Tuples::new(self.constants.len(), vars.len())
            .map(|choice| {
                let sub = Substitution {
                    bindings: vars
                        .iter()
                        .zip(&choice)
                        .map(|(v, &c)| (v.to_string(), Term::Const(self.constants[c].clone())))
                        .collect(),
                };
                let premises = rule
                    .premises
                    .iter()
                    .map(|p| apply_substitution(p, &sub))
                    .collect();
                (premises, apply_substitution(&rule.conclusion, &sub))
            })
            .collect()
    }
}

/// Every ground atom formable from the declared predicates and constants,
/// predicates in declaration order and argument tuples in lexicographic
/// declaration order.
pub fn herbrand_base(program: &Program) -> Vec<Atom> {
    let consts = &program.constants;
    let mut out = Vec::new();
    for decl in &program.predicates {
        for choice in Tuples::new(consts.len(), decl.arity) {
            let args: Vec<&str> = choice.iter().map(|&c| consts[c].as_str()).collect();
            out.push(Atom::ground(decl.name.clone(), &args));
        }
    }
    out
}

/// All index tuples of length `arity` over `0..n`, last position fastest.
pub(crate) struct Tuples {
    n: usize,
    next: Option<Vec<usize>>,
}

impl Tuples {
    pub(crate) fn new(n: usize, arity: usize) -> Self {
        let next = (arity == 0 || n > 0).then(|| vec![0; arity]);
        Tuples { n, next }
    }
}

impl Iterator for Tuples {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        for i in (0..succ.len()).rev() {
            succ[i] += 1;
            if succ[i] < self.n {
                self.next = Some(succ);
                break;
            }
            succ[i] = 0;
        }
        Some(current)
    }
}

/// Enumerates substitutions that extend `sub` so that every premise except
/// `skip` maps onto some fact in `facts`. Calls `f` with the final
/// substitution for each complete join.
pub(crate) fn join_premises<F>(
    premises: &[Atom],
    skip: Option<usize>,
    sub: &Substitution,
    facts: &HashMap<String, Vec<Atom>>,
    f: &mut F,
) where
    F: FnMut(&Substitution),
{
    fn go<F: FnMut(&Substitution)>(
        premises: &[Atom],
        i: usize,
        skip: Option<usize>,
        sub: &Substitution,
        facts: &HashMap<String, Vec<Atom>>,
        f: &mut F,
    ) {
        if i == premises.len() {
            f(sub);
            return;
        }
        if skip == Some(i) {
            return go(premises, i + 1, skip, sub, facts, f);
        }
        let Some(candidates) = facts.get(&premises[i].pred) else {
            return;
        };
        for g in candidates {
            if let Some(next) = match_atom(&premises[i], g, sub) {
                go(premises, i + 1, skip, &next, facts, f);
            }
        }
    }
    go(premises, 0, skip, sub, facts, f)
}

/// One application of the consequence operator over the program's rules:
/// `interp` together with every conclusion whose premises all lie in `interp`.
/// Axioms are the starting interpretation of the iteration, not rules here.
pub fn fixpoint_step(program: &Program, interp: &HashSet<Atom>) -> HashSet<Atom> {
    let mut facts: HashMap<String, Vec<Atom>> = HashMap::new();
    for a in interp {
        facts.entry(a.pred.clone()).or_default().push(a.clone());
    }
    let mut out = interp.clone();
    for rule in &program.rules {
        join_premises(
            &rule.premises,
            None,
            &Substitution::new(),
            &facts,
            &mut |sub| {
                let c = apply_substitution(&rule.conclusion, sub);
                if program.is_in_herbrand_base(&c) {
                    out.insert(c);
                }
            },
        );
    }
    out
}

/// Inside weights of every atom of the minimal model. Atoms outside the
/// model are absent and read as infinite.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WeightTable {
    weights: BTreeMap<Atom, u64>,
}

impl WeightTable {
    pub fn get(&self, atom: &Atom) -> Weight {
        self.weights
            .get(atom)
            .map_or(Weight::Infinite, |&w| Weight::Finite(w))
    }

    pub fn contains(&self, atom: &Atom) -> bool {
        self.weights.contains_key(atom)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn atoms(&self) -> impl Iterator<Item = &Atom> {
        self.weights.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Atom, u64)> {
        self.weights.iter().map(|(a, &w)| (a, w))
    }
}

impl FromIterator<(Atom, u64)> for WeightTable {
    fn from_iter<I: IntoIterator<Item = (Atom, u64)>>(iter: I) -> Self {
        WeightTable {
            weights: iter.into_iter().collect(),
        }
    }
}

/// The minimal Herbrand model with inside weights, computed by running the
/// agenda loop exhaustively with the zero heuristic.
pub fn minimal_model(program: &Program, cost: CostFunction) -> WeightTable {
    search::exhaustive_weights(program, cost)
}
