//! Parsing candidate proofs back into traces and adjudicating them.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::logic::{apply_substitution, match_atom, Atom, Program, Substitution};
use crate::trace::{ProofStep, SearchTrace};
use crate::verbalizer::{Verbalizer, ANSWER_OPEN_TAG};

const PREMISES: &str = "Premises:";
const RULE: &str = "Rule:";
const CONCLUSION: &str = "Conclusion:";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Diagnostic {
    /// A sentence that is not the rendering of any atom.
    UnrecognizedSentence { block: usize, sentence: String },
    /// A rule sentence that matches no rule of the program.
    InvalidRule { block: usize, sentence: String },
    /// A labeled line outside a complete `Premises/Rule/Conclusion` block.
    MalformedBlock { line: usize, text: String },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ParseOutcome {
    pub steps: Vec<ProofStep>,
    pub diagnostics: Vec<Diagnostic>,
    pub answer_seen: bool,
}

impl ParseOutcome {
    /// A structured trace taken as already parsed.
    pub fn from_steps(steps: Vec<ProofStep>) -> Self {
        ParseOutcome {
            steps,
            diagnostics: Vec::new(),
            answer_seen: true,
        }
    }

    pub fn to_trace(&self, program_id: impl Into<String>, goal: Option<Atom>) -> SearchTrace {
        SearchTrace::new(program_id, goal, self.steps.clone())
    }
}

fn label<'a>(line: &'a str, name: &str) -> Option<&'a str> {
    line.trim().strip_prefix(name).map(str::trim)
}

fn next_nonblank(lines: &[&str], from: usize) -> Option<usize> {
    (from..lines.len()).find(|&j| !lines[j].trim().is_empty())
}

/// Splits `A. B. C.` into atoms, joining adjacent pieces when a rendered
/// sentence itself contains `". "`.
fn parse_sentences(
    text: &str,
    verbalizer: &Verbalizer,
) -> Result<Vec<Atom>, String> {
    let body = text.trim();
    let body = body.strip_suffix('.').unwrap_or(body);
    let pieces: Vec<&str> = body.split(". ").collect();
    let mut atoms = Vec::new();
    let mut i = 0;
    while i < pieces.len() {
        let found = (i..pieces.len()).find_map(|j| {
            let candidate = pieces[i..=j].join(". ");
            verbalizer.atom_for(&candidate).map(|a| (j, a.clone()))
        });
        match found {
            Some((j, atom)) => {
                atoms.push(atom);
                i = j + 1;
            }
            None => return Err(pieces[i].trim().to_string()),
        }
    }
    Ok(atoms)
}

/// Scans `text` for `Premises:` / `Rule:` / `Conclusion:` blocks. Text between
/// blocks is ignored and scanning stops at the first `<answer>` tag. Blocks
/// that cannot be inverted exactly are dropped with a diagnostic.
pub fn parse_trace(text: &str, verbalizer: &Verbalizer) -> ParseOutcome {
    let (body, answer_seen) = match text.find(ANSWER_OPEN_TAG) {
        Some(i) => (&text[..i], true),
        None => (text, false),
    };
    let lines: Vec<&str> = body.lines().collect();
    let mut out = ParseOutcome {
        answer_seen,
        ..Default::default()
    };
    let mut block = 0;
    let mut i = 0;
    while i < lines.len() {
        let line = lines[i];
        if let Some(premises_text) = label(line, PREMISES) {
            let rule_at = next_nonblank(&lines, i + 1).filter(|&j| label(lines[j], RULE).is_some());
            let concl_at = rule_at
                .and_then(|j| next_nonblank(&lines, j + 1))
                .filter(|&k| label(lines[k], CONCLUSION).is_some());
            let (Some(j), Some(k)) = (rule_at, concl_at) else {
                out.diagnostics.push(Diagnostic::MalformedBlock {
                    line: i + 1,
                    text: line.trim().to_string(),
                });
                i += 1;
                continue;
            };
            let rule_text = label(lines[j], RULE).unwrap_or_default();
            let concl_text = label(lines[k], CONCLUSION).unwrap_or_default();
            match parse_block(block, premises_text, rule_text, concl_text, verbalizer) {
                Ok(step) => out.steps.push(step),
                Err(d) => out.diagnostics.push(d),
            }
            block += 1;
            i = k + 1;
            continue;
        }
        if label(line, RULE).is_some() || label(line, CONCLUSION).is_some() {
            out.diagnostics.push(Diagnostic::MalformedBlock {
                line: i + 1,
                text: line.trim().to_string(),
            });
        }
        i += 1;
    }
    out
}

fn parse_block(
    block: usize,
    premises: &str,
    rule: &str,
    conclusion: &str,
    verbalizer: &Verbalizer,
) -> Result<ProofStep, Diagnostic> {
    let unrecognized = |sentence: String| Diagnostic::UnrecognizedSentence { block, sentence };
    let premises = parse_sentences(premises, verbalizer).map_err(unrecognized)?;
    let rule_index = verbalizer
        .rule_for(rule)
        .ok_or_else(|| Diagnostic::InvalidRule {
            block,
            sentence: rule.to_string(),
        })?;
    let conclusion = verbalizer
        .atom_for(conclusion)
        .cloned()
        .ok_or_else(|| unrecognized(conclusion.to_string()))?;
    Ok(ProofStep::new(premises, rule_index, conclusion))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdjudicationMode {
    /// Every step must be valid and every premise established beforehand.
    #[default]
    Strict,
    /// Only the derivation of the first step concluding the goal is checked.
    GoalCone,
}

impl fmt::Display for AdjudicationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AdjudicationMode::Strict => "strict",
            AdjudicationMode::GoalCone => "goal-cone",
        })
    }
}

impl FromStr for AdjudicationMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "strict" => Ok(AdjudicationMode::Strict),
            "goal-cone" => Ok(AdjudicationMode::GoalCone),
            _ => Err(format!("unknown adjudication mode {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Failure {
    ParseFailure,
    InvalidStep { index: usize },
    GoalNotConcluded,
    PremiseUnavailable { index: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub correct: bool,
    pub failure: Option<Failure>,
    pub mode: AdjudicationMode,
}

impl Verdict {
    fn pass(mode: AdjudicationMode) -> Self {
        Verdict {
            correct: true,
            failure: None,
            mode,
        }
    }

    fn fail(mode: AdjudicationMode, failure: Failure) -> Self {
        Verdict {
            correct: false,
            failure: Some(failure),
            mode,
        }
    }
}

/// Whether the step is a ground instantiation of its rule under one
/// substitution, with every atom in the Herbrand base.
pub fn is_valid_step(program: &Program, step: &ProofStep) -> bool {
    let Some(rule) = program.rules().get(step.rule_index) else {
        return false;
    };
    if rule.premises.len() != step.premises.len()
        || !step.premises.iter().all(|p| program.is_in_herbrand_base(p))
        || !program.is_in_herbrand_base(&step.conclusion)
    {
        return false;
    }
    let mut sub = Substitution::new();
    for (pattern, ground) in rule.premises.iter().zip(&step.premises) {
        match match_atom(pattern, ground, &sub) {
            Some(next) => sub = next,
            None => return false,
        }
    }
    apply_substitution(&rule.conclusion, &sub) == step.conclusion
}

pub fn adjudicate(
    outcome: &ParseOutcome,
    program: &Program,
    goal: &Atom,
    mode: AdjudicationMode,
) -> Verdict {
    match mode {
        AdjudicationMode::Strict => adjudicate_strict(outcome, program, goal),
        AdjudicationMode::GoalCone => adjudicate_goal_cone(outcome, program, goal),
    }
}

fn adjudicate_strict(outcome: &ParseOutcome, program: &Program, goal: &Atom) -> Verdict {
    let mode = AdjudicationMode::Strict;
    if !outcome.diagnostics.is_empty() {
        return Verdict::fail(mode, Failure::ParseFailure);
    }
    let mut established: HashSet<&Atom> = program.axioms().collect();
    for (i, step) in outcome.steps.iter().enumerate() {
        if !is_valid_step(program, step) {
            return Verdict::fail(mode, Failure::InvalidStep { index: i });
        }
        if !step.premises.iter().all(|p| established.contains(p)) {
            return Verdict::fail(mode, Failure::PremiseUnavailable { index: i });
        }
        established.insert(&step.conclusion);
    }
    if established.contains(goal) {
        Verdict::pass(mode)
    } else {
        Verdict::fail(mode, Failure::GoalNotConcluded)
    }
}

fn adjudicate_goal_cone(outcome: &ParseOutcome, program: &Program, goal: &Atom) -> Verdict {
    let mode = AdjudicationMode::GoalCone;
    if program.is_axiom(goal) {
        return Verdict::pass(mode);
    }
    let steps = &outcome.steps;
    let Some(g) = steps.iter().position(|s| &s.conclusion == goal) else {
        return Verdict::fail(mode, Failure::GoalNotConcluded);
    };
    // established[i]: atoms derivable by valid, supported steps before i
    let valid: Vec<bool> = steps.iter().map(|s| is_valid_step(program, s)).collect();
    let mut established: HashSet<&Atom> = program.axioms().collect();
    let mut snapshots = Vec::with_capacity(g + 1);
    for (i, step) in steps.iter().enumerate().take(g + 1) {
        snapshots.push(established.clone());
        if valid[i] && step.premises.iter().all(|p| established.contains(p)) {
            established.insert(&step.conclusion);
        }
    }
    if established.contains(goal) {
        return Verdict::pass(mode);
    }
    Verdict::fail(mode, explain(steps, &valid, &snapshots, g))
}

/// Finds the deepest reason step `i` is not supported.
fn explain(
    steps: &[ProofStep],
    valid: &[bool],
    snapshots: &[HashSet<&Atom>],
    i: usize,
) -> Failure {
    if !valid[i] {
        return Failure::InvalidStep { index: i };
    }
    for p in &steps[i].premises {
        if snapshots[i].contains(p) {
            continue;
        }
        return match steps[..i].iter().rposition(|s| &s.conclusion == p) {
            Some(j) => explain(steps, valid, snapshots, j),
            None => Failure::PremiseUnavailable { index: i },
        };
    }
    Failure::PremiseUnavailable { index: i }
}
