//! Natural-language rendering of programs and traces, and the inverse
//! lookup used to parse candidate proofs.
//!
//! Atom sentences come from per-predicate templates with positional slots
//! (`"{0} is a parent of {1}"`). A sentence that starts a line or a premise
//! list has its first letter uppercased; inside rules and the goal line it is
//! rendered as is. Lookup compares sentences with the first letter
//! lowercased, surrounding whitespace trimmed and inner whitespace collapsed.

use std::collections::HashMap;

use thiserror::Error;

use crate::logic::{herbrand_base, Atom, Program, Rule};
use crate::trace::{ProofStep, SearchTrace};

pub const ANSWER_LINE: &str = "<answer>Therefore, the goal is proven.</answer>";
pub const ANSWER_OPEN_TAG: &str = "<answer>";
pub const STEP_DELIMITER: &str = "\n\n";
pub const EXAMPLE_SEPARATOR: &str = "\n\n---\n\n";
pub const PROMPT_VERSION: u32 = 1;

const INSTRUCTION_PROMPT: &str = include_str!("../assets/instruction_prompt_v1.txt");
const ICL_SUFFIX: &str = include_str!("../assets/icl_suffix_v1.txt");

/// Upper bound on the Herbrand base size for building the sentence tables.
pub const MAX_RENDERED_ATOMS: u64 = 2_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VerbalizeError {
    #[error("predicate {0} has no template")]
    MissingTemplate(String),
    #[error("template for {pred} refers to slot {slot} but the arity is {arity}")]
    BadSlot { pred: String, slot: usize, arity: usize },
    #[error("unterminated slot in template for {0}")]
    UnterminatedSlot(String),
    #[error("atoms {first} and {second} render to the same sentence {sentence:?}")]
    AtomCollision {
        first: String,
        second: String,
        sentence: String,
    },
    #[error("rules {first} and {second} render to the same sentence {sentence:?}")]
    RuleCollision {
        first: usize,
        second: usize,
        sentence: String,
    },
    #[error("Herbrand base has {0} atoms, too many to tabulate")]
    TooLarge(u64),
    #[error("program has no goal")]
    NoGoal,
    #[error("atom {0} is not in the Herbrand base")]
    UnknownAtom(String),
    #[error("rule index {0} out of range")]
    UnknownRule(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Segment {
    Text(String),
    Slot(usize),
}

fn parse_template(pred: &str, arity: usize, template: &str) -> Result<Vec<Segment>, VerbalizeError> {
    if template.trim().is_empty() {
        return Err(VerbalizeError::MissingTemplate(pred.to_string()));
    }
    let mut segments = Vec::new();
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        if open > 0 {
            segments.push(Segment::Text(rest[..open].to_string()));
        }
        let close = rest[open..]
            .find('}')
            .ok_or_else(|| VerbalizeError::UnterminatedSlot(pred.to_string()))?
            + open;
        let slot: usize = rest[open + 1..close]
            .trim()
            .parse()
            .map_err(|_| VerbalizeError::UnterminatedSlot(pred.to_string()))?;
        if slot >= arity {
            return Err(VerbalizeError::BadSlot {
                pred: pred.to_string(),
                slot,
                arity,
            });
        }
        segments.push(Segment::Slot(slot));
        rest = &rest[close + 1..];
    }
    if !rest.is_empty() {
        segments.push(Segment::Text(rest.to_string()));
    }
    Ok(segments)
}

/// Uppercases the first character.
pub fn sentence_case(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// Lookup key: trimmed, inner whitespace collapsed, trailing period dropped,
/// first letter lowercased.
pub fn normalize_sentence(s: &str) -> String {
    let collapsed = s.split_whitespace().collect::<Vec<_>>().join(" ");
    let stripped = collapsed.strip_suffix('.').unwrap_or(&collapsed).trim_end();
    let mut chars = stripped.chars();
    match chars.next() {
        Some(c) => c.to_lowercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// Renders atoms and rules of one program, with exact inverse lookup.
#[derive(Debug, Clone)]
pub struct Verbalizer {
    templates: HashMap<String, Vec<Segment>>,
    rule_sentences: Vec<String>,
    atoms_by_sentence: HashMap<String, Atom>,
    rules_by_sentence: HashMap<String, usize>,
    axioms: Vec<Atom>,
    goal: Option<Atom>,
}

impl Verbalizer {
    /// Builds the sentence tables and checks that no two atoms of the
    /// Herbrand base, and no two rules, share a sentence.
    pub fn new(program: &Program) -> Result<Self, VerbalizeError> {
        let size = program.herbrand_size();
        if size > MAX_RENDERED_ATOMS {
            return Err(VerbalizeError::TooLarge(size));
        }
        let mut templates = HashMap::new();
        for decl in program.predicates() {
            templates.insert(
                decl.name.clone(),
                parse_template(&decl.name, decl.arity, &decl.template)?,
            );
        }
        let mut v = Verbalizer {
            templates,
            rule_sentences: Vec::new(),
            atoms_by_sentence: HashMap::new(),
            rules_by_sentence: HashMap::new(),
            axioms: program.axioms().cloned().collect(),
            goal: program.goal().cloned(),
        };
        for atom in herbrand_base(program) {
            let key = normalize_sentence(&v.render_atom(&atom)?);
            if let Some(prev) = v.atoms_by_sentence.get(&key) {
                return Err(VerbalizeError::AtomCollision {
                    first: prev.to_string(),
                    second: atom.to_string(),
                    sentence: key,
                });
            }
            v.atoms_by_sentence.insert(key, atom);
        }
        for (ri, rule) in program.rules().iter().enumerate() {
            let sentence = v.render_rule_raw(rule)?;
            let key = normalize_sentence(&sentence);
            if let Some(&prev) = v.rules_by_sentence.get(&key) {
                return Err(VerbalizeError::RuleCollision {
                    first: prev,
                    second: ri,
                    sentence: key,
                });
            }
            v.rules_by_sentence.insert(key, ri);
            v.rule_sentences.push(sentence);
        }
        Ok(v)
    }

    /// The atom's sentence in lowercase-leading form, without a period.
    pub fn render_atom(&self, atom: &Atom) -> Result<String, VerbalizeError> {
        let segments = self
            .templates
            .get(&atom.pred)
            .ok_or_else(|| VerbalizeError::MissingTemplate(atom.pred.clone()))?;
        let mut out = String::new();
        for seg in segments {
            match seg {
                Segment::Text(t) => out.push_str(t),
                Segment::Slot(i) => out.push_str(
                    atom.args
                        .get(*i)
                        .ok_or_else(|| VerbalizeError::UnknownAtom(atom.to_string()))?
                        .name(),
                ),
            }
        }
        Ok(out)
    }

    fn render_rule_raw(&self, rule: &Rule) -> Result<String, VerbalizeError> {
        let premises = rule
            .premises
            .iter()
            .map(|p| self.render_atom(p))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(format!(
            "If {}, then {}",
            premises.join(" and "),
            self.render_atom(&rule.conclusion)?
        ))
    }

    /// `If <p1> and <p2>, then <c>` without a trailing period.
    pub fn rule_sentence(&self, rule_index: usize) -> Result<&str, VerbalizeError> {
        self.rule_sentences
            .get(rule_index)
            .map(String::as_str)
            .ok_or(VerbalizeError::UnknownRule(rule_index))
    }

    pub fn atom_for(&self, sentence: &str) -> Option<&Atom> {
        self.atoms_by_sentence.get(&normalize_sentence(sentence))
    }

    pub fn rule_for(&self, sentence: &str) -> Option<usize> {
        self.rules_by_sentence.get(&normalize_sentence(sentence)).copied()
    }

    pub fn goal(&self) -> Option<&Atom> {
        self.goal.as_ref()
    }

    /// The `Rules:`, `Axioms:` and `Goal:` sections, blank-line separated.
    pub fn verbalize_program(&self) -> Result<String, VerbalizeError> {
        let mut out = String::from("Rules:");
        for s in &self.rule_sentences {
            out.push(' ');
            out.push_str(s);
            out.push('.');
        }
        out.push_str("\n\nAxioms:");
        for a in &self.axioms {
            out.push(' ');
            out.push_str(&sentence_case(&self.render_atom(a)?));
            out.push('.');
        }
        if let Some(goal) = &self.goal {
            out.push_str("\n\nGoal: Prove that ");
            out.push_str(&self.render_atom(goal)?);
            out.push('.');
        }
        Ok(out)
    }

    pub fn verbalize_step(&self, step: &ProofStep) -> Result<String, VerbalizeError> {
        let premises = step
            .premises
            .iter()
            .map(|p| self.render_atom(p).map(|s| format!("{}.", sentence_case(&s))))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(format!(
            "Premises: {}\nRule: {}.\nConclusion: {}.",
            premises.join(" "),
            self.rule_sentence(step.rule_index)?,
            sentence_case(&self.render_atom(&step.conclusion)?)
        ))
    }

    /// One block per step, blank-line delimited, followed by the answer line
    /// when the trace proves its goal (or is empty).
    pub fn verbalize_trace(&self, trace: &SearchTrace) -> Result<String, VerbalizeError> {
        let blocks = trace
            .steps
            .iter()
            .map(|s| self.verbalize_step(s))
            .collect::<Result<Vec<_>, _>>()?;
        let goal = trace.goal.as_ref().or(self.goal.as_ref());
        let proves_goal = trace.steps.is_empty()
            || goal.is_some_and(|g| trace.steps.iter().any(|s| &s.conclusion == g));
        let mut out = blocks.join(STEP_DELIMITER);
        if proves_goal {
            if !out.is_empty() {
                out.push_str(STEP_DELIMITER);
            }
            out.push_str(ANSWER_LINE);
        }
        Ok(out)
    }
}

pub fn verbalize_program(program: &Program) -> Result<String, VerbalizeError> {
    Verbalizer::new(program)?.verbalize_program()
}

pub fn verbalize_trace(trace: &SearchTrace, program: &Program) -> Result<String, VerbalizeError> {
    Verbalizer::new(program)?.verbalize_trace(trace)
}

/// The task instruction, with the in-context sentence appended when
/// exemplars follow.
pub fn instruction_prompt(with_examples: bool) -> String {
    let base = INSTRUCTION_PROMPT.trim_end();
    if with_examples {
        format!("{base} {}", ICL_SUFFIX.trim())
    } else {
        base.to_string()
    }
}

/// One worked example: a verbalized problem and its verbalized proof.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Exemplar {
    pub problem: String,
    pub proof: String,
}

/// Instruction, then exemplars separated by `---`, then the query problem.
pub fn assemble_prompt(problem: &str, exemplars: &[Exemplar]) -> String {
    let mut out = instruction_prompt(!exemplars.is_empty());
    out.push_str("\n\n");
    for ex in exemplars {
        out.push_str(&ex.problem);
        out.push_str("\n\n");
        out.push_str(&ex.proof);
        out.push_str(EXAMPLE_SEPARATOR);
    }
    out.push_str(problem);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::PredicateDecl;

    fn decl(name: &str, arity: usize, template: &str) -> PredicateDecl {
        PredicateDecl {
            name: name.into(),
            arity,
            template: template.into(),
        }
    }

    #[test]
    fn template_parsing() {
        assert_eq!(
            parse_template("p", 2, "{0} likes {1}").unwrap(),
            vec![
                Segment::Slot(0),
                Segment::Text(" likes ".into()),
                Segment::Slot(1)
            ]
        );
        assert!(matches!(
            parse_template("p", 1, "{1} x"),
            Err(VerbalizeError::BadSlot { .. })
        ));
        assert!(matches!(
            parse_template("p", 1, ""),
            Err(VerbalizeError::MissingTemplate(_))
        ));
        assert!(parse_template("p", 1, "{0 x").is_err());
    }

    #[test]
    fn normalization() {
        assert_eq!(normalize_sentence("  Gary is nice. "), "gary is nice");
        assert_eq!(normalize_sentence("gary   is\tnice"), "gary is nice");
        assert_eq!(sentence_case("gary is nice"), "Gary is nice");
    }

    #[test]
    fn collision_is_rejected() {
        let p = Program::new(
            "c",
            vec![decl("p", 1, "{0} is big"), decl("q", 1, "{0} is big")],
            vec!["a".into()],
            vec![],
            vec![],
            None,
        )
        .unwrap();
        assert!(matches!(
            Verbalizer::new(&p),
            Err(VerbalizeError::AtomCollision { .. })
        ));

        let p = Program::new(
            "c",
            vec![decl("p", 1, "{0} is big")],
            vec!["a".into(), "b".into()],
            vec![],
            vec![],
            None,
        )
        .unwrap();
        assert!(Verbalizer::new(&p).is_ok());

        // a constant-free template collapses every argument
        let p = Program::new(
            "c",
            vec![decl("p", 1, "it is big")],
            vec!["a".into(), "b".into()],
            vec![],
            vec![],
            None,
        )
        .unwrap();
        assert!(matches!(
            Verbalizer::new(&p),
            Err(VerbalizeError::AtomCollision { .. })
        ));
    }

    #[test]
    fn empty_rule_section_is_present() {
        let p = Program::new(
            "c",
            vec![decl("p", 1, "{0} is big")],
            vec!["a".into()],
            vec![],
            vec![Atom::parse("p(a)").unwrap()],
            Some(Atom::parse("p(a)").unwrap()),
        )
        .unwrap();
        let text = verbalize_program(&p).unwrap();
        assert_eq!(text, "Rules:\n\nAxioms: A is big.\n\nGoal: Prove that a is big.");
    }

    #[test]
    fn prompt_assembly() {
        let plain = assemble_prompt("Rules:", &[]);
        assert!(plain.ends_with("<answer></answer>.\n\nRules:"));
        assert!(!plain.contains("---"));
        let ex = Exemplar {
            problem: "P1".into(),
            proof: "Q1".into(),
        };
        let icl = assemble_prompt("P2", &[ex.clone(), ex]);
        assert!(icl.contains("for you to learn from:\n\nP1\n\nQ1\n\n---\n\nP1\n\nQ1\n\n---\n\nP2"));
    }
}
