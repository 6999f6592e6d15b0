use astar_deduce::document::ProgramDoc;
use astar_deduce::{Atom, Program, ProofStep};

pub const BIBLE_JSON: &str = include_str!("../fixtures/bible.json");
pub const GARY_JSON: &str = include_str!("../fixtures/gary.json");

pub fn bible() -> Program {
    ProgramDoc::from_json(BIBLE_JSON).unwrap().to_program().unwrap()
}

pub fn gary() -> Program {
    ProgramDoc::from_json(GARY_JSON).unwrap().to_program().unwrap()
}

pub fn atom(s: &str) -> Atom {
    Atom::parse(s).unwrap()
}

pub fn step(premises: &[&str], rule: usize, conclusion: &str) -> ProofStep {
    ProofStep::new(premises.iter().map(|p| atom(p)).collect(), rule, atom(conclusion))
}

/// The four-step worked proof for `quiet(gary)`.
pub fn gary_proof() -> Vec<ProofStep> {
    vec![
        step(&["nice(gary)"], 1, "furry(gary)"),
        step(&["nice(gary)"], 5, "smart(gary)"),
        step(&["nice(gary)", "furry(gary)"], 4, "cold(gary)"),
        step(&["cold(gary)"], 3, "quiet(gary)"),
    ]
}

/// Its expected rendering.
pub const GARY_PROOF_TEXT: &str = "Premises: Gary is nice.
Rule: If X is nice, then X is furry.
Conclusion: Gary is furry.

Premises: Gary is nice.
Rule: If gary is nice, then gary is smart.
Conclusion: Gary is smart.

Premises: Gary is nice. Gary is furry.
Rule: If X is nice and X is furry, then X is cold.
Conclusion: Gary is cold.

Premises: Gary is cold.
Rule: If X is cold, then X is quiet.
Conclusion: Gary is quiet.

<answer>Therefore, the goal is proven.</answer>";

pub const GARY_PROBLEM_TEXT: &str = "Rules: If X is blue, then X is furry. If X is nice, then X is furry. If X is blue and X is big, then X is nice. If X is cold, then X is quiet. If X is nice and X is furry, then X is cold. If gary is nice, then gary is smart. If X is cold, then X is furry. If X is cold and X is furry, then X is quiet.

Axioms: Bob is cold. Erin is nice. Gary is nice. Harry is blue.

Goal: Prove that gary is quiet.";
