use std::collections::HashSet;

use astar_deduce::heuristics::{
    build_heuristic, check_admissibility, check_consistency, dependency_heuristic, true_cost_to_go, HeuristicKind,
};
use astar_deduce::logic::{fixpoint_step, herbrand_base};
use astar_deduce::trace::{pops_set, raw_score, verbalization_length};
use astar_deduce::verbalizer::Verbalizer;
use astar_deduce::verify::{adjudicate, parse_trace, AdjudicationMode};
use astar_deduce::{astar, extract_shortest_proof, minimal_model, CostFunction, SearchTrace, Weight};
use astar_deduce_testkit::fixtures::{atom, bible, gary, gary_proof, step, GARY_PROBLEM_TEXT, GARY_PROOF_TEXT};
use astar_deduce_testkit::oracle;

fn goal() -> astar_deduce::Atom {
    atom("ancestor(terah,jacob)")
}

#[test]
fn bible_herbrand_base_and_model() {
    let p = bible();
    assert_eq!(herbrand_base(&p).len(), 50);
    assert_eq!(p.herbrand_size(), 50);
    let m = minimal_model(&p, CostFunction::Depth);
    assert_eq!(m.len(), 12);
    assert_eq!(m.get(&goal()), Weight::Finite(3));
    assert_eq!(m.get(&atom("ancestor(abraham,jacob)")), Weight::Finite(2));
    assert_eq!(m.get(&atom("ancestor(isaac,jacob)")), Weight::Finite(1));
    assert_eq!(m.get(&atom("parent(isaac,jacob)")), Weight::Finite(0));
    assert_eq!(m.get(&atom("ancestor(jacob,terah)")), Weight::Infinite);
}

#[test]
fn bible_vertex_count_axioms_weigh_one() {
    let m = minimal_model(&bible(), CostFunction::VertexCount);
    assert_eq!(m.get(&atom("parent(terah,abraham)")), Weight::Finite(1));
    assert_eq!(m.get(&atom("ancestor(isaac,jacob)")), Weight::Finite(2));
}

#[test]
fn bible_one_step_consequences() {
    let p = bible();
    let axioms: HashSet<_> = p.axioms().cloned().collect();
    let mut expected = axioms.clone();
    for a in ["terah,abraham", "abraham,ishmael", "abraham,isaac", "isaac,jacob"] {
        expected.insert(atom(&format!("ancestor({a})")));
    }
    assert_eq!(fixpoint_step(&p, &axioms), expected);
    assert!(fixpoint_step(&p, &HashSet::new()).is_empty());
    let m: HashSet<_> = minimal_model(&p, CostFunction::Depth).atoms().cloned().collect();
    assert_eq!(fixpoint_step(&p, &m), m);
}

#[test]
fn bible_true_cost_to_go() {
    let p = bible();
    let h = true_cost_to_go(&p, &goal(), CostFunction::Depth).unwrap();
    assert_eq!(h.get(&atom("parent(terah,abraham)")), Weight::Finite(3));
    assert_eq!(h.get(&atom("ancestor(abraham,jacob)")), Weight::Finite(1));
    assert_eq!(h.get(&atom("ancestor(isaac,jacob)")), Weight::Finite(2));
    assert_eq!(h.get(&atom("parent(isaac,jacob)")), Weight::Finite(3));
    assert_eq!(h.get(&goal()), Weight::Finite(0));
    assert_eq!(h.get(&atom("ancestor(terah,abraham)")), Weight::Infinite);
    let expected = oracle::true_cost_to_go(&p, &goal(), CostFunction::Depth);
    for (a, v) in expected {
        assert_eq!(h.get(&a), v.map_or(Weight::Infinite, Weight::Finite), "{a}");
    }
    // f = w + h is constant along the path
    let m = minimal_model(&p, CostFunction::Depth);
    for a in ["parent(terah,abraham)", "parent(abraham,isaac)", "ancestor(isaac,jacob)", "ancestor(abraham,jacob)"] {
        assert_eq!(m.get(&atom(a)) + h.get(&atom(a)), Weight::Finite(3));
    }
}

#[test]
fn bible_dependency_heuristic() {
    let p = bible();
    let h = dependency_heuristic(&p, &goal()).unwrap();
    assert_eq!(h.get(&goal()), Weight::Finite(0));
    assert_eq!(h.get(&atom("ancestor(isaac,jacob)")), Weight::Finite(1));
    assert_eq!(h.get(&atom("parent(isaac,jacob)")), Weight::Finite(2));
    assert!(check_consistency(&h, &p, CostFunction::Depth).passed());
    assert!(check_admissibility(&h, &p, &goal(), CostFunction::Depth).unwrap().passed());
}

#[test]
fn bible_search_traces() {
    let p = bible();
    let m = minimal_model(&p, CostFunction::Depth);
    let h = build_heuristic(&p, &goal(), HeuristicKind::TrueCostToGo, CostFunction::Depth).unwrap();
    let r = astar(&p, &goal(), &h, CostFunction::Depth, false).unwrap();
    assert_eq!(r.goal_weight, Weight::Finite(3));
    assert_eq!(r.trace.len(), 3);
    let pops = pops_set(&r.trace);
    let expected: HashSet<_> = [
        "parent(isaac,jacob)",
        "parent(abraham,isaac)",
        "ancestor(isaac,jacob)",
        "parent(terah,abraham)",
        "ancestor(abraham,jacob)",
    ]
    .iter()
    .map(|a| atom(a))
    .collect();
    assert_eq!(pops.iter().cloned().collect::<HashSet<_>>(), expected);
    assert_eq!(raw_score(&r.trace, &m, &h).unwrap(), Weight::Finite(15));

    let zero = build_heuristic(&p, &goal(), HeuristicKind::Zero, CostFunction::Depth).unwrap();
    assert_eq!(raw_score(&r.trace, &m, &zero).unwrap(), Weight::Finite(3));
    let rz = astar(&p, &goal(), &zero, CostFunction::Depth, false).unwrap();
    assert!(pops_set(&rz.trace).len() > 5);

    let proof = extract_shortest_proof(&rz).unwrap();
    assert_eq!(proof.len(), 3);
    assert_eq!(proof.last().unwrap().conclusion, goal());
}

#[test]
fn bible_shortest_proof_matches_enumeration() {
    let p = bible();
    let trees = oracle::enumerate_proofs(&p, &goal(), 6);
    let best = trees.iter().map(|t| t.depth()).min().unwrap();
    assert_eq!(best, 3);
    let shortest: Vec<_> = trees.iter().filter(|t| t.depth() == best).collect();
    assert!(shortest.iter().all(|t| t.steps().len() == 3 && t.pops().len() == 5));
}

#[test]
fn fan_and_chain_verbalization_lengths() {
    let premises: Vec<String> = (0..5).map(|i| format!("p{i}")).collect();
    let refs: Vec<&str> = premises.iter().map(String::as_str).collect();
    let d1 = SearchTrace::new("a", None, vec![step(&refs, 0, "g")]);
    let d2 = SearchTrace::new(
        "a",
        None,
        vec![step(&["p0"], 1, "q1"), step(&["q1"], 1, "q2"), step(&["q2"], 1, "q3"), step(&["q3"], 1, "g")],
    );
    let d3 = SearchTrace::new("a", None, vec![step(&["p0"], 1, "q1"), step(&["q1"], 1, "g")]);
    assert_eq!(verbalization_length(&d1), 12);
    assert_eq!(verbalization_length(&d2), 16);
    assert_eq!(verbalization_length(&d3), 8);
}

#[test]
fn gary_rendering() {
    let p = gary();
    let v = Verbalizer::new(&p).unwrap();
    assert_eq!(v.verbalize_program().unwrap(), GARY_PROBLEM_TEXT);
    let trace = SearchTrace::new("gary", Some(atom("quiet(gary)")), gary_proof());
    assert_eq!(v.verbalize_trace(&trace).unwrap(), GARY_PROOF_TEXT);
    let parsed = parse_trace(GARY_PROOF_TEXT, &v);
    assert!(parsed.diagnostics.is_empty());
    assert!(parsed.answer_seen);
    assert_eq!(parsed.steps, gary_proof());
    let verdict = adjudicate(&parsed, &p, &atom("quiet(gary)"), AdjudicationMode::Strict);
    assert!(verdict.correct);
}

#[test]
fn bible_rendering() {
    let p = bible();
    let v = Verbalizer::new(&p).unwrap();
    let text = v.verbalize_program().unwrap();
    assert!(text.contains("Axioms: Terah is a parent of abraham."));
    assert!(text.ends_with("Goal: Prove that terah is an ancestor of jacob."));
    let h = build_heuristic(&p, &goal(), HeuristicKind::TrueCostToGo, CostFunction::Depth).unwrap();
    let r = astar(&p, &goal(), &h, CostFunction::Depth, false).unwrap();
    let proof = v.verbalize_trace(&r.trace).unwrap();
    assert_eq!(proof.matches("Conclusion:").count(), 3);
    assert!(proof.contains("Conclusion: Terah is an ancestor of jacob.\n\n<answer>"));
}

#[test]
fn tolerated_surface_variation() {
    let p = gary();
    let v = Verbalizer::new(&p).unwrap();
    let noisy = "Let me think.\n\npremises line is ignored\nPremises:   gary is nice. \n\nRule: if X is nice, then X is furry\nConclusion: GARY is furry.\nSome chatter.\n\nPremises: Gary is nice.  Gary is furry.\nRule: If X is nice and X is furry, then X is cold.\nConclusion: Gary is cold.\n\nPremises: Gary is cold.\nRule: If X is cold, then X is quiet.\nConclusion: Gary is quiet.\n<answer>Therefore, the goal is proven.</answer>\nPremises: Gary is blue.";
    let parsed = parse_trace(noisy, &v);
    assert!(parsed.answer_seen);
    // "GARY" is not a case variation of the first letter only
    assert_eq!(parsed.steps.len(), 2);
    assert_eq!(parsed.diagnostics.len(), 1);
    let cone = adjudicate(&parsed, &p, &atom("quiet(gary)"), AdjudicationMode::GoalCone);
    assert!(!cone.correct);
}
