use std::collections::HashSet;

use astar_deduce::heuristics::{build_heuristic, check_consistency, HeuristicKind};
use astar_deduce::logic::{apply_substitution, fixpoint_step, herbrand_base, match_atom};
use astar_deduce::rewards::{reward_astar, reward_step_count, RewardKind, RewardParams};
use astar_deduce::trace::{efficiency, pops_set, raw_score, verbalization_length, EfficiencyMode};
use astar_deduce::verbalizer::Verbalizer;
use astar_deduce::verify::{adjudicate, parse_trace, AdjudicationMode};
use astar_deduce::{
    astar, extract_shortest_proof, minimal_model, Atom, CostFunction, Program, SearchTrace, Substitution, Weight,
};
use astar_deduce_testkit::gen::{random_program, RandomProgramConfig};
use astar_deduce_testkit::oracle;
use proptest::prelude::*;

const HEURISTICS: [HeuristicKind; 3] = [HeuristicKind::Zero, HeuristicKind::Dependency, HeuristicKind::TrueCostToGo];

fn program(seed: u64) -> Program {
    random_program(seed, 0, RandomProgramConfig { unprovable_rate: 0.2 })
}

fn provable(seed: u64) -> Program {
    random_program(seed, 1, RandomProgramConfig::default())
}

fn subset(h: &[Atom], mask: u64, salt: u64) -> HashSet<Atom> {
    h.iter()
        .enumerate()
        .filter(|(i, _)| (mask.rotate_left((*i as u32 + salt as u32) % 64) >> (i % 7)) & 1 == 1)
        .map(|(_, a)| a.clone())
        .collect()
}

fn cost_strategy() -> impl Strategy<Value = CostFunction> {
    prop_oneof![Just(CostFunction::Depth), Just(CostFunction::VertexCount)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn model_weights_match_fixpoint_oracle(seed in any::<u64>(), cost in cost_strategy()) {
        let p = program(seed);
        let m = minimal_model(&p, cost);
        let expected = oracle::fixpoint_weights(&p, cost);
        prop_assert_eq!(m.len(), expected.len());
        for (a, w) in &expected {
            prop_assert_eq!(m.get(a), Weight::Finite(*w));
        }
    }

    #[test]
    fn consequence_operator_laws(seed in any::<u64>(), mask in any::<u64>()) {
        let p = program(seed);
        let h = herbrand_base(&p);
        let small = subset(&h, mask, 0);
        let mut large = small.clone();
        large.extend(subset(&h, mask, 3));
        let t_small = fixpoint_step(&p, &small);
        let t_large = fixpoint_step(&p, &large);
        prop_assert!(t_small.is_subset(&t_large));
        prop_assert!(small.is_subset(&t_small));
        let m: HashSet<Atom> = minimal_model(&p, CostFunction::Depth).atoms().cloned().collect();
        prop_assert_eq!(fixpoint_step(&p, &m), m.clone());
        prop_assert_eq!(&m, &oracle::naive_model(&p));
        let axioms: HashSet<Atom> = p.axioms().cloned().collect();
        prop_assert!(axioms.is_subset(&m));
        let hs: HashSet<Atom> = h.into_iter().collect();
        prop_assert!(m.is_subset(&hs));
    }

    #[test]
    fn provability_agrees(seed in any::<u64>(), cost in cost_strategy()) {
        let p = program(seed);
        let goal = p.goal().unwrap().clone();
        let in_model = minimal_model(&p, cost).contains(&goal);
        for kind in HEURISTICS {
            let table = build_heuristic(&p, &goal, kind, cost).unwrap();
            let r = astar(&p, &goal, &table, cost, false).unwrap();
            prop_assert_eq!(r.is_provable(), in_model);
        }
    }

    #[test]
    fn popped_weights_are_final(seed in any::<u64>(), cost in cost_strategy()) {
        let p = program(seed);
        let goal = p.goal().unwrap().clone();
        let expected = oracle::fixpoint_weights(&p, cost);
        for kind in HEURISTICS {
            let table = build_heuristic(&p, &goal, kind, cost).unwrap();
            let r = astar(&p, &goal, &table, cost, false).unwrap();
            for pop in &r.pops {
                prop_assert_eq!(Some(&pop.weight), expected.get(&pop.atom), "{} under {}", pop.atom, kind);
            }
            prop_assert_eq!(r.goal_weight.finite(), expected.get(&goal).copied());
        }
    }

    #[test]
    fn heuristic_tables_behave(seed in any::<u64>()) {
        let p = program(seed);
        let goal = p.goal().unwrap().clone();
        let cost = CostFunction::Depth;
        let dep = build_heuristic(&p, &goal, HeuristicKind::Dependency, cost).unwrap();
        let zero = build_heuristic(&p, &goal, HeuristicKind::Zero, cost).unwrap();
        prop_assert!(check_consistency(&dep, &p, cost).passed());
        prop_assert!(check_consistency(&zero, &p, cost).passed());
        let truth = oracle::true_cost_to_go(&p, &goal, cost);
        let table = build_heuristic(&p, &goal, HeuristicKind::TrueCostToGo, cost).unwrap();
        for (a, t) in &truth {
            let t = t.map_or(Weight::Infinite, Weight::Finite);
            prop_assert_eq!(table.get(a), t, "{}", a);
        }
        for a in minimal_model(&p, cost).atoms() {
            prop_assert!(dep.get(a) <= table.get(a), "{}", a);
        }
    }

    #[test]
    fn trace_metric_laws(seed in any::<u64>()) {
        let p = provable(seed);
        let goal = p.goal().unwrap().clone();
        let cost = CostFunction::Depth;
        let m = minimal_model(&p, cost);
        let zero = build_heuristic(&p, &goal, HeuristicKind::Zero, cost).unwrap();
        let r = astar(&p, &goal, &zero, cost, false).unwrap();
        let shortest = SearchTrace::new(p.id.clone(), Some(goal.clone()), extract_shortest_proof(&r).unwrap());
        prop_assert!(!pops_set(&shortest).contains(&goal));
        prop_assert!(!pops_set(&r.trace).contains(&goal));
        for mode in [EfficiencyMode::Pushes, EfficiencyMode::Pops] {
            let e = efficiency(&r.trace, &shortest, mode).unwrap();
            prop_assert!(e <= 1.0 && e > 0.0);
        }
        // adding steps never lowers the raw score
        for kind in HEURISTICS {
            let table = build_heuristic(&p, &goal, kind, cost).unwrap();
            let mut prefix = SearchTrace::new(p.id.clone(), None, Vec::new());
            let mut last = Weight::ZERO;
            for s in &r.trace.steps {
                prefix.steps.push(s.clone());
                let x = raw_score(&prefix, &m, &table).unwrap_or(Weight::Infinite);
                prop_assert!(x >= last);
                last = x;
            }
        }
        let unary = r.trace.steps.iter().filter(|s| s.premises.len() == 1).count();
        let binary = r.trace.steps.iter().filter(|s| s.premises.len() == 2).count();
        if unary + binary == r.trace.len() {
            prop_assert_eq!(verbalization_length(&r.trace), 4 * unary + 6 * binary);
        }
    }

    #[test]
    fn verbalization_round_trips(seed in any::<u64>(), k in 0usize..3) {
        let p = provable(seed);
        let goal = p.goal().unwrap().clone();
        let v = Verbalizer::new(&p).unwrap();
        let table = build_heuristic(&p, &goal, HEURISTICS[k], CostFunction::Depth).unwrap();
        let r = astar(&p, &goal, &table, CostFunction::Depth, false).unwrap();
        let text = v.verbalize_trace(&r.trace).unwrap();
        prop_assert_eq!(text.matches("Conclusion:").count(), r.trace.len());
        let parsed = parse_trace(&text, &v);
        prop_assert!(parsed.diagnostics.is_empty());
        prop_assert_eq!(&parsed.steps, &r.trace.steps);
        prop_assert!(adjudicate(&parsed, &p, &goal, AdjudicationMode::Strict).correct);
        // every atom of H renders uniquely
        let sentences: HashSet<String> = herbrand_base(&p).iter().map(|a| v.render_atom(a).unwrap()).collect();
        prop_assert_eq!(sentences.len() as u64, p.herbrand_size());
    }

    #[test]
    fn verdicts_are_sound(seed in any::<u64>(), picks in proptest::collection::vec(any::<prop::sample::Index>(), 1..6)) {
        let p = program(seed);
        let goal = p.goal().unwrap().clone();
        let insts = oracle::all_instantiations(&p);
        let steps = picks
            .iter()
            .map(|i| {
                let (ri, prem, c) = i.get(&insts).clone();
                astar_deduce::ProofStep::new(prem, ri, c)
            })
            .collect();
        let outcome = astar_deduce::verify::ParseOutcome::from_steps(steps);
        let model = oracle::naive_model(&p);
        for mode in [AdjudicationMode::Strict, AdjudicationMode::GoalCone] {
            if adjudicate(&outcome, &p, &goal, mode).correct {
                prop_assert!(model.contains(&goal));
            }
        }
    }

    #[test]
    fn match_then_apply_is_identity(seed in any::<u64>(), idx in any::<prop::sample::Index>()) {
        let p = program(seed);
        let (ri, premises, _) = idx.get(&oracle::all_instantiations(&p)).clone();
        let rule = &p.rules()[ri];
        let sub = match_atom(&rule.premises[0], &premises[0], &Substitution::new()).unwrap();
        prop_assert_eq!(apply_substitution(&rule.premises[0], &sub), premises[0].clone());
    }

    #[test]
    fn rewards_calibrate(seed in any::<u64>(), k in 1usize..3) {
        let p = provable(seed);
        let goal = p.goal().unwrap().clone();
        let cost = CostFunction::Depth;
        let m = minimal_model(&p, cost);
        let table = build_heuristic(&p, &goal, HEURISTICS[k], cost).unwrap();
        let r = astar(&p, &goal, &table, cost, false).unwrap();
        let verdict = adjudicate(&astar_deduce::verify::ParseOutcome::from_steps(r.trace.steps.clone()), &p, &goal, AdjudicationMode::Strict);
        let kind = if k == 1 { RewardKind::AstarDependency } else { RewardKind::AstarTrue };
        let rv = reward_astar(kind, &r.trace, &r.trace, &m, &table, &verdict, None);
        prop_assert!((rv.value - 1.0).abs() < 1e-9);
        let shortest = SearchTrace::new(p.id.clone(), None, extract_shortest_proof(&r).unwrap());
        let sv = reward_step_count(&shortest, &shortest, &verdict);
        prop_assert!((sv.value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn decay_is_strictly_decreasing(alpha in 1u64..1000, r in 0u64..20_000) {
        // stay clear of floating underflow
        let x = r * alpha / 1000;
        let params = RewardParams::new(RewardKind::AstarTrue, alpha as f64);
        prop_assert!(params.decay(Weight::Finite(x)) > params.decay(Weight::Finite(x + 1)));
    }
}

#[test]
fn removing_redundant_steps_never_lowers_rewards() {
    for seed in 0..40 {
        let p = provable(seed);
        let goal = p.goal().unwrap().clone();
        let cost = CostFunction::Depth;
        let m = minimal_model(&p, cost);
        let zero = build_heuristic(&p, &goal, HeuristicKind::Zero, cost).unwrap();
        let r = astar(&p, &goal, &zero, cost, false).unwrap();
        let full = r.trace.clone();
        let pruned = SearchTrace::new(p.id.clone(), None, extract_shortest_proof(&r).unwrap());
        let verdict = |t: &SearchTrace| {
            adjudicate(
                &astar_deduce::verify::ParseOutcome::from_steps(t.steps.clone()),
                &p,
                &goal,
                AdjudicationMode::Strict,
            )
        };
        let (vf, vp) = (verdict(&full), verdict(&pruned));
        assert!(vf.correct && vp.correct);
        for (kind, hk) in [(RewardKind::AstarDependency, HeuristicKind::Dependency), (RewardKind::AstarTrue, HeuristicKind::TrueCostToGo)] {
            let table = build_heuristic(&p, &goal, hk, cost).unwrap();
            let reference = astar(&p, &goal, &table, cost, false).unwrap().trace;
            let a = reward_astar(kind, &full, &reference, &m, &table, &vf, None).value;
            let b = reward_astar(kind, &pruned, &reference, &m, &table, &vp, None).value;
            assert!(b >= a, "seed {seed} {kind}: {b} < {a}");
        }
        let a = reward_step_count(&full, &pruned, &vf).value;
        let b = reward_step_count(&pruned, &pruned, &vp).value;
        assert!(b >= a);
    }
}
