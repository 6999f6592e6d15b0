//! A* proof search over Datalog-style logic programs, with search-trace
//! verbalization, proof verification, efficiency metrics, search-informed
//! rewards and synthetic instance generation.

pub mod datagen;
pub mod document;
pub mod heuristics;
pub mod logic;
pub mod rewards;
pub mod scoring;
pub mod search;
pub mod trace;
pub mod verbalizer;
pub mod verify;
pub mod weight;

pub use heuristics::{build_heuristic, HeuristicKind, HeuristicTable};
pub use logic::{minimal_model, Atom, Program, Rule, Substitution, Term, WeightTable};
pub use search::{astar, extract_shortest_proof, CostFunction, SearchResult};
pub use trace::{ProofStep, SearchTrace};
pub use verbalizer::Verbalizer;
pub use verify::{adjudicate, parse_trace, AdjudicationMode, Verdict};
pub use weight::Weight;
