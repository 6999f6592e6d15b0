//! Synthetic branching-chain instances and training-file export.

use std::io::{self, Write};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::document::ProgramDoc;
use crate::heuristics::{build_heuristic, HeuristicError, HeuristicKind};
use crate::logic::{minimal_model, Atom, PredicateDecl, Program, ProgramError, Rule, Term};
use crate::search::{astar, extract_shortest_proof, CostFunction, SearchError};
use crate::trace::{pops_set, SearchTrace};
use crate::verbalizer::{assemble_prompt, Exemplar, VerbalizeError, Verbalizer};
use crate::weight::Weight;

pub const EXPORT_SCHEMA: u32 = 1;

const CONSONANTS: &str = "bdfgklmnprstvz";
const VOWELS: &str = "aeiou";
const DEFAULT_ENTITIES: [&str; 8] = ["alex", "bo", "cleo", "dana", "eli", "fern", "gus", "hana"];

/// Two-syllable consonant-vowel words, 4,900 in all.
pub fn default_predicate_pool() -> Vec<String> {
    let syllables: Vec<String> = CONSONANTS
        .chars()
        .flat_map(|c| VOWELS.chars().map(move |v| format!("{c}{v}")))
        .collect();
    syllables
        .iter()
        .flat_map(|a| syllables.iter().map(move |b| format!("{a}{b}")))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub min: u32,
    pub max: u32,
}

impl Span {
    pub fn exactly(n: u32) -> Self {
        Span { min: n, max: n }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios {
            train: 0.8,
            validation: 0.1,
            test: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub lookahead: Span,
    pub branching: Span,
    /// Length of each distractor chain; the sampled lookahead when `None`.
    pub distractor_len: Option<u32>,
    pub count: usize,
    pub seed: u64,
    pub predicates: Vec<String>,
    pub entities: Vec<String>,
    pub splits: SplitRatios,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            lookahead: Span { min: 5, max: 10 },
            branching: Span { min: 4, max: 8 },
            distractor_len: None,
            count: 100,
            seed: 0,
            predicates: default_predicate_pool(),
            entities: DEFAULT_ENTITIES.iter().map(|s| s.to_string()).collect(),
            splits: SplitRatios::default(),
        }
    }
}

#[derive(Debug, Error)]
pub enum GenError {
    #[error("name pool exhausted: instance needs {needed} predicate names, pool has {available}")]
    NamePoolExhausted { needed: usize, available: usize },
    #[error("invalid generator config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Program(#[from] ProgramError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceMeta {
    pub generator: String,
    pub seed: u64,
    pub index: usize,
    pub lookahead: u32,
    pub branching: u32,
    pub distractor_len: u32,
    pub sampling: String,
    pub split: Split,
}

#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub program: Program,
    pub metadata: Option<serde_json::Value>,
}

impl ProblemInstance {
    pub fn id(&self) -> &str {
        &self.program.id
    }

    pub fn to_doc(&self) -> ProgramDoc {
        let mut doc = ProgramDoc::from_program(&self.program);
        doc.metadata = self.metadata.clone();
        doc
    }

    pub fn from_doc(doc: &ProgramDoc) -> Result<Self, crate::document::DocumentError> {
        Ok(ProblemInstance {
            program: doc.to_program()?,
            metadata: doc.metadata.clone(),
        })
    }

    fn split(&self) -> Option<String> {
        self.metadata
            .as_ref()
            .and_then(|m| m.get("split"))
            .and_then(|s| s.as_str())
            .map(str::to_string)
    }
}

fn assign_split(seed: u64, id: &str, ratios: &SplitRatios) -> Split {
    let digest = Sha256::digest(format!("{seed}:{id}").as_bytes());
    let mut head = [0u8; 8];
    head.copy_from_slice(&digest[..8]);
    let u = u64::from_be_bytes(head) as f64 / u64::MAX as f64;
    let total = ratios.train + ratios.validation + ratios.test;
    if u * total < ratios.train {
        Split::Train
    } else if u * total < ratios.train + ratios.validation {
        Split::Validation
    } else {
        Split::Test
    }
}

fn validate(config: &GenConfig) -> Result<(), GenError> {
    let bad = |m: &str| Err(GenError::InvalidConfig(m.to_string()));
    if config.lookahead.min == 0 || config.lookahead.min > config.lookahead.max {
        return bad("lookahead range must be nonempty and positive");
    }
    if config.branching.min > config.branching.max {
        return bad("branching range must be nonempty");
    }
    if config.distractor_len == Some(0) {
        return bad("distractor length must be positive");
    }
    if config.entities.is_empty() {
        return bad("entity pool is empty");
    }
    let r = &config.splits;
    if [r.train, r.validation, r.test].iter().any(|x| *x < 0.0) || r.train + r.validation + r.test <= 0.0 {
        return bad("split ratios must be nonnegative with a positive sum");
    }
    Ok(())
}

fn unary(pred: &str, term: Term) -> Atom {
    Atom::new(pred, vec![term])
}

fn chain_rule(from: &str, to: &str) -> Rule {
    Rule::new(vec![unary(from, Term::var("X"))], unary(to, Term::var("X")))
}

fn generate_one(config: &GenConfig, index: usize) -> Result<ProblemInstance, GenError> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(index as u64);
    let lookahead = rng.random_range(config.lookahead.min..=config.lookahead.max);
    let branching = rng.random_range(config.branching.min..=config.branching.max);
    let dlen = config.distractor_len.unwrap_or(lookahead);
    let needed = 1 + lookahead as usize + (branching * dlen) as usize;
    if needed > config.predicates.len() {
        return Err(GenError::NamePoolExhausted {
            needed,
            available: config.predicates.len(),
        });
    }
    let names: Vec<String> = config
        .predicates
        .choose_multiple(&mut rng, needed)
        .cloned()
        .collect();
    let entity = config
        .entities
        .choose(&mut rng)
        .expect("entity pool checked nonempty")
        .clone();

    let main = &names[..=lookahead as usize];
    let mut rules: Vec<Rule> = main.windows(2).map(|w| chain_rule(&w[0], &w[1])).collect();
    for chain in names[lookahead as usize + 1..].chunks(dlen as usize) {
        rules.push(chain_rule(&main[0], &chain[0]));
        rules.extend(chain.windows(2).map(|w| chain_rule(&w[0], &w[1])));
    }
    rules.shuffle(&mut rng);

    let mut sorted = names.clone();
    sorted.sort();
    let predicates = sorted
        .into_iter()
        .map(|name| PredicateDecl {
            template: format!("{{0}} is {name}"),
            name,
            arity: 1,
        })
        .collect();
    let id = format!("deeprd-{}-{index:06}", config.seed);
    let axiom = unary(&main[0], Term::constant(entity.clone()));
    let goal = unary(&main[lookahead as usize], Term::constant(entity.clone()));
    let program = Program::new(id.clone(), predicates, vec![entity], rules, vec![axiom], Some(goal))?;
    let meta = InstanceMeta {
        generator: "deeprd".into(),
        seed: config.seed,
        index,
        lookahead,
        branching,
        distractor_len: dlen,
        sampling: "uniform".into(),
        split: assign_split(config.seed, &id, &config.splits),
    };
    Ok(ProblemInstance {
        program,
        metadata: Some(serde_json::to_value(meta).expect("metadata serializes")),
    })
}

/// Generates `config.count` instances. Instance `i` draws from its own
/// stream of a generator seeded by `config.seed`, so output does not depend
/// on scheduling.
pub fn gen_deeprd(config: &GenConfig) -> Result<Vec<ProblemInstance>, GenError> {
    validate(config)?;
    (0..config.count)
        .into_par_iter()
        .map(|i| generate_one(config, i))
        .collect()
}

/// Shortest-proof depth of the instance goal, `None` if unprovable.
pub fn instance_depth(program: &Program) -> Option<u64> {
    let goal = program.goal()?;
    minimal_model(program, CostFunction::Depth).get(goal).finite()
}

pub fn filter_corpus(instances: Vec<ProblemInstance>, min_depth: u64, provable_only: bool) -> Vec<ProblemInstance> {
    instances
        .into_iter()
        .filter(|inst| match instance_depth(&inst.program) {
            Some(d) => d >= min_depth,
            None => !provable_only,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Sft,
    Icl { k: usize },
}

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("write failed: {0}")]
    Io(#[from] io::Error),
    #[error("instance {id} has no goal")]
    NoGoal { id: String },
    #[error("instance {id}: {source}")]
    Search { id: String, source: SearchError },
    #[error("instance {id}: {source}")]
    Heuristic { id: String, source: HeuristicError },
    #[error("instance {id}: {source}")]
    Verbalize { id: String, source: VerbalizeError },
}

#[derive(Debug, Clone, Serialize)]
pub struct ExportRecord {
    pub schema: u32,
    pub prompt: String,
    pub completion: String,
    pub metadata: ExportMeta,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExportMeta {
    pub id: String,
    pub heuristic: HeuristicKind,
    pub depth: Weight,
    pub steps: usize,
    pub pops: usize,
    pub split: Option<String>,
}

struct Rendered {
    problem: String,
    proof: String,
    meta: ExportMeta,
}

fn render(inst: &ProblemInstance, heuristic: HeuristicKind, cost: CostFunction) -> Result<Rendered, ExportError> {
    let program = &inst.program;
    let id = program.id.clone();
    let goal = program.goal().cloned().ok_or_else(|| ExportError::NoGoal { id: id.clone() })?;
    let table = build_heuristic(program, &goal, heuristic, cost).map_err(|source| ExportError::Heuristic {
        id: id.clone(),
        source,
    })?;
    let result = astar(program, &goal, &table, cost, false).map_err(|source| ExportError::Search {
        id: id.clone(),
        source,
    })?;
    if !result.is_provable() {
        return Err(ExportError::Search {
            id,
            source: SearchError::Unprovable(goal.to_string()),
        });
    }
    let verb = |source| ExportError::Verbalize { id: id.clone(), source };
    let verbalizer = Verbalizer::new(program).map_err(verb)?;
    Ok(Rendered {
        problem: verbalizer.verbalize_program().map_err(verb)?,
        proof: verbalizer.verbalize_trace(&result.trace).map_err(verb)?,
        meta: ExportMeta {
            id: id.clone(),
            heuristic,
            depth: result.goal_weight,
            steps: result.trace.len(),
            pops: pops_set(&result.trace).len(),
            split: inst.split(),
        },
    })
}

/// Writes one JSONL record per instance. In ICL mode the first `k` other
/// instances of the corpus serve as exemplars.
pub fn export_corpus<W: Write>(
    instances: &[ProblemInstance],
    heuristic: HeuristicKind,
    format: ExportFormat,
    cost: CostFunction,
    out: &mut W,
) -> Result<usize, ExportError> {
    let rendered: Vec<Rendered> = instances
        .par_iter()
        .map(|inst| render(inst, heuristic, cost))
        .collect::<Result<_, _>>()?;
    for (i, r) in rendered.iter().enumerate() {
        let exemplars: Vec<Exemplar> = match format {
            ExportFormat::Sft => Vec::new(),
            ExportFormat::Icl { k } => rendered
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .take(k)
                .map(|(_, e)| Exemplar {
                    problem: e.problem.clone(),
                    proof: e.proof.clone(),
                })
                .collect(),
        };
        let record = ExportRecord {
            schema: EXPORT_SCHEMA,
            prompt: assemble_prompt(&r.problem, &exemplars),
            completion: r.proof.clone(),
            metadata: r.meta.clone(),
        };
        serde_json::to_writer(&mut *out, &record).map_err(io::Error::from)?;
        out.write_all(b"\n")?;
    }
    Ok(rendered.len())
}

/// Push and pop counts of the search trace for each instance.
pub fn trace_counts(
    program: &Program,
    heuristic: HeuristicKind,
    cost: CostFunction,
) -> Result<(usize, usize), ExportError> {
    let inst = ProblemInstance {
        program: program.clone(),
        metadata: None,
    };
    let r = render(&inst, heuristic, cost)?;
    Ok((r.meta.steps, r.meta.pops))
}

/// The shortest proof of the instance goal as a trace.
pub fn shortest_trace(program: &Program, cost: CostFunction) -> Result<SearchTrace, SearchError> {
    let goal = program.goal().cloned().ok_or(SearchError::NoGoal)?;
    let table = crate::heuristics::HeuristicTable::zero(goal.clone());
    let result = astar(program, &goal, &table, cost, false)?;
    let steps = extract_shortest_proof(&result)?;
    Ok(SearchTrace::new(program.id.clone(), Some(goal), steps))
}

/// Serializes instances as JSONL program documents.
pub fn write_instances<W: Write>(instances: &[ProblemInstance], out: &mut W) -> io::Result<()> {
    for inst in instances {
        serde_json::to_writer(&mut *out, &inst.to_doc())?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
