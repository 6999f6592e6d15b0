//! Request-level verification and scoring shared by the CLI and the service.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::document::{parse_program_docs, program_fingerprint, DocumentError, ProgramDoc};
use crate::heuristics::{build_heuristic, HeuristicKind, HeuristicTable};
use crate::logic::{minimal_model, Atom, Program, WeightTable};
use crate::rewards::{reward_astar, reward_correctness, reward_step_count, RewardKind, RewardValue};
use crate::search::{astar, extract_shortest_proof, CostFunction};
use crate::trace::{efficiency, pops_set, raw_score, EfficiencyMode, ProofStep, SearchTrace};
use crate::verbalizer::Verbalizer;
use crate::verify::{adjudicate, parse_trace, AdjudicationMode, Diagnostic, Failure, ParseOutcome, Verdict};
use crate::weight::Weight;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ScoreError {
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error("unknown program id {0:?}")]
    UnknownProgram(String),
    #[error("cannot score: {0}")]
    Unprocessable(String),
}

/// Raw text or a structured trace; an absent candidate is the empty trace.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Candidate {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<Vec<ProofStep>>,
}

fn all_rewards() -> Vec<RewardKind> {
    RewardKind::ALL.to_vec()
}

fn true_heuristic() -> HeuristicKind {
    HeuristicKind::TrueCostToGo
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreRequest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<u32>,
    /// Inline program document; takes precedence over `program_id`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub program: Option<ProgramDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub program_id: Option<String>,
    /// Overrides the program's goal.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub goal: Option<Atom>,
    #[serde(default)]
    pub candidate: Candidate,
    #[serde(default = "all_rewards")]
    pub rewards: Vec<RewardKind>,
    #[serde(default)]
    pub mode: AdjudicationMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_cap: Option<u64>,
    #[serde(default)]
    pub cost: CostFunction,
    /// Heuristic used for the metrics report's raw score.
    #[serde(default = "true_heuristic")]
    pub metrics_heuristic: HeuristicKind,
}

impl ScoreRequest {
    pub fn new(program: ProgramDoc, candidate: Candidate) -> Self {
        ScoreRequest {
            schema: Some(SCHEMA_VERSION),
            program: Some(program),
            program_id: None,
            goal: None,
            candidate,
            rewards: all_rewards(),
            mode: AdjudicationMode::default(),
            h_cap: None,
            cost: CostFunction::default(),
            metrics_heuristic: true_heuristic(),
        }
    }

    pub fn from_json(body: &str) -> Result<Self, ScoreError> {
        let req: ScoreRequest =
            serde_json::from_str(body).map_err(|e| ScoreError::BadRequest(e.to_string()))?;
        req.check()?;
        Ok(req)
    }

    fn check(&self) -> Result<(), ScoreError> {
        if let Some(v) = self.schema {
            if v != SCHEMA_VERSION {
                return Err(ScoreError::BadRequest(format!("unsupported schema {v}")));
            }
        }
        if self.candidate.text.is_some() && self.candidate.steps.is_some() {
            return Err(ScoreError::BadRequest(
                "candidate has both text and steps".into(),
            ));
        }
        if self.program.is_none() && self.program_id.is_none() {
            return Err(ScoreError::BadRequest("no program or program_id".into()));
        }
        if matches!(self.metrics_heuristic, HeuristicKind::Custom) {
            return Err(ScoreError::BadRequest("metrics heuristic cannot be custom".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub correct: bool,
    pub efficiency_pushes: Option<f64>,
    pub efficiency_pops: Option<f64>,
    pub raw_score: Weight,
    pub steps: usize,
    pub pops: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyResponse {
    pub schema: u32,
    pub program_id: String,
    pub goal: String,
    pub correct: bool,
    pub failure: Option<Failure>,
    pub mode: AdjudicationMode,
    pub answer_seen: bool,
    pub steps: usize,
    pub diagnostics: Vec<Diagnostic>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreResponse {
    pub schema: u32,
    pub program_id: String,
    pub goal: String,
    pub verdict: Verdict,
    pub diagnostics: Vec<Diagnostic>,
    pub metrics: MetricsReport,
    pub rewards: Vec<RewardValue>,
}

/// Compact JSON followed by a newline; the body format of every response.
pub fn to_body<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string(value).expect("responses serialize");
    s.push('\n');
    s
}

struct Reference {
    table: HeuristicTable,
    trace: SearchTrace,
}

/// Everything needed to score candidates for one (program, goal, cost).
pub struct ScoringContext {
    pub program: Program,
    pub goal: Atom,
    pub cost: CostFunction,
    weights: WeightTable,
    verbalizer: Verbalizer,
    shortest: SearchTrace,
    references: HashMap<HeuristicKind, Reference>,
}

impl ScoringContext {
    pub fn build(program: Program, goal: Option<Atom>, cost: CostFunction) -> Result<Self, ScoreError> {
        let unprocessable = |m: String| ScoreError::Unprocessable(m);
        let goal = goal
            .or_else(|| program.goal().cloned())
            .ok_or_else(|| unprocessable(format!("program {} has no goal", program.id)))?;
        if !program.is_in_herbrand_base(&goal) {
            return Err(unprocessable(format!("goal {goal} is not in the Herbrand base")));
        }
        let verbalizer = Verbalizer::new(&program).map_err(|e| unprocessable(e.to_string()))?;
        let weights = minimal_model(&program, cost);
        let mut references = HashMap::new();
        let mut shortest = SearchTrace::new(program.id.clone(), Some(goal.clone()), Vec::new());
        for kind in [HeuristicKind::Zero, HeuristicKind::Dependency, HeuristicKind::TrueCostToGo] {
            let table = build_heuristic(&program, &goal, kind, cost).map_err(|e| unprocessable(e.to_string()))?;
            let result = astar(&program, &goal, &table, cost, false).map_err(|e| unprocessable(e.to_string()))?;
            if kind == HeuristicKind::Zero && result.is_provable() {
                let steps = extract_shortest_proof(&result).map_err(|e| unprocessable(e.to_string()))?;
                shortest.steps = steps;
            }
            references.insert(
                kind,
                Reference {
                    table,
                    trace: result.trace,
                },
            );
        }
        Ok(ScoringContext {
            program,
            goal,
            cost,
            weights,
            verbalizer,
            shortest,
            references,
        })
    }

    pub fn shortest(&self) -> &SearchTrace {
        &self.shortest
    }

    /// The search trace produced under `kind`.
    pub fn reference_trace(&self, kind: HeuristicKind) -> Option<&SearchTrace> {
        self.references.get(&kind).map(|r| &r.trace)
    }

    pub fn heuristic(&self, kind: HeuristicKind) -> Option<&HeuristicTable> {
        self.references.get(&kind).map(|r| &r.table)
    }

    pub fn verbalizer(&self) -> &Verbalizer {
        &self.verbalizer
    }

    pub fn weights(&self) -> &WeightTable {
        &self.weights
    }

    /// Structured steps must stay inside the Herbrand base; text candidates
    /// never fail here and report problems as diagnostics instead.
    pub fn parse(&self, candidate: &Candidate) -> Result<ParseOutcome, ScoreError> {
        match (&candidate.text, &candidate.steps) {
            (_, Some(steps)) => {
                let outside: Vec<String> = steps
                    .iter()
                    .flat_map(|s| s.premises.iter().chain(std::iter::once(&s.conclusion)))
                    .filter(|a| !self.program.is_in_herbrand_base(a))
                    .map(ToString::to_string)
                    .collect();
                if !outside.is_empty() {
                    return Err(ScoreError::Unprocessable(format!(
                        "candidate atoms outside the Herbrand base: {}",
                        outside.join(", ")
                    )));
                }
                Ok(ParseOutcome::from_steps(steps.clone()))
            }
            (Some(text), None) => Ok(parse_trace(text, &self.verbalizer)),
            (None, None) => Ok(ParseOutcome::from_steps(Vec::new())),
        }
    }

    pub fn verify(&self, candidate: &Candidate, mode: AdjudicationMode) -> Result<(ParseOutcome, Verdict), ScoreError> {
        let outcome = self.parse(candidate)?;
        let verdict = adjudicate(&outcome, &self.program, &self.goal, mode);
        Ok((outcome, verdict))
    }

    pub fn verify_response(&self, candidate: &Candidate, mode: AdjudicationMode) -> Result<VerifyResponse, ScoreError> {
        let (outcome, verdict) = self.verify(candidate, mode)?;
        Ok(VerifyResponse {
            schema: SCHEMA_VERSION,
            program_id: self.program.id.clone(),
            goal: self.goal.to_string(),
            correct: verdict.correct,
            failure: verdict.failure,
            mode: verdict.mode,
            answer_seen: outcome.answer_seen,
            steps: outcome.steps.len(),
            diagnostics: outcome.diagnostics,
        })
    }

    pub fn rewards(
        &self,
        trace: &SearchTrace,
        verdict: &Verdict,
        kinds: &[RewardKind],
        h_cap: Option<u64>,
    ) -> Vec<RewardValue> {
        kinds
            .iter()
            .map(|&kind| match kind.heuristic() {
                None if kind == RewardKind::Correctness => reward_correctness(verdict),
                None => reward_step_count(trace, &self.shortest, verdict),
                Some(h) => {
                    let r = &self.references[&h];
                    reward_astar(kind, trace, &r.trace, &self.weights, &r.table, verdict, h_cap)
                }
            })
            .collect()
    }

    pub fn metrics(&self, trace: &SearchTrace, verdict: &Verdict, heuristic: HeuristicKind) -> MetricsReport {
        let eff = |mode| {
            verdict
                .correct
                .then(|| efficiency(trace, &self.shortest, mode).ok())
                .flatten()
        };
        let raw = self
            .references
            .get(&heuristic)
            .and_then(|r| raw_score(trace, &self.weights, &r.table).ok())
            .unwrap_or(Weight::Infinite);
        MetricsReport {
            correct: verdict.correct,
            efficiency_pushes: eff(EfficiencyMode::Pushes),
            efficiency_pops: eff(EfficiencyMode::Pops),
            raw_score: raw,
            steps: trace.len(),
            pops: pops_set(trace).len(),
        }
    }

    pub fn score(&self, req: &ScoreRequest) -> Result<ScoreResponse, ScoreError> {
        let (outcome, verdict) = self.verify(&req.candidate, req.mode)?;
        let trace = outcome.to_trace(self.program.id.clone(), Some(self.goal.clone()));
        Ok(ScoreResponse {
            schema: SCHEMA_VERSION,
            program_id: self.program.id.clone(),
            goal: self.goal.to_string(),
            metrics: self.metrics(&trace, &verdict, req.metrics_heuristic),
            rewards: self.rewards(&trace, &verdict, &req.rewards, req.h_cap),
            verdict,
            diagnostics: outcome.diagnostics,
        })
    }
}

/// Program documents addressable by id.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    docs: BTreeMap<String, ProgramDoc>,
}

impl Corpus {
    pub fn new() -> Self {
        Corpus::default()
    }

    pub fn insert(&mut self, doc: ProgramDoc) -> Result<(), DocumentError> {
        let id = doc.id.clone();
        doc.to_program()?;
        self.docs.insert(id, doc);
        Ok(())
    }

    /// Loads every `.json` and `.jsonl` file in `dir`, in file-name order.
    /// Later documents replace earlier ones with the same id.
    pub fn load_dir(dir: &Path) -> Result<Self, DocumentError> {
        let io_err = |source| DocumentError::Io {
            path: dir.display().to_string(),
            source,
        };
        let mut paths: Vec<_> = fs::read_dir(dir)
            .map_err(io_err)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| matches!(p.extension().and_then(|e| e.to_str()), Some("json" | "jsonl")))
            .collect();
        paths.sort();
        let mut corpus = Corpus::new();
        for path in paths {
            let text = fs::read_to_string(&path).map_err(|source| DocumentError::Io {
                path: path.display().to_string(),
                source,
            })?;
            for doc in parse_program_docs(&text)? {
                corpus.insert(doc)?;
            }
        }
        Ok(corpus)
    }

    pub fn get(&self, id: &str) -> Option<&ProgramDoc> {
        self.docs.get(id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.docs.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }
}

type ContextKey = (String, Option<Atom>, CostFunction);

/// Scoring contexts keyed by program content hash, goal and cost.
#[derive(Default)]
pub struct Scorer {
    corpus: Corpus,
    contexts: RwLock<HashMap<ContextKey, Arc<ScoringContext>>>,
}

impl Scorer {
    pub fn new(corpus: Corpus) -> Self {
        Scorer {
            corpus,
            contexts: RwLock::default(),
        }
    }

    pub fn corpus(&self) -> &Corpus {
        &self.corpus
    }

    pub fn cached_contexts(&self) -> usize {
        self.contexts.read().expect("context lock").len()
    }

    pub fn context(&self, req: &ScoreRequest) -> Result<Arc<ScoringContext>, ScoreError> {
        req.check()?;
        let doc = match (&req.program, &req.program_id) {
            (Some(doc), _) => doc,
            (None, Some(id)) => self
                .corpus
                .get(id)
                .ok_or_else(|| ScoreError::UnknownProgram(id.clone()))?,
            (None, None) => unreachable!("checked above"),
        };
        let program = doc
            .to_program()
            .map_err(|e| ScoreError::Unprocessable(e.to_string()))?;
        let key = (program_fingerprint(&program), req.goal.clone(), req.cost);
        if let Some(ctx) = self.contexts.read().expect("context lock").get(&key) {
            return Ok(Arc::clone(ctx));
        }
        let ctx = Arc::new(ScoringContext::build(program, req.goal.clone(), req.cost)?);
        let mut contexts = self.contexts.write().expect("context lock");
        Ok(Arc::clone(contexts.entry(key).or_insert(ctx)))
    }

    pub fn score(&self, req: &ScoreRequest) -> Result<ScoreResponse, ScoreError> {
        self.context(req)?.score(req)
    }

    pub fn verify(&self, req: &ScoreRequest) -> Result<VerifyResponse, ScoreError> {
        self.context(req)?.verify_response(&req.candidate, req.mode)
    }

    /// Response body for a raw JSON score request.
    pub fn score_body(&self, body: &str) -> Result<String, ScoreError> {
        let req = ScoreRequest::from_json(body)?;
        self.score(&req).map(|r| to_body(&r))
    }

    pub fn verify_body(&self, body: &str) -> Result<String, ScoreError> {
        let req = ScoreRequest::from_json(body)?;
        self.verify(&req).map(|r| to_body(&r))
    }
}
