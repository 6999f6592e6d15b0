//! Canonical JSON documents: programs, traces and heuristic dumps.
//!
//! A program document looks like
//!
//! ```json
//! {"id": "bible",
//!  "predicates": [{"name": "parent", "arity": 2, "template": "{0} is a parent of {1}"}],
//!  "constants": ["terah", "abraham"],
//!  "rules": [{"premises": [{"pred": "parent", "args": [{"var": "X"}, {"var": "Y"}]}],
//!             "conclusion": {"pred": "ancestor", "args": [{"var": "X"}, {"var": "Y"}]}}],
//!  "axioms": [{"pred": "parent", "args": [{"const": "terah"}, {"const": "abraham"}]}],
//!  "goal": {"pred": "ancestor", "args": [{"const": "terah"}, {"const": "abraham"}]}}
//! ```
//!
//! Files hold either one document or one document per line (JSONL).

use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::logic::{Atom, PredicateDecl, Program, ProgramError, Rule};
use crate::search::SearchResult;
use crate::trace::{ProofStep, SearchTrace};
use crate::weight::Weight;

#[derive(Debug, Error)]
pub enum DocumentError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("malformed JSON in {context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("invalid program {id}: {source}")]
    Program {
        id: String,
        #[source]
        source: ProgramError,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredicateDoc {
    pub name: String,
    pub arity: usize,
    pub template: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgramDoc {
    pub id: String,
    pub predicates: Vec<PredicateDoc>,
    pub constants: Vec<String>,
    pub rules: Vec<Rule>,
    pub axioms: Vec<Atom>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub goal: Option<Atom>,
    /// Provenance for generated instances; ignored by the engine.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<serde_json::Value>,
}

impl ProgramDoc {
    pub fn from_program(program: &Program) -> Self {
        ProgramDoc {
            id: program.id.clone(),
            predicates: program
                .predicates()
                .iter()
                .map(|p| PredicateDoc {
                    name: p.name.clone(),
                    arity: p.arity,
                    template: p.template.clone(),
                })
                .collect(),
            constants: program.constants().to_vec(),
            rules: program.rules().to_vec(),
            axioms: program.axioms().cloned().collect(),
            goal: program.goal().cloned(),
            metadata: None,
        }
    }

    pub fn to_program(&self) -> Result<Program, DocumentError> {
        Program::new(
            self.id.clone(),
            self.predicates
                .iter()
                .map(|p| PredicateDecl {
                    name: p.name.clone(),
                    arity: p.arity,
                    template: p.template.clone(),
                })
                .collect(),
            self.constants.clone(),
            self.rules.clone(),
            self.axioms.clone(),
            self.goal.clone(),
        )
        .map_err(|source| DocumentError::Program {
            id: self.id.clone(),
            source,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, DocumentError> {
        serde_json::from_str(text).map_err(|source| DocumentError::Json {
            context: "program document".into(),
            source,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("program documents serialize")
    }
}

/// Content hash of a program (metadata excluded), hex encoded.
pub fn program_fingerprint(program: &Program) -> String {
    let doc = ProgramDoc::from_program(program);
    let digest = Sha256::digest(doc.to_json().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Parses a file body holding a single JSON document or JSONL.
pub fn parse_program_docs(text: &str) -> Result<Vec<ProgramDoc>, DocumentError> {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Ok(Vec::new());
    }
    if let Ok(doc) = serde_json::from_str::<ProgramDoc>(trimmed) {
        return Ok(vec![doc]);
    }
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|source| DocumentError::Json {
                context: format!("line {}", i + 1),
                source,
            })
        })
        .collect()
}

pub fn read_program_docs(path: &Path) -> Result<Vec<ProgramDoc>, DocumentError> {
    let text = fs::read_to_string(path).map_err(|source| DocumentError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_program_docs(&text)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceDoc {
    pub steps: Vec<ProofStep>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub goal: Option<Atom>,
    #[serde(default = "infinite")]
    pub weight: Weight,
}

fn infinite() -> Weight {
    Weight::Infinite
}

impl TraceDoc {
    pub fn from_trace(trace: &SearchTrace, weight: Weight) -> Self {
        TraceDoc {
            steps: trace.steps.clone(),
            goal: trace.goal.clone(),
            weight,
        }
    }

    pub fn from_result(result: &SearchResult) -> Self {
        TraceDoc::from_trace(&result.trace, result.goal_weight)
    }

    pub fn into_trace(self, program_id: impl Into<String>) -> SearchTrace {
        SearchTrace::new(program_id, self.goal, self.steps)
    }
}
