//! Reward signals over adjudicated traces.
//!
//! The decaying rewards have the form `exp(beta * (alpha - x))` with
//! `beta = ln 2 / alpha`, so matching the reference scores 1 and doubling
//! `x` halves the reward.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::heuristics::{HeuristicKind, HeuristicTable};
use crate::logic::WeightTable;
use crate::trace::{raw_score_capped, SearchTrace};
use crate::verify::Verdict;
use crate::weight::Weight;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RewardKind {
    Correctness,
    StepCount,
    AstarDependency,
    AstarTrue,
}

impl RewardKind {
    pub const ALL: [RewardKind; 4] = [
        RewardKind::Correctness,
        RewardKind::StepCount,
        RewardKind::AstarDependency,
        RewardKind::AstarTrue,
    ];

    /// Heuristic backing an A* reward.
    pub fn heuristic(self) -> Option<HeuristicKind> {
        match self {
            RewardKind::AstarDependency => Some(HeuristicKind::Dependency),
            RewardKind::AstarTrue => Some(HeuristicKind::TrueCostToGo),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RewardKind::Correctness => "correctness",
            RewardKind::StepCount => "step-count",
            RewardKind::AstarDependency => "astar-dependency",
            RewardKind::AstarTrue => "astar-true",
        }
    }
}

impl fmt::Display for RewardKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RewardKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RewardKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown reward kind {s:?}"))
    }
}

/// Decay parameters. `beta` is `ln 2 / alpha`, or `ln 2` when `alpha = 0`
/// where the reward degenerates to an indicator and `beta` is unused.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RewardParams {
    pub kind: RewardKind,
    pub alpha: f64,
    pub beta: f64,
}

impl RewardParams {
    pub fn new(kind: RewardKind, alpha: f64) -> Self {
        let beta = if alpha > 0.0 {
            std::f64::consts::LN_2 / alpha
        } else {
            std::f64::consts::LN_2
        };
        RewardParams { kind, alpha, beta }
    }

    /// Reward for a correct candidate with score `x`.
    pub fn decay(&self, x: Weight) -> f64 {
        let Weight::Finite(x) = x else {
            return 0.0;
        };
        if self.alpha == 0.0 {
            return if x == 0 { 1.0 } else { 0.0 };
        }
        (self.beta * (self.alpha - x as f64)).exp()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RewardValue {
    pub kind: RewardKind,
    pub value: f64,
    /// `None` for the correctness reward, which has no decay.
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    /// Quantity fed to the decay: step count or raw score.
    pub raw_score: Option<Weight>,
}

pub fn reward_correctness(verdict: &Verdict) -> RewardValue {
    RewardValue {
        kind: RewardKind::Correctness,
        value: if verdict.correct { 1.0 } else { 0.0 },
        alpha: None,
        beta: None,
        raw_score: None,
    }
}

pub fn reward_step_count(trace: &SearchTrace, shortest: &SearchTrace, verdict: &Verdict) -> RewardValue {
    let params = RewardParams::new(RewardKind::StepCount, shortest.len() as f64);
    let x = Weight::Finite(trace.len() as u64);
    RewardValue {
        kind: RewardKind::StepCount,
        value: if verdict.correct { params.decay(x) } else { 0.0 },
        alpha: Some(params.alpha),
        beta: Some(params.beta),
        raw_score: Some(x),
    }
}

/// A* reward of `trace` against the reference trace produced by search under
/// the same heuristic. `weights` must cover the minimal model. With `h_cap`,
/// infinite heuristic values count as the cap in both scores.
pub fn reward_astar(
    kind: RewardKind,
    trace: &SearchTrace,
    reference: &SearchTrace,
    weights: &WeightTable,
    heuristic: &HeuristicTable,
    verdict: &Verdict,
    h_cap: Option<u64>,
) -> RewardValue {
    let score = |t: &SearchTrace| raw_score_capped(t, weights, heuristic, h_cap).unwrap_or(Weight::Infinite);
    let alpha = score(reference);
    let params = RewardParams::new(kind, alpha.as_f64());
    let x = score(trace);
    RewardValue {
        kind,
        value: if verdict.correct { params.decay(x) } else { 0.0 },
        alpha: Some(params.alpha),
        beta: Some(params.beta),
        raw_score: Some(x),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decay_halves_on_doubling() {
        let p = RewardParams::new(RewardKind::AstarTrue, 15.0);
        assert!((p.decay(Weight::Finite(15)) - 1.0).abs() < 1e-12);
        assert!((p.decay(Weight::Finite(30)) - 0.5).abs() < 1e-12);
        assert!(p.decay(Weight::Finite(10)) > 1.0);
        assert_eq!(p.decay(Weight::Infinite), 0.0);
        assert!(p.beta > 0.0);
    }

    #[test]
    fn zero_alpha_is_an_indicator() {
        let p = RewardParams::new(RewardKind::StepCount, 0.0);
        assert_eq!(p.decay(Weight::Finite(0)), 1.0);
        assert_eq!(p.decay(Weight::Finite(1)), 0.0);
    }

    #[test]
    fn kinds_round_trip() {
        for k in RewardKind::ALL {
            assert_eq!(k.as_str().parse::<RewardKind>().unwrap(), k);
            assert_eq!(serde_json::to_value(k).unwrap(), k.as_str());
        }
    }
}
