//! Voting stake derived from a role's decoded resolution trace.
//!
//! A trace that runs from a tactical schedule state to a strategic outcome
//! state is scored by the sum of per-phase position weights of the states
//! it visits; the information cross entropy is that weight sum times the
//! negative log2 of the trace probability, and the stake is its floor,
//! clamped to at least one so every role can vote.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::utfm::{Phase, ResolutionDistribution, Trace};

#[derive(Debug, Error, PartialEq)]
pub enum StakeError {
    #[error("trace must span tactical to strategic activity; it starts in the {0} phase")]
    TraceStartsOutsideTactical(Phase),
    #[error("trace must end in a strategic (outcome) state; it ends in the {0} phase")]
    TraceEndsOutsideStrategic(Phase),
    #[error("trace is empty")]
    EmptyTrace,
    #[error("trace has probability zero; its information content is unbounded")]
    InfiniteStake,
}

/// Per-phase position weights. Operational states carry the most weight
/// because they are the only ones active while a flight is executing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PositionWeights {
    pub tactical: u64,
    pub operational: u64,
    pub strategic: u64,
}

impl Default for PositionWeights {
    fn default() -> Self {
        PositionWeights { tactical: 1, operational: 4, strategic: 2 }
    }
}

impl PositionWeights {
    pub fn weight(&self, phase: Phase) -> u64 {
        match phase {
            Phase::Tactical => self.tactical,
            Phase::Operational => self.operational,
            Phase::Strategic => self.strategic,
        }
    }
}

/// Stake derivation record for one functional role.
#[derive(Debug, Clone, PartialEq)]
pub struct StakeRecord {
    pub role: String,
    pub trace_log2_prob: f64,
    /// Sum of position weights over visited states.
    pub weight_sum: u64,
    /// Number of transitions in the trace.
    pub transitions: u64,
    pub ice: f64,
    pub stake: u64,
}

/// Shannon entropy of the distribution, in bits. `0 * log2(0)` counts as 0.
pub fn trace_entropy(dist: &ResolutionDistribution) -> f64 {
    dist.probabilities()
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.log2())
        .sum()
}

/// Entropy of an explicit probability list, in bits.
pub fn entropy_bits(probabilities: &[f64]) -> f64 {
    probabilities
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum()
}

/// Sum of position weights over the states a trace visits, plus its
/// transition count. The trace must start in a tactical state and end in a
/// strategic one.
pub fn path_weight_sum(trace: &Trace, weights: &PositionWeights) -> Result<(u64, u64), StakeError> {
    let first = trace.states.first().ok_or(StakeError::EmptyTrace)?;
    let last = trace.states.last().ok_or(StakeError::EmptyTrace)?;
    if last.phase() != Phase::Strategic {
        return Err(StakeError::TraceEndsOutsideStrategic(last.phase()));
    }
    if first.phase() != Phase::Tactical {
        return Err(StakeError::TraceStartsOutsideTactical(first.phase()));
    }
    let s: u64 = trace.states.iter().map(|st| weights.weight(st.phase())).sum();
    Ok((s, trace.transitions() as u64))
}

/// Information cross entropy of a trace: weight sum times the negative log2
/// of the trace probability. Rejects zero-probability traces, whose stake
/// would be unbounded.
pub fn information_cross_entropy(trace: &Trace, weights: &PositionWeights) -> Result<f64, StakeError> {
    if trace.log2_probability == f64::NEG_INFINITY {
        return Err(StakeError::InfiniteStake);
    }
    let (s, _) = path_weight_sum(trace, weights)?;
    Ok(-(s as f64) * trace.log2_probability)
}

/// Voting stake: floor of the information cross entropy, clamped to at
/// least one. Ledger membership requires strictly positive stake, so a
/// near-certain trace still gets a vote.
pub fn voting_stake(ice: f64) -> u64 {
    (ice.floor() as u64).max(1)
}

/// Full derivation for one role from its decoded trace.
pub fn stake_record(role: &str, trace: &Trace, weights: &PositionWeights) -> Result<StakeRecord, StakeError> {
    let (weight_sum, transitions) = path_weight_sum(trace, weights)?;
    let ice = information_cross_entropy(trace, weights)?;
    Ok(StakeRecord {
        role: role.to_string(),
        trace_log2_prob: trace.log2_probability,
        weight_sum,
        transitions,
        ice,
        stake: voting_stake(ice),
    })
}

#[allow(dead_code)]
fn distribution(entries: &[(&str, f64)]) -> ResolutionDistribution {
    ResolutionDistribution {
        outcomes: entries
            .iter()
            .map(|(k, v)| (k.to_string(), *v))
            .collect::<BTreeMap<_, _>>(),
    }
}
