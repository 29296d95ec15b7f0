//! Deterministic discrete-event gossip simulation.
//!
//! Replicas of the hashgraph, one per functional role, exchange events by
//! push gossip: on its sync interval an agent picks a random peer and
//! sends everything the peer lacks; the receiver records the sync as a new
//! event carrying its next queued disruption resolutions. Everything is
//! driven by one seeded RNG and a single priority queue of timed actions,
//! so a (config, seed) pair fully determines every event id, round, and
//! consensus position.

mod engine;

pub use engine::{run_params, Adversary, AdversaryBehavior, SimOutput, SimParams};

use std::collections::BTreeMap;

use thiserror::Error;

use crate::hashgraph::{AgentId, Transaction};
use crate::scenario::{
    derive_rng, generate_queues, Disruption, ImpactStub, LatencyModel, Role, Scenario,
};
use crate::stake::{stake_record, PositionWeights, StakeRecord};
use crate::utfm::{ActionSymbol, Phase, StateId, Utfm, UtfmBuilder};

use rand::prelude::*;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("adversarial stake {stake} of {total} exceeds one third of the total")]
    AdversaryStakeTooHigh { stake: u64, total: u64 },
    #[error("adversary role {0} is not a member of this scenario")]
    AdversaryNotMember(String),
    #[error("stake derivation failed for {role}: {message}")]
    StakeDerivation { role: String, message: String },
}

/// Simulation configuration. Derives from a [`Scenario`] or is built
/// directly by tests.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Participating roles; grown alphabetically in scaling experiments.
    pub agents: Vec<Role>,
    pub seed: u64,
    pub latency: LatencyModel,
    pub sync_interval_ms: u64,
    pub max_sim_time_ms: u64,
    pub queue_sizes: BTreeMap<Role, u64>,
    pub alphabet: Vec<ActionSymbol>,
}

impl SimConfig {
    pub fn from_scenario(scenario: &Scenario) -> SimConfig {
        SimConfig {
            agents: scenario.agents.clone(),
            seed: scenario.sim.seed,
            latency: scenario.sim.latency,
            sync_interval_ms: scenario.sim.sync_interval_ms,
            max_sim_time_ms: scenario.sim.max_sim_time_ms,
            queue_sizes: scenario.queue_sizes.clone(),
            alphabet: scenario.alphabet.clone(),
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.agents.len() < 2 {
            return Err(SimError::InvalidConfig(format!(
                "need at least 2 agents, got {}",
                self.agents.len()
            )));
        }
        let mut sorted = self.agents.clone();
        sorted.dedup();
        if sorted.len() != self.agents.len() {
            return Err(SimError::InvalidConfig("duplicate roles in membership".into()));
        }
        if self.sync_interval_ms == 0 {
            return Err(SimError::InvalidConfig("sync interval must be positive".into()));
        }
        if self.alphabet.is_empty() {
            return Err(SimError::InvalidConfig("alphabet must be non-empty".into()));
        }
        Ok(())
    }
}

/// The left-to-right state topology: a state may loop on itself, advance
/// to the next flight segment within its phase, or hand over to the same
/// segment of the next phase. Successor probabilities and emissions are
/// seeded per role so roles end up with distinct stakes.
pub fn role_utfm(role: Role, alphabet: &[ActionSymbol], seed: u64) -> Utfm {
    let mut rng = derive_rng(seed, "utfm", role.index() as u64);
    let states = StateId::ALL;
    let mut b = UtfmBuilder::new()
        .states(states)
        .alphabet(alphabet.iter().cloned())
        .initial(StateId::Tas, 1.0);
    for s in states.iter().copied().filter(|s| s.phase() == Phase::Strategic) {
        b = b.accept(s);
    }

    let successor_states = |s: StateId| -> Vec<StateId> {
        let mut out = vec![s];
        if let Some(&next_seg) = states
            .iter()
            .find(|t| t.phase() == s.phase() && t.segment() == s.segment() + 1)
        {
            out.push(next_seg);
        }
        let next_phase = match s.phase() {
            Phase::Tactical => Some(Phase::Operational),
            Phase::Operational => Some(Phase::Strategic),
            Phase::Strategic => None,
        };
        if let Some(p) = next_phase {
            if let Some(&handover) = states
                .iter()
                .find(|t| t.phase() == p && t.segment() == s.segment())
            {
                out.push(handover);
            }
        }
        out
    };

    for &s in &states {
        let succ = successor_states(s);
        for a in alphabet {
            let mut weights: Vec<f64> = (0..succ.len()).map(|_| rng.gen_range(0.5..1.5)).collect();
            let total: f64 = weights.iter().sum();
            weights.iter_mut().for_each(|w| *w /= total);
            for (t, w) in succ.iter().zip(&weights) {
                b = b.transition(s, a.clone(), *t, *w);
            }
        }
        let mut emission: Vec<f64> = (0..alphabet.len())
            .map(|_| 1.0 + rng.gen_range(-1e-3..1e-3))
            .collect();
        let total: f64 = emission.iter().sum();
        emission.iter_mut().for_each(|w| *w /= total);
        for (a, w) in alphabet.iter().zip(&emission) {
            b = b.emission(s, a.clone(), *w);
        }
    }

    let model = b.build().expect("role topology is well-formed");
    debug_assert!(model.validate().is_valid());
    model
}

/// Per-role calibration input: a seeded sequence long enough to traverse
/// the full schedule-to-outcome span. The role's epoch stake is frozen
/// from the decoded trace of this sequence.
pub fn calibration_input(role: Role, alphabet: &[ActionSymbol], seed: u64) -> Vec<ActionSymbol> {
    let mut rng = derive_rng(seed, "calibration", role.index() as u64);
    (0..11)
        .map(|_| alphabet[rng.gen_range(0..alphabet.len())].clone())
        .collect()
}

/// Derive the frozen epoch stake of one role.
pub fn derive_stake_record(
    role: Role,
    alphabet: &[ActionSymbol],
    seed: u64,
    weights: &PositionWeights,
) -> Result<StakeRecord, SimError> {
    let model = role_utfm(role, alphabet, seed);
    let input = calibration_input(role, alphabet, seed);
    let trace = model
        .viterbi_decode_accepting(&input)
        .map_err(|e| SimError::StakeDerivation { role: role.name().into(), message: e.to_string() })?;
    stake_record(role.name(), &trace, weights)
        .map_err(|e| SimError::StakeDerivation { role: role.name().into(), message: e.to_string() })
}

/// Convert one queued disruption into the transaction its agent will post:
/// the reliability measure is the information cross entropy of the decoded
/// trace for the disruption's input criteria, and the impact comes from
/// the pluggable estimator stub.
fn transaction_for(
    agent: AgentId,
    model: &Utfm,
    weights: &PositionWeights,
    stub: &ImpactStub,
    d: &Disruption,
) -> Result<Transaction, SimError> {
    let input = d.input_criteria.concatenated();
    let trace = model
        .viterbi_decode_accepting(&input)
        .map_err(|e| SimError::StakeDerivation { role: d.role.name().into(), message: e.to_string() })?;
    let ice = crate::stake::information_cross_entropy(&trace, weights)
        .map_err(|e| SimError::StakeDerivation { role: d.role.name().into(), message: e.to_string() })?;
    Ok(Transaction {
        role: agent,
        flight_id: d.flight_id,
        queue_position: d.queue_position,
        stake_entropy: ice,
        impact: stub.predict(d),
    })
}

/// Assemble engine parameters from a config: role machines, frozen stakes,
/// and fully materialized transaction queues.
pub fn build_params(config: &SimConfig) -> Result<(SimParams, Vec<StakeRecord>), SimError> {
    config.validate()?;
    let weights = PositionWeights::default();
    let stub = ImpactStub::new(config.seed);

    let member_sizes: BTreeMap<Role, u64> = config
        .agents
        .iter()
        .map(|&r| (r, config.queue_sizes.get(&r).copied().unwrap_or_else(|| r.default_queue_size())))
        .collect();
    let mut queues_by_role = generate_queues(&member_sizes, &config.alphabet, config.seed);

    let mut stakes = Vec::with_capacity(config.agents.len());
    let mut names = Vec::with_capacity(config.agents.len());
    let mut queues = Vec::with_capacity(config.agents.len());
    let mut records = Vec::with_capacity(config.agents.len());
    for (i, &role) in config.agents.iter().enumerate() {
        let record = derive_stake_record(role, &config.alphabet, config.seed, &weights)?;
        let model = role_utfm(role, &config.alphabet, config.seed);
        let agent = AgentId(i as u64);
        let mut txs = Vec::new();
        for d in queues_by_role.remove(&role).unwrap_or_default() {
            txs.push(transaction_for(agent, &model, &weights, &stub, &d)?);
        }
        stakes.push(record.stake);
        names.push(role.name().to_string());
        queues.push(txs);
        records.push(record);
    }

    Ok((
        SimParams {
            stakes,
            names,
            queues,
            seed: config.seed,
            latency: config.latency,
            sync_interval_ms: config.sync_interval_ms,
            max_sim_time_ms: config.max_sim_time_ms,
            transactions_per_event: 5,
            adversary: None,
            stop_at_first_consensus: false,
            keep_transcript: false,
        },
        records,
    ))
}

/// Run a scenario replay end to end.
pub fn run(config: &SimConfig) -> Result<SimOutput, SimError> {
    let (params, records) = build_params(config)?;
    let mut out = run_params(&params)?;
    out.stake_records = records;
    Ok(out)
}

/// Run with one misbehaving member. The adversary's stake must stay inside
/// the fault model (at most one third of the total).
pub fn run_with_adversary(
    config: &SimConfig,
    role: Role,
    behavior: AdversaryBehavior,
) -> Result<SimOutput, SimError> {
    let (mut params, records) = build_params(config)?;
    let agent = config
        .agents
        .iter()
        .position(|&r| r == role)
        .ok_or_else(|| SimError::AdversaryNotMember(role.name().into()))?;
    params.adversary = Some(Adversary { agent, behavior });
    let mut out = run_params(&params)?;
    out.stake_records = records;
    Ok(out)
}

/// Grow membership alphabetically from `min_roles` to `max_roles` and
/// measure the simulated time to first consensus at each size.
pub fn scaling_experiment(
    base: &SimConfig,
    min_roles: usize,
    max_roles: usize,
) -> Result<Vec<(usize, Option<u64>)>, SimError> {
    if min_roles < 2 || min_roles > max_roles {
        return Err(SimError::InvalidConfig(format!(
            "bad role range {min_roles}..{max_roles}"
        )));
    }
    if base.agents.len() < max_roles {
        return Err(SimError::InvalidConfig(format!(
            "scenario defines {} roles but the experiment needs {max_roles}",
            base.agents.len()
        )));
    }
    let mut ordered = base.agents.clone();
    ordered.sort();

    let mut table = Vec::new();
    for n in min_roles..=max_roles {
        let mut config = base.clone();
        config.agents = ordered[..n].to_vec();
        let (mut params, _) = build_params(&config)?;
        params.stop_at_first_consensus = true;
        let out = run_params(&params)?;
        table.push((n, out.report.time_to_first_consensus_ms));
    }
    Ok(table)
}
