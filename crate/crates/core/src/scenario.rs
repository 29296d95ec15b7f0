//! Scenario ingestion and synthesis.
//!
//! A scenario names the participating functional roles and supplies (or
//! defaults) everything a replay needs: per-role disruption queue sizes,
//! per-phase pseudocounts, the action alphabet, simulation timing, and the
//! passenger cost rate. Disruption queues themselves are generated
//! synthetically and deterministically from the scenario seed, and the
//! recovery-impact estimator is a pluggable deterministic stub producing
//! values inside configured ranges.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::utfm::ActionSymbol;

/// The closed set of functional roles in network operations control,
/// in alphabetical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Role {
    CustomerHold,
    DispatchCsc,
    FlightOperations,
    FuelManagement,
    GroundOperations,
    Inflight,
    Maintenance,
    Nas,
    Security,
    Technology,
    Weather,
}

impl Role {
    pub const ALL: [Role; 11] = [
        Role::CustomerHold,
        Role::DispatchCsc,
        Role::FlightOperations,
        Role::FuelManagement,
        Role::GroundOperations,
        Role::Inflight,
        Role::Maintenance,
        Role::Nas,
        Role::Security,
        Role::Technology,
        Role::Weather,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Role::CustomerHold => "Customer Hold",
            Role::DispatchCsc => "Dispatch CSC",
            Role::FlightOperations => "Flight Operations",
            Role::FuelManagement => "Fuel Management",
            Role::GroundOperations => "Ground Operations",
            Role::Inflight => "Inflight",
            Role::Maintenance => "Maintenance",
            Role::Nas => "NAS",
            Role::Security => "Security",
            Role::Technology => "Technology",
            Role::Weather => "Weather",
        }
    }

    pub fn parse(s: &str) -> Option<Role> {
        Role::ALL.iter().copied().find(|r| r.name() == s)
    }

    pub fn index(self) -> usize {
        Role::ALL.iter().position(|&r| r == self).unwrap()
    }

    /// Default queued-disruption count for this role.
    pub fn default_queue_size(self) -> u64 {
        match self {
            Role::CustomerHold => 469,
            Role::DispatchCsc => 175,
            Role::FlightOperations => 364,
            Role::FuelManagement => 49,
            Role::GroundOperations => 1684,
            Role::Inflight => 795,
            Role::Maintenance => 336,
            Role::Nas => 227,
            Role::Security => 30,
            Role::Technology => 90,
            Role::Weather => 127,
        }
    }

    /// Default per-phase pseudocounts (tactical, operational, strategic).
    pub fn default_pseudocounts(self) -> (u64, u64, u64) {
        match self {
            Role::CustomerHold => (1906, 11_289, 3222),
            Role::DispatchCsc => (1988, 3160, 4792),
            Role::FlightOperations => (6365, 10_580, 2682),
            Role::FuelManagement => (603, 1180, 228),
            Role::GroundOperations => (8146, 48_827, 5748),
            Role::Inflight => (4751, 25_423, 3505),
            Role::Maintenance => (6985, 4901, 4648),
            Role::Nas => (2221, 2774, 1184),
            Role::Security => (850, 955, 145),
            Role::Technology => (869, 2206, 397),
            Role::Weather => (1483, 597, 1065),
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Estimated effect of enacting one disruption resolution, in minutes.
/// Negative tactical/strategic delays mean earlier-than-planned execution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RecoveryImpact {
    pub tactical_delay_min: i64,
    pub turnaround_min: i64,
    pub block_time_min: i64,
    pub strategic_delay_min: i64,
}

/// Inclusive sampling ranges for the impact stub.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ImpactRanges {
    pub tactical: (i64, i64),
    pub turnaround: (i64, i64),
    pub block: (i64, i64),
    pub strategic: (i64, i64),
}

impl Default for ImpactRanges {
    fn default() -> Self {
        ImpactRanges {
            tactical: (-20, 61),
            turnaround: (1, 41),
            block: (93, 339),
            strategic: (-14, 40),
        }
    }
}

/// Deterministic stand-in for the predictive impact model: a seeded pure
/// function of (role, flight) with outputs inside the configured ranges.
/// A trained predictor can replace it behind the same call.
#[derive(Debug, Clone, Copy)]
pub struct ImpactStub {
    pub seed: u64,
    pub ranges: ImpactRanges,
}

impl ImpactStub {
    pub fn new(seed: u64) -> Self {
        ImpactStub { seed, ranges: ImpactRanges::default() }
    }

    pub fn predict(&self, disruption: &Disruption) -> RecoveryImpact {
        self.predict_for(disruption.role, disruption.flight_id)
    }

    pub fn predict_for(&self, role: Role, flight_id: u64) -> RecoveryImpact {
        let mut rng = derive_rng(self.seed, "impact", (role.index() as u64) << 48 | flight_id);
        let r = self.ranges;
        RecoveryImpact {
            tactical_delay_min: rng.gen_range(r.tactical.0..=r.tactical.1),
            turnaround_min: rng.gen_range(r.turnaround.0..=r.turnaround.1),
            block_time_min: rng.gen_range(r.block.0..=r.block.1),
            strategic_delay_min: rng.gen_range(r.strategic.0..=r.strategic.1),
        }
    }
}

/// Passenger time valuation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostModel {
    pub passenger_value_per_hour: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel { passenger_value_per_hour: 47.0 }
    }
}

/// Cost of a recovery plan per disrupted passenger, assuming the passenger
/// rides every flight in the plan: total discretionary delay (tactical plus
/// strategic) in hours, valued at the configured rate.
pub fn passenger_cost(plan: &[RecoveryImpact], model: &CostModel) -> f64 {
    let total_min: i64 = plan
        .iter()
        .map(|r| r.tactical_delay_min + r.strategic_delay_min)
        .sum();
    total_min as f64 / 60.0 * model.passenger_value_per_hour
}

/// Input criteria for one disruption, one symbol sequence per phase.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseCriteria {
    pub tactical: Vec<ActionSymbol>,
    pub operational: Vec<ActionSymbol>,
    pub strategic: Vec<ActionSymbol>,
}

impl PhaseCriteria {
    /// Concatenated tactical-to-strategic input sequence.
    pub fn concatenated(&self) -> Vec<ActionSymbol> {
        self.tactical
            .iter()
            .chain(&self.operational)
            .chain(&self.strategic)
            .cloned()
            .collect()
    }
}

/// One queued disrupted flight schedule awaiting resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct Disruption {
    pub flight_id: u64,
    pub role: Role,
    pub input_criteria: PhaseCriteria,
    pub queue_position: u64,
}

/// Derive an independent RNG stream from a scenario seed, a purpose tag,
/// and a discriminator.
pub fn derive_rng(seed: u64, tag: &str, extra: u64) -> ChaCha12Rng {
    let mut h = Sha256::new();
    h.update(seed.to_be_bytes());
    h.update(tag.as_bytes());
    h.update(extra.to_be_bytes());
    ChaCha12Rng::from_seed(h.finalize().into())
}

/// Default action alphabet: eight opaque tokens.
pub fn default_alphabet() -> Vec<ActionSymbol> {
    (0..8).map(|i| ActionSymbol::new(format!("a{i}"))).collect()
}

/// Synthesize per-role disruption queues: unique flight ids, seeded input
/// criteria, one queue entry per configured slot.
pub fn generate_queues(
    sizes: &BTreeMap<Role, u64>,
    alphabet: &[ActionSymbol],
    seed: u64,
) -> BTreeMap<Role, Vec<Disruption>> {
    let mut used_ids: HashSet<u64> = HashSet::new();
    let mut queues = BTreeMap::new();
    let total: u64 = sizes.values().sum();
    for (&role, &count) in sizes {
        let mut rng = derive_rng(seed, "queue", role.index() as u64);
        let mut queue = Vec::with_capacity(count as usize);
        for position in 0..count {
            let flight_id = loop {
                let candidate = rng.gen_range(1000u64..100_000);
                if used_ids.insert(candidate) {
                    break candidate;
                }
            };
            let mut phase_seq = |_phase: usize| -> Vec<ActionSymbol> {
                let len = rng.gen_range(2..=4);
                (0..len)
                    .map(|_| alphabet[rng.gen_range(0..alphabet.len())].clone())
                    .collect()
            };
            queue.push(Disruption {
                flight_id,
                role,
                input_criteria: PhaseCriteria {
                    tactical: phase_seq(0),
                    operational: phase_seq(1),
                    strategic: phase_seq(2),
                },
                queue_position: position,
            });
        }
        queues.insert(role, queue);
    }
    log::info!(
        "generated {total} queued disruptions across {} roles",
        sizes.len()
    );
    queues
}

/// Network latency applied to each sync transmission.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LatencyModel {
    ConstantMs(u64),
    UniformMs { min: u64, max: u64 },
}

impl LatencyModel {
    pub fn sample(&self, rng: &mut ChaCha12Rng) -> u64 {
        match *self {
            LatencyModel::ConstantMs(ms) => ms,
            LatencyModel::UniformMs { min, max } => rng.gen_range(min..=max),
        }
    }
}

/// Simulation timing block of a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimSettings {
    pub seed: u64,
    pub sync_interval_ms: u64,
    pub latency: LatencyModel,
    pub max_sim_time_ms: u64,
}

impl Default for SimSettings {
    fn default() -> Self {
        SimSettings {
            seed: 1,
            sync_interval_ms: 100,
            latency: LatencyModel::UniformMs { min: 10, max: 50 },
            max_sim_time_ms: 60_000,
        }
    }
}

/// A fully resolved scenario: every optional block filled with defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub agents: Vec<Role>,
    pub queue_sizes: BTreeMap<Role, u64>,
    /// Per-role (tactical, operational, strategic) prior counts.
    pub pseudocounts: BTreeMap<Role, (u64, u64, u64)>,
    pub alphabet: Vec<ActionSymbol>,
    pub sim: SimSettings,
    pub cost: CostModel,
}

impl Scenario {
    /// A scenario over the given roles with every block defaulted.
    pub fn with_defaults(agents: Vec<Role>) -> Scenario {
        let queue_sizes = agents.iter().map(|&r| (r, r.default_queue_size())).collect();
        let pseudocounts = agents.iter().map(|&r| (r, r.default_pseudocounts())).collect();
        Scenario {
            agents,
            queue_sizes,
            pseudocounts,
            alphabet: default_alphabet(),
            sim: SimSettings::default(),
            cost: CostModel::default(),
        }
    }

    pub fn generate_queues(&self) -> BTreeMap<Role, Vec<Disruption>> {
        generate_queues(&self.queue_sizes, &self.alphabet, self.sim.seed)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ScenarioError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: unknown role `{name}`")]
    UnknownRole { line: usize, name: String },
    #[error("{0}")]
    Validation(String),
    #[error("failed to read scenario: {0}")]
    Io(String),
}

fn perr(line: usize, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Parse { line, message: message.into() }
}

/// Parse scenario text. Only the `[agents]` section is mandatory; other
/// blocks default from the built-in tables. Unknown sections and keys are
/// rejected.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    #[derive(PartialEq, Clone, Copy)]
    enum Section {
        None,
        Agents,
        Queues,
        Pseudocounts,
        Alphabet,
        Sim,
        Cost,
    }

    let mut section = Section::None;
    let mut agents: Vec<Role> = Vec::new();
    let mut queues: BTreeMap<Role, u64> = BTreeMap::new();
    let mut pseudo: BTreeMap<Role, [Option<u64>; 3]> = BTreeMap::new();
    let mut alphabet: Option<Vec<ActionSymbol>> = None;
    let mut sim = SimSettings::default();
    let mut cost = CostModel::default();

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            section = match name {
                "agents" => Section::Agents,
                "queues" => Section::Queues,
                "pseudocounts" => Section::Pseudocounts,
                "alphabet" => Section::Alphabet,
                "sim" => Section::Sim,
                "cost" => Section::Cost,
                other => return Err(perr(lineno, format!("unknown section `[{other}]`"))),
            };
            continue;
        }

        let parse_u64 = |s: &str| -> Result<u64, ScenarioError> {
            s.parse::<u64>().map_err(|_| perr(lineno, format!("expected integer, got `{s}`")))
        };
        let split_kv = |line: &str| -> Result<(String, String), ScenarioError> {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| perr(lineno, "expected `key = value`"))?;
            Ok((k.trim().to_string(), v.trim().to_string()))
        };
        let role_of = |name: &str| -> Result<Role, ScenarioError> {
            Role::parse(name).ok_or_else(|| ScenarioError::UnknownRole {
                line: lineno,
                name: name.to_string(),
            })
        };

        match section {
            Section::None => return Err(perr(lineno, "content before any section header")),
            Section::Agents => {
                let role = role_of(line)?;
                if agents.contains(&role) {
                    return Err(perr(lineno, format!("role `{role}` listed twice")));
                }
                agents.push(role);
            }
            Section::Queues => {
                let (k, v) = split_kv(line)?;
                queues.insert(role_of(&k)?, parse_u64(&v)?);
            }
            Section::Pseudocounts => {
                let (k, v) = split_kv(line)?;
                let (role_name, phase_name) = k
                    .rsplit_once('.')
                    .ok_or_else(|| perr(lineno, "expected `Role.phase = count`"))?;
                let role = role_of(role_name.trim())?;
                let slot = match phase_name.trim() {
                    "tactical" => 0,
                    "operational" => 1,
                    "strategic" => 2,
                    other => return Err(perr(lineno, format!("unknown phase `{other}`"))),
                };
                pseudo.entry(role).or_default()[slot] = Some(parse_u64(&v)?);
            }
            Section::Alphabet => {
                let (k, v) = split_kv(line)?;
                if k != "symbols" {
                    return Err(perr(lineno, format!("unknown key `{k}` in [alphabet]")));
                }
                let symbols: Vec<ActionSymbol> =
                    v.split_whitespace().map(ActionSymbol::new).collect();
                if symbols.is_empty() {
                    return Err(perr(lineno, "alphabet must not be empty"));
                }
                let mut seen = HashSet::new();
                for s in &symbols {
                    if !seen.insert(s.clone()) {
                        return Err(perr(lineno, format!("duplicate symbol `{s}`")));
                    }
                }
                alphabet = Some(symbols);
            }
            Section::Sim => {
                let (k, v) = split_kv(line)?;
                match k.as_str() {
                    "seed" => sim.seed = parse_u64(&v)?,
                    "sync_interval_ms" => {
                        sim.sync_interval_ms = parse_u64(&v)?;
                        if sim.sync_interval_ms == 0 {
                            return Err(perr(lineno, "sync_interval_ms must be positive"));
                        }
                    }
                    "max_sim_time_ms" => sim.max_sim_time_ms = parse_u64(&v)?,
                    "latency" => {
                        let parts: Vec<&str> = v.split_whitespace().collect();
                        sim.latency = match parts.as_slice() {
                            ["constant", ms] => LatencyModel::ConstantMs(parse_u64(ms)?),
                            ["uniform", lo, hi] => {
                                let (min, max) = (parse_u64(lo)?, parse_u64(hi)?);
                                if min > max {
                                    return Err(perr(lineno, "latency range is inverted"));
                                }
                                LatencyModel::UniformMs { min, max }
                            }
                            _ => {
                                return Err(perr(
                                    lineno,
                                    "expected `latency = constant <ms>` or `latency = uniform <min> <max>`",
                                ))
                            }
                        };
                    }
                    other => return Err(perr(lineno, format!("unknown key `{other}` in [sim]"))),
                }
            }
            Section::Cost => {
                let (k, v) = split_kv(line)?;
                if k != "rate_per_hour" {
                    return Err(perr(lineno, format!("unknown key `{k}` in [cost]")));
                }
                let rate: f64 = v
                    .parse()
                    .map_err(|_| perr(lineno, format!("expected number, got `{v}`")))?;
                if !rate.is_finite() || rate <= 0.0 {
                    return Err(perr(lineno, "rate_per_hour must be positive"));
                }
                cost.passenger_value_per_hour = rate;
            }
        }
    }

    if agents.len() < 2 {
        return Err(ScenarioError::Validation(format!(
            "scenario must name at least 2 agents, found {}",
            agents.len()
        )));
    }

    let mut scenario = Scenario::with_defaults(agents);
    for (role, size) in queues {
        scenario.queue_sizes.insert(role, size);
    }
    for (role, counts) in pseudo {
        let (dt, do_, ds) = role.default_pseudocounts();
        scenario.pseudocounts.insert(
            role,
            (
                counts[0].unwrap_or(dt),
                counts[1].unwrap_or(do_),
                counts[2].unwrap_or(ds),
            ),
        );
    }
    if let Some(a) = alphabet {
        scenario.alphabet = a;
    }
    scenario.sim = sim;
    scenario.cost = cost;
    Ok(scenario)
}

/// Render a scenario with every block explicit; `parse_scenario` of the
/// output reproduces the scenario field-for-field.
pub fn write_scenario(scenario: &Scenario) -> String {
    let mut out = String::new();
    out.push_str("[agents]\n");
    for role in &scenario.agents {
        out.push_str(role.name());
        out.push('\n');
    }
    out.push_str("\n[queues]\n");
    for (role, size) in &scenario.queue_sizes {
        out.push_str(&format!("{} = {size}\n", role.name()));
    }
    out.push_str("\n[pseudocounts]\n");
    for (role, (t, o, s)) in &scenario.pseudocounts {
        out.push_str(&format!("{}.tactical = {t}\n", role.name()));
        out.push_str(&format!("{}.operational = {o}\n", role.name()));
        out.push_str(&format!("{}.strategic = {s}\n", role.name()));
    }
    out.push_str("\n[alphabet]\nsymbols =");
    for s in &scenario.alphabet {
        out.push(' ');
        out.push_str(s.as_str());
    }
    out.push('\n');
    out.push_str("\n[sim]\n");
    out.push_str(&format!("seed = {}\n", scenario.sim.seed));
    out.push_str(&format!("sync_interval_ms = {}\n", scenario.sim.sync_interval_ms));
    match scenario.sim.latency {
        LatencyModel::ConstantMs(ms) => out.push_str(&format!("latency = constant {ms}\n")),
        LatencyModel::UniformMs { min, max } => {
            out.push_str(&format!("latency = uniform {min} {max}\n"))
        }
    }
    out.push_str(&format!("max_sim_time_ms = {}\n", scenario.sim.max_sim_time_ms));
    out.push_str("\n[cost]\n");
    out.push_str(&format!("rate_per_hour = {}\n", scenario.cost.passenger_value_per_hour));
    out
}

/// Load and parse a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path.as_ref())
        .map_err(|e| ScenarioError::Io(format!("{}: {e}", path.as_ref().display())))?;
    parse_scenario(&text)
}
