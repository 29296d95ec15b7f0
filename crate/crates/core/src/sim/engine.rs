//! The event loop: a priority queue of timed dispatch and delivery
//! actions over per-agent hashgraph replicas.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use rand::Rng;
use sha2::{Digest, Sha256};

use crate::hashgraph::{
    AddressBook, AgentId, Event, EventId, EventStore, InsertOutcome, KeyRegistry, Transaction,
};
use crate::scenario::{derive_rng, LatencyModel};
use crate::stake::StakeRecord;

use super::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdversaryBehavior {
    /// Extend two self-parent branches alternately.
    Fork,
    /// Never initiate syncs; own events stay private.
    Withhold,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Adversary {
    pub agent: usize,
    pub behavior: AdversaryBehavior,
}

/// Engine-level parameters: membership with frozen stakes and prepared
/// per-agent transaction queues.
#[derive(Debug, Clone)]
pub struct SimParams {
    pub stakes: Vec<u64>,
    pub names: Vec<String>,
    pub queues: Vec<Vec<Transaction>>,
    pub seed: u64,
    pub latency: LatencyModel,
    pub sync_interval_ms: u64,
    pub max_sim_time_ms: u64,
    /// Queued disruptions drained into each newly created event.
    pub transactions_per_event: usize,
    pub adversary: Option<Adversary>,
    /// Stop as soon as the first round of consensus settles (used by the
    /// scaling experiment).
    pub stop_at_first_consensus: bool,
    /// Record one `SYNC` line per completed sync.
    pub keep_transcript: bool,
}

/// Summary of one run. Identical (params, seed) pairs produce identical
/// reports, field for field.
#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub agents: Vec<String>,
    pub stakes: Vec<u64>,
    pub events_created: u64,
    pub transactions_ordered: u64,
    pub rounds_decided: u64,
    /// Simulated milliseconds from the start of the interaction until all
    /// famous witnesses of round 1 hold a consensus position; absent if
    /// the run ended first.
    pub time_to_first_consensus_ms: Option<u64>,
    /// Syncs initiated per agent.
    pub sync_counts: Vec<u64>,
    /// Digest of replica 0's decided order (id, timestamp, position).
    pub order_digest: String,
}

/// Report plus the final replicas and optional transcript.
pub struct SimOutput {
    pub report: SimReport,
    pub stores: Vec<EventStore>,
    pub transcript: Vec<String>,
    pub stake_records: Vec<StakeRecord>,
}

enum Action {
    Dispatch { agent: usize },
    Deliver { from: usize, to: usize, events: Vec<Event> },
}

struct Queued {
    time: u64,
    seq: u64,
    action: Action,
}

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.time == other.time && self.seq == other.seq
    }
}
impl Eq for Queued {}
impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Queued {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap is a max-heap; invert for earliest-first.
        (other.time, other.seq).cmp(&(self.time, self.seq))
    }
}

pub fn run_params(params: &SimParams) -> Result<SimOutput, SimError> {
    let n = params.stakes.len();
    if n < 2 {
        return Err(SimError::InvalidConfig(format!("need at least 2 agents, got {n}")));
    }
    if params.stakes.contains(&0) {
        return Err(SimError::InvalidConfig("every agent needs positive stake".into()));
    }
    if params.queues.len() != n || params.names.len() != n {
        return Err(SimError::InvalidConfig("queue/name lists must match membership".into()));
    }
    if let Some(adv) = params.adversary {
        if adv.agent >= n {
            return Err(SimError::InvalidConfig(format!("no agent {}", adv.agent)));
        }
        let total: u64 = params.stakes.iter().sum();
        let stake = params.stakes[adv.agent];
        // Outside the fault model: strictly more than one third of stake.
        if 3 * stake as u128 > total as u128 {
            return Err(SimError::AdversaryStakeTooHigh { stake, total });
        }
    }

    let book = AddressBook::new(params.stakes.clone());
    let keys = KeyRegistry::derive(params.seed, n);
    let mut stores: Vec<EventStore> = (0..n).map(|_| EventStore::new(book.clone(), keys.clone())).collect();
    let mut queues: Vec<VecDeque<Transaction>> =
        params.queues.iter().map(|q| q.iter().cloned().collect()).collect();

    // Self-parent branch heads; only a forking adversary grows beyond one.
    let mut branch_heads: Vec<Vec<EventId>> = Vec::with_capacity(n);
    let mut creation_counts: Vec<u64> = vec![0; n];
    let mut events_created = 0u64;
    for i in 0..n {
        let genesis = Event::new(AgentId(i as u64), None, None, 0, vec![], keys.key(AgentId(i as u64)).unwrap());
        let gid = genesis.id;
        for store in stores.iter_mut() {
            // Geneses are common knowledge: membership is fixed for the
            // epoch, so every replica starts from the same base.
            store.insert_event(genesis.clone()).expect("genesis is valid");
        }
        branch_heads.push(vec![gid]);
        events_created += 1;
    }

    let mut rng = derive_rng(params.seed, "engine", 0);
    let mut heap: BinaryHeap<Queued> = BinaryHeap::new();
    let mut seq = 0u64;
    for agent in 0..n {
        heap.push(Queued { time: params.sync_interval_ms, seq, action: Action::Dispatch { agent } });
        seq += 1;
    }

    let mut sync_counts = vec![0u64; n];
    let mut transcript = Vec::new();
    let mut time_to_first_consensus: Option<u64> = None;

    while let Some(Queued { time, action, .. }) = heap.pop() {
        if time > params.max_sim_time_ms {
            break;
        }
        match action {
            Action::Dispatch { agent } => {
                let withholds = matches!(
                    params.adversary,
                    Some(Adversary { agent: a, behavior: AdversaryBehavior::Withhold }) if a == agent
                );
                if !withholds {
                    let mut peer = rng.gen_range(0..n - 1);
                    if peer >= agent {
                        peer += 1;
                    }
                    let latency = params.latency.sample(&mut rng);
                    let events = stores[agent].events_missing_from(&stores[peer]);
                    // Bandwidth invariant: never transmit what the receiver
                    // already holds.
                    debug_assert!(events.iter().all(|e| !stores[peer].contains(&e.id)));
                    sync_counts[agent] += 1;
                    heap.push(Queued {
                        time: time + latency,
                        seq,
                        action: Action::Deliver { from: agent, to: peer, events },
                    });
                    seq += 1;
                }
                heap.push(Queued {
                    time: time + params.sync_interval_ms,
                    seq,
                    action: Action::Dispatch { agent },
                });
                seq += 1;
            }
            Action::Deliver { from, to, events } => {
                let n_sent = events.len();
                for e in events {
                    match stores[to].insert_event(e) {
                        Ok(InsertOutcome::Accepted) | Ok(InsertOutcome::AlreadyKnown) => {}
                        Err(err) => panic!("honest sync delivered an unacceptable event: {err}"),
                    }
                }

                // The receiver records the sync: a new event whose
                // other-parent is the sender's latest event it now holds.
                let forks = matches!(
                    params.adversary,
                    Some(Adversary { agent: a, behavior: AdversaryBehavior::Fork }) if a == to
                );
                let branch = if forks { (creation_counts[to] % 2) as usize } else { 0 };
                if branch >= branch_heads[to].len() {
                    let root = branch_heads[to][0];
                    branch_heads[to].push(root);
                }
                let self_parent = branch_heads[to][branch];
                let other_parent = stores[to]
                    .latest_event_by(AgentId(from as u64))
                    .expect("sender gossip always includes its own chain");
                let mut payload = Vec::new();
                for _ in 0..params.transactions_per_event {
                    match queues[to].pop_front() {
                        Some(tx) => payload.push(tx),
                        None => break,
                    }
                }
                let new_event = Event::new(
                    AgentId(to as u64),
                    Some(self_parent),
                    Some(other_parent),
                    time,
                    payload,
                    keys.key(AgentId(to as u64)).unwrap(),
                );
                let new_id = new_event.id;
                stores[to]
                    .insert_event(new_event)
                    .expect("own event over known parents is valid");
                branch_heads[to][branch] = new_id;
                creation_counts[to] += 1;
                events_created += 1;

                stores[to].run_consensus();
                if params.keep_transcript {
                    transcript.push(format!("SYNC {time} {from} {to} {n_sent} {new_id}"));
                }
                if time_to_first_consensus.is_none() && stores[to].first_round_settled() {
                    time_to_first_consensus = Some(time);
                    if params.stop_at_first_consensus {
                        break;
                    }
                }
            }
        }
    }

    let order = stores[0].consensus_order();
    let mut digest = Sha256::new();
    for ot in &order {
        digest.update(ot.event_id.0);
        digest.update(ot.consensus_timestamp.to_be_bytes());
        digest.update(ot.rank.to_be_bytes());
        digest.update(ot.transaction.flight_id.to_be_bytes());
    }
    let order_digest: String = digest.finalize().iter().map(|b| format!("{b:02x}")).collect();

    let report = SimReport {
        agents: params.names.clone(),
        stakes: params.stakes.clone(),
        events_created,
        transactions_ordered: order.len() as u64,
        rounds_decided: stores[0].decided_through(),
        time_to_first_consensus_ms: time_to_first_consensus,
        sync_counts,
        order_digest,
    };

    Ok(SimOutput { report, stores, transcript, stake_records: Vec::new() })
}
