use std::collections::{HashMap, HashSet};

use super::store::weighted_lower_median;
use super::*;
use crate::scenario::RecoveryImpact;

fn tx(role: u64, flight: u64) -> Transaction {
    Transaction {
        role: AgentId(role),
        flight_id: flight,
        queue_position: 0,
        stake_entropy: 10.0,
        impact: RecoveryImpact {
            tactical_delay_min: 5,
            turnaround_min: 10,
            block_time_min: 120,
            strategic_delay_min: 2,
        },
    }
}

/// Fixture: one store with equal-stake members, plus helpers to mint and
/// insert events through the public API.
struct Harness {
    store: EventStore,
    keys: KeyRegistry,
    heads: Vec<Option<EventId>>,
    clock: u64,
}

impl Harness {
    fn new(stakes: Vec<u64>) -> Harness {
        let n = stakes.len();
        let keys = KeyRegistry::derive(99, n);
        let store = EventStore::new(AddressBook::new(stakes), keys.clone());
        Harness { store, keys, heads: vec![None; n], clock: 0 }
    }

    fn equal(n: usize) -> Harness {
        Harness::new(vec![1; n])
    }

    fn mint(&mut self, creator: usize, sp: Option<EventId>, op: Option<EventId>, payload: Vec<Transaction>) -> Event {
        self.clock += 1;
        Event::new(
            AgentId(creator as u64),
            sp,
            op,
            self.clock,
            payload,
            self.keys.key(AgentId(creator as u64)).unwrap(),
        )
    }

    fn genesis(&mut self, creator: usize) -> EventId {
        let e = self.mint(creator, None, None, vec![]);
        let id = e.id;
        assert_eq!(self.store.insert_event(e).unwrap(), InsertOutcome::Accepted);
        self.heads[creator] = Some(id);
        id
    }

    /// Creator records a sync from `from`: new event with self-parent =
    /// creator's head, other-parent = `from`'s head.
    fn sync(&mut self, creator: usize, from: usize) -> EventId {
        self.sync_with_payload(creator, from, vec![])
    }

    fn sync_with_payload(&mut self, creator: usize, from: usize, payload: Vec<Transaction>) -> EventId {
        let sp = self.heads[creator];
        let op = self.heads[from];
        let e = self.mint(creator, sp, op, payload);
        let id = e.id;
        assert_eq!(self.store.insert_event(e).unwrap(), InsertOutcome::Accepted);
        self.heads[creator] = Some(id);
        id
    }

    fn round_of(&self, id: &EventId) -> u64 {
        self.store.round_info(id).unwrap().round_created
    }

    /// Ring gossip: in each cycle agent i syncs from agent (i + hop) % n,
    /// in agent order. Deterministic and quickly round-advancing.
    fn ring_cycles(&mut self, cycles: usize) {
        let n = self.heads.len();
        for c in 0..cycles {
            let hop = 1 + (c % (n - 1));
            for i in 0..n {
                let from = (i + hop) % n;
                self.sync(i, from);
            }
        }
    }
}

#[test]
fn genesis_accepts_and_duplicates_are_idempotent() {
    let mut h = Harness::equal(2);
    let e = h.mint(0, None, None, vec![]);
    assert_eq!(h.store.insert_event(e.clone()).unwrap(), InsertOutcome::Accepted);
    assert_eq!(h.store.insert_event(e).unwrap(), InsertOutcome::AlreadyKnown);
    assert_eq!(h.store.len(), 1);
}

#[test]
fn orphans_are_rejected_until_parents_arrive() {
    let mut h = Harness::equal(2);
    let g0 = h.mint(0, None, None, vec![]);
    let g1 = h.mint(1, None, None, vec![]);
    let child = h.mint(0, Some(g0.id), Some(g1.id), vec![]);
    assert_eq!(h.store.insert_event(g0.clone()).unwrap(), InsertOutcome::Accepted);
    // other-parent unknown
    match h.store.insert_event(child.clone()) {
        Err(InsertError::Orphan(missing)) => assert_eq!(missing, g1.id),
        other => panic!("expected orphan, got {other:?}"),
    }
    assert_eq!(h.store.insert_event(g1).unwrap(), InsertOutcome::Accepted);
    assert_eq!(h.store.insert_event(child).unwrap(), InsertOutcome::Accepted);
}

#[test]
fn invalid_events_are_rejected() {
    let mut h = Harness::equal(3);
    let g0 = h.genesis(0);
    let g1 = h.genesis(1);

    // tampered content
    let mut forged = h.mint(0, Some(g0), Some(g1), vec![]);
    forged.claimed_timestamp += 1;
    assert_eq!(
        h.store.insert_event(forged).unwrap_err(),
        InsertError::Invalid(InvalidReason::HashMismatch)
    );

    // signed with the wrong key
    let alien = Event::new(
        AgentId(2),
        None,
        None,
        9,
        vec![],
        h.keys.key(AgentId(1)).unwrap(),
    );
    assert_eq!(
        h.store.insert_event(alien).unwrap_err(),
        InsertError::Invalid(InvalidReason::BadSignature)
    );

    // non-member creator
    let stranger_keys = KeyRegistry::derive(7, 9);
    let stranger = Event::new(AgentId(7), None, None, 1, vec![], stranger_keys.key(AgentId(7)).unwrap());
    assert_eq!(
        h.store.insert_event(stranger).unwrap_err(),
        InsertError::Invalid(InvalidReason::UnknownCreator)
    );

    // second parentless event by the same creator
    let second_genesis = h.mint(0, None, None, vec![tx(0, 1)]);
    assert_eq!(
        h.store.insert_event(second_genesis).unwrap_err(),
        InsertError::Invalid(InvalidReason::DuplicateGenesis)
    );

    // other-parent without self-parent
    let half = h.mint(2, None, Some(g0), vec![]);
    assert_eq!(
        h.store.insert_event(half).unwrap_err(),
        InsertError::Invalid(InvalidReason::MissingSelfParent)
    );

    // self-parent by a different creator
    let wrong_self = h.mint(2, Some(g0), Some(g1), vec![]);
    assert_eq!(
        h.store.insert_event(wrong_self).unwrap_err(),
        InsertError::Invalid(InvalidReason::SelfParentWrongCreator)
    );

    // other-parent by the same creator
    let g2 = h.genesis(2);
    let self_ref = h.mint(2, Some(g2), Some(g2), vec![]);
    assert_eq!(
        h.store.insert_event(self_ref).unwrap_err(),
        InsertError::Invalid(InvalidReason::OtherParentSameCreator)
    );
}

#[test]
fn forks_are_recorded_not_rejected() {
    let mut h = Harness::equal(3);
    let g0 = h.genesis(0);
    let g1 = h.genesis(1);
    h.genesis(2);
    // Two children of g0 by creator 0, neither a self-ancestor of the other.
    let branch_a = h.mint(0, Some(g0), Some(g1), vec![]);
    let branch_b = h.mint(0, Some(g0), Some(g1), vec![tx(0, 2)]);
    assert_eq!(h.store.insert_event(branch_a.clone()).unwrap(), InsertOutcome::Accepted);
    assert_eq!(h.store.fork_count(AgentId(0)), 0);
    assert_eq!(h.store.insert_event(branch_b.clone()).unwrap(), InsertOutcome::Accepted);
    assert_eq!(h.store.fork_count(AgentId(0)), 1);
    assert_eq!(h.store.fork_count(AgentId(1)), 0);

    // An observer holding both branches no longer sees creator 0's events.
    let o = Event::new(
        AgentId(1),
        Some(g1),
        Some(branch_b.id),
        50,
        vec![],
        h.keys.key(AgentId(1)).unwrap(),
    );
    let o2 = Event::new(
        AgentId(1),
        Some(o.id),
        Some(branch_a.id),
        51,
        vec![],
        h.keys.key(AgentId(1)).unwrap(),
    );
    h.store.insert_event(o).unwrap();
    let o2_id = o2.id;
    h.store.insert_event(o2).unwrap();
    assert!(h.store.is_ancestor(&branch_a.id, &o2_id).unwrap());
    assert!(!h.store.sees(&o2_id, &branch_a.id).unwrap());
    assert!(!h.store.sees(&o2_id, &g0).unwrap());
}

#[test]
fn ancestry_is_reflexive_transitive_and_disconnected_geneses_are_unrelated() {
    let mut h = Harness::equal(3);
    let g0 = h.genesis(0);
    let g1 = h.genesis(1);
    h.genesis(2);
    let y = h.sync(1, 0); // g0 <- y
    let z = h.sync(2, 1); // y <- z
    assert!(h.store.is_ancestor(&g0, &g0).unwrap());
    assert!(h.store.is_ancestor(&g0, &z).unwrap());
    assert!(h.store.is_ancestor(&y, &z).unwrap());
    assert!(!h.store.is_ancestor(&g1, &g0).unwrap());
    assert!(!h.store.is_ancestor(&z, &g0).unwrap());
    assert!(h.store.is_self_ancestor(&g1, &y).unwrap());
    assert!(!h.store.is_self_ancestor(&g0, &y).unwrap());
    assert!(matches!(
        h.store.is_ancestor(&EventId([9u8; 32]), &g0),
        Err(UnknownEvent(_))
    ));
}

/// Randomized DAGs checked against a definition-level DFS oracle.
#[test]
fn ancestry_matches_dfs_oracle_on_random_dags() {
    use rand::prelude::*;
    use rand_chacha::ChaCha12Rng;

    for seed in 0..8u64 {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let n = 4;
        let mut h = Harness::equal(n);
        let mut all: Vec<EventId> = (0..n).map(|i| h.genesis(i)).collect();
        let mut parents: HashMap<EventId, Vec<EventId>> = all.iter().map(|&g| (g, vec![])).collect();
        for _ in 0..36 {
            let creator = rng.gen_range(0..n);
            let mut from = rng.gen_range(0..n);
            while from == creator {
                from = rng.gen_range(0..n);
            }
            let sp = h.heads[creator].unwrap();
            let op = h.heads[from].unwrap();
            let id = h.sync(creator, from);
            parents.insert(id, vec![sp, op]);
            all.push(id);
        }
        // oracle: reachability over parent edges, reflexive
        let reaches = |from: EventId, to: EventId| -> bool {
            let mut stack = vec![to];
            let mut seen = HashSet::new();
            while let Some(cur) = stack.pop() {
                if cur == from {
                    return true;
                }
                if seen.insert(cur) {
                    stack.extend(parents[&cur].iter().copied());
                }
            }
            false
        };
        for _ in 0..60 {
            let x = all[rng.gen_range(0..all.len())];
            let y = all[rng.gen_range(0..all.len())];
            assert_eq!(
                h.store.is_ancestor(&x, &y).unwrap(),
                reaches(x, y),
                "seed {seed}: ancestor({x}, {y})"
            );
        }
    }
}

#[test]
fn strongly_sees_singleton_membership_is_reflexive() {
    let mut h = Harness::new(vec![5]);
    let g = h.genesis(0);
    assert!(h.store.strongly_sees(&g, &g).unwrap());
}

/// Ring fixture over four equal stakes: after one partial ring the last
/// event relays through only two creators (not a supermajority); one more
/// hop closes the gap.
#[test]
fn strongly_sees_needs_supermajority_of_relays() {
    let mut h = Harness::equal(4);
    let g: Vec<EventId> = (0..4).map(|i| h.genesis(i)).collect();
    let e1 = h.sync(1, 0);
    let e2 = h.sync(2, 1);
    let e3 = h.sync(3, 2);

    // Relays seeing g[2] that e3 sees: creators 2 and 3 only (half the
    // stake, not more than two thirds).
    assert!(!h.store.strongly_sees(&e3, &g[2]).unwrap());
    // g[0] is seen by relays of creators 1, 2, 3.
    assert!(h.store.strongly_sees(&e3, &g[0]).unwrap());
    assert!(h.store.strongly_sees(&e3, &g[1]).unwrap());

    let e4 = h.sync(0, 3);
    assert!(h.store.strongly_sees(&e4, &g[2]).unwrap());
    assert!(!h.store.strongly_sees(&e4, &g[3]).unwrap());
    let _ = e1;
    let _ = e2;
}

#[test]
fn rounds_advance_on_strongly_seen_witness_supermajority() {
    let mut h = Harness::equal(4);
    let g: Vec<EventId> = (0..4).map(|i| h.genesis(i)).collect();
    for gi in &g {
        let info = h.store.round_info(gi).unwrap();
        assert_eq!(info.round_created, 1);
        assert!(info.is_witness);
    }
    let e1 = h.sync(1, 0);
    let e2 = h.sync(2, 1);
    let e3 = h.sync(3, 2); // strongly sees only 2 of 4 round-1 witnesses
    assert_eq!(h.round_of(&e3), 1);
    assert!(!h.store.round_info(&e3).unwrap().is_witness);

    let e4 = h.sync(0, 3); // strongly sees 3 of 4
    assert_eq!(h.round_of(&e4), 2);
    assert!(h.store.round_info(&e4).unwrap().is_witness);

    let e5 = h.sync(1, 0); // strongly sees all 4
    assert_eq!(h.round_of(&e5), 2);
    assert!(h.store.round_info(&e5).unwrap().is_witness);

    // Round monotone along self-ancestry.
    assert!(h.round_of(&e5) >= h.round_of(&e1));
    let _ = e2;
}

#[test]
fn dense_gossip_decides_round_one_famous() {
    let mut h = Harness::equal(4);
    let g: Vec<EventId> = (0..4).map(|i| h.genesis(i)).collect();
    h.ring_cycles(8);
    h.store.run_consensus();
    assert!(h.store.decided_through() >= 1, "round 1 should be decided");
    for gi in &g {
        let info = h.store.round_info(gi).unwrap();
        assert_eq!(info.fame, Fame::Famous, "genesis {gi} of a dense run");
        assert!(info.consensus_position.is_some());
    }
    assert!(h.store.first_round_settled());
}

#[test]
fn unseen_witness_is_not_famous() {
    // Agent 3 stays silent after its genesis; nobody ever hears it, so its
    // round-1 witness must be voted down while the others are ordered.
    let mut h = Harness::equal(4);
    let g: Vec<EventId> = (0..4).map(|i| h.genesis(i)).collect();
    for _ in 0..10 {
        h.sync(1, 0);
        h.sync(2, 1);
        h.sync(0, 2);
    }
    h.store.run_consensus();
    assert!(h.store.decided_through() >= 1);
    assert_eq!(h.store.round_info(&g[3]).unwrap().fame, Fame::NotFamous);
    for gi in &g[..3] {
        assert_eq!(h.store.round_info(gi).unwrap().fame, Fame::Famous);
        assert!(h.store.round_info(gi).unwrap().consensus_position.is_some());
    }
}

#[test]
fn weighted_median_uses_stake_expanded_basket() {
    let mut entries = vec![(10u64, 1u64), (20, 2), (30, 1)];
    assert_eq!(weighted_lower_median(&mut entries), 20);
    let mut single = vec![(42u64, 7u64)];
    assert_eq!(weighted_lower_median(&mut single), 42);
    // Even basket takes the lower middle.
    let mut even = vec![(10u64, 1u64), (20, 1)];
    assert_eq!(weighted_lower_median(&mut even), 10);
    // Stake shifts the median toward the heavy member.
    let mut heavy = vec![(10u64, 5u64), (20, 1), (30, 1)];
    assert_eq!(weighted_lower_median(&mut heavy), 10);
}

#[test]
fn single_agent_ledger_orders_every_event_at_its_own_round() {
    let mut h = Harness::new(vec![3]);
    let mut prev = h.genesis(0);
    let mut chain = vec![prev];
    for i in 0..6 {
        let e = h.mint(0, Some(prev), None, vec![tx(0, i)]);
        prev = e.id;
        chain.push(prev);
        h.store.insert_event(e).unwrap();
    }
    h.store.run_consensus();
    for (k, id) in chain.iter().enumerate() {
        let info = h.store.round_info(id).unwrap();
        assert_eq!(info.round_created, k as u64 + 1);
        assert!(info.is_witness);
        if info.round_received.is_some() {
            assert_eq!(info.round_received, Some(info.round_created));
            let e = h.store.event(id).unwrap();
            assert_eq!(info.consensus_timestamp, Some(e.claimed_timestamp));
        }
    }
    // Everything except the most recent rounds is ordered.
    let ordered = h.store.consensus_events();
    assert!(ordered.len() >= chain.len() - 2);
}

#[test]
fn consensus_order_flattens_payloads_in_rank_order() {
    let mut h = Harness::equal(4);
    for i in 0..4 {
        h.genesis(i);
    }
    let n = h.heads.len();
    let mut flight = 0u64;
    for c in 0..8 {
        let hop = 1 + (c % (n - 1));
        for i in 0..n {
            let from = (i + hop) % n;
            let payload = vec![tx(i as u64, flight), tx(i as u64, flight + 1)];
            flight += 2;
            h.sync_with_payload(i, from, payload);
        }
    }
    h.store.run_consensus();
    let order = h.store.consensus_order();
    assert!(!order.is_empty());
    for (k, ot) in order.iter().enumerate() {
        assert_eq!(ot.rank, k as u64);
    }
    // Event positions are consecutive from zero and transactions inherit
    // them payload-index-ordered.
    let events = h.store.consensus_events();
    for (pos, id) in events.iter().enumerate() {
        assert_eq!(
            h.store.round_info(id).unwrap().consensus_position,
            Some(pos as u64)
        );
    }
    let mut last = (0u64, 0u64);
    for ot in &order {
        let key = (ot.event_position, ot.payload_index);
        assert!(key >= last);
        last = key;
    }
}

#[test]
fn positions_are_final_as_the_dag_grows() {
    let mut h = Harness::equal(4);
    for i in 0..4 {
        h.genesis(i);
    }
    let mut assigned: HashMap<EventId, (u64, u64, u64)> = HashMap::new();
    let n = h.heads.len();
    for c in 0..16 {
        let hop = 1 + (c % (n - 1));
        for i in 0..n {
            let from = (i + hop) % n;
            h.sync(i, from);
            h.store.run_consensus();
            for id in h.store.consensus_events() {
                let info = h.store.round_info(&id).unwrap();
                let snapshot = (
                    info.consensus_position.unwrap(),
                    info.consensus_timestamp.unwrap(),
                    info.round_received.unwrap(),
                );
                if let Some(&prev) = assigned.get(&id) {
                    assert_eq!(prev, snapshot, "decided assignment changed for {id}");
                } else {
                    assigned.insert(id, snapshot);
                }
            }
        }
    }
    assert!(!assigned.is_empty());
}

#[test]
fn consistency_holds_for_prefixes_and_detects_edge_forgery() {
    let mut a = Harness::equal(3);
    for i in 0..3 {
        a.genesis(i);
    }
    a.ring_cycles(3);

    // A second replica ingests a prefix of the same events.
    let keys = KeyRegistry::derive(99, 3);
    let mut b = EventStore::new(AddressBook::new(vec![1; 3]), keys);
    let all: Vec<Event> = a.store.events_in_arrival_order().cloned().collect();
    for e in &all[..all.len() - 4] {
        b.insert_event(e.clone()).unwrap();
    }
    assert!(a.store.consistent(&a.store));
    assert!(a.store.consistent(&b));
    assert!(b.consistent(&a.store));

    // Forge one parent edge in the prefix replica.
    let victim = all[all.len() - 6].id;
    b.corrupt_parent_edge_for_test(&victim, None);
    assert!(!a.store.consistent(&b));
}

#[test]
fn export_lists_events_causally_with_consensus_columns() {
    let mut h = Harness::equal(4);
    for i in 0..4 {
        h.genesis(i);
    }
    h.ring_cycles(6);
    h.store.run_consensus();
    let text = h.store.export_graph();
    let mut seen: HashSet<String> = HashSet::new();
    let mut positions = Vec::new();
    for line in text.lines() {
        let f: Vec<&str> = line.split(' ').collect();
        assert_eq!(f.len(), 12, "line: {line}");
        assert_eq!(f[0], "EVENT");
        // parents listed before children
        for parent in [f[3], f[4]] {
            if parent != "-" {
                assert!(seen.contains(parent), "dangling parent in export");
            }
        }
        seen.insert(f[1].to_string());
        assert!(f[7] == "0" || f[7] == "1");
        assert!(f[8] == "F" || f[8] == "N" || f[8] == "U");
        if f[11] != "-" {
            positions.push(f[11].parse::<u64>().unwrap());
        }
    }
    let mut sorted = positions.clone();
    sorted.sort();
    sorted.dedup();
    assert_eq!(sorted.len(), positions.len());
    assert_eq!(sorted.first(), Some(&0u64));
}
