//! Event storage and the consensus state machine: ancestry queries,
//! round assignment, famous-witness elections by virtual voting, and
//! stake-weighted total ordering.
//!
//! One store is one replica. All mutation is single-writer; queries are
//! read-only. Everything an event's round, votes, and ordering depend on
//! is a pure function of the event's fixed ancestry, so decisions are
//! cached once made and never revisited.

use std::collections::HashMap;

use thiserror::Error;

use super::event::{AgentId, Event, EventId, KeyRegistry, Transaction};

/// Normal-round cadence between coin rounds in fame elections.
pub const COIN_ROUND_PERIOD: u64 = 10;

/// Fixed membership snapshot: stake per agent, indexed by agent id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AddressBook {
    stakes: Vec<u64>,
    total: u64,
}

impl AddressBook {
    pub fn new(stakes: Vec<u64>) -> AddressBook {
        assert!(!stakes.is_empty(), "membership must be non-empty");
        assert!(stakes.iter().all(|&s| s > 0), "every member needs positive stake");
        let total = stakes.iter().sum();
        AddressBook { stakes, total }
    }

    pub fn n_agents(&self) -> usize {
        self.stakes.len()
    }

    pub fn stake(&self, agent: AgentId) -> u64 {
        self.stakes[agent.0 as usize]
    }

    pub fn total_stake(&self) -> u64 {
        self.total
    }

    /// Strictly more than two thirds of total stake.
    pub fn supermajority(&self, stake: u64) -> bool {
        3 * stake as u128 > 2 * self.total as u128
    }
}

/// Fame of a witness event.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fame {
    Undecided,
    Famous,
    NotFamous,
}

/// Consensus bookkeeping for one event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundInfo {
    pub round_created: u64,
    pub is_witness: bool,
    pub fame: Fame,
    pub round_received: Option<u64>,
    pub consensus_timestamp: Option<u64>,
    pub consensus_position: Option<u64>,
}

/// A transaction in the consensus order.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderedTransaction {
    pub transaction: Transaction,
    pub event_id: EventId,
    pub event_creator: AgentId,
    /// Position of the carrying event in the event-level consensus order.
    pub event_position: u64,
    pub payload_index: u64,
    /// Flattened rank of this transaction across the whole plan.
    pub rank: u64,
    pub famous_witness: bool,
    pub consensus_timestamp: u64,
}

#[derive(Debug, Error, PartialEq)]
pub enum InsertError {
    /// A parent is not in the store yet; retry after syncing ancestors.
    #[error("orphan event: missing parent {0}")]
    Orphan(EventId),
    #[error("invalid event: {0}")]
    Invalid(InvalidReason),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InvalidReason {
    HashMismatch,
    BadSignature,
    UnknownCreator,
    DuplicateGenesis,
    MissingSelfParent,
    SelfParentWrongCreator,
    OtherParentSameCreator,
}

impl std::fmt::Display for InvalidReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            InvalidReason::HashMismatch => "id does not match content hash",
            InvalidReason::BadSignature => "signature does not verify",
            InvalidReason::UnknownCreator => "creator is not a member",
            InvalidReason::DuplicateGenesis => "creator already has a genesis event",
            InvalidReason::MissingSelfParent => "non-genesis event lacks a self-parent",
            InvalidReason::SelfParentWrongCreator => "self-parent was created by someone else",
            InvalidReason::OtherParentSameCreator => "other-parent shares the event's creator",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InsertOutcome {
    Accepted,
    AlreadyKnown,
}

#[derive(Debug, Error, PartialEq)]
#[error("event {0} is not in the store")]
pub struct UnknownEvent(pub EventId);

/// Compact grow-only bitset over event indices.
#[derive(Debug, Clone, Default)]
struct BitSet {
    words: Vec<u64>,
}

impl BitSet {
    fn insert(&mut self, i: usize) {
        let w = i / 64;
        if w >= self.words.len() {
            self.words.resize(w + 1, 0);
        }
        self.words[w] |= 1 << (i % 64);
    }

    fn contains(&self, i: usize) -> bool {
        self.words.get(i / 64).is_some_and(|w| w & (1 << (i % 64)) != 0)
    }

    fn union_with(&mut self, other: &BitSet) {
        if other.words.len() > self.words.len() {
            self.words.resize(other.words.len(), 0);
        }
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }
}

#[derive(Debug, Clone)]
struct StoredEvent {
    event: Event,
    /// Ancestors including self.
    anc: BitSet,
    /// Self-ancestors including self.
    self_anc: BitSet,
    round: u64,
    witness: bool,
    fame: Fame,
    round_received: Option<u64>,
    consensus_timestamp: Option<u64>,
    position: Option<u64>,
}

#[derive(Debug, Clone, Default)]
struct RoundState {
    /// Witness indices, sorted by (creator, id) for replica-independent
    /// iteration order.
    witnesses: Vec<usize>,
    /// Unique famous witnesses, frozen when the round's fame is decided.
    unique_famous: Option<Vec<usize>>,
    /// XOR of the unique famous witnesses' signatures; whitens the final
    /// ordering tie-break.
    whiten: [u8; 32],
}

/// One replica's hashgraph.
pub struct EventStore {
    book: AddressBook,
    keys: KeyRegistry,
    events: Vec<StoredEvent>,
    by_id: HashMap<EventId, usize>,
    per_creator: Vec<Vec<usize>>,
    /// Recorded fork pairs per creator (neither event a self-ancestor of
    /// the other).
    fork_pairs: Vec<Vec<(usize, usize)>>,
    /// Rounds indexed by `round - 1`.
    rounds: Vec<RoundState>,
    /// Highest round whose witnesses all have decided fame, contiguously
    /// from round 1. Zero means none.
    decided_through: u64,
    /// Event-level consensus order, append-only.
    order: Vec<usize>,
    /// Memo for strongly-sees on the fixed DAG.
    strongly_cache: HashMap<(u32, u32), bool>,
    /// Per-event cached election inputs: previous-round witnesses strongly
    /// seen, at most one per creator.
    vote_sets: Vec<Option<Vec<usize>>>,
}

impl EventStore {
    pub fn new(book: AddressBook, keys: KeyRegistry) -> EventStore {
        assert_eq!(book.n_agents(), keys.len(), "one key per member");
        let n = book.n_agents();
        EventStore {
            book,
            keys,
            events: Vec::new(),
            by_id: HashMap::new(),
            per_creator: vec![Vec::new(); n],
            fork_pairs: vec![Vec::new(); n],
            rounds: Vec::new(),
            decided_through: 0,
            order: Vec::new(),
            strongly_cache: HashMap::new(),
            vote_sets: Vec::new(),
        }
    }

    pub fn address_book(&self) -> &AddressBook {
        &self.book
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn contains(&self, id: &EventId) -> bool {
        self.by_id.contains_key(id)
    }

    pub fn event(&self, id: &EventId) -> Option<&Event> {
        self.by_id.get(id).map(|&i| &self.events[i].event)
    }

    /// Events in insertion order (parents before children).
    pub fn events_in_arrival_order(&self) -> impl Iterator<Item = &Event> {
        self.events.iter().map(|se| &se.event)
    }

    /// Events present here that `other` lacks, in causal (insertion) order.
    pub fn events_missing_from(&self, other: &EventStore) -> Vec<Event> {
        self.events
            .iter()
            .filter(|se| !other.contains(&se.event.id))
            .map(|se| se.event.clone())
            .collect()
    }

    pub fn latest_event_by(&self, agent: AgentId) -> Option<EventId> {
        self.per_creator
            .get(agent.0 as usize)
            .and_then(|v| v.last())
            .map(|&i| self.events[i].event.id)
    }

    pub fn fork_count(&self, agent: AgentId) -> usize {
        self.fork_pairs[agent.0 as usize].len()
    }

    fn idx(&self, id: &EventId) -> Result<usize, UnknownEvent> {
        self.by_id.get(id).copied().ok_or(UnknownEvent(*id))
    }

    /// Validate and store an event. Duplicates are idempotent; events whose
    /// parents are missing are rejected as orphans and can be retried once
    /// the ancestors have been synced.
    pub fn insert_event(&mut self, event: Event) -> Result<InsertOutcome, InsertError> {
        if self.by_id.contains_key(&event.id) {
            return Ok(InsertOutcome::AlreadyKnown);
        }
        if event.computed_id() != event.id {
            return Err(InsertError::Invalid(InvalidReason::HashMismatch));
        }
        let key = self
            .keys
            .key(event.creator)
            .ok_or(InsertError::Invalid(InvalidReason::UnknownCreator))?;
        if !event.verify_signature(key) {
            return Err(InsertError::Invalid(InvalidReason::BadSignature));
        }

        let creator_idx = event.creator.0 as usize;
        let self_parent_idx = match event.self_parent {
            Some(id) => Some(self.by_id.get(&id).copied().ok_or(InsertError::Orphan(id))?),
            None => None,
        };
        let other_parent_idx = match event.other_parent {
            Some(id) => Some(self.by_id.get(&id).copied().ok_or(InsertError::Orphan(id))?),
            None => None,
        };

        match (self_parent_idx, other_parent_idx) {
            (None, None) => {
                if !self.per_creator[creator_idx].is_empty() {
                    return Err(InsertError::Invalid(InvalidReason::DuplicateGenesis));
                }
            }
            (None, Some(_)) => {
                return Err(InsertError::Invalid(InvalidReason::MissingSelfParent));
            }
            (Some(sp), op) => {
                if self.events[sp].event.creator != event.creator {
                    return Err(InsertError::Invalid(InvalidReason::SelfParentWrongCreator));
                }
                if let Some(op) = op {
                    if self.events[op].event.creator == event.creator {
                        return Err(InsertError::Invalid(InvalidReason::OtherParentSameCreator));
                    }
                }
            }
        }

        let idx = self.events.len();
        let mut anc = BitSet::default();
        let mut self_anc = BitSet::default();
        if let Some(sp) = self_parent_idx {
            anc.union_with(&self.events[sp].anc);
            self_anc.union_with(&self.events[sp].self_anc);
        }
        if let Some(op) = other_parent_idx {
            anc.union_with(&self.events[op].anc);
        }
        anc.insert(idx);
        self_anc.insert(idx);

        // Fork bookkeeping: any prior event by this creator that is not a
        // self-ancestor of the new one forms a fork pair with it.
        for &prior in &self.per_creator[creator_idx] {
            if !self_anc.contains(prior) {
                self.fork_pairs[creator_idx].push((prior, idx));
            }
        }

        let stored = StoredEvent {
            event,
            anc,
            self_anc,
            round: 0,
            witness: false,
            fame: Fame::Undecided,
            round_received: None,
            consensus_timestamp: None,
            position: None,
        };
        self.by_id.insert(stored.event.id, idx);
        self.per_creator[creator_idx].push(idx);
        self.events.push(stored);
        self.vote_sets.push(None);

        let (round, witness) = self.assign_round(idx, self_parent_idx, other_parent_idx);
        self.events[idx].round = round;
        self.events[idx].witness = witness;
        if witness {
            while self.rounds.len() < round as usize {
                self.rounds.push(RoundState::default());
            }
            let key = self.witness_sort_key(idx);
            let slot = &self.rounds[round as usize - 1];
            let pos = slot
                .witnesses
                .binary_search_by(|&w| {
                    let e = &self.events[w].event;
                    (e.creator.0, e.id.0).cmp(&key)
                })
                .unwrap_or_else(|p| p);
            self.rounds[round as usize - 1].witnesses.insert(pos, idx);
        }

        Ok(InsertOutcome::Accepted)
    }

    fn witness_sort_key(&self, idx: usize) -> (u64, [u8; 32]) {
        let e = &self.events[idx].event;
        (e.creator.0, e.id.0)
    }

    /// Round of a new event: the max parent round, incremented when the
    /// event strongly sees a supermajority of that round's witnesses.
    /// Witness flag: first event of its creator in the round.
    fn assign_round(&mut self, idx: usize, sp: Option<usize>, op: Option<usize>) -> (u64, bool) {
        let parent_round = match (sp, op) {
            (None, None) => return (1, true),
            (Some(a), None) => self.events[a].round,
            (None, Some(b)) => self.events[b].round,
            (Some(a), Some(b)) => self.events[a].round.max(self.events[b].round),
        };
        let round = if self.strongly_seen_witness_stake(idx, parent_round) {
            parent_round + 1
        } else {
            parent_round
        };
        // Non-genesis events always have a self-parent.
        let witness = round > self.events[sp.expect("non-genesis")].round;
        (round, witness)
    }

    /// Does `idx` strongly see round-`round` witnesses holding a
    /// supermajority of stake? Per creator the stake counts once.
    fn strongly_seen_witness_stake(&mut self, idx: usize, round: u64) -> bool {
        let Some(slot) = self.rounds.get(round as usize - 1) else {
            return false;
        };
        let witnesses = slot.witnesses.clone();
        let mut stake = 0u64;
        let mut last_creator: Option<u64> = None;
        for w in witnesses {
            let creator = self.events[w].event.creator;
            if last_creator == Some(creator.0) {
                continue; // already counted this creator (fork)
            }
            if self.strongly_sees_memo(idx, w) {
                stake += self.book.stake(creator);
                last_creator = Some(creator.0);
            }
        }
        self.book.supermajority(stake)
    }

    fn fork_visible(&self, x: usize, creator: AgentId) -> bool {
        self.fork_pairs[creator.0 as usize]
            .iter()
            .any(|&(a, b)| self.events[x].anc.contains(a) && self.events[x].anc.contains(b))
    }

    fn sees_idx(&self, x: usize, y: usize) -> bool {
        self.events[x].anc.contains(y) && !self.fork_visible(x, self.events[y].event.creator)
    }

    /// Pure strongly-sees: there is a set of events, one per enough
    /// creators to hold a supermajority of stake, each seen by `x` and
    /// each seeing `y`.
    fn strongly_sees_idx(&self, x: usize, y: usize) -> bool {
        let target_creator = self.events[y].event.creator;
        let mut stake = 0u64;
        for c in 0..self.book.n_agents() {
            let agent = AgentId(c as u64);
            if self.fork_visible(x, agent) {
                continue; // x cannot see anything by a forker it has caught
            }
            let found = self.per_creator[c].iter().rev().any(|&r| {
                self.events[x].anc.contains(r)
                    && self.events[r].anc.contains(y)
                    && !self.fork_visible(r, target_creator)
            });
            if found {
                stake += self.book.stake(agent);
                if self.book.supermajority(stake) {
                    return true;
                }
            }
        }
        self.book.supermajority(stake)
    }

    fn strongly_sees_memo(&mut self, x: usize, y: usize) -> bool {
        let key = (x as u32, y as u32);
        if let Some(&v) = self.strongly_cache.get(&key) {
            return v;
        }
        let v = self.strongly_sees_idx(x, y);
        self.strongly_cache.insert(key, v);
        v
    }

    // ------------------------------------------------------------------
    // Public ancestry / seeing queries
    // ------------------------------------------------------------------

    /// Is `x` an ancestor of `y` (reflexive, over both parent edges)?
    pub fn is_ancestor(&self, x: &EventId, y: &EventId) -> Result<bool, UnknownEvent> {
        let (xi, yi) = (self.idx(x)?, self.idx(y)?);
        Ok(self.events[yi].anc.contains(xi))
    }

    /// Is `x` a self-ancestor of `y` (reflexive, self-parent edges only)?
    pub fn is_self_ancestor(&self, x: &EventId, y: &EventId) -> Result<bool, UnknownEvent> {
        let (xi, yi) = (self.idx(x)?, self.idx(y)?);
        Ok(self.events[yi].self_anc.contains(xi))
    }

    /// Can `x` see `y`: `y` is an ancestor of `x` and the ancestors of `x`
    /// contain no fork by `y`'s creator.
    pub fn sees(&self, x: &EventId, y: &EventId) -> Result<bool, UnknownEvent> {
        let (xi, yi) = (self.idx(x)?, self.idx(y)?);
        Ok(self.sees_idx(xi, yi))
    }

    /// Can `x` strongly see `y` through a supermajority of stake?
    pub fn strongly_sees(&self, x: &EventId, y: &EventId) -> Result<bool, UnknownEvent> {
        let (xi, yi) = (self.idx(x)?, self.idx(y)?);
        Ok(self.strongly_sees_idx(xi, yi))
    }

    pub fn round_info(&self, id: &EventId) -> Result<RoundInfo, UnknownEvent> {
        let i = self.idx(id)?;
        let se = &self.events[i];
        Ok(RoundInfo {
            round_created: se.round,
            is_witness: se.witness,
            fame: se.fame,
            round_received: se.round_received,
            consensus_timestamp: se.consensus_timestamp,
            consensus_position: se.position,
        })
    }

    pub fn max_round(&self) -> u64 {
        self.rounds.len() as u64
    }

    /// Highest round decided contiguously from round 1.
    pub fn decided_through(&self) -> u64 {
        self.decided_through
    }

    pub fn witnesses_of_round(&self, round: u64) -> Vec<EventId> {
        self.rounds
            .get(round as usize - 1)
            .map(|r| r.witnesses.iter().map(|&i| self.events[i].event.id).collect())
            .unwrap_or_default()
    }

    pub fn unique_famous_witnesses(&self, round: u64) -> Option<Vec<EventId>> {
        self.rounds
            .get(round as usize - 1)
            .and_then(|r| r.unique_famous.as_ref())
            .map(|v| v.iter().map(|&i| self.events[i].event.id).collect())
    }

    // ------------------------------------------------------------------
    // Virtual voting
    // ------------------------------------------------------------------

    /// Run fame elections and extend the consensus order as far as the
    /// current DAG allows. Idempotent; call after inserting a batch.
    pub fn run_consensus(&mut self) {
        self.elect_fame();
        self.advance_decided_rounds();
    }

    /// Previous-round witnesses strongly seen by `v`, at most one per
    /// creator (smallest id wins on forks). Cached: the answer is fixed at
    /// the time `v` is inserted, because later events are never ancestors
    /// of `v`.
    fn election_voters(&mut self, v: usize) -> Vec<usize> {
        if let Some(cached) = &self.vote_sets[v] {
            return cached.clone();
        }
        let round = self.events[v].round;
        let mut chosen: Vec<usize> = Vec::new();
        if round >= 2 {
            if let Some(slot) = self.rounds.get(round as usize - 2) {
                let witnesses = slot.witnesses.clone();
                let mut last_creator: Option<u64> = None;
                for u in witnesses {
                    let creator = self.events[u].event.creator.0;
                    if last_creator == Some(creator) {
                        continue;
                    }
                    if self.strongly_sees_memo(v, u) {
                        chosen.push(u);
                        last_creator = Some(creator);
                    }
                }
            }
        }
        self.vote_sets[v] = Some(chosen.clone());
        chosen
    }

    fn coin_bit(&self, v: usize) -> bool {
        // Middle bit of the voting witness's signature.
        self.events[v].event.signature.0[16] & 1 == 1
    }

    fn elect_fame(&mut self) {
        let max_round = self.rounds.len() as u64;
        for r in (self.decided_through + 1)..=max_round {
            // A decision needs votes collected at r+2 or later.
            if max_round < r + 2 {
                break;
            }
            let candidates = self.rounds[r as usize - 1].witnesses.clone();
            for w in candidates {
                if self.events[w].fame == Fame::Undecided {
                    if let Some(famous) = self.run_election(w, r, max_round) {
                        self.events[w].fame = if famous { Fame::Famous } else { Fame::NotFamous };
                    }
                }
            }
        }
    }

    /// One witness's election. First-round voters vote "can I see it";
    /// later witnesses adopt the stake-majority of the previous round's
    /// voters they strongly see, deciding on a supermajority in normal
    /// rounds and flipping to the coin bit when a coin round fails to
    /// reach one.
    fn run_election(&mut self, w: usize, r: u64, max_round: u64) -> Option<bool> {
        let first_voters = self.rounds.get(r as usize)?.witnesses.clone();
        let mut prev_votes: HashMap<usize, bool> = HashMap::new();
        for &v in &first_voters {
            prev_votes.insert(v, self.sees_idx(v, w));
        }

        for vr in (r + 2)..=max_round {
            let mut this_votes: HashMap<usize, bool> = HashMap::new();
            let voters = self.rounds[vr as usize - 1].witnesses.clone();
            for v in voters {
                let seen = self.election_voters(v);
                let mut yes = 0u64;
                let mut no = 0u64;
                for u in seen {
                    let stake = self.book.stake(self.events[u].event.creator);
                    match prev_votes.get(&u) {
                        Some(true) => yes += stake,
                        Some(false) => no += stake,
                        None => {}
                    }
                }
                let majority = yes >= no;
                let tally = yes.max(no);
                let d = vr - r;
                if !d.is_multiple_of(COIN_ROUND_PERIOD) {
                    if self.book.supermajority(tally) {
                        return Some(majority);
                    }
                    this_votes.insert(v, majority);
                } else if self.book.supermajority(tally) {
                    this_votes.insert(v, majority);
                } else {
                    this_votes.insert(v, self.coin_bit(v));
                }
            }
            prev_votes = this_votes;
        }
        None
    }

    // ------------------------------------------------------------------
    // Round received, timestamps, total order
    // ------------------------------------------------------------------

    fn advance_decided_rounds(&mut self) {
        loop {
            let next = self.decided_through + 1;
            if next > self.rounds.len() as u64 {
                return;
            }
            {
                let slot = &self.rounds[next as usize - 1];
                if slot.witnesses.is_empty() {
                    return;
                }
                if slot
                    .witnesses
                    .iter()
                    .any(|&w| self.events[w].fame == Fame::Undecided)
                {
                    return;
                }
            }

            // Freeze the unique famous witness set: famous witnesses whose
            // creator has no other famous witness this round.
            let witnesses = self.rounds[next as usize - 1].witnesses.clone();
            let famous: Vec<usize> = witnesses
                .iter()
                .copied()
                .filter(|&w| self.events[w].fame == Fame::Famous)
                .collect();
            let mut unique = Vec::new();
            for &w in &famous {
                let c = self.events[w].event.creator;
                let twins = famous
                    .iter()
                    .filter(|&&o| self.events[o].event.creator == c)
                    .count();
                if twins == 1 {
                    unique.push(w);
                }
            }
            let mut whiten = [0u8; 32];
            for &u in &unique {
                for (b, s) in whiten.iter_mut().zip(self.events[u].event.signature.0.iter()) {
                    *b ^= s;
                }
            }
            {
                let slot = &mut self.rounds[next as usize - 1];
                slot.unique_famous = Some(unique);
                slot.whiten = whiten;
            }
            self.decided_through = next;
            self.order_round(next);
        }
    }

    /// Assign round-received, consensus timestamps, and positions for every
    /// event first covered by round `r`'s unique famous witnesses.
    fn order_round(&mut self, r: u64) {
        let unique = self.rounds[r as usize - 1]
            .unique_famous
            .clone()
            .expect("round was just decided");
        if unique.is_empty() {
            // No famous witness survived as unique: nothing can be ordered
            // by this round; later rounds pick the events up.
            return;
        }
        let whiten = self.rounds[r as usize - 1].whiten;

        let mut batch: Vec<(usize, u64)> = Vec::new();
        for x in 0..self.events.len() {
            if self.events[x].position.is_some() || self.events[x].round > r {
                continue;
            }
            if unique.iter().all(|&u| self.events[u].anc.contains(x)) {
                let ts = self.weighted_median_timestamp(x, &unique);
                batch.push((x, ts));
            }
        }

        batch.sort_by(|&(a, ts_a), &(b, ts_b)| {
            ts_a.cmp(&ts_b).then_with(|| {
                let ka = whitened_key(&self.events[a].event.id, &whiten);
                let kb = whitened_key(&self.events[b].event.id, &whiten);
                ka.cmp(&kb)
            })
        });

        for (x, ts) in batch {
            let position = self.order.len() as u64;
            let se = &mut self.events[x];
            se.round_received = Some(r);
            se.consensus_timestamp = Some(ts);
            se.position = Some(position);
            self.order.push(x);
        }
    }

    /// Stake-weighted lower median of, per unique famous witness, the
    /// claimed timestamp of the earliest self-ancestor of that witness
    /// that descends from `x`.
    fn weighted_median_timestamp(&self, x: usize, unique: &[usize]) -> u64 {
        let mut entries: Vec<(u64, u64)> = Vec::with_capacity(unique.len());
        for &u in unique {
            // Walk the self-ancestor chain from the oldest end; the first
            // event that has `x` in its ancestry contributed the timestamp.
            let mut chain = Vec::new();
            let mut cur = u;
            loop {
                chain.push(cur);
                match self.events[cur].event.self_parent {
                    Some(id) => cur = self.by_id[&id],
                    None => break,
                }
            }
            let z = chain
                .iter()
                .rev()
                .copied()
                .find(|&z| self.events[z].anc.contains(x))
                .expect("x is an ancestor of the witness itself");
            let stake = self.book.stake(self.events[u].event.creator);
            entries.push((self.events[z].event.claimed_timestamp, stake));
        }
        weighted_lower_median(&mut entries)
    }

    /// Decided events in consensus order.
    pub fn consensus_events(&self) -> Vec<EventId> {
        self.order.iter().map(|&i| self.events[i].event.id).collect()
    }

    /// Transactions in consensus order: events by position, payloads by
    /// index within each event, ranked consecutively from zero.
    pub fn consensus_order(&self) -> Vec<OrderedTransaction> {
        let mut out = Vec::new();
        for &i in &self.order {
            let se = &self.events[i];
            for (k, tx) in se.event.payload.iter().enumerate() {
                out.push(OrderedTransaction {
                    transaction: tx.clone(),
                    event_id: se.event.id,
                    event_creator: se.event.creator,
                    event_position: se.position.expect("ordered"),
                    payload_index: k as u64,
                    rank: out.len() as u64,
                    famous_witness: se.fame == Fame::Famous,
                    consensus_timestamp: se.consensus_timestamp.expect("ordered"),
                });
            }
        }
        out
    }

    /// Two stores are consistent when every event present in both has the
    /// same creator and parent edges; content hashing makes any divergence
    /// evidence of forgery.
    pub fn consistent(&self, other: &EventStore) -> bool {
        for (id, &i) in &self.by_id {
            if let Some(&j) = other.by_id.get(id) {
                let a = &self.events[i].event;
                let b = &other.events[j].event;
                if a.creator != b.creator
                    || a.self_parent != b.self_parent
                    || a.other_parent != b.other_parent
                {
                    return false;
                }
            }
        }
        true
    }

    /// Have all famous witnesses of round 1 been assigned a consensus
    /// position? This is the "first consensus" condition the simulator
    /// reports on.
    pub fn first_round_settled(&self) -> bool {
        if self.decided_through < 1 {
            return false;
        }
        self.rounds[0]
            .witnesses
            .iter()
            .filter(|&&w| self.events[w].fame == Fame::Famous)
            .all(|&w| self.events[w].position.is_some())
    }

    /// Line-oriented DAG export, one event per line in causal order.
    pub fn export_graph(&self) -> String {
        let mut out = String::new();
        for se in &self.events {
            let e = &se.event;
            let opt_id = |p: Option<EventId>| p.map(|x| x.to_hex()).unwrap_or_else(|| "-".into());
            let opt_num = |v: Option<u64>| v.map(|x| x.to_string()).unwrap_or_else(|| "-".into());
            let fame = match se.fame {
                Fame::Famous => "F",
                Fame::NotFamous => "N",
                Fame::Undecided => "U",
            };
            out.push_str(&format!(
                "EVENT {} {} {} {} {} {} {} {} {} {} {}\n",
                e.id.to_hex(),
                e.creator,
                opt_id(e.self_parent),
                opt_id(e.other_parent),
                e.claimed_timestamp,
                se.round,
                if se.witness { 1 } else { 0 },
                fame,
                opt_num(se.round_received),
                opt_num(se.consensus_timestamp),
                opt_num(se.position),
            ));
        }
        out
    }

    /// Test-only hook: corrupt a stored parent edge in place, bypassing
    /// hashing, to exercise the consistency check.
    #[doc(hidden)]
    pub fn corrupt_parent_edge_for_test(&mut self, id: &EventId, new_parent: Option<EventId>) {
        let i = self.by_id[id];
        self.events[i].event.other_parent = new_parent;
    }
}

/// Lower median of a stake-weighted timestamp basket: conceptually each
/// timestamp is replicated stake-many times, the basket sorted, and the
/// element at index `(k - 1) / 2` taken.
pub(crate) fn weighted_lower_median(entries: &mut [(u64, u64)]) -> u64 {
    debug_assert!(!entries.is_empty());
    entries.sort();
    let total: u64 = entries.iter().map(|&(_, w)| w).sum();
    let target = (total - 1) / 2;
    let mut cum = 0u64;
    for &(ts, w) in entries.iter() {
        cum += w;
        if cum > target {
            return ts;
        }
    }
    unreachable!("median walk always terminates")
}

fn whitened_key(id: &EventId, whiten: &[u8; 32]) -> [u8; 32] {
    let mut out = [0u8; 32];
    for (o, (a, b)) in out.iter_mut().zip(id.0.iter().zip(whiten.iter())) {
        *o = a ^ b;
    }
    out
}
