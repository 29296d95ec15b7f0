//! Shared test oracles: definition-level reimplementations, independent of
//! the library's incremental/caching code paths, used to cross-check
//! machine decoding and consensus decisions.

#![allow(dead_code)]
#![allow(clippy::needless_range_loop)]

use std::cell::RefCell;
use std::collections::{HashMap, HashSet};

use rand::prelude::*;
use rand_chacha::ChaCha12Rng;

use dlt_recovery_core::hashgraph::{
    AddressBook, AgentId, Event, EventId, EventStore, Fame, KeyRegistry, Transaction,
    COIN_ROUND_PERIOD,
};
use dlt_recovery_core::scenario::RecoveryImpact;
use dlt_recovery_core::utfm::{ActionSymbol, StateId, Utfm, UtfmBuilder};

// ----------------------------------------------------------------------
// Machine oracles
// ----------------------------------------------------------------------

/// Dense snapshot of a model taken through the public API only.
pub struct ModelTable {
    pub n: usize,
    pub m: usize,
    pub initial: Vec<f64>,
    pub trans: Vec<f64>,
    pub accept: Vec<bool>,
}

impl ModelTable {
    pub fn snapshot(model: &Utfm) -> ModelTable {
        let states = model.states().to_vec();
        let alphabet = model.alphabet().to_vec();
        let (n, m) = (states.len(), alphabet.len());
        let mut trans = vec![0.0; n * m * n];
        for (si, &s) in states.iter().enumerate() {
            for (ai, a) in alphabet.iter().enumerate() {
                for (ti, &t) in states.iter().enumerate() {
                    trans[(si * m + ai) * n + ti] = model.transition_probability(s, a, t).unwrap();
                }
            }
        }
        ModelTable {
            n,
            m,
            initial: states.iter().map(|&s| model.initial_probability(s).unwrap()).collect(),
            trans,
            accept: states.iter().map(|&s| model.is_accept(s)).collect(),
        }
    }

    #[inline]
    fn t(&self, s: usize, a: usize, t: usize) -> f64 {
        self.trans[(s * self.m + a) * self.n + t]
    }
}

/// Exhaustive enumeration of all state sequences: initial-weighted path
/// mass ending in an accept state.
pub fn forward_by_enumeration(table: &ModelTable, input: &[usize]) -> f64 {
    fn rec(table: &ModelTable, input: &[usize], state: usize, depth: usize, weight: f64, total: &mut f64) {
        if depth == input.len() {
            if table.accept[state] {
                *total += weight;
            }
            return;
        }
        let a = input[depth];
        for t in 0..table.n {
            let p = table.t(state, a, t);
            if p > 0.0 {
                rec(table, input, t, depth + 1, weight * p, total);
            }
        }
    }
    let mut total = 0.0;
    for s in 0..table.n {
        if table.initial[s] > 0.0 {
            rec(table, input, s, 0, table.initial[s], &mut total);
        }
    }
    total
}

/// Exhaustive argmax over initial-weighted paths with branch-and-bound
/// pruning, first-found (lexicographically smallest) on ties. Returns the
/// state-index path and its transition-product log2.
pub fn viterbi_by_enumeration(table: &ModelTable, input: &[usize]) -> Option<(Vec<usize>, f64)> {
    let k = input.len();
    // Per-depth optimistic bound: best log2 step achievable at each
    // remaining position.
    let mut step_best = vec![f64::NEG_INFINITY; k];
    for (i, &a) in input.iter().enumerate() {
        for s in 0..table.n {
            for t in 0..table.n {
                let p = table.t(s, a, t);
                if p > 0.0 {
                    step_best[i] = step_best[i].max(p.log2());
                }
            }
        }
    }
    let mut remaining = vec![0.0; k + 1];
    for i in (0..k).rev() {
        remaining[i] = remaining[i + 1] + step_best[i];
    }

    struct Search<'a> {
        table: &'a ModelTable,
        input: &'a [usize],
        remaining: &'a [f64],
        best_score: f64,
        best: Option<(Vec<usize>, f64)>,
        path: Vec<usize>,
    }
    impl Search<'_> {
        fn rec(&mut self, depth: usize, score: f64, trans_lp: f64) {
            if depth == self.input.len() {
                if score > self.best_score {
                    self.best_score = score;
                    self.best = Some((self.path.clone(), trans_lp));
                }
                return;
            }
            if score + self.remaining[depth] <= self.best_score {
                return; // cannot beat the incumbent
            }
            let a = self.input[depth];
            let state = *self.path.last().unwrap();
            for t in 0..self.table.n {
                let p = self.table.t(state, a, t);
                if p > 0.0 {
                    self.path.push(t);
                    self.rec(depth + 1, score + p.log2(), trans_lp + p.log2());
                    self.path.pop();
                }
            }
        }
    }

    let mut search = Search {
        table,
        input,
        remaining: &remaining,
        best_score: f64::NEG_INFINITY,
        best: None,
        path: Vec::with_capacity(k + 1),
    };
    for s in 0..table.n {
        if table.initial[s] > 0.0 {
            search.path.push(s);
            let w = table.initial[s].log2();
            search.rec(0, w, 0.0);
            search.path.pop();
        }
    }
    search.best
}

/// Seeded random model over the named states. `full_support` keeps every
/// successor row non-empty; otherwise some rows are left empty.
pub fn random_model(seed: u64, n_states: usize, alphabet: &[&str], full_support: bool) -> Utfm {
    let states = &StateId::ALL[..n_states];
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut b = UtfmBuilder::new().states(states.iter().copied()).alphabet(alphabet.iter().copied());

    let mut init: Vec<f64> = (0..n_states).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = init.iter().sum();
    init.iter_mut().for_each(|v| *v /= total);
    for (i, &s) in states.iter().enumerate() {
        b = b.initial(s, init[i]);
    }

    for &s in states {
        for &a in alphabet {
            if !full_support && rng.gen_bool(0.15) {
                continue;
            }
            let mut row: Vec<f64> = (0..n_states).map(|_| rng.gen_range(0.05..1.0)).collect();
            let total: f64 = row.iter().sum();
            row.iter_mut().for_each(|v| *v /= total);
            for (j, &t) in states.iter().enumerate() {
                b = b.transition(s, a, t, row[j]);
            }
        }
        let mut row: Vec<f64> = (0..alphabet.len()).map(|_| rng.gen_range(0.05..1.0)).collect();
        let total: f64 = row.iter().sum();
        row.iter_mut().for_each(|v| *v /= total);
        for (j, &a) in alphabet.iter().enumerate() {
            b = b.emission(s, a, row[j]);
        }
    }

    let n_accept = rng.gen_range(1..=n_states);
    let mut order: Vec<usize> = (0..n_states).collect();
    order.shuffle(&mut rng);
    for &i in order.iter().take(n_accept) {
        b = b.accept(states[i]);
    }
    b.build().unwrap()
}

pub fn random_input(rng: &mut ChaCha12Rng, alphabet: &[&str], len: usize) -> Vec<ActionSymbol> {
    (0..len).map(|_| ActionSymbol::new(alphabet[rng.gen_range(0..alphabet.len())])).collect()
}

pub fn sample_sequence(model: &Utfm, rng: &mut ChaCha12Rng, len: usize) -> Vec<ActionSymbol> {
    let states = model.states().to_vec();
    let alphabet = model.alphabet().to_vec();
    let draw = |weights: &[f64], rng: &mut ChaCha12Rng| -> usize {
        let total: f64 = weights.iter().sum();
        let mut x = rng.gen_range(0.0..total);
        for (i, w) in weights.iter().enumerate() {
            if x < *w {
                return i;
            }
            x -= w;
        }
        weights.len() - 1
    };
    let init: Vec<f64> = states.iter().map(|&s| model.initial_probability(s).unwrap()).collect();
    let mut state = draw(&init, rng);
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        let emit: Vec<f64> = alphabet
            .iter()
            .map(|a| model.emission_probability(states[state], a).unwrap())
            .collect();
        let a = draw(&emit, rng);
        out.push(alphabet[a].clone());
        let row: Vec<f64> = states
            .iter()
            .map(|&t| model.transition_probability(states[state], &alphabet[a], t).unwrap())
            .collect();
        if row.iter().sum::<f64>() <= 0.0 {
            break;
        }
        state = draw(&row, rng);
    }
    out
}

// ----------------------------------------------------------------------
// Consensus oracle
// ----------------------------------------------------------------------

pub struct OracleEvent {
    pub id: EventId,
    pub creator: usize,
    pub self_parent: Option<usize>,
    pub other_parent: Option<usize>,
    pub timestamp: u64,
    pub signature: [u8; 32],
}

/// Expected consensus state for one event.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleVerdict {
    pub round: u64,
    pub witness: bool,
    pub fame: Fame,
    pub round_received: Option<u64>,
    pub consensus_timestamp: Option<u64>,
    pub position: Option<u64>,
}

/// A from-scratch, definition-level consensus computation over a DAG
/// snapshot. Quadratic-or-worse everywhere; no caches beyond ancestor
/// sets.
pub struct OracleDag {
    pub events: Vec<OracleEvent>,
    pub stakes: Vec<u64>,
    pub total_stake: u64,
    ancestors: Vec<HashSet<usize>>,
    self_ancestors: Vec<HashSet<usize>>,
    // Memos over the immutable DAG; the computations stay definition-level.
    fork_memo: RefCell<HashMap<(usize, usize), bool>>,
    strong_memo: RefCell<HashMap<(usize, usize), bool>>,
}

impl OracleDag {
    pub fn from_store(store: &EventStore) -> OracleDag {
        let mut index: HashMap<EventId, usize> = HashMap::new();
        let mut events = Vec::new();
        for e in store.events_in_arrival_order() {
            let idx = events.len();
            index.insert(e.id, idx);
            events.push(OracleEvent {
                id: e.id,
                creator: e.creator.0 as usize,
                self_parent: e.self_parent.map(|p| index[&p]),
                other_parent: e.other_parent.map(|p| index[&p]),
                timestamp: e.claimed_timestamp,
                signature: e.signature.0,
            });
        }
        let stakes: Vec<u64> = (0..store.address_book().n_agents())
            .map(|i| store.address_book().stake(AgentId(i as u64)))
            .collect();
        let total_stake = stakes.iter().sum();

        let mut ancestors: Vec<HashSet<usize>> = Vec::with_capacity(events.len());
        let mut self_ancestors: Vec<HashSet<usize>> = Vec::with_capacity(events.len());
        for (i, e) in events.iter().enumerate() {
            let mut anc = HashSet::new();
            anc.insert(i);
            if let Some(p) = e.self_parent {
                anc.extend(ancestors[p].iter().copied());
            }
            if let Some(p) = e.other_parent {
                anc.extend(ancestors[p].iter().copied());
            }
            ancestors.push(anc);
            let mut sanc = HashSet::new();
            sanc.insert(i);
            if let Some(p) = e.self_parent {
                sanc.extend(self_ancestors[p].iter().copied());
            }
            self_ancestors.push(sanc);
        }

        OracleDag {
            events,
            stakes,
            total_stake,
            ancestors,
            self_ancestors,
            fork_memo: RefCell::new(HashMap::new()),
            strong_memo: RefCell::new(HashMap::new()),
        }
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn supermajority(&self, stake: u64) -> bool {
        3 * stake as u128 > 2 * self.total_stake as u128
    }

    pub fn is_ancestor(&self, x: usize, y: usize) -> bool {
        self.ancestors[y].contains(&x)
    }

    pub fn is_self_ancestor(&self, x: usize, y: usize) -> bool {
        self.self_ancestors[y].contains(&x)
    }

    /// Fork by `creator` among the ancestors of `x`: two of the creator's
    /// events, neither a self-ancestor of the other.
    pub fn fork_visible(&self, x: usize, creator: usize) -> bool {
        if let Some(&v) = self.fork_memo.borrow().get(&(x, creator)) {
            return v;
        }
        let v = self.fork_visible_uncached(x, creator);
        self.fork_memo.borrow_mut().insert((x, creator), v);
        v
    }

    fn fork_visible_uncached(&self, x: usize, creator: usize) -> bool {
        let of_creator: Vec<usize> = self.ancestors[x]
            .iter()
            .copied()
            .filter(|&e| self.events[e].creator == creator)
            .collect();
        for (i, &a) in of_creator.iter().enumerate() {
            for &b in &of_creator[i + 1..] {
                if !self.is_self_ancestor(a, b) && !self.is_self_ancestor(b, a) {
                    return true;
                }
            }
        }
        false
    }

    pub fn sees(&self, x: usize, y: usize) -> bool {
        self.is_ancestor(y, x) && !self.fork_visible(x, self.events[y].creator)
    }

    /// Definition check: a set of events from creators holding a
    /// supermajority, each seen by `x` and each seeing `y`.
    pub fn strongly_sees(&self, x: usize, y: usize) -> bool {
        if let Some(&v) = self.strong_memo.borrow().get(&(x, y)) {
            return v;
        }
        let v = self.strongly_sees_uncached(x, y);
        self.strong_memo.borrow_mut().insert((x, y), v);
        v
    }

    fn strongly_sees_uncached(&self, x: usize, y: usize) -> bool {
        let mut stake = 0u64;
        for c in 0..self.stakes.len() {
            let found = (0..self.events.len()).any(|r| {
                self.events[r].creator == c && self.sees(x, r) && self.sees(r, y)
            });
            if found {
                stake += self.stakes[c];
            }
        }
        self.supermajority(stake)
    }

    /// Recompute rounds, witnesses, fame, receive rounds, timestamps, and
    /// positions from the definitions.
    pub fn consensus(&self) -> Vec<OracleVerdict> {
        let n_events = self.events.len();
        let mut round = vec![0u64; n_events];
        let mut witness = vec![false; n_events];
        // witnesses per round (1-indexed rounds; index 0 unused)
        let mut round_witnesses: Vec<Vec<usize>> = vec![Vec::new()];

        for i in 0..n_events {
            let e = &self.events[i];
            let r = match (e.self_parent, e.other_parent) {
                (None, None) => 1,
                (sp, op) => {
                    let pr = sp.map(|p| round[p]).unwrap_or(0).max(op.map(|p| round[p]).unwrap_or(0));
                    // stake of round-pr witnesses strongly seen, one per creator
                    let mut stake = 0u64;
                    for c in 0..self.stakes.len() {
                        let seen = round_witnesses
                            .get(pr as usize)
                            .map(|ws| {
                                ws.iter().any(|&w| {
                                    self.events[w].creator == c && self.strongly_sees(i, w)
                                })
                            })
                            .unwrap_or(false);
                        if seen {
                            stake += self.stakes[c];
                        }
                    }
                    if self.supermajority(stake) {
                        pr + 1
                    } else {
                        pr
                    }
                }
            };
            round[i] = r;
            let w = match e.self_parent {
                None => true,
                Some(p) => r > round[p],
            };
            witness[i] = w;
            if w {
                while round_witnesses.len() <= r as usize {
                    round_witnesses.push(Vec::new());
                }
                round_witnesses[r as usize].push(i);
            }
        }
        // deterministic witness order: (creator, id)
        for ws in round_witnesses.iter_mut() {
            ws.sort_by_key(|&w| (self.events[w].creator, self.events[w].id.0));
        }

        let max_round = round_witnesses.len() as u64 - 1;
        let mut fame = vec![Fame::Undecided; n_events];

        for r in 1..=max_round {
            for &w in &round_witnesses[r as usize] {
                // election
                let mut votes: HashMap<usize, bool> = HashMap::new();
                if r < max_round {
                    for &v in &round_witnesses[(r + 1) as usize] {
                        votes.insert(v, self.sees(v, w));
                    }
                }
                'election: for vr in (r + 2)..=max_round {
                    let mut this_votes = HashMap::new();
                    for &v in &round_witnesses[vr as usize] {
                        // previous-round witnesses strongly seen, one per
                        // creator (smallest id)
                        let mut per_creator: HashMap<usize, usize> = HashMap::new();
                        for &u in &round_witnesses[(vr - 1) as usize] {
                            if self.strongly_sees(v, u) {
                                let c = self.events[u].creator;
                                let slot = per_creator.entry(c).or_insert(u);
                                if self.events[u].id.0 < self.events[*slot].id.0 {
                                    *slot = u;
                                }
                            }
                        }
                        let mut yes = 0u64;
                        let mut no = 0u64;
                        for (&c, &u) in &per_creator {
                            match votes.get(&u) {
                                Some(true) => yes += self.stakes[c],
                                Some(false) => no += self.stakes[c],
                                None => {}
                            }
                        }
                        let majority = yes >= no;
                        let tally = yes.max(no);
                        if (vr - r) % COIN_ROUND_PERIOD != 0 {
                            if self.supermajority(tally) {
                                fame[w] = if majority { Fame::Famous } else { Fame::NotFamous };
                                break 'election;
                            }
                            this_votes.insert(v, majority);
                        } else if self.supermajority(tally) {
                            this_votes.insert(v, majority);
                        } else {
                            this_votes.insert(v, self.events[v].signature[16] & 1 == 1);
                        }
                    }
                    votes = this_votes;
                }
            }
        }

        // decided rounds, unique famous witnesses, receive rounds
        let mut round_received = vec![None; n_events];
        let mut consensus_ts = vec![None; n_events];
        let mut position = vec![None; n_events];
        let mut next_position = 0u64;

        for r in 1..=max_round {
            let ws = &round_witnesses[r as usize];
            if ws.is_empty() || ws.iter().any(|&w| fame[w] == Fame::Undecided) {
                break;
            }
            let famous: Vec<usize> = ws.iter().copied().filter(|&w| fame[w] == Fame::Famous).collect();
            let unique: Vec<usize> = famous
                .iter()
                .copied()
                .filter(|&w| {
                    famous
                        .iter()
                        .filter(|&&o| self.events[o].creator == self.events[w].creator)
                        .count()
                        == 1
                })
                .collect();
            if unique.is_empty() {
                continue;
            }
            let mut whiten = [0u8; 32];
            for &u in &unique {
                for (b, s) in whiten.iter_mut().zip(self.events[u].signature.iter()) {
                    *b ^= s;
                }
            }

            let mut batch: Vec<(usize, u64)> = Vec::new();
            for x in 0..n_events {
                if position[x].is_some() || round[x] > r {
                    continue;
                }
                if unique.iter().all(|&u| self.is_ancestor(x, u)) {
                    // literal stake-expanded basket of earliest
                    // self-ancestor timestamps
                    let mut basket: Vec<u64> = Vec::new();
                    for &u in &unique {
                        let mut chain = vec![u];
                        let mut cur = u;
                        while let Some(p) = self.events[cur].self_parent {
                            chain.push(p);
                            cur = p;
                        }
                        let z = chain
                            .iter()
                            .rev()
                            .copied()
                            .find(|&z| self.is_ancestor(x, z))
                            .expect("x is an ancestor of the witness");
                        let copies = self.stakes[self.events[u].creator];
                        basket.extend(std::iter::repeat_n(self.events[z].timestamp, copies as usize));
                    }
                    basket.sort();
                    let ts = basket[(basket.len() - 1) / 2];
                    batch.push((x, ts));
                }
            }
            batch.sort_by(|&(a, ts_a), &(b, ts_b)| {
                let key = |i: usize| -> [u8; 32] {
                    let mut k = self.events[i].id.0;
                    for (kb, wb) in k.iter_mut().zip(whiten.iter()) {
                        *kb ^= wb;
                    }
                    k
                };
                ts_a.cmp(&ts_b).then_with(|| key(a).cmp(&key(b)))
            });
            for (x, ts) in batch {
                round_received[x] = Some(r);
                consensus_ts[x] = Some(ts);
                position[x] = Some(next_position);
                next_position += 1;
            }
        }

        (0..n_events)
            .map(|i| OracleVerdict {
                round: round[i],
                witness: witness[i],
                fame: fame[i],
                round_received: round_received[i],
                consensus_timestamp: consensus_ts[i],
                position: position[i],
            })
            .collect()
    }
}

// ----------------------------------------------------------------------
// Fixture builders
// ----------------------------------------------------------------------

pub fn dummy_tx(role: u64, flight: u64) -> Transaction {
    Transaction {
        role: AgentId(role),
        flight_id: flight,
        queue_position: 0,
        stake_entropy: 12.0,
        impact: RecoveryImpact {
            tactical_delay_min: 10,
            turnaround_min: 12,
            block_time_min: 150,
            strategic_delay_min: 5,
        },
    }
}

/// A single replica filled by seeded random gossip (independent of the
/// simulation engine): each step one creator records a sync from a random
/// peer.
pub fn random_gossip_store(seed: u64, stakes: &[u64], n_events: usize) -> EventStore {
    let n = stakes.len();
    let keys = KeyRegistry::derive(seed, n);
    let mut store = EventStore::new(AddressBook::new(stakes.to_vec()), keys.clone());
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut heads: Vec<EventId> = Vec::new();
    let mut clock = 0u64;
    for i in 0..n {
        let g = Event::new(AgentId(i as u64), None, None, 0, vec![], keys.key(AgentId(i as u64)).unwrap());
        heads.push(g.id);
        store.insert_event(g).unwrap();
    }
    let mut flight = 1000;
    for _ in 0..n_events.saturating_sub(n) {
        let c = rng.gen_range(0..n);
        let mut p = rng.gen_range(0..n - 1);
        if p >= c {
            p += 1;
        }
        clock += rng.gen_range(1..=20);
        let payload = if rng.gen_bool(0.3) {
            flight += 1;
            vec![dummy_tx(c as u64, flight)]
        } else {
            vec![]
        };
        let e = Event::new(
            AgentId(c as u64),
            Some(heads[c]),
            Some(heads[p]),
            clock,
            payload,
            keys.key(AgentId(c as u64)).unwrap(),
        );
        heads[c] = e.id;
        store.insert_event(e).unwrap();
    }
    store
}

/// Compare every event's consensus verdict against the oracle's.
pub fn assert_matches_oracle(store: &EventStore) {
    let dag = OracleDag::from_store(store);
    let verdicts = dag.consensus();
    for (i, e) in store.events_in_arrival_order().enumerate() {
        let info = store.round_info(&e.id).unwrap();
        let want = &verdicts[i];
        assert_eq!(info.round_created, want.round, "round of event {i} ({})", e.id);
        assert_eq!(info.is_witness, want.witness, "witness flag of event {i}");
        assert_eq!(info.fame, want.fame, "fame of event {i}");
        assert_eq!(info.round_received, want.round_received, "round received of event {i}");
        assert_eq!(
            info.consensus_timestamp, want.consensus_timestamp,
            "consensus timestamp of event {i}"
        );
        assert_eq!(info.consensus_position, want.position, "position of event {i}");
    }
}

/// Pairwise agreement of decided prefixes: order, timestamps, positions.
pub fn assert_decided_prefix_agreement(stores: &[EventStore]) {
    let views: Vec<Vec<(EventId, u64, u64)>> = stores
        .iter()
        .map(|s| {
            s.consensus_events()
                .into_iter()
                .map(|id| {
                    let info = s.round_info(&id).unwrap();
                    (id, info.consensus_timestamp.unwrap(), info.consensus_position.unwrap())
                })
                .collect()
        })
        .collect();
    for a in 0..views.len() {
        for b in (a + 1)..views.len() {
            let (short, long) = if views[a].len() <= views[b].len() {
                (&views[a], &views[b])
            } else {
                (&views[b], &views[a])
            };
            assert_eq!(
                short.as_slice(),
                &long[..short.len()],
                "replicas {a} and {b} disagree on the decided prefix"
            );
        }
    }
}

/// Agreement of per-event consensus attributes on the shared sub-DAG.
pub fn assert_common_event_agreement(a: &EventStore, b: &EventStore) {
    assert!(a.consistent(b), "stores must be consistent");
    for e in a.events_in_arrival_order() {
        if !b.contains(&e.id) {
            continue;
        }
        let ia = a.round_info(&e.id).unwrap();
        let ib = b.round_info(&e.id).unwrap();
        assert_eq!(ia.round_created, ib.round_created, "round of {}", e.id);
        assert_eq!(ia.is_witness, ib.is_witness, "witness flag of {}", e.id);
        let decided = |f: Fame| f != Fame::Undecided;
        if decided(ia.fame) && decided(ib.fame) {
            assert_eq!(ia.fame, ib.fame, "fame of {}", e.id);
        }
        if ia.consensus_position.is_some() && ib.consensus_position.is_some() {
            assert_eq!(ia.round_received, ib.round_received, "round received of {}", e.id);
            assert_eq!(ia.consensus_timestamp, ib.consensus_timestamp, "timestamp of {}", e.id);
            assert_eq!(ia.consensus_position, ib.consensus_position, "position of {}", e.id);
        }
    }
}
