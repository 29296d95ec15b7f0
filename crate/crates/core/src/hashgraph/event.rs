//! Events, transactions, and their canonical binary encoding.
//!
//! An event's identity is the SHA-256 of its canonical encoding, so two
//! replicas always agree on what an id refers to. Signatures are simulated
//! as keyed hashes over the same bytes: unforgeable inside the simulation
//! without real asymmetric cryptography.
//!
//! Canonical layout, all integers big-endian:
//! creator id (8 bytes), self-parent id (32, zero when absent),
//! other-parent id (32, zero when absent), claimed timestamp (8),
//! payload count (4), then each transaction length-prefixed (u32).

use std::fmt;

use sha2::{Digest, Sha256};

use crate::scenario::RecoveryImpact;

/// Index of an agent in the consensus membership.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AgentId(pub u64);

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Content hash identifying an event.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EventId(pub [u8; 32]);

impl EventId {
    pub fn to_hex(self) -> String {
        self.0.iter().map(|b| format!("{b:02x}")).collect()
    }
}

impl fmt::Debug for EventId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "EventId({}..)", &self.to_hex()[..8])
    }
}

impl fmt::Display for EventId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

/// Keyed-hash authentication tag.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Signature(pub [u8; 32]);

impl fmt::Debug for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Signature(..)")
    }
}

/// Per-agent signing key material (simulation only).
#[derive(Clone, Copy)]
pub struct SecretKey(pub [u8; 32]);

/// Shared registry of every member's key, used both to sign own events and
/// to verify received ones.
#[derive(Clone)]
pub struct KeyRegistry {
    keys: Vec<SecretKey>,
}

impl KeyRegistry {
    /// Derive one key per agent from a common seed.
    pub fn derive(seed: u64, n_agents: usize) -> KeyRegistry {
        let keys = (0..n_agents)
            .map(|i| {
                let mut h = Sha256::new();
                h.update(b"agent-key");
                h.update(seed.to_be_bytes());
                h.update((i as u64).to_be_bytes());
                SecretKey(h.finalize().into())
            })
            .collect();
        KeyRegistry { keys }
    }

    pub fn key(&self, agent: AgentId) -> Option<&SecretKey> {
        self.keys.get(agent.0 as usize)
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }
}

/// One disruption resolution posted to the ledger.
#[derive(Debug, Clone, PartialEq)]
pub struct Transaction {
    pub role: AgentId,
    pub flight_id: u64,
    pub queue_position: u64,
    /// Reliability measure of the resolution (information cross entropy of
    /// the decoded trace).
    pub stake_entropy: f64,
    pub impact: RecoveryImpact,
}

impl Transaction {
    fn canonical_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(64);
        out.extend_from_slice(&self.role.0.to_be_bytes());
        out.extend_from_slice(&self.flight_id.to_be_bytes());
        out.extend_from_slice(&self.queue_position.to_be_bytes());
        out.extend_from_slice(&self.stake_entropy.to_bits().to_be_bytes());
        out.extend_from_slice(&self.impact.tactical_delay_min.to_be_bytes());
        out.extend_from_slice(&self.impact.turnaround_min.to_be_bytes());
        out.extend_from_slice(&self.impact.block_time_min.to_be_bytes());
        out.extend_from_slice(&self.impact.strategic_delay_min.to_be_bytes());
        out
    }
}

/// A hashgraph vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub creator: AgentId,
    pub self_parent: Option<EventId>,
    pub other_parent: Option<EventId>,
    /// Simulated-clock milliseconds claimed by the creator.
    pub claimed_timestamp: u64,
    pub payload: Vec<Transaction>,
    pub signature: Signature,
    pub id: EventId,
}

fn canonical_encoding(
    creator: AgentId,
    self_parent: Option<EventId>,
    other_parent: Option<EventId>,
    claimed_timestamp: u64,
    payload: &[Transaction],
) -> Vec<u8> {
    let mut out = Vec::with_capacity(84 + payload.len() * 68);
    out.extend_from_slice(&creator.0.to_be_bytes());
    out.extend_from_slice(&self_parent.map(|p| p.0).unwrap_or([0u8; 32]));
    out.extend_from_slice(&other_parent.map(|p| p.0).unwrap_or([0u8; 32]));
    out.extend_from_slice(&claimed_timestamp.to_be_bytes());
    out.extend_from_slice(&(payload.len() as u32).to_be_bytes());
    for tx in payload {
        let bytes = tx.canonical_bytes();
        out.extend_from_slice(&(bytes.len() as u32).to_be_bytes());
        out.extend_from_slice(&bytes);
    }
    out
}

fn sign(key: &SecretKey, bytes: &[u8]) -> Signature {
    let mut h = Sha256::new();
    h.update(key.0);
    h.update(bytes);
    Signature(h.finalize().into())
}

impl Event {
    /// Build, hash, and sign an event.
    pub fn new(
        creator: AgentId,
        self_parent: Option<EventId>,
        other_parent: Option<EventId>,
        claimed_timestamp: u64,
        payload: Vec<Transaction>,
        key: &SecretKey,
    ) -> Event {
        let bytes = canonical_encoding(creator, self_parent, other_parent, claimed_timestamp, &payload);
        let id = EventId(Sha256::digest(&bytes).into());
        let signature = sign(key, &bytes);
        Event {
            creator,
            self_parent,
            other_parent,
            claimed_timestamp,
            payload,
            signature,
            id,
        }
    }

    pub fn canonical_encoding(&self) -> Vec<u8> {
        canonical_encoding(
            self.creator,
            self.self_parent,
            self.other_parent,
            self.claimed_timestamp,
            &self.payload,
        )
    }

    /// Recompute the content hash from the fields.
    pub fn computed_id(&self) -> EventId {
        EventId(Sha256::digest(self.canonical_encoding()).into())
    }

    pub fn verify_signature(&self, key: &SecretKey) -> bool {
        sign(key, &self.canonical_encoding()) == self.signature
    }

    pub fn is_genesis(&self) -> bool {
        self.self_parent.is_none() && self.other_parent.is_none()
    }
}
