//! Hashgraph consensus: an append-only DAG of gossip events whose
//! structure alone determines a Byzantine-fault-tolerant total order of
//! the transactions it carries.
//!
//! Events reference their creator's previous event and the latest event
//! heard from a peer; rounds, witnesses, famous-witness elections, and
//! receive-rounds follow from those two hashes. Votes are never sent:
//! every replica computes the votes other members would have cast.

mod event;
mod store;

pub use event::{AgentId, Event, EventId, KeyRegistry, SecretKey, Signature, Transaction};
pub use store::{
    AddressBook, EventStore, Fame, InsertError, InsertOutcome, InvalidReason, OrderedTransaction,
    RoundInfo, UnknownEvent, COIN_ROUND_PERIOD,
};

#[cfg(test)]
mod tests;
