//! Consensus engine and gossip simulator for decentralized airline
//! disruption recovery.
//!
//! The crate wires four layers together:
//!
//! * [`utfm`] — probabilistic finite state machines modelling how reliably
//!   each functional role resolves a disruption, with Baum-Welch training
//!   and pseudocount smoothing;
//! * [`stake`] — converts a decoded resolution trace into the integer
//!   voting stake of a role via position weights and information cross
//!   entropy;
//! * [`hashgraph`] — the event DAG, virtual voting, famous-witness
//!   elections, and stake-weighted total ordering of recovery transactions;
//! * [`sim`] / [`scenario`] — a deterministic discrete-event gossip
//!   simulation that replays disruption scenarios and reports convergence
//!   metrics.

pub mod hashgraph;
pub mod scenario;
pub mod sim;
pub mod stake;
pub mod utfm;
