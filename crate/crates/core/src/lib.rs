//! Affectible session contracts: syntax, operational semantics, compliance
//! checking, orchestrator synthesis, game strategies and subcontracts.

pub mod compliance;
pub mod contract;
pub mod games;
pub mod orch;
pub mod orchestrators;
pub mod parse;
pub mod regular;
pub mod semantics;
pub mod subcontract;
pub mod testkit;

pub use contract::{Contract, Name};
pub use orch::{Dir, OAct, Orch};
pub use parse::{parse_contract, parse_orch, JsonError, ParseError};
