//! Statistical shallow parsing: a probabilistic chunker trained from
//! SUSANNE-format treebanks, POS-priority head assignment, finite-state
//! noun-phrase extraction, and automatic evaluation against the treebank's
//! parse fields.
//!
//! The processing pipeline is: tagged text -> chunker -> head assignment ->
//! NP extraction, with every knowledge source (tag map, priority tables,
//! FSM) carried in external data files so it can be swapped without code
//! changes.

pub mod chunker;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod fsm;
pub mod grammar;
pub mod heads;
pub mod pattern;
pub mod pipeline;
pub mod tree;

pub use error::{Error, Result};
