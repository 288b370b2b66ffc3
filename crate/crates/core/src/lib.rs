//! Workbench for k-variable finite model theory.
//!
//! Finite relational structures, `≡^k` by set-based partition refinement
//! with a pebble-game cross-check, the complete invariant `I^k`, game
//! tableaux with amalgamation, inflationary fixed points, construction
//! graphs of programs and d-separation queries on them.

pub mod closure;
pub mod corpus;
pub mod dag;
pub mod error;
pub mod exec;
pub mod invariant;
pub mod logic;
pub mod pebble;
pub mod program;
pub mod structure;
pub mod tableau;

pub use error::{Error, Result};
pub use exec::Exec;
pub use structure::{is_partial_iso, FiniteStructure, PartialMap, Signature};
