//! Decision procedures for leader/contributor shared-memory systems.
//!
//! One leader thread and an unbounded number of identical contributor
//! threads communicate through a single memory cell over a finite domain.
//! The crate decides
//!
//! * reachability of leader states, by saturating a table indexed by sets
//!   of contributor states ([`subsets`]) or by dynamic programming over
//!   repetition-free leader witnesses ([`witness`]);
//! * existence of a saturated cycle on an interface, by a greatest
//!   fixed-point iteration over SCC decompositions of the contributor
//!   ([`cycle`]);
//! * liveness (a leader final state visited infinitely often) by gluing
//!   the two ([`liveness`]).
//!
//! [`semantics`] holds the concrete configuration graph and bounded
//! explicit-state oracles used to cross-check every engine.

pub mod bits;
pub mod crosscheck;
pub mod cycle;
pub mod gen;
mod graph;
pub mod liveness;
pub mod model;
pub mod semantics;
pub mod subsets;
pub mod witness;

pub use bits::BitSet;
pub use model::{parse_system, serialize_system, Interface, MemOp, System};
