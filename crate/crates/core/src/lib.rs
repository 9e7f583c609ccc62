//! A simulator and verification laboratory for packetized random linear
//! network coding over dynamic networks.
//!
//! The crate is organized as a pipeline:
//!
//! * [`gf`]: arithmetic over GF(2^m) for m in {4, 8, 16}, packet vectors,
//!   rank and Gaussian decoding.
//! * [`oracle`]: a deterministic coefficient oracle keyed by draw site, so
//!   a protocol run and a circuit evaluation of the same seed pick
//!   identical coefficients.
//! * [`schedule`]: transmission schedules over a dynamic network, their
//!   validation, JSON form, generators, and the time-expanded hypergraph
//!   unrolling.
//! * [`circuits`]: graph transforms of the unrolled schedule (memory
//!   bounds, head extension, recombinator and accumulator layouts) and
//!   their evaluation as linear coding circuits.
//! * [`flow`]: max-flow and min-cut over lowered hypergraphs, an exhaustive
//!   cut oracle for small instances, and min-cut queries at node copies.
//! * [`protocols`]: executable packet-level protocols (full-memory coding,
//!   bounded-memory recombinators and accumulators) producing traces.
//! * [`verify`]: equivalence checks between protocols, circuits and cuts,
//!   plus randomized optimality campaigns with statistical reports.

pub mod circuits;
pub mod flow;
pub mod gf;
pub mod oracle;
pub mod protocols;
pub mod schedule;
pub mod verify;
