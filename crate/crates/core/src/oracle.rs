//! Deterministic coefficient streams.
//!
//! Every random coding coefficient in the laboratory is drawn from a keyed
//! oracle instead of an ambient RNG. The key identifies the exact draw
//! site: which vertex copy is emitting, which of its outputs is being
//! formed, and which input the coefficient scales. Keying the draws this
//! way lets a protocol run and a circuit evaluation reproduce the same
//! coefficient choices independently, which is what the simulation
//! equivalence check relies on.

use crate::gf::{Field, FieldElem};

/// Identity of the emitting vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TailKey {
    /// The supersource.
    Source,
    /// A node copy (node, tick).
    Copy { node: u64, time: u64 },
    /// A register cell in an accumulator layout.
    Register { node: u64, time: u64, slot: u64 },
    /// A transmission port in an accumulator layout.
    TxPort { node: u64, time: u64, port: u64 },
}

/// Identity of the input being scaled.
///
/// Inputs are keyed by what they are rather than by their position in an
/// argument list, so the two sides of an equivalence check cannot drift
/// apart by enumerating inputs in different orders.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InKey {
    /// Source message with this id.
    Message(u64),
    /// Packet created by the transmit event with this index.
    Event(u64),
    /// Memory slot carried over from the previous copy.
    MemorySlot(u64),
    /// Register read by a transmission port.
    RegisterSlot(u64),
}

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn absorb(h: u64, w: u64) -> u64 {
    mix64(h ^ w.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0x2545_F491_4F6C_DD1D))
}

/// Derive the `index`-th child seed of a base seed, for splitting one
/// campaign seed into independent per-trial seeds.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    absorb(mix64(base), index)
}

fn tail_words(t: TailKey) -> [u64; 4] {
    match t {
        TailKey::Source => [0, 0, 0, 0],
        TailKey::Copy { node, time } => [1, node, time, 0],
        TailKey::Register { node, time, slot } => [2, node, time, slot],
        TailKey::TxPort { node, time, port } => [3, node, time, port],
    }
}

fn in_words(i: InKey) -> [u64; 2] {
    match i {
        InKey::Message(id) => [0, id],
        InKey::Event(idx) => [1, idx],
        InKey::MemorySlot(s) => [2, s],
        InKey::RegisterSlot(s) => [3, s],
    }
}

/// Keyed coefficient oracle for one trial.
#[derive(Debug, Clone, Copy)]
pub struct CoeffOracle {
    seed: u64,
}

impl CoeffOracle {
    pub fn new(seed: u64) -> CoeffOracle {
        CoeffOracle { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Coefficient scaling input `input` in output number `out_index` of
    /// vertex `tail`. Uniform over the whole field, zero included.
    pub fn coeff(&self, field: &Field, tail: TailKey, out_index: u64, input: InKey) -> FieldElem {
        let mut h = mix64(self.seed ^ 0x636f_6566_6631_3636);
        for w in tail_words(tail) {
            h = absorb(h, w);
        }
        h = absorb(h, out_index);
        for w in in_words(input) {
            h = absorb(h, w);
        }
        FieldElem((h & u64::from(field.order() - 1)) as u16)
    }
}
