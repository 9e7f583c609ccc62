//! Executable packet-level coding protocols.
//!
//! All three protocols react to the same schedule events and differ only
//! in what a node keeps between ticks:
//!
//! * [`Protocol::Pnc`]: the node stores every packet it has generated or
//!   received. Each transmission emits a fresh random combination of the
//!   whole store.
//! * [`Protocol::Recombinator`]: the node keeps mu registers. At every one
//!   of its ticks it replaces all registers with fresh random combinations
//!   of its current inputs (previous registers, plus anything generated or
//!   arriving this tick), and each transmission emits one more such
//!   combination.
//! * [`Protocol::Accumulator`]: the node keeps mu registers and folds each
//!   arriving packet into every register with an independent coefficient,
//!   never touching what was already there. Transmissions emit random
//!   combinations of the registers.
//!
//! Coefficients come from the keyed oracle, so a run is a pure function of
//! (schedule, field, memory, seed, messages). The full-memory protocol
//! draws its coefficients at exactly the keys the head-extended circuit
//! evaluation uses, which makes the two produce identical packets; the
//! `verify` module checks that correspondence packet by packet.
//!
//! A node's knowledge snapshot at one of its ticks is what it carries
//! forward from that tick: the whole store for the full-memory protocol,
//! the refreshed registers otherwise. A node never sends and receives in
//! the same tick, so emissions only ever draw on state from earlier ticks.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuits::Memory;
use crate::gf::{decode, header_rank, DecodeOutcome, Field, FieldElem, GfError, PacketVector};
use crate::oracle::{CoeffOracle, InKey, TailKey};
use crate::schedule::{
    build_hypergraph, Event, InvalidSchedule, MessageId, NodeId, Schedule, Tick,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Pnc,
    Recombinator,
    Accumulator,
}

impl Protocol {
    pub fn name(self) -> &'static str {
        match self {
            Protocol::Pnc => "pnc",
            Protocol::Recombinator => "recombinator",
            Protocol::Accumulator => "accumulator",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error(transparent)]
    Invalid(#[from] InvalidSchedule),
    #[error(transparent)]
    Gf(#[from] GfError),
    #[error("expected {expected} messages, got {got}")]
    MessageCount { expected: usize, got: usize },
}

/// What one node carries forward from one of its ticks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CopySnapshot {
    pub node: NodeId,
    pub time: Tick,
    /// Retained packets: the full store or the registers, in the node's
    /// canonical input order.
    pub store: Vec<PacketVector>,
    /// Rank of the store's coding headers.
    pub rank: usize,
}

/// One packet put on the wire.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmissionRecord {
    pub event: usize,
    pub sender: NodeId,
    pub time: Tick,
    pub packet: PacketVector,
}

/// Final state of one node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeOutcome {
    pub node: NodeId,
    /// Tick of the node's last appearance; `None` if it never acts.
    pub time: Option<Tick>,
    pub rank: usize,
    /// All k messages, if the node's final rank allows decoding.
    pub decoded: Option<Vec<Vec<FieldElem>>>,
}

/// Complete record of one protocol run.
#[derive(Debug, Clone)]
pub struct SimulatorTrace {
    pub protocol: Protocol,
    pub seed: u64,
    /// Register count for the bounded protocols, `None` for full memory.
    pub mu: Option<u64>,
    /// One snapshot per node copy, ascending (time, node).
    pub snapshots: Vec<CopySnapshot>,
    /// One record per transmit event, ascending event index.
    pub emissions: Vec<EmissionRecord>,
    /// One outcome per node.
    pub finals: Vec<NodeOutcome>,
    snapshot_index: HashMap<(NodeId, Tick), usize>,
}

impl SimulatorTrace {
    pub fn snapshot(&self, node: NodeId, time: Tick) -> Option<&CopySnapshot> {
        self.snapshot_index.get(&(node, time)).map(|&i| &self.snapshots[i])
    }

    pub fn rank_at(&self, node: NodeId, time: Tick) -> Option<usize> {
        self.snapshot(node, time).map(|s| s.rank)
    }

    pub fn emission(&self, event: usize) -> Option<&EmissionRecord> {
        self.emissions.iter().find(|e| e.event == event)
    }

    /// Decode the k messages from the node's retained packets at a tick.
    pub fn decode_at(
        &self,
        field: &Field,
        node: NodeId,
        time: Tick,
        k: usize,
    ) -> Option<DecodeOutcome> {
        let snap = self.snapshot(node, time)?;
        decode(field, &snap.store, k).ok()
    }
}

/// An arriving input at some (node, tick): a generated message or a
/// received transmission. Sorts into the canonical input order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Incoming {
    Generated { message: MessageId },
    Received { arrival: Tick, sender: NodeId, event: usize },
}

impl Incoming {
    fn in_key(self) -> InKey {
        match self {
            Incoming::Generated { message } => InKey::Message(message as u64),
            Incoming::Received { event, .. } => InKey::Event(event as u64),
        }
    }
}

/// Run a protocol over a schedule. `messages` supplies the k payloads,
/// each of length l. The memory bound applies to the two bounded
/// protocols and is ignored by full-memory coding.
pub fn run(
    schedule: &Schedule,
    protocol: Protocol,
    field: &Field,
    memory: Memory,
    oracle: &CoeffOracle,
    messages: &[Vec<FieldElem>],
) -> Result<SimulatorTrace, ProtocolError> {
    let teh = build_hypergraph(schedule)?;
    if messages.len() != schedule.k {
        return Err(ProtocolError::MessageCount { expected: schedule.k, got: messages.len() });
    }
    for m in messages {
        if m.len() != schedule.l {
            return Err(GfError::DimensionMismatch { expected: schedule.l, got: m.len() }.into());
        }
    }
    let (k, l) = (schedule.k, schedule.l);
    let mu = memory.effective(k) as usize;

    // Index the schedule by (node, tick): what arrives and what leaves.
    let mut incoming: HashMap<(NodeId, Tick), Vec<Incoming>> = HashMap::new();
    let mut outgoing: HashMap<(NodeId, Tick), Vec<usize>> = HashMap::new();
    for (idx, event) in schedule.events.iter().enumerate() {
        match event {
            Event::Generate { message, origins } => {
                for o in origins {
                    incoming
                        .entry((o.node, o.time))
                        .or_default()
                        .push(Incoming::Generated { message: *message });
                }
            }
            Event::Transmit { sender, time, heads } => {
                outgoing.entry((*sender, *time)).or_default().push(idx);
                for h in heads {
                    let arrival = time + h.delay;
                    incoming.entry((h.to, arrival)).or_default().push(Incoming::Received {
                        arrival,
                        sender: *sender,
                        event: idx,
                    });
                }
            }
        }
    }
    for list in incoming.values_mut() {
        list.sort_unstable();
    }
    for list in outgoing.values_mut() {
        list.sort_unstable();
    }

    // Per-node protocol state.
    let mut pnc_store: Vec<Vec<(Incoming, PacketVector)>> = vec![Vec::new(); schedule.n];
    let mut registers: Vec<Option<Vec<PacketVector>>> = vec![None; schedule.n];
    let mut emitted: HashMap<usize, PacketVector> = HashMap::new();

    let packet_of = |inc: Incoming, emitted: &HashMap<usize, PacketVector>| -> PacketVector {
        match inc {
            Incoming::Generated { message } => {
                PacketVector::source(message, k, messages[message].clone())
            }
            Incoming::Received { event, .. } => emitted[&event].clone(),
        }
    };

    let mut snapshots = Vec::with_capacity(teh.copies().len());
    let mut emissions = Vec::new();

    for &(node, time) in teh.copies() {
        let arrivals = incoming.get(&(node, time)).map(Vec::as_slice).unwrap_or(&[]);
        let sends = outgoing.get(&(node, time)).map(Vec::as_slice).unwrap_or(&[]);
        let copy_key = TailKey::Copy { node: node as u64, time };
        let has_next = teh.node_copies(node).iter().any(|&c| teh.copy(c).1 > time);

        let store: Vec<PacketVector> = match protocol {
            Protocol::Pnc => {
                for &inc in arrivals {
                    let p = packet_of(inc, &emitted);
                    let at = pnc_store[node].partition_point(|(key, _)| *key < inc);
                    pnc_store[node].insert(at, (inc, p));
                }
                for (pos, &event) in sends.iter().enumerate() {
                    let terms: Vec<(FieldElem, &PacketVector)> = pnc_store[node]
                        .iter()
                        .map(|(inc, p)| {
                            (oracle.coeff(field, copy_key, pos as u64, inc.in_key()), p)
                        })
                        .collect();
                    let packet = crate::gf::linear_combination(field, &terms, k, l)?;
                    emissions.push(EmissionRecord {
                        event,
                        sender: node,
                        time,
                        packet: packet.clone(),
                    });
                    emitted.insert(event, packet);
                }
                pnc_store[node].iter().map(|(_, p)| p.clone()).collect()
            }
            Protocol::Recombinator => {
                // Canonical input order: generated messages, previous
                // registers, then receptions.
                let mut inputs: Vec<(InKey, PacketVector)> = Vec::new();
                for &inc in arrivals {
                    if matches!(inc, Incoming::Generated { .. }) {
                        inputs.push((inc.in_key(), packet_of(inc, &emitted)));
                    }
                }
                if let Some(regs) = &registers[node] {
                    for (slot, r) in regs.iter().enumerate() {
                        inputs.push((InKey::MemorySlot(slot as u64), r.clone()));
                    }
                }
                for &inc in arrivals {
                    if matches!(inc, Incoming::Received { .. }) {
                        inputs.push((inc.in_key(), packet_of(inc, &emitted)));
                    }
                }
                let combine = |out_index: u64| -> Result<PacketVector, GfError> {
                    let terms: Vec<(FieldElem, &PacketVector)> = inputs
                        .iter()
                        .map(|(ik, p)| (oracle.coeff(field, copy_key, out_index, *ik), p))
                        .collect();
                    crate::gf::linear_combination(field, &terms, k, l)
                };
                // Emission draws mirror the transformed graph, where a copy
                // with a successor spends its first mu output slots on the
                // register hand-off.
                let emit_base = if has_next { mu as u64 } else { 0 };
                for (pos, &event) in sends.iter().enumerate() {
                    let packet = combine(emit_base + pos as u64)?;
                    emissions.push(EmissionRecord {
                        event,
                        sender: node,
                        time,
                        packet: packet.clone(),
                    });
                    emitted.insert(event, packet);
                }
                let mut fresh = Vec::with_capacity(mu);
                for slot in 0..mu {
                    fresh.push(combine(slot as u64)?);
                }
                registers[node] = Some(fresh.clone());
                fresh
            }
            Protocol::Accumulator => {
                let regs =
                    registers[node].get_or_insert_with(|| vec![PacketVector::zero(k, l); mu]);
                for (pos, &event) in sends.iter().enumerate() {
                    let port = TailKey::TxPort { node: node as u64, time, port: pos as u64 };
                    let terms: Vec<(FieldElem, &PacketVector)> = regs
                        .iter()
                        .enumerate()
                        .map(|(slot, r)| {
                            (oracle.coeff(field, port, 0, InKey::RegisterSlot(slot as u64)), r)
                        })
                        .collect();
                    let packet = crate::gf::linear_combination(field, &terms, k, l)?;
                    emissions.push(EmissionRecord {
                        event,
                        sender: node,
                        time,
                        packet: packet.clone(),
                    });
                    emitted.insert(event, packet);
                }
                for &inc in arrivals {
                    let p = packet_of(inc, &emitted);
                    for (slot, reg) in regs.iter_mut().enumerate() {
                        let reg_key =
                            TailKey::Register { node: node as u64, time, slot: slot as u64 };
                        let c = oracle.coeff(field, reg_key, 0, inc.in_key());
                        reg.add_scaled(field, c, &p)?;
                    }
                }
                regs.clone()
            }
        };

        let rank = header_rank(field, &store);
        snapshots.push(CopySnapshot { node, time, store, rank });
    }

    emissions.sort_by_key(|e| e.event);

    let snapshot_index: HashMap<(NodeId, Tick), usize> =
        snapshots.iter().enumerate().map(|(i, s)| ((s.node, s.time), i)).collect();

    let mut finals = Vec::with_capacity(schedule.n);
    for node in 0..schedule.n {
        let last = teh.node_copies(node).last().map(|&c| teh.copy(c).1);
        let outcome = match last {
            Some(time) => {
                let snap = &snapshots[snapshot_index[&(node, time)]];
                let decoded = match decode(field, &snap.store, k)? {
                    DecodeOutcome::Decoded(msgs) => Some(msgs),
                    DecodeOutcome::NotDecodable { .. } => None,
                };
                NodeOutcome { node, time: Some(time), rank: snap.rank, decoded }
            }
            None => NodeOutcome { node, time: None, rank: 0, decoded: None },
        };
        finals.push(outcome);
    }

    Ok(SimulatorTrace {
        protocol,
        seed: oracle.seed(),
        mu: match protocol {
            Protocol::Pnc => None,
            _ => Some(mu as u64),
        },
        snapshots,
        emissions,
        finals,
        snapshot_index,
    })
}
