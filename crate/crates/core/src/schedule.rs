//! Transmission schedules and their time-expanded hypergraphs.
//!
//! A [`Schedule`] is the complete description of one network run: how many
//! nodes and messages there are, when each message appears and where, and
//! every transmission with its per-recipient delivery delay. Schedules are
//! plain data; [`validate`] reports structural problems as values rather
//! than failing fast, and [`build_hypergraph`] unrolls a valid schedule
//! into the time-expanded hypergraph that the circuit transforms and the
//! flow computations work on.
//!
//! The hypergraph has one vertex copy `(v, t)` for every tick at which node
//! `v` sends, receives, or generates, plus a distinguished supersource. One
//! hyperedge per transmit event connects the sender copy to all its arrival
//! copies, and one hyperedge per message connects the supersource to every
//! origin copy of that message, however many generate events contributed
//! origins.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type NodeId = usize;
pub type Tick = u64;
pub type MessageId = usize;

/// Delivery target of a transmission: recipient and arrival delay in ticks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Head {
    pub to: NodeId,
    pub delay: u64,
}

/// Where and when a message enters the network.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Origin {
    pub node: NodeId,
    pub time: Tick,
}

/// One schedule event.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Event {
    /// Node `sender` broadcasts one packet at `time`; head `i` receives its
    /// copy at `time + heads[i].delay`.
    Transmit { sender: NodeId, time: Tick, heads: Vec<Head> },
    /// Message `message` becomes available at each origin.
    Generate { message: MessageId, origins: Vec<Origin> },
}

/// A complete network run description.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Schedule {
    /// Number of nodes; ids are 0..n.
    pub n: usize,
    /// Number of source messages; ids are 0..k.
    pub k: usize,
    /// Payload symbols per packet.
    pub l: usize,
    pub events: Vec<Event>,
}

// ---------------------------------------------------------------------------
// JSON parsing.
//
// The wire format is internally tagged ({"type": "transmit", ...}), and the
// parser must reject unknown fields. serde's derived deserializer ignores
// `deny_unknown_fields` inside internally tagged enums, so deserialization
// goes through an explicit raw struct and checks field usage per event kind.
// ---------------------------------------------------------------------------

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSchedule {
    n: usize,
    k: usize,
    l: usize,
    events: Vec<RawEvent>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEvent {
    #[serde(rename = "type")]
    kind: String,
    #[serde(default)]
    sender: Option<NodeId>,
    #[serde(default)]
    time: Option<Tick>,
    #[serde(default)]
    heads: Option<Vec<Head>>,
    #[serde(default)]
    message: Option<MessageId>,
    #[serde(default)]
    origins: Option<Vec<Origin>>,
}

/// Errors from reading a schedule out of JSON.
#[derive(Debug, Error)]
pub enum ScheduleJsonError {
    #[error("malformed schedule JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid schedule JSON: event {event}: {reason}")]
    Shape { event: usize, reason: String },
}

impl Schedule {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schedules always serialize")
    }

    pub fn from_json(text: &str) -> Result<Schedule, ScheduleJsonError> {
        let raw: RawSchedule = serde_json::from_str(text)?;
        let mut events = Vec::with_capacity(raw.events.len());
        for (i, e) in raw.events.into_iter().enumerate() {
            let shape =
                |reason: &str| ScheduleJsonError::Shape { event: i, reason: reason.to_string() };
            let event = match e.kind.as_str() {
                "transmit" => {
                    if e.message.is_some() || e.origins.is_some() {
                        return Err(shape("transmit event carries generate fields"));
                    }
                    Event::Transmit {
                        sender: e.sender.ok_or_else(|| shape("missing field `sender`"))?,
                        time: e.time.ok_or_else(|| shape("missing field `time`"))?,
                        heads: e.heads.ok_or_else(|| shape("missing field `heads`"))?,
                    }
                }
                "generate" => {
                    if e.sender.is_some() || e.time.is_some() || e.heads.is_some() {
                        return Err(shape("generate event carries transmit fields"));
                    }
                    Event::Generate {
                        message: e.message.ok_or_else(|| shape("missing field `message`"))?,
                        origins: e.origins.ok_or_else(|| shape("missing field `origins`"))?,
                    }
                }
                other => return Err(shape(&format!("unknown event type `{other}`"))),
            };
            events.push(event);
        }
        Ok(Schedule { n: raw.n, k: raw.k, l: raw.l, events })
    }
}

// ---------------------------------------------------------------------------
// Validation.
// ---------------------------------------------------------------------------

/// A structural problem in a schedule. Validation returns all of them;
/// an empty list means the schedule is well formed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    NodeOutOfRange { event: usize, node: NodeId },
    MessageOutOfRange { event: usize, message: MessageId },
    EmptyHeads { event: usize },
    EmptyOrigins { event: usize },
    SenderAmongRecipients { event: usize },
    DuplicateRecipient { event: usize, node: NodeId },
    DelayTooSmall { event: usize, to: NodeId },
    SendReceiveSameTick { node: NodeId, time: Tick },
    MessageNeverGenerated { message: MessageId },
    DuplicateGeneration { message: MessageId, node: NodeId, time: Tick },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NodeOutOfRange { event, node } => {
                write!(f, "event {event}: node {node} out of range")
            }
            Violation::MessageOutOfRange { event, message } => {
                write!(f, "event {event}: message {message} out of range")
            }
            Violation::EmptyHeads { event } => write!(f, "event {event}: no recipients"),
            Violation::EmptyOrigins { event } => write!(f, "event {event}: no origins"),
            Violation::SenderAmongRecipients { event } => {
                write!(f, "event {event}: sender listed as recipient")
            }
            Violation::DuplicateRecipient { event, node } => {
                write!(f, "event {event}: recipient {node} listed twice")
            }
            Violation::DelayTooSmall { event, to } => {
                write!(f, "event {event}: delay to node {to} below 1")
            }
            Violation::SendReceiveSameTick { node, time } => {
                write!(f, "node {node} both sends and receives at tick {time}")
            }
            Violation::MessageNeverGenerated { message } => {
                write!(f, "message {message} is never generated")
            }
            Violation::DuplicateGeneration { message, node, time } => {
                write!(f, "message {message} generated twice at node {node}, tick {time}")
            }
        }
    }
}

/// Check every structural rule; returns all violations found.
///
/// Generation counts as a receive: a node may not generate and send in the
/// same tick, mirroring the send/receive exclusivity of the network model.
pub fn validate(s: &Schedule) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut send_ticks: HashMap<NodeId, BTreeSet<Tick>> = HashMap::new();
    let mut receive_ticks: HashMap<NodeId, BTreeSet<Tick>> = HashMap::new();
    let mut generated: BTreeSet<MessageId> = BTreeSet::new();
    let mut origin_seen: BTreeSet<(MessageId, NodeId, Tick)> = BTreeSet::new();

    for (i, event) in s.events.iter().enumerate() {
        match event {
            Event::Transmit { sender, time, heads } => {
                if *sender >= s.n {
                    out.push(Violation::NodeOutOfRange { event: i, node: *sender });
                }
                if heads.is_empty() {
                    out.push(Violation::EmptyHeads { event: i });
                }
                let mut seen = BTreeSet::new();
                for h in heads {
                    if h.to >= s.n {
                        out.push(Violation::NodeOutOfRange { event: i, node: h.to });
                    }
                    if h.to == *sender {
                        out.push(Violation::SenderAmongRecipients { event: i });
                    }
                    if !seen.insert(h.to) {
                        out.push(Violation::DuplicateRecipient { event: i, node: h.to });
                    }
                    if h.delay < 1 {
                        out.push(Violation::DelayTooSmall { event: i, to: h.to });
                    } else {
                        receive_ticks.entry(h.to).or_default().insert(time.saturating_add(h.delay));
                    }
                }
                send_ticks.entry(*sender).or_default().insert(*time);
            }
            Event::Generate { message, origins } => {
                if *message >= s.k {
                    out.push(Violation::MessageOutOfRange { event: i, message: *message });
                }
                if origins.is_empty() {
                    out.push(Violation::EmptyOrigins { event: i });
                }
                generated.insert(*message);
                for o in origins {
                    if o.node >= s.n {
                        out.push(Violation::NodeOutOfRange { event: i, node: o.node });
                    }
                    if !origin_seen.insert((*message, o.node, o.time)) {
                        out.push(Violation::DuplicateGeneration {
                            message: *message,
                            node: o.node,
                            time: o.time,
                        });
                    }
                    receive_ticks.entry(o.node).or_default().insert(o.time);
                }
            }
        }
    }

    for (node, sends) in &send_ticks {
        if let Some(receives) = receive_ticks.get(node) {
            for &t in sends.intersection(receives) {
                out.push(Violation::SendReceiveSameTick { node: *node, time: t });
            }
        }
    }
    for message in 0..s.k {
        if !generated.contains(&message) {
            out.push(Violation::MessageNeverGenerated { message });
        }
    }
    out
}

/// A schedule that failed validation.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct InvalidSchedule(pub Vec<Violation>);

impl fmt::Display for InvalidSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "schedule failed validation: ")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Time-expanded hypergraph.
// ---------------------------------------------------------------------------

/// Tail of a hyperedge: the supersource or a vertex copy (by copy id).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TehTail {
    Source,
    Copy(usize),
}

/// Provenance of a hyperedge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TehEdgeKind {
    /// Supersource edge injecting this message at its origin copies.
    Message(MessageId),
    /// Transmission from the schedule event with this index.
    Transmit { event: usize },
}

/// One hyperedge: a tail and a nonempty set of head copies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TehEdge {
    pub tail: TehTail,
    /// Head copy ids, ascending.
    pub heads: Vec<usize>,
    pub kind: TehEdgeKind,
}

/// The unrolled schedule: vertex copies in (time, node) order plus the
/// supersource, and one hyperedge per message and per transmit event.
///
/// Supersource edges come first, in message-id order, followed by
/// transmission edges in event order; copy ids ascend with (time, node),
/// which is also a topological order of the graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimeExpandedHypergraph {
    pub n: usize,
    pub k: usize,
    pub l: usize,
    copies: Vec<(NodeId, Tick)>,
    copy_index: HashMap<(NodeId, Tick), usize>,
    edges: Vec<TehEdge>,
}

impl TimeExpandedHypergraph {
    pub fn copies(&self) -> &[(NodeId, Tick)] {
        &self.copies
    }

    pub fn copy(&self, id: usize) -> (NodeId, Tick) {
        self.copies[id]
    }

    pub fn copy_id(&self, node: NodeId, time: Tick) -> Option<usize> {
        self.copy_index.get(&(node, time)).copied()
    }

    pub fn edges(&self) -> &[TehEdge] {
        &self.edges
    }

    /// Copy ids of one node, ascending in time.
    pub fn node_copies(&self, node: NodeId) -> Vec<usize> {
        let mut ids: Vec<usize> =
            (0..self.copies.len()).filter(|&i| self.copies[i].0 == node).collect();
        ids.sort_by_key(|&i| self.copies[i].1);
        ids
    }

    /// The latest copy of each node, by node id.
    pub fn final_copies(&self) -> Vec<(NodeId, usize)> {
        let mut last: BTreeMap<NodeId, usize> = BTreeMap::new();
        for (id, &(node, time)) in self.copies.iter().enumerate() {
            match last.get(&node) {
                Some(&prev) if self.copies[prev].1 >= time => {}
                _ => {
                    last.insert(node, id);
                }
            }
        }
        last.into_iter().collect()
    }
}

/// Unroll a schedule into its time-expanded hypergraph.
pub fn build_hypergraph(s: &Schedule) -> Result<TimeExpandedHypergraph, InvalidSchedule> {
    let violations = validate(s);
    if !violations.is_empty() {
        return Err(InvalidSchedule(violations));
    }

    let mut copy_set: BTreeSet<(Tick, NodeId)> = BTreeSet::new();
    for event in &s.events {
        match event {
            Event::Transmit { sender, time, heads } => {
                copy_set.insert((*time, *sender));
                for h in heads {
                    copy_set.insert((time.saturating_add(h.delay), h.to));
                }
            }
            Event::Generate { origins, .. } => {
                for o in origins {
                    copy_set.insert((o.time, o.node));
                }
            }
        }
    }

    let copies: Vec<(NodeId, Tick)> = copy_set.iter().map(|&(t, v)| (v, t)).collect();
    let copy_index: HashMap<(NodeId, Tick), usize> =
        copies.iter().enumerate().map(|(i, &(v, t))| ((v, t), i)).collect();

    let mut edges = Vec::new();
    // One supersource edge per message, aggregating every origin it has.
    for message in 0..s.k {
        let mut heads = Vec::new();
        for event in &s.events {
            if let Event::Generate { message: m, origins } = event {
                if *m == message {
                    heads.extend(origins.iter().map(|o| copy_index[&(o.node, o.time)]));
                }
            }
        }
        heads.sort_unstable();
        heads.dedup();
        debug_assert!(!heads.is_empty(), "validated schedules generate every message");
        edges.push(TehEdge { tail: TehTail::Source, heads, kind: TehEdgeKind::Message(message) });
    }
    for (i, event) in s.events.iter().enumerate() {
        if let Event::Transmit { sender, time, heads } = event {
            let mut head_ids: Vec<usize> =
                heads.iter().map(|h| copy_index[&(h.to, time.saturating_add(h.delay))]).collect();
            head_ids.sort_unstable();
            edges.push(TehEdge {
                tail: TehTail::Copy(copy_index[&(*sender, *time)]),
                heads: head_ids,
                kind: TehEdgeKind::Transmit { event: i },
            });
        }
    }

    Ok(TimeExpandedHypergraph { n: s.n, k: s.k, l: s.l, copies, copy_index, edges })
}

// ---------------------------------------------------------------------------
// Generators.
// ---------------------------------------------------------------------------

/// Chain topology 0 -> 1 -> ... -> n-1 with every hop repeated.
///
/// All k messages appear at node 0 at tick 0. Hop h sends `repetitions`
/// packets at consecutive ticks, each with delay 1, and hops are staggered
/// so a node finishes receiving before it starts sending.
pub fn gen_line(n: usize, k: usize, repetitions: usize, l: usize) -> Schedule {
    assert!(n >= 2, "a line needs at least two nodes");
    assert!(k >= 1 && repetitions >= 1);
    let mut events = Vec::new();
    for message in 0..k {
        events.push(Event::Generate { message, origins: vec![Origin { node: 0, time: 0 }] });
    }
    let stride = repetitions as Tick + 1;
    for hop in 0..n - 1 {
        for j in 0..repetitions {
            events.push(Event::Transmit {
                sender: hop,
                time: hop as Tick * stride + 1 + j as Tick,
                heads: vec![Head { to: hop + 1, delay: 1 }],
            });
        }
    }
    Schedule { n, k, l, events }
}

/// Synchronous push gossip.
///
/// Messages appear at uniformly chosen nodes at tick 0. In round r every
/// node sends one packet at tick 2r+1 to `fanout` distinct other nodes with
/// delay 1, so sends land on odd ticks and arrivals on even ticks and no
/// node ever sends and receives in the same tick.
pub fn gen_gossip(
    n: usize,
    k: usize,
    rounds: usize,
    fanout: usize,
    l: usize,
    seed: u64,
) -> Schedule {
    assert!(n >= 2, "gossip needs at least two nodes");
    assert!((1..n).contains(&fanout), "fanout must be in 1..n");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut events = Vec::new();
    for message in 0..k {
        let node = rng.gen_range(0..n);
        events.push(Event::Generate { message, origins: vec![Origin { node, time: 0 }] });
    }
    for round in 0..rounds {
        let time = 2 * round as Tick + 1;
        for sender in 0..n {
            let mut others: Vec<NodeId> = (0..n).filter(|&v| v != sender).collect();
            // Partial Fisher-Yates: the first `fanout` entries become the targets.
            for i in 0..fanout {
                let j = rng.gen_range(i..others.len());
                others.swap(i, j);
            }
            let heads = others[..fanout].iter().map(|&to| Head { to, delay: 1 }).collect();
            events.push(Event::Transmit { sender, time, heads });
        }
    }
    Schedule { n, k, l, events }
}

/// An arbitrary valid event sequence: random senders, times, recipient sets
/// and delays, under two restrictions beyond validity. Senders must already
/// hold something (a generation or an earlier arrival) when they send, and
/// candidate events that would put a send and a receive on the same tick at
/// any node are re-drawn.
pub fn gen_random_dynamic(
    n: usize,
    k: usize,
    events: usize,
    max_delay: u64,
    l: usize,
    seed: u64,
) -> Schedule {
    assert!(n >= 2, "dynamic schedules need at least two nodes");
    assert!(k >= 1 && max_delay >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let mut receive_ticks: Vec<BTreeSet<Tick>> = vec![BTreeSet::new(); n];
    let mut send_ticks: Vec<BTreeSet<Tick>> = vec![BTreeSet::new(); n];

    for message in 0..k {
        let node = rng.gen_range(0..n);
        let mut origins = vec![Origin { node, time: 0 }];
        receive_ticks[node].insert(0);
        // Occasionally give a message a second, later origin elsewhere.
        if n > 1 && rng.gen_ratio(1, 4) {
            let other = (node + 1 + rng.gen_range(0..n - 1)) % n;
            let time = rng.gen_range(0..=2);
            if send_ticks[other].is_empty() {
                origins.push(Origin { node: other, time });
                receive_ticks[other].insert(time);
            }
        }
        out.push(Event::Generate { message, origins });
    }

    let horizon: Tick = (4 * events.max(2)) as Tick;
    for _ in 0..events {
        'attempt: for _ in 0..100 {
            let sender = rng.gen_range(0..n);
            let time = rng.gen_range(1..=horizon);
            // The sender must know something by this tick and must not be
            // receiving in this tick.
            if !receive_ticks[sender].iter().any(|&t| t < time) {
                continue;
            }
            if receive_ticks[sender].contains(&time) {
                continue;
            }
            let fanout = rng.gen_range(1..=3.min(n - 1));
            let mut targets: Vec<NodeId> = (0..n).filter(|&v| v != sender).collect();
            for i in 0..fanout {
                let j = rng.gen_range(i..targets.len());
                targets.swap(i, j);
            }
            let mut heads = Vec::with_capacity(fanout);
            for &to in &targets[..fanout] {
                let delay = rng.gen_range(1..=max_delay);
                let arrival = time + delay;
                if send_ticks[to].contains(&arrival) {
                    continue 'attempt;
                }
                heads.push(Head { to, delay });
            }
            send_ticks[sender].insert(time);
            for h in &heads {
                receive_ticks[h.to].insert(time + h.delay);
            }
            out.push(Event::Transmit { sender, time, heads });
            break;
        }
    }
    Schedule { n, k, l, events: out }
}
