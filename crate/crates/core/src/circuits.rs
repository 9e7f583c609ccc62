//! Graph transforms and circuit evaluation.
//!
//! Every transform here turns a time-expanded hypergraph into a
//! [`Circuit`]: a capacitated, acyclic hypergraph with a fixed input
//! ordering per vertex. Circuits serve two purposes at once. As flow
//! networks they answer min-cut queries (see the `flow` module); as linear
//! coding circuits they can be evaluated edge by edge, every out-edge
//! carrying a random linear combination of its tail's in-edge values with
//! coefficients drawn from the keyed oracle.
//!
//! Four transforms are provided:
//!
//! * [`info_flow_graph`]: adds memory edges of a chosen capacity between
//!   consecutive copies of each node.
//! * [`pnc_transform`]: extends every hyperedge head to all later copies of
//!   its recipient, modelling nodes that keep everything they receive. The
//!   hyperedge count is unchanged.
//! * [`recombinator_transform`]: adds mu parallel unit-capacity memory
//!   edges between consecutive copies; each is a distinct circuit input
//!   carrying one register.
//! * [`accumulator_transform`]: applies the head extension first, then
//!   replaces every node copy by mu register cells with unit chain edges,
//!   arrivals fanning into all registers and transmissions reading all
//!   registers through a dedicated port of out-capacity 1.
//!
//! Min-cut queries are answered behind each graph's retention bottleneck:
//! a plain graph attaches the probe behind a single arc whose capacity is
//! the node's memory (k standing in for unbounded, since the supersource
//! only ever emits k units), and an accumulator graph attaches it to the
//! mu register cells by unit arcs. This keeps the query meaning "how much
//! information can this node retain by tick t" uniform across transforms.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gf::{Field, FieldElem, GfError, Matrix, PacketVector};
use crate::oracle::{CoeffOracle, InKey, TailKey};
use crate::schedule::{MessageId, NodeId, TehEdgeKind, TehTail, Tick, TimeExpandedHypergraph};

/// Per-node memory available to the modelled protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Memory {
    Bounded(u64),
    Unbounded,
}

impl Memory {
    /// Capacity used in graph constructions. The supersource emits at most
    /// k units in total, so k is a faithful stand-in for "unbounded".
    pub fn effective(self, k: usize) -> u64 {
        match self {
            Memory::Bounded(mu) => {
                assert!(mu >= 1, "memory bound must be at least 1");
                mu
            }
            Memory::Unbounded => k as u64,
        }
    }
}

/// A vertex of a transformed graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Vertex {
    Source,
    Copy {
        node: NodeId,
        time: Tick,
    },
    /// Register cell `slot` of a node copy in an accumulator layout.
    Register {
        node: NodeId,
        time: Tick,
        slot: usize,
    },
    /// Read-out port for one transmission in an accumulator layout.
    TxPort {
        node: NodeId,
        time: Tick,
        port: usize,
    },
}

impl Vertex {
    fn tail_key(self) -> TailKey {
        match self {
            Vertex::Source => TailKey::Source,
            Vertex::Copy { node, time } => TailKey::Copy { node: node as u64, time },
            Vertex::Register { node, time, slot } => {
                TailKey::Register { node: node as u64, time, slot: slot as u64 }
            }
            Vertex::TxPort { node, time, port } => {
                TailKey::TxPort { node: node as u64, time, port: port as u64 }
            }
        }
    }

    /// Stable text form used by the edge-list export.
    pub fn label(self) -> String {
        match self {
            Vertex::Source => "s".to_string(),
            Vertex::Copy { node, time } => format!("v{node}@{time}"),
            Vertex::Register { node, time, slot } => format!("r{slot}:v{node}@{time}"),
            Vertex::TxPort { node, time, port } => format!("t{port}:v{node}@{time}"),
        }
    }
}

/// Why an edge exists; also determines its oracle input key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeKind {
    /// Supersource edge injecting one message.
    Message(MessageId),
    /// Transmission hyperedge from the schedule event with this index.
    Transmit { event: usize },
    /// Memory edge between consecutive copies (slot 0 for single edges).
    MemorySlot { slot: usize },
    /// Accumulator register chain edge.
    RegisterChain { slot: usize },
    /// Accumulator register read into a transmission port.
    RegisterRead { port: usize, slot: usize },
}

impl EdgeKind {
    fn in_key(self) -> InKey {
        match self {
            EdgeKind::Message(m) => InKey::Message(m as u64),
            EdgeKind::Transmit { event } => InKey::Event(event as u64),
            EdgeKind::MemorySlot { slot } => InKey::MemorySlot(slot as u64),
            EdgeKind::RegisterChain { slot } => InKey::MemorySlot(slot as u64),
            EdgeKind::RegisterRead { slot, .. } => InKey::RegisterSlot(slot as u64),
        }
    }
}

/// A capacitated hyperedge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub tail: usize,
    /// Head vertex ids, ascending, nonempty.
    pub heads: Vec<usize>,
    pub capacity: u64,
    pub kind: EdgeKind,
}

/// How a min-cut query point attaches to this graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueryMode {
    /// Probe sits behind one arc of this capacity from the node copy.
    VertexCap(u64),
    /// Probe collects the node copy's `mu` registers by unit arcs.
    Registers(u64),
}

/// Sink attachment for one query point: arcs from graph vertices into a
/// fresh probe vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryAttach {
    pub arcs: Vec<(usize, u64)>,
}

/// Errors from circuit construction and evaluation.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CircuitError {
    #[error("circuit contains a cycle")]
    Cyclic,
    #[error("expected {expected} source messages, got {got}")]
    MessageCount { expected: usize, got: usize },
    #[error(transparent)]
    Gf(#[from] GfError),
}

/// A transformed graph with fixed per-vertex input order.
#[derive(Debug, Clone)]
pub struct Circuit {
    k: usize,
    l: usize,
    vertices: Vec<Vertex>,
    vindex: HashMap<Vertex, usize>,
    edges: Vec<Edge>,
    /// In-edges per vertex, canonical order (see module docs).
    in_edges: Vec<Vec<usize>>,
    /// Out-edges per vertex; a protocol's output index is the position here.
    out_edges: Vec<Vec<usize>>,
    query: QueryMode,
    /// The schedule's vertex copies, i.e. the legal query points.
    copies: Vec<(NodeId, Tick)>,
}

impl Circuit {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn vertex_id(&self, v: Vertex) -> Option<usize> {
        self.vindex.get(&v).copied()
    }

    pub fn in_edges(&self, vertex: usize) -> &[usize] {
        &self.in_edges[vertex]
    }

    pub fn out_edges(&self, vertex: usize) -> &[usize] {
        &self.out_edges[vertex]
    }

    pub fn query_mode(&self) -> QueryMode {
        self.query
    }

    pub fn copies(&self) -> &[(NodeId, Tick)] {
        &self.copies
    }

    /// Edge id of the hyperedge created by a transmit event.
    pub fn edge_for_event(&self, event: usize) -> Option<usize> {
        self.edges.iter().position(|e| e.kind == EdgeKind::Transmit { event })
    }

    /// Sink arcs realizing the query point (node, time).
    pub fn query_attach(&self, node: NodeId, time: Tick) -> Option<QueryAttach> {
        match self.query {
            QueryMode::VertexCap(cap) => {
                let v = self.vertex_id(Vertex::Copy { node, time })?;
                Some(QueryAttach { arcs: vec![(v, cap)] })
            }
            QueryMode::Registers(mu) => {
                let mut arcs = Vec::with_capacity(mu as usize);
                for slot in 0..mu as usize {
                    let v = self.vertex_id(Vertex::Register { node, time, slot })?;
                    arcs.push((v, 1));
                }
                Some(QueryAttach { arcs })
            }
        }
    }

    /// Plain-text edge list: one line per hyperedge,
    /// `tail <TAB> capacity <TAB> head,head,...`.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for e in &self.edges {
            let heads: Vec<String> = e.heads.iter().map(|&h| self.vertices[h].label()).collect();
            out.push_str(&format!(
                "{}\t{}\t{}\n",
                self.vertices[e.tail].label(),
                e.capacity,
                heads.join(",")
            ));
        }
        out
    }

    /// Vertices in an order where every edge goes forward.
    fn topo_order(&self) -> Result<Vec<usize>, CircuitError> {
        let mut indegree = vec![0usize; self.vertices.len()];
        for e in &self.edges {
            for &h in &e.heads {
                indegree[h] += 1;
            }
        }
        let mut ready: Vec<usize> =
            (0..self.vertices.len()).filter(|&v| indegree[v] == 0).collect();
        let mut order = Vec::with_capacity(self.vertices.len());
        while let Some(v) = ready.pop() {
            order.push(v);
            for &eid in &self.out_edges[v] {
                for &h in &self.edges[eid].heads {
                    indegree[h] -= 1;
                    if indegree[h] == 0 {
                        ready.push(h);
                    }
                }
            }
        }
        if order.len() != self.vertices.len() {
            return Err(CircuitError::Cyclic);
        }
        Ok(order)
    }

    /// Evaluate the circuit: assign every hyperedge its packet value.
    ///
    /// Supersource out-edges carry the unit-header source packets; every
    /// other out-edge carries a linear combination of its tail's in-edge
    /// values, one oracle coefficient per input. A vertex with no inputs
    /// emits zero packets.
    pub fn evaluate(
        &self,
        field: &Field,
        messages: &[Vec<FieldElem>],
        oracle: &CoeffOracle,
    ) -> Result<Vec<PacketVector>, CircuitError> {
        if messages.len() != self.k {
            return Err(CircuitError::MessageCount { expected: self.k, got: messages.len() });
        }
        for m in messages {
            if m.len() != self.l {
                return Err(GfError::DimensionMismatch { expected: self.l, got: m.len() }.into());
            }
        }
        let order = self.topo_order()?;
        let mut values: Vec<PacketVector> =
            vec![PacketVector::zero(self.k, self.l); self.edges.len()];
        for &v in &order {
            for (out_index, &eid) in self.out_edges[v].iter().enumerate() {
                let value = if self.vertices[v] == Vertex::Source {
                    let EdgeKind::Message(m) = self.edges[eid].kind else {
                        unreachable!("supersource only emits message edges")
                    };
                    PacketVector::source(m, self.k, messages[m].clone())
                } else {
                    let tail_key = self.vertices[v].tail_key();
                    let terms: Vec<(FieldElem, &PacketVector)> = self.in_edges[v]
                        .iter()
                        .map(|&ie| {
                            let c = oracle.coeff(
                                field,
                                tail_key,
                                out_index as u64,
                                self.edges[ie].kind.in_key(),
                            );
                            (c, &values[ie])
                        })
                        .collect();
                    crate::gf::linear_combination(field, &terms, self.k, self.l)?
                };
                values[eid] = value;
            }
        }
        Ok(values)
    }

    /// The k x |edge_ids| matrix mapping source messages to edge values.
    ///
    /// Column j is the header of the packet on `edge_ids[j]`; headers track
    /// exactly the linear map applied to the messages, independent of
    /// payload contents.
    pub fn transfer_matrix(
        &self,
        field: &Field,
        oracle: &CoeffOracle,
        edge_ids: &[usize],
    ) -> Result<Matrix, CircuitError> {
        let zero_messages = vec![vec![FieldElem::ZERO; self.l]; self.k];
        let values = self.evaluate(field, &zero_messages, oracle)?;
        let mut rows = vec![Vec::with_capacity(edge_ids.len()); self.k];
        for &eid in edge_ids {
            for (i, row) in rows.iter_mut().enumerate() {
                row.push(values[eid].header[i]);
            }
        }
        Ok(Matrix::from_rows(rows)?)
    }
}

// ---------------------------------------------------------------------------
// Construction helpers.
// ---------------------------------------------------------------------------

struct Builder {
    k: usize,
    l: usize,
    vertices: Vec<Vertex>,
    vindex: HashMap<Vertex, usize>,
    edges: Vec<Edge>,
}

impl Builder {
    fn new(teh: &TimeExpandedHypergraph) -> Builder {
        Builder {
            k: teh.k,
            l: teh.l,
            vertices: Vec::new(),
            vindex: HashMap::new(),
            edges: Vec::new(),
        }
    }

    fn vertex(&mut self, v: Vertex) -> usize {
        if let Some(&id) = self.vindex.get(&v) {
            return id;
        }
        let id = self.vertices.len();
        self.vertices.push(v);
        self.vindex.insert(v, id);
        id
    }

    fn edge(&mut self, tail: usize, mut heads: Vec<usize>, capacity: u64, kind: EdgeKind) {
        heads.sort_unstable();
        heads.dedup();
        debug_assert!(!heads.is_empty());
        self.edges.push(Edge { tail, heads, capacity, kind });
    }

    fn finish(self, teh: &TimeExpandedHypergraph, query: QueryMode) -> Circuit {
        let mut in_edges = vec![Vec::new(); self.vertices.len()];
        let mut out_edges = vec![Vec::new(); self.vertices.len()];
        for (eid, e) in self.edges.iter().enumerate() {
            out_edges[e.tail].push(eid);
            for &h in &e.heads {
                in_edges[h].push(eid);
            }
        }

        // Original arrival tick of each transmission at each recipient, for
        // the canonical input ordering. Head extension may add later copies,
        // but inputs sort by when the packet actually arrived.
        let mut original_arrival: HashMap<(usize, NodeId), Tick> = HashMap::new();
        let mut sender_of_event: HashMap<usize, NodeId> = HashMap::new();
        for e in teh.edges() {
            if let TehEdgeKind::Transmit { event } = e.kind {
                if let TehTail::Copy(c) = e.tail {
                    sender_of_event.insert(event, teh.copy(c).0);
                }
                for &h in &e.heads {
                    let (node, tick) = teh.copy(h);
                    original_arrival
                        .entry((event, node))
                        .and_modify(|t| *t = (*t).min(tick))
                        .or_insert(tick);
                }
            }
        }
        let min_origin: HashMap<(MessageId, NodeId), Tick> = {
            let mut m = HashMap::new();
            for e in teh.edges() {
                if let TehEdgeKind::Message(mid) = e.kind {
                    for &h in &e.heads {
                        let (node, tick) = teh.copy(h);
                        m.entry((mid, node))
                            .and_modify(|t: &mut Tick| *t = (*t).min(tick))
                            .or_insert(tick);
                    }
                }
            }
            m
        };

        let edges = &self.edges;
        let vertices = &self.vertices;
        let sort_key = |eid: usize, vertex: usize| -> (u8, u64, u64, u64) {
            let at_node = match vertices[vertex] {
                Vertex::Copy { node, .. }
                | Vertex::Register { node, .. }
                | Vertex::TxPort { node, .. } => node,
                Vertex::Source => usize::MAX,
            };
            match edges[eid].kind {
                EdgeKind::RegisterChain { slot } => (0, slot as u64, 0, 0),
                EdgeKind::Message(m) => {
                    let t = min_origin.get(&(m, at_node)).copied().unwrap_or(0);
                    (1, m as u64, t, 0)
                }
                EdgeKind::MemorySlot { slot } => (2, slot as u64, 0, 0),
                EdgeKind::Transmit { event } => {
                    let t = original_arrival.get(&(event, at_node)).copied().unwrap_or(0);
                    let sender = sender_of_event.get(&event).copied().unwrap_or(0);
                    (3, t, sender as u64, event as u64)
                }
                EdgeKind::RegisterRead { slot, .. } => (4, slot as u64, 0, 0),
            }
        };
        for (v, ins) in in_edges.iter_mut().enumerate() {
            ins.sort_by_key(|&eid| sort_key(eid, v));
        }
        // Out-edge order: memory slots, register chains and reads by slot or
        // port, then transmissions by event index, then message edges by id.
        for outs in out_edges.iter_mut() {
            outs.sort_by_key(|&eid| match edges[eid].kind {
                EdgeKind::MemorySlot { slot } => (0u8, slot as u64),
                EdgeKind::RegisterChain { slot } => (0, slot as u64),
                EdgeKind::RegisterRead { port, .. } => (1, port as u64),
                EdgeKind::Transmit { event } => (2, event as u64),
                EdgeKind::Message(m) => (3, m as u64),
            });
        }

        Circuit {
            k: self.k,
            l: self.l,
            vertices: self.vertices,
            vindex: self.vindex,
            edges: self.edges,
            in_edges,
            out_edges,
            query,
            copies: teh.copies().to_vec(),
        }
    }
}

fn tail_vertex(teh: &TimeExpandedHypergraph, tail: TehTail) -> Vertex {
    match tail {
        TehTail::Source => Vertex::Source,
        TehTail::Copy(c) => {
            let (node, time) = teh.copy(c);
            Vertex::Copy { node, time }
        }
    }
}

/// Head copies of `edge` extended to every later copy of each recipient.
fn extended_heads(teh: &TimeExpandedHypergraph, heads: &[usize]) -> Vec<usize> {
    let mut out = Vec::new();
    for &h in heads {
        let (node, tick) = teh.copy(h);
        for c in teh.node_copies(node) {
            if teh.copy(c).1 >= tick {
                out.push(c);
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

// ---------------------------------------------------------------------------
// The four transforms.
// ---------------------------------------------------------------------------

/// The hypergraph plus memory edges of the given capacity between
/// consecutive copies of each node.
pub fn info_flow_graph(teh: &TimeExpandedHypergraph, memory: Memory) -> Circuit {
    let cap = memory.effective(teh.k);
    let mut b = Builder::new(teh);
    b.vertex(Vertex::Source);
    for &(node, time) in teh.copies() {
        b.vertex(Vertex::Copy { node, time });
    }
    for e in teh.edges() {
        let tail = b.vertex(tail_vertex(teh, e.tail));
        let heads = e
            .heads
            .iter()
            .map(|&h| {
                let (node, time) = teh.copy(h);
                b.vertex(Vertex::Copy { node, time })
            })
            .collect();
        b.edge(tail, heads, 1, kind_of(e.kind));
    }
    add_memory_edges(&mut b, teh, &[cap]);
    b.finish(teh, QueryMode::VertexCap(cap))
}

/// Head extension only: every hyperedge reaches all later copies of each
/// recipient, and nodes need no memory edges because stored packets
/// re-arrive wherever they are used. Edge count is unchanged.
pub fn pnc_transform(teh: &TimeExpandedHypergraph) -> Circuit {
    let mut b = Builder::new(teh);
    b.vertex(Vertex::Source);
    for &(node, time) in teh.copies() {
        b.vertex(Vertex::Copy { node, time });
    }
    for e in teh.edges() {
        let tail = b.vertex(tail_vertex(teh, e.tail));
        let heads = extended_heads(teh, &e.heads)
            .into_iter()
            .map(|c| {
                let (node, time) = teh.copy(c);
                b.vertex(Vertex::Copy { node, time })
            })
            .collect();
        b.edge(tail, heads, 1, kind_of(e.kind));
    }
    b.finish(teh, QueryMode::VertexCap(teh.k as u64))
}

/// Original hyperedges plus mu parallel unit memory edges between
/// consecutive copies. Each parallel edge is a distinct circuit input
/// (one register); for flow purposes the bundle carries mu units, the same
/// as one capacity-mu edge.
pub fn recombinator_transform(teh: &TimeExpandedHypergraph, memory: Memory) -> Circuit {
    let mu = memory.effective(teh.k);
    let mut b = Builder::new(teh);
    b.vertex(Vertex::Source);
    for &(node, time) in teh.copies() {
        b.vertex(Vertex::Copy { node, time });
    }
    for e in teh.edges() {
        let tail = b.vertex(tail_vertex(teh, e.tail));
        let heads = e
            .heads
            .iter()
            .map(|&h| {
                let (node, time) = teh.copy(h);
                b.vertex(Vertex::Copy { node, time })
            })
            .collect();
        b.edge(tail, heads, 1, kind_of(e.kind));
    }
    add_memory_edges(&mut b, teh, &vec![1; mu as usize]);
    b.finish(teh, QueryMode::VertexCap(mu))
}

/// Head extension followed by register templating: each node copy becomes
/// mu register cells chained through time by unit edges; every arriving
/// hyperedge fans into all mu cells, and each transmission reads all cells
/// through its own port whose out-hyperedge has capacity 1.
pub fn accumulator_transform(teh: &TimeExpandedHypergraph, memory: Memory) -> Circuit {
    let mu = memory.effective(teh.k) as usize;
    let mut b = Builder::new(teh);
    b.vertex(Vertex::Source);
    for &(node, time) in teh.copies() {
        for slot in 0..mu {
            b.vertex(Vertex::Register { node, time, slot });
        }
    }

    // Transmission ports, indexed per copy in event order.
    let mut ports: HashMap<usize, Vec<(usize, usize)>> = HashMap::new(); // copy -> (event, port vertex)
    for e in teh.edges() {
        if let (TehTail::Copy(c), TehEdgeKind::Transmit { event }) = (e.tail, e.kind) {
            ports.entry(c).or_default().push((event, 0));
        }
    }
    for (&c, list) in ports.iter_mut() {
        list.sort_unstable();
        let (node, time) = teh.copy(c);
        for (port, entry) in list.iter_mut().enumerate() {
            entry.1 = b.vertex(Vertex::TxPort { node, time, port });
        }
    }
    let port_of_event: HashMap<usize, usize> =
        ports.values().flat_map(|list| list.iter().copied()).collect();

    // Hyperedges: tails become ports, heads become register fans over the
    // extended head set.
    for e in teh.edges() {
        let tail = match (e.tail, e.kind) {
            (TehTail::Source, _) => b.vertex(Vertex::Source),
            (TehTail::Copy(_), TehEdgeKind::Transmit { event }) => port_of_event[&event],
            (TehTail::Copy(_), TehEdgeKind::Message(_)) => {
                unreachable!("message edges always leave the supersource")
            }
        };
        let mut heads = Vec::new();
        for c in extended_heads(teh, &e.heads) {
            let (node, time) = teh.copy(c);
            for slot in 0..mu {
                heads.push(b.vertex(Vertex::Register { node, time, slot }));
            }
        }
        b.edge(tail, heads, 1, kind_of(e.kind));
    }

    // Register chains and port reads.
    for node in 0..teh.n {
        let copies = teh.node_copies(node);
        for pair in copies.windows(2) {
            let (_, t0) = teh.copy(pair[0]);
            let (_, t1) = teh.copy(pair[1]);
            for slot in 0..mu {
                let from = b.vertex(Vertex::Register { node, time: t0, slot });
                let to = b.vertex(Vertex::Register { node, time: t1, slot });
                b.edge(from, vec![to], 1, EdgeKind::RegisterChain { slot });
            }
        }
        for &c in &copies {
            let (_, time) = teh.copy(c);
            if let Some(list) = ports.get(&c) {
                for (port, &(_, port_vertex)) in list.iter().enumerate() {
                    for slot in 0..mu {
                        let reg = b.vertex(Vertex::Register { node, time, slot });
                        b.edge(reg, vec![port_vertex], 1, EdgeKind::RegisterRead { port, slot });
                    }
                }
            }
        }
    }
    b.finish(teh, QueryMode::Registers(mu as u64))
}

fn kind_of(k: TehEdgeKind) -> EdgeKind {
    match k {
        TehEdgeKind::Message(m) => EdgeKind::Message(m),
        TehEdgeKind::Transmit { event } => EdgeKind::Transmit { event },
    }
}

fn add_memory_edges(b: &mut Builder, teh: &TimeExpandedHypergraph, slot_caps: &[u64]) {
    for node in 0..teh.n {
        let copies = teh.node_copies(node);
        for pair in copies.windows(2) {
            let (_, t0) = teh.copy(pair[0]);
            let (_, t1) = teh.copy(pair[1]);
            let from = b.vertex(Vertex::Copy { node, time: t0 });
            let to = b.vertex(Vertex::Copy { node, time: t1 });
            for (slot, &cap) in slot_caps.iter().enumerate() {
                b.edge(from, vec![to], cap, EdgeKind::MemorySlot { slot });
            }
        }
    }
}
