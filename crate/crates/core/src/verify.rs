//! Equivalence checks and randomized optimality campaigns.
//!
//! Three kinds of verification live here:
//!
//! * [`check_simulation_equivalence`]: the full-memory protocol and the
//!   evaluation of the head-extended circuit must produce identical
//!   packets on every transmission and identical knowledge at every node
//!   copy, because they draw coefficients at the same oracle keys. Any
//!   divergence is located precisely.
//! * [`check_cut_equivalences`]: min-cut queries must agree across graph
//!   layouts that model the same memory discipline: the memory-edge graph
//!   against its head-extended form with the bound not binding, and the
//!   memory-edge, parallel-slot and register-template graphs against each
//!   other for every requested bound.
//! * [`optimality_campaign`]: randomized end-to-end trials. Every trial
//!   draws a fresh schedule and payloads, runs a protocol, and compares
//!   retained rank against the capped min-cut at every node copy (the
//!   rank may never exceed the cut) and at every node's final copy (where
//!   a successful trial reaches the cut exactly). Results aggregate into
//!   a report with a Wilson 95% confidence interval on the success rate.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuits::{
    accumulator_transform, info_flow_graph, pnc_transform, recombinator_transform, Circuit,
    CircuitError, Memory, Vertex,
};
use crate::flow::{FlowError, LoweredCircuit};
use crate::gf::{Field, FieldElem, GfError, PacketVector};
use crate::oracle::{derive_seed, CoeffOracle};
use crate::protocols::{run, Protocol, ProtocolError};
use crate::schedule::{build_hypergraph, gen_random_dynamic, NodeId, Schedule, Tick};

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Invalid(#[from] crate::schedule::InvalidSchedule),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Gf(#[from] GfError),
    #[error("bad campaign config: {0}")]
    BadConfig(String),
}

// ---------------------------------------------------------------------------
// Protocol vs circuit.
// ---------------------------------------------------------------------------

/// First point where a protocol run and a circuit evaluation disagreed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Divergence {
    Emission {
        event: usize,
        expected: PacketVector,
        got: PacketVector,
    },
    Knowledge {
        node: NodeId,
        tick: Tick,
        /// Index into the copy's canonical input order.
        position: usize,
        expected: Option<PacketVector>,
        got: Option<PacketVector>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimEquivalence {
    pub events_checked: usize,
    pub copies_checked: usize,
    pub divergence: Option<Divergence>,
}

impl SimEquivalence {
    pub fn matched(&self) -> bool {
        self.divergence.is_none()
    }
}

/// Run the full-memory protocol and evaluate the head-extended circuit
/// from the same seed, then compare every emitted packet and every node
/// copy's knowledge.
pub fn check_simulation_equivalence(
    schedule: &Schedule,
    field: &Field,
    seed: u64,
    messages: &[Vec<FieldElem>],
) -> Result<SimEquivalence, VerifyError> {
    let teh = build_hypergraph(schedule)?;
    let circuit = pnc_transform(&teh);
    let oracle = CoeffOracle::new(seed);
    let values = circuit.evaluate(field, messages, &oracle)?;
    let trace = run(schedule, Protocol::Pnc, field, Memory::Unbounded, &oracle, messages)?;

    let mut events_checked = 0;
    for rec in &trace.emissions {
        let eid = circuit.edge_for_event(rec.event).expect("every transmit event has a hyperedge");
        events_checked += 1;
        if values[eid] != rec.packet {
            return Ok(SimEquivalence {
                events_checked,
                copies_checked: 0,
                divergence: Some(Divergence::Emission {
                    event: rec.event,
                    expected: values[eid].clone(),
                    got: rec.packet.clone(),
                }),
            });
        }
    }

    let mut copies_checked = 0;
    for &(node, tick) in circuit.copies() {
        copies_checked += 1;
        let v = circuit
            .vertex_id(Vertex::Copy { node, time: tick })
            .expect("query points are circuit vertices");
        let expected: Vec<&PacketVector> =
            circuit.in_edges(v).iter().map(|&e| &values[e]).collect();
        let snap = trace.snapshot(node, tick).expect("every copy has a snapshot");
        let longest = expected.len().max(snap.store.len());
        for position in 0..longest {
            let want = expected.get(position).copied();
            let got = snap.store.get(position);
            if want != got {
                return Ok(SimEquivalence {
                    events_checked,
                    copies_checked,
                    divergence: Some(Divergence::Knowledge {
                        node,
                        tick,
                        position,
                        expected: want.cloned(),
                        got: got.cloned(),
                    }),
                });
            }
        }
    }

    Ok(SimEquivalence { events_checked, copies_checked, divergence: None })
}

// ---------------------------------------------------------------------------
// Cut agreement across layouts.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CutMismatch {
    pub node: NodeId,
    pub tick: Tick,
    /// Which comparison group disagreed, e.g. `"mu=2"`.
    pub setting: String,
    /// (layout name, cut value) for every layout in the group.
    pub values: Vec<(String, u64)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CutEquivalence {
    /// Number of (query point, comparison group) pairs examined.
    pub checked: usize,
    pub mismatches: Vec<CutMismatch>,
}

impl CutEquivalence {
    pub fn matched(&self) -> bool {
        self.mismatches.is_empty()
    }
}

fn memory_label(m: Memory) -> String {
    match m {
        Memory::Bounded(mu) => format!("mu={mu}"),
        Memory::Unbounded => "mu=unbounded".to_string(),
    }
}

/// Check that min-cut queries agree across graph layouts: the full-memory
/// pair at every copy, and the bounded triple for every requested bound.
pub fn check_cut_equivalences(
    schedule: &Schedule,
    memories: &[Memory],
) -> Result<CutEquivalence, VerifyError> {
    let teh = build_hypergraph(schedule)?;
    let mut checked = 0;
    let mut mismatches = Vec::new();

    let mut compare =
        |setting: String, graphs: Vec<(String, Circuit)>| -> Result<(), VerifyError> {
            let lowered: Vec<(String, LoweredCircuit, Circuit)> = graphs
                .into_iter()
                .map(|(name, g)| {
                    let l = LoweredCircuit::new(&g);
                    (name, l, g)
                })
                .collect();
            for &(node, tick) in teh.copies() {
                checked += 1;
                let mut values = Vec::with_capacity(lowered.len());
                for (name, l, g) in &lowered {
                    values.push((name.clone(), l.min_cut_at(g, node, tick)?));
                }
                if values.windows(2).any(|w| w[0].1 != w[1].1) {
                    mismatches.push(CutMismatch { node, tick, setting: setting.clone(), values });
                }
            }
            Ok(())
        };

    compare(
        "full-memory".to_string(),
        vec![
            ("memory-edges".to_string(), info_flow_graph(&teh, Memory::Unbounded)),
            ("head-extended".to_string(), pnc_transform(&teh)),
        ],
    )?;
    for &memory in memories {
        compare(
            memory_label(memory),
            vec![
                ("memory-edges".to_string(), info_flow_graph(&teh, memory)),
                ("parallel-slots".to_string(), recombinator_transform(&teh, memory)),
                ("register-template".to_string(), accumulator_transform(&teh, memory)),
            ],
        )?;
    }

    Ok(CutEquivalence { checked, mismatches })
}

// ---------------------------------------------------------------------------
// Randomized optimality campaigns.
// ---------------------------------------------------------------------------

/// How each trial picks its register count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MuRule {
    /// The same fixed bound for every trial.
    Fixed(u64),
    /// As many registers as the trial has messages.
    MessageCount,
}

impl MuRule {
    fn resolve(self, k: usize) -> Memory {
        match self {
            MuRule::Fixed(mu) => Memory::Bounded(mu),
            MuRule::MessageCount => Memory::Bounded(k as u64),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub protocol: Protocol,
    pub field_width: u8,
    pub mu: MuRule,
    pub trials: usize,
    pub base_seed: u64,
    /// Worker thread count; 0 means one per available core.
    pub workers: usize,
    /// Inclusive node count range per trial.
    pub n_range: (usize, usize),
    /// Inclusive message count range per trial.
    pub k_range: (usize, usize),
    /// Inclusive transmit event count range per trial.
    pub events_range: (usize, usize),
    pub max_delay: u64,
    /// Payload symbols per message.
    pub l: usize,
}

impl CampaignConfig {
    /// A moderate default: small random dynamic networks, one worker per
    /// core, everything else supplied by the caller.
    pub fn new(
        protocol: Protocol,
        field_width: u8,
        mu: MuRule,
        trials: usize,
        base_seed: u64,
    ) -> Self {
        CampaignConfig {
            protocol,
            field_width,
            mu,
            trials,
            base_seed,
            workers: 0,
            n_range: (2, 8),
            k_range: (1, 4),
            events_range: (8, 40),
            max_delay: 3,
            l: 2,
        }
    }
}

/// One trial's outcome.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub n: usize,
    pub k: usize,
    pub events: usize,
    pub mu: u64,
    /// Final-copy query points (one per node that ever acts).
    pub final_points: usize,
    /// Final points whose retained rank equals the capped min-cut.
    pub matched_points: usize,
    /// Copy-level upper-bound checks performed.
    pub observations: usize,
    /// Copy-level checks where rank exceeded the cut. Must stay zero.
    pub rank_violations: usize,
    pub success: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub config: CampaignConfig,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    /// Observed failure rate, `1 - success_rate`.
    pub epsilon_hat: f64,
    /// Wilson 95% interval on the success rate.
    pub ci95: (f64, f64),
    pub observations: usize,
    pub rank_violations: usize,
    pub records: Vec<TrialRecord>,
}

impl CampaignReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Per-trial records as CSV, header row first.
    pub fn records_csv(&self) -> String {
        let mut out = String::from(
            "trial,seed,n,k,events,mu,final_points,matched_points,observations,rank_violations,success\n",
        );
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{}\n",
                r.trial,
                r.seed,
                r.n,
                r.k,
                r.events,
                r.mu,
                r.final_points,
                r.matched_points,
                r.observations,
                r.rank_violations,
                r.success
            ));
        }
        out
    }
}

/// Wilson score interval at 95% confidence.
pub fn wilson_ci(successes: usize, trials: usize) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959963984540054_f64;
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = (z / denom) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

fn campaign_trial(
    config: &CampaignConfig,
    field: &Field,
    trial: usize,
) -> Result<TrialRecord, VerifyError> {
    let seed = derive_seed(config.base_seed, trial as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(config.n_range.0..=config.n_range.1);
    let k = rng.gen_range(config.k_range.0..=config.k_range.1);
    let events = rng.gen_range(config.events_range.0..=config.events_range.1);
    let schedule = gen_random_dynamic(n, k, events, config.max_delay, config.l, rng.gen());
    let teh = build_hypergraph(&schedule)?;

    let (memory, graph) = match config.protocol {
        Protocol::Pnc => (Memory::Unbounded, pnc_transform(&teh)),
        Protocol::Recombinator => {
            let m = config.mu.resolve(k);
            (m, recombinator_transform(&teh, m))
        }
        Protocol::Accumulator => {
            let m = config.mu.resolve(k);
            (m, accumulator_transform(&teh, m))
        }
    };
    let lowered = LoweredCircuit::new(&graph);

    let messages: Vec<Vec<FieldElem>> = (0..k)
        .map(|_| (0..config.l).map(|_| FieldElem(rng.gen_range(0..field.order()) as u16)).collect())
        .collect();
    let trace =
        run(&schedule, config.protocol, field, memory, &CoeffOracle::new(rng.gen()), &messages)?;

    let mut observations = 0;
    let mut rank_violations = 0;
    let mut cuts: HashMap<(NodeId, Tick), u64> = HashMap::new();
    for snap in &trace.snapshots {
        let cut = lowered.min_cut_at(&graph, snap.node, snap.time)?;
        cuts.insert((snap.node, snap.time), cut);
        observations += 1;
        if snap.rank as u64 > cut {
            rank_violations += 1;
        }
    }
    let mut final_points = 0;
    let mut matched_points = 0;
    for outcome in &trace.finals {
        let Some(time) = outcome.time else { continue };
        final_points += 1;
        if outcome.rank as u64 == cuts[&(outcome.node, time)] {
            matched_points += 1;
        }
    }

    Ok(TrialRecord {
        trial,
        seed,
        n,
        k,
        events: schedule
            .events
            .iter()
            .filter(|e| matches!(e, crate::schedule::Event::Transmit { .. }))
            .count(),
        mu: memory.effective(k),
        final_points,
        matched_points,
        observations,
        rank_violations,
        success: rank_violations == 0 && matched_points == final_points,
    })
}

/// Run `config.trials` randomized trials across a worker pool and
/// aggregate the outcomes. Deterministic in the config: every trial's
/// seed is derived from the base seed and the trial index, so worker
/// scheduling cannot change any result.
pub fn optimality_campaign(config: &CampaignConfig) -> Result<CampaignReport, VerifyError> {
    if config.trials == 0 {
        return Err(VerifyError::BadConfig("trials must be positive".to_string()));
    }
    if config.n_range.0 < 2 || config.n_range.0 > config.n_range.1 {
        return Err(VerifyError::BadConfig(format!("bad node range {:?}", config.n_range)));
    }
    if config.k_range.0 < 1 || config.k_range.0 > config.k_range.1 {
        return Err(VerifyError::BadConfig(format!("bad message range {:?}", config.k_range)));
    }
    if config.events_range.0 < 1 || config.events_range.0 > config.events_range.1 {
        return Err(VerifyError::BadConfig(format!("bad event range {:?}", config.events_range)));
    }
    if let MuRule::Fixed(0) = config.mu {
        return Err(VerifyError::BadConfig("register count must be positive".to_string()));
    }
    let field = Field::new(config.field_width)?;

    let workers = if config.workers == 0 {
        std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
    } else {
        config.workers
    };
    let next = AtomicUsize::new(0);
    let records: Mutex<Vec<TrialRecord>> = Mutex::new(Vec::with_capacity(config.trials));
    let failure: Mutex<Option<VerifyError>> = Mutex::new(None);

    std::thread::scope(|scope| {
        for _ in 0..workers.min(config.trials) {
            scope.spawn(|| loop {
                let trial = next.fetch_add(1, Ordering::Relaxed);
                if trial >= config.trials || failure.lock().unwrap().is_some() {
                    break;
                }
                match campaign_trial(config, &field, trial) {
                    Ok(rec) => records.lock().unwrap().push(rec),
                    Err(e) => {
                        *failure.lock().unwrap() = Some(e);
                        break;
                    }
                }
            });
        }
    });

    if let Some(e) = failure.into_inner().unwrap() {
        return Err(e);
    }
    let mut records = records.into_inner().unwrap();
    records.sort_by_key(|r| r.trial);

    let successes = records.iter().filter(|r| r.success).count();
    let observations = records.iter().map(|r| r.observations).sum();
    let rank_violations = records.iter().map(|r| r.rank_violations).sum();
    let success_rate = successes as f64 / config.trials as f64;
    Ok(CampaignReport {
        config: config.clone(),
        trials: config.trials,
        successes,
        success_rate,
        epsilon_hat: 1.0 - success_rate,
        ci95: wilson_ci(successes, config.trials),
        observations,
        rank_violations,
        records,
    })
}
