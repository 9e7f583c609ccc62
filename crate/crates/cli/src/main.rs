//! Command-line driver for the network coding laboratory.
//!
//! Subcommands:
//!
//! * `gen`: write schedules (line, gossip, random dynamic) as JSON.
//! * `mincut`: capped min-cut at every node copy of a transformed graph,
//!   as CSV.
//! * `run`: execute a protocol over a schedule and dump the trace as CSV
//!   (per-copy ranks, emitted packets, final outcomes).
//! * `verify`: equivalence checks and randomized optimality campaigns.
//!
//! Exit codes: 0 success, 1 verification failure, 2 bad usage or input
//! data, 3 I/O error. Seeds come from `--seed`, falling back to the
//! `PNCLAB_SEED` environment variable, then to 1.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pnclab::circuits::{
    accumulator_transform, info_flow_graph, pnc_transform, recombinator_transform, Circuit, Memory,
};
use pnclab::flow::LoweredCircuit;
use pnclab::gf::{Field, FieldElem, PacketVector};
use pnclab::oracle::{derive_seed, CoeffOracle};
use pnclab::protocols::{run as run_protocol, Protocol, SimulatorTrace};
use pnclab::schedule::{
    build_hypergraph, gen_gossip, gen_line, gen_random_dynamic, validate, Schedule,
    TimeExpandedHypergraph,
};
use pnclab::verify::{
    check_cut_equivalences, check_simulation_equivalence, optimality_campaign, CampaignConfig,
    MuRule,
};

// ---------------------------------------------------------------------------
// Argument surface.
// ---------------------------------------------------------------------------

#[derive(Parser)]
#[command(name = "pnclab", version, about = "Network coding simulator and verification laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a schedule and print or save it as JSON.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Capped min-cut at every node copy of a transformed graph (CSV).
    Mincut(MincutArgs),
    /// Run a coding protocol over a schedule and dump its trace (CSV).
    Run(RunArgs),
    /// Equivalence checks and randomized optimality campaigns.
    #[command(subcommand)]
    Verify(VerifyCommand),
}

#[derive(Subcommand)]
enum GenCommand {
    /// All messages start at node 0 and hop down a line, each hop
    /// transmitting a fixed number of times.
    Line {
        #[arg(long)]
        nodes: usize,
        #[arg(long)]
        messages: usize,
        /// Transmissions per hop.
        #[arg(long, default_value_t = 2)]
        repetitions: usize,
        #[arg(long, default_value_t = 1)]
        payload_len: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Synchronous push gossip: every node sends to random peers each round.
    Gossip {
        #[arg(long)]
        nodes: usize,
        #[arg(long)]
        messages: usize,
        #[arg(long)]
        rounds: usize,
        /// Distinct recipients per send.
        #[arg(long, default_value_t = 1)]
        fanout: usize,
        #[arg(long, default_value_t = 1)]
        payload_len: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Random point-to-point transmissions with random delays, arranged so
    /// every sender already knows something.
    Random {
        #[arg(long)]
        nodes: usize,
        #[arg(long)]
        messages: usize,
        /// Transmit event count.
        #[arg(long)]
        events: usize,
        #[arg(long, default_value_t = 3)]
        max_delay: u64,
        #[arg(long, default_value_t = 1)]
        payload_len: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GraphKind {
    /// Memory edges of the chosen capacity between consecutive copies.
    Ginf,
    /// Memory edges capped at the register bound.
    Gmu,
    /// Head extension to all later copies, no memory edges.
    Gpnc,
    /// Parallel unit-capacity memory slots.
    Grecomb,
    /// Register template over the head-extended graph.
    Gacc,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProtocolKind {
    Pnc,
    Recomb,
    Acc,
}

impl From<ProtocolKind> for Protocol {
    fn from(p: ProtocolKind) -> Protocol {
        match p {
            ProtocolKind::Pnc => Protocol::Pnc,
            ProtocolKind::Recomb => Protocol::Recombinator,
            ProtocolKind::Acc => Protocol::Accumulator,
        }
    }
}

fn parse_memory(s: &str) -> Result<Memory, String> {
    if s.eq_ignore_ascii_case("unbounded") {
        return Ok(Memory::Unbounded);
    }
    match s.parse::<u64>() {
        Ok(mu) if mu >= 1 => Ok(Memory::Bounded(mu)),
        _ => Err(format!("expected a positive integer or \"unbounded\", got {s:?}")),
    }
}

fn parse_mu_rule(s: &str) -> Result<MuRule, String> {
    if s.eq_ignore_ascii_case("k") {
        return Ok(MuRule::MessageCount);
    }
    match s.parse::<u64>() {
        Ok(mu) if mu >= 1 => Ok(MuRule::Fixed(mu)),
        _ => Err(format!("expected a positive integer or \"k\", got {s:?}")),
    }
}

#[derive(Args)]
struct MincutArgs {
    #[arg(long)]
    schedule: PathBuf,
    #[arg(long, value_enum)]
    graph: GraphKind,
    /// Register bound for gmu/grecomb/gacc: a positive integer or
    /// "unbounded".
    #[arg(long, value_parser = parse_memory, default_value = "unbounded")]
    mu: Memory,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    schedule: PathBuf,
    #[arg(long, value_enum)]
    protocol: ProtocolKind,
    /// Field width in bits: 4, 8 or 16.
    #[arg(long, default_value_t = 16)]
    field: u8,
    /// Register count for the bounded protocols.
    #[arg(long, value_parser = parse_memory, default_value = "unbounded")]
    mu: Memory,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum VerifyCommand {
    /// Compare the full-memory protocol against the head-extended circuit
    /// packet by packet.
    Simulate {
        #[arg(long)]
        schedule: PathBuf,
        #[arg(long, default_value_t = 16)]
        field: u8,
        #[arg(long)]
        seed: Option<u64>,
        /// Independent seeds to compare.
        #[arg(long, default_value_t = 5)]
        runs: u64,
    },
    /// Compare min-cut queries across graph layouts at every node copy.
    Cuts {
        #[arg(long)]
        schedule: PathBuf,
        /// Comma-separated register bounds, e.g. "1,2,unbounded".
        #[arg(
            long,
            value_parser = parse_memory,
            value_delimiter = ',',
            default_value = "1,2,unbounded"
        )]
        mu_list: Vec<Memory>,
    },
    /// Randomized campaign: protocols must reach the capped cut at every
    /// final query point in at least --min-rate of trials.
    Optimality {
        #[arg(long, value_enum)]
        protocol: ProtocolKind,
        #[arg(long, default_value_t = 16)]
        field: u8,
        /// Register bound per trial: a positive integer or "k".
        #[arg(long, value_parser = parse_mu_rule, default_value = "k")]
        mu: MuRule,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; 0 means one per core.
        #[arg(long, default_value_t = 0)]
        workers: usize,
        #[arg(long, default_value_t = 0.99)]
        min_rate: f64,
        #[arg(long, default_value_t = 2)]
        n_min: usize,
        #[arg(long, default_value_t = 8)]
        n_max: usize,
        #[arg(long, default_value_t = 1)]
        k_min: usize,
        #[arg(long, default_value_t = 4)]
        k_max: usize,
        #[arg(long, default_value_t = 8)]
        events_min: usize,
        #[arg(long, default_value_t = 40)]
        events_max: usize,
        #[arg(long, default_value_t = 3)]
        max_delay: u64,
        #[arg(long, default_value_t = 2)]
        payload_len: usize,
        /// Write the full JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write per-trial records as CSV here.
        #[arg(long)]
        trace_csv: Option<PathBuf>,
    },
    /// Simulation and cut checks together on one schedule.
    All {
        #[arg(long)]
        schedule: PathBuf,
        #[arg(long, default_value_t = 16)]
        field: u8,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 5)]
        runs: u64,
        #[arg(
            long,
            value_parser = parse_memory,
            value_delimiter = ',',
            default_value = "1,2,unbounded"
        )]
        mu_list: Vec<Memory>,
    },
}

// ---------------------------------------------------------------------------
// Failure plumbing: each category maps to a process exit code.
// ---------------------------------------------------------------------------

enum Failure {
    /// A check ran to completion and found a discrepancy.
    Verification(String),
    /// Bad flags, malformed or invalid input data.
    Config(String),
    /// The file system let us down.
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Verification(_) => 1,
            Failure::Config(_) => 2,
            Failure::Io(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Verification(m) | Failure::Config(m) | Failure::Io(m) => m,
        }
    }
}

fn read_schedule(path: &Path) -> Result<Schedule, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Io(format!("reading {}: {e}", path.display())))?;
    let schedule = Schedule::from_json(&text)
        .map_err(|e| Failure::Config(format!("parsing {}: {e}", path.display())))?;
    let violations = validate(&schedule);
    if !violations.is_empty() {
        let mut msg = format!("schedule {} is invalid:", path.display());
        for v in violations {
            let _ = write!(msg, "\n  {v}");
        }
        return Err(Failure::Config(msg));
    }
    Ok(schedule)
}

fn emit(out: Option<&Path>, content: &str) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| Failure::Io(format!("writing {}: {e}", path.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn resolve_seed(flag: Option<u64>) -> Result<u64, Failure> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    match std::env::var("PNCLAB_SEED") {
        Ok(text) => text
            .trim()
            .parse()
            .map_err(|_| Failure::Config(format!("PNCLAB_SEED is not an integer: {text:?}"))),
        Err(_) => Ok(1),
    }
}

fn build_field(width: u8) -> Result<Field, Failure> {
    Field::new(width).map_err(|e| Failure::Config(e.to_string()))
}

fn build_graph(teh: &TimeExpandedHypergraph, kind: GraphKind, mu: Memory) -> Circuit {
    match kind {
        GraphKind::Ginf => info_flow_graph(teh, Memory::Unbounded),
        GraphKind::Gmu => info_flow_graph(teh, mu),
        GraphKind::Gpnc => pnc_transform(teh),
        GraphKind::Grecomb => recombinator_transform(teh, mu),
        GraphKind::Gacc => accumulator_transform(teh, mu),
    }
}

fn graph_name(kind: GraphKind) -> &'static str {
    match kind {
        GraphKind::Ginf => "ginf",
        GraphKind::Gmu => "gmu",
        GraphKind::Gpnc => "gpnc",
        GraphKind::Grecomb => "grecomb",
        GraphKind::Gacc => "gacc",
    }
}

fn memory_text(m: Memory) -> String {
    match m {
        Memory::Bounded(mu) => mu.to_string(),
        Memory::Unbounded => "unbounded".to_string(),
    }
}

fn fmt_packet(field: &Field, p: &PacketVector) -> String {
    let w = field.hex_width();
    let part = |syms: &[FieldElem]| {
        syms.iter().map(|s| format!("{:0w$x}", s.0, w = w)).collect::<Vec<_>>().join(".")
    };
    format!("{}|{}", part(&p.header), part(&p.payload))
}

/// Deterministic payloads for a schedule: the seed fixes both the
/// coefficients and the message contents.
fn derive_messages(field: &Field, schedule: &Schedule, seed: u64) -> Vec<Vec<FieldElem>> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0xFACE));
    (0..schedule.k)
        .map(|_| {
            (0..schedule.l).map(|_| FieldElem(rng.gen_range(0..field.order()) as u16)).collect()
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Subcommand bodies.
// ---------------------------------------------------------------------------

fn cmd_gen(cmd: GenCommand) -> Result<(), Failure> {
    let (schedule, out) = match cmd {
        GenCommand::Line { nodes, messages, repetitions, payload_len, out } => {
            if nodes < 2 {
                return Err(Failure::Config("a line needs at least two nodes".to_string()));
            }
            if messages < 1 || repetitions < 1 || payload_len < 1 {
                return Err(Failure::Config(
                    "messages, repetitions and payload length must be positive".to_string(),
                ));
            }
            (gen_line(nodes, messages, repetitions, payload_len), out)
        }
        GenCommand::Gossip { nodes, messages, rounds, fanout, payload_len, seed, out } => {
            if nodes < 2 {
                return Err(Failure::Config("gossip needs at least two nodes".to_string()));
            }
            if fanout < 1 || fanout > nodes - 1 {
                return Err(Failure::Config(format!(
                    "fanout must be between 1 and {}, got {fanout}",
                    nodes - 1
                )));
            }
            if messages < 1 || rounds < 1 || payload_len < 1 {
                return Err(Failure::Config(
                    "messages, rounds and payload length must be positive".to_string(),
                ));
            }
            let seed = resolve_seed(seed)?;
            (gen_gossip(nodes, messages, rounds, fanout, payload_len, seed), out)
        }
        GenCommand::Random { nodes, messages, events, max_delay, payload_len, seed, out } => {
            if nodes < 2 {
                return Err(Failure::Config("need at least two nodes".to_string()));
            }
            if messages < 1 || events < 1 || max_delay < 1 || payload_len < 1 {
                return Err(Failure::Config(
                    "messages, events, max delay and payload length must be positive".to_string(),
                ));
            }
            let seed = resolve_seed(seed)?;
            (gen_random_dynamic(nodes, messages, events, max_delay, payload_len, seed), out)
        }
    };
    let mut json = schedule.to_json();
    json.push('\n');
    emit(out.as_deref(), &json)
}

fn cmd_mincut(args: MincutArgs) -> Result<(), Failure> {
    let schedule = read_schedule(&args.schedule)?;
    let teh = build_hypergraph(&schedule).map_err(|e| Failure::Config(e.to_string()))?;
    let graph = build_graph(&teh, args.graph, args.mu);
    let lowered = LoweredCircuit::new(&graph);
    let config = serde_json::json!({
        "command": "mincut",
        "schedule": args.schedule.display().to_string(),
        "graph": graph_name(args.graph),
        "mu": memory_text(args.mu),
    });
    let mut csv = format!("# {config}\nnode,tick,value\n");
    for &(node, tick) in graph.copies() {
        let cut =
            lowered.min_cut_at(&graph, node, tick).map_err(|e| Failure::Config(e.to_string()))?;
        let _ = writeln!(csv, "{node},{tick},{cut}");
    }
    emit(args.out.as_deref(), &csv)
}

fn trace_csv(field: &Field, trace: &SimulatorTrace, config: &serde_json::Value) -> String {
    let mut csv = format!("# {config}\n");
    csv.push_str("section,ranks\nnode,tick,rank\n");
    for s in &trace.snapshots {
        let _ = writeln!(csv, "{},{},{}", s.node, s.time, s.rank);
    }
    csv.push_str("section,emissions\nevent,sender,tick,packet\n");
    for e in &trace.emissions {
        let _ =
            writeln!(csv, "{},{},{},{}", e.event, e.sender, e.time, fmt_packet(field, &e.packet));
    }
    csv.push_str("section,finals\nnode,tick,rank,decodable\n");
    for f in &trace.finals {
        let tick = f.time.map(|t| t.to_string()).unwrap_or_else(|| "-".to_string());
        let _ = writeln!(csv, "{},{},{},{}", f.node, tick, f.rank, f.decoded.is_some());
    }
    csv
}

fn cmd_run(args: RunArgs) -> Result<(), Failure> {
    let schedule = read_schedule(&args.schedule)?;
    let field = build_field(args.field)?;
    let seed = resolve_seed(args.seed)?;
    let protocol: Protocol = args.protocol.into();
    let messages = derive_messages(&field, &schedule, seed);
    let trace =
        run_protocol(&schedule, protocol, &field, args.mu, &CoeffOracle::new(seed), &messages)
            .map_err(|e| Failure::Config(e.to_string()))?;
    let config = serde_json::json!({
        "command": "run",
        "schedule": args.schedule.display().to_string(),
        "protocol": protocol.name(),
        "field": args.field,
        "mu": memory_text(args.mu),
        "seed": seed,
    });
    emit(args.out.as_deref(), &trace_csv(&field, &trace, &config))
}

fn cmd_verify(cmd: VerifyCommand) -> Result<(), Failure> {
    match cmd {
        VerifyCommand::Simulate { schedule, field, seed, runs } => {
            let schedule_path = schedule;
            let schedule = read_schedule(&schedule_path)?;
            let field = build_field(field)?;
            let base = resolve_seed(seed)?;
            verify_simulate(&schedule, &field, base, runs)
        }
        VerifyCommand::Cuts { schedule, mu_list } => {
            let schedule = read_schedule(&schedule)?;
            verify_cuts(&schedule, &mu_list)
        }
        VerifyCommand::Optimality {
            protocol,
            field,
            mu,
            trials,
            seed,
            workers,
            min_rate,
            n_min,
            n_max,
            k_min,
            k_max,
            events_min,
            events_max,
            max_delay,
            payload_len,
            out,
            trace_csv,
        } => {
            let base = resolve_seed(seed)?;
            let mut config = CampaignConfig::new(protocol.into(), field, mu, trials, base);
            config.workers = workers;
            config.n_range = (n_min, n_max);
            config.k_range = (k_min, k_max);
            config.events_range = (events_min, events_max);
            config.max_delay = max_delay;
            config.l = payload_len;
            let report = optimality_campaign(&config).map_err(|e| match e {
                pnclab::verify::VerifyError::BadConfig(m) => Failure::Config(m),
                other => Failure::Config(other.to_string()),
            })?;
            if let Some(path) = out {
                std::fs::write(&path, report.to_json())
                    .map_err(|e| Failure::Io(format!("writing {}: {e}", path.display())))?;
            }
            if let Some(path) = trace_csv {
                std::fs::write(&path, report.records_csv())
                    .map_err(|e| Failure::Io(format!("writing {}: {e}", path.display())))?;
            }
            println!(
                "optimality: {}/{} trials reached the cut (rate {:.4}, epsilon {:.4}, 95% ci [{:.4}, {:.4}], {} rank violations over {} checks)",
                report.successes,
                report.trials,
                report.success_rate,
                report.epsilon_hat,
                report.ci95.0,
                report.ci95.1,
                report.rank_violations,
                report.observations,
            );
            if report.rank_violations > 0 {
                return Err(Failure::Verification(format!(
                    "{} copy-level rank bound violations",
                    report.rank_violations
                )));
            }
            if report.success_rate < min_rate {
                return Err(Failure::Verification(format!(
                    "success rate {:.4} below required {min_rate}",
                    report.success_rate
                )));
            }
            Ok(())
        }
        VerifyCommand::All { schedule, field, seed, runs, mu_list } => {
            let schedule_path = schedule;
            let schedule = read_schedule(&schedule_path)?;
            let field = build_field(field)?;
            let base = resolve_seed(seed)?;
            verify_simulate(&schedule, &field, base, runs)?;
            verify_cuts(&schedule, &mu_list)
        }
    }
}

fn verify_simulate(
    schedule: &Schedule,
    field: &Field,
    base: u64,
    runs: u64,
) -> Result<(), Failure> {
    let messages = derive_messages(field, schedule, base);
    for i in 0..runs {
        let seed = derive_seed(base, i);
        let r = check_simulation_equivalence(schedule, field, seed, &messages)
            .map_err(|e| Failure::Config(e.to_string()))?;
        match r.divergence {
            None => println!(
                "simulate seed={seed}: MATCH ({} emissions, {} copies)",
                r.events_checked, r.copies_checked
            ),
            Some(d) => {
                return Err(Failure::Verification(format!(
                    "protocol and circuit diverged with seed {seed}: {d:?}"
                )));
            }
        }
    }
    Ok(())
}

fn verify_cuts(schedule: &Schedule, memories: &[Memory]) -> Result<(), Failure> {
    let r =
        check_cut_equivalences(schedule, memories).map_err(|e| Failure::Config(e.to_string()))?;
    if r.matched() {
        println!("cuts: all layouts agree on {} query points", r.checked);
        Ok(())
    } else {
        let mut msg = format!(
            "cut layouts disagree at {} of {} query points:",
            r.mismatches.len(),
            r.checked
        );
        for m in r.mismatches.iter().take(5) {
            let _ = write!(msg, "\n  ({}, {}) under {}: {:?}", m.node, m.tick, m.setting, m.values);
        }
        Err(Failure::Verification(msg))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(cmd) => cmd_gen(cmd),
        Command::Mincut(args) => cmd_mincut(args),
        Command::Run(args) => cmd_run(args),
        Command::Verify(cmd) => cmd_verify(cmd),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
