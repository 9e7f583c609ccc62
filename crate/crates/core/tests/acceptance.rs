//! Acceptance gate: every primary verification criterion runs here, each
//! reporting one PASS/FAIL line with its headline numbers and elapsed time.
//! The criteria run sequentially inside a single test so the campaign
//! worker pools get the whole machine and every criterion reports even
//! when an earlier one fails.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pnclab::circuits::{
    accumulator_transform, info_flow_graph, pnc_transform, recombinator_transform, Memory,
};
use pnclab::flow::{brute_force_max_flow, FlowNetwork, LoweredCircuit};
use pnclab::gf::{decode, DecodeOutcome, Field, FieldElem, Matrix, PacketVector};
use pnclab::oracle::{derive_seed, CoeffOracle};
use pnclab::protocols::{run, Protocol};
use pnclab::schedule::{build_hypergraph, gen_gossip, gen_line, gen_random_dynamic};
use pnclab::verify::{
    check_cut_equivalences, check_simulation_equivalence, optimality_campaign, CampaignConfig,
    MuRule,
};

struct Outcome {
    name: &'static str,
    pass: bool,
    detail: String,
    elapsed: Duration,
    budget: Duration,
}

fn check(name: &'static str, budget_secs: u64, body: impl FnOnce() -> (bool, String)) -> Outcome {
    let start = Instant::now();
    let (ok, detail) = body();
    let elapsed = start.elapsed();
    let budget = Duration::from_secs(budget_secs);
    let pass = ok && elapsed <= budget;
    let line = format!(
        "[{name}] {}: {detail} ({elapsed:.2?} of {budget:?} budget)",
        if pass { "PASS" } else { "FAIL" },
    );
    eprintln!("{line}");
    Outcome { name, pass, detail, elapsed, budget }
}

fn random_messages(rng: &mut ChaCha8Rng, field: &Field, k: usize, l: usize) -> Vec<Vec<FieldElem>> {
    (0..k)
        .map(|_| (0..l).map(|_| FieldElem(rng.gen_range(0..field.order()) as u16)).collect())
        .collect()
}

/// Retained rank never exceeds the capped min-cut, across protocols,
/// memory bounds and fields, on at least ten thousand copy-level checks.
fn criterion_1() -> Outcome {
    check("rank upper bound", 300, || {
        let mut observations = 0usize;
        let mut violations = 0usize;
        let runs: Vec<(Protocol, u8, MuRule, usize, u64)> = vec![
            (Protocol::Pnc, 16, MuRule::MessageCount, 150, 101),
            (Protocol::Recombinator, 16, MuRule::Fixed(1), 100, 102),
            (Protocol::Recombinator, 16, MuRule::Fixed(2), 100, 103),
            (Protocol::Accumulator, 16, MuRule::Fixed(1), 100, 104),
            (Protocol::Accumulator, 16, MuRule::MessageCount, 100, 105),
            (Protocol::Pnc, 4, MuRule::MessageCount, 100, 106),
            (Protocol::Accumulator, 4, MuRule::Fixed(2), 50, 107),
        ];
        for (protocol, width, mu, trials, seed) in runs {
            let config = CampaignConfig::new(protocol, width, mu, trials, seed);
            let report = optimality_campaign(&config).expect("campaign runs");
            observations += report.observations;
            violations += report.rank_violations;
        }
        (
            violations == 0 && observations >= 10_000,
            format!("{violations} violations over {observations} copy-level checks"),
        )
    })
}

/// The full-memory protocol and the head-extended circuit emit identical
/// packets and hold identical knowledge: 100 schedules x 10 seeds, exact.
fn criterion_2() -> Outcome {
    check("protocol/circuit identity", 120, || {
        let mut checked = 0usize;
        let mut diverged = 0usize;
        let mut first = String::new();
        for i in 0u64..100 {
            let s_seed = derive_seed(0xE0_0001, i);
            let mut rng = ChaCha8Rng::seed_from_u64(s_seed);
            let schedule = if i % 2 == 0 {
                let n = rng.gen_range(2..=8);
                let k = rng.gen_range(1..=4);
                let events = rng.gen_range(5..=30);
                gen_random_dynamic(n, k, events, 3, 2, rng.gen())
            } else {
                let n = rng.gen_range(3..=8);
                let k = rng.gen_range(1..=4);
                let rounds = rng.gen_range(1..=4);
                gen_gossip(n, k, rounds, 2.min(n - 1), 2, rng.gen())
            };
            let field = if i % 4 < 2 { Field::new(16).unwrap() } else { Field::new(8).unwrap() };
            let messages = random_messages(&mut rng, &field, schedule.k, schedule.l);
            for seed in 0..10 {
                checked += 1;
                let r = check_simulation_equivalence(
                    &schedule,
                    &field,
                    derive_seed(s_seed, seed),
                    &messages,
                )
                .expect("check runs");
                if !r.matched() {
                    diverged += 1;
                    if first.is_empty() {
                        first = format!("; first at schedule {i} seed {seed}");
                    }
                }
            }
        }
        (diverged == 0, format!("{checked} runs compared, {diverged} diverged{first}"))
    })
}

/// Min-cut queries agree exactly across the memory-edge, parallel-slot
/// and register-template layouts for every bound, and head extension
/// leaves full-memory cuts unchanged: 200 schedules.
fn criterion_3() -> Outcome {
    check("cut agreement across layouts", 300, || {
        let memories =
            [Memory::Bounded(1), Memory::Bounded(2), Memory::Bounded(3), Memory::Unbounded];
        let mut points = 0usize;
        let mut mismatched = 0usize;
        let mut first = String::new();
        for i in 0u64..200 {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(0xE0_0003, i));
            let n = rng.gen_range(2..=7);
            let k = rng.gen_range(1..=4);
            let events = rng.gen_range(4..=24);
            let schedule = gen_random_dynamic(n, k, events, 3, 1, rng.gen());
            let r = check_cut_equivalences(&schedule, &memories).expect("check runs");
            points += r.checked;
            if !r.matched() {
                mismatched += r.mismatches.len();
                if first.is_empty() {
                    first = format!("; first on schedule {i}: {:?}", r.mismatches[0]);
                }
            }
        }
        (mismatched == 0, format!("{points} query points compared, {mismatched} mismatched{first}"))
    })
}

/// Randomized end-to-end optimality: over a wide field at least 99% of
/// trials reach the capped cut at every final query point, for all three
/// protocols with register bounds 1, 2 and k; a small field does strictly
/// worse.
fn criterion_4() -> Outcome {
    check("protocols reach the cut", 600, || {
        let mut lines = Vec::new();
        let mut ok = true;

        let base = |protocol, width, mu, trials, seed| {
            let mut c = CampaignConfig::new(protocol, width, mu, trials, seed);
            c.n_range = (2, 10);
            c.k_range = (1, 4);
            c.events_range = (10, 50);
            c
        };

        let pnc16 = optimality_campaign(&base(Protocol::Pnc, 16, MuRule::MessageCount, 1000, 11))
            .expect("campaign runs");
        ok &= pnc16.success_rate >= 0.99 && pnc16.rank_violations == 0;
        lines.push(format!("pnc {:.2}%", pnc16.success_rate * 100.0));

        for (protocol, label) in
            [(Protocol::Recombinator, "recombinator"), (Protocol::Accumulator, "accumulator")]
        {
            let mut successes = 0usize;
            let mut trials = 0usize;
            for (mu, count, seed) in [
                (MuRule::Fixed(1), 334, 21),
                (MuRule::Fixed(2), 333, 22),
                (MuRule::MessageCount, 333, 23),
            ] {
                let report = optimality_campaign(&base(protocol, 16, mu, count, seed))
                    .expect("campaign runs");
                successes += report.successes;
                trials += report.trials;
                ok &= report.rank_violations == 0;
            }
            let rate = successes as f64 / trials as f64;
            ok &= rate >= 0.99;
            lines.push(format!("{label} {:.2}%", rate * 100.0));
        }

        let pnc4 = optimality_campaign(&base(Protocol::Pnc, 4, MuRule::MessageCount, 400, 31))
            .expect("campaign runs");
        ok &= pnc4.success_rate < pnc16.success_rate && pnc4.rank_violations == 0;
        lines.push(format!("narrow-field pnc {:.2}%", pnc4.success_rate * 100.0));

        (ok, lines.join(", "))
    })
}

/// Dinic agrees with the exhaustive bipartition oracle on 1000 random
/// networks of up to 20 arcs.
fn criterion_5() -> Outcome {
    check("max-flow oracle agreement", 60, || {
        let mut rng = ChaCha8Rng::seed_from_u64(0xE0_0005);
        let mut disagreed = 0usize;
        for _ in 0..1000 {
            let n = rng.gen_range(2..=10);
            let mut net = FlowNetwork::new(n);
            let arcs = rng.gen_range(1..=20);
            for _ in 0..arcs {
                let from = rng.gen_range(0..n);
                let to = rng.gen_range(0..n);
                if from != to {
                    net.add_arc(from, to, rng.gen_range(1..=16));
                }
            }
            let fast = net.max_flow(0, n - 1);
            let slow = brute_force_max_flow(&net, 0, n - 1).expect("small network");
            if fast != slow {
                disagreed += 1;
            }
        }
        (disagreed == 0, format!("1000 networks, {disagreed} disagreements"))
    })
}

/// Field arithmetic: exhaustive axioms over the 16-element field, heavy
/// random sampling over the wider ones, and decode inverting encode.
fn criterion_6() -> Outcome {
    check("field arithmetic", 60, || {
        let mut failures = 0usize;

        let axioms = |f: &Field, a: FieldElem, b: FieldElem, c: FieldElem| -> bool {
            let assoc_add = f.add(f.add(a, b), c) == f.add(a, f.add(b, c));
            let assoc_mul = f.mul(f.mul(a, b), c) == f.mul(a, f.mul(b, c));
            let comm = f.add(a, b) == f.add(b, a) && f.mul(a, b) == f.mul(b, a);
            let dist = f.mul(a, f.add(b, c)) == f.add(f.mul(a, b), f.mul(a, c));
            let ident = f.add(a, FieldElem::ZERO) == a && f.mul(a, FieldElem::ONE) == a;
            let inv = a.is_zero() || f.mul(a, f.inv(a).expect("nonzero inverts")) == FieldElem::ONE;
            assoc_add && assoc_mul && comm && dist && ident && inv
        };

        let f4 = Field::new(4).unwrap();
        for a in 0..16u16 {
            for b in 0..16u16 {
                for c in 0..16u16 {
                    if !axioms(&f4, FieldElem(a), FieldElem(b), FieldElem(c)) {
                        failures += 1;
                    }
                }
            }
        }

        let mut rng = ChaCha8Rng::seed_from_u64(0xE0_0006);
        for width in [8u8, 16] {
            let f = Field::new(width).unwrap();
            for _ in 0..100_000 {
                let a = FieldElem(rng.gen_range(0..f.order()) as u16);
                let b = FieldElem(rng.gen_range(0..f.order()) as u16);
                let c = FieldElem(rng.gen_range(0..f.order()) as u16);
                if !axioms(&f, a, b, c) {
                    failures += 1;
                }
            }
        }

        // Decode must invert encode: mix messages through a random square
        // matrix and demand exact recovery whenever the matrix has full
        // rank, and an honest rank report otherwise.
        let f16 = Field::new(16).unwrap();
        let mut decodes = 0usize;
        for _ in 0..1000 {
            let k = rng.gen_range(1..=4);
            let l = rng.gen_range(1..=3);
            let messages = random_messages(&mut rng, &f16, k, l);
            let coeffs: Vec<Vec<FieldElem>> = (0..k)
                .map(|_| (0..k).map(|_| FieldElem(rng.gen_range(0..f16.order()) as u16)).collect())
                .collect();
            let packets: Vec<PacketVector> = coeffs
                .iter()
                .map(|row| {
                    let sources: Vec<PacketVector> =
                        (0..k).map(|i| PacketVector::source(i, k, messages[i].clone())).collect();
                    let terms: Vec<(FieldElem, &PacketVector)> =
                        row.iter().copied().zip(sources.iter()).collect();
                    pnclab::gf::linear_combination(&f16, &terms, k, l).unwrap()
                })
                .collect();
            let rank = Matrix::from_rows(coeffs).unwrap().rank(&f16);
            match decode(&f16, &packets, k).unwrap() {
                DecodeOutcome::Decoded(got) => {
                    decodes += 1;
                    if rank != k || got != messages {
                        failures += 1;
                    }
                }
                DecodeOutcome::NotDecodable { rank: r } => {
                    if r != rank || rank == k {
                        failures += 1;
                    }
                }
            }
        }

        (
            failures == 0 && decodes > 0,
            format!("{failures} failures (4096 exhaustive + 200000 sampled triples, 1000 decode round-trips, {decodes} decodable)"),
        )
    })
}

/// The two reference schedules behave exactly as computed by hand: cut
/// profiles confirmed by the exhaustive oracle, and the protocols reach
/// them on at least 99% of seeds.
fn criterion_7() -> Outcome {
    check("reference schedules", 300, || {
        let mut ok = true;
        let mut notes = Vec::new();

        // Reference A: both messages start at one end of a two-node line
        // with three repeated sends per hop; the receiving end should hold
        // rank 1 after one arrival and rank 2 from the second on.
        let line_a = gen_line(2, 2, 3, 2);
        let teh_a = build_hypergraph(&line_a).unwrap();
        let expected_a = [((1, 2), 1), ((1, 3), 2), ((1, 4), 2), ((0, 0), 2)];
        for g in [info_flow_graph(&teh_a, Memory::Unbounded), pnc_transform(&teh_a)] {
            let lowered = LoweredCircuit::new(&g);
            for &((node, tick), want) in &expected_a {
                let fast = lowered.min_cut_at(&g, node, tick).unwrap();
                let slow = lowered.min_cut_at_brute(&g, node, tick).unwrap();
                if fast != want || slow != want {
                    ok = false;
                    notes.push(format!("cut at ({node},{tick}) was {fast}/{slow}, wanted {want}"));
                }
            }
        }
        let field = Field::new(16).unwrap();
        let messages = vec![
            vec![FieldElem(0x1234), FieldElem(0x0055)],
            vec![FieldElem(0xFEDC), FieldElem(0x0BA9)],
        ];
        let mut hits_a = 0usize;
        for seed in 0..1000u64 {
            let trace = run(
                &line_a,
                Protocol::Pnc,
                &field,
                Memory::Unbounded,
                &CoeffOracle::new(derive_seed(0xA11CE, seed)),
                &messages,
            )
            .unwrap();
            if trace.rank_at(1, 2) == Some(1)
                && trace.rank_at(1, 3) == Some(2)
                && trace.rank_at(1, 4) == Some(2)
            {
                hits_a += 1;
            }
        }
        ok &= hits_a >= 990;
        notes.push(format!("full-memory profile hit on {hits_a}/1000 seeds"));

        // Reference B: the same line with one register of memory; the
        // bottleneck pins every cut at one and a single-register
        // accumulator should still fill it.
        let line_b = gen_line(2, 2, 2, 1);
        let teh_b = build_hypergraph(&line_b).unwrap();
        for g in [
            info_flow_graph(&teh_b, Memory::Bounded(1)),
            recombinator_transform(&teh_b, Memory::Bounded(1)),
            accumulator_transform(&teh_b, Memory::Bounded(1)),
        ] {
            let lowered = LoweredCircuit::new(&g);
            for &(node, tick) in teh_b.copies() {
                let fast = lowered.min_cut_at(&g, node, tick).unwrap();
                let slow = lowered.min_cut_at_brute(&g, node, tick).unwrap();
                if fast != 1 || slow != 1 {
                    ok = false;
                    notes.push(format!(
                        "bounded cut at ({node},{tick}) was {fast}/{slow}, wanted 1"
                    ));
                }
            }
        }
        let messages_b = vec![vec![FieldElem(0x3)], vec![FieldElem(0x4)]];
        let mut hits_b = 0usize;
        for seed in 0..1000u64 {
            let trace = run(
                &line_b,
                Protocol::Accumulator,
                &field,
                Memory::Bounded(1),
                &CoeffOracle::new(derive_seed(0xB0B, seed)),
                &messages_b,
            )
            .unwrap();
            if trace.rank_at(1, 3) == Some(1) {
                hits_b += 1;
            }
        }
        ok &= hits_b >= 990;
        notes.push(format!("single-register fill on {hits_b}/1000 seeds"));

        (ok, notes.join("; "))
    })
}

#[test]
fn acceptance() {
    let outcomes = vec![
        criterion_1(),
        criterion_2(),
        criterion_3(),
        criterion_4(),
        criterion_5(),
        criterion_6(),
        criterion_7(),
    ];
    let mut summary = String::new();
    for o in &outcomes {
        writeln!(
            summary,
            "[{}] {}: {} ({:.2?} of {:?} budget)",
            o.name,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            o.elapsed,
            o.budget
        )
        .unwrap();
    }
    println!("{summary}");
    let failed: Vec<&str> = outcomes.iter().filter(|o| !o.pass).map(|o| o.name).collect();
    assert!(failed.is_empty(), "criteria failed: {failed:?}\n{summary}");
}
