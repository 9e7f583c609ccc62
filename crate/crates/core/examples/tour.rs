//! The README walkthrough: generate a schedule, query a cut, run a protocol,
//! decode. Kept as an example so the snippet is compile-checked.

use pnclab::circuits::{pnc_transform, Memory};
use pnclab::flow::min_cut;
use pnclab::gf::{DecodeOutcome, Field, FieldElem};
use pnclab::oracle::CoeffOracle;
use pnclab::protocols::{run, Protocol};
use pnclab::schedule::{build_hypergraph, gen_line};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let schedule = gen_line(2, 2, 3, 2);
    let teh = build_hypergraph(&schedule)?;
    let circuit = pnc_transform(&teh);
    assert_eq!(min_cut(&circuit, 1, 4)?, 2);

    let field = Field::new(16)?;
    let oracle = CoeffOracle::new(7);
    let messages: Vec<Vec<FieldElem>> =
        vec![vec![FieldElem(1), FieldElem(2)], vec![FieldElem(3), FieldElem(4)]];
    let trace = run(&schedule, Protocol::Pnc, &field, Memory::Unbounded, &oracle, &messages)?;
    assert!(matches!(trace.decode_at(&field, 1, 4, 2), Some(DecodeOutcome::Decoded(_))));

    println!("line schedule: cut at the sink is 2 and the sink decodes both messages");
    Ok(())
}
