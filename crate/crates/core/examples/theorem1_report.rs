//! The finite-n quantities behind the entropy lower bound: ball size K,
//! light and good vertices, a separated subset, and the pushforward entropy.
//!
//! An observable whose window straddles path ends (XOR along h, say) ties
//! every path of a cycle together; the joint law is then too large to
//! enumerate and the entropy comparison falls back to a labelled estimate.

use sofic_mixing::construction::{build_model_measure, extract_cycles, partition_paths};
use sofic_mixing::modelmetric::good_vertices;
use sofic_mixing::sofic::LocalObservable;
use sofic_mixing::verify::{theorem1_report, GoodSet, Theorem1Options};
use sofic_mixing::{Measure, ModelMetric, Process, Result, SoficMap};

fn main() -> Result<()> {
    let sofic = SoficMap::torus(&[32, 32])?;
    let p = sofic.presentation().clone();
    let h = p.parse_word("[1,0]")?;
    let flip = Process::symmetric_flip(0.25)?;
    let process = Process::coinduce(flip.clone(), h.clone(), p.clone())?;
    let partition = partition_paths(&extract_cycles(&sofic, &h)?, 16, 0)?;
    let measure = Measure::BlockProduct(build_model_measure(&flip, &partition, None)?);

    let window = vec![p.parse_word("[0,0]")?, p.parse_word("[1,0]")?];
    let dec = p.coset_decompose(&window, &h)?;
    let good = GoodSet {
        description: "good vertices".into(),
        vertices: good_vertices(&sofic, &dec, &partition)?,
    };
    let psi = LocalObservable::projection(vec![p.parse_word("[0,0]")?], 0, 2);
    let metric = ModelMetric::build(&sofic, 4.0)?;
    let report = theorem1_report(
        &measure,
        &sofic,
        &metric,
        &process,
        &psi,
        &good,
        &Theorem1Options {
            radius: 4.0,
            epsilon: 0.05,
            cap: 1 << 20,
            samples: 0,
            seed: 0,
        },
    )?;
    println!("{}", serde_json::to_string_pretty(&report).unwrap());
    Ok(())
}
