//! The flip-0.25 Markov chain placed on length-64 paths of a 4096-cycle,
//! certified at a separation radius derived from the chain's mixing.

use sofic_mixing::construction::{build_model_measure, extract_cycles, partition_paths};
use sofic_mixing::modelmetric::good_vertices;
use sofic_mixing::processes::{inflate_radius, uniform_mixing_radius};
use sofic_mixing::verify::{certify_uniform_model_mixing, GoodSet, MixingProblem, SetSampler};
use sofic_mixing::{Error, Measure, ModelMetric, Process, Result, SoficMap};

fn main() -> Result<()> {
    let sofic = SoficMap::cycle(4096)?;
    let z = sofic.presentation().clone();
    let h = z.parse_word("[1]")?;
    let window = vec![z.parse_word("[0]")?, h.clone()];
    let process = Process::symmetric_flip(0.25)?;
    let epsilon = 0.01;

    let partition = partition_paths(&extract_cycles(&sofic, &h)?, 64, 0)?;
    let measure = Measure::BlockProduct(build_model_measure(&process, &partition, None)?);

    let dec = z.coset_decompose(&window, &h)?;
    let search = uniform_mixing_radius(&process, dec.interval_len(), epsilon / dec.cosets() as f64, 4, 64)?;
    for c in search.checks.iter().filter(|c| c.windows == search.max_windows && c.gap <= 6) {
        println!("gap {:>2}: {} windows carry {:.6} vs {:.6} needed", c.gap, c.windows, c.joint_entropy, c.required);
    }
    let gap = search.radius.ok_or_else(|| Error::NoFeasibleSchedule("no gap mixes fast enough".into()))?;
    let radius = inflate_radius(&z, &dec, gap);
    println!("gap {gap} -> separation radius {radius}");

    let metric = ModelMetric::build(&sofic, radius + 1.0)?;
    let good = GoodSet {
        description: "good vertices".into(),
        vertices: good_vertices(&sofic, &dec, &partition)?,
    };
    let cert = certify_uniform_model_mixing(
        &measure,
        &sofic,
        &metric,
        &process,
        &MixingProblem {
            window: &dec.enlarged,
            epsilon,
            radius,
            good: &good,
            sampler: &SetSampler::standard(3, 23),
        },
    )?;
    for s in &cert.sets {
        println!("{:>12}: {} vertices, ratio {:.9}", s.label, s.size, s.ratio);
    }
    println!("H(nu on F') - eps = {:.9}: {:?}", cert.target, cert.verdict);
    Ok(())
}
