//! Uniform model-mixing of the fair coin product on a 1024-cycle.
//!
//! Every separated set's image carries exactly `|image| ln 2`, so the ratio
//! per set is at least `3 ln 2` for the window {-1, 0, 1}.

use sofic_mixing::measures::BlockProductMeasure;
use sofic_mixing::modelmetric::injective_vertices;
use sofic_mixing::verify::{certify_uniform_model_mixing, GoodSet, MixingProblem, SetSampler};
use sofic_mixing::{GroupPresentation, Measure, ModelMetric, Process, Result, SoficMap};

fn main() -> Result<()> {
    let n = 1024;
    let sofic = SoficMap::cycle(n)?;
    let z = GroupPresentation::integers();
    let window: Vec<_> = ["[-1]", "[0]", "[1]"].iter().map(|w| z.parse_word(w)).collect::<Result<_>>()?;
    let measure = Measure::BlockProduct(BlockProductMeasure::iid(&[0.5, 0.5], (0..n).collect())?);
    let process = Process::bernoulli(vec![0.5, 0.5], z)?;
    let metric = ModelMetric::build(&sofic, 9.0)?;
    let good = GoodSet {
        description: "injective window orbit".into(),
        vertices: injective_vertices(&sofic, &window)?,
    };
    let cert = certify_uniform_model_mixing(
        &measure,
        &sofic,
        &metric,
        &process,
        &MixingProblem {
            window: &window,
            epsilon: 0.01,
            radius: 8.0,
            good: &good,
            sampler: &SetSampler::standard(3, 1),
        },
    )?;
    for s in &cert.sets {
        println!("{:>12}  |S| = {:>3}  |image| = {:>4}  ratio = {:.9}  {:?}", s.label, s.size, s.image_size, s.ratio, s.verdict);
    }
    println!("target per set element {:.9}: {:?}", cert.target, cert.verdict);
    Ok(())
}
