//! Cutting cycles of sigma^h into paths and placing the Markov law on each.

use sofic_mixing::construction::{
    build_model_measure, check_condition_a, check_condition_b, extract_cycles, partition_paths, schedule_l, ScheduleThresholds,
};
use sofic_mixing::{Process, Result, SoficMap};

fn main() -> Result<()> {
    let torus = SoficMap::torus(&[32, 32])?;
    let p = torus.presentation().clone();
    let h = p.parse_word("[1,0]")?;
    let cycles = extract_cycles(&torus, &h)?;
    let partition = partition_paths(&cycles, 8, 0)?;
    partition.validate(&torus, &h)?;
    println!("{} cycles, {} paths of length 8, {} leftover", cycles.len(), partition.paths.len(), partition.leftover.len());
    println!("coverage {:.4}", check_condition_a(&partition));

    let pairs = vec![(p.parse_word("[0,0]")?, p.parse_word("[0,1]")?)];
    println!("collision fractions {:?}", check_condition_b(&torus, &h, &pairs, 8)?);

    let measure = build_model_measure(&Process::symmetric_flip(0.25)?, &partition, None)?;
    println!("model entropy {:.6} over {} blocks", measure.entropy(), measure.blocks().len());

    // largest l meeting the thresholds, per model size
    let models = [64, 256, 1024].map(SoficMap::cycle).into_iter().collect::<Result<Vec<_>>>()?;
    let z = models[0].presentation().clone();
    let th = ScheduleThresholds {
        coverage: 0.1,
        collision: 0.01,
        l_cap: 64,
        l_min: 2,
    };
    for e in schedule_l(&models, &z.parse_word("[1]")?, &[], &th, 0)? {
        println!("n = {:>5}: l = {:>3}, coverage {:.3}", e.n, e.l, e.coverage);
    }
    Ok(())
}
