//! How far the pullback marginals of a path model sit from the process marginal.

use sofic_mixing::construction::{build_model_measure, extract_cycles, partition_paths};
use sofic_mixing::verify::{diagnose_local_convergence, ConvergenceOptions};
use sofic_mixing::{Measure, Process, Result, SoficMap};

fn main() -> Result<()> {
    let sofic = SoficMap::cycle(4096)?;
    let z = sofic.presentation().clone();
    let h = z.parse_word("[1]")?;
    let window = vec![z.parse_word("[0]")?, h.clone()];
    let process = Process::symmetric_flip(0.25)?;

    for l in [4, 16, 64, 256] {
        let partition = partition_paths(&extract_cycles(&sofic, &h)?, l, 0)?;
        let measure = Measure::BlockProduct(build_model_measure(&process, &partition, None)?);
        let r = diagnose_local_convergence(&measure, &process, &sofic, &window, &ConvergenceOptions::new(0.05))?;
        println!(
            "l = {l:>3}: {:.4} of vertices within 0.05, {:.4} exactly, max TV {:.4}",
            r.fraction_below, r.exact_zero_fraction, r.max_tv
        );
    }
    Ok(())
}
