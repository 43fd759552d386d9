//! Runs a JSON experiment config through every stage, as the binary does.
//!
//! cargo run --example run_config -- configs/markov_cycle.json /tmp/markov

use std::path::PathBuf;

use sofic_mixing::cli::{run, ExperimentConfig, Overrides};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let config = PathBuf::from(args.next().unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/configs/bernoulli_cycle.json").into()));
    let out = PathBuf::from(args.next().unwrap_or_else(|| std::env::temp_dir().join("sofic-mix-example").display().to_string()));
    let cfg = ExperimentConfig::load(&config, &Overrides::default())?;
    let verdict = run(&cfg, &out)?;
    println!("{verdict:?}; artifacts in {}", out.display());
    print!("{}", std::fs::read_to_string(out.join("report.json"))?);
    Ok(())
}
