use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use sofic_mixing::cli::{self, ExperimentConfig, Overrides, ReportFormat, StageInputs};
use sofic_mixing::group::GroupPresentation;
use sofic_mixing::sofic::SoficMap;
use sofic_mixing::verify::Verdict;

#[derive(Parser)]
#[command(name = "sofic-mix", version, about = "Build finite group models and model measures, then certify entropy inequalities")]
struct Cli {
    /// Worker threads for data-parallel sections.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to the config's `output` field.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the enumeration cap.
    #[arg(long = "cap-enum")]
    cap_enum: Option<usize>,
}

#[derive(Args, Clone)]
struct Inputs {
    /// Defaults to OUT/sofic.json.
    #[arg(long)]
    sofic: Option<PathBuf>,
    /// Defaults to OUT/measure.json.
    #[arg(long)]
    measure: Option<PathBuf>,
    /// Defaults to OUT/partition.json when it exists.
    #[arg(long)]
    partition: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Cycle,
    Torus,
    RandomFree,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Write OUT/sofic.json, from a config or from --kind.
    BuildSofic {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum)]
        kind: Option<Kind>,
        #[arg(long)]
        n: Option<usize>,
        /// Torus side lengths, comma separated.
        #[arg(long, value_delimiter = ',')]
        sizes: Vec<usize>,
        /// Free group rank for random models.
        #[arg(long, default_value_t = 2)]
        rank: usize,
    },
    /// Write OUT/measure.json (plus partition.json and construction.json for path models).
    BuildMeasure {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        sofic: Option<PathBuf>,
    },
    /// Write OUT/certificate.json; exits 2 on FAIL.
    CertifyMixing {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        inputs: Inputs,
    },
    /// Write OUT/convergence.json.
    DiagnoseConvergence {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        inputs: Inputs,
    },
    /// Write OUT/lemmas.json; exits 2 on FAIL.
    CheckLemmas {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        inputs: Inputs,
    },
    /// Summarize the artifacts in INPUT as OUT/summary.csv or OUT/report.json.
    Report {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// All stages in order; exits 2 if the certificate or a lemma check fails.
    Run {
        #[command(flatten)]
        common: Common,
    },
}

fn load(common: &Common) -> anyhow::Result<(ExperimentConfig, PathBuf)> {
    let overrides = Overrides {
        seed: common.seed,
        cap_enum: common.cap_enum,
    };
    let cfg = ExperimentConfig::load(&common.config, &overrides).with_context(|| format!("loading {}", common.config.display()))?;
    let out = match (&common.out, &cfg.output) {
        (Some(o), _) => o.clone(),
        (None, Some(o)) => o.clone(),
        (None, None) => bail!("no output directory: pass --out or set `output` in the config"),
    };
    Ok((cfg, out))
}

fn stage_inputs(out: &Path, inputs: &Inputs) -> StageInputs {
    let mut s = StageInputs::in_dir(out);
    if let Some(p) = &inputs.sofic {
        s.sofic = p.clone();
    }
    if let Some(p) = &inputs.measure {
        s.measure = p.clone();
    }
    if inputs.partition.is_some() {
        s.partition = inputs.partition.clone();
    }
    s
}

fn status(v: Verdict) -> ExitCode {
    match v {
        Verdict::Pass => ExitCode::SUCCESS,
        Verdict::Fail => ExitCode::from(2),
    }
}

fn execute(cli: Cli) -> anyhow::Result<ExitCode> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global()?;
    }
    match cli.command {
        Command::BuildSofic {
            config,
            out,
            seed,
            kind,
            n,
            sizes,
            rank,
        } => {
            let (sofic, out) = match (config, kind) {
                (Some(path), None) => {
                    let common = Common {
                        config: path,
                        out,
                        seed,
                        cap_enum: None,
                    };
                    let (cfg, out) = load(&common)?;
                    (cli::build_sofic(&cfg)?, out)
                }
                (None, Some(kind)) => {
                    let out = out.context("--out is required with --kind")?;
                    let need_n = || n.context("--n is required for this kind");
                    let sofic = match kind {
                        Kind::Cycle => SoficMap::cycle(need_n()?)?,
                        Kind::Torus => SoficMap::torus(&sizes)?,
                        Kind::RandomFree => SoficMap::random_free(GroupPresentation::free(rank)?, need_n()?, seed.unwrap_or(0))?,
                    };
                    (sofic, out)
                }
                _ => bail!("pass exactly one of --config or --kind"),
            };
            std::fs::create_dir_all(&out)?;
            let path = out.join(cli::SOFIC_FILE);
            cli::write_json(&path, &sofic.to_file())?;
            println!("{}", path.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::BuildMeasure { common, sofic } => {
            let (cfg, out) = load(&common)?;
            let sofic = sofic.unwrap_or_else(|| out.join(cli::SOFIC_FILE));
            let path = cli::stage_build_measure(&cfg, &sofic, &out)?;
            println!("{}", path.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::CertifyMixing { common, inputs } => {
            let (cfg, out) = load(&common)?;
            let v = cli::stage_certify(&cfg, &stage_inputs(&out, &inputs), &out)?;
            println!("certificate: {v:?}");
            Ok(status(v))
        }
        Command::DiagnoseConvergence { common, inputs } => {
            let (cfg, out) = load(&common)?;
            let f = cli::stage_diagnose(&cfg, &stage_inputs(&out, &inputs), &out)?;
            println!("fraction below delta: {f}");
            Ok(ExitCode::SUCCESS)
        }
        Command::CheckLemmas { common, inputs } => {
            let (cfg, out) = load(&common)?;
            let v = cli::stage_check_lemmas(&cfg, &stage_inputs(&out, &inputs), &out)?;
            println!("lemma checks: {v:?}");
            Ok(status(v))
        }
        Command::Report { input, out, format } => {
            let format = match format {
                Format::Json => ReportFormat::Json,
                Format::Csv => ReportFormat::Csv,
            };
            let path = cli::stage_report(&input, format, out.as_deref().unwrap_or(&input))?;
            println!("{}", path.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Run { common } => {
            let (cfg, out) = load(&common)?;
            let v = cli::run(&cfg, &out)?;
            println!("run: {v:?}");
            Ok(status(v))
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
