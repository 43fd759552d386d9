//! Config-driven pipeline: build a model, build a measure on it, certify,
//! diagnose, check lemmas, and summarize. Stages talk to each other through
//! files in one output directory only.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::construction::{
    build_model_measure, check_condition_a, check_condition_b, choose_l, extract_cycles, partition_paths, PathPartition,
    ScheduleThresholds,
};
use crate::error::{Error, Result};
use crate::group::{CosetDecomposition, GroupKind, GroupPresentation, GroupWord};
use crate::measures::{Atom, BlockProductMeasure, ExplicitMeasure, Measure, MeasureFile};
use crate::modelmetric::{good_vertices, injective_vertices, ModelMetric};
use crate::processes::{inflate_radius, uniform_mixing_radius, MixingRadius, Process, ProcessOracle, ProcessConfig};
use crate::sofic::{LocalObservable, SoficFile, SoficMap, DEFAULT_BUDGET};
use crate::verify::{
    certify_uniform_model_mixing, diagnose_local_convergence, lemma1_bound_check, lemma4_chain_check, theorem1_report,
    ConvergenceOptions, GoodSet, Lemma1Report, Lemma4Report, MixingCertificate, MixingProblem, SetSampler, Theorem1Options,
    Theorem1Report, Verdict, REPORT_VERSION,
};
use crate::Symbol;

pub const CONFIG_VERSION: u32 = 1;

pub const SOFIC_FILE: &str = "sofic.json";
pub const MEASURE_FILE: &str = "measure.json";
pub const PARTITION_FILE: &str = "partition.json";
pub const CONSTRUCTION_FILE: &str = "construction.json";
pub const CERTIFICATE_FILE: &str = "certificate.json";
pub const METRIC_FILE: &str = "metric.json";
pub const EDGES_FILE: &str = "metric_edges.csv";
pub const CONVERGENCE_FILE: &str = "convergence.json";
pub const LEMMAS_FILE: &str = "lemmas.json";
pub const SUMMARY_CSV: &str = "summary.csv";
pub const SUMMARY_JSON: &str = "report.json";

fn bad(field: &str, reason: impl Into<String>) -> Error {
    Error::InvalidConfig {
        field: field.to_string(),
        reason: reason.into(),
    }
}

/// How the finite model is obtained.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "builder", rename_all = "kebab-case")]
pub enum SoficBuilder {
    Cycle { n: usize },
    Torus { sizes: Vec<usize> },
    RandomFree { n: usize, seed: Option<u64> },
    File { path: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SoficConfig {
    #[serde(flatten)]
    pub builder: SoficBuilder,
    #[serde(default)]
    pub budget: Option<f64>,
}

/// Where the model measure comes from.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MeasureSource {
    /// Path-partition measure from the construction section.
    #[default]
    Model,
    /// `eta^V` for a Bernoulli process.
    Product,
    /// One uniformly drawn symbol copied to every vertex.
    Correlated,
    File { path: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstructionConfig {
    pub h: String,
    #[serde(default)]
    pub l: Option<usize>,
    #[serde(default)]
    pub schedule: Option<ScheduleThresholds>,
    #[serde(default)]
    pub filler: Symbol,
    #[serde(default)]
    pub offset: usize,
    /// Pairs from distinct cosets whose collision fractions are reported.
    #[serde(default)]
    pub pairs: Vec<(String, String)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RadiusChoice {
    Fixed(f64),
    Named(String),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GoodChoice {
    /// Construction good set when a construction is present, else injective vertices.
    #[default]
    Auto,
    Injective,
    All,
    Vertices(Vec<usize>),
}

fn default_q_max() -> usize {
    4
}
fn default_gap_cap() -> u64 {
    64
}
fn default_shuffles() -> usize {
    3
}
fn default_delta() -> f64 {
    0.05
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificationConfig {
    pub window: Vec<String>,
    pub epsilon: f64,
    pub radius: RadiusChoice,
    #[serde(default = "default_q_max")]
    pub q_max: usize,
    #[serde(default = "default_gap_cap")]
    pub gap_cap: u64,
    #[serde(default = "default_shuffles")]
    pub shuffles: usize,
    #[serde(default)]
    pub extra_sets: Vec<Vec<usize>>,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default)]
    pub good: GoodChoice,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Caps {
    pub enumeration: usize,
    pub ball: usize,
    pub samples: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            enumeration: crate::measures::DEFAULT_ENUM_CAP,
            ball: crate::group::DEFAULT_BALL_CAP,
            samples: 2000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ObservableChoice {
    Projection { window: Vec<String>, index: usize },
    Xor { window: Vec<String> },
    Constant { window: Vec<String>, value: Symbol },
}

fn default_instances() -> usize {
    20
}
fn default_lemma_epsilon() -> f64 {
    0.1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LemmaConfig {
    #[serde(default = "default_instances")]
    pub instances: usize,
    #[serde(default = "default_lemma_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub observable: Option<ObservableChoice>,
}

impl Default for LemmaConfig {
    fn default() -> Self {
        LemmaConfig {
            instances: default_instances(),
            epsilon: default_lemma_epsilon(),
            observable: None,
        }
    }
}

/// Everything one experiment needs; seeds are explicit, so a config fixes
/// every output byte.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    pub seed: u64,
    pub group: GroupPresentation,
    pub sofic: SoficConfig,
    pub process: ProcessConfig,
    #[serde(default)]
    pub measure: MeasureSource,
    #[serde(default)]
    pub construction: Option<ConstructionConfig>,
    pub certification: CertificationConfig,
    #[serde(default)]
    pub caps: Caps,
    #[serde(default)]
    pub lemmas: LemmaConfig,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

/// Command-line overrides applied after parsing.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub cap_enum: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| bad("config", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let mut cfg: ExperimentConfig = serde_json::from_str(&text).map_err(|e| bad("config", e.to_string()))?;
        if let Some(s) = overrides.seed {
            cfg.seed = s;
        }
        if let Some(c) = overrides.cap_enum {
            cfg.caps.enumeration = c;
        }
        // relative file references resolve against the config's directory
        let base = path.parent().unwrap_or(Path::new("."));
        if let SoficBuilder::File { path } = &mut cfg.sofic.builder {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
        if let MeasureSource::File { path } = &mut cfg.measure {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks every field that can be checked without building anything.
    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(bad("version", format!("unsupported config version {}", self.version)));
        }
        let c = &self.certification;
        if !(c.epsilon > 0.0 && c.epsilon.is_finite()) {
            return Err(bad("certification.epsilon", format!("{} must be positive", c.epsilon)));
        }
        if !(c.delta > 0.0 && c.delta <= 1.0) {
            return Err(bad("certification.delta", format!("{} is outside (0, 1]", c.delta)));
        }
        match &c.radius {
            RadiusChoice::Fixed(r) if !(*r > 0.0 && r.is_finite()) => {
                return Err(bad("certification.radius", format!("{r} must be positive")))
            }
            RadiusChoice::Named(s) if s != "auto" => {
                return Err(bad("certification.radius", format!("expected a number or \"auto\", got {s:?}")))
            }
            _ => {}
        }
        if c.window.is_empty() {
            return Err(bad("certification.window", "must be nonempty"));
        }
        if c.q_max < 2 {
            return Err(bad("certification.q_max", "must be at least 2"));
        }
        if c.gap_cap == 0 {
            return Err(bad("certification.gap_cap", "must be positive"));
        }
        for (name, v) in [
            ("caps.enumeration", self.caps.enumeration),
            ("caps.ball", self.caps.ball),
            ("caps.samples", self.caps.samples),
        ] {
            if v == 0 {
                return Err(bad(name, "must be positive"));
            }
        }
        if !(self.lemmas.epsilon > 0.0 && self.lemmas.epsilon <= 0.5) {
            return Err(bad("lemmas.epsilon", format!("{} is outside (0, 1/2]", self.lemmas.epsilon)));
        }
        for (i, w) in c.window.iter().enumerate() {
            self.group
                .parse_word(w)
                .map_err(|e| bad(&format!("certification.window[{i}]"), e.to_string()))?;
        }
        if let Some(k) = &self.construction {
            let h = self.group.parse_word(&k.h).map_err(|e| bad("construction.h", e.to_string()))?;
            if h.is_identity() {
                return Err(bad("construction.h", "must not be the identity"));
            }
            match (k.l, &k.schedule) {
                (Some(0), _) => return Err(bad("construction.l", "must be positive")),
                (None, None) => return Err(bad("construction.l", "give either l or schedule")),
                (Some(_), Some(_)) => return Err(bad("construction.schedule", "give either l or schedule, not both")),
                (None, Some(s)) => s.validate()?,
                _ => {}
            }
        }
        if matches!(self.measure, MeasureSource::Model) && self.construction.is_none() {
            return Err(bad("construction", "a model measure needs a construction section"));
        }
        if matches!(self.certification.radius, RadiusChoice::Named(_)) && self.construction.is_none() {
            return Err(bad("certification.radius", "\"auto\" needs a construction section"));
        }
        let process = Process::from_config(&self.process).map_err(|e| bad("process", e.to_string()))?;
        if process.presentation() != &self.group {
            return Err(bad("process", "the process lives on a different group than `group`"));
        }
        if matches!(self.measure, MeasureSource::Product) && !matches!(process, Process::Bernoulli { .. }) {
            return Err(bad("measure", "a product measure needs a Bernoulli process"));
        }
        match &self.sofic.builder {
            SoficBuilder::Cycle { n } | SoficBuilder::RandomFree { n, .. } if *n == 0 => {
                return Err(bad("sofic.n", "must be positive"))
            }
            SoficBuilder::Torus { sizes } if sizes.len() != self.group.rank() => {
                return Err(bad("sofic.sizes", "need one size per generator"))
            }
            _ => {}
        }
        Ok(())
    }

    pub fn process(&self) -> Result<Process> {
        Process::from_config(&self.process)
    }

    pub fn window(&self) -> Result<Vec<GroupWord>> {
        self.certification.window.iter().map(|w| self.group.parse_word(w)).collect()
    }

    fn h(&self) -> Result<Option<GroupWord>> {
        self.construction.as_ref().map(|k| self.group.parse_word(&k.h)).transpose()
    }

    /// Coset decomposition of the certification window along `h`, when a
    /// construction is configured.
    pub fn decomposition(&self) -> Result<Option<CosetDecomposition>> {
        match self.h()? {
            Some(h) => Ok(Some(self.group.coset_decompose(&self.window()?, &h)?)),
            None => Ok(None),
        }
    }

    /// The window certificates are evaluated on: the enlarged window when a
    /// construction is configured, else the window itself.
    pub fn certified_window(&self) -> Result<Vec<GroupWord>> {
        Ok(match self.decomposition()? {
            Some(d) => d.enlarged,
            None => self.window()?,
        })
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| {
        Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
    })?;
    Ok(serde_json::from_str(&text)?)
}

/// Builds the model described by the config.
pub fn build_sofic(cfg: &ExperimentConfig) -> Result<SoficMap> {
    let sofic = match &cfg.sofic.builder {
        SoficBuilder::Cycle { n } => {
            if cfg.group != GroupPresentation::integers() {
                return Err(bad("sofic.builder", "cycle models need the integers as group"));
            }
            SoficMap::cycle(*n)?
        }
        SoficBuilder::Torus { sizes } => {
            if cfg.group.kind() != GroupKind::FreeAbelian {
                return Err(bad("sofic.builder", "torus models need a free abelian group"));
            }
            let t = SoficMap::torus(sizes)?;
            SoficMap::from_parts(cfg.group.clone(), t.budget(), t.generators().to_vec(), Default::default())?
        }
        SoficBuilder::RandomFree { n, seed } => SoficMap::random_free(cfg.group.clone(), *n, seed.unwrap_or(cfg.seed))?,
        SoficBuilder::File { path } => SoficMap::from_file(read_json(path)?)?,
    };
    if sofic.presentation() != &cfg.group {
        return Err(bad("sofic", "the model's group differs from `group`"));
    }
    match cfg.sofic.budget {
        Some(b) => sofic.with_budget(b),
        None if sofic.budget() < DEFAULT_BUDGET => sofic.with_budget(DEFAULT_BUDGET),
        None => Ok(sofic),
    }
}

/// Stage 1: writes the model to `out/sofic.json`.
pub fn stage_build_sofic(cfg: &ExperimentConfig, out: &Path) -> Result<PathBuf> {
    fs::create_dir_all(out)?;
    let sofic = build_sofic(cfg)?;
    let path = out.join(SOFIC_FILE);
    write_json(&path, &sofic.to_file())?;
    Ok(path)
}

pub fn load_sofic(path: &Path) -> Result<SoficMap> {
    SoficMap::from_file(read_json::<SoficFile>(path)?)
}

pub fn load_measure(path: &Path) -> Result<Measure> {
    Measure::from_file(read_json::<MeasureFile>(path)?)
}

/// Construction parameters and the resulting condition fractions.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConstructionReport {
    pub version: u32,
    pub n: usize,
    pub h: String,
    pub l: usize,
    pub chosen_by_schedule: bool,
    pub paths: usize,
    pub leftover: usize,
    pub coverage: f64,
    pub pairs: Vec<(String, String)>,
    pub collision: Vec<f64>,
    pub entropy: f64,
}

/// The base process that is laid along the paths.
fn path_process(process: &Process) -> &Process {
    match process {
        Process::Coinduced { base, .. } => base,
        p => p,
    }
}

/// Stage 2: writes `measure.json` and, for path-partition measures,
/// `partition.json` and `construction.json`.
pub fn stage_build_measure(cfg: &ExperimentConfig, sofic_path: &Path, out: &Path) -> Result<PathBuf> {
    fs::create_dir_all(out)?;
    let sofic = load_sofic(sofic_path)?;
    let process = cfg.process()?;
    let n = sofic.n();
    let measure = match &cfg.measure {
        MeasureSource::Model => {
            let k = cfg.construction.as_ref().ok_or_else(|| bad("construction", "missing"))?;
            let h = cfg.group.parse_word(&k.h)?;
            let pairs = k
                .pairs
                .iter()
                .map(|(a, b)| Ok((cfg.group.parse_word(a)?, cfg.group.parse_word(b)?)))
                .collect::<Result<Vec<_>>>()?;
            let (l, by_schedule) = match (k.l, &k.schedule) {
                (Some(l), _) => (l, false),
                (None, Some(th)) => (choose_l(&sofic, &h, &pairs, th, k.offset)?.l, true),
                (None, None) => return Err(bad("construction.l", "give either l or schedule")),
            };
            let partition = partition_paths(&extract_cycles(&sofic, &h)?, l, k.offset)?;
            if k.filler as usize >= process.alphabet() {
                return Err(bad("construction.filler", "symbol outside the process alphabet"));
            }
            let filler = vec![k.filler; n];
            let model = build_model_measure(path_process(&process), &partition, Some(&filler))?;
            let report = ConstructionReport {
                version: REPORT_VERSION,
                n,
                h: h.to_string(),
                l,
                chosen_by_schedule: by_schedule,
                paths: partition.paths.len(),
                leftover: partition.leftover.len(),
                coverage: check_condition_a(&partition),
                pairs: pairs.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect(),
                collision: check_condition_b(&sofic, &h, &pairs, l)?,
                entropy: model.entropy(),
            };
            write_json(&out.join(PARTITION_FILE), &partition)?;
            write_json(&out.join(CONSTRUCTION_FILE), &report)?;
            Measure::BlockProduct(model)
        }
        MeasureSource::Product => {
            let Process::Bernoulli { eta, .. } = &process else {
                return Err(bad("measure", "a product measure needs a Bernoulli process"));
            };
            Measure::BlockProduct(BlockProductMeasure::iid(eta, (0..n).collect())?)
        }
        MeasureSource::Correlated => {
            let k = process.alphabet();
            let atoms = (0..k)
                .map(|a| Atom {
                    config: vec![a as Symbol; n],
                    p: 1.0 / k as f64,
                })
                .collect();
            Measure::Explicit(ExplicitMeasure::new(k, (0..n).collect(), atoms)?)
        }
        MeasureSource::File { path } => load_measure(path)?,
    };
    if measure.sites() != (0..n).collect::<Vec<_>>().as_slice() {
        return Err(bad("measure", "the measure must live on the model's vertices 0..n"));
    }
    let path = out.join(MEASURE_FILE);
    write_json(&path, &measure.to_file())?;
    Ok(path)
}

/// Where the separation radius came from.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RadiusDerivation {
    pub cosets: usize,
    pub interval_len: usize,
    pub epsilon_per_coset: f64,
    pub base_gap: u64,
    pub radius: f64,
    pub search: MixingRadius,
}

/// Resolves `certification.radius`, running the gap search for `"auto"`.
pub fn resolve_radius(cfg: &ExperimentConfig) -> Result<(f64, Option<RadiusDerivation>)> {
    match &cfg.certification.radius {
        RadiusChoice::Fixed(r) => Ok((*r, None)),
        RadiusChoice::Named(_) => {
            let dec = cfg
                .decomposition()?
                .ok_or_else(|| bad("certification.radius", "\"auto\" needs a construction section"))?;
            let process = cfg.process()?;
            let base = path_process(&process);
            let m = dec.cosets();
            let eps = cfg.certification.epsilon / m as f64;
            let search = uniform_mixing_radius(base, dec.interval_len(), eps, cfg.certification.q_max, cfg.certification.gap_cap)?;
            let gap = search.radius.ok_or_else(|| {
                bad(
                    "certification.radius",
                    format!("no separating gap up to {} passes the mixing test", cfg.certification.gap_cap),
                )
            })?;
            let radius = inflate_radius(&cfg.group, &dec, gap);
            Ok((
                radius,
                Some(RadiusDerivation {
                    cosets: m,
                    interval_len: dec.interval_len(),
                    epsilon_per_coset: eps,
                    base_gap: gap,
                    radius,
                    search,
                }),
            ))
        }
    }
}

fn good_set(cfg: &ExperimentConfig, sofic: &SoficMap, partition: Option<&PathPartition>) -> Result<GoodSet> {
    let window = cfg.certified_window()?;
    Ok(match &cfg.certification.good {
        GoodChoice::All => GoodSet {
            description: "all vertices".into(),
            vertices: (0..sofic.n()).collect(),
        },
        GoodChoice::Vertices(v) => GoodSet {
            description: "user supplied".into(),
            vertices: v.clone(),
        },
        GoodChoice::Injective => GoodSet {
            description: "vertices with injective window orbit".into(),
            vertices: injective_vertices(sofic, &window)?,
        },
        GoodChoice::Auto => match (cfg.decomposition()?, partition) {
            (Some(dec), Some(p)) => GoodSet {
                description: "injective orbit, homomorphic on the enlarged window, cosets on distinct paths".into(),
                vertices: good_vertices(sofic, &dec, p)?,
            },
            _ => GoodSet {
                description: "vertices with injective window orbit".into(),
                vertices: injective_vertices(sofic, &window)?,
            },
        },
    })
}

/// Paths to the artifacts a stage reads.
#[derive(Clone, Debug)]
pub struct StageInputs {
    pub sofic: PathBuf,
    pub measure: PathBuf,
    pub partition: Option<PathBuf>,
}

impl StageInputs {
    /// The default file names inside `dir`; the partition is picked up when present.
    pub fn in_dir(dir: &Path) -> Self {
        let partition = dir.join(PARTITION_FILE);
        StageInputs {
            sofic: dir.join(SOFIC_FILE),
            measure: dir.join(MEASURE_FILE),
            partition: partition.exists().then_some(partition),
        }
    }
}

struct Loaded {
    sofic: SoficMap,
    measure: Measure,
    partition: Option<PathPartition>,
    process: Process,
}

fn load_inputs(cfg: &ExperimentConfig, inputs: &StageInputs) -> Result<Loaded> {
    Ok(Loaded {
        sofic: load_sofic(&inputs.sofic)?,
        measure: load_measure(&inputs.measure)?,
        partition: inputs.partition.as_deref().map(read_json).transpose()?,
        process: cfg.process()?,
    })
}

/// Contents of `certificate.json`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CertificateFile {
    pub version: u32,
    pub radius_derivation: Option<RadiusDerivation>,
    pub certificate: MixingCertificate,
}

/// Builds the model metric with edge radius `r + 1` and certifies.
pub fn certify(cfg: &ExperimentConfig, inputs: &StageInputs) -> Result<(CertificateFile, ModelMetric)> {
    let data = load_inputs(cfg, inputs)?;
    let (radius, derivation) = resolve_radius(cfg)?;
    let metric = ModelMetric::build(&data.sofic, radius + 1.0)?;
    let window = cfg.certified_window()?;
    let good = good_set(cfg, &data.sofic, data.partition.as_ref())?;
    let mut sampler = SetSampler::standard(cfg.certification.shuffles, cfg.seed);
    sampler.extra_sets = cfg.certification.extra_sets.clone();
    let certificate = certify_uniform_model_mixing(
        &data.measure,
        &data.sofic,
        &metric,
        &data.process,
        &MixingProblem {
            window: &window,
            epsilon: cfg.certification.epsilon,
            radius,
            good: &good,
            sampler: &sampler,
        },
    )?;
    Ok((
        CertificateFile {
            version: REPORT_VERSION,
            radius_derivation: derivation,
            certificate,
        },
        metric,
    ))
}

/// Stage 3: writes `certificate.json`, `metric.json` and `metric_edges.csv`.
pub fn stage_certify(cfg: &ExperimentConfig, inputs: &StageInputs, out: &Path) -> Result<Verdict> {
    fs::create_dir_all(out)?;
    let (file, metric) = certify(cfg, inputs)?;
    write_json(&out.join(CERTIFICATE_FILE), &file)?;
    write_json(&out.join(METRIC_FILE), &metric.summary())?;
    metric.write_edges_csv(fs::File::create(out.join(EDGES_FILE))?)?;
    Ok(file.certificate.verdict)
}

/// Stage 4: writes `convergence.json`.
pub fn stage_diagnose(cfg: &ExperimentConfig, inputs: &StageInputs, out: &Path) -> Result<f64> {
    fs::create_dir_all(out)?;
    let data = load_inputs(cfg, inputs)?;
    let window = cfg.window()?;
    let options = ConvergenceOptions {
        delta: cfg.certification.delta,
        samples: cfg.caps.samples,
        seed: cfg.seed,
        vertex_sample: None,
        cap: cfg.caps.enumeration,
        bins: 10,
    };
    let report = diagnose_local_convergence(&data.measure, &data.process, &data.sofic, &window, &options)?;
    write_json(&out.join(CONVERGENCE_FILE), &report)?;
    Ok(report.fraction_below)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteSummary<T> {
    pub instances: usize,
    pub failures: usize,
    pub min_slack: f64,
    pub verdict: Verdict,
    pub rows: Vec<T>,
}

fn summarize<T>(rows: Vec<T>, slack: impl Fn(&T) -> f64, verdict: impl Fn(&T) -> Verdict) -> SuiteSummary<T> {
    let failures = rows.iter().filter(|r| !verdict(r).passed()).count();
    SuiteSummary {
        instances: rows.len(),
        failures,
        min_slack: rows.iter().map(&slack).fold(f64::INFINITY, f64::min),
        verdict: Verdict::from_bool(failures == 0),
        rows,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LemmaFile {
    pub version: u32,
    pub theorem1: Theorem1Report,
    pub lemma1: SuiteSummary<Lemma1Report>,
    pub lemma4: SuiteSummary<Lemma4Report>,
    pub verdict: Verdict,
}

/// A seeded random measure with `support` distinct atoms on `A^sites`.
pub fn random_explicit<R: Rng>(rng: &mut R, alphabet: usize, sites: usize, support: usize) -> Result<ExplicitMeasure> {
    let mut configs = std::collections::BTreeSet::new();
    let total = (alphabet as u128).pow(sites as u32);
    let support = (support as u128).min(total).max(1) as usize;
    while configs.len() < support {
        configs.insert((0..sites).map(|_| rng.gen_range(0..alphabet) as Symbol).collect::<Vec<_>>());
    }
    let weights: Vec<f64> = (0..support).map(|_| rng.gen_range(0.05..1.0)).collect();
    let sum: f64 = weights.iter().sum();
    let atoms = configs
        .into_iter()
        .zip(weights)
        .map(|(config, w)| Atom { config, p: w / sum })
        .collect();
    ExplicitMeasure::new(alphabet, (0..sites).collect(), atoms)
}

fn observable(cfg: &ExperimentConfig, alphabet: usize) -> Result<LocalObservable> {
    let parse = |ws: &[String]| -> Result<Vec<GroupWord>> {
        ws.iter()
            .map(|w| cfg.group.parse_word(w).map_err(|e| bad("lemmas.observable.window", e.to_string())))
            .collect()
    };
    Ok(match &cfg.lemmas.observable {
        None => LocalObservable::projection(vec![cfg.group.identity()], 0, alphabet),
        Some(ObservableChoice::Projection { window, index }) => {
            if *index >= window.len() {
                return Err(bad("lemmas.observable.index", "outside the window"));
            }
            LocalObservable::projection(parse(window)?, *index, alphabet)
        }
        Some(ObservableChoice::Xor { window }) => LocalObservable::from_fn(parse(window)?, alphabet, |p| {
            (p.iter().map(|&a| a as usize).sum::<usize>() % alphabet) as Symbol
        }),
        Some(ObservableChoice::Constant { window, value }) => LocalObservable::constant(parse(window)?, alphabet, *value),
    })
}

/// The lower-bound report on the built inputs, plus seeded covering-number and
/// chain-inequality suites on enumerable instances.
pub fn check_lemmas(cfg: &ExperimentConfig, inputs: &StageInputs) -> Result<LemmaFile> {
    let data = load_inputs(cfg, inputs)?;
    let (radius, _) = resolve_radius(cfg)?;
    let metric = ModelMetric::build(&data.sofic, radius + 1.0)?;
    let good = good_set(cfg, &data.sofic, data.partition.as_ref())?;
    let psi = observable(cfg, data.process.alphabet())?;
    let theorem1 = theorem1_report(
        &data.measure,
        &data.sofic,
        &metric,
        &data.process,
        &psi,
        &good,
        &Theorem1Options {
            radius,
            epsilon: cfg.certification.epsilon,
            cap: cfg.caps.enumeration,
            samples: cfg.caps.samples,
            seed: cfg.seed,
        },
    )?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut l1 = Vec::new();
    for _ in 0..cfg.lemmas.instances {
        let sites = rng.gen_range(1..=8);
        let support = rng.gen_range(1..=(1usize << sites).min(40));
        let mu = random_explicit(&mut rng, 2, sites, support)?;
        l1.push(lemma1_bound_check(&mu, cfg.lemmas.epsilon)?);
    }
    let ring = SoficMap::cycle(9)?;
    let xor = LocalObservable::from_fn(
        vec![GroupWord::Abelian(vec![0]), GroupWord::Abelian(vec![1])],
        2,
        |p| p[0] ^ p[1],
    );
    let mut l4 = Vec::new();
    for _ in 0..cfg.lemmas.instances {
        let support = rng.gen_range(1..=64);
        let mu = random_explicit(&mut rng, 2, 9, support)?;
        let set: Vec<usize> = (0..9).filter(|_| rng.gen_bool(0.5)).collect();
        l4.push(lemma4_chain_check(&mu, &ring, &xor, &set)?);
    }
    let lemma1 = summarize(l1, |r| r.slack, |r| r.verdict);
    let lemma4 = summarize(l4, |r| r.slack, |r| r.verdict);
    let verdict = theorem1.verdict.and(lemma1.verdict).and(lemma4.verdict);
    Ok(LemmaFile {
        version: REPORT_VERSION,
        theorem1,
        lemma1,
        lemma4,
        verdict,
    })
}

/// Stage 5: writes `lemmas.json`.
pub fn stage_check_lemmas(cfg: &ExperimentConfig, inputs: &StageInputs, out: &Path) -> Result<Verdict> {
    fs::create_dir_all(out)?;
    let file = check_lemmas(cfg, inputs)?;
    write_json(&out.join(LEMMAS_FILE), &file)?;
    Ok(file.verdict)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
}

#[derive(Serialize)]
struct SummaryRow<'a> {
    label: &'a str,
    size: u64,
    image_size: u64,
    entropy: f64,
    ratio: f64,
    required: f64,
    maximal: bool,
    verdict: &'a str,
}

/// Stage 6: summarizes the artifacts in `input` as `summary.csv` (one row per
/// tested set) or `report.json`.
pub fn stage_report(input: &Path, format: ReportFormat, out: &Path) -> Result<PathBuf> {
    fs::create_dir_all(out)?;
    let cert: serde_json::Value = read_json(&input.join(CERTIFICATE_FILE))?;
    let sets = cert["certificate"]["sets"]
        .as_array()
        .ok_or_else(|| bad("certificate", "missing `sets`"))?;
    match format {
        ReportFormat::Csv => {
            let path = out.join(SUMMARY_CSV);
            let mut w = csv::Writer::from_path(&path)?;
            for s in sets {
                w.serialize(SummaryRow {
                    label: s["label"].as_str().unwrap_or_default(),
                    size: s["size"].as_u64().unwrap_or_default(),
                    image_size: s["image_size"].as_u64().unwrap_or_default(),
                    entropy: s["entropy"].as_f64().unwrap_or(f64::NAN),
                    ratio: s["ratio"].as_f64().unwrap_or(f64::NAN),
                    required: s["required"].as_f64().unwrap_or(f64::NAN),
                    maximal: s["maximal"].as_bool().unwrap_or(false),
                    verdict: s["verdict"].as_str().unwrap_or_default(),
                })?;
            }
            w.flush()?;
            Ok(path)
        }
        ReportFormat::Json => {
            let optional = |name: &str| -> Result<serde_json::Value> {
                let p = input.join(name);
                if p.exists() {
                    read_json(&p)
                } else {
                    Ok(serde_json::Value::Null)
                }
            };
            let c = &cert["certificate"];
            let conv = optional(CONVERGENCE_FILE)?;
            let lemmas = optional(LEMMAS_FILE)?;
            let report = serde_json::json!({
                "version": REPORT_VERSION,
                "construction": optional(CONSTRUCTION_FILE)?,
                "certificate": {
                    "window": c["window"],
                    "epsilon": c["epsilon"],
                    "radius": c["radius"],
                    "process_entropy": c["process_entropy"],
                    "target": c["target"],
                    "sets": sets.len(),
                    "min_ratio": sets.iter().filter_map(|s| s["ratio"].as_f64()).fold(f64::INFINITY, f64::min),
                    "verdict": c["verdict"],
                },
                "convergence": if conv.is_null() { conv } else { serde_json::json!({
                    "method": conv["method"],
                    "delta": conv["delta"],
                    "fraction_below": conv["fraction_below"],
                    "exact_zero_fraction": conv["exact_zero_fraction"],
                })},
                "lemmas": if lemmas.is_null() { lemmas } else { serde_json::json!({
                    "covering_check": lemmas["theorem1"]["covering_check"],
                    "lemma1": lemmas["lemma1"]["verdict"],
                    "lemma4": lemmas["lemma4"]["verdict"],
                    "verdict": lemmas["verdict"],
                })},
            });
            let path = out.join(SUMMARY_JSON);
            write_json(&path, &report)?;
            Ok(path)
        }
    }
}

/// The whole pipeline through files in `out`. The verdict covers the
/// certificate and the exact lemma checks.
pub fn run(cfg: &ExperimentConfig, out: &Path) -> Result<Verdict> {
    let sofic = stage_build_sofic(cfg, out)?;
    stage_build_measure(cfg, &sofic, out)?;
    let inputs = StageInputs::in_dir(out);
    let cert = stage_certify(cfg, &inputs, out)?;
    stage_diagnose(cfg, &inputs, out)?;
    let lemmas = stage_check_lemmas(cfg, &inputs, out)?;
    stage_report(out, ReportFormat::Json, out)?;
    stage_report(out, ReportFormat::Csv, out)?;
    Ok(cert.and(lemmas))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bernoulli_config() -> String {
        r#"{
            "version": 1,
            "seed": 5,
            "group": {"kind": "free-abelian", "rank": 1},
            "sofic": {"builder": "cycle", "n": 64},
            "process": {"type": "bernoulli", "eta": [0.5, 0.5]},
            "measure": {"type": "product"},
            "certification": {"window": ["[-1]", "[0]", "[1]"], "epsilon": 0.01, "radius": 4}
        }"#
        .to_string()
    }

    #[test]
    fn parses_minimal_config() {
        let cfg = ExperimentConfig::from_json(&bernoulli_config()).unwrap();
        assert_eq!(cfg.certification.q_max, 4);
        assert_eq!(cfg.caps, Caps::default());
        assert_eq!(cfg.certified_window().unwrap().len(), 3);
    }

    #[test]
    fn zero_epsilon_names_the_field() {
        let text = bernoulli_config().replace("\"epsilon\": 0.01", "\"epsilon\": 0");
        match ExperimentConfig::from_json(&text) {
            Err(Error::InvalidConfig { field, .. }) => assert_eq!(field, "certification.epsilon"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn model_measure_needs_construction() {
        let text = bernoulli_config().replace("{\"type\": \"product\"}", "{\"type\": \"model\"}");
        assert!(matches!(ExperimentConfig::from_json(&text), Err(Error::InvalidConfig { .. })));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = bernoulli_config().replace("\"seed\": 5,", "\"seed\": 5, \"sed\": 1,");
        assert!(ExperimentConfig::from_json(&text).is_err());
    }

    #[test]
    fn random_explicit_is_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = random_explicit(&mut rng, 3, 4, 20).unwrap();
        assert_eq!(m.support_size(), 20);
        assert!((m.total_mass() - 1.0).abs() < 1e-12);
    }
}
