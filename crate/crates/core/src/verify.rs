//! Certification of entropy inequalities on model measures.
//!
//! Every check either evaluates an inequality exactly on an enumerable or
//! block-factorized measure, or labels its numbers as estimates.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use rand::seq::index::sample as sample_indices;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid_arg, Error, Result};
use crate::group::GroupWord;
use crate::measures::{
    binary_entropy, cov_epsilon_explicit, entropy_of, total_variation, ExplicitMeasure, Measure, Observable,
};
use crate::modelmetric::{ModelMetric, VertexOrder};
use crate::processes::ProcessOracle;
use crate::sofic::{LocalObservable, SoficMap};
use crate::Symbol;

/// Slack allowed when comparing entropies computed along different routes.
pub const ENTROPY_TOL: f64 = 1e-9;
pub const REPORT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn passed(self) -> bool {
        self == Verdict::Pass
    }

    pub fn and(self, other: Verdict) -> Verdict {
        Verdict::from_bool(self.passed() && other.passed())
    }
}

/// The vertex set separated sets are drawn from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoodSet {
    pub description: String,
    pub vertices: Vec<usize>,
}

/// Which separated sets a certificate tests.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SetSampler {
    pub orders: Vec<VertexOrder>,
    #[serde(default)]
    pub extra_sets: Vec<Vec<usize>>,
}

impl SetSampler {
    /// Ascending, descending, and `shuffles` seeded shuffles.
    pub fn standard(shuffles: usize, seed: u64) -> Self {
        let mut orders = vec![VertexOrder::Ascending, VertexOrder::Descending];
        orders.extend((0..shuffles as u64).map(|i| VertexOrder::Shuffled(seed.wrapping_add(i))));
        SetSampler {
            orders,
            extra_sets: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TestedSet {
    pub label: String,
    pub size: usize,
    pub image_size: usize,
    pub entropy: f64,
    pub ratio: f64,
    pub required: f64,
    pub maximal: bool,
    pub verdict: Verdict,
    pub members: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GoodSetSummary {
    pub description: String,
    pub size: usize,
}

/// Outcome of one uniform model-mixing test, scoped to the tested family.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MixingCertificate {
    pub version: u32,
    pub window: Vec<String>,
    pub epsilon: f64,
    pub radius: f64,
    pub edge_radius: f64,
    pub good_set: GoodSetSummary,
    pub process_entropy: f64,
    pub target: f64,
    pub family: Vec<String>,
    pub sets: Vec<TestedSet>,
    pub verdict: Verdict,
}

/// Inputs of [`certify_uniform_model_mixing`] besides the measure and model.
#[derive(Clone, Debug)]
pub struct MixingProblem<'a> {
    pub window: &'a [GroupWord],
    pub epsilon: f64,
    pub radius: f64,
    pub good: &'a GoodSet,
    pub sampler: &'a SetSampler,
}

/// Tests `H(mu on sigma^F(S)) >= |S| (H(mu_F) - epsilon)` on greedy maximal
/// `r`-separated subsets of the good set, one per order, plus user sets.
pub fn certify_uniform_model_mixing(
    measure: &Measure,
    sofic: &SoficMap,
    metric: &ModelMetric,
    process: &dyn ProcessOracle,
    problem: &MixingProblem<'_>,
) -> Result<MixingCertificate> {
    let MixingProblem {
        window,
        epsilon,
        radius,
        good,
        sampler,
    } = *problem;
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(invalid_arg("epsilon", format!("{epsilon} must be positive")));
    }
    if !(radius > 0.0 && radius < metric.edge_radius()) {
        return Err(invalid_arg(
            "radius",
            format!("need 0 < r < edge radius {}, got {radius}", metric.edge_radius()),
        ));
    }
    if window.is_empty() {
        return Err(invalid_arg("window", "must be nonempty"));
    }
    if sampler.orders.is_empty() && sampler.extra_sets.is_empty() {
        return Err(invalid_arg("sampler", "no sets to test"));
    }
    let perms = sofic.evaluate_all(window)?;
    let process_entropy = process.marginal(window)?.entropy();
    let target = process_entropy - epsilon;

    let mut candidates: Vec<(String, Vec<usize>, bool)> = Vec::new();
    for order in &sampler.orders {
        let set = metric.separated_set_greedy(&good.vertices, radius, order)?;
        candidates.push((set.order, set.members, true));
    }
    let mut in_good = vec![false; sofic.n()];
    for &v in &good.vertices {
        if v >= sofic.n() {
            return Err(Error::UnknownSite { vertex: v });
        }
        in_good[v] = true;
    }
    for (i, s) in sampler.extra_sets.iter().enumerate() {
        if let Some(&v) = s.iter().find(|&&v| v >= sofic.n() || !in_good[v]) {
            return Err(invalid_arg("extra_sets", format!("set {i} contains {v}, which is not in the good set")));
        }
        let mut s = s.clone();
        s.sort_unstable();
        s.dedup();
        candidates.push((format!("user:{i}"), s, false));
    }

    let sets = candidates
        .into_par_iter()
        .map(|(label, members, greedy)| {
            if let Some((a, b, d)) = metric.separation_violation(&members, radius) {
                return Err(invalid_arg(
                    "separated set",
                    format!("{label}: vertices {a} and {b} are at distance {d} < {radius}"),
                ));
            }
            let maximal = metric.maximality_violation(&good.vertices, &members, radius).is_none();
            if greedy && !maximal {
                return Err(invalid_arg("separated set", format!("{label}: greedy set is not maximal")));
            }
            let image = sofic.orbit_image_with(&perms, &members)?;
            let entropy = measure.marginal(&image)?.entropy();
            let size = members.len();
            let required = size as f64 * target;
            Ok(TestedSet {
                label,
                size,
                image_size: image.len(),
                entropy,
                ratio: if size == 0 { 0.0 } else { entropy / size as f64 },
                required,
                maximal,
                verdict: Verdict::from_bool(entropy >= required - ENTROPY_TOL),
                members,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let verdict = Verdict::from_bool(sets.iter().all(|s| s.verdict.passed()));
    let mut family: Vec<String> = sampler.orders.iter().map(|o| format!("greedy:{}", o.label())).collect();
    if !sampler.extra_sets.is_empty() {
        family.push(format!("user sets: {}", sampler.extra_sets.len()));
    }
    Ok(MixingCertificate {
        version: REPORT_VERSION,
        window: window.iter().map(|g| g.to_string()).collect(),
        epsilon,
        radius,
        edge_radius: metric.edge_radius(),
        good_set: GoodSetSummary {
            description: good.description.clone(),
            size: good.vertices.len(),
        },
        process_entropy,
        target,
        family,
        sets,
        verdict,
    })
}

/// Covering-number bound on one enumerable measure.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Lemma1Report {
    pub sites: usize,
    pub alphabet: usize,
    pub epsilon: f64,
    pub entropy: f64,
    pub cov: usize,
    pub log_cov: f64,
    pub log_config_count: f64,
    pub binary_entropy_eps: f64,
    pub bound: f64,
    pub slack: f64,
    pub verdict: Verdict,
}

/// Checks `H(mu) <= log cov_eps(mu) + eps log|A^V| + H(eps)`, for
/// `0 < eps <= 1/2`.
pub fn lemma1_bound_check(mu: &ExplicitMeasure, epsilon: f64) -> Result<Lemma1Report> {
    if !(epsilon > 0.0 && epsilon <= 0.5) {
        return Err(invalid_arg("epsilon", format!("{epsilon} is outside (0, 1/2]")));
    }
    let cov = cov_epsilon_explicit(mu, epsilon)?;
    let entropy = mu.entropy();
    let log_cov = (cov as f64).ln();
    let log_config_count = mu.sites().len() as f64 * (mu.alphabet() as f64).ln();
    let h_eps = binary_entropy(epsilon)?;
    let bound = log_cov + epsilon * log_config_count + h_eps;
    Ok(Lemma1Report {
        sites: mu.sites().len(),
        alphabet: mu.alphabet(),
        epsilon,
        entropy,
        cov,
        log_cov,
        log_config_count,
        binary_entropy_eps: h_eps,
        bound,
        slack: bound - entropy,
        verdict: Verdict::from_bool(entropy <= bound + 1e-12),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Lemma1Row {
    pub sites: usize,
    pub entropy_per_site: f64,
    pub log_cov_per_site: f64,
    pub verdict: Verdict,
}

/// Per-site entropy against per-site log covering number along a sequence.
pub fn lemma1_sequence(measures: &[ExplicitMeasure], epsilon: f64) -> Result<Vec<Lemma1Row>> {
    measures
        .iter()
        .map(|m| {
            let r = lemma1_bound_check(m, epsilon)?;
            let n = r.sites.max(1) as f64;
            Ok(Lemma1Row {
                sites: r.sites,
                entropy_per_site: r.entropy / n,
                log_cov_per_site: r.log_cov / n,
                verdict: r.verdict,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Lemma4Report {
    pub set: Vec<usize>,
    pub h_alpha: f64,
    pub h_beta: f64,
    pub conditional_sum: f64,
    pub rhs: f64,
    pub slack: f64,
    pub verdict: Verdict,
}

/// Checks `H(alpha) <= H(beta) + sum_s H(alpha_s | beta_s)` where `alpha`
/// reads `sigma^F(S)`, `beta` reads `phi` at every `s` in `S`, `alpha_s` is
/// the pullback name of `s` and `beta_s = phi(alpha_s)`.
pub fn lemma4_chain_check(mu: &ExplicitMeasure, sofic: &SoficMap, phi: &LocalObservable, set: &[usize]) -> Result<Lemma4Report> {
    let perms = sofic.evaluate_all(&phi.window)?;
    let mut set = set.to_vec();
    set.sort_unstable();
    set.dedup();
    let image = sofic.orbit_image_with(&perms, &set)?;
    let table = Arc::new(phi.table.clone());
    let names: Vec<Vec<usize>> = set.iter().map(|&s| perms.iter().map(|p| p.apply(s)).collect()).collect();
    let beta_s: Vec<Observable> = names
        .iter()
        .map(|inputs| Observable::Table {
            inputs: inputs.clone(),
            table: table.clone(),
        })
        .collect();
    let alpha = Observable::Project(image);
    let beta = Observable::Tuple(beta_s.clone());
    let h_alpha = mu.observable_entropy(&alpha)?;
    let h_beta = mu.observable_entropy(&beta)?;
    let mut conditional_sum = 0.0;
    for (inputs, b) in names.iter().zip(&beta_s) {
        conditional_sum += crate::measures::conditional_entropy(mu, &Observable::Project(inputs.clone()), b)?;
    }
    let rhs = h_beta + conditional_sum;
    Ok(Lemma4Report {
        set,
        h_alpha,
        h_beta,
        conditional_sum,
        rhs,
        slack: rhs - h_alpha,
        verdict: Verdict::from_bool(h_alpha <= rhs + ENTROPY_TOL),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MarginalMethod {
    Exact,
    Empirical,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceOptions {
    pub delta: f64,
    /// Samples for the empirical fallback; zero forbids it.
    pub samples: usize,
    pub seed: u64,
    /// Test this many seeded vertices instead of all of them.
    pub vertex_sample: Option<usize>,
    pub cap: usize,
    pub bins: usize,
}

impl ConvergenceOptions {
    pub fn new(delta: f64) -> Self {
        ConvergenceOptions {
            delta,
            samples: 0,
            seed: 0,
            vertex_sample: None,
            cap: crate::measures::DEFAULT_ENUM_CAP,
            bins: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub version: u32,
    pub window: Vec<String>,
    pub delta: f64,
    pub method: MarginalMethod,
    pub vertices_tested: usize,
    pub fraction_below: f64,
    pub exact_zero_fraction: f64,
    pub mean_tv: f64,
    pub max_tv: f64,
    pub histogram: Vec<HistogramBin>,
    /// `(vertex, tv)` for every tested vertex.
    #[serde(skip)]
    pub per_vertex: Vec<(usize, f64)>,
}

fn pullback_law(measure: &Measure, images: &[usize], cap: usize) -> Result<ExplicitMeasure> {
    let mut unique = images.to_vec();
    unique.sort_unstable();
    unique.dedup();
    let joint = measure.marginal(&unique)?.to_explicit(cap)?;
    let masses = joint.pushforward(&Observable::Project(images.to_vec()))?;
    Ok(ExplicitMeasure::from_masses(joint.alphabet(), (0..images.len()).collect(), masses))
}

/// Total variation between each vertex's pullback marginal and `mu_F`.
pub fn diagnose_local_convergence(
    measure: &Measure,
    process: &dyn ProcessOracle,
    sofic: &SoficMap,
    window: &[GroupWord],
    options: &ConvergenceOptions,
) -> Result<ConvergenceReport> {
    if options.delta.is_nan() || options.delta <= 0.0 {
        return Err(invalid_arg("delta", "must be positive"));
    }
    let n = sofic.n();
    let perms = sofic.evaluate_all(window)?;
    let target = process
        .marginal(window)?
        .to_explicit(options.cap.max(crate::measures::DEFAULT_ENUM_CAP))?;
    let vertices: Vec<usize> = match options.vertex_sample {
        Some(k) if k < n => {
            let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
            let mut v = sample_indices(&mut rng, n, k).into_vec();
            v.sort_unstable();
            v
        }
        _ => (0..n).collect(),
    };
    let images = |v: usize| -> Vec<usize> { perms.iter().map(|p| p.apply(v)).collect() };

    let exact: Result<Vec<f64>> = vertices
        .par_iter()
        .map(|&v| total_variation(&pullback_law(measure, &images(v), options.cap)?, &target))
        .collect();
    let (method, tvs) = match exact {
        Ok(t) => (MarginalMethod::Exact, t),
        Err(Error::CapExceeded { .. }) if options.samples > 0 => {
            let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
            let draws: Vec<Vec<Symbol>> = (0..options.samples).map(|_| measure.sample(&mut rng)).collect();
            let w = 1.0 / options.samples as f64;
            let tvs = vertices
                .par_iter()
                .map(|&v| {
                    let im = images(v);
                    let mut masses: BTreeMap<Vec<Symbol>, f64> = BTreeMap::new();
                    for d in &draws {
                        *masses.entry(im.iter().map(|&x| d[x]).collect()).or_insert(0.0) += w;
                    }
                    total_variation(
                        &ExplicitMeasure::from_masses(target.alphabet(), (0..im.len()).collect(), masses),
                        &target,
                    )
                })
                .collect::<Result<Vec<_>>>()?;
            (MarginalMethod::Empirical, tvs)
        }
        Err(Error::CapExceeded { what, size, cap }) => {
            return Err(invalid_arg(
                "samples",
                format!("{what} of size {size} exceeds the cap {cap} and the sample budget is zero"),
            ))
        }
        Err(e) => return Err(e),
    };
    let count = tvs.len().max(1) as f64;
    let bins = options.bins.max(1);
    let mut histogram: Vec<HistogramBin> = (0..bins)
        .map(|i| HistogramBin {
            lo: i as f64 / bins as f64,
            hi: (i + 1) as f64 / bins as f64,
            count: 0,
        })
        .collect();
    for &t in &tvs {
        let i = ((t * bins as f64) as usize).min(bins - 1);
        histogram[i].count += 1;
    }
    Ok(ConvergenceReport {
        version: REPORT_VERSION,
        window: window.iter().map(|g| g.to_string()).collect(),
        delta: options.delta,
        method,
        vertices_tested: tvs.len(),
        fraction_below: tvs.iter().filter(|&&t| t < options.delta).count() as f64 / count,
        exact_zero_fraction: tvs.iter().filter(|&&t| t == 0.0).count() as f64 / count,
        mean_tv: tvs.iter().sum::<f64>() / count,
        max_tv: tvs.iter().copied().fold(0.0, f64::max),
        histogram,
        per_vertex: vertices.into_iter().zip(tvs).collect(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Theorem1Options {
    pub radius: f64,
    pub epsilon: f64,
    pub cap: usize,
    /// Samples for the plug-in estimate; zero forbids it.
    pub samples: usize,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EntropyMethod {
    Exact,
    Estimate,
}

/// The finite-`n` quantities of the entropy lower bound argument.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Theorem1Report {
    pub version: u32,
    pub radius: f64,
    pub epsilon: f64,
    pub observable_window: Vec<String>,
    pub ball_size: usize,
    pub good_size: usize,
    pub light_size: usize,
    pub y_size: usize,
    pub separated_size: usize,
    /// `|S| K >= |Y|`, checked exactly.
    pub covering_check: Verdict,
    pub observable_entropy: f64,
    pub target_per_vertex: f64,
    pub model_entropy_per_vertex: f64,
    pub entropy_method: EntropyMethod,
    /// Per-vertex model entropy against the target; labeled by `entropy_method`.
    pub entropy_comparison: Verdict,
    /// Verdict over the exactly checkable inequalities only.
    pub verdict: Verdict,
}

/// Exact `H(psi^sigma_* mu)`: blocks linked by a common observable window are
/// enumerated jointly, independent groups add up.
fn pushforward_entropy_exact(measure: &Measure, sofic: &SoficMap, psi: &LocalObservable, cap: usize) -> Result<f64> {
    let perms = sofic.evaluate_all(&psi.window)?;
    let table = Arc::new(psi.table.clone());
    let n = sofic.n();
    let inputs: Vec<Vec<usize>> = (0..n).map(|v| perms.iter().map(|p| p.apply(v)).collect()).collect();
    let obs = |v: usize| Observable::Table {
        inputs: inputs[v].clone(),
        table: table.clone(),
    };
    let alphabet = measure.alphabet();
    let complete = (alphabet as u128).checked_pow(psi.window.len() as u32) == Some(psi.table.len() as u128);
    let mut outputs: Vec<Symbol> = psi.table.values().copied().collect();
    outputs.sort_unstable();
    outputs.dedup();
    if complete && outputs.len() == psi.table.len() {
        // an injective table recovers the configuration on every window
        let mut union: Vec<usize> = inputs.iter().flatten().copied().collect();
        union.sort_unstable();
        union.dedup();
        return Ok(measure.marginal(&union)?.entropy());
    }
    let bp = match measure {
        Measure::Explicit(m) => {
            return m.observable_entropy(&Observable::Tuple((0..n).map(obs).collect()));
        }
        Measure::BlockProduct(bp) => bp,
    };
    let nb = bp.blocks().len();
    let mut parent: Vec<usize> = (0..nb).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let touching: Vec<Vec<usize>> = inputs.iter().map(|im| bp.blocks_touching(im)).collect();
    for t in &touching {
        for w in t.windows(2) {
            let (a, b) = (find(&mut parent, w[0]), find(&mut parent, w[1]));
            if a != b {
                parent[a] = b;
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (v, t) in touching.iter().enumerate() {
        // outputs reading only filler are constant
        if let Some(&b) = t.first() {
            groups.entry(find(&mut parent, b)).or_default().push(v);
        }
    }
    let groups: Vec<Vec<usize>> = groups.into_values().collect();
    let parts: Vec<f64> = groups
        .par_iter()
        .map(|outs| {
            let mut sites: Vec<usize> = outs.iter().flat_map(|&v| inputs[v].iter().copied()).collect();
            for &v in outs {
                for &b in &touching[v] {
                    sites.extend_from_slice(&bp.blocks()[b].sites);
                }
            }
            sites.sort_unstable();
            sites.dedup();
            let joint = bp.marginal(&sites)?.to_explicit(cap)?;
            joint.observable_entropy(&Observable::Tuple(outs.iter().map(|&v| obs(v)).collect()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(parts.iter().sum())
}

fn pushforward_entropy_estimate(measure: &Measure, sofic: &SoficMap, psi: &LocalObservable, samples: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts: HashMap<Vec<Symbol>, usize> = HashMap::new();
    for _ in 0..samples {
        let x = measure.sample(&mut rng);
        *counts.entry(sofic.push_observable(psi, &x)?).or_insert(0) += 1;
    }
    let mut c: Vec<usize> = counts.into_values().collect();
    c.sort_unstable();
    Ok(entropy_of(c.into_iter().map(|k| k as f64 / samples as f64)))
}

/// Builds `K`, `Y = W ∩ W'`, a greedy maximal separated `S ⊆ Y`, and compares
/// the per-vertex entropy of `psi^sigma_* mu` with `H_mu(psi) / (8K + 1)`.
pub fn theorem1_report(
    measure: &Measure,
    sofic: &SoficMap,
    metric: &ModelMetric,
    process: &dyn ProcessOracle,
    psi: &LocalObservable,
    good: &GoodSet,
    options: &Theorem1Options,
) -> Result<Theorem1Report> {
    let r = options.radius;
    if !(r > 0.0 && r <= metric.edge_radius()) {
        return Err(invalid_arg("radius", format!("need 0 < r <= edge radius {}, got {r}", metric.edge_radius())));
    }
    let ball_size = sofic.presentation().ball_with_cap(r, options.cap)?.len();
    let light: Vec<bool> = (0..sofic.n())
        .into_par_iter()
        .map(|v| metric.ball(v, r).len() <= ball_size)
        .collect();
    let light_size = light.iter().filter(|&&b| b).count();
    let mut y: Vec<usize> = good.vertices.iter().copied().filter(|&v| v < light.len() && light[v]).collect();
    y.sort_unstable();
    y.dedup();
    let s = metric.separated_set_greedy(&y, r, &VertexOrder::Ascending)?;
    let covering_check = Verdict::from_bool(s.members.len() * ball_size >= y.len());

    let window_law = process.marginal(&psi.window)?.to_explicit(options.cap)?;
    let observable_entropy = window_law.observable_entropy(&Observable::Table {
        inputs: (0..psi.window.len()).collect(),
        table: Arc::new(psi.table.clone()),
    })?;
    let target_per_vertex = observable_entropy / (8 * ball_size + 1) as f64;
    let (total, entropy_method) = match pushforward_entropy_exact(measure, sofic, psi, options.cap) {
        Ok(h) => (h, EntropyMethod::Exact),
        Err(Error::CapExceeded { .. }) if options.samples > 0 => (
            pushforward_entropy_estimate(measure, sofic, psi, options.samples, options.seed)?,
            EntropyMethod::Estimate,
        ),
        Err(e) => return Err(e),
    };
    let model_entropy_per_vertex = total / sofic.n() as f64;
    Ok(Theorem1Report {
        version: REPORT_VERSION,
        radius: r,
        epsilon: options.epsilon,
        observable_window: psi.window.iter().map(|g| g.to_string()).collect(),
        ball_size,
        good_size: good.vertices.len(),
        light_size,
        y_size: y.len(),
        separated_size: s.members.len(),
        covering_check,
        observable_entropy,
        target_per_vertex,
        model_entropy_per_vertex,
        entropy_method,
        entropy_comparison: Verdict::from_bool(model_entropy_per_vertex >= target_per_vertex - ENTROPY_TOL),
        verdict: covering_check,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construction::{build_model_measure, extract_cycles, partition_paths};
    use crate::measures::{Atom, BlockProductMeasure};
    use crate::modelmetric::injective_vertices;
    use crate::processes::Process;
    use crate::GroupPresentation;

    const LN2: f64 = std::f64::consts::LN_2;

    fn z(v: &[i64]) -> Vec<GroupWord> {
        v.iter().map(|&x| GroupWord::Abelian(vec![x])).collect()
    }

    fn coin() -> Process {
        Process::bernoulli(vec![0.5, 0.5], GroupPresentation::integers()).unwrap()
    }

    #[test]
    fn bernoulli_certificate_ratio_is_exact() {
        let s = SoficMap::cycle(60).unwrap();
        let metric = ModelMetric::build(&s, 5.0).unwrap();
        let window = z(&[-1, 0, 1]);
        let mu = Measure::BlockProduct(BlockProductMeasure::iid(&[0.5, 0.5], (0..60).collect()).unwrap());
        let good = GoodSet {
            description: "injective".into(),
            vertices: injective_vertices(&s, &window).unwrap(),
        };
        let sampler = SetSampler::standard(3, 9);
        let cert = certify_uniform_model_mixing(
            &mu,
            &s,
            &metric,
            &coin(),
            &MixingProblem {
                window: &window,
                epsilon: 0.01,
                radius: 4.0,
                good: &good,
                sampler: &sampler,
            },
        )
        .unwrap();
        assert_eq!(cert.verdict, Verdict::Pass);
        assert_eq!(cert.sets.len(), 5);
        for t in &cert.sets {
            assert!((t.ratio - t.image_size as f64 * LN2 / t.size as f64).abs() < 1e-9);
            assert!(t.maximal);
        }
    }

    #[test]
    fn correlated_measure_fails() {
        let n = 12;
        let s = SoficMap::cycle(n).unwrap();
        let metric = ModelMetric::build(&s, 3.0).unwrap();
        let atoms = vec![
            Atom {
                config: vec![0; n],
                p: 0.5,
            },
            Atom {
                config: vec![1; n],
                p: 0.5,
            },
        ];
        let mu = Measure::Explicit(ExplicitMeasure::new(2, (0..n).collect(), atoms).unwrap());
        let window = z(&[0]);
        let good = GoodSet {
            description: "all".into(),
            vertices: (0..n).collect(),
        };
        let sampler = SetSampler::standard(0, 0);
        let cert = certify_uniform_model_mixing(
            &mu,
            &s,
            &metric,
            &coin(),
            &MixingProblem {
                window: &window,
                epsilon: 0.1,
                radius: 2.0,
                good: &good,
                sampler: &sampler,
            },
        )
        .unwrap();
        assert_eq!(cert.verdict, Verdict::Fail);
        assert!((cert.sets[0].entropy - LN2).abs() < 1e-12);
    }

    #[test]
    fn certificate_rejects_unseparated_user_set() {
        let s = SoficMap::cycle(20).unwrap();
        let metric = ModelMetric::build(&s, 5.0).unwrap();
        let mu = Measure::BlockProduct(BlockProductMeasure::iid(&[0.5, 0.5], (0..20).collect()).unwrap());
        let good = GoodSet {
            description: "all".into(),
            vertices: (0..20).collect(),
        };
        let sampler = SetSampler {
            orders: vec![],
            extra_sets: vec![vec![0, 2]],
        };
        let window = z(&[0]);
        let problem = MixingProblem {
            window: &window,
            epsilon: 0.1,
            radius: 4.0,
            good: &good,
            sampler: &sampler,
        };
        assert!(certify_uniform_model_mixing(&mu, &s, &metric, &coin(), &problem).is_err());
        let far = SetSampler {
            orders: vec![],
            extra_sets: vec![vec![0, 10]],
        };
        let ok = certify_uniform_model_mixing(&mu, &s, &metric, &coin(), &MixingProblem { sampler: &far, ..problem }).unwrap();
        assert!(!ok.sets[0].maximal);
        let close = MixingProblem { radius: 5.0, ..problem };
        assert!(certify_uniform_model_mixing(&mu, &s, &metric, &coin(), &close).is_err());
    }

    #[test]
    fn lemma1_examples() {
        let pt = ExplicitMeasure::point(2, vec![0, 1, 2], vec![0, 1, 1]).unwrap();
        assert_eq!(lemma1_bound_check(&pt, 0.1).unwrap().verdict, Verdict::Pass);
        let u = ExplicitMeasure::uniform(2, (0..6).collect(), 1000).unwrap();
        let r = lemma1_bound_check(&u, 0.2).unwrap();
        assert_eq!(r.cov, 52);
        assert_eq!(r.verdict, Verdict::Pass);
        assert!(r.slack > 0.0);
        assert!(lemma1_bound_check(&u, 0.6).is_err());
        let rows = lemma1_sequence(&[pt, u], 0.2).unwrap();
        assert_eq!(rows.len(), 2);
        assert!((rows[1].entropy_per_site - LN2).abs() < 1e-12);
    }

    #[test]
    fn lemma4_identity_and_constant() {
        let s = SoficMap::cycle(4).unwrap();
        let window = z(&[0, 1]);
        let mu = ExplicitMeasure::new(
            2,
            (0..4).collect(),
            vec![
                Atom {
                    config: vec![0, 0, 1, 1],
                    p: 0.5,
                },
                Atom {
                    config: vec![1, 0, 1, 0],
                    p: 0.25,
                },
                Atom {
                    config: vec![0, 1, 1, 0],
                    p: 0.25,
                },
            ],
        )
        .unwrap();
        let full = LocalObservable::from_fn(window.clone(), 2, |p| p[0] * 2 + p[1]);
        let r = lemma4_chain_check(&mu, &s, &full, &[0, 2]).unwrap();
        assert!(r.conditional_sum.abs() < 1e-12);
        assert!((r.h_alpha - r.h_beta).abs() < 1e-12);
        let constant = LocalObservable::constant(window, 2, 0);
        let r = lemma4_chain_check(&mu, &s, &constant, &[0, 2]).unwrap();
        assert_eq!(r.h_beta, 0.0);
        assert_eq!(r.verdict, Verdict::Pass);
    }

    #[test]
    fn convergence_on_bernoulli_is_exact_zero() {
        let s = SoficMap::cycle(30).unwrap();
        let mu = Measure::BlockProduct(BlockProductMeasure::iid(&[0.3, 0.7], (0..30).collect()).unwrap());
        let p = Process::bernoulli(vec![0.3, 0.7], GroupPresentation::integers()).unwrap();
        let r = diagnose_local_convergence(&mu, &p, &s, &z(&[0, 1, 3]), &ConvergenceOptions::new(0.01)).unwrap();
        assert!(r.max_tv < 1e-15);
        assert_eq!(r.fraction_below, 1.0);
        assert_eq!(r.method, MarginalMethod::Exact);
    }

    #[test]
    fn convergence_detects_mismatch() {
        let s = SoficMap::cycle(256).unwrap();
        let part = partition_paths(&extract_cycles(&s, &z(&[1])[0]).unwrap(), 16, 0).unwrap();
        let model = build_model_measure(&Process::symmetric_flip(0.25).unwrap(), &part, None).unwrap();
        let mu = Measure::BlockProduct(model);
        let good = Process::symmetric_flip(0.25).unwrap();
        let r = diagnose_local_convergence(&mu, &good, &s, &z(&[0, 1]), &ConvergenceOptions::new(0.05)).unwrap();
        assert!((r.exact_zero_fraction - 15.0 / 16.0).abs() < 1e-12);
        let bad = Process::symmetric_flip(0.4).unwrap();
        let r = diagnose_local_convergence(&mu, &bad, &s, &z(&[0, 1]), &ConvergenceOptions::new(0.01)).unwrap();
        assert_eq!(r.fraction_below, 0.0);
    }

    #[test]
    fn empirical_fallback_needs_samples() {
        let s = SoficMap::cycle(40).unwrap();
        let mu = Measure::BlockProduct(BlockProductMeasure::iid(&[0.5, 0.5], (0..40).collect()).unwrap());
        let mut opts = ConvergenceOptions::new(0.2);
        opts.cap = 1;
        assert!(diagnose_local_convergence(&mu, &coin(), &s, &z(&[0, 1]), &opts).is_err());
        opts.samples = 4000;
        opts.seed = 3;
        let r = diagnose_local_convergence(&mu, &coin(), &s, &z(&[0, 1]), &opts).unwrap();
        assert_eq!(r.method, MarginalMethod::Empirical);
        assert!(r.fraction_below > 0.9);
    }

    #[test]
    fn theorem1_bernoulli_cycle() {
        let s = SoficMap::cycle(256).unwrap();
        let metric = ModelMetric::build(&s, 5.0).unwrap();
        let mu = Measure::BlockProduct(BlockProductMeasure::iid(&[0.5, 0.5], (0..256).collect()).unwrap());
        let psi = LocalObservable::projection(z(&[0]), 0, 2);
        let good = GoodSet {
            description: "all".into(),
            vertices: (0..256).collect(),
        };
        let opts = Theorem1Options {
            radius: 4.0,
            epsilon: 0.1,
            cap: 1 << 16,
            samples: 0,
            seed: 0,
        };
        let r = theorem1_report(&mu, &s, &metric, &coin(), &psi, &good, &opts).unwrap();
        assert_eq!(r.ball_size, 9);
        assert_eq!(r.covering_check, Verdict::Pass);
        assert_eq!(r.entropy_method, EntropyMethod::Exact);
        assert!((r.model_entropy_per_vertex - LN2).abs() < 1e-12);
    }

    #[test]
    fn theorem1_point_mass() {
        let s = SoficMap::cycle(8).unwrap();
        let metric = ModelMetric::build(&s, 3.0).unwrap();
        let mu = Measure::Explicit(ExplicitMeasure::point(2, (0..8).collect(), vec![0; 8]).unwrap());
        let p = Process::bernoulli(vec![1.0, 0.0], GroupPresentation::integers()).unwrap();
        let psi = LocalObservable::projection(z(&[0, 1]), 1, 2);
        let good = GoodSet {
            description: "all".into(),
            vertices: (0..8).collect(),
        };
        let opts = Theorem1Options {
            radius: 2.0,
            epsilon: 0.1,
            cap: 1 << 10,
            samples: 0,
            seed: 0,
        };
        let r = theorem1_report(&mu, &s, &metric, &p, &psi, &good, &opts).unwrap();
        assert_eq!(r.model_entropy_per_vertex, 0.0);
        assert_eq!(r.observable_entropy, 0.0);
        assert_eq!(r.verdict, Verdict::Pass);
    }
}
