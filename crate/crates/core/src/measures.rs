//! Probability measures on `A^V` for a finite index set `V`.
//!
//! [`ExplicitMeasure`] keeps a sparse atom list and is the brute-force
//! reference. [`BlockProductMeasure`] is a product of independent block laws
//! with a deterministic filler; its marginals stay in block form and its
//! entropy is a sum of block entropies, so path-partition measures on
//! thousands of vertices are handled exactly.
//!
//! Entropies are in nats.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid_arg, Error, Result};
use crate::Symbol;

/// Atoms below this mass are dropped.
pub const ATOM_FLOOR: f64 = 1e-15;
/// Allowed deviation of a user-supplied total mass from one.
pub const MASS_TOL: f64 = 1e-12;
/// Default refusal threshold for enumerations.
pub const DEFAULT_ENUM_CAP: usize = 1 << 20;

/// `-sum p log p` over the given masses.
pub fn entropy_of(probs: impl IntoIterator<Item = f64>) -> f64 {
    probs
        .into_iter()
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.ln())
        .sum::<f64>()
        .max(0.0)
}

/// `H(p) = -p log p - (1-p) log(1-p)`.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(invalid_arg("p", format!("{p} is outside [0, 1]")));
    }
    Ok(entropy_of([p, 1.0 - p]))
}

fn check_distribution(name: &'static str, probs: &[f64]) -> Result<()> {
    if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
        return Err(invalid_arg(name, "entries must be finite and nonnegative"));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > MASS_TOL {
        return Err(invalid_arg(name, format!("entries sum to {total}, not 1")));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub config: Vec<Symbol>,
    pub p: f64,
}

/// A probability measure on `A^sites` given by its atoms.
///
/// Atoms are kept sorted by configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ExplicitFile", into = "ExplicitFile")]
pub struct ExplicitMeasure {
    alphabet: usize,
    sites: Vec<usize>,
    atoms: Vec<Atom>,
}

#[derive(Serialize, Deserialize)]
struct ExplicitFile {
    alphabet: usize,
    sites: Vec<usize>,
    atoms: Vec<Atom>,
}

impl TryFrom<ExplicitFile> for ExplicitMeasure {
    type Error = Error;
    fn try_from(f: ExplicitFile) -> Result<Self> {
        ExplicitMeasure::new(f.alphabet, f.sites, f.atoms)
    }
}

impl From<ExplicitMeasure> for ExplicitFile {
    fn from(m: ExplicitMeasure) -> Self {
        ExplicitFile {
            alphabet: m.alphabet,
            sites: m.sites,
            atoms: m.atoms,
        }
    }
}

fn check_sites(sites: &[usize]) -> Result<()> {
    let mut sorted = sites.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidMeasure("repeated site".into()));
    }
    Ok(())
}

impl ExplicitMeasure {
    /// Validates positivity, distinctness and total mass within [`MASS_TOL`].
    pub fn new(alphabet: usize, sites: Vec<usize>, atoms: Vec<Atom>) -> Result<Self> {
        if alphabet == 0 || alphabet > Symbol::MAX as usize + 1 {
            return Err(Error::InvalidMeasure(format!("alphabet size {alphabet} unsupported")));
        }
        check_sites(&sites)?;
        let mut total = 0.0;
        for a in &atoms {
            if !(a.p.is_finite() && a.p > 0.0) {
                return Err(Error::InvalidMeasure(format!("atom mass {} is not positive", a.p)));
            }
            if a.config.len() != sites.len() {
                return Err(Error::InvalidMeasure("configuration length differs from site count".into()));
            }
            if a.config.iter().any(|&s| s as usize >= alphabet) {
                return Err(Error::InvalidMeasure("symbol outside the alphabet".into()));
            }
            total += a.p;
        }
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidMeasure(format!("total mass {total} differs from 1")));
        }
        let mut atoms = atoms;
        atoms.sort_by(|a, b| a.config.cmp(&b.config));
        if atoms.windows(2).any(|w| w[0].config == w[1].config) {
            return Err(Error::InvalidMeasure("repeated configuration".into()));
        }
        atoms.retain(|a| a.p >= ATOM_FLOOR);
        Ok(ExplicitMeasure { alphabet, sites, atoms })
    }

    /// Builds from accumulated masses without the strict mass check.
    pub(crate) fn from_masses(alphabet: usize, sites: Vec<usize>, masses: BTreeMap<Vec<Symbol>, f64>) -> Self {
        let atoms = masses
            .into_iter()
            .filter(|(_, p)| *p >= ATOM_FLOOR)
            .map(|(config, p)| Atom { config, p })
            .collect();
        ExplicitMeasure { alphabet, sites, atoms }
    }

    /// The point mass at `config`.
    pub fn point(alphabet: usize, sites: Vec<usize>, config: Vec<Symbol>) -> Result<Self> {
        Self::new(alphabet, sites, vec![Atom { config, p: 1.0 }])
    }

    /// The uniform measure on all of `A^sites`.
    pub fn uniform(alphabet: usize, sites: Vec<usize>, cap: usize) -> Result<Self> {
        let size = (alphabet as u128).checked_pow(sites.len() as u32).unwrap_or(u128::MAX);
        if size > cap as u128 {
            return Err(Error::CapExceeded {
                what: "configuration count",
                size,
                cap: cap as u128,
            });
        }
        let p = 1.0 / size as f64;
        let atoms = crate::sofic::all_patterns(alphabet, sites.len())
            .into_iter()
            .map(|config| Atom { config, p })
            .collect();
        Ok(ExplicitMeasure {
            alphabet,
            sites,
            atoms,
        })
    }

    /// `eta^{sites}` for a distribution `eta` on the alphabet.
    pub fn product(eta: &[f64], sites: Vec<usize>, cap: usize) -> Result<Self> {
        check_distribution("eta", eta)?;
        let size = (eta.len() as u128).checked_pow(sites.len() as u32).unwrap_or(u128::MAX);
        if size > cap as u128 {
            return Err(Error::CapExceeded {
                what: "configuration count",
                size,
                cap: cap as u128,
            });
        }
        let masses = crate::sofic::all_patterns(eta.len(), sites.len())
            .into_iter()
            .map(|c| {
                let p = c.iter().map(|&a| eta[a as usize]).product();
                (c, p)
            })
            .collect();
        Ok(Self::from_masses(eta.len(), sites, masses))
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn support_size(&self) -> usize {
        self.atoms.len()
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.p).sum()
    }

    pub fn entropy(&self) -> f64 {
        entropy_of(self.atoms.iter().map(|a| a.p))
    }

    pub fn probability_of(&self, config: &[Symbol]) -> f64 {
        self.atoms
            .binary_search_by(|a| a.config.as_slice().cmp(config))
            .map(|i| self.atoms[i].p)
            .unwrap_or(0.0)
    }

    fn positions(&self, subset: &[usize]) -> Result<Vec<usize>> {
        let index: HashMap<usize, usize> = self.sites.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        subset
            .iter()
            .map(|s| index.get(s).copied().ok_or(Error::UnknownSite { vertex: *s }))
            .collect()
    }

    /// `pi_{S*} mu`, with coordinates in the order of `subset`.
    pub fn marginal(&self, subset: &[usize]) -> Result<ExplicitMeasure> {
        check_sites(subset)?;
        let pos = self.positions(subset)?;
        let mut masses: BTreeMap<Vec<Symbol>, f64> = BTreeMap::new();
        for a in &self.atoms {
            let key: Vec<Symbol> = pos.iter().map(|&i| a.config[i]).collect();
            *masses.entry(key).or_insert(0.0) += a.p;
        }
        Ok(Self::from_masses(self.alphabet, subset.to_vec(), masses))
    }

    /// Renames every site through `map`.
    pub fn relabel(&self, map: impl Fn(usize) -> usize) -> Result<ExplicitMeasure> {
        let sites: Vec<usize> = self.sites.iter().map(|&s| map(s)).collect();
        check_sites(&sites)?;
        Ok(ExplicitMeasure {
            alphabet: self.alphabet,
            sites,
            atoms: self.atoms.clone(),
        })
    }

    /// Reorders coordinates to follow `order`, a permutation of the sites.
    pub fn reorder(&self, order: &[usize]) -> Result<ExplicitMeasure> {
        if order.len() != self.sites.len() {
            return Err(invalid_arg("order", "must list every site exactly once"));
        }
        self.marginal(order)
    }

    /// Law of `obs` under this measure.
    pub fn pushforward(&self, obs: &Observable) -> Result<BTreeMap<Vec<Symbol>, f64>> {
        let index: HashMap<usize, usize> = self.sites.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        let mut out: BTreeMap<Vec<Symbol>, f64> = BTreeMap::new();
        for a in &self.atoms {
            let mut key = Vec::new();
            obs.eval_into(&index, &a.config, &mut key)?;
            *out.entry(key).or_insert(0.0) += a.p;
        }
        Ok(out)
    }

    /// `H(obs_* mu)`.
    pub fn observable_entropy(&self, obs: &Observable) -> Result<f64> {
        Ok(entropy_of(self.pushforward(obs)?.into_values()))
    }

    /// Samples a configuration aligned with [`Self::sites`].
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Symbol> {
        let u: f64 = rng.gen::<f64>() * self.total_mass();
        let mut acc = 0.0;
        for a in &self.atoms {
            acc += a.p;
            if u < acc {
                return a.config.clone();
            }
        }
        self.atoms.last().map(|a| a.config.clone()).unwrap_or_default()
    }

    /// Mass of the event `{config in event}`.
    pub fn mass_of(&self, event: &dyn Fn(&[Symbol]) -> bool) -> f64 {
        self.atoms.iter().filter(|a| event(&a.config)).map(|a| a.p).sum()
    }
}

/// Total variation distance between two measures on the same sites.
pub fn total_variation(a: &ExplicitMeasure, b: &ExplicitMeasure) -> Result<f64> {
    if a.sites() != b.sites() {
        return Err(invalid_arg("sites", "measures live on different index sets"));
    }
    let mut diff: BTreeMap<&[Symbol], f64> = BTreeMap::new();
    for atom in a.atoms() {
        *diff.entry(&atom.config).or_insert(0.0) += atom.p;
    }
    for atom in b.atoms() {
        *diff.entry(&atom.config).or_insert(0.0) -= atom.p;
    }
    Ok((0.5 * diff.values().map(|d| d.abs()).sum::<f64>()).clamp(0.0, 1.0))
}

/// `cov_eps`: the least number of atoms carrying mass strictly above `1 - eps`.
pub fn cov_epsilon_explicit(mu: &ExplicitMeasure, eps: f64) -> Result<usize> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(invalid_arg("eps", format!("{eps} is outside (0, 1)")));
    }
    let mut p: Vec<f64> = mu.atoms().iter().map(|a| a.p).collect();
    p.sort_by(|a, b| b.total_cmp(a));
    let target = 1.0 - eps;
    let mut acc = 0.0;
    for (i, x) in p.iter().enumerate() {
        acc += x;
        if acc > target {
            return Ok(i + 1);
        }
    }
    // rounding left the running sum at or below the target
    Ok(p.len().max(1))
}

/// Finite-valued observables on configurations, addressed by site.
#[derive(Clone, Debug, PartialEq)]
pub enum Observable {
    /// The restriction to the listed sites (repeats allowed).
    Project(Vec<usize>),
    /// A table applied to the values at the listed sites.
    Table {
        inputs: Vec<usize>,
        table: Arc<BTreeMap<Vec<Symbol>, Symbol>>,
    },
    Constant(Symbol),
    /// Concatenation of the component values.
    Tuple(Vec<Observable>),
}

impl Observable {
    fn eval_into(&self, index: &HashMap<usize, usize>, config: &[Symbol], out: &mut Vec<Symbol>) -> Result<()> {
        let at = |s: &usize| -> Result<Symbol> {
            index
                .get(s)
                .map(|&i| config[i])
                .ok_or(Error::UnknownSite { vertex: *s })
        };
        match self {
            Observable::Project(sites) => {
                for s in sites {
                    out.push(at(s)?);
                }
            }
            Observable::Table { inputs, table } => {
                let key = inputs.iter().map(at).collect::<Result<Vec<_>>>()?;
                out.push(*table.get(&key).ok_or(Error::MissingPattern(key))?);
            }
            Observable::Constant(c) => out.push(*c),
            Observable::Tuple(parts) => {
                for p in parts {
                    p.eval_into(index, config, out)?;
                }
            }
        }
        Ok(())
    }
}

/// `H(alpha | beta) = H(alpha, beta) - H(beta)`.
pub fn conditional_entropy(mu: &ExplicitMeasure, alpha: &Observable, beta: &Observable) -> Result<f64> {
    let joint = mu.observable_entropy(&Observable::Tuple(vec![alpha.clone(), beta.clone()]))?;
    let hb = mu.observable_entropy(beta)?;
    Ok((joint - hb).max(0.0))
}

/// `d_Rok(alpha, beta) = H(alpha | beta) + H(beta | alpha)`.
pub fn rokhlin_distance(mu: &ExplicitMeasure, alpha: &Observable, beta: &Observable) -> Result<f64> {
    let joint = mu.observable_entropy(&Observable::Tuple(vec![alpha.clone(), beta.clone()]))?;
    let ha = mu.observable_entropy(alpha)?;
    let hb = mu.observable_entropy(beta)?;
    Ok((2.0 * joint - ha - hb).max(0.0))
}

/// A homogeneous Markov chain on `0..alphabet`.
#[derive(Clone, Debug, PartialEq)]
pub struct MarkovChain {
    initial: Vec<f64>,
    transition: DMatrix<f64>,
    stationary: bool,
}

impl MarkovChain {
    /// `transition` is row-major, rows summing to one.
    pub fn new(initial: Vec<f64>, transition: Vec<Vec<f64>>) -> Result<Self> {
        let k = initial.len();
        if k == 0 || k > Symbol::MAX as usize + 1 {
            return Err(invalid_arg("initial", "alphabet size unsupported"));
        }
        check_distribution("initial", &initial)?;
        if transition.len() != k || transition.iter().any(|r| r.len() != k) {
            return Err(invalid_arg("transition", format!("expected a {k}x{k} matrix")));
        }
        for row in &transition {
            check_distribution("transition", row)?;
        }
        let transition = DMatrix::from_fn(k, k, |i, j| transition[i][j]);
        let pushed = transition.transpose() * DVector::from_vec(initial.clone());
        let stationary = pushed.iter().zip(&initial).all(|(a, b)| (a - b).abs() <= MASS_TOL);
        Ok(MarkovChain {
            initial,
            transition,
            stationary,
        })
    }

    /// Whether `initial P = initial` within [`MASS_TOL`]. Stationary chains
    /// use the initial law verbatim at every position.
    pub fn is_stationary(&self) -> bool {
        self.stationary
    }

    pub fn alphabet(&self) -> usize {
        self.initial.len()
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    pub fn transition_rows(&self) -> Vec<Vec<f64>> {
        (0..self.alphabet())
            .map(|i| self.transition.row(i).iter().copied().collect())
            .collect()
    }

    pub fn transition_power(&self, k: usize) -> DMatrix<f64> {
        let mut out = DMatrix::identity(self.alphabet(), self.alphabet());
        let mut base = self.transition.clone();
        let mut e = k;
        while e > 0 {
            if e & 1 == 1 {
                out = &out * &base;
            }
            base = &base * &base;
            e >>= 1;
        }
        out
    }

    /// Law of the state at `position`.
    pub fn distribution_at(&self, position: usize) -> Vec<f64> {
        if self.stationary || position == 0 {
            return self.initial.clone();
        }
        let init = DVector::from_vec(self.initial.clone());
        let d = self.transition_power(position).transpose() * init;
        d.iter().copied().collect()
    }

    /// Entropy of the joint law at strictly increasing `positions`, by the
    /// chain rule along the embedded chain with transitions `P^gap`.
    pub fn entropy_at(&self, positions: &[usize]) -> f64 {
        let Some(&first) = positions.first() else {
            return 0.0;
        };
        let mut dist = self.distribution_at(first);
        let mut h = entropy_of(dist.iter().copied());
        let mut cache: BTreeMap<usize, (DMatrix<f64>, Vec<f64>)> = BTreeMap::new();
        for w in positions.windows(2) {
            let gap = w[1] - w[0];
            let (pk, row_h) = cache.entry(gap).or_insert_with(|| {
                let pk = self.transition_power(gap);
                let hs = (0..pk.nrows()).map(|i| entropy_of(pk.row(i).iter().copied())).collect();
                (pk, hs)
            });
            h += dist.iter().zip(row_h.iter()).map(|(p, hr)| p * hr).sum::<f64>();
            if !self.stationary {
                let next = pk.transpose() * DVector::from_vec(dist);
                dist = next.iter().copied().collect();
            }
        }
        h
    }

    /// Law of the chain at `positions`, enumerated over `A^|positions|`.
    pub fn subset_marginal(&self, positions: &[usize], cap: usize) -> Result<ExplicitMeasure> {
        check_increasing(positions)?;
        let k = self.alphabet();
        let size = (k as u128).checked_pow(positions.len() as u32).unwrap_or(u128::MAX);
        if size > cap as u128 {
            return Err(Error::CapExceeded {
                what: "Markov subset enumeration",
                size,
                cap: cap as u128,
            });
        }
        let sites: Vec<usize> = (0..positions.len()).collect();
        if positions.is_empty() {
            return ExplicitMeasure::point(k, sites, Vec::new());
        }
        let start = self.distribution_at(positions[0]);
        let steps: Vec<DMatrix<f64>> = positions.windows(2).map(|w| self.transition_power(w[1] - w[0])).collect();
        let mut masses = BTreeMap::new();
        let mut stack: Vec<(Vec<Symbol>, f64)> = (0..k)
            .filter(|&a| start[a] > 0.0)
            .map(|a| (vec![a as Symbol], start[a]))
            .collect();
        while let Some((config, p)) = stack.pop() {
            if config.len() == positions.len() {
                masses.insert(config, p);
                continue;
            }
            let last = *config.last().unwrap() as usize;
            let step = &steps[config.len() - 1];
            for b in 0..k {
                let q = p * step[(last, b)];
                if q > 0.0 {
                    let mut c = config.clone();
                    c.push(b as Symbol);
                    stack.push((c, q));
                }
            }
        }
        Ok(ExplicitMeasure::from_masses(k, sites, masses))
    }

    fn sample_at<R: Rng + ?Sized>(&self, positions: &[usize], rng: &mut R) -> Vec<Symbol> {
        let mut out = Vec::with_capacity(positions.len());
        let Some(&first) = positions.first() else {
            return out;
        };
        let mut cur = draw(&self.distribution_at(first), rng);
        out.push(cur as Symbol);
        for w in positions.windows(2) {
            let pk = self.transition_power(w[1] - w[0]);
            let row: Vec<f64> = pk.row(cur).iter().copied().collect();
            cur = draw(&row, rng);
            out.push(cur as Symbol);
        }
        out
    }
}

fn draw<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen::<f64>() * probs.iter().sum::<f64>();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

fn check_increasing(positions: &[usize]) -> Result<()> {
    if positions.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid_arg("positions", "must be strictly increasing"));
    }
    Ok(())
}

/// Marginal of a Markov path law on a subset of its positions (0-based).
pub fn markov_subset_marginal(chain: &MarkovChain, positions: &[usize], cap: usize) -> Result<ExplicitMeasure> {
    chain.subset_marginal(positions, cap)
}

/// The law of one block.
#[derive(Clone, Debug, PartialEq)]
pub enum BlockLaw {
    /// Explicit measure whose sites are the local coordinates `0..len`.
    Explicit(ExplicitMeasure),
    /// A Markov chain read at the given increasing positions.
    Markov {
        chain: Arc<MarkovChain>,
        positions: Vec<usize>,
    },
}

impl BlockLaw {
    pub fn len(&self) -> usize {
        match self {
            BlockLaw::Explicit(m) => m.sites().len(),
            BlockLaw::Markov { positions, .. } => positions.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The path law of length `len`.
    pub fn markov_path(chain: Arc<MarkovChain>, len: usize) -> Self {
        BlockLaw::Markov {
            chain,
            positions: (0..len).collect(),
        }
    }

    pub fn alphabet(&self) -> usize {
        match self {
            BlockLaw::Explicit(m) => m.alphabet(),
            BlockLaw::Markov { chain, .. } => chain.alphabet(),
        }
    }

    pub fn entropy(&self) -> f64 {
        match self {
            BlockLaw::Explicit(m) => m.entropy(),
            BlockLaw::Markov { chain, positions } => chain.entropy_at(positions),
        }
    }

    /// Restriction to local coordinates `keep` (increasing).
    fn restrict(&self, keep: &[usize]) -> Result<BlockLaw> {
        Ok(match self {
            BlockLaw::Explicit(m) => {
                let sub = m.marginal(keep)?;
                BlockLaw::Explicit(sub.relabel_positions())
            }
            BlockLaw::Markov { chain, positions } => BlockLaw::Markov {
                chain: chain.clone(),
                positions: keep.iter().map(|&i| positions[i]).collect(),
            },
        })
    }

    pub fn to_explicit(&self, cap: usize) -> Result<ExplicitMeasure> {
        match self {
            BlockLaw::Explicit(m) => Ok(m.clone()),
            BlockLaw::Markov { chain, positions } => chain.subset_marginal(positions, cap),
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Symbol> {
        match self {
            BlockLaw::Explicit(m) => m.sample(rng),
            BlockLaw::Markov { chain, positions } => chain.sample_at(positions, rng),
        }
    }
}

impl ExplicitMeasure {
    fn relabel_positions(self) -> ExplicitMeasure {
        let sites = (0..self.sites.len()).collect();
        ExplicitMeasure { sites, ..self }
    }
}

/// One block: the law's local coordinate `j` sits at vertex `sites[j]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Block {
    pub sites: Vec<usize>,
    pub law: Arc<BlockLaw>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Owner {
    Block(usize, usize),
    Filler(Symbol),
}

/// Independent blocks plus a deterministic filler on the remaining sites.
#[derive(Clone, Debug)]
pub struct BlockProductMeasure {
    alphabet: usize,
    sites: Vec<usize>,
    blocks: Vec<Block>,
    filler: Vec<(usize, Symbol)>,
    owner: HashMap<usize, Owner>,
}

impl PartialEq for BlockProductMeasure {
    fn eq(&self, other: &Self) -> bool {
        self.alphabet == other.alphabet
            && self.sites == other.sites
            && self.blocks == other.blocks
            && self.filler == other.filler
    }
}

impl BlockProductMeasure {
    /// Checks that blocks and filler are disjoint and cover `sites` exactly.
    pub fn new(alphabet: usize, sites: Vec<usize>, blocks: Vec<Block>, filler: Vec<(usize, Symbol)>) -> Result<Self> {
        check_sites(&sites)?;
        let mut owner = HashMap::with_capacity(sites.len());
        for (b, block) in blocks.iter().enumerate() {
            if block.sites.len() != block.law.len() {
                return Err(Error::InvalidMeasure(format!("block {b} has {} sites but its law has {}", block.sites.len(), block.law.len())));
            }
            if block.law.alphabet() != alphabet {
                return Err(Error::InvalidMeasure(format!("block {b} uses a different alphabet")));
            }
            for (j, &s) in block.sites.iter().enumerate() {
                if owner.insert(s, Owner::Block(b, j)).is_some() {
                    return Err(Error::InvalidMeasure(format!("site {s} belongs to two blocks")));
                }
            }
        }
        for &(s, a) in &filler {
            if a as usize >= alphabet {
                return Err(Error::InvalidMeasure(format!("filler symbol {a} outside the alphabet")));
            }
            if owner.insert(s, Owner::Filler(a)).is_some() {
                return Err(Error::InvalidMeasure(format!("filler site {s} overlaps a block")));
            }
        }
        if owner.len() != sites.len() || sites.iter().any(|s| !owner.contains_key(s)) {
            return Err(Error::InvalidMeasure("blocks and filler do not cover the index set exactly".into()));
        }
        Ok(BlockProductMeasure {
            alphabet,
            sites,
            blocks,
            filler,
            owner,
        })
    }

    /// `eta^{sites}` as singleton blocks.
    pub fn iid(eta: &[f64], sites: Vec<usize>) -> Result<Self> {
        check_distribution("eta", eta)?;
        let atoms = eta
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(a, &p)| Atom {
                config: vec![a as Symbol],
                p,
            })
            .collect();
        let law = Arc::new(BlockLaw::Explicit(ExplicitMeasure::new(eta.len(), vec![0], atoms)?));
        let blocks = sites
            .iter()
            .map(|&s| Block {
                sites: vec![s],
                law: law.clone(),
            })
            .collect();
        Self::new(eta.len(), sites, blocks, Vec::new())
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn filler(&self) -> &[(usize, Symbol)] {
        &self.filler
    }

    /// Sum of block entropies; the filler is deterministic.
    pub fn entropy(&self) -> f64 {
        use rayon::prelude::*;
        // collected first so the summation order does not depend on scheduling
        let parts: Vec<f64> = self.blocks.par_iter().map(|b| b.law.entropy()).collect();
        parts.iter().sum()
    }

    /// Marginal on `subset`, still in block form.
    pub fn marginal(&self, subset: &[usize]) -> Result<BlockProductMeasure> {
        check_sites(subset)?;
        let mut chosen: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        let mut filler = Vec::new();
        for &s in subset {
            match self.owner.get(&s) {
                None => return Err(Error::UnknownSite { vertex: s }),
                Some(Owner::Filler(a)) => filler.push((s, *a)),
                Some(Owner::Block(b, j)) => chosen.entry(*b).or_default().push(*j),
            }
        }
        let mut blocks = Vec::with_capacity(chosen.len());
        for (b, mut local) in chosen {
            local.sort_unstable();
            let block = &self.blocks[b];
            let law = if local.len() == block.law.len() {
                block.law.clone()
            } else {
                Arc::new(block.law.restrict(&local)?)
            };
            blocks.push(Block {
                sites: local.iter().map(|&j| block.sites[j]).collect(),
                law,
            });
        }
        Self::new(self.alphabet, subset.to_vec(), blocks, filler)
    }

    /// Joint law as an explicit measure with coordinates in [`Self::sites`] order.
    pub fn to_explicit(&self, cap: usize) -> Result<ExplicitMeasure> {
        let laws = self
            .blocks
            .iter()
            .map(|b| b.law.to_explicit(cap))
            .collect::<Result<Vec<_>>>()?;
        let mut size: u128 = 1;
        for l in &laws {
            size = size.saturating_mul(l.support_size() as u128);
        }
        if size > cap as u128 {
            return Err(Error::CapExceeded {
                what: "joint support",
                size,
                cap: cap as u128,
            });
        }
        let pos: HashMap<usize, usize> = self.sites.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        let mut base = vec![0 as Symbol; self.sites.len()];
        for &(s, a) in &self.filler {
            base[pos[&s]] = a;
        }
        let mut partial: Vec<(Vec<Symbol>, f64)> = vec![(base, 1.0)];
        for (block, law) in self.blocks.iter().zip(&laws) {
            let mut next = Vec::with_capacity(partial.len() * law.support_size());
            for (config, p) in &partial {
                for atom in law.atoms() {
                    let mut c = config.clone();
                    for (j, &s) in block.sites.iter().enumerate() {
                        c[pos[&s]] = atom.config[j];
                    }
                    next.push((c, p * atom.p));
                }
            }
            partial = next;
        }
        let masses = partial.into_iter().collect();
        Ok(ExplicitMeasure::from_masses(self.alphabet, self.sites.clone(), masses))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Symbol> {
        let pos: HashMap<usize, usize> = self.sites.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        let mut out = vec![0 as Symbol; self.sites.len()];
        for &(s, a) in &self.filler {
            out[pos[&s]] = a;
        }
        for block in &self.blocks {
            for (j, a) in block.law.sample(rng).into_iter().enumerate() {
                out[pos[&block.sites[j]]] = a;
            }
        }
        out
    }

    /// Renames every site through `map`.
    pub fn relabel(&self, map: impl Fn(usize) -> usize) -> Result<BlockProductMeasure> {
        let blocks = self
            .blocks
            .iter()
            .map(|b| Block {
                sites: b.sites.iter().map(|&s| map(s)).collect(),
                law: b.law.clone(),
            })
            .collect();
        let filler = self.filler.iter().map(|&(s, a)| (map(s), a)).collect();
        Self::new(self.alphabet, self.sites.iter().map(|&s| map(s)).collect(), blocks, filler)
    }

    /// Blocks whose sites intersect `subset`.
    pub fn blocks_touching(&self, subset: &[usize]) -> Vec<usize> {
        let mut out: Vec<usize> = subset
            .iter()
            .filter_map(|s| match self.owner.get(s) {
                Some(Owner::Block(b, _)) => Some(*b),
                _ => None,
            })
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Index of the block holding site `s`, if any.
    pub fn block_of(&self, s: usize) -> Option<usize> {
        match self.owner.get(&s) {
            Some(Owner::Block(b, _)) => Some(*b),
            _ => None,
        }
    }
}

/// A measure on `A^V` in either representation.
#[derive(Clone, Debug, PartialEq)]
pub enum Measure {
    Explicit(ExplicitMeasure),
    BlockProduct(BlockProductMeasure),
}

impl From<ExplicitMeasure> for Measure {
    fn from(m: ExplicitMeasure) -> Self {
        Measure::Explicit(m)
    }
}

impl From<BlockProductMeasure> for Measure {
    fn from(m: BlockProductMeasure) -> Self {
        Measure::BlockProduct(m)
    }
}

impl Measure {
    pub fn alphabet(&self) -> usize {
        match self {
            Measure::Explicit(m) => m.alphabet(),
            Measure::BlockProduct(m) => m.alphabet(),
        }
    }

    pub fn sites(&self) -> &[usize] {
        match self {
            Measure::Explicit(m) => m.sites(),
            Measure::BlockProduct(m) => m.sites(),
        }
    }

    pub fn entropy(&self) -> f64 {
        match self {
            Measure::Explicit(m) => m.entropy(),
            Measure::BlockProduct(m) => m.entropy(),
        }
    }

    pub fn marginal(&self, subset: &[usize]) -> Result<Measure> {
        Ok(match self {
            Measure::Explicit(m) => Measure::Explicit(m.marginal(subset)?),
            Measure::BlockProduct(m) => Measure::BlockProduct(m.marginal(subset)?),
        })
    }

    pub fn to_explicit(&self, cap: usize) -> Result<ExplicitMeasure> {
        match self {
            Measure::Explicit(m) => Ok(m.clone()),
            Measure::BlockProduct(m) => m.to_explicit(cap),
        }
    }

    pub fn relabel(&self, map: impl Fn(usize) -> usize) -> Result<Measure> {
        Ok(match self {
            Measure::Explicit(m) => Measure::Explicit(m.relabel(map)?),
            Measure::BlockProduct(m) => Measure::BlockProduct(m.relabel(map)?),
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Symbol> {
        match self {
            Measure::Explicit(m) => m.sample(rng),
            Measure::BlockProduct(m) => m.sample(rng),
        }
    }

    /// `cov_eps` after enumerating the joint support (bounded by `cap`).
    pub fn cov_epsilon(&self, eps: f64, cap: usize) -> Result<usize> {
        cov_epsilon_explicit(&self.to_explicit(cap)?, eps)
    }

    /// Independent product of measures on disjoint site sets.
    pub fn product(parts: Vec<Measure>) -> Result<Measure> {
        let alphabet = parts.first().map(Measure::alphabet).unwrap_or(1);
        let mut sites = Vec::new();
        let mut blocks = Vec::new();
        let mut filler = Vec::new();
        for part in parts {
            if part.alphabet() != alphabet {
                return Err(Error::InvalidMeasure("factors use different alphabets".into()));
            }
            sites.extend_from_slice(part.sites());
            match part {
                Measure::Explicit(m) => {
                    let local = m.sites().to_vec();
                    blocks.push(Block {
                        sites: local,
                        law: Arc::new(BlockLaw::Explicit(m.relabel_positions())),
                    });
                }
                Measure::BlockProduct(m) => {
                    blocks.extend(m.blocks.iter().cloned());
                    filler.extend_from_slice(&m.filler);
                }
            }
        }
        Ok(Measure::BlockProduct(BlockProductMeasure::new(alphabet, sites, blocks, filler)?))
    }

    pub fn to_file(&self) -> MeasureFile {
        match self {
            Measure::Explicit(m) => MeasureFile::Explicit {
                version: MEASURE_FILE_VERSION,
                measure: m.clone(),
            },
            Measure::BlockProduct(m) => {
                let mut laws: Vec<Arc<BlockLaw>> = Vec::new();
                let mut block_laws = Vec::with_capacity(m.blocks.len());
                for b in &m.blocks {
                    let idx = match laws.iter().position(|l| Arc::ptr_eq(l, &b.law) || **l == *b.law) {
                        Some(i) => i,
                        None => {
                            laws.push(b.law.clone());
                            laws.len() - 1
                        }
                    };
                    block_laws.push(idx);
                }
                let laws: Vec<LawFile> = laws.iter().map(|l| LawFile::from(&**l)).collect();
                let (law, laws, block_laws) = if laws.len() == 1 {
                    (laws.into_iter().next(), None, None)
                } else {
                    (None, Some(laws), Some(block_laws))
                };
                MeasureFile::BlockProduct {
                    version: MEASURE_FILE_VERSION,
                    alphabet: m.alphabet,
                    sites: m.sites.clone(),
                    blocks: m.blocks.iter().map(|b| b.sites.clone()).collect(),
                    law,
                    laws,
                    block_laws,
                    filler: FillerFile {
                        vertices: m.filler.iter().map(|f| f.0).collect(),
                        symbols: m.filler.iter().map(|f| f.1).collect(),
                    },
                }
            }
        }
    }

    pub fn from_file(file: MeasureFile) -> Result<Measure> {
        match file {
            MeasureFile::Explicit { version, measure } => {
                check_version(version)?;
                Ok(Measure::Explicit(measure))
            }
            MeasureFile::BlockProduct {
                version,
                alphabet,
                sites,
                blocks,
                law,
                laws,
                block_laws,
                filler,
            } => {
                check_version(version)?;
                let laws: Vec<Arc<BlockLaw>> = match (law, laws) {
                    (Some(l), None) => vec![Arc::new(l.into_law()?)],
                    (None, Some(ls)) => ls.into_iter().map(|l| l.into_law().map(Arc::new)).collect::<Result<_>>()?,
                    (None, None) if blocks.is_empty() => Vec::new(),
                    _ => return Err(Error::InvalidMeasure("give exactly one of `law` or `laws`".into())),
                };
                let assign = match block_laws {
                    Some(a) => a,
                    None if laws.len() <= 1 => vec![0; blocks.len()],
                    None => return Err(Error::InvalidMeasure("`laws` needs `block_laws`".into())),
                };
                if assign.len() != blocks.len() {
                    return Err(Error::InvalidMeasure("`block_laws` length differs from `blocks`".into()));
                }
                let blocks = blocks
                    .into_iter()
                    .zip(assign)
                    .map(|(sites, i)| {
                        let law = laws.get(i).cloned().ok_or_else(|| Error::InvalidMeasure(format!("law index {i} out of range")))?;
                        Ok(Block { sites, law })
                    })
                    .collect::<Result<Vec<_>>>()?;
                if filler.vertices.len() != filler.symbols.len() {
                    return Err(Error::InvalidMeasure("filler vertices and symbols differ in length".into()));
                }
                let filler = filler.vertices.into_iter().zip(filler.symbols).collect();
                Ok(Measure::BlockProduct(BlockProductMeasure::new(alphabet, sites, blocks, filler)?))
            }
        }
    }
}

pub const MEASURE_FILE_VERSION: u32 = 1;

fn check_version(v: u32) -> Result<()> {
    if v != MEASURE_FILE_VERSION {
        return Err(invalid_arg("version", format!("unsupported measure file version {v}")));
    }
    Ok(())
}

/// On-disk measure; `type` selects the representation.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum MeasureFile {
    Explicit {
        version: u32,
        #[serde(flatten)]
        measure: ExplicitMeasure,
    },
    BlockProduct {
        version: u32,
        alphabet: usize,
        sites: Vec<usize>,
        blocks: Vec<Vec<usize>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        law: Option<LawFile>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        laws: Option<Vec<LawFile>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        block_laws: Option<Vec<usize>>,
        filler: FillerFile,
    },
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct FillerFile {
    pub vertices: Vec<usize>,
    pub symbols: Vec<Symbol>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum LawFile {
    Explicit {
        #[serde(flatten)]
        measure: ExplicitMeasure,
    },
    Markov {
        initial: Vec<f64>,
        transition: Vec<Vec<f64>>,
        positions: Vec<usize>,
    },
}

impl From<&BlockLaw> for LawFile {
    fn from(l: &BlockLaw) -> Self {
        match l {
            BlockLaw::Explicit(m) => LawFile::Explicit { measure: m.clone() },
            BlockLaw::Markov { chain, positions } => LawFile::Markov {
                initial: chain.initial().to_vec(),
                transition: chain.transition_rows(),
                positions: positions.clone(),
            },
        }
    }
}

impl LawFile {
    fn into_law(self) -> Result<BlockLaw> {
        match self {
            LawFile::Explicit { measure } => {
                let len = measure.sites().len();
                if measure.sites() != (0..len).collect::<Vec<_>>() {
                    return Err(Error::InvalidMeasure("explicit block laws use local sites 0..len".into()));
                }
                Ok(BlockLaw::Explicit(measure))
            }
            LawFile::Markov {
                initial,
                transition,
                positions,
            } => {
                check_increasing(&positions)?;
                Ok(BlockLaw::Markov {
                    chain: Arc::new(MarkovChain::new(initial, transition)?),
                    positions,
                })
            }
        }
    }
}

/// The conditioning bound `H(mu) <= mu(E) log|E| + (1-mu(E)) log|F\E| + H(mu(E))`
/// over `F = A^sites` and the event `E` given as a set of configurations.
/// Returns `(lhs, rhs)`.
pub fn conditioning_bound(mu: &ExplicitMeasure, event: &[Vec<Symbol>]) -> Result<(f64, f64)> {
    let total = (mu.alphabet() as f64).powi(mu.sites().len() as i32);
    let mut e: Vec<&Vec<Symbol>> = event.iter().collect();
    e.sort();
    e.dedup();
    let size_e = e.len() as f64;
    let mass_e: f64 = e.iter().map(|c| mu.probability_of(c)).sum::<f64>().min(1.0);
    let rest = total - size_e;
    let term = |mass: f64, size: f64| if mass > 0.0 && size > 0.0 { mass * size.ln() } else { 0.0 };
    let rhs = term(mass_e, size_e) + term(1.0 - mass_e, rest) + binary_entropy(mass_e.clamp(0.0, 1.0))?;
    Ok((mu.entropy(), rhs))
}

#[cfg(test)]
mod tests {
    use super::*;

    const LN2: f64 = std::f64::consts::LN_2;

    fn atoms(v: &[(&[u8], f64)]) -> Vec<Atom> {
        v.iter()
            .map(|(c, p)| Atom {
                config: c.to_vec(),
                p: *p,
            })
            .collect()
    }

    fn flip_chain(p: f64) -> Arc<MarkovChain> {
        Arc::new(MarkovChain::new(vec![0.5, 0.5], vec![vec![1.0 - p, p], vec![p, 1.0 - p]]).unwrap())
    }

    #[test]
    fn entropy_examples() {
        let u = ExplicitMeasure::uniform(2, vec![0, 1], 100).unwrap();
        assert!((u.entropy() - 4f64.ln()).abs() < 1e-12);
        let pt = ExplicitMeasure::point(3, vec![5], vec![2]).unwrap();
        assert_eq!(pt.entropy(), 0.0);
        let m = ExplicitMeasure::new(3, vec![0], atoms(&[(&[0], 0.5), (&[1], 0.25), (&[2], 0.25)])).unwrap();
        // 1.5 ln 2
        assert!((m.entropy() - 1.0397207708399179).abs() < 1e-12);
    }

    #[test]
    fn binary_entropy_values() {
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert!((binary_entropy(0.5).unwrap() - LN2).abs() < 1e-15);
        assert!((binary_entropy(0.25).unwrap() - 0.5623351446188083).abs() < 1e-12);
        assert!(binary_entropy(1.5).is_err());
        assert!(binary_entropy(-0.1).is_err());
    }

    #[test]
    fn explicit_validation() {
        assert!(ExplicitMeasure::new(2, vec![0], atoms(&[(&[0], 0.5)])).is_err());
        assert!(ExplicitMeasure::new(2, vec![0], atoms(&[(&[0], 0.5), (&[0], 0.5)])).is_err());
        assert!(ExplicitMeasure::new(2, vec![0], atoms(&[(&[2], 1.0)])).is_err());
        assert!(ExplicitMeasure::new(2, vec![0, 0], atoms(&[(&[0, 0], 1.0)])).is_err());
    }

    #[test]
    fn empty_marginal_is_trivial() {
        let u = ExplicitMeasure::uniform(2, vec![0, 1, 2], 100).unwrap();
        let m = u.marginal(&[]).unwrap();
        assert_eq!(m.support_size(), 1);
        assert_eq!(m.entropy(), 0.0);
        assert!(u.marginal(&[7]).is_err());
    }

    #[test]
    fn product_marginal_factorizes() {
        let eta = [0.2, 0.8];
        let full = ExplicitMeasure::product(&eta, vec![0, 1, 2, 3], 1000).unwrap();
        let sub = full.marginal(&[3, 1]).unwrap();
        let expect = ExplicitMeasure::product(&eta, vec![3, 1], 1000).unwrap();
        assert!(total_variation(&sub, &expect).unwrap() < 1e-12);
    }

    #[test]
    fn correlated_pairs_block_marginal() {
        let pair = ExplicitMeasure::new(2, vec![0, 1], atoms(&[(&[0, 0], 0.5), (&[1, 1], 0.5)])).unwrap();
        let law = Arc::new(BlockLaw::Explicit(pair));
        let bp = BlockProductMeasure::new(
            2,
            vec![0, 1, 2, 3],
            vec![
                Block {
                    sites: vec![0, 1],
                    law: law.clone(),
                },
                Block {
                    sites: vec![2, 3],
                    law,
                },
            ],
            vec![],
        )
        .unwrap();
        let m = bp.marginal(&[1, 2]).unwrap();
        assert_eq!(m.blocks().len(), 2);
        let brute = bp.to_explicit(100).unwrap().marginal(&[1, 2]).unwrap();
        let fast = m.to_explicit(100).unwrap();
        assert!(total_variation(&brute, &fast).unwrap() < 1e-12);
        assert!((m.entropy() - 2.0 * LN2).abs() < 1e-12);
        assert!((bp.entropy() - 2.0 * LN2).abs() < 1e-12);
    }

    #[test]
    fn block_validation() {
        let law = Arc::new(BlockLaw::markov_path(flip_chain(0.1), 2));
        let overlap = BlockProductMeasure::new(
            2,
            vec![0, 1, 2],
            vec![
                Block {
                    sites: vec![0, 1],
                    law: law.clone(),
                },
                Block {
                    sites: vec![1, 2],
                    law: law.clone(),
                },
            ],
            vec![],
        );
        assert!(overlap.is_err());
        let uncovered = BlockProductMeasure::new(2, vec![0, 1, 2], vec![Block { sites: vec![0, 1], law }], vec![]);
        assert!(uncovered.is_err());
    }

    #[test]
    fn cov_examples() {
        let pt = ExplicitMeasure::point(2, vec![0], vec![1]).unwrap();
        assert_eq!(cov_epsilon_explicit(&pt, 0.3).unwrap(), 1);
        let u4 = ExplicitMeasure::uniform(2, vec![0, 1], 100).unwrap();
        assert_eq!(cov_epsilon_explicit(&u4, 0.3).unwrap(), 3);
        assert_eq!(cov_epsilon_explicit(&u4, 0.2).unwrap(), 4);
        assert!(cov_epsilon_explicit(&u4, 0.0).is_err());
    }

    #[test]
    fn conditional_and_rokhlin() {
        let u = ExplicitMeasure::uniform(2, vec![0, 1], 100).unwrap();
        let a = Observable::Project(vec![0]);
        let b = Observable::Project(vec![1]);
        assert!(conditional_entropy(&u, &a, &a).unwrap().abs() < 1e-12);
        assert!((conditional_entropy(&u, &a, &b).unwrap() - LN2).abs() < 1e-12);
        assert!((conditional_entropy(&u, &a, &Observable::Constant(0)).unwrap() - LN2).abs() < 1e-12);
        assert!(rokhlin_distance(&u, &a, &a).unwrap().abs() < 1e-12);
        assert!((rokhlin_distance(&u, &a, &b).unwrap() - 2.0 * LN2).abs() < 1e-12);
        let not = Observable::Table {
            inputs: vec![0],
            table: Arc::new([(vec![0], 1), (vec![1], 0)].into_iter().collect()),
        };
        assert!(rokhlin_distance(&u, &a, &not).unwrap().abs() < 1e-12);
        let partial = Observable::Table {
            inputs: vec![0],
            table: Arc::new([(vec![0], 1)].into_iter().collect()),
        };
        assert!(matches!(rokhlin_distance(&u, &a, &partial), Err(Error::MissingPattern(_))));
    }

    #[test]
    fn markov_subset_examples() {
        let c = flip_chain(0.25);
        let single = c.subset_marginal(&[4], 100).unwrap();
        assert!((single.probability_of(&[0]) - 0.5).abs() < 1e-12);
        // positions 1 and 3 (1-based) are 0 and 2: transition P^2 has flip 0.375
        let m = c.subset_marginal(&[0, 2], 100).unwrap();
        assert!((m.probability_of(&[0, 1]) - 0.5 * 0.375).abs() < 1e-12);
        assert!((m.probability_of(&[1, 1]) - 0.5 * 0.625).abs() < 1e-12);
        let iid = MarkovChain::new(vec![0.3, 0.7], vec![vec![0.3, 0.7], vec![0.3, 0.7]]).unwrap();
        let m = iid.subset_marginal(&[1, 5, 6], 100).unwrap();
        let expect = ExplicitMeasure::product(&[0.3, 0.7], vec![0, 1, 2], 100).unwrap();
        assert!(total_variation(&m, &expect).unwrap() < 1e-12);
        assert!(c.subset_marginal(&[2, 1], 100).is_err());
        assert!(c.subset_marginal(&(0..30).collect::<Vec<_>>(), 1000).is_err());
    }

    #[test]
    fn markov_entropy_chain_rule() {
        let c = flip_chain(0.25);
        let h2 = c.entropy_at(&[0, 1]);
        assert!((h2 - (LN2 + binary_entropy(0.25).unwrap())).abs() < 1e-12);
        let brute = c.subset_marginal(&[0, 3, 4, 9], 1000).unwrap().entropy();
        assert!((c.entropy_at(&[0, 3, 4, 9]) - brute).abs() < 1e-12);
    }

    #[test]
    fn markov_validation() {
        assert!(MarkovChain::new(vec![0.5, 0.5], vec![vec![0.5, 0.6], vec![0.5, 0.5]]).is_err());
        assert!(MarkovChain::new(vec![0.5, 0.4], vec![vec![0.5, 0.5], vec![0.5, 0.5]]).is_err());
        assert!(MarkovChain::new(vec![1.0], vec![vec![1.0, 0.0]]).is_err());
    }

    #[test]
    fn conditioning_bound_holds() {
        let m = ExplicitMeasure::new(2, vec![0, 1], atoms(&[(&[0, 0], 0.7), (&[1, 0], 0.2), (&[1, 1], 0.1)])).unwrap();
        for e in [vec![], vec![vec![0, 0]], vec![vec![0, 0], vec![1, 1]], crate::sofic::all_patterns(2, 2)] {
            let (l, r) = conditioning_bound(&m, &e).unwrap();
            assert!(l <= r + 1e-12, "{l} > {r} for {e:?}");
        }
    }

    #[test]
    fn file_roundtrip() {
        let law = Arc::new(BlockLaw::markov_path(flip_chain(0.25), 2));
        let pair = ExplicitMeasure::new(2, vec![0, 1], atoms(&[(&[0, 1], 0.5), (&[1, 0], 0.5)])).unwrap();
        let bp = BlockProductMeasure::new(
            2,
            vec![0, 1, 2, 3, 4],
            vec![
                Block {
                    sites: vec![0, 1],
                    law: law.clone(),
                },
                Block {
                    sites: vec![3, 2],
                    law: Arc::new(BlockLaw::Explicit(pair)),
                },
            ],
            vec![(4, 1)],
        )
        .unwrap();
        let m = Measure::BlockProduct(bp);
        let json = serde_json::to_string(&m.to_file()).unwrap();
        let back = Measure::from_file(serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(m, back);
        let e = Measure::Explicit(ExplicitMeasure::uniform(2, vec![3, 9], 10).unwrap());
        let json = serde_json::to_string(&e.to_file()).unwrap();
        assert!(json.contains("\"type\":\"explicit\""));
        assert_eq!(Measure::from_file(serde_json::from_str(&json).unwrap()).unwrap(), e);
    }

    #[test]
    fn filler_is_deterministic() {
        let law = Arc::new(BlockLaw::markov_path(flip_chain(0.25), 3));
        let bp = BlockProductMeasure::new(2, vec![0, 1, 2, 3], vec![Block { sites: vec![0, 1, 2], law }], vec![(3, 1)]).unwrap();
        let m = bp.marginal(&[3]).unwrap();
        assert_eq!(m.entropy(), 0.0);
        let e = m.to_explicit(10).unwrap();
        assert_eq!(e.probability_of(&[1]), 1.0);
    }
}
