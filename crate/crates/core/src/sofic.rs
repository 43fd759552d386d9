//! Finite permutation models `sigma: G -> Sym(V)` with `V = {0, .., n-1}`.
//!
//! A [`SoficMap`] stores one permutation per generator and evaluates words
//! homomorphically, `sigma^{ab} = sigma^a o sigma^b`. Explicit per-word
//! overrides let non-homomorphic models be ingested from files. Every
//! evaluation is checked against the radius budget.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid_arg, Error, Result};
use crate::group::{GroupKind, GroupPresentation, GroupWord, Syllable, METRIC_TOL};
use crate::Symbol;

/// Budget used by the builders unless overridden with [`SoficMap::with_budget`].
pub const DEFAULT_BUDGET: f64 = 64.0;

/// A bijection of `0..n` stored as its image array.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Permutation(Vec<usize>);

impl TryFrom<Vec<usize>> for Permutation {
    type Error = Error;

    fn try_from(images: Vec<usize>) -> Result<Self> {
        Permutation::from_images(images)
    }
}

impl From<Permutation> for Vec<usize> {
    fn from(p: Permutation) -> Self {
        p.0
    }
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation((0..n).collect())
    }

    pub fn from_images(images: Vec<usize>) -> Result<Self> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &x in &images {
            if x >= n {
                return Err(Error::InvalidPermutation(format!("image {x} out of range 0..{n}")));
            }
            if std::mem::replace(&mut seen[x], true) {
                return Err(Error::InvalidPermutation(format!("image {x} repeated")));
            }
        }
        Ok(Permutation(images))
    }

    /// The cyclic shift `v -> v + 1 mod n`.
    pub fn cycle(n: usize) -> Self {
        Permutation((0..n).map(|v| (v + 1) % n.max(1)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn images(&self) -> &[usize] {
        &self.0
    }

    #[inline]
    pub fn apply(&self, v: usize) -> usize {
        self.0[v]
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &x)| i == x)
    }

    /// `self o other`: apply `other` first.
    pub fn compose(&self, other: &Permutation) -> Permutation {
        Permutation(other.0.iter().map(|&x| self.0[x]).collect())
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.0.len()];
        for (i, &x) in self.0.iter().enumerate() {
            inv[x] = i;
        }
        Permutation(inv)
    }

    /// `self^k` in `O(n)` via the cycle decomposition.
    pub fn pow(&self, k: i64) -> Permutation {
        let n = self.0.len();
        let mut out = vec![0; n];
        for cycle in self.cycles() {
            let c = cycle.len() as i64;
            let shift = k.rem_euclid(c) as usize;
            for (j, &v) in cycle.iter().enumerate() {
                out[v] = cycle[(j + shift) % cycle.len()];
            }
        }
        Permutation(out)
    }

    /// Cycles ordered by their smallest vertex, each starting there.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let n = self.0.len();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut cycle = Vec::new();
            let mut v = start;
            while !seen[v] {
                seen[v] = true;
                cycle.push(v);
                v = self.0[v];
            }
            out.push(cycle);
        }
        out
    }

    pub fn fixed_points(&self) -> usize {
        self.0.iter().enumerate().filter(|(i, &x)| *i == x).count()
    }
}

/// An `F`-local observable `A^F -> B` given by a finite table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalObservable {
    pub window: Vec<GroupWord>,
    pub table: BTreeMap<Vec<Symbol>, Symbol>,
}

impl LocalObservable {
    /// Tabulates `f` on every pattern in `A^window`.
    pub fn from_fn(window: Vec<GroupWord>, alphabet: usize, f: impl Fn(&[Symbol]) -> Symbol) -> Self {
        let table = all_patterns(alphabet, window.len())
            .into_iter()
            .map(|p| {
                let b = f(&p);
                (p, b)
            })
            .collect();
        LocalObservable { window, table }
    }

    /// Reads the coordinate `window[index]`.
    pub fn projection(window: Vec<GroupWord>, index: usize, alphabet: usize) -> Self {
        Self::from_fn(window, alphabet, |p| p[index])
    }

    pub fn constant(window: Vec<GroupWord>, alphabet: usize, value: Symbol) -> Self {
        Self::from_fn(window, alphabet, |_| value)
    }

    pub fn eval(&self, pattern: &[Symbol]) -> Result<Symbol> {
        self.table
            .get(pattern)
            .copied()
            .ok_or_else(|| Error::MissingPattern(pattern.to_vec()))
    }

    /// Number of output symbols, `max + 1`.
    pub fn output_alphabet(&self) -> usize {
        self.table.values().map(|&b| b as usize + 1).max().unwrap_or(1)
    }
}

/// Every word of length `len` over `0..alphabet`, lexicographic.
pub fn all_patterns(alphabet: usize, len: usize) -> Vec<Vec<Symbol>> {
    let mut out = vec![Vec::with_capacity(len)];
    for _ in 0..len {
        let mut next = Vec::with_capacity(out.len() * alphabet);
        for p in &out {
            for a in 0..alphabet {
                let mut q = p.clone();
                q.push(a as Symbol);
                next.push(q);
            }
        }
        out = next;
    }
    out
}

/// Finite-`n` defects of a model against a window and coset pairs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DefectReport {
    pub n: usize,
    pub window: Vec<String>,
    /// Fraction of `v` where `g -> sigma^g v` is injective on the window.
    pub injectivity_fraction: f64,
    pub pairs: Vec<PairDefect>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairDefect {
    pub g: String,
    pub g_prime: String,
    pub p_max: u64,
    /// Fraction of `v` with `(sigma^g)^-1 (sigma^h)^p sigma^{g'} v = v` for some `|p| <= p_max`.
    pub fixed_fraction: f64,
}

/// A quasi-action of a finitely generated group on `0..n`.
#[derive(Clone, Debug, PartialEq)]
pub struct SoficMap {
    presentation: GroupPresentation,
    n: usize,
    budget: f64,
    generators: Vec<Permutation>,
    inverses: Vec<Permutation>,
    overrides: BTreeMap<GroupWord, Permutation>,
}

impl SoficMap {
    /// Builds a model from generator permutations and optional overrides.
    pub fn from_parts(
        presentation: GroupPresentation,
        budget: f64,
        generators: Vec<Permutation>,
        overrides: BTreeMap<GroupWord, Permutation>,
    ) -> Result<Self> {
        if generators.len() != presentation.rank() {
            return Err(invalid_arg(
                "generators",
                format!("expected {} generators, got {}", presentation.rank(), generators.len()),
            ));
        }
        let n = generators[0].len();
        if n == 0 {
            return Err(invalid_arg("n", "vertex count must be positive"));
        }
        if generators.iter().any(|p| p.len() != n) {
            return Err(invalid_arg("generators", "permutations have different lengths"));
        }
        if budget.is_nan() || budget < 0.0 {
            return Err(invalid_arg("budget", format!("{budget} is negative")));
        }
        let mut checked = BTreeMap::new();
        for (w, p) in overrides {
            let w = presentation.normalize(&w)?;
            if p.len() != n {
                return Err(invalid_arg("overrides", format!("override for {w} has wrong length")));
            }
            if w.is_identity() && !p.is_identity() {
                return Err(invalid_arg("overrides", "the identity must map to the identity permutation"));
            }
            let len = presentation.word_metric(&w);
            if len > budget + METRIC_TOL {
                return Err(Error::BudgetExceeded {
                    word: w.to_string(),
                    length: len,
                    budget,
                });
            }
            checked.insert(w, p);
        }
        let inverses = generators.iter().map(Permutation::inverse).collect();
        Ok(SoficMap {
            presentation,
            n,
            budget,
            generators,
            inverses,
            overrides: checked,
        })
    }

    /// The `Z` model on a single `n`-cycle.
    pub fn cycle(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(invalid_arg("n", "must be at least 1"));
        }
        Self::from_parts(
            GroupPresentation::integers(),
            DEFAULT_BUDGET,
            vec![Permutation::cycle(n)],
            BTreeMap::new(),
        )
    }

    /// The `Z^d` model on the discrete torus `Z/n_1 x .. x Z/n_d`.
    ///
    /// Vertex index is `x_0 + n_0 (x_1 + n_1 (x_2 + ..))`.
    pub fn torus(sizes: &[usize]) -> Result<Self> {
        if sizes.is_empty() || sizes.contains(&0) {
            return Err(invalid_arg("sizes", "need at least one positive side length"));
        }
        let n = sizes
            .iter()
            .try_fold(1usize, |acc, &s| acc.checked_mul(s))
            .filter(|&n| n <= u32::MAX as usize)
            .ok_or(Error::CapExceeded {
                what: "torus vertex count",
                size: sizes.iter().map(|&s| s as u128).product(),
                cap: u32::MAX as u128,
            })?;
        let mut generators = Vec::with_capacity(sizes.len());
        let mut stride = 1;
        for &side in sizes {
            let images = (0..n)
                .map(|v| {
                    let x = (v / stride) % side;
                    v - x * stride + ((x + 1) % side) * stride
                })
                .collect();
            generators.push(Permutation(images));
            stride *= side;
        }
        let presentation = GroupPresentation::free_abelian(sizes.len())?;
        Self::from_parts(presentation, DEFAULT_BUDGET, generators, BTreeMap::new())
    }

    /// Independent uniform random permutations for each free generator.
    pub fn random_free(presentation: GroupPresentation, n: usize, seed: u64) -> Result<Self> {
        if presentation.kind() != GroupKind::Free {
            return Err(invalid_arg("presentation", "random models are built for free groups"));
        }
        if n == 0 {
            return Err(invalid_arg("n", "must be at least 1"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let generators = (0..presentation.rank())
            .map(|_| {
                let mut images: Vec<usize> = (0..n).collect();
                images.shuffle(&mut rng);
                Permutation(images)
            })
            .collect();
        Self::from_parts(presentation, DEFAULT_BUDGET, generators, BTreeMap::new())
    }

    pub fn with_budget(mut self, budget: f64) -> Result<Self> {
        if budget.is_nan() || budget < 0.0 {
            return Err(invalid_arg("budget", format!("{budget} is negative")));
        }
        if let Some((w, _)) = self
            .overrides
            .iter()
            .find(|(w, _)| self.presentation.word_metric(w) > budget + METRIC_TOL)
        {
            return Err(Error::BudgetExceeded {
                word: w.to_string(),
                length: self.presentation.word_metric(w),
                budget,
            });
        }
        self.budget = budget;
        Ok(self)
    }

    pub fn presentation(&self) -> &GroupPresentation {
        &self.presentation
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn generators(&self) -> &[Permutation] {
        &self.generators
    }

    pub fn overrides(&self) -> &BTreeMap<GroupWord, Permutation> {
        &self.overrides
    }

    pub fn is_homomorphic(&self) -> bool {
        self.overrides.is_empty()
    }

    fn check_budget(&self, g: &GroupWord) -> Result<()> {
        self.presentation.check(g)?;
        let len = self.presentation.word_metric(g);
        if len > self.budget + METRIC_TOL {
            return Err(Error::BudgetExceeded {
                word: g.to_string(),
                length: len,
                budget: self.budget,
            });
        }
        Ok(())
    }

    /// The permutation `sigma^g`.
    pub fn evaluate(&self, g: &GroupWord) -> Result<Permutation> {
        self.check_budget(g)?;
        if let Some(p) = self.overrides.get(g) {
            return Ok(p.clone());
        }
        let mut acc = Permutation::identity(self.n);
        match g {
            GroupWord::Abelian(e) => {
                for (i, &x) in e.iter().enumerate() {
                    if x != 0 {
                        acc = acc.compose(&self.generators[i].pow(x));
                    }
                }
            }
            GroupWord::Free(s) => {
                for &Syllable(i, x) in s {
                    acc = acc.compose(&self.generators[i].pow(x));
                }
            }
        }
        Ok(acc)
    }

    /// `sigma^g v` for a single vertex.
    pub fn act(&self, g: &GroupWord, v: usize) -> Result<usize> {
        if v >= self.n {
            return Err(Error::UnknownSite { vertex: v });
        }
        self.check_budget(g)?;
        if let Some(p) = self.overrides.get(g) {
            return Ok(p.apply(v));
        }
        let steps: Vec<(usize, i64)> = match g {
            GroupWord::Abelian(e) => e.iter().copied().enumerate().collect(),
            GroupWord::Free(s) => s.iter().map(|&Syllable(i, x)| (i, x)).collect(),
        };
        let mut w = v;
        for &(i, x) in steps.iter().rev() {
            let gen = if x >= 0 { &self.generators[i] } else { &self.inverses[i] };
            for _ in 0..x.unsigned_abs() {
                w = gen.apply(w);
            }
        }
        Ok(w)
    }

    pub fn evaluate_all(&self, window: &[GroupWord]) -> Result<Vec<Permutation>> {
        window.iter().map(|g| self.evaluate(g)).collect()
    }

    /// `sigma^F(S)`, sorted and deduplicated.
    pub fn orbit_image(&self, window: &[GroupWord], set: &[usize]) -> Result<Vec<usize>> {
        let perms = self.evaluate_all(window)?;
        self.orbit_image_with(&perms, set)
    }

    pub(crate) fn orbit_image_with(&self, perms: &[Permutation], set: &[usize]) -> Result<Vec<usize>> {
        let mut out = BTreeSet::new();
        for &s in set {
            if s >= self.n {
                return Err(Error::UnknownSite { vertex: s });
            }
            for p in perms {
                out.insert(p.apply(s));
            }
        }
        Ok(out.into_iter().collect())
    }

    /// The name `g -> config(sigma^g v)` read along the quasi-orbit of `v`.
    pub fn pullback_name(&self, v: usize, window: &[GroupWord], config: &[Symbol]) -> Result<Vec<Symbol>> {
        if config.len() != self.n {
            return Err(invalid_arg("config", "configuration length differs from n"));
        }
        window.iter().map(|g| Ok(config[self.act(g, v)?])).collect()
    }

    /// `phi^sigma(config)(v) = phi(pullback name of v)` for every vertex.
    pub fn push_observable(&self, phi: &LocalObservable, config: &[Symbol]) -> Result<Vec<Symbol>> {
        if config.len() != self.n {
            return Err(invalid_arg("config", "configuration length differs from n"));
        }
        let perms = self.evaluate_all(&phi.window)?;
        (0..self.n)
            .into_par_iter()
            .map(|v| {
                let pattern: Vec<Symbol> = perms.iter().map(|p| config[p.apply(v)]).collect();
                phi.eval(&pattern)
            })
            .collect()
    }

    /// Whether `g -> sigma^g v` is injective on the window, per vertex.
    pub fn injective_mask(&self, window: &[GroupWord]) -> Result<Vec<bool>> {
        let perms = self.evaluate_all(window)?;
        Ok((0..self.n)
            .into_par_iter()
            .map(|v| {
                let images: BTreeSet<usize> = perms.iter().map(|p| p.apply(v)).collect();
                images.len() == perms.len()
            })
            .collect())
    }

    /// Fraction of vertices where `sigma^g sigma^{g'} v != sigma^{gg'} v`.
    pub fn composition_defect(&self, g: &GroupWord, g_prime: &GroupWord) -> Result<f64> {
        let gg = self.presentation.mul(g, g_prime)?;
        let lhs = self.evaluate(g)?.compose(&self.evaluate(g_prime)?);
        let rhs = self.evaluate(&gg)?;
        let bad = (0..self.n).filter(|&v| lhs.apply(v) != rhs.apply(v)).count();
        Ok(bad as f64 / self.n as f64)
    }

    /// Per-vertex flags for `(sigma^g)^-1 (sigma^h)^p sigma^{g'} v = v` for some `|p| <= p_max`.
    pub fn coset_collision_mask(
        &self,
        h: &GroupWord,
        g: &GroupWord,
        g_prime: &GroupWord,
        p_max: u64,
    ) -> Result<Vec<bool>> {
        let sh = self.evaluate(h)?;
        let sh_inv = sh.inverse();
        let sg = self.evaluate(g)?;
        let sgp = self.evaluate(g_prime)?;
        Ok((0..self.n)
            .into_par_iter()
            .map(|v| {
                let target = sg.apply(v);
                let start = sgp.apply(v);
                let (mut fwd, mut back) = (start, start);
                if start == target {
                    return true;
                }
                for _ in 0..p_max {
                    fwd = sh.apply(fwd);
                    back = sh_inv.apply(back);
                    if fwd == target || back == target {
                        return true;
                    }
                }
                false
            })
            .collect())
    }

    /// Injectivity on `window` and coset-pair collision fractions.
    pub fn defect_report(
        &self,
        window: &[GroupWord],
        h: Option<&GroupWord>,
        pairs: &[(GroupWord, GroupWord)],
        p_max: u64,
    ) -> Result<DefectReport> {
        let mask = self.injective_mask(window)?;
        let injective = mask.iter().filter(|&&b| b).count();
        let mut pair_rows = Vec::new();
        if !pairs.is_empty() {
            let h = h.ok_or_else(|| invalid_arg("h", "coset pairs need a cyclic generator"))?;
            for (g, gp) in pairs {
                let m = self.coset_collision_mask(h, g, gp, p_max)?;
                pair_rows.push(PairDefect {
                    g: g.to_string(),
                    g_prime: gp.to_string(),
                    p_max,
                    fixed_fraction: m.iter().filter(|&&b| b).count() as f64 / self.n as f64,
                });
            }
        }
        Ok(DefectReport {
            n: self.n,
            window: window.iter().map(|g| g.to_string()).collect(),
            injectivity_fraction: injective as f64 / self.n as f64,
            pairs: pair_rows,
        })
    }

    pub fn to_file(&self) -> SoficFile {
        SoficFile {
            version: SOFIC_FILE_VERSION,
            presentation: self.presentation.clone(),
            n: self.n,
            budget: self.budget,
            generators: self.generators.iter().map(|p| p.0.clone()).collect(),
            overrides: self
                .overrides
                .iter()
                .map(|(w, p)| (w.to_string(), p.0.clone()))
                .collect(),
        }
    }

    pub fn from_file(file: SoficFile) -> Result<Self> {
        if file.version != SOFIC_FILE_VERSION {
            return Err(invalid_arg("version", format!("unsupported sofic file version {}", file.version)));
        }
        let generators = file
            .generators
            .into_iter()
            .map(Permutation::from_images)
            .collect::<Result<Vec<_>>>()?;
        if generators.first().map(|p| p.len()) != Some(file.n) {
            return Err(invalid_arg("n", "generator length does not match n"));
        }
        let mut overrides = BTreeMap::new();
        for (key, images) in file.overrides {
            overrides.insert(file.presentation.parse_word(&key)?, Permutation::from_images(images)?);
        }
        Self::from_parts(file.presentation, file.budget, generators, overrides)
    }
}

pub const SOFIC_FILE_VERSION: u32 = 1;

/// On-disk form of a [`SoficMap`]; permutations are image arrays.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SoficFile {
    pub version: u32,
    pub presentation: GroupPresentation,
    pub n: usize,
    pub budget: f64,
    pub generators: Vec<Vec<usize>>,
    #[serde(default)]
    pub overrides: BTreeMap<String, Vec<usize>>,
}
