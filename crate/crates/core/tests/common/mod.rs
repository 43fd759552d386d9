//! Brute-force oracles shared by the integration tests.
//!
//! Nothing here calls into the library's marginalization, entropy or
//! shortest-path code: joint laws are enumerated over every configuration and
//! distances come from closed forms or Floyd-Warshall.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;
use sofic_mixing::measures::{Atom, Block, BlockLaw, BlockProductMeasure, ExplicitMeasure, MarkovChain};
use sofic_mixing::Symbol;

pub const TOL: f64 = 1e-9;

/// A joint law as a map from full configurations to mass.
pub type Table = BTreeMap<Vec<Symbol>, f64>;

pub fn every_config(alphabet: usize, len: usize) -> Vec<Vec<Symbol>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        let mut next = Vec::with_capacity(out.len() * alphabet);
        for c in &out {
            for a in 0..alphabet {
                let mut d = c.clone();
                d.push(a as Symbol);
                next.push(d);
            }
        }
        out = next;
    }
    out
}

pub fn entropy(table: &Table) -> f64 {
    table.values().filter(|&&p| p > 0.0).map(|&p| -p * p.ln()).sum()
}

/// Least number of atoms holding more than `1 - eps` of the mass.
pub fn cov(table: &Table, eps: f64) -> usize {
    let mut p: Vec<f64> = table.values().copied().filter(|&p| p > 0.0).collect();
    p.sort_by(|a, b| b.total_cmp(a));
    let mut acc = 0.0;
    for (i, x) in p.iter().enumerate() {
        acc += x;
        if acc > 1.0 - eps {
            return i + 1;
        }
    }
    p.len()
}

/// Sums `table` (indexed by `sites`) onto `keep`, which must be a subset.
pub fn marginalize(table: &Table, sites: &[usize], keep: &[usize]) -> Table {
    let idx: Vec<usize> = keep.iter().map(|k| sites.iter().position(|s| s == k).unwrap()).collect();
    let mut out = Table::new();
    for (c, &p) in table {
        *out.entry(idx.iter().map(|&i| c[i]).collect()).or_insert(0.0) += p;
    }
    out
}

pub fn explicit_table(m: &ExplicitMeasure) -> Table {
    m.atoms().iter().map(|a| (a.config.clone(), a.p)).collect()
}

/// Probability of a path `x` under a Markov chain started from its initial law.
pub fn path_probability(chain: &MarkovChain, x: &[Symbol]) -> f64 {
    let rows = chain.transition_rows();
    let mut p = chain.initial()[x[0] as usize];
    for w in x.windows(2) {
        p *= rows[w[0] as usize][w[1] as usize];
    }
    p
}

/// The chain read at `positions` by summing the full path law up to the last position.
pub fn markov_positions(chain: &MarkovChain, positions: &[usize]) -> Table {
    let len = positions.iter().max().map_or(0, |m| m + 1);
    let mut out = Table::new();
    for x in every_config(chain.alphabet(), len) {
        let p = path_probability(chain, &x);
        *out.entry(positions.iter().map(|&i| x[i]).collect()).or_insert(0.0) += p;
    }
    out
}

fn law_table(law: &BlockLaw) -> Table {
    match law {
        BlockLaw::Explicit(m) => explicit_table(m),
        BlockLaw::Markov { chain, positions } => markov_positions(chain, positions),
    }
}

/// Joint law of a block-product measure over all of its sites in order.
pub fn block_product_table(m: &BlockProductMeasure) -> Table {
    let sites = m.sites().to_vec();
    let laws: Vec<Table> = m.blocks().iter().map(|b| law_table(&b.law)).collect();
    let pos = |s: usize| sites.iter().position(|&t| t == s).unwrap();
    let mut out = Table::new();
    'config: for c in every_config(m.alphabet(), sites.len()) {
        for &(s, a) in m.filler() {
            if c[pos(s)] != a {
                continue 'config;
            }
        }
        let mut p = 1.0;
        for (b, law) in m.blocks().iter().zip(&laws) {
            let local: Vec<Symbol> = b.sites.iter().map(|&s| c[pos(s)]).collect();
            p *= law.get(&local).copied().unwrap_or(0.0);
            if p == 0.0 {
                continue 'config;
            }
        }
        out.insert(c, p);
    }
    out
}

pub fn tables_close(a: &Table, b: &Table, tol: f64) -> bool {
    let keys: std::collections::BTreeSet<&Vec<Symbol>> = a.keys().chain(b.keys()).collect();
    keys.into_iter()
        .all(|k| (a.get(k).copied().unwrap_or(0.0) - b.get(k).copied().unwrap_or(0.0)).abs() <= tol)
}

pub fn random_distribution<R: Rng>(rng: &mut R, k: usize) -> Vec<f64> {
    // occasional zeros exercise the support handling
    let mut w: Vec<f64> = (0..k)
        .map(|_| if rng.gen_bool(0.15) { 0.0 } else { rng.gen_range(0.05..1.0) })
        .collect();
    if w.iter().all(|&x| x == 0.0) {
        w[rng.gen_range(0..k)] = 1.0;
    }
    let s: f64 = w.iter().sum();
    w.iter().map(|x| x / s).collect()
}

pub fn random_explicit<R: Rng>(rng: &mut R, alphabet: usize, sites: Vec<usize>) -> ExplicitMeasure {
    let configs = every_config(alphabet, sites.len());
    let p = random_distribution(rng, configs.len());
    let atoms = configs
        .into_iter()
        .zip(p)
        .filter(|(_, p)| *p > 0.0)
        .map(|(config, p)| Atom { config, p })
        .collect();
    ExplicitMeasure::new(alphabet, sites, atoms).unwrap()
}

pub fn random_chain<R: Rng>(rng: &mut R, alphabet: usize) -> MarkovChain {
    let initial = random_distribution(rng, alphabet);
    let rows = (0..alphabet).map(|_| random_distribution(rng, alphabet)).collect();
    MarkovChain::new(initial, rows).unwrap()
}

/// A random block-product measure on `n` sites (labels scattered in `0..3n`).
pub fn random_block_product<R: Rng>(rng: &mut R, alphabet: usize, n: usize) -> BlockProductMeasure {
    let mut labels: Vec<usize> = (0..3 * n).collect();
    rand::seq::SliceRandom::shuffle(labels.as_mut_slice(), rng);
    labels.truncate(n);
    let mut sites = labels.clone();
    sites.sort_unstable();

    let mut blocks = Vec::new();
    let mut filler = Vec::new();
    let mut i = 0;
    while i < n {
        let len = rng.gen_range(1..=4.min(n - i));
        let chunk = labels[i..i + len].to_vec();
        i += len;
        match rng.gen_range(0..4) {
            0 => {
                for s in chunk {
                    filler.push((s, rng.gen_range(0..alphabet) as Symbol));
                }
            }
            1 | 2 => {
                let chain = Arc::new(random_chain(rng, alphabet));
                let mut positions: Vec<usize> = (0..len + 3).collect();
                rand::seq::SliceRandom::shuffle(positions.as_mut_slice(), rng);
                positions.truncate(len);
                positions.sort_unstable();
                blocks.push(Block {
                    sites: chunk,
                    law: Arc::new(BlockLaw::Markov { chain, positions }),
                });
            }
            _ => {
                let m = random_explicit(rng, alphabet, (0..len).collect());
                blocks.push(Block {
                    sites: chunk,
                    law: Arc::new(BlockLaw::Explicit(m)),
                });
            }
        }
    }
    filler.sort_unstable();
    BlockProductMeasure::new(alphabet, sites, blocks, filler).unwrap()
}

pub fn random_subset<R: Rng>(rng: &mut R, from: &[usize]) -> Vec<usize> {
    let mut s: Vec<usize> = from.iter().copied().filter(|_| rng.gen_bool(0.5)).collect();
    if s.is_empty() {
        s.push(from[rng.gen_range(0..from.len())]);
    }
    s
}

/// Graph distance on the `n`-cycle with unit generator weight.
pub fn cycle_distance(n: usize, a: usize, b: usize) -> f64 {
    let d = a.abs_diff(b);
    d.min(n - d) as f64
}

/// Weighted l1 distance on a torus; vertex `x_0 + n_0 (x_1 + ..)`.
pub fn torus_distance(sizes: &[usize], weights: &[f64], a: usize, b: usize) -> f64 {
    let (mut a, mut b) = (a, b);
    let mut total = 0.0;
    for (&m, &w) in sizes.iter().zip(weights) {
        let d = (a % m).abs_diff(b % m);
        total += w * d.min(m - d) as f64;
        a /= m;
        b /= m;
    }
    total
}

/// All-pairs shortest paths; `f64::INFINITY` for unreachable pairs.
pub fn floyd_warshall(n: usize, edges: &[(usize, usize, f64)]) -> Vec<Vec<f64>> {
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (v, row) in d.iter_mut().enumerate() {
        row[v] = 0.0;
    }
    for &(a, b, w) in edges {
        if w < d[a][b] {
            d[a][b] = w;
            d[b][a] = w;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}
