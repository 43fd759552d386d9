//! Path-partition model measures.
//!
//! The cycles of `sigma^h` are cut into paths of length `l`; each path
//! carries an independent copy of the base process on `{0, .., l-1}` and the
//! vertices left over take a fixed filler symbol.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid_arg, Error, Result};
use crate::group::GroupWord;
use crate::measures::{Block, BlockProductMeasure};
use crate::processes::{Process, ProcessOracle};
use crate::sofic::SoficMap;
use crate::Symbol;

/// Disjoint `sigma^h`-paths of a common length plus the uncovered vertices.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathPartition {
    pub l: usize,
    pub paths: Vec<Vec<usize>>,
    pub leftover: Vec<usize>,
}

impl PathPartition {
    pub fn n(&self) -> usize {
        self.paths.len() * self.l + self.leftover.len()
    }

    /// `(path, position)` for every vertex below `n`, `None` on leftovers.
    pub fn path_index(&self, n: usize) -> Vec<Option<(usize, usize)>> {
        let mut out = vec![None; n];
        for (p, path) in self.paths.iter().enumerate() {
            for (j, &v) in path.iter().enumerate() {
                if v < n {
                    out[v] = Some((p, j));
                }
            }
        }
        out
    }

    /// Checks disjointness, full cover, common length, and that each path
    /// follows `sigma^h`.
    pub fn validate(&self, sofic: &SoficMap, h: &GroupWord) -> Result<()> {
        let n = sofic.n();
        let step = sofic.evaluate(h)?;
        let mut seen = vec![false; n];
        let mut mark = |v: usize| -> Result<()> {
            if v >= n || std::mem::replace(&mut seen[v], true) {
                return Err(invalid_arg("partition", format!("vertex {v} is out of range or repeated")));
            }
            Ok(())
        };
        for path in &self.paths {
            if path.len() != self.l {
                return Err(invalid_arg("partition", "path length differs from l"));
            }
            for &v in path {
                mark(v)?;
            }
            if path.windows(2).any(|w| step.apply(w[0]) != w[1]) {
                return Err(invalid_arg("partition", "consecutive path vertices are not sigma^h steps"));
            }
        }
        for &v in &self.leftover {
            mark(v)?;
        }
        if seen.iter().any(|s| !s) {
            return Err(invalid_arg("partition", "paths and leftover do not cover every vertex"));
        }
        Ok(())
    }
}

/// Cycles of `sigma^h`, each starting at its smallest vertex.
pub fn extract_cycles(sofic: &SoficMap, h: &GroupWord) -> Result<Vec<Vec<usize>>> {
    Ok(sofic.evaluate(h)?.cycles())
}

/// Cuts each cycle of length `c` into `c / l` consecutive paths, starting
/// `offset` steps after the cycle's first vertex.
pub fn partition_paths(cycles: &[Vec<usize>], l: usize, offset: usize) -> Result<PathPartition> {
    if l == 0 {
        return Err(invalid_arg("l", "path length must be at least 1"));
    }
    let pieces: Vec<(Vec<Vec<usize>>, Vec<usize>)> = cycles
        .par_iter()
        .map(|cycle| {
            let c = cycle.len();
            let start = if c == 0 { 0 } else { offset % c };
            let rotated: Vec<usize> = cycle[start..].iter().chain(&cycle[..start]).copied().collect();
            let k = c / l;
            let paths = rotated[..k * l].chunks(l).map(<[usize]>::to_vec).collect();
            (paths, rotated[k * l..].to_vec())
        })
        .collect();
    let mut paths = Vec::new();
    let mut leftover = Vec::new();
    for (p, rest) in pieces {
        paths.extend(p);
        leftover.extend(rest);
    }
    leftover.sort_unstable();
    Ok(PathPartition { l, paths, leftover })
}

/// Places the base law on `{0, .., l-1}` on every path and the filler on the
/// leftover vertices. `filler` defaults to the first symbol.
pub fn build_model_measure(process: &Process, partition: &PathPartition, filler: Option<&[Symbol]>) -> Result<BlockProductMeasure> {
    let n = partition.n();
    let alphabet = process.alphabet();
    if let Some(f) = filler {
        if f.len() != n {
            return Err(invalid_arg("filler", format!("expected {n} symbols, got {}", f.len())));
        }
        if let Some(&a) = f.iter().find(|&&a| a as usize >= alphabet) {
            return Err(Error::InvalidMeasure(format!("filler symbol {a} is outside the process alphabet of size {alphabet}")));
        }
    }
    let law = process.interval_law(partition.l)?;
    let blocks = partition
        .paths
        .iter()
        .map(|p| Block {
            sites: p.clone(),
            law: law.clone(),
        })
        .collect();
    let fill = partition
        .leftover
        .iter()
        .map(|&v| (v, filler.map_or(0, |f| f[v])))
        .collect();
    BlockProductMeasure::new(alphabet, (0..n).collect(), blocks, fill)
}

/// Fraction of vertices covered by paths.
pub fn check_condition_a(partition: &PathPartition) -> f64 {
    let n = partition.n();
    if n == 0 {
        return 0.0;
    }
    1.0 - partition.leftover.len() as f64 / n as f64
}

/// For each pair `(g, g')` from distinct right cosets of `<h>`, the fraction
/// of `v` with `(sigma^g)^-1 (sigma^h)^p sigma^{g'} v = v` for some `|p| <= l`.
pub fn check_condition_b(sofic: &SoficMap, h: &GroupWord, pairs: &[(GroupWord, GroupWord)], l: usize) -> Result<Vec<f64>> {
    let pres = sofic.presentation();
    pairs
        .iter()
        .map(|(g, gp)| {
            if pres.same_right_coset(g, gp, h)? {
                return Err(invalid_arg("pairs", format!("{g} and {gp} lie in the same right coset of <{h}>")));
            }
            let mask = sofic.coset_collision_mask(h, g, gp, l as u64)?;
            Ok(mask.iter().filter(|&&b| b).count() as f64 / sofic.n() as f64)
        })
        .collect()
}

/// Acceptance thresholds for the path-length schedule.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleThresholds {
    /// Allowed uncovered fraction.
    pub coverage: f64,
    /// Allowed collision fraction per coset pair.
    pub collision: f64,
    pub l_cap: usize,
    #[serde(default = "default_l_min")]
    pub l_min: usize,
}

fn default_l_min() -> usize {
    2
}

impl ScheduleThresholds {
    pub fn validate(&self) -> Result<()> {
        for (name, x) in [("coverage", self.coverage), ("collision", self.collision)] {
            if !(x > 0.0 && x <= 1.0) {
                return Err(Error::InvalidConfig {
                    field: format!("schedule.{name}"),
                    reason: format!("{x} is outside (0, 1]"),
                });
            }
        }
        if self.l_min == 0 || self.l_cap < self.l_min {
            return Err(Error::InvalidConfig {
                field: "schedule.l_cap".into(),
                reason: format!("need 1 <= l_min <= l_cap, got l_min {} and l_cap {}", self.l_min, self.l_cap),
            });
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScheduleEntry {
    pub n: usize,
    pub l: usize,
    pub coverage: f64,
    pub collision: Vec<f64>,
}

/// Largest `l` in `l_min..=l_cap` meeting both thresholds for one model.
pub fn choose_l(
    sofic: &SoficMap,
    h: &GroupWord,
    pairs: &[(GroupWord, GroupWord)],
    thresholds: &ScheduleThresholds,
    offset: usize,
) -> Result<ScheduleEntry> {
    thresholds.validate()?;
    let cycles = extract_cycles(sofic, h)?;
    for l in (thresholds.l_min..=thresholds.l_cap).rev() {
        let coverage = check_condition_a(&partition_paths(&cycles, l, offset)?);
        if coverage < 1.0 - thresholds.coverage {
            continue;
        }
        let collision = check_condition_b(sofic, h, pairs, l)?;
        if collision.iter().all(|&c| c <= thresholds.collision) {
            return Ok(ScheduleEntry {
                n: sofic.n(),
                l,
                coverage,
                collision,
            });
        }
    }
    Err(Error::NoFeasibleSchedule(format!(
        "no path length in {}..={} meets the thresholds for n = {}",
        thresholds.l_min,
        thresholds.l_cap,
        sofic.n()
    )))
}

/// [`choose_l`] for each model of a sequence.
pub fn schedule_l(
    sofics: &[SoficMap],
    h: &GroupWord,
    pairs: &[(GroupWord, GroupWord)],
    thresholds: &ScheduleThresholds,
    offset: usize,
) -> Result<Vec<ScheduleEntry>> {
    sofics.iter().map(|s| choose_l(s, h, pairs, thresholds, offset)).collect()
}
