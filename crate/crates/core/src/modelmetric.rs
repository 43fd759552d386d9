//! The weighted graph `H_sigma` on the vertices of a model and its
//! shortest-path metric `rho_sigma`.
//!
//! Two vertices are adjacent when some `g` in the ball `B(1, R_edge)` maps
//! one to the other; the edge weight is the least `rho(g, 1)` achieving it.
//! Distances are computed on demand by Dijkstra. Vertices in different
//! components sit at the sentinel distance `M`.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::construction::PathPartition;
use crate::error::{invalid_arg, Error, Result};
use crate::group::{CosetDecomposition, GroupWord, METRIC_TOL};
use crate::sofic::SoficMap;

#[derive(Clone, Debug, PartialEq)]
pub struct ModelMetric {
    adjacency: Vec<Vec<(usize, f64)>>,
    component: Vec<usize>,
    component_sizes: Vec<usize>,
    sentinel: f64,
    edge_radius: f64,
}

#[derive(Copy, Clone, PartialEq)]
struct HeapEntry {
    dist: f64,
    vertex: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Order in which the greedy selection visits candidate vertices.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "value")]
pub enum VertexOrder {
    Ascending,
    Descending,
    /// Seeded uniform shuffle.
    Shuffled(u64),
    Explicit(Vec<usize>),
}

impl VertexOrder {
    pub fn label(&self) -> String {
        match self {
            VertexOrder::Ascending => "ascending".into(),
            VertexOrder::Descending => "descending".into(),
            VertexOrder::Shuffled(seed) => format!("shuffled:{seed}"),
            VertexOrder::Explicit(_) => "explicit".into(),
        }
    }

    fn arrange(&self, vertices: &[usize]) -> Vec<usize> {
        let mut v = vertices.to_vec();
        match self {
            VertexOrder::Ascending => v.sort_unstable(),
            VertexOrder::Descending => v.sort_unstable_by(|a, b| b.cmp(a)),
            VertexOrder::Shuffled(seed) => {
                v.sort_unstable();
                v.shuffle(&mut ChaCha8Rng::seed_from_u64(*seed));
            }
            VertexOrder::Explicit(order) => return order.clone(),
        }
        v
    }
}

/// A greedy maximal `r`-separated subset together with its covering witnesses.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeparatedSet {
    pub radius: f64,
    pub order: String,
    pub members: Vec<usize>,
    /// `(w, s, rho(w, s))` with `rho < radius` for every candidate `w` not selected.
    pub witnesses: Vec<(usize, usize, f64)>,
}

impl ModelMetric {
    /// Builds `H_sigma` from the ball `B(1, edge_radius)`.
    pub fn build(sofic: &SoficMap, edge_radius: f64) -> Result<Self> {
        if edge_radius > sofic.budget() + METRIC_TOL {
            return Err(Error::BudgetExceeded {
                word: format!("ball of radius {edge_radius}"),
                length: edge_radius,
                budget: sofic.budget(),
            });
        }
        let pres = sofic.presentation();
        let n = sofic.n();
        let mut best: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
        for g in pres.ball(edge_radius)? {
            if g.is_identity() {
                continue;
            }
            let w = pres.word_metric(&g);
            let p = sofic.evaluate(&g)?;
            for v in 0..n {
                let u = p.apply(v);
                if u == v {
                    continue;
                }
                for (a, b) in [(v, u), (u, v)] {
                    let e = best[a].entry(b).or_insert(w);
                    if w < *e {
                        *e = w;
                    }
                }
            }
        }
        let adjacency: Vec<Vec<(usize, f64)>> =
            best.into_iter().map(|m| m.into_iter().collect()).collect();
        Ok(Self::from_adjacency(adjacency, edge_radius))
    }

    fn from_adjacency(adjacency: Vec<Vec<(usize, f64)>>, edge_radius: f64) -> Self {
        let n = adjacency.len();
        let mut component = vec![usize::MAX; n];
        let mut component_sizes = Vec::new();
        let mut roots = Vec::new();
        for root in 0..n {
            if component[root] != usize::MAX {
                continue;
            }
            let id = component_sizes.len();
            let mut stack = vec![root];
            component[root] = id;
            let mut size = 0;
            while let Some(v) = stack.pop() {
                size += 1;
                for &(u, _) in &adjacency[v] {
                    if component[u] == usize::MAX {
                        component[u] = id;
                        stack.push(u);
                    }
                }
            }
            component_sizes.push(size);
            roots.push(root);
        }
        let mut metric = ModelMetric {
            adjacency,
            component,
            component_sizes,
            sentinel: 0.0,
            edge_radius,
        };
        // twice the eccentricity of any vertex bounds the component diameter
        let bound = roots
            .iter()
            .map(|&r| {
                metric
                    .dijkstra(&[r], f64::INFINITY, false)
                    .into_iter()
                    .map(|(_, d)| d)
                    .fold(0.0, f64::max)
                    * 2.0
            })
            .fold(0.0, f64::max);
        metric.sentinel = 1.0 + 2.0 * bound;
        metric
    }

    pub fn n(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_radius(&self) -> f64 {
        self.edge_radius
    }

    /// Cross-component distance `M`.
    pub fn sentinel(&self) -> f64 {
        self.sentinel
    }

    pub fn component_of(&self, v: usize) -> usize {
        self.component[v]
    }

    pub fn component_count(&self) -> usize {
        self.component_sizes.len()
    }

    pub fn neighbors(&self, v: usize) -> &[(usize, f64)] {
        &self.adjacency[v]
    }

    /// Multi-source Dijkstra; returns `(vertex, distance)` for reached vertices
    /// with `distance <= limit` (or `< limit` when `strict`).
    fn dijkstra(&self, sources: &[usize], limit: f64, strict: bool) -> Vec<(usize, f64)> {
        let inside = |d: f64| if strict { d < limit - METRIC_TOL } else { d <= limit + METRIC_TOL };
        let mut dist: BTreeMap<usize, f64> = BTreeMap::new();
        let mut heap = BinaryHeap::new();
        for &s in sources {
            dist.insert(s, 0.0);
            heap.push(HeapEntry { dist: 0.0, vertex: s });
        }
        let mut done = Vec::new();
        let mut settled = std::collections::BTreeSet::new();
        while let Some(HeapEntry { dist: d, vertex: v }) = heap.pop() {
            if !settled.insert(v) {
                continue;
            }
            done.push((v, d));
            for &(u, w) in &self.adjacency[v] {
                let nd = d + w;
                if !inside(nd) {
                    continue;
                }
                let better = dist.get(&u).is_none_or(|&old| nd < old);
                if better {
                    dist.insert(u, nd);
                    heap.push(HeapEntry { dist: nd, vertex: u });
                }
            }
        }
        done
    }

    /// `rho_sigma(v, w)`.
    pub fn distance(&self, v: usize, w: usize) -> f64 {
        if v == w {
            return 0.0;
        }
        if self.component[v] != self.component[w] {
            return self.sentinel;
        }
        let mut dist: BTreeMap<usize, f64> = BTreeMap::new();
        let mut heap = BinaryHeap::new();
        dist.insert(v, 0.0);
        heap.push(HeapEntry { dist: 0.0, vertex: v });
        while let Some(HeapEntry { dist: d, vertex: x }) = heap.pop() {
            if x == w {
                return d;
            }
            if dist.get(&x).is_some_and(|&best| d > best) {
                continue;
            }
            for &(u, wt) in &self.adjacency[x] {
                let nd = d + wt;
                if dist.get(&u).is_none_or(|&old| nd < old) {
                    dist.insert(u, nd);
                    heap.push(HeapEntry { dist: nd, vertex: u });
                }
            }
        }
        unreachable!("vertices in one component are connected")
    }

    /// Distances from `v` to every vertex of its component.
    pub fn distances_from(&self, v: usize) -> Vec<f64> {
        let mut out = vec![self.sentinel; self.n()];
        for (u, d) in self.dijkstra(&[v], f64::INFINITY, false) {
            out[u] = d;
        }
        out
    }

    /// The closed ball `B(v, r)` as `(vertex, distance)` pairs.
    pub fn ball(&self, v: usize, r: f64) -> Vec<(usize, f64)> {
        let mut out = self.dijkstra(&[v], r, false);
        if r + METRIC_TOL >= self.sentinel {
            let inside: std::collections::BTreeSet<usize> = out.iter().map(|x| x.0).collect();
            out.extend((0..self.n()).filter(|u| !inside.contains(u)).map(|u| (u, self.sentinel)));
        }
        out
    }

    fn open_ball(&self, v: usize, r: f64) -> Vec<(usize, f64)> {
        let mut out = self.dijkstra(&[v], r, true);
        if self.sentinel < r - METRIC_TOL {
            let inside: std::collections::BTreeSet<usize> = out.iter().map(|x| x.0).collect();
            out.extend((0..self.n()).filter(|u| !inside.contains(u)).map(|u| (u, self.sentinel)));
        }
        out
    }

    /// Greedy maximal `r`-separated subset of `candidates`, visited in `order`.
    pub fn separated_set_greedy(&self, candidates: &[usize], r: f64, order: &VertexOrder) -> Result<SeparatedSet> {
        if r.is_nan() || r <= 0.0 {
            return Err(invalid_arg("r", format!("separation radius {r} must be positive")));
        }
        let n = self.n();
        let mut is_candidate = vec![false; n];
        for &v in candidates {
            if v >= n {
                return Err(Error::UnknownSite { vertex: v });
            }
            is_candidate[v] = true;
        }
        let visit = order.arrange(candidates);
        let mut blocked: Vec<Option<(usize, f64)>> = vec![None; n];
        let mut members = Vec::new();
        for &v in &visit {
            if v >= n || !is_candidate[v] || blocked[v].is_some() {
                continue;
            }
            members.push(v);
            for (u, d) in self.open_ball(v, r) {
                if blocked[u].is_none() {
                    blocked[u] = Some((v, d));
                }
            }
        }
        let mut witnesses = Vec::new();
        let mut sorted = candidates.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        for w in sorted {
            if let Some((s, d)) = blocked[w] {
                if s != w {
                    witnesses.push((w, s, d));
                }
            }
        }
        members.sort_unstable();
        Ok(SeparatedSet {
            radius: r,
            order: order.label(),
            members,
            witnesses,
        })
    }

    /// First pair of `set` closer than `r`, if any.
    pub fn separation_violation(&self, set: &[usize], r: f64) -> Option<(usize, usize, f64)> {
        let mut member = vec![false; self.n()];
        for &s in set {
            member[s] = true;
        }
        for &s in set {
            for (u, d) in self.open_ball(s, r) {
                if u != s && member[u] {
                    return Some((s, u, d));
                }
            }
        }
        None
    }

    /// A candidate outside `set` at distance `>= r` from all of `set`, if any.
    pub fn maximality_violation(&self, candidates: &[usize], set: &[usize], r: f64) -> Option<usize> {
        if set.is_empty() {
            return candidates.first().copied();
        }
        let mut near = vec![false; self.n()];
        for (u, _) in self.dijkstra(set, r, true) {
            near[u] = true;
        }
        if self.sentinel < r - METRIC_TOL {
            return None;
        }
        candidates.iter().copied().find(|&w| !near[w])
    }

    /// CSV edge list `v,w,weight` with `v < w`.
    pub fn write_edges_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["v", "w", "weight"])?;
        for (v, nbrs) in self.adjacency.iter().enumerate() {
            for &(u, weight) in nbrs {
                if v < u {
                    w.serialize((v, u, weight))?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn summary(&self) -> MetricSummary {
        MetricSummary {
            n: self.n(),
            edge_radius: self.edge_radius,
            sentinel: self.sentinel,
            edges: self.adjacency.iter().map(Vec::len).sum::<usize>() / 2,
            component_sizes: self.component_sizes.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub n: usize,
    pub edge_radius: f64,
    pub sentinel: f64,
    pub edges: usize,
    pub component_sizes: Vec<usize>,
}

/// Vertices where the window orbit map `g -> sigma^g v` is injective.
pub fn injective_vertices(sofic: &SoficMap, window: &[GroupWord]) -> Result<Vec<usize>> {
    Ok(sofic
        .injective_mask(window)?
        .into_iter()
        .enumerate()
        .filter_map(|(v, ok)| ok.then_some(v))
        .collect())
}

/// The good vertex set of the path construction: vertices where
/// (i) the orbit map is injective on the enlarged window,
/// (ii) `sigma^{h^i t_k} v = (sigma^h)^i sigma^{t_k} v`, and
/// (iii) two images share a path exactly when their group elements share a
/// right coset of `<h>`, each coset's images filling consecutive positions
/// of one path.
pub fn good_vertices(sofic: &SoficMap, decomposition: &CosetDecomposition, paths: &PathPartition) -> Result<Vec<usize>> {
    let n = sofic.n();
    let h = &decomposition.h;
    let sh = sofic.evaluate(h)?;
    let window = &decomposition.enlarged;
    let perms = sofic.evaluate_all(window)?;
    let transversal = sofic.evaluate_all(&decomposition.transversal)?;
    let width = decomposition.interval_len();
    let lo = decomposition.interval.0;
    let power: BTreeMap<i64, _> = decomposition.exponents().map(|i| (i, sh.pow(i))).collect();
    let path_of = paths.path_index(n);
    let mut good = Vec::new();
    'vertex: for v in 0..n {
        let images: Vec<usize> = perms.iter().map(|p| p.apply(v)).collect();
        let mut sorted = images.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != images.len() {
            continue;
        }
        for (k, t) in transversal.iter().enumerate() {
            let base = t.apply(v);
            for j in 0..width {
                let i = lo + j as i64;
                if power[&i].apply(base) != images[k * width + j] {
                    continue 'vertex;
                }
            }
        }
        let mut coset_path = vec![usize::MAX; transversal.len()];
        for (idx, &x) in images.iter().enumerate() {
            let Some((p, pos)) = path_of[x] else {
                continue 'vertex;
            };
            let (k, j) = (idx / width, idx % width);
            if j == 0 {
                coset_path[k] = p;
            }
            // consecutive exponents must sit at consecutive path positions
            let Some((p0, pos0)) = path_of[images[k * width]] else {
                continue 'vertex;
            };
            if p != p0 || pos != pos0 + j {
                continue 'vertex;
            }
        }
        let mut distinct = coset_path.clone();
        distinct.sort_unstable();
        distinct.dedup();
        if distinct.len() != coset_path.len() {
            continue;
        }
        good.push(v);
    }
    Ok(good)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construction::{extract_cycles, partition_paths};
    use crate::group::GroupPresentation;
    use crate::sofic::Permutation;

    fn cycle_metric(n: usize) -> ModelMetric {
        let s = SoficMap::cycle(n).unwrap();
        ModelMetric::build(&s, 1.0).unwrap()
    }

    #[test]
    fn cycle_distances() {
        let m = cycle_metric(10);
        assert_eq!(m.distance(4, 4), 0.0);
        assert_eq!(m.distance(0, 3), 3.0);
        assert_eq!(m.distance(0, 7), 3.0);
        let small = cycle_metric(5);
        assert_eq!(small.distance(0, 3), 2.0);
    }

    #[test]
    fn identity_map_has_isolated_vertices() {
        let s = SoficMap::from_parts(
            GroupPresentation::integers(),
            4.0,
            vec![Permutation::identity(2)],
            Default::default(),
        )
        .unwrap();
        let m = ModelMetric::build(&s, 2.0).unwrap();
        assert_eq!(m.component_count(), 2);
        assert_eq!(m.distance(0, 1), m.sentinel());
        assert!(m.sentinel() > 0.0);
    }

    #[test]
    fn edge_radius_beyond_budget() {
        let s = SoficMap::cycle(8).unwrap().with_budget(2.0).unwrap();
        assert!(matches!(ModelMetric::build(&s, 3.0), Err(Error::BudgetExceeded { .. })));
    }

    #[test]
    fn weight_is_minimal_witness() {
        // with R_edge = 3 the edge 0-3 appears with weight 3 and 0-9 with weight 3 on C_12
        let s = SoficMap::cycle(12).unwrap();
        let m = ModelMetric::build(&s, 3.0).unwrap();
        assert!(m.neighbors(0).contains(&(3, 3.0)));
        assert!(m.neighbors(0).contains(&(9, 3.0)));
        assert_eq!(m.distance(0, 6), 6.0);
    }

    #[test]
    fn greedy_on_c12() {
        let m = cycle_metric(12);
        let all: Vec<usize> = (0..12).collect();
        let s = m.separated_set_greedy(&all, 3.0, &VertexOrder::Ascending).unwrap();
        assert_eq!(s.members, vec![0, 3, 6, 9]);
        assert!(m.separation_violation(&s.members, 3.0).is_none());
        assert!(m.maximality_violation(&all, &s.members, 3.0).is_none());
        assert_eq!(s.witnesses.len(), 8);
    }

    #[test]
    fn greedy_small_radius_takes_everything() {
        let m = cycle_metric(9);
        let w = vec![1, 4, 5, 8];
        let s = m.separated_set_greedy(&w, 1.0, &VertexOrder::Descending).unwrap();
        assert_eq!(s.members, w);
    }

    #[test]
    fn greedy_huge_radius_one_per_component() {
        let s = SoficMap::from_parts(
            GroupPresentation::integers(),
            4.0,
            vec![Permutation::from_images(vec![1, 2, 0, 4, 5, 3]).unwrap()],
            Default::default(),
        )
        .unwrap();
        let m = ModelMetric::build(&s, 1.0).unwrap();
        let all: Vec<usize> = (0..6).collect();
        let r = 2.5;
        assert!(r < m.sentinel());
        let sep = m.separated_set_greedy(&all, r, &VertexOrder::Ascending).unwrap();
        assert_eq!(sep.members, vec![0, 3]);
    }

    #[test]
    fn greedy_rejects_nonpositive_radius() {
        let m = cycle_metric(4);
        assert!(m.separated_set_greedy(&[0], 0.0, &VertexOrder::Ascending).is_err());
    }

    #[test]
    fn good_vertices_on_100_cycle() {
        let s = SoficMap::cycle(100).unwrap();
        let pres = s.presentation().clone();
        let h = pres.generator(0);
        let cycles = extract_cycles(&s, &h).unwrap();
        let part = partition_paths(&cycles, 10, 0).unwrap();
        let d = pres.coset_decompose(&[pres.identity(), h.clone()], &h).unwrap();
        assert_eq!(good_vertices(&s, &d, &part).unwrap().len(), 90);
        let d1 = pres.coset_decompose(&[pres.identity()], &h).unwrap();
        assert_eq!(good_vertices(&s, &d1, &part).unwrap().len(), 100);
    }

    #[test]
    fn good_vertices_singleton_window_counts_covered() {
        let s = SoficMap::cycle(10).unwrap();
        let pres = s.presentation().clone();
        let h = pres.generator(0);
        let part = partition_paths(&extract_cycles(&s, &h).unwrap(), 3, 0).unwrap();
        let d = pres.coset_decompose(&[pres.identity()], &h).unwrap();
        assert_eq!(good_vertices(&s, &d, &part).unwrap().len(), 9);
    }

    #[test]
    fn edges_csv() {
        let m = cycle_metric(3);
        let mut buf = Vec::new();
        m.write_edges_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(text.starts_with("v,w,weight\n0,1,1.0\n"));
    }
}
