//! Immutable simple undirected graphs and their distance statistics.
//!
//! The graph is stored in CSR form (offsets + flattened sorted neighbor
//! lists). Everything downstream — histograms, tail profiles, the mixing
//! radius, the brute-force Cheeger oracle — works on hop distances obtained
//! from per-source BFS. Per-source runs are independent and merged with
//! integer reductions, so parallel execution is bit-identical to sequential.

use std::collections::{BTreeMap, HashMap, VecDeque};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const UNREACHED: u32 = u32::MAX;

/// Default memory budget for cached BFS rows in sampled-histogram mode.
pub const DEFAULT_ROW_CACHE_BYTES: usize = 256 << 20;

/// Immutable simple undirected graph with sorted adjacency.
///
/// Invariants: no self-loops, no duplicate edges, symmetric adjacency,
/// neighbor lists strictly increasing. Built through [`build_graph`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    offsets: Vec<usize>,
    targets: Vec<u32>,
}

/// What [`build_graph`] dropped while normalizing the edge list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BuildStats {
    pub self_loops_dropped: usize,
    pub duplicates_dropped: usize,
}

impl Graph {
    pub fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len() / 2
    }

    /// Number of unordered node pairs, `n(n-1)/2`.
    pub fn unordered_pairs(&self) -> u64 {
        let n = self.node_count() as u64;
        n * (n - 1) / 2
    }

    /// Total volume `sum of degrees = 2m`.
    pub fn volume(&self) -> u64 {
        self.targets.len() as u64
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.targets[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors(u).binary_search(&(v as u32)).is_ok()
    }

    /// Iterate edges as `(u, v)` with `u < v`, in canonical sorted order.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (0..self.node_count()).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .filter(move |&&v| v as usize > u)
                .map(move |&v| (u as u32, v))
        })
    }

    pub fn is_connected(&self) -> bool {
        let n = self.node_count();
        if n == 0 {
            return false;
        }
        let mut dist = vec![UNREACHED; n];
        let mut queue = VecDeque::new();
        self.bfs_into(0, &mut dist, &mut queue) == n
    }

    /// Copy-on-write edge addition; the receiver is left untouched.
    pub fn with_edge(&self, i: usize, j: usize) -> Result<Graph> {
        let n = self.node_count();
        for &v in &[i, j] {
            if v >= n {
                return Err(Error::NodeOutOfRange {
                    id: v as u32,
                    n,
                });
            }
        }
        if i == j {
            return Err(Error::InvalidInput("self-loop edge".into()));
        }
        if self.has_edge(i, j) {
            return Err(Error::EdgeExists {
                i: i as u32,
                j: j as u32,
            });
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut targets = Vec::with_capacity(self.targets.len() + 2);
        offsets.push(0);
        for u in 0..n {
            let row = self.neighbors(u);
            if u == i || u == j {
                let added = if u == i { j as u32 } else { i as u32 };
                let pos = row.partition_point(|&t| t < added);
                targets.extend_from_slice(&row[..pos]);
                targets.push(added);
                targets.extend_from_slice(&row[pos..]);
            } else {
                targets.extend_from_slice(row);
            }
            offsets.push(targets.len());
        }
        Ok(Graph { offsets, targets })
    }

    /// BFS into a caller-provided distance buffer; returns the reached count.
    /// Unreached entries are left at `u32::MAX`.
    fn bfs_into(&self, source: usize, dist: &mut Vec<u32>, queue: &mut VecDeque<u32>) -> usize {
        let n = self.node_count();
        dist.clear();
        dist.resize(n, UNREACHED);
        queue.clear();
        dist[source] = 0;
        queue.push_back(source as u32);
        let mut reached = 1;
        while let Some(u) = queue.pop_front() {
            let next = dist[u as usize] + 1;
            for &v in self.neighbors(u as usize) {
                if dist[v as usize] == UNREACHED {
                    dist[v as usize] = next;
                    reached += 1;
                    queue.push_back(v);
                }
            }
        }
        reached
    }
}

/// Build a graph from an edge list, dropping self-loops and duplicates.
pub fn build_graph(n: usize, edges: &[(u32, u32)]) -> Result<(Graph, BuildStats)> {
    let mut pairs = Vec::with_capacity(edges.len());
    let mut stats = BuildStats::default();
    for &(u, v) in edges {
        if u as usize >= n {
            return Err(Error::NodeOutOfRange { id: u, n });
        }
        if v as usize >= n {
            return Err(Error::NodeOutOfRange { id: v, n });
        }
        if u == v {
            stats.self_loops_dropped += 1;
            continue;
        }
        pairs.push((u.min(v), u.max(v)));
    }
    pairs.sort_unstable();
    let before = pairs.len();
    pairs.dedup();
    stats.duplicates_dropped = before - pairs.len();

    let mut degrees = vec![0usize; n];
    for &(u, v) in &pairs {
        degrees[u as usize] += 1;
        degrees[v as usize] += 1;
    }
    let mut offsets = Vec::with_capacity(n + 1);
    let mut acc = 0;
    offsets.push(0);
    for &d in &degrees {
        acc += d;
        offsets.push(acc);
    }
    let mut cursor: Vec<usize> = offsets[..n].to_vec();
    let mut targets = vec![0u32; acc];
    // Pairs are lexicographically sorted, so each row fills in increasing order.
    for &(u, v) in &pairs {
        targets[cursor[u as usize]] = v;
        cursor[u as usize] += 1;
        targets[cursor[v as usize]] = u;
        cursor[v as usize] += 1;
    }
    Ok((Graph { offsets, targets }, stats))
}

/// Node relabeling produced by [`largest_connected_component`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relabeling {
    /// `old_to_new[old]` is the new id, or `None` if the node was dropped.
    pub old_to_new: Vec<Option<u32>>,
    /// `new_to_old[new]` is the original id.
    pub new_to_old: Vec<u32>,
}

/// Extract the largest connected component, relabeled to `0..n'-1` in
/// increasing original-id order. Ties between equal-size components go to the
/// one containing the smallest original id.
pub fn largest_connected_component(g: &Graph) -> Result<(Graph, Relabeling)> {
    let n = g.node_count();
    if n == 0 {
        return Err(Error::EmptyGraph);
    }
    let mut component = vec![usize::MAX; n];
    let mut sizes = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..n {
        if component[start] != usize::MAX {
            continue;
        }
        let id = sizes.len();
        let mut size = 0usize;
        component[start] = id;
        queue.push_back(start as u32);
        while let Some(u) = queue.pop_front() {
            size += 1;
            for &v in g.neighbors(u as usize) {
                if component[v as usize] == usize::MAX {
                    component[v as usize] = id;
                    queue.push_back(v);
                }
            }
        }
        sizes.push(size);
    }
    // Components are discovered in increasing min-id order, so the first
    // maximum settles ties toward the smallest contained original id.
    let best = sizes
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
        .map(|(i, _)| i)
        .expect("at least one component");

    let mut old_to_new = vec![None; n];
    let mut new_to_old = Vec::with_capacity(sizes[best]);
    for old in 0..n {
        if component[old] == best {
            old_to_new[old] = Some(new_to_old.len() as u32);
            new_to_old.push(old as u32);
        }
    }
    let edges: Vec<(u32, u32)> = g
        .edges()
        .filter_map(|(u, v)| {
            Some((
                old_to_new[u as usize]?,
                old_to_new[v as usize]?,
            ))
        })
        .collect();
    let (lcc, _) = build_graph(new_to_old.len(), &edges)?;
    Ok((
        lcc,
        Relabeling {
            old_to_new,
            new_to_old,
        },
    ))
}

/// Hop distances from `source` to every node; `None` marks unreachable nodes.
pub fn bfs_distances(g: &Graph, source: usize) -> Result<Vec<Option<u32>>> {
    let n = g.node_count();
    if source >= n {
        return Err(Error::NodeOutOfRange {
            id: source as u32,
            n,
        });
    }
    let mut dist = Vec::new();
    let mut queue = VecDeque::new();
    g.bfs_into(source, &mut dist, &mut queue);
    Ok(dist
        .into_iter()
        .map(|d| if d == UNREACHED { None } else { Some(d) })
        .collect())
}

/// How a distance histogram was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HistogramMode {
    Exact,
    Sampled { pairs: u64, seed: u64 },
}

/// Counts of unordered node pairs per hop distance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistanceHistogram {
    counts: BTreeMap<u32, u64>,
    pair_total: u64,
    mode: HistogramMode,
}

impl DistanceHistogram {
    /// Assemble a histogram from raw counts. In exact mode the counts must
    /// sum to `pair_total`.
    pub fn from_counts(
        counts: BTreeMap<u32, u64>,
        pair_total: u64,
        mode: HistogramMode,
    ) -> Result<Self> {
        if counts.contains_key(&0) {
            return Err(Error::InvalidInput(
                "distance 0 cannot appear in a pair histogram".into(),
            ));
        }
        let total: u64 = counts.values().sum();
        match mode {
            HistogramMode::Exact if total != pair_total => {
                return Err(Error::InvalidInput(format!(
                    "exact histogram counts sum to {total}, expected {pair_total}"
                )));
            }
            HistogramMode::Sampled { pairs, .. } if total != pairs => {
                return Err(Error::InvalidInput(format!(
                    "sampled histogram counts sum to {total}, expected {pairs}"
                )));
            }
            _ => {}
        }
        Ok(DistanceHistogram {
            counts,
            pair_total,
            mode,
        })
    }

    /// Per-distance pair counts (sample counts in sampled mode).
    pub fn counts(&self) -> &BTreeMap<u32, u64> {
        &self.counts
    }

    /// `M = n(n-1)/2` of the underlying graph.
    pub fn pair_total(&self) -> u64 {
        self.pair_total
    }

    pub fn mode(&self) -> HistogramMode {
        self.mode
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.mode, HistogramMode::Exact)
    }

    /// Sum of all counts: `M` in exact mode, the sample count otherwise.
    pub fn total_counted(&self) -> u64 {
        self.counts.values().sum()
    }

    /// Largest observed hop distance (the hop diameter in exact mode).
    pub fn max_distance(&self) -> u32 {
        self.counts.keys().next_back().copied().unwrap_or(0)
    }
}

/// All-pairs (or sampled) hop-distance histogram of a connected graph.
pub fn distance_histogram(g: &Graph, mode: HistogramMode) -> Result<DistanceHistogram> {
    distance_histogram_with_cache(g, mode, DEFAULT_ROW_CACHE_BYTES)
}

/// Same as [`distance_histogram`] with an explicit BFS-row cache budget for
/// sampled mode. The budget only affects speed, never the counts.
pub fn distance_histogram_with_cache(
    g: &Graph,
    mode: HistogramMode,
    cache_bytes: usize,
) -> Result<DistanceHistogram> {
    let n = g.node_count();
    if n < 2 {
        return Err(Error::InvalidInput(
            "distance histogram needs at least 2 nodes".into(),
        ));
    }
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    match mode {
        HistogramMode::Exact => {
            let layers = exact_layer_counts(g, true);
            let counts: BTreeMap<u32, u64> = layers
                .into_iter()
                .enumerate()
                .filter(|&(h, c)| h > 0 && c > 0)
                .map(|(h, c)| (h as u32, c))
                .collect();
            let hist = DistanceHistogram {
                counts,
                pair_total: g.unordered_pairs(),
                mode,
            };
            debug_assert_eq!(hist.total_counted(), hist.pair_total());
            Ok(hist)
        }
        HistogramMode::Sampled { pairs, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut cache = RowCache::new(g, cache_bytes);
            let mut counts: BTreeMap<u32, u64> = BTreeMap::new();
            for _ in 0..pairs {
                let (u, v) = loop {
                    let a = rng.random_range(0..n as u32);
                    let b = rng.random_range(0..n as u32);
                    if a != b {
                        break (a.min(b), a.max(b));
                    }
                };
                let d = cache.row(u)[v as usize];
                debug_assert_ne!(d, UNREACHED);
                *counts.entry(d).or_insert(0) += 1;
            }
            Ok(DistanceHistogram {
                counts,
                pair_total: g.unordered_pairs(),
                mode,
            })
        }
    }
}

/// Per-distance counts from BFS over all sources. With `unordered` each pair
/// is counted once (targets above the source); otherwise both directions.
fn exact_layer_counts(g: &Graph, unordered: bool) -> Vec<u64> {
    let n = g.node_count();
    (0..n)
        .into_par_iter()
        .fold(
            || (vec![0u64; n], Vec::new(), VecDeque::new()),
            |(mut acc, mut dist, mut queue), u| {
                let reached = g.bfs_into(u, &mut dist, &mut queue);
                debug_assert_eq!(reached, n);
                let from = if unordered { u + 1 } else { 0 };
                for v in from..n {
                    if v != u {
                        acc[dist[v] as usize] += 1;
                    }
                }
                (acc, dist, queue)
            },
        )
        .map(|(acc, _, _)| acc)
        .reduce(
            || vec![0u64; n],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        )
}

/// Fraction of unordered pairs at hop distance greater than each radius,
/// plus the mixing radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailProfile {
    /// `tau[r]`, for `r = 0..=max_radius`. Non-increasing, `tau[0] = 1`.
    pub tau: Vec<f64>,
    /// Exact numerators: number of pairs at distance `> r`.
    pub pairs_beyond: Vec<u64>,
    /// Mixing radius `r*`.
    pub r_star: usize,
}

impl TailProfile {
    /// `tau_r`, treating radii past the diameter as 0.
    pub fn tau_at(&self, r: usize) -> f64 {
        self.tau.get(r).copied().unwrap_or(0.0)
    }

    /// Hop diameter (largest index stored).
    pub fn max_radius(&self) -> usize {
        self.tau.len() - 1
    }
}

/// Tail profile of a connected graph from its exact histogram.
///
/// `tau_r` is computed twice — as a suffix sum of the histogram and through
/// the pair-ball identity `tau_r = (1/2M) * sum_u |V \ B_r(u)|` — and the two
/// integer numerators must agree exactly before the final division.
pub fn tail_profile(g: &Graph, hist: &DistanceHistogram) -> Result<TailProfile> {
    if !hist.is_exact() {
        return Err(Error::SampledHistogram);
    }
    let m_pairs = g.unordered_pairs();
    if hist.pair_total() != m_pairs || hist.total_counted() != m_pairs {
        return Err(Error::InvalidInput(
            "histogram does not match the graph".into(),
        ));
    }
    let diam = hist.max_distance() as usize;

    // Route (i): suffix sums over the unordered histogram.
    let mut beyond = vec![0u64; diam + 1];
    for (&h, &c) in hist.counts() {
        for slot in beyond.iter_mut().take(h as usize) {
            *slot += c;
        }
    }

    // Route (ii): ordered ball complements, summed over all sources.
    let ordered = exact_layer_counts(g, false);
    let mut beyond_ordered = vec![0u64; diam + 1];
    for (h, &c) in ordered.iter().enumerate() {
        for slot in beyond_ordered.iter_mut().take(h) {
            *slot += c;
        }
    }

    for r in 0..=diam {
        if 2 * beyond[r] != beyond_ordered[r] {
            return Err(Error::TailMismatch {
                r,
                from_hist: beyond[r],
                from_balls: beyond_ordered[r],
            });
        }
    }

    let tau = beyond.iter().map(|&b| b as f64 / m_pairs as f64).collect();
    Ok(TailProfile {
        tau,
        pairs_beyond: beyond,
        r_star: r_star_mixing_radius(g)?,
    })
}

/// Mixing radius `r* = max_u t*(u)`, where `t*(u)` is the first radius at
/// which the ball volume around `u` strictly exceeds `vol(V)/2`. Ball volume
/// at radius 0 is the source's own degree.
pub fn r_star_mixing_radius(g: &Graph) -> Result<usize> {
    let n = g.node_count();
    if n < 2 {
        return Err(Error::InvalidInput(
            "mixing radius needs at least 2 nodes".into(),
        ));
    }
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    // vol(V)/2 = m exactly, so the strict test stays in integers.
    let half = g.edge_count() as u64;
    let r_star = (0..n)
        .into_par_iter()
        .map_init(
            || (Vec::new(), VecDeque::new()),
            |(dist, queue), u| {
                g.bfs_into(u, dist, queue);
                let mut vol_by_layer = vec![0u64; n];
                let mut max_d = 0;
                for (v, &d) in dist.iter().enumerate() {
                    let d = d as usize;
                    vol_by_layer[d] += g.degree(v) as u64;
                    max_d = max_d.max(d);
                }
                let mut running = 0u64;
                for (t, &vol) in vol_by_layer.iter().enumerate().take(max_d + 1) {
                    running += vol;
                    if running > half {
                        return t;
                    }
                }
                max_d
            },
        )
        .max()
        .expect("non-empty graph");
    Ok(r_star)
}

/// Exact degree extremes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeStats {
    pub max_degree: usize,
    pub min_degree: usize,
}

impl DegreeStats {
    /// Degree ratio `beta = max/min` (exact integers under the hood).
    pub fn beta(&self) -> f64 {
        self.max_degree as f64 / self.min_degree as f64
    }
}

pub fn degree_stats(g: &Graph) -> Result<DegreeStats> {
    let n = g.node_count();
    if n == 0 {
        return Err(Error::EmptyGraph);
    }
    let mut max_degree = 0;
    let mut min_degree = usize::MAX;
    for v in 0..n {
        let d = g.degree(v);
        max_degree = max_degree.max(d);
        min_degree = min_degree.min(d);
    }
    Ok(DegreeStats {
        max_degree,
        min_degree,
    })
}

/// Minimizing cut of the volume-based Cheeger constant, as an exact rational
/// `boundary / volume`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CheegerCut {
    pub boundary: u64,
    pub volume: u64,
}

impl CheegerCut {
    pub fn value(&self) -> f64 {
        self.boundary as f64 / self.volume as f64
    }
}

/// Maximum size accepted by [`cheeger_bruteforce`].
pub const CHEEGER_MAX_NODES: usize = 14;

/// Exact volume-based Cheeger constant by subset enumeration. Oracle only:
/// refuses graphs with more than [`CHEEGER_MAX_NODES`] nodes.
pub fn cheeger_bruteforce(g: &Graph) -> Result<CheegerCut> {
    let n = g.node_count();
    if n > CHEEGER_MAX_NODES {
        return Err(Error::GraphTooLarge {
            n,
            limit: CHEEGER_MAX_NODES,
        });
    }
    if n < 2 {
        return Err(Error::InvalidInput(
            "Cheeger constant needs at least 2 nodes".into(),
        ));
    }
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    let half = g.edge_count() as u64;
    let edges: Vec<(u32, u32)> = g.edges().collect();
    let mut best: Option<CheegerCut> = None;
    for mask in 1u32..(1 << n) - 1 {
        let mut volume = 0u64;
        for v in 0..n {
            if mask >> v & 1 == 1 {
                volume += g.degree(v) as u64;
            }
        }
        if volume == 0 || volume > half {
            continue;
        }
        let boundary = edges
            .iter()
            .filter(|&&(u, v)| (mask >> u & 1) != (mask >> v & 1))
            .count() as u64;
        let better = match best {
            None => true,
            Some(b) => boundary * b.volume < b.boundary * volume,
        };
        if better {
            best = Some(CheegerCut { boundary, volume });
        }
    }
    best.ok_or_else(|| Error::InvalidInput("no admissible cut found".into()))
}

/// LRU cache of BFS distance rows, bounded by a byte budget.
struct RowCache<'g> {
    g: &'g Graph,
    rows: HashMap<u32, (Vec<u32>, u64)>,
    by_tick: BTreeMap<u64, u32>,
    tick: u64,
    max_rows: usize,
}

impl<'g> RowCache<'g> {
    fn new(g: &'g Graph, budget_bytes: usize) -> Self {
        let row_bytes = 4 * g.node_count().max(1);
        RowCache {
            g,
            rows: HashMap::new(),
            by_tick: BTreeMap::new(),
            tick: 0,
            max_rows: (budget_bytes / row_bytes).max(1),
        }
    }

    fn row(&mut self, src: u32) -> &[u32] {
        if !self.rows.contains_key(&src) {
            if self.rows.len() >= self.max_rows {
                if let Some((&t, &victim)) = self.by_tick.iter().next() {
                    self.by_tick.remove(&t);
                    self.rows.remove(&victim);
                }
            }
            let mut dist = Vec::new();
            let mut queue = VecDeque::new();
            self.g.bfs_into(src as usize, &mut dist, &mut queue);
            self.tick += 1;
            self.rows.insert(src, (dist, self.tick));
            self.by_tick.insert(self.tick, src);
        } else {
            let entry = self.rows.get_mut(&src).expect("present");
            self.by_tick.remove(&entry.1);
            self.tick += 1;
            entry.1 = self.tick;
            self.by_tick.insert(self.tick, src);
        }
        &self.rows[&src].0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{complete_graph, cycle_graph, path_graph, star_graph};

    #[test]
    fn build_drops_duplicates() {
        let (g, stats) = build_graph(3, &[(0, 1), (1, 2), (1, 0)]).unwrap();
        assert_eq!(g.edge_count(), 2);
        assert_eq!(stats.duplicates_dropped, 1);
        assert_eq!(stats.self_loops_dropped, 0);
    }

    #[test]
    fn build_drops_self_loops() {
        let (g, stats) = build_graph(2, &[(0, 0)]).unwrap();
        assert_eq!(g.edge_count(), 0);
        assert_eq!(stats.self_loops_dropped, 1);
    }

    #[test]
    fn build_complete_k4() {
        let g = complete_graph(4);
        assert_eq!(g.edge_count(), 6);
        for v in 0..4 {
            assert_eq!(g.degree(v), 3);
        }
    }

    #[test]
    fn build_rejects_out_of_range() {
        let err = build_graph(2, &[(0, 2)]).unwrap_err();
        assert!(matches!(err, Error::NodeOutOfRange { id: 2, n: 2 }));
    }

    #[test]
    fn adjacency_sorted_and_symmetric() {
        let (g, _) = build_graph(5, &[(3, 1), (4, 0), (1, 0), (2, 4), (1, 4)]).unwrap();
        for u in 0..5 {
            let row = g.neighbors(u);
            assert!(row.windows(2).all(|w| w[0] < w[1]), "row not sorted");
            for &v in row {
                assert!(g.has_edge(v as usize, u), "asymmetric edge");
            }
        }
    }

    #[test]
    fn lcc_ties_break_to_smallest_id() {
        // Two triangles plus an isolated node; the lower-labeled triangle wins.
        let (g, _) = build_graph(7, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)]).unwrap();
        let (lcc, map) = largest_connected_component(&g).unwrap();
        assert_eq!(lcc.node_count(), 3);
        assert_eq!(lcc.edge_count(), 3);
        assert_eq!(map.new_to_old, vec![0, 1, 2]);
        assert_eq!(map.old_to_new[3], None);
        assert_eq!(map.old_to_new[6], None);
    }

    #[test]
    fn lcc_of_connected_graph_is_identity() {
        let g = path_graph(4);
        let (lcc, map) = largest_connected_component(&g).unwrap();
        assert_eq!(lcc, g);
        assert_eq!(map.new_to_old, vec![0, 1, 2, 3]);
    }

    #[test]
    fn lcc_picks_path_component() {
        let (g, _) =
            build_graph(7, &[(0, 1), (1, 2), (2, 3), (3, 4), (5, 6)]).unwrap();
        let (lcc, _) = largest_connected_component(&g).unwrap();
        assert_eq!(lcc, path_graph(5));
    }

    #[test]
    fn lcc_rejects_empty_graph() {
        let (g, _) = build_graph(0, &[]).unwrap();
        assert!(matches!(
            largest_connected_component(&g),
            Err(Error::EmptyGraph)
        ));
    }

    #[test]
    fn bfs_path_and_clique_and_star() {
        let p4 = path_graph(4);
        let d: Vec<u32> = bfs_distances(&p4, 0)
            .unwrap()
            .into_iter()
            .map(Option::unwrap)
            .collect();
        assert_eq!(d, vec![0, 1, 2, 3]);

        let k4 = complete_graph(4);
        let d: Vec<u32> = bfs_distances(&k4, 2)
            .unwrap()
            .into_iter()
            .map(Option::unwrap)
            .collect();
        assert_eq!(d, vec![1, 1, 0, 1]);

        let s5 = star_graph(5);
        let d: Vec<u32> = bfs_distances(&s5, 0)
            .unwrap()
            .into_iter()
            .map(Option::unwrap)
            .collect();
        assert_eq!(d, vec![0, 1, 1, 1, 1]);
    }

    #[test]
    fn bfs_marks_unreachable() {
        let (g, _) = build_graph(3, &[(0, 1)]).unwrap();
        let d = bfs_distances(&g, 0).unwrap();
        assert_eq!(d, vec![Some(0), Some(1), None]);
    }

    #[test]
    fn histogram_path4_exact() {
        let hist = distance_histogram(&path_graph(4), HistogramMode::Exact).unwrap();
        let expect: BTreeMap<u32, u64> = [(1, 3), (2, 2), (3, 1)].into_iter().collect();
        assert_eq!(hist.counts(), &expect);
        assert_eq!(hist.pair_total(), 6);
    }

    #[test]
    fn histogram_complete_graph() {
        let hist = distance_histogram(&complete_graph(5), HistogramMode::Exact).unwrap();
        let expect: BTreeMap<u32, u64> = [(1, 10)].into_iter().collect();
        assert_eq!(hist.counts(), &expect);
    }

    #[test]
    fn histogram_rejects_disconnected() {
        let (g, _) = build_graph(4, &[(0, 1), (2, 3)]).unwrap();
        assert!(matches!(
            distance_histogram(&g, HistogramMode::Exact),
            Err(Error::Disconnected)
        ));
    }

    #[test]
    fn sampled_histogram_is_deterministic_and_totals_match() {
        let g = path_graph(10);
        let mode = HistogramMode::Sampled {
            pairs: 500,
            seed: 42,
        };
        let a = distance_histogram(&g, mode).unwrap();
        let b = distance_histogram(&g, mode).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.total_counted(), 500);
        assert_eq!(a.pair_total(), 45);
    }

    #[test]
    fn sampled_histogram_counts_independent_of_cache_budget() {
        let g = path_graph(30);
        let mode = HistogramMode::Sampled {
            pairs: 2000,
            seed: 7,
        };
        let tiny = distance_histogram_with_cache(&g, mode, 1).unwrap();
        let big = distance_histogram_with_cache(&g, mode, 64 << 20).unwrap();
        assert_eq!(tiny, big);
    }

    #[test]
    fn tail_profile_path4() {
        let g = path_graph(4);
        let hist = distance_histogram(&g, HistogramMode::Exact).unwrap();
        let profile = tail_profile(&g, &hist).unwrap();
        assert_eq!(profile.pairs_beyond, vec![6, 3, 1, 0]);
        assert_eq!(profile.tau, vec![1.0, 0.5, 1.0 / 6.0, 0.0]);
    }

    #[test]
    fn tail_profile_complete_graph() {
        let g = complete_graph(5);
        let hist = distance_histogram(&g, HistogramMode::Exact).unwrap();
        let profile = tail_profile(&g, &hist).unwrap();
        assert_eq!(profile.tau, vec![1.0, 0.0]);
    }

    #[test]
    fn tail_profile_star_leaf_pairs() {
        let g = star_graph(5);
        let hist = distance_histogram(&g, HistogramMode::Exact).unwrap();
        let profile = tail_profile(&g, &hist).unwrap();
        // Leaf-leaf pairs sit at distance 2: C(4,2)/C(5,2).
        assert_eq!(profile.tau[1], 6.0 / 10.0);
    }

    #[test]
    fn tail_profile_rejects_sampled() {
        let g = path_graph(5);
        let hist = distance_histogram(
            &g,
            HistogramMode::Sampled {
                pairs: 10,
                seed: 1,
            },
        )
        .unwrap();
        assert!(matches!(
            tail_profile(&g, &hist),
            Err(Error::SampledHistogram)
        ));
    }

    /// Independent enumeration of t*(u) per node, for cross-checking.
    fn r_star_oracle(g: &Graph) -> usize {
        let half = g.edge_count() as u64;
        (0..g.node_count())
            .map(|u| {
                let dist = bfs_distances(g, u).unwrap();
                let mut t = 0;
                loop {
                    let vol: u64 = (0..g.node_count())
                        .filter(|&v| dist[v].unwrap() as usize <= t)
                        .map(|v| g.degree(v) as u64)
                        .sum();
                    if vol > half {
                        return t;
                    }
                    t += 1;
                }
            })
            .max()
            .unwrap()
    }

    #[test]
    fn r_star_examples() {
        for n in 3..=6 {
            assert_eq!(r_star_mixing_radius(&complete_graph(n)).unwrap(), 1);
        }
        assert_eq!(r_star_mixing_radius(&star_graph(5)).unwrap(), 1);
        let p4 = path_graph(4);
        assert_eq!(r_star_mixing_radius(&p4).unwrap(), r_star_oracle(&p4));
    }

    #[test]
    fn r_star_matches_oracle_on_small_graphs() {
        for g in [
            path_graph(7),
            cycle_graph(8),
            star_graph(9),
            complete_graph(5),
        ] {
            assert_eq!(r_star_mixing_radius(&g).unwrap(), r_star_oracle(&g));
            assert!(r_star_mixing_radius(&g).unwrap() <= {
                let hist = distance_histogram(&g, HistogramMode::Exact).unwrap();
                hist.max_distance() as usize
            });
        }
    }

    #[test]
    fn degree_stats_examples() {
        let k4 = degree_stats(&complete_graph(4)).unwrap();
        assert_eq!((k4.max_degree, k4.min_degree), (3, 3));
        assert_eq!(k4.beta(), 1.0);
        let s5 = degree_stats(&star_graph(5)).unwrap();
        assert_eq!((s5.max_degree, s5.min_degree), (4, 1));
        assert_eq!(s5.beta(), 4.0);
        let p4 = degree_stats(&path_graph(4)).unwrap();
        assert_eq!((p4.max_degree, p4.min_degree), (2, 1));
    }

    #[test]
    fn cheeger_examples() {
        let k2 = cheeger_bruteforce(&complete_graph(2)).unwrap();
        assert_eq!((k2.boundary, k2.volume), (1, 1));

        let c4 = cheeger_bruteforce(&cycle_graph(4)).unwrap();
        assert_eq!(c4.value(), 0.5);

        let p3 = cheeger_bruteforce(&path_graph(3)).unwrap();
        assert_eq!(p3.value(), 1.0);
    }

    #[test]
    fn cheeger_refuses_large_graphs() {
        assert!(matches!(
            cheeger_bruteforce(&path_graph(15)),
            Err(Error::GraphTooLarge { .. })
        ));
    }

    #[test]
    fn with_edge_leaves_original_untouched() {
        let g = path_graph(4);
        let g2 = g.with_edge(0, 3).unwrap();
        assert_eq!(g.edge_count(), 3);
        assert_eq!(g2.edge_count(), 4);
        assert!(g2.has_edge(0, 3));
        assert_eq!(g2, cycle_graph(4));
        assert!(matches!(
            g.with_edge(0, 1),
            Err(Error::EdgeExists { i: 0, j: 1 })
        ));
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arbitrary_graph() -> impl Strategy<Value = Graph> {
            (2usize..24, proptest::collection::vec((0u32..24, 0u32..24), 1..80)).prop_map(
                |(n, raw)| {
                    let edges: Vec<(u32, u32)> = raw
                        .into_iter()
                        .map(|(u, v)| (u % n as u32, v % n as u32))
                        .collect();
                    let (g, _) = build_graph(n, &edges).unwrap();
                    g
                },
            )
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn bfs_layering(g in arbitrary_graph()) {
                for s in 0..g.node_count().min(4) {
                    let d = bfs_distances(&g, s).unwrap();
                    for (u, v) in g.edges() {
                        if let (Some(du), Some(dv)) = (d[u as usize], d[v as usize]) {
                            prop_assert!(du.abs_diff(dv) <= 1);
                        }
                    }
                }
            }

            #[test]
            fn tails_monotone_and_dual_route_agrees(g in arbitrary_graph()) {
                let (lcc, _) = largest_connected_component(&g).unwrap();
                if lcc.node_count() < 2 {
                    return Ok(());
                }
                let hist = distance_histogram(&lcc, HistogramMode::Exact).unwrap();
                // tail_profile errors out if the two integer routes disagree.
                let profile = tail_profile(&lcc, &hist).unwrap();
                prop_assert_eq!(profile.tau[0], 1.0);
                prop_assert_eq!(*profile.tau.last().unwrap(), 0.0);
                for w in profile.tau.windows(2) {
                    prop_assert!(w[1] <= w[0]);
                }
                prop_assert!(profile.r_star <= profile.max_radius());
            }
        }
    }
}
