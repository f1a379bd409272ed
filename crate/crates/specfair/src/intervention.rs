//! Fiedler-vector-guided edge addition and baseline strategies.
//!
//! The guided strategy scores a non-adjacent pair `(i, j)` by the normalized
//! Fiedler distance `(v_i/sqrt(d_i) - v_j/sqrt(d_j))^2` and adds the top
//! pair; the sufficient condition for a first-order `lambda_2` increase is
//! `score > C_deg (v_i^2/d_i + v_j^2/d_j)`, reported as a diagnostic.
//! Baselines: uniform random non-edge, lowest-degree pair, and the
//! top-betweenness pair (exact Brandes).

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fairness::{imbalance_index, SlaParams};
use crate::graph::{distance_histogram, Graph, HistogramMode};
use crate::spectral::{spectral_gap, EigenOptions, SpectralSummary};

/// Below this size candidate scoring scans every non-adjacent pair; above it
/// only pairs among the extreme normalized coordinates are scored.
const FULL_SCAN_MAX_NODES: usize = 2000;

/// Default number of extreme coordinates kept on each side when pruning.
pub const DEFAULT_TOP_K: usize = 64;

/// Node pool for the betweenness strategy.
const BETWEENNESS_POOL: usize = 32;

/// Largest graph accepted by exact Brandes betweenness.
pub const BETWEENNESS_MAX_NODES: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Fiedler,
    Random,
    MinDegree,
    Betweenness,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [
        Strategy::Fiedler,
        Strategy::Random,
        Strategy::MinDegree,
        Strategy::Betweenness,
    ];
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Fiedler => "fiedler",
            Strategy::Random => "random",
            Strategy::MinDegree => "min_degree",
            Strategy::Betweenness => "betweenness",
        })
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fiedler" => Ok(Strategy::Fiedler),
            "random" => Ok(Strategy::Random),
            "min_degree" => Ok(Strategy::MinDegree),
            "betweenness" => Ok(Strategy::Betweenness),
            other => Err(Error::InvalidInput(format!(
                "unknown strategy '{other}' (expected fiedler, random, min_degree, betweenness)"
            ))),
        }
    }
}

/// A scored non-adjacent pair, `i < j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub i: u32,
    pub j: u32,
    pub score: f64,
}

/// Non-adjacent pairs ranked by descending normalized Fiedler distance, ties
/// broken lexicographically on `(i, j)`. On a complete graph the list is
/// empty. For graphs above the full-scan limit only pairs among the `top_k`
/// largest and smallest normalized coordinates are scored.
pub fn fiedler_candidates(
    g: &Graph,
    summary: &SpectralSummary,
    top_k: usize,
) -> Vec<Candidate> {
    let n = g.node_count();
    let x: Vec<f64> = (0..n).map(|v| summary.normalized_coordinate(g, v)).collect();
    let mut candidates = Vec::new();
    let mut push = |i: usize, j: usize| {
        let (i, j) = (i.min(j), i.max(j));
        if !g.has_edge(i, j) {
            candidates.push(Candidate {
                i: i as u32,
                j: j as u32,
                score: (x[i] - x[j]).powi(2),
            });
        }
    };
    if n <= FULL_SCAN_MAX_NODES {
        for i in 0..n {
            for j in (i + 1)..n {
                push(i, j);
            }
        }
    } else {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| x[a].partial_cmp(&x[b]).expect("finite coordinates"));
        let k = top_k.min(n / 2).max(1);
        let mut pool: Vec<usize> = order[..k].to_vec();
        pool.extend_from_slice(&order[n - k..]);
        pool.sort_unstable();
        pool.dedup();
        for (idx, &i) in pool.iter().enumerate() {
            for &j in &pool[idx + 1..] {
                push(i, j);
            }
        }
    }
    candidates.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .expect("finite scores")
            .then(a.i.cmp(&b.i))
            .then(a.j.cmp(&b.j))
    });
    candidates
}

/// Sufficient condition of the guided strategy:
/// `(x_i - x_j)^2 > C_deg (x_i^2 + x_j^2)` with `x = v / sqrt(d)`.
/// Diagnostic only; selection ranks by score regardless.
pub fn condition_check(
    g: &Graph,
    summary: &SpectralSummary,
    i: usize,
    j: usize,
    degree_penalty: f64,
) -> Result<bool> {
    if g.has_edge(i, j) {
        return Err(Error::EdgeExists {
            i: i as u32,
            j: j as u32,
        });
    }
    let xi = summary.normalized_coordinate(g, i);
    let xj = summary.normalized_coordinate(g, j);
    Ok((xi - xj).powi(2) > degree_penalty * (xi * xi + xj * xj))
}

/// Exact Brandes betweenness centrality (undirected, unweighted).
pub fn betweenness_centrality(g: &Graph) -> Result<Vec<f64>> {
    let n = g.node_count();
    if n > BETWEENNESS_MAX_NODES {
        return Err(Error::GraphTooLarge {
            n,
            limit: BETWEENNESS_MAX_NODES,
        });
    }
    let mut centrality = vec![0.0f64; n];
    let mut stack: Vec<u32> = Vec::with_capacity(n);
    let mut queue: VecDeque<u32> = VecDeque::new();
    for s in 0..n {
        let mut preds: Vec<Vec<u32>> = vec![Vec::new(); n];
        let mut sigma = vec![0.0f64; n];
        let mut dist = vec![-1i64; n];
        stack.clear();
        queue.clear();
        sigma[s] = 1.0;
        dist[s] = 0;
        queue.push_back(s as u32);
        while let Some(v) = queue.pop_front() {
            stack.push(v);
            for &w in g.neighbors(v as usize) {
                let w = w as usize;
                if dist[w] < 0 {
                    dist[w] = dist[v as usize] + 1;
                    queue.push_back(w as u32);
                }
                if dist[w] == dist[v as usize] + 1 {
                    sigma[w] += sigma[v as usize];
                    preds[w].push(v);
                }
            }
        }
        let mut delta = vec![0.0f64; n];
        while let Some(w) = stack.pop() {
            for &v in &preds[w as usize] {
                delta[v as usize] +=
                    sigma[v as usize] / sigma[w as usize] * (1.0 + delta[w as usize]);
            }
            if w as usize != s {
                centrality[w as usize] += delta[w as usize];
            }
        }
    }
    // Each unordered pair was counted from both endpoints.
    for c in &mut centrality {
        *c *= 0.5;
    }
    Ok(centrality)
}

/// Pick the edge a strategy would add. `summary` is required for the Fiedler
/// strategy and ignored by the others.
pub fn select_edge(
    g: &Graph,
    strategy: Strategy,
    seed: u64,
    summary: Option<&SpectralSummary>,
) -> Result<(u32, u32)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    select_edge_with_rng(g, strategy, &mut rng, summary, DEFAULT_TOP_K)
}

fn complete_error() -> Error {
    Error::InvalidInput("graph is complete: no non-adjacent pair to add".into())
}

fn select_edge_with_rng(
    g: &Graph,
    strategy: Strategy,
    rng: &mut ChaCha8Rng,
    summary: Option<&SpectralSummary>,
    top_k: usize,
) -> Result<(u32, u32)> {
    let n = g.node_count();
    let non_edges = g.unordered_pairs() - g.edge_count() as u64;
    if non_edges == 0 {
        return Err(complete_error());
    }
    match strategy {
        Strategy::Fiedler => {
            let summary = summary.ok_or_else(|| {
                Error::InvalidInput("fiedler strategy needs a spectral summary".into())
            })?;
            let candidates = fiedler_candidates(g, summary, top_k);
            candidates
                .first()
                .map(|c| (c.i, c.j))
                .ok_or_else(|| {
                    Error::InvalidInput(
                        "no candidate among the pruned coordinate extremes".into(),
                    )
                })
        }
        Strategy::Random => {
            // Rejection sampling first; sparse graphs accept almost surely.
            for _ in 0..64 * n.max(8) {
                let a = rng.random_range(0..n as u32);
                let b = rng.random_range(0..n as u32);
                if a != b && !g.has_edge(a as usize, b as usize) {
                    return Ok((a.min(b), a.max(b)));
                }
            }
            let pick = rng.random_range(0..non_edges);
            let mut seen = 0u64;
            for i in 0..n {
                for j in (i + 1)..n {
                    if !g.has_edge(i, j) {
                        if seen == pick {
                            return Ok((i as u32, j as u32));
                        }
                        seen += 1;
                    }
                }
            }
            Err(complete_error())
        }
        Strategy::MinDegree => {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by_key(|&v| (g.degree(v), v));
            for (idx, &u) in order.iter().enumerate() {
                for &v in &order[idx + 1..] {
                    if !g.has_edge(u, v) {
                        return Ok((u.min(v) as u32, u.max(v) as u32));
                    }
                }
            }
            Err(complete_error())
        }
        Strategy::Betweenness => {
            let centrality = betweenness_centrality(g)?;
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| {
                centrality[b]
                    .partial_cmp(&centrality[a])
                    .expect("finite centrality")
                    .then(a.cmp(&b))
            });
            let pool = &order[..BETWEENNESS_POOL.min(n)];
            let mut pairs: Vec<(u32, u32)> = Vec::new();
            for (idx, &u) in pool.iter().enumerate() {
                for &v in &pool[idx + 1..] {
                    if !g.has_edge(u, v) {
                        pairs.push((u.min(v) as u32, u.max(v) as u32));
                    }
                }
            }
            pairs.sort_by(|&(i1, j1), &(i2, j2)| {
                let s1 = centrality[i1 as usize] + centrality[j1 as usize];
                let s2 = centrality[i2 as usize] + centrality[j2 as usize];
                s2.partial_cmp(&s1)
                    .expect("finite centrality")
                    .then(i1.cmp(&i2))
                    .then(j1.cmp(&j2))
            });
            pairs.first().copied().ok_or_else(|| {
                Error::InvalidInput(
                    "no non-adjacent pair among the top betweenness nodes".into(),
                )
            })
        }
    }
}

/// One step of an intervention trajectory. Step 0 records the initial state
/// with no edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterventionRecord {
    pub step: usize,
    pub strategy: Strategy,
    pub edge: Option<(u32, u32)>,
    pub lambda2_after: f64,
    #[serde(rename = "I_after")]
    pub imbalance_after: f64,
    /// Normalized Fiedler distance of the added pair (guided strategy only).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub fiedler_score: Option<f64>,
    /// Whether the sufficient condition held (guided strategy only).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub condition_holds: Option<bool>,
}

impl InterventionRecord {
    pub const CSV_HEADER: &'static str = "step,strategy,i,j,lambda2,I,score,condition";

    pub fn to_csv(&self) -> String {
        let (i, j) = match self.edge {
            Some((i, j)) => (i.to_string(), j.to_string()),
            None => (String::new(), String::new()),
        };
        format!(
            "{},{},{},{},{},{},{},{}",
            self.step,
            self.strategy,
            i,
            j,
            self.lambda2_after,
            self.imbalance_after,
            self.fiedler_score.map(|s| s.to_string()).unwrap_or_default(),
            self.condition_holds.map(|c| c.to_string()).unwrap_or_default(),
        )
    }
}

/// Trajectory parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryConfig {
    pub steps: usize,
    pub sla: SlaParams,
    pub eigen: EigenOptions,
    pub seed: u64,
    /// `C_deg` used for the condition diagnostic.
    pub degree_penalty: f64,
    pub top_k: usize,
}

impl TrajectoryConfig {
    pub fn new(steps: usize, sla: SlaParams) -> Self {
        TrajectoryConfig {
            steps,
            sla,
            eigen: EigenOptions::default(),
            seed: 0,
            degree_penalty: 0.5,
            top_k: DEFAULT_TOP_K,
        }
    }
}

/// Run one diagnose-and-add trajectory. Each step re-solves the spectral
/// problem, selects an edge, adds it at weight 1 (copy-on-write; the input
/// graph is never mutated), and records the exact imbalance index and
/// `lambda_2` after the step. Stops early when the graph becomes complete.
pub fn run_intervention(
    g: &Graph,
    strategy: Strategy,
    cfg: &TrajectoryConfig,
) -> Result<Vec<InterventionRecord>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut current = g.clone();
    let mut summary = spectral_gap(&current, &cfg.eigen)?;
    let exact_imbalance = |graph: &Graph| -> Result<f64> {
        let hist = distance_histogram(graph, HistogramMode::Exact)?;
        Ok(imbalance_index(&hist, &cfg.sla)?.imbalance)
    };
    let mut records = vec![InterventionRecord {
        step: 0,
        strategy,
        edge: None,
        lambda2_after: summary.lambda2,
        imbalance_after: exact_imbalance(&current)?,
        fiedler_score: None,
        condition_holds: None,
    }];
    for step in 1..=cfg.steps {
        if current.edge_count() as u64 == current.unordered_pairs() {
            break;
        }
        let (i, j) =
            select_edge_with_rng(&current, strategy, &mut rng, Some(&summary), cfg.top_k)?;
        let (score, condition) = if strategy == Strategy::Fiedler {
            let xi = summary.normalized_coordinate(&current, i as usize);
            let xj = summary.normalized_coordinate(&current, j as usize);
            (
                Some((xi - xj).powi(2)),
                Some(condition_check(
                    &current,
                    &summary,
                    i as usize,
                    j as usize,
                    cfg.degree_penalty,
                )?),
            )
        } else {
            (None, None)
        };
        current = current.with_edge(i as usize, j as usize)?;
        summary = spectral_gap(&current, &cfg.eigen)?;
        records.push(InterventionRecord {
            step,
            strategy,
            edge: Some((i, j)),
            lambda2_after: summary.lambda2,
            imbalance_after: exact_imbalance(&current)?,
            fiedler_score: score,
            condition_holds: condition,
        });
    }
    Ok(records)
}
