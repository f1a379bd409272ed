//! Seeded topology generators: Erdős–Rényi, Watts–Strogatz, Barabási–Albert,
//! paths, plus small deterministic builders used throughout the tests.
//!
//! Identical specs produce bit-identical graphs; all randomness flows through
//! a ChaCha stream seeded from the spec.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{build_graph, Graph};
use crate::io;

/// Topology family and its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphModel {
    Er { p: f64 },
    Ws { k: usize, rewire_prob: f64 },
    Ba { m_attach: usize },
    Path,
    File { path: PathBuf, format: FileFormat },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FileFormat {
    EdgeList,
    CaidaAsRel,
}

/// A reproducible graph description: model, node count, seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSpec {
    pub model: GraphModel,
    /// Node count; absent for file-backed graphs.
    pub n: Option<usize>,
    pub seed: u64,
}

impl GraphSpec {
    pub fn er(n: usize, p: f64, seed: u64) -> Self {
        GraphSpec {
            model: GraphModel::Er { p },
            n: Some(n),
            seed,
        }
    }

    pub fn ws(n: usize, k: usize, rewire_prob: f64, seed: u64) -> Self {
        GraphSpec {
            model: GraphModel::Ws { k, rewire_prob },
            n: Some(n),
            seed,
        }
    }

    pub fn ba(n: usize, m_attach: usize, seed: u64) -> Self {
        GraphSpec {
            model: GraphModel::Ba { m_attach },
            n: Some(n),
            seed,
        }
    }

    pub fn path(n: usize) -> Self {
        GraphSpec {
            model: GraphModel::Path,
            n: Some(n),
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Model family name: `er`, `ws`, `ba`, `path`, or `file`.
    pub fn family(&self) -> &'static str {
        match self.model {
            GraphModel::Er { .. } => "er",
            GraphModel::Ws { .. } => "ws",
            GraphModel::Ba { .. } => "ba",
            GraphModel::Path => "path",
            GraphModel::File { .. } => "file",
        }
    }

    /// Canonical identifier used in output files.
    pub fn id(&self) -> String {
        match &self.model {
            GraphModel::Er { p } => format!("er-n{}-p{}-s{}", self.n.unwrap_or(0), p, self.seed),
            GraphModel::Ws { k, rewire_prob } => format!(
                "ws-n{}-k{}-rw{}-s{}",
                self.n.unwrap_or(0),
                k,
                rewire_prob,
                self.seed
            ),
            GraphModel::Ba { m_attach } => {
                format!("ba-n{}-m{}-s{}", self.n.unwrap_or(0), m_attach, self.seed)
            }
            GraphModel::Path => format!("path-n{}", self.n.unwrap_or(0)),
            GraphModel::File { path, .. } => {
                let stem = path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "file".into());
                format!("file-{stem}")
            }
        }
    }

    fn validate(&self) -> Result<usize> {
        let need_n = |what: &str| -> Result<usize> {
            let n = self
                .n
                .ok_or_else(|| Error::InvalidInput(format!("{what} graph needs a node count")))?;
            if n < 2 {
                return Err(Error::InvalidInput(format!(
                    "{what} graph needs at least 2 nodes, got {n}"
                )));
            }
            Ok(n)
        };
        match &self.model {
            GraphModel::Er { p } => {
                let n = need_n("er")?;
                if !(0.0 < *p && *p < 1.0) {
                    return Err(Error::InvalidInput(format!(
                        "er edge probability must be in (0,1), got {p}"
                    )));
                }
                Ok(n)
            }
            GraphModel::Ws { k, rewire_prob } => {
                let n = need_n("ws")?;
                if *k == 0 || *k % 2 != 0 || *k >= n {
                    return Err(Error::InvalidInput(format!(
                        "ws lattice degree must be even and in [2, n), got k={k}, n={n}"
                    )));
                }
                if !(0.0..=1.0).contains(rewire_prob) {
                    return Err(Error::InvalidInput(format!(
                        "ws rewire probability must be in [0,1], got {rewire_prob}"
                    )));
                }
                Ok(n)
            }
            GraphModel::Ba { m_attach } => {
                let n = need_n("ba")?;
                if *m_attach == 0 || *m_attach >= n {
                    return Err(Error::InvalidInput(format!(
                        "ba attachment count must be in [1, n), got m={m_attach}, n={n}"
                    )));
                }
                Ok(n)
            }
            GraphModel::Path => need_n("path"),
            GraphModel::File { .. } => Ok(0),
        }
    }
}

impl fmt::Display for GraphSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

impl FromStr for GraphSpec {
    type Err = Error;

    /// Parse specs like `er:n=200,p=0.05`, `ws:n=200,k=6,rw=0.1,seed=3`,
    /// `ba:n=300,m=2`, `path:n=200`, `file:edges.txt`, `caida:as-rel.txt`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: &str| Error::InvalidInput(format!("graph spec '{s}': {msg}"));
        let (kind, rest) = s
            .split_once(':')
            .ok_or_else(|| bad("expected '<model>:<params>'"))?;
        if kind == "file" {
            return Ok(GraphSpec {
                model: GraphModel::File {
                    path: PathBuf::from(rest),
                    format: FileFormat::EdgeList,
                },
                n: None,
                seed: 0,
            });
        }
        if kind == "caida" {
            return Ok(GraphSpec {
                model: GraphModel::File {
                    path: PathBuf::from(rest),
                    format: FileFormat::CaidaAsRel,
                },
                n: None,
                seed: 0,
            });
        }
        let mut n = None;
        let mut p = None;
        let mut k = None;
        let mut rw = None;
        let mut m = None;
        let mut seed = 0u64;
        for part in rest.split(',').filter(|p| !p.is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| bad("expected key=value parameters"))?;
            match key {
                "n" => n = Some(value.parse().map_err(|_| bad("bad n"))?),
                "p" => p = Some(value.parse().map_err(|_| bad("bad p"))?),
                "k" => k = Some(value.parse().map_err(|_| bad("bad k"))?),
                "rw" => rw = Some(value.parse().map_err(|_| bad("bad rw"))?),
                "m" => m = Some(value.parse().map_err(|_| bad("bad m"))?),
                "seed" => seed = value.parse().map_err(|_| bad("bad seed"))?,
                other => return Err(bad(&format!("unknown parameter '{other}'"))),
            }
        }
        let model = match kind {
            "er" => GraphModel::Er {
                p: p.ok_or_else(|| bad("er needs p"))?,
            },
            "ws" => GraphModel::Ws {
                k: k.ok_or_else(|| bad("ws needs k"))?,
                rewire_prob: rw.ok_or_else(|| bad("ws needs rw"))?,
            },
            "ba" => GraphModel::Ba {
                m_attach: m.ok_or_else(|| bad("ba needs m"))?,
            },
            "path" => GraphModel::Path,
            other => return Err(bad(&format!("unknown model '{other}'"))),
        };
        Ok(GraphSpec { model, n, seed })
    }
}

/// Materialize a spec into a graph. Seeded and reproducible.
pub fn generate(spec: &GraphSpec) -> Result<Graph> {
    let n = spec.validate()?;
    match &spec.model {
        GraphModel::Er { p } => {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            let mut edges = Vec::new();
            for i in 0..n as u32 {
                for j in (i + 1)..n as u32 {
                    if rng.random_bool(*p) {
                        edges.push((i, j));
                    }
                }
            }
            Ok(build_graph(n, &edges)?.0)
        }
        GraphModel::Ws { k, rewire_prob } => {
            Ok(watts_strogatz(n, *k, *rewire_prob, spec.seed))
        }
        GraphModel::Ba { m_attach } => Ok(barabasi_albert(n, *m_attach, spec.seed)),
        GraphModel::Path => Ok(path_graph(n)),
        GraphModel::File { path, format } => match format {
            FileFormat::EdgeList => io::read_edge_list_file(path, None),
            FileFormat::CaidaAsRel => Ok(io::parse_caida_as_rel_file(path)?.0),
        },
    }
}

/// Ring lattice of degree `k`, then one pass over the lattice edges rewiring
/// the far endpoint with probability `rewire_prob`.
fn watts_strogatz(n: usize, k: usize, rewire_prob: f64, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut adjacent = vec![std::collections::BTreeSet::new(); n];
    let connect = |adj: &mut Vec<std::collections::BTreeSet<u32>>, u: usize, v: usize| {
        adj[u].insert(v as u32);
        adj[v].insert(u as u32);
    };
    for offset in 1..=k / 2 {
        for u in 0..n {
            connect(&mut adjacent, u, (u + offset) % n);
        }
    }
    for offset in 1..=k / 2 {
        for u in 0..n {
            let v = (u + offset) % n;
            if !rng.random_bool(rewire_prob) {
                continue;
            }
            if adjacent[u].len() >= n - 1 {
                continue; // nowhere left to rewire
            }
            let w = loop {
                let cand = rng.random_range(0..n as u32);
                if cand as usize != u && !adjacent[u].contains(&cand) {
                    break cand as usize;
                }
            };
            adjacent[u].remove(&(v as u32));
            adjacent[v].remove(&(u as u32));
            connect(&mut adjacent, u, w);
        }
    }
    let edges: Vec<(u32, u32)> = adjacent
        .iter()
        .enumerate()
        .flat_map(|(u, row)| {
            row.iter()
                .filter(move |&&v| v as usize > u)
                .map(move |&v| (u as u32, v))
        })
        .collect();
    build_graph(n, &edges).expect("internal edges are in range").0
}

/// Preferential attachment from a seed clique of `m_attach + 1` nodes; each
/// arriving node attaches to `m_attach` distinct existing nodes with
/// probability proportional to degree.
fn barabasi_albert(n: usize, m_attach: usize, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let core = m_attach + 1;
    let mut edges: Vec<(u32, u32)> = Vec::new();
    // Every edge endpoint lands in this list, so uniform draws from it are
    // degree-proportional draws over nodes.
    let mut endpoints: Vec<u32> = Vec::new();
    for i in 0..core as u32 {
        for j in (i + 1)..core as u32 {
            edges.push((i, j));
            endpoints.push(i);
            endpoints.push(j);
        }
    }
    for newcomer in core..n {
        let mut targets = std::collections::BTreeSet::new();
        while targets.len() < m_attach {
            let pick = endpoints[rng.random_range(0..endpoints.len())];
            targets.insert(pick);
        }
        for &t in &targets {
            edges.push((newcomer as u32, t));
            endpoints.push(newcomer as u32);
            endpoints.push(t);
        }
    }
    build_graph(n, &edges).expect("internal edges are in range").0
}

/// Deterministic chain `0-1-...-(n-1)`.
pub fn path_graph(n: usize) -> Graph {
    let edges: Vec<(u32, u32)> = (0..n.saturating_sub(1) as u32).map(|i| (i, i + 1)).collect();
    build_graph(n, &edges).expect("path edges are in range").0
}

/// Complete graph on `n` nodes.
pub fn complete_graph(n: usize) -> Graph {
    let mut edges = Vec::new();
    for i in 0..n as u32 {
        for j in (i + 1)..n as u32 {
            edges.push((i, j));
        }
    }
    build_graph(n, &edges).expect("clique edges are in range").0
}

/// Star with center 0 and `n - 1` leaves.
pub fn star_graph(n: usize) -> Graph {
    let edges: Vec<(u32, u32)> = (1..n as u32).map(|v| (0, v)).collect();
    build_graph(n, &edges).expect("star edges are in range").0
}

/// Cycle `0-1-...-(n-1)-0`.
pub fn cycle_graph(n: usize) -> Graph {
    let mut edges: Vec<(u32, u32)> = (0..n as u32 - 1).map(|i| (i, i + 1)).collect();
    edges.push((n as u32 - 1, 0));
    build_graph(n, &edges).expect("cycle edges are in range").0
}
