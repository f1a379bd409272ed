//! Edge-list and AS-relationship ingestion, plus JSON report serialization.
//!
//! Formats:
//! - Edge list: one edge per line, two whitespace-separated non-negative
//!   integers; `#` lines are comments; node count inferred as `max id + 1`
//!   unless given. Canonical output is sorted by `(min id, max id)`.
//! - AS relationships: `ASa|ASb|type` with type -1 or 0; the type is
//!   discarded and AS numbers are remapped to dense 0-based ids in ascending
//!   order, so results do not depend on line order.
//! - Reports: JSON with floats rendered at 17 significant digits, enough to
//!   round-trip `f64` exactly.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bounds::BoundConstants;
use crate::error::{Error, Result};
use crate::fairness::FairnessReport;
use crate::graph::{build_graph, Graph};
use crate::spectral::SpectralSummary;

/// Parse an edge list. `n` overrides the inferred node count.
pub fn read_edge_list(text: &str, n: Option<usize>) -> Result<Graph> {
    let mut edges = Vec::new();
    let mut max_id = 0u32;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace();
        let parse = |tok: Option<&str>, idx: usize| -> Result<u32> {
            tok.ok_or_else(|| Error::Parse {
                line: idx + 1,
                message: "expected two node ids".into(),
            })?
            .parse()
            .map_err(|_| Error::Parse {
                line: idx + 1,
                message: "node ids must be non-negative integers".into(),
            })
        };
        let u = parse(it.next(), idx)?;
        let v = parse(it.next(), idx)?;
        if it.next().is_some() {
            return Err(Error::Parse {
                line: idx + 1,
                message: "expected exactly two node ids".into(),
            });
        }
        max_id = max_id.max(u).max(v);
        edges.push((u, v));
    }
    let inferred = if edges.is_empty() { 0 } else { max_id as usize + 1 };
    Ok(build_graph(n.unwrap_or(inferred), &edges)?.0)
}

pub fn read_edge_list_file(path: &Path, n: Option<usize>) -> Result<Graph> {
    read_edge_list(&fs::read_to_string(path)?, n)
}

/// Canonical edge-list text: one `u v` line per edge, sorted.
pub fn write_edge_list(g: &Graph) -> String {
    let mut out = String::new();
    for (u, v) in g.edges() {
        out.push_str(&format!("{u} {v}\n"));
    }
    out
}

pub fn write_edge_list_file(g: &Graph, path: &Path) -> Result<()> {
    Ok(fs::write(path, write_edge_list(g))?)
}

/// Parse CAIDA-style AS relationships (`a|b|type`, type -1 or 0, `#`
/// comments). Returns the graph over dense ids plus the AS number of each
/// dense id.
pub fn parse_caida_as_rel(text: &str) -> Result<(Graph, Vec<u32>)> {
    let mut raw_edges: Vec<(u32, u32)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('|').collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                line: idx + 1,
                message: format!("expected 'asn|asn|type', got {} fields", fields.len()),
            });
        }
        let parse_asn = |s: &str| -> Result<u32> {
            s.parse().map_err(|_| Error::Parse {
                line: idx + 1,
                message: format!("invalid AS number '{s}'"),
            })
        };
        let a = parse_asn(fields[0])?;
        let b = parse_asn(fields[1])?;
        match fields[2] {
            "-1" | "0" => {}
            other => {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: format!("relationship type must be -1 or 0, got '{other}'"),
                })
            }
        }
        raw_edges.push((a, b));
    }
    if raw_edges.is_empty() {
        return Err(Error::InvalidInput(
            "AS-relationship input contains no edges".into(),
        ));
    }
    let mut as_numbers: Vec<u32> = raw_edges
        .iter()
        .flat_map(|&(a, b)| [a, b])
        .collect();
    as_numbers.sort_unstable();
    as_numbers.dedup();
    let dense = |asn: u32| -> u32 {
        as_numbers.binary_search(&asn).expect("asn present") as u32
    };
    let edges: Vec<(u32, u32)> = raw_edges
        .iter()
        .map(|&(a, b)| (dense(a), dense(b)))
        .collect();
    let (g, _) = build_graph(as_numbers.len(), &edges)?;
    Ok((g, as_numbers))
}

pub fn parse_caida_as_rel_file(path: &Path) -> Result<(Graph, Vec<u32>)> {
    parse_caida_as_rel(&fs::read_to_string(path)?)
}

/// Canonical AS-relationship text for a graph and its AS-number map (all
/// relationships emitted as peers).
pub fn write_caida_as_rel(g: &Graph, as_numbers: &[u32]) -> String {
    let mut out = String::new();
    for (u, v) in g.edges() {
        let (a, b) = (as_numbers[u as usize], as_numbers[v as usize]);
        out.push_str(&format!("{}|{}|0\n", a.min(b), a.max(b)));
    }
    out
}

/// Serialize with floats at 17 significant digits (exact `f64` round-trip);
/// non-finite floats become `null`.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SigDigitFormatter);
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

pub fn write_json_file<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    Ok(fs::write(path, to_json(value)?)?)
}

struct SigDigitFormatter;

impl serde_json::ser::Formatter for SigDigitFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()>
    where
        W: ?Sized + Write,
    {
        if value.is_finite() {
            write!(writer, "{value:.16e}")
        } else {
            writer.write_all(b"null")
        }
    }

    fn write_f32<W>(&mut self, writer: &mut W, value: f32) -> std::io::Result<()>
    where
        W: ?Sized + Write,
    {
        self.write_f64(writer, value as f64)
    }
}

/// Graph identity block of an analysis report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSection {
    pub n: usize,
    pub m: usize,
    pub model: String,
    pub seed: u64,
}

/// Bound-related block of an analysis report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsSection {
    pub constants: BoundConstants,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub r_star: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub diameter: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub tau: Option<Vec<f64>>,
    pub sla: Vec<SlaOutcome>,
}

/// Per-SLA-point outcome inside a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlaOutcome {
    pub a: f64,
    pub h0: f64,
    #[serde(rename = "I")]
    pub imbalance: f64,
    #[serde(rename = "J")]
    pub avg_tail: f64,
    pub gamma: f64,
    pub regime: crate::bounds::Regime,
    pub applicable: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub certificate: Option<CertificateSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateSection {
    /// Certificate bound; absent when no finite form applies.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub bound: Option<f64>,
    pub radius: usize,
    pub valid: bool,
}

/// Full per-graph analysis report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub config: serde_json::Value,
    pub graph: GraphSection,
    pub spectral: SpectralSummary,
    /// Headline fairness result (first SLA grid point).
    pub fairness: FairnessReport,
    pub bounds: BoundsSection,
}
