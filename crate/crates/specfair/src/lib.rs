//! Spectral analysis of QoE fairness on network topologies.
//!
//! Given an undirected topology and a pair of SLA parameters — the evaluation
//! stringency `a` and the hop threshold `h0` — every node pair gets a logistic
//! satisfaction weight from its hop distance. The entropy of the normalized
//! weight distribution yields the imbalance index `I` in `[0, 1]` (0 = perfectly
//! even experience across pairs). This crate computes `I` exactly or by pair
//! sampling, computes the spectral quantities that bound it (`lambda_2` of the
//! normalized Laplacian, the Fiedler vector, the mixing radius `r*`, the
//! distance tail profile), evaluates the exponential spectral bound and the
//! distance-only certificate, and runs Fiedler-guided edge additions against
//! baseline strategies.
//!
//! Module map:
//!
//! | module | contents |
//! |--------|----------|
//! | [`graph`] | immutable graph, BFS distances, histograms, tails, `r*`, brute-force Cheeger |
//! | [`spectral`] | matrix-free normalized Laplacian, `lambda_2` + Fiedler solver, dense oracle |
//! | [`fairness`] | satisfaction weights, imbalance index `I`, average tail `J`, divergences |
//! | [`bounds`] | exponential spectral bound, constant fitting, certificates, reverse design |
//! | [`intervention`] | Fiedler-guided edge addition, baselines, trajectories |
//! | [`generators`] | seeded ER / WS / BA / path generators |
//! | [`io`] | edge lists, AS-relationship parsing, JSON reports |
//!
//! All randomized code takes explicit seeds and is deterministic across runs.

pub mod bounds;
pub mod error;
pub mod fairness;
pub mod generators;
pub mod graph;
pub mod intervention;
pub mod io;
pub mod spectral;

pub use error::{Error, Result};
pub use fairness::SlaParams;
pub use graph::Graph;
