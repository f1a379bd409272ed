//! The experiment pipelines: per-graph analysis, envelope fitting, phase
//! diagram, certificate comparison, intervention trajectories, and the two
//! reverse-design procedures.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use specfair::bounds::{
    self, BoundConstants, Certificate, EnvelopeRow, Observation, PhaseCell, Regime,
};
use specfair::error::{Error, Result};
use specfair::fairness::{
    average_tail_j, imbalance_index, imbalance_index_sampled, FairnessReport, SlaParams,
};
use specfair::generators::{generate, GraphSpec};
use specfair::graph::{
    distance_histogram, largest_connected_component, tail_profile, DistanceHistogram, Graph,
    HistogramMode, TailProfile,
};
use specfair::intervention::{
    run_intervention, InterventionRecord, Strategy, TrajectoryConfig,
};
use specfair::io::{
    AnalysisReport, BoundsSection, CertificateSection, GraphSection, SlaOutcome,
};
use specfair::spectral::{spectral_gap, EigenOptions, SpectralSummary};

/// Topology families used to fit the bound constants; the rest are held out.
pub const FIT_FAMILIES: [&str; 3] = ["er", "ws", "path"];

/// Default SLA stringency grid.
pub fn default_a_grid() -> Vec<f64> {
    vec![0.5, 1.0, 2.0, 4.0]
}

/// Default threshold offsets above `r*`.
pub fn default_h0_offsets() -> Vec<f64> {
    (1..=8).map(|i| i as f64).collect()
}

/// A generated graph with its per-graph statistics, the shared input of
/// every sweep. The graph is the largest connected component of the spec.
#[derive(Debug, Clone)]
pub struct GraphBundle {
    pub spec: GraphSpec,
    pub graph: Graph,
    pub summary: SpectralSummary,
    pub hist: DistanceHistogram,
    pub profile: TailProfile,
}

impl GraphBundle {
    pub fn id(&self) -> String {
        self.spec.id()
    }

    pub fn r_star(&self) -> usize {
        self.profile.r_star
    }
}

/// Generate, reduce to the LCC, and compute spectrum, exact histogram, and
/// tail profile.
pub fn prepare_bundle(spec: &GraphSpec, eigen: &EigenOptions) -> Result<GraphBundle> {
    let raw = generate(spec)?;
    let (graph, _) = largest_connected_component(&raw)?;
    let summary = spectral_gap(&graph, eigen)?;
    let hist = distance_histogram(&graph, HistogramMode::Exact)?;
    let profile = tail_profile(&graph, &hist)?;
    Ok(GraphBundle {
        spec: spec.clone(),
        graph,
        summary,
        hist,
        profile,
    })
}

/// Prepare several bundles in parallel, keeping per-spec failures.
pub fn prepare_bundles(
    specs: &[GraphSpec],
    eigen: &EigenOptions,
) -> Vec<(GraphSpec, Result<GraphBundle>)> {
    specs
        .par_iter()
        .map(|spec| (spec.clone(), prepare_bundle(spec, eigen)))
        .collect()
}

/// Expand base specs over a seed list (file-backed and path specs are seed
/// independent and appear once).
pub fn expand_seeds(specs: &[GraphSpec], seeds: &[u64]) -> Vec<GraphSpec> {
    let mut out = Vec::new();
    for spec in specs {
        match spec.family() {
            "path" | "file" => out.push(spec.clone()),
            _ => {
                for &seed in seeds {
                    out.push(spec.clone().with_seed(seed));
                }
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct AnalyzeParams {
    pub a_grid: Vec<f64>,
    /// Explicit `h0` grid; when absent, `r* + {1..8}`.
    pub h0_grid: Option<Vec<f64>>,
    pub constants: BoundConstants,
    pub eigen: EigenOptions,
    /// Above this many pairs the exact histogram is skipped and the index is
    /// sampled.
    pub pair_budget: u64,
    pub samples: u64,
    pub sample_seed: u64,
    pub alpha: f64,
}

impl Default for AnalyzeParams {
    fn default() -> Self {
        AnalyzeParams {
            a_grid: default_a_grid(),
            h0_grid: None,
            constants: BoundConstants::default(),
            eigen: EigenOptions::default(),
            pair_budget: 5_000_000,
            samples: 200_000,
            sample_seed: 0,
            alpha: 0.5,
        }
    }
}

/// One-stop per-graph analysis.
pub fn run_analyze(
    spec: &GraphSpec,
    params: &AnalyzeParams,
    config: serde_json::Value,
) -> Result<AnalysisReport> {
    let raw = generate(spec)?;
    let (graph, _) = largest_connected_component(&raw)?;
    let summary = spectral_gap(&graph, &params.eigen)?;
    let pair_count = graph.unordered_pairs();
    let exact = pair_count <= params.pair_budget;
    let (hist, profile) = if exact {
        let hist = distance_histogram(&graph, HistogramMode::Exact)?;
        let profile = tail_profile(&graph, &hist)?;
        (Some(hist), Some(profile))
    } else {
        (None, None)
    };
    let r_star = profile.as_ref().map(|p| p.r_star);
    let h0_grid = params.h0_grid.clone().unwrap_or_else(|| {
        let base = r_star.unwrap_or(0) as f64;
        default_h0_offsets().iter().map(|o| base + o).collect()
    });
    if params.a_grid.is_empty() || h0_grid.is_empty() {
        return Err(Error::InvalidInput("SLA grids must be non-empty".into()));
    }

    let fairness_at = |sla: &SlaParams| -> Result<FairnessReport> {
        match &hist {
            Some(h) => imbalance_index(h, sla),
            None => imbalance_index_sampled(
                &graph,
                sla,
                params.samples,
                params.sample_seed,
                params.alpha,
            ),
        }
    };

    let mut outcomes = Vec::new();
    let mut headline: Option<FairnessReport> = None;
    for &a in &params.a_grid {
        for &h0 in &h0_grid {
            let sla = SlaParams::new(a, h0)?;
            let report = fairness_at(&sla)?;
            let avg_tail = match &hist {
                Some(h) => average_tail_j(h, &sla)?,
                None => report.avg_tail,
            };
            let (gamma, regime, applicable, bound) = match r_star {
                Some(rs) => {
                    let b = bounds::spectral_upper_bound(
                        summary.lambda2,
                        rs,
                        &sla,
                        pair_count,
                        &params.constants,
                    )?;
                    (b.gamma, b.regime, b.applicable, b.bound)
                }
                None => {
                    let (gamma, regime) = bounds::decay_rate(
                        a,
                        summary.lambda2,
                        params.constants.rate_scale,
                    )?;
                    (gamma, regime, false, None)
                }
            };
            let certificate = match &profile {
                Some(p) if sla.h0 >= 1.0 => {
                    let cert = bounds::data_driven_certificate(p, &sla, pair_count)?;
                    Some(CertificateSection {
                        bound: cert.bound.is_finite().then_some(cert.bound),
                        radius: cert.radius,
                        valid: cert.valid,
                    })
                }
                _ => None,
            };
            if headline.is_none() {
                headline = Some(report.clone());
            }
            outcomes.push(SlaOutcome {
                a,
                h0,
                imbalance: report.imbalance,
                avg_tail,
                gamma,
                regime,
                applicable,
                bound,
                certificate,
            });
        }
    }

    Ok(AnalysisReport {
        config,
        graph: GraphSection {
            n: graph.node_count(),
            m: graph.edge_count(),
            model: spec.id(),
            seed: spec.seed,
        },
        spectral: summary,
        fairness: headline.expect("at least one SLA point"),
        bounds: BoundsSection {
            constants: params.constants.clone(),
            r_star,
            diameter: hist.as_ref().map(|h| h.max_distance() as usize),
            tau: profile.as_ref().map(|p| p.tau.clone()),
            sla: outcomes,
        },
    })
}

// ---------------------------------------------------------------------------
// envelope
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnvelopeOutcome {
    pub rows: Vec<EnvelopeRow>,
    pub constants: BoundConstants,
    pub fit_points: usize,
    pub fit_breaches: usize,
    pub holdout_points: usize,
    pub holdout_breaches: usize,
}

impl EnvelopeOutcome {
    pub fn fit_breach_rate(&self) -> f64 {
        if self.fit_points == 0 {
            0.0
        } else {
            self.fit_breaches as f64 / self.fit_points as f64
        }
    }

    pub fn holdout_breach_rate(&self) -> Option<f64> {
        (self.holdout_points > 0).then(|| self.holdout_breaches as f64 / self.holdout_points as f64)
    }
}

/// Sweep `(graph, a, h0)` with `h0 = r* + offset`, fit `(C, c)` on the
/// ER/WS/path observations, and evaluate breaches everywhere.
pub fn run_envelope(
    bundles: &[GraphBundle],
    a_grid: &[f64],
    h0_offsets: &[f64],
) -> Result<EnvelopeOutcome> {
    if bundles.is_empty() {
        return Err(Error::InvalidInput("envelope needs at least one graph".into()));
    }
    let mut observations = Vec::new();
    let mut meta = Vec::new(); // (graph_id, n, lambda2)
    for bundle in bundles {
        let r_star = bundle.r_star();
        let pair_count = bundle.graph.unordered_pairs();
        for &a in a_grid {
            for &off in h0_offsets {
                let sla = SlaParams::new(a, r_star as f64 + off)?;
                let report = imbalance_index(&bundle.hist, &sla)?;
                observations.push(Observation {
                    imbalance: report.imbalance,
                    lambda2: bundle.summary.lambda2,
                    r_star,
                    a,
                    h0: sla.h0,
                    pair_count,
                    family: bundle.spec.family().to_string(),
                });
                meta.push((bundle.id(), bundle.graph.node_count(), bundle.summary.lambda2));
            }
        }
    }
    let constants = bounds::fit_constants(&observations, |o| {
        FIT_FAMILIES.contains(&o.family.as_str())
    })?;

    let mut rows = Vec::with_capacity(observations.len());
    let mut fit_points = 0;
    let mut fit_breaches = 0;
    let mut holdout_points = 0;
    let mut holdout_breaches = 0;
    for (obs, (graph_id, n, lambda2)) in observations.iter().zip(&meta) {
        let sla = SlaParams::new(obs.a, obs.h0)?;
        let report = bounds::spectral_upper_bound(
            obs.lambda2,
            obs.r_star,
            &sla,
            obs.pair_count,
            &constants,
        )?;
        let bound = report.bound.expect("h0 >= r_star by construction");
        let breach = bounds::is_breach(obs.imbalance, bound);
        if FIT_FAMILIES.contains(&obs.family.as_str()) {
            fit_points += 1;
            fit_breaches += breach as usize;
        } else {
            holdout_points += 1;
            holdout_breaches += breach as usize;
        }
        rows.push(EnvelopeRow {
            graph_id: graph_id.clone(),
            model: obs.family.clone(),
            n: *n,
            lambda2: *lambda2,
            r_star: obs.r_star,
            a: obs.a,
            h0: obs.h0,
            effective_threshold: report.effective_threshold,
            gamma: report.gamma,
            x: report.gamma * report.effective_threshold,
            imbalance: obs.imbalance,
            ln_imbalance: obs.imbalance.ln(),
            bound,
            breach,
        });
    }
    rows.sort_by(|x, y| {
        x.graph_id
            .cmp(&y.graph_id)
            .then(x.a.partial_cmp(&y.a).expect("finite a"))
            .then(x.h0.partial_cmp(&y.h0).expect("finite h0"))
    });
    Ok(EnvelopeOutcome {
        rows,
        constants,
        fit_points,
        fit_breaches,
        holdout_points,
        holdout_breaches,
    })
}

// ---------------------------------------------------------------------------
// phase diagram
// ---------------------------------------------------------------------------

pub fn default_phase_grids() -> (Vec<f64>, Vec<f64>) {
    (
        bounds::logspace(1e-2, 10.0, 25),
        bounds::logspace(1e-4, 1.0, 25),
    )
}

pub fn run_phase_diagram(
    a_grid: &[f64],
    lambda2_grid: &[f64],
    rate_scale: f64,
) -> Result<Vec<PhaseCell>> {
    bounds::phase_diagram(a_grid, lambda2_grid, rate_scale)
}

// ---------------------------------------------------------------------------
// certify
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertifyRow {
    pub graph_id: String,
    pub model: String,
    pub n: usize,
    pub a: f64,
    pub h0: f64,
    #[serde(rename = "I")]
    pub imbalance: f64,
    pub bound: f64,
    pub radius: usize,
    pub valid: bool,
    pub general_form: bool,
    /// `valid` but the certificate fell below the measured index.
    pub violation: bool,
}

impl CertifyRow {
    pub const CSV_HEADER: &'static str =
        "graph_id,model,n,a,h0,I,bound,radius,valid,general_form,violation";

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.graph_id,
            self.model,
            self.n,
            self.a,
            self.h0,
            self.imbalance,
            self.bound,
            self.radius,
            self.valid as u8,
            self.general_form as u8,
            self.violation as u8
        )
    }
}

/// Exact imbalance vs the distance-only certificate, per graph.
pub fn run_certify(bundles: &[GraphBundle], sla: &SlaParams) -> Result<Vec<CertifyRow>> {
    bundles
        .iter()
        .map(|bundle| {
            let pair_count = bundle.graph.unordered_pairs();
            let report = imbalance_index(&bundle.hist, sla)?;
            let cert: Certificate =
                bounds::data_driven_certificate(&bundle.profile, sla, pair_count)?;
            Ok(CertifyRow {
                graph_id: bundle.id(),
                model: bundle.spec.family().to_string(),
                n: bundle.graph.node_count(),
                a: sla.a,
                h0: sla.h0,
                imbalance: report.imbalance,
                bound: cert.bound,
                radius: cert.radius,
                valid: cert.valid,
                general_form: cert.general_form,
                violation: cert.valid && report.imbalance > cert.bound,
            })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// intervene
// ---------------------------------------------------------------------------

/// Run the requested strategies on the same start graph, in parallel.
pub fn run_intervene(
    graph: &Graph,
    strategies: &[Strategy],
    cfg: &TrajectoryConfig,
) -> Result<Vec<(Strategy, Vec<InterventionRecord>)>> {
    strategies
        .par_iter()
        .map(|&strategy| Ok((strategy, run_intervention(graph, strategy, cfg)?)))
        .collect()
}

// ---------------------------------------------------------------------------
// reverse design
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReverseH0Row {
    pub target: f64,
    pub gamma: f64,
    /// Sufficient threshold, floored at `r*` when the increment is negative.
    pub h0_theoretical: f64,
    /// The raw formula value `r* + [ln(C/I_tar) - ln ln M] / gamma` before
    /// the `r*` floor; strictly increasing as the target tightens.
    pub h0_formula: f64,
    /// First scanned `h0` with measured `I <= target`; absent if the scan
    /// never crossed.
    pub h0_empirical: Option<f64>,
    /// Empirical boundary at or above the theoretical one.
    pub ordering_ok: bool,
}

impl ReverseH0Row {
    pub const CSV_HEADER: &'static str =
        "target_I,gamma,h0_theoretical,h0_formula,h0_empirical,ordering_ok";

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.target,
            self.gamma,
            self.h0_theoretical,
            self.h0_formula,
            self.h0_empirical.map(|v| v.to_string()).unwrap_or_default(),
            self.ordering_ok as u8
        )
    }
}

/// Scan step for the empirical threshold boundary, in hops.
pub const H0_SCAN_STEP: f64 = 0.25;

/// Per-target theoretical threshold (pre-factor-free bound) and the measured
/// boundary found by scanning `h0` upward from `r*` in quarter-hop steps.
pub fn run_reverse_h0(
    bundle: &GraphBundle,
    a: f64,
    targets: &[f64],
    constants: &BoundConstants,
) -> Result<Vec<ReverseH0Row>> {
    let r_star = bundle.r_star();
    let pair_count = bundle.graph.unordered_pairs();
    let diameter = bundle.hist.max_distance() as f64;
    let mut rows = Vec::with_capacity(targets.len());
    for &target in targets {
        let h0_theoretical = bounds::reverse_design_h0(
            target,
            bundle.summary.lambda2,
            r_star,
            a,
            pair_count,
            constants,
        )?;
        let gamma = a.min(constants.rate_scale * bundle.summary.lambda2);
        let h0_formula = r_star as f64
            + ((constants.amplitude / target).ln() - (pair_count as f64).ln().ln()) / gamma;
        let scan_limit = diameter + 60.0 / a;
        let mut h0_empirical = None;
        let mut step = 0usize;
        loop {
            let h0 = r_star as f64 + step as f64 * H0_SCAN_STEP;
            if h0 > scan_limit {
                break;
            }
            if h0 > 0.0 {
                let sla = SlaParams::new(a, h0)?;
                if imbalance_index(&bundle.hist, &sla)?.imbalance <= target {
                    h0_empirical = Some(h0);
                    break;
                }
            }
            step += 1;
        }
        rows.push(ReverseH0Row {
            target,
            gamma,
            h0_theoretical,
            h0_formula,
            h0_empirical,
            ordering_ok: h0_empirical.map(|h| h >= h0_theoretical).unwrap_or(false),
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReverseLambdaOutcome {
    pub target: f64,
    /// Spectral gap required by the sufficient condition.
    pub lambda2_required: f64,
    pub a: f64,
    pub h0: f64,
    pub initial_lambda2: f64,
    #[serde(rename = "initial_I")]
    pub initial_imbalance: f64,
    /// First guided-intervention step at which `I` fell to the target, with
    /// the spectral gap reached there.
    pub crossing: Option<(usize, f64)>,
    pub records: Vec<InterventionRecord>,
}

/// Compute the spectral-gap requirement for the target, then raise the gap
/// with guided edge additions until the measured index crosses the target.
pub fn run_reverse_lambda2(
    bundle: &GraphBundle,
    target: f64,
    a: f64,
    h0: f64,
    constants: &BoundConstants,
    max_steps: usize,
    eigen: &EigenOptions,
) -> Result<ReverseLambdaOutcome> {
    let r_star = bundle.r_star();
    let pair_count = bundle.graph.unordered_pairs();
    let lambda2_required =
        bounds::reverse_design_lambda2(target, h0, r_star, pair_count, constants)?;
    let mut cfg = TrajectoryConfig::new(max_steps, SlaParams::new(a, h0)?);
    cfg.eigen = *eigen;
    cfg.degree_penalty = constants.degree_penalty;
    let records = run_intervention(&bundle.graph, Strategy::Fiedler, &cfg)?;
    let crossing = records
        .iter()
        .skip(1)
        .find(|r| r.imbalance_after <= target)
        .map(|r| (r.step, r.lambda2_after));
    Ok(ReverseLambdaOutcome {
        target,
        lambda2_required,
        a,
        h0,
        initial_lambda2: records[0].lambda2_after,
        initial_imbalance: records[0].imbalance_after,
        crossing,
        records,
    })
}

/// Decide regime labels for a prepared bundle at a given stringency, for
/// report text.
pub fn regime_of(bundle: &GraphBundle, a: f64, constants: &BoundConstants) -> Regime {
    Regime::classify(a, constants.rate_scale * bundle.summary.lambda2)
}
