//! `specfair` — QoE-fairness analysis of network topologies.
//!
//! Subcommands map one-to-one onto the experiment pipelines: `analyze`,
//! `envelope`, `phase-diagram`, `certify`, `intervene`, `reverse`. Every run
//! is deterministic given its flags; each output file embeds the resolved
//! configuration and its hash.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use specfair::bounds::{BoundConstants, EnvelopeRow, PhaseCell};
use specfair::fairness::SlaParams;
use specfair::generators::GraphSpec;
use specfair::intervention::{InterventionRecord, Strategy, TrajectoryConfig};
use specfair::spectral::EigenOptions;

use specfair_cli::experiments::{self, AnalyzeParams, CertifyRow, ReverseH0Row};
use specfair_cli::output::OutputContext;

#[derive(Parser)]
#[command(
    name = "specfair",
    version,
    about = "Spectral analysis of QoE fairness: imbalance index, bounds, certificates, interventions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Graph spec, repeatable: er:n=200,p=0.05 | ws:n=200,k=6,rw=0.1 |
    /// ba:n=300,m=2 | path:n=200 | file:edges.txt | caida:as-rel.txt
    #[arg(long = "graph", value_name = "SPEC")]
    graphs: Vec<String>,

    /// Base seed; random models get seeds seed, seed+1, ...
    #[arg(long, default_value_t = 1)]
    seed: u64,

    /// Seeds per random model
    #[arg(long, default_value_t = 1)]
    seeds: usize,

    /// Output directory (default: $SPECFAIR_OUT, else ./specfair-out)
    #[arg(long)]
    out: Option<PathBuf>,

    /// Bound constants JSON: {"C": .., "c": .., "C_deg": ..}
    #[arg(long)]
    constants: Option<PathBuf>,

    /// Eigensolver residual tolerance
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,

    /// Eigensolver matvec budget
    #[arg(long, default_value_t = 50_000)]
    max_iter: usize,
}

impl CommonArgs {
    fn eigen(&self) -> EigenOptions {
        EigenOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            ..EigenOptions::default()
        }
    }

    fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| {
            std::env::var_os("SPECFAIR_OUT")
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from("specfair-out"))
        })
    }

    fn seed_list(&self) -> Vec<u64> {
        (0..self.seeds.max(1)).map(|i| self.seed + i as u64).collect()
    }

    fn parse_graphs(&self, defaults: &[&str]) -> anyhow::Result<Vec<GraphSpec>> {
        let raw: Vec<String> = if self.graphs.is_empty() {
            defaults.iter().map(|s| s.to_string()).collect()
        } else {
            self.graphs.clone()
        };
        raw.iter()
            .map(|s| s.parse::<GraphSpec>().map_err(anyhow::Error::from))
            .collect()
    }

    fn load_constants(&self) -> anyhow::Result<Option<BoundConstants>> {
        match &self.constants {
            None => Ok(None),
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading constants file {}", path.display()))?;
                let k: BoundConstants = serde_json::from_str(&text)
                    .with_context(|| format!("parsing constants file {}", path.display()))?;
                k.validate()?;
                Ok(Some(k))
            }
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Per-graph report: lambda2, Fiedler vector, r*, tail profile, I, J,
    /// regimes, bound, certificate (JSON per graph)
    Analyze {
        #[command(flatten)]
        common: CommonArgs,
        /// Stringency grid (default 0.5 1 2 4)
        #[arg(long = "a", value_name = "A")]
        a_grid: Vec<f64>,
        /// Threshold grid (default r* + 1..8)
        #[arg(long = "h0", value_name = "H0")]
        h0_grid: Vec<f64>,
        /// Pair-sampling budget when the graph is too large for exact counts
        #[arg(long, default_value_t = 200_000)]
        samples: u64,
        /// Exact histogram ceiling, in node pairs
        #[arg(long, default_value_t = 5_000_000)]
        pair_budget: u64,
    },
    /// Sweep (graph, a, h0), fit (C, c) on ER/WS/path, report breach rates
    /// (CSV + fitted constants JSON)
    Envelope {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long = "a", value_name = "A")]
        a_grid: Vec<f64>,
        /// Offsets added to each graph's r* (default 1..8)
        #[arg(long = "h0-offset", value_name = "OFF")]
        h0_offsets: Vec<f64>,
    },
    /// Decay-rate table over an (a, lambda2) grid (CSV)
    PhaseDiagram {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long = "a", value_name = "A")]
        a_grid: Vec<f64>,
        #[arg(long = "lambda2", value_name = "L2")]
        lambda2_grid: Vec<f64>,
    },
    /// Exact I vs the distance-only certificate per model (CSV)
    Certify {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 2.0)]
        a: f64,
        #[arg(long, default_value_t = 6.0)]
        h0: f64,
    },
    /// Edge-addition trajectories for the four strategies (CSV per strategy)
    Intervene {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 20)]
        steps: usize,
        /// Strategies to run (default: all four)
        #[arg(long = "strategy", value_name = "NAME")]
        strategies: Vec<String>,
        #[arg(long, default_value_t = 1.0)]
        a: f64,
        /// Absolute threshold; default r* + 4 of the start graph
        #[arg(long)]
        h0: Option<f64>,
    },
    /// Reverse design: theoretical vs empirical h0 per target, and the
    /// spectral-gap requirement with a guided-intervention crossing run
    Reverse {
        #[command(flatten)]
        common: CommonArgs,
        /// Imbalance targets for the threshold table
        #[arg(long = "target", value_name = "I")]
        targets: Vec<f64>,
        /// Stringency for the threshold table
        #[arg(long, default_value_t = 1.0)]
        a: f64,
        /// Stringency for the spectral-gap run (large: structure-limited)
        #[arg(long, default_value_t = 8.0)]
        a_structural: f64,
        /// Threshold for the spectral-gap run; default r* + 4
        #[arg(long)]
        h0: Option<f64>,
        /// Step budget for the crossing run
        #[arg(long, default_value_t = 40)]
        steps: usize,
    },
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn run() -> anyhow::Result<ExitCode> {
    match Cli::parse().command {
        Command::Analyze {
            common,
            a_grid,
            h0_grid,
            samples,
            pair_budget,
        } => cmd_analyze(common, a_grid, h0_grid, samples, pair_budget),
        Command::Envelope {
            common,
            a_grid,
            h0_offsets,
        } => cmd_envelope(common, a_grid, h0_offsets),
        Command::PhaseDiagram {
            common,
            a_grid,
            lambda2_grid,
        } => cmd_phase(common, a_grid, lambda2_grid),
        Command::Certify { common, a, h0 } => cmd_certify(common, a, h0),
        Command::Intervene {
            common,
            steps,
            strategies,
            a,
            h0,
        } => cmd_intervene(common, steps, strategies, a, h0),
        Command::Reverse {
            common,
            targets,
            a,
            a_structural,
            h0,
            steps,
        } => cmd_reverse(common, targets, a, a_structural, h0, steps),
    }
}

const STANDARD_MODELS: [&str; 4] = [
    "er:n=200,p=0.05",
    "ws:n=200,k=6,rw=0.1",
    "path:n=200",
    "ba:n=200,m=2",
];

fn spec_list(specs: &[GraphSpec]) -> Vec<String> {
    specs.iter().map(|s| s.id()).collect()
}

fn report_failures(failures: &[(GraphSpec, specfair::Error)]) -> ExitCode {
    if failures.is_empty() {
        return ExitCode::SUCCESS;
    }
    eprintln!("{} graph(s) failed:", failures.len());
    for (spec, err) in failures {
        eprintln!("  {}: {err}", spec.id());
    }
    ExitCode::FAILURE
}

fn cmd_analyze(
    common: CommonArgs,
    a_grid: Vec<f64>,
    h0_grid: Vec<f64>,
    samples: u64,
    pair_budget: u64,
) -> anyhow::Result<ExitCode> {
    let specs = experiments::expand_seeds(
        &common.parse_graphs(&["path:n=200"])?,
        &common.seed_list(),
    );
    let params = AnalyzeParams {
        a_grid: if a_grid.is_empty() {
            experiments::default_a_grid()
        } else {
            a_grid
        },
        h0_grid: (!h0_grid.is_empty()).then_some(h0_grid),
        constants: common.load_constants()?.unwrap_or_default(),
        eigen: common.eigen(),
        pair_budget,
        samples,
        sample_seed: common.seed,
        alpha: 0.5,
    };
    let config = json!({
        "command": "analyze",
        "graphs": spec_list(&specs),
        "a_grid": params.a_grid,
        "h0_grid": params.h0_grid,
        "samples": samples,
        "pair_budget": pair_budget,
        "seed": common.seed,
        "constants": params.constants,
        "tol": common.tol,
        "max_iter": common.max_iter,
    });
    let mut ctx = OutputContext::new(&common.out_dir(), config.clone())?;
    // Graphs materialize and solve in parallel; writes stay serialized.
    let results: Vec<_> = {
        use rayon::prelude::*;
        specs
            .par_iter()
            .map(|spec| (spec.clone(), experiments::run_analyze(spec, &params, config.clone())))
            .collect()
    };
    let mut failures = Vec::new();
    for (spec, result) in results {
        match result {
            Ok(report) => {
                let path = ctx.write_report(&format!("analyze_{}.json", spec.id()), &report)?;
                println!(
                    "{}: n={} m={} lambda2={:.6e} I={:.6e} -> {}",
                    spec.id(),
                    report.graph.n,
                    report.graph.m,
                    report.spectral.lambda2,
                    report.fairness.imbalance,
                    path.display()
                );
            }
            Err(err) => failures.push((spec, err)),
        }
    }
    ctx.write_manifest("analyze", json!({"report": "per-graph JSON"}))?;
    Ok(report_failures(&failures))
}

fn cmd_envelope(
    common: CommonArgs,
    a_grid: Vec<f64>,
    h0_offsets: Vec<f64>,
) -> anyhow::Result<ExitCode> {
    let specs = experiments::expand_seeds(
        &common.parse_graphs(&STANDARD_MODELS)?,
        &common.seed_list(),
    );
    let a_grid = if a_grid.is_empty() {
        experiments::default_a_grid()
    } else {
        a_grid
    };
    let h0_offsets = if h0_offsets.is_empty() {
        experiments::default_h0_offsets()
    } else {
        h0_offsets
    };
    let config = json!({
        "command": "envelope",
        "graphs": spec_list(&specs),
        "a_grid": a_grid,
        "h0_offsets": h0_offsets,
        "seed": common.seed,
        "seeds": common.seeds,
        "tol": common.tol,
        "max_iter": common.max_iter,
    });
    let mut ctx = OutputContext::new(&common.out_dir(), config)?;

    let prepared = experiments::prepare_bundles(&specs, &common.eigen());
    let mut bundles = Vec::new();
    let mut failures = Vec::new();
    for (spec, result) in prepared {
        match result {
            Ok(b) => bundles.push(b),
            Err(e) => failures.push((spec, e)),
        }
    }
    if bundles.is_empty() {
        bail!("no graph could be prepared");
    }
    let outcome = experiments::run_envelope(&bundles, &a_grid, &h0_offsets)?;
    let rows: Vec<String> = outcome.rows.iter().map(|r| r.to_csv()).collect();
    ctx.write_csv("envelope.csv", EnvelopeRow::CSV_HEADER, &rows)?;
    ctx.write_report("constants.json", &outcome.constants)?;
    ctx.write_json(
        "envelope_summary.json",
        &json!({
            "fit_points": outcome.fit_points,
            "fit_breaches": outcome.fit_breaches,
            "fit_breach_rate": outcome.fit_breach_rate(),
            "holdout_points": outcome.holdout_points,
            "holdout_breaches": outcome.holdout_breaches,
            "holdout_breach_rate": outcome.holdout_breach_rate(),
            "C": outcome.constants.amplitude,
            "c": outcome.constants.rate_scale,
        }),
    )?;
    ctx.write_manifest(
        "envelope",
        json!({"x": "min(a, c*lambda2) * (h0 - r*)", "y": "ln I", "bound": "slope -1 envelope"}),
    )?;
    println!(
        "fit breach rate: {:.2}% ({}/{} points); held-out breach rate: {} ({}/{}); C={:.6}, c={:.6}",
        100.0 * outcome.fit_breach_rate(),
        outcome.fit_breaches,
        outcome.fit_points,
        outcome
            .holdout_breach_rate()
            .map(|r| format!("{:.2}%", 100.0 * r))
            .unwrap_or_else(|| "n/a".into()),
        outcome.holdout_breaches,
        outcome.holdout_points,
        outcome.constants.amplitude,
        outcome.constants.rate_scale,
    );
    Ok(report_failures(&failures))
}

fn cmd_phase(
    common: CommonArgs,
    a_grid: Vec<f64>,
    lambda2_grid: Vec<f64>,
) -> anyhow::Result<ExitCode> {
    let (default_a, default_l) = experiments::default_phase_grids();
    let a_grid = if a_grid.is_empty() { default_a } else { a_grid };
    let lambda2_grid = if lambda2_grid.is_empty() {
        default_l
    } else {
        lambda2_grid
    };
    let constants = common.load_constants()?.unwrap_or_default();
    let config = json!({
        "command": "phase-diagram",
        "a_grid": a_grid,
        "lambda2_grid": lambda2_grid,
        "c": constants.rate_scale,
    });
    let mut ctx = OutputContext::new(&common.out_dir(), config)?;
    let cells = experiments::run_phase_diagram(&a_grid, &lambda2_grid, constants.rate_scale)?;
    let rows: Vec<String> = cells.iter().map(|c| c.to_csv()).collect();
    let path = ctx.write_csv("phase.csv", PhaseCell::CSV_HEADER, &rows)?;
    ctx.write_manifest(
        "phase-diagram",
        json!({"x": "a (log)", "y": "lambda2 (log)", "color": "gamma = min(a, c*lambda2)"}),
    )?;
    println!("{} cells -> {}", cells.len(), path.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_certify(common: CommonArgs, a: f64, h0: f64) -> anyhow::Result<ExitCode> {
    let specs = experiments::expand_seeds(
        &common.parse_graphs(&STANDARD_MODELS)?,
        &common.seed_list(),
    );
    let sla = SlaParams::new(a, h0)?;
    let config = json!({
        "command": "certify",
        "graphs": spec_list(&specs),
        "a": a,
        "h0": h0,
        "seed": common.seed,
        "tol": common.tol,
    });
    let mut ctx = OutputContext::new(&common.out_dir(), config)?;
    let prepared = experiments::prepare_bundles(&specs, &common.eigen());
    let mut bundles = Vec::new();
    let mut failures = Vec::new();
    for (spec, result) in prepared {
        match result {
            Ok(b) => bundles.push(b),
            Err(e) => failures.push((spec, e)),
        }
    }
    if bundles.is_empty() {
        bail!("no graph could be prepared");
    }
    let rows = experiments::run_certify(&bundles, &sla)?;
    let csv: Vec<String> = rows.iter().map(|r| r.to_csv()).collect();
    let path = ctx.write_csv("certify.csv", CertifyRow::CSV_HEADER, &csv)?;
    ctx.write_manifest(
        "certify",
        json!({"bars": ["I", "bound"], "per": "graph model"}),
    )?;
    let violations = rows.iter().filter(|r| r.violation).count();
    println!(
        "{} graphs, {} certificate violations -> {}",
        rows.len(),
        violations,
        path.display()
    );
    Ok(report_failures(&failures))
}

fn cmd_intervene(
    common: CommonArgs,
    steps: usize,
    strategies: Vec<String>,
    a: f64,
    h0: Option<f64>,
) -> anyhow::Result<ExitCode> {
    let specs = common.parse_graphs(&["ba:n=300,m=2"])?;
    let spec = specs[0].clone().with_seed(common.seed);
    let strategies: Vec<Strategy> = if strategies.is_empty() {
        Strategy::ALL.to_vec()
    } else {
        strategies
            .iter()
            .map(|s| s.parse::<Strategy>().map_err(anyhow::Error::from))
            .collect::<anyhow::Result<_>>()?
    };
    let bundle = experiments::prepare_bundle(&spec, &common.eigen())?;
    let h0 = h0.unwrap_or(bundle.r_star() as f64 + 4.0);
    let config = json!({
        "command": "intervene",
        "graph": spec.id(),
        "steps": steps,
        "strategies": strategies.iter().map(|s| s.to_string()).collect::<Vec<_>>(),
        "a": a,
        "h0": h0,
        "seed": common.seed,
        "tol": common.tol,
    });
    let mut ctx = OutputContext::new(&common.out_dir(), config)?;
    let mut cfg = TrajectoryConfig::new(steps, SlaParams::new(a, h0)?);
    cfg.eigen = common.eigen();
    cfg.seed = common.seed;
    let results = experiments::run_intervene(&bundle.graph, &strategies, &cfg)?;
    for (strategy, records) in &results {
        let rows: Vec<String> = records.iter().map(|r| r.to_csv()).collect();
        let path = ctx.write_csv(
            &format!("trajectory_{strategy}.csv"),
            InterventionRecord::CSV_HEADER,
            &rows,
        )?;
        let last = records.last().expect("step 0 always present");
        println!(
            "{strategy}: {} steps, lambda2 {:.6e} -> {:.6e}, I {:.6e} -> {:.6e} -> {}",
            records.len() - 1,
            records[0].lambda2_after,
            last.lambda2_after,
            records[0].imbalance_after,
            last.imbalance_after,
            path.display()
        );
    }
    ctx.write_manifest(
        "intervene",
        json!({"x": "step", "y_left": "lambda2", "y_right": "I"}),
    )?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_reverse(
    common: CommonArgs,
    targets: Vec<f64>,
    a: f64,
    a_structural: f64,
    h0: Option<f64>,
    steps: usize,
) -> anyhow::Result<ExitCode> {
    let specs = common.parse_graphs(&["ws:n=300,k=4,rw=0.05"])?;
    let spec = specs[0].clone().with_seed(common.seed);
    let targets = if targets.is_empty() {
        vec![0.05, 0.03, 0.02]
    } else {
        targets
    };
    let eigen = common.eigen();
    let bundle = experiments::prepare_bundle(&spec, &eigen)?;

    // Constants: from file when given, otherwise fitted on the standard
    // ER/WS/path set at this seed.
    let constants = match common.load_constants()? {
        Some(k) => k,
        None => {
            let fit_specs = experiments::expand_seeds(
                &common.parse_graphs(&STANDARD_MODELS)?,
                &[common.seed, common.seed + 1, common.seed + 2],
            );
            let prepared = experiments::prepare_bundles(&fit_specs, &eigen);
            let bundles: Vec<_> = prepared
                .into_iter()
                .filter_map(|(_, r)| r.ok())
                .collect();
            experiments::run_envelope(
                &bundles,
                &experiments::default_a_grid(),
                &experiments::default_h0_offsets(),
            )?
            .constants
        }
    };

    let h0_structural = h0.unwrap_or(bundle.r_star() as f64 + 4.0);
    let config = json!({
        "command": "reverse",
        "graph": spec.id(),
        "targets": targets,
        "a": a,
        "a_structural": a_structural,
        "h0_structural": h0_structural,
        "steps": steps,
        "seed": common.seed,
        "constants": constants,
    });
    let mut ctx = OutputContext::new(&common.out_dir(), config)?;

    let rows = experiments::run_reverse_h0(&bundle, a, &targets, &constants)?;
    let csv: Vec<String> = rows.iter().map(|r| r.to_csv()).collect();
    ctx.write_csv("reverse_h0.csv", ReverseH0Row::CSV_HEADER, &csv)?;
    for row in &rows {
        println!(
            "target {:.4}: theoretical h0 {:.3}, empirical {} (ordering_ok={})",
            row.target,
            row.h0_theoretical,
            row.h0_empirical
                .map(|v| format!("{v:.3}"))
                .unwrap_or_else(|| "not reached".into()),
            row.ordering_ok
        );
    }

    let lambda_target = targets.iter().copied().fold(f64::INFINITY, f64::min);
    let outcome = experiments::run_reverse_lambda2(
        &bundle,
        lambda_target,
        a_structural,
        h0_structural,
        &constants,
        steps,
        &eigen,
    )?;
    let rows: Vec<String> = outcome.records.iter().map(|r| r.to_csv()).collect();
    ctx.write_csv(
        "reverse_lambda2_trajectory.csv",
        InterventionRecord::CSV_HEADER,
        &rows,
    )?;
    ctx.write_json(
        "reverse_lambda2.json",
        &json!({
            "target": outcome.target,
            "lambda2_required": outcome.lambda2_required,
            "initial_lambda2": outcome.initial_lambda2,
            "initial_I": outcome.initial_imbalance,
            "crossing_step": outcome.crossing.map(|(s, _)| s),
            "crossing_lambda2": outcome.crossing.map(|(_, l)| l),
        }),
    )?;
    println!(
        "lambda2 requirement {:.6e}; crossing {}",
        outcome.lambda2_required,
        outcome
            .crossing
            .map(|(s, l)| format!("at step {s}, lambda2 {l:.6e}"))
            .unwrap_or_else(|| "not reached within the step budget".into()),
    );
    ctx.write_manifest(
        "reverse",
        json!({"h0_table": "target vs h0", "lambda2_run": "step vs lambda2 and I"}),
    )?;
    Ok(ExitCode::SUCCESS)
}
