//! Cross-module invariants: expander convergence trend, sampled-histogram
//! consistency, and solver agreement across graph families.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use specfair::fairness::{imbalance_index, SlaParams};
use specfair::generators::{generate, GraphSpec};
use specfair::graph::{
    build_graph, distance_histogram, largest_connected_component, Graph, HistogramMode,
};
use specfair::spectral::{dense_spectrum, spectral_gap, EigenOptions};

/// Random `k`-out graph: every node draws `k` distinct targets uniformly;
/// the union is undirected and simplified. A standard expander-like family.
fn random_k_out(n: usize, k: usize, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::with_capacity(n * k);
    for u in 0..n as u32 {
        let mut picked = std::collections::BTreeSet::new();
        while picked.len() < k {
            let v = rng.random_range(0..n as u32);
            if v != u {
                picked.insert(v);
            }
        }
        edges.extend(picked.into_iter().map(|v| (u, v)));
    }
    build_graph(n, &edges).expect("edges in range").0
}

/// Expander families keep their imbalance shrinking with size once the
/// threshold grows logarithmically.
#[test]
fn expander_imbalance_non_increasing_in_size() {
    let mut means = Vec::new();
    for &n in &[100usize, 200, 400, 800] {
        let h0 = (2.0 * (n as f64).ln()).ceil();
        let sla = SlaParams::new(1.0, h0).unwrap();
        let mut total = 0.0;
        for seed in 0..3 {
            let g = random_k_out(n, 3, 1000 + seed);
            let (g, _) = largest_connected_component(&g).unwrap();
            assert_eq!(g.node_count(), n, "3-out graph should be connected");
            let hist = distance_histogram(&g, HistogramMode::Exact).unwrap();
            total += imbalance_index(&hist, &sla).unwrap().imbalance;
        }
        means.push(total / 3.0);
    }
    for w in means.windows(2) {
        assert!(
            w[1] <= w[0],
            "expander imbalance should not grow with n: {means:?}"
        );
    }
}

/// Sampled per-distance frequencies stay within five binomial standard
/// deviations of the exact fractions.
#[test]
fn sampled_histogram_binomial_consistency() {
    let graphs = vec![
        generate(&GraphSpec::er(50, 0.12, 3)).unwrap(),
        generate(&GraphSpec::ws(40, 4, 0.2, 4)).unwrap(),
        generate(&GraphSpec::ba(45, 2, 5)).unwrap(),
    ];
    for g in graphs {
        let (g, _) = largest_connected_component(&g).unwrap();
        let exact = distance_histogram(&g, HistogramMode::Exact).unwrap();
        let m_pairs = exact.pair_total();
        let samples = 64 * m_pairs;
        let sampled = distance_histogram(
            &g,
            HistogramMode::Sampled {
                pairs: samples,
                seed: 7,
            },
        )
        .unwrap();
        for (&h, &count) in exact.counts() {
            let p = count as f64 / m_pairs as f64;
            let observed = sampled.counts().get(&h).copied().unwrap_or(0) as f64;
            let expected = p * samples as f64;
            let sigma = (samples as f64 * p * (1.0 - p)).sqrt().max(1.0);
            assert!(
                (observed - expected).abs() <= 5.0 * sigma,
                "distance {h}: observed {observed}, expected {expected}, sigma {sigma}"
            );
        }
        // No spurious distances.
        for h in sampled.counts().keys() {
            assert!(exact.counts().contains_key(h));
        }
    }
}

/// Iterative and dense routes agree across families; the dense spectrum
/// stays inside the normalized-Laplacian range.
#[test]
fn iterative_matches_dense_across_families() {
    let specs = [
        GraphSpec::er(120, 0.06, 1),
        GraphSpec::ws(150, 6, 0.1, 2),
        GraphSpec::ba(140, 2, 3),
        GraphSpec::ws(90, 4, 0.3, 4),
        GraphSpec::er(80, 0.1, 5),
        GraphSpec::path(130),
    ];
    let opts = EigenOptions::default();
    for spec in &specs {
        let g = generate(spec).unwrap();
        let (g, _) = largest_connected_component(&g).unwrap();
        let summary = spectral_gap(&g, &opts).unwrap();
        let dense = dense_spectrum(&g).unwrap();
        assert!(
            (summary.lambda2 - dense[1]).abs() <= 1e-6,
            "{}: iterative {} vs dense {}",
            spec.id(),
            summary.lambda2,
            dense[1]
        );
        assert!(dense[0] >= -1e-9);
        assert!(*dense.last().unwrap() <= 2.0 + 1e-9);
        assert!(summary.residual <= opts.tol);
        assert!(summary.lambda2 > 0.0, "connected graphs have lambda2 > 0");
    }
}

/// The exponential tail envelope holds on the fit families with the fitted
/// rate scale. The amplitude is floored at 1: tails start at tau_0 = 1, so
/// any amplitude below 1 breaches trivially, while the index-envelope fit
/// can legitimately land below 1 at this scale.
#[test]
fn tail_envelope_zero_breaches_on_fit_families() {
    use specfair::bounds::{fit_constants, tail_envelope_check, Observation};
    use specfair::graph::tail_profile;

    let specs = [
        GraphSpec::er(150, 0.05, 1),
        GraphSpec::ws(150, 6, 0.1, 1),
        GraphSpec::path(200),
    ];
    let opts = EigenOptions::default();
    let mut observations = Vec::new();
    let mut prepared = Vec::new();
    for spec in &specs {
        let g = generate(spec).unwrap();
        let (g, _) = largest_connected_component(&g).unwrap();
        let summary = spectral_gap(&g, &opts).unwrap();
        let hist = distance_histogram(&g, HistogramMode::Exact).unwrap();
        let profile = tail_profile(&g, &hist).unwrap();
        for a in [0.5, 1.0, 2.0, 4.0] {
            for off in 1..=8 {
                let sla = SlaParams::new(a, profile.r_star as f64 + off as f64).unwrap();
                observations.push(Observation {
                    imbalance: imbalance_index(&hist, &sla).unwrap().imbalance,
                    lambda2: summary.lambda2,
                    r_star: profile.r_star,
                    a,
                    h0: sla.h0,
                    pair_count: g.unordered_pairs(),
                    family: spec.family().to_string(),
                });
            }
        }
        prepared.push((spec.id(), summary.lambda2, profile));
    }
    let mut fitted = fit_constants(&observations, |_| true).unwrap();
    fitted.amplitude = fitted.amplitude.max(1.0);
    for (id, lambda2, profile) in &prepared {
        let report = tail_envelope_check(profile, *lambda2, &fitted);
        assert_eq!(
            report.breaches, 0,
            "{id}: tail envelope breached with C={}, c={}",
            fitted.amplitude, fitted.rate_scale
        );
    }
}
