//! Logistic satisfaction weights and the entropy-based QoE imbalance index.
//!
//! Every unordered node pair at hop distance `h` gets the weight
//! `w = 1 / (1 + exp(a (h - h0)))`. Normalizing the weights over all `M`
//! pairs gives a distribution `p`; the imbalance index is
//! `I = D_KL(p || uniform) / ln M = 1 - H(p) / ln M`. Because the weight
//! depends on a pair only through its distance, everything collapses onto
//! distance classes and the exact histogram is a sufficient statistic. The
//! pair-level brute force survives in the tests as the oracle for that
//! collapse.
//!
//! All entropies and divergences are in nats; `0 ln 0 = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{distance_histogram, DistanceHistogram, Graph, HistogramMode};

/// SLA parameters: evaluation stringency `a` and hop threshold `h0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlaParams {
    pub a: f64,
    pub h0: f64,
}

impl SlaParams {
    pub fn new(a: f64, h0: f64) -> Result<Self> {
        if !a.is_finite() || a <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "stringency a must be positive and finite, got {a}"
            )));
        }
        if !h0.is_finite() || h0 <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "threshold h0 must be positive and finite, got {h0}"
            )));
        }
        Ok(SlaParams { a, h0 })
    }
}

/// Logistic satisfaction weight `1 / (1 + exp(a (h - h0)))`.
///
/// Evaluated in the overflow-safe branch form: large positive exponents
/// underflow to 0, never NaN.
pub fn satisfaction_weight(h: f64, sla: &SlaParams) -> f64 {
    let t = sla.a * (h - sla.h0);
    if t >= 0.0 {
        let e = (-t).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + t.exp())
    }
}

/// How a fairness report was computed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FairnessMode {
    Exact,
    Sampled { samples: u64, alpha: f64 },
}

/// Imbalance index and the quantities it is defined through.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessReport {
    /// Imbalance index `I = 1 - entropy / ln M`, in `[0, 1]`.
    #[serde(rename = "I")]
    pub imbalance: f64,
    /// Shannon entropy of the pair distribution, nats.
    pub entropy: f64,
    /// Total satisfaction weight `W`.
    #[serde(rename = "W")]
    pub total_weight: f64,
    /// Average tail probability `J = 1 - W / M`.
    #[serde(rename = "J")]
    pub avg_tail: f64,
    /// Number of unordered pairs `M`.
    #[serde(rename = "M")]
    pub pair_count: u64,
    pub mode: FairnessMode,
}

/// Distance classes as `(count, weight)`, the common input to the exact and
/// sampled index paths. Counts are real so the smoothed estimator can reuse
/// the same arithmetic.
fn report_from_classes(
    classes: &[(f64, f64)],
    pair_count: u64,
    mode: FairnessMode,
) -> Result<FairnessReport> {
    if pair_count < 2 {
        return Err(Error::InvalidInput(
            "imbalance index needs at least 2 node pairs".into(),
        ));
    }
    let ln_m = (pair_count as f64).ln();
    let total_weight: f64 = classes.iter().map(|&(n_h, w_h)| n_h * w_h).sum();
    if total_weight <= 0.0 {
        return Err(Error::InvalidInput(
            "all satisfaction weights underflowed to zero; SLA parameters are \
             incompatible with the distance range"
                .into(),
        ));
    }
    // H(p) = sum_h Q_h ln N_h - sum_h Q_h ln Q_h with class mass
    // Q_h = N_h w_h / W. This form keeps single-class histograms exactly at
    // I = 0 (Q = 1, so H = ln M bit-for-bit).
    let mut entropy = 0.0;
    for &(n_h, w_h) in classes {
        let mass = n_h * w_h / total_weight;
        if mass > 0.0 {
            entropy += mass * n_h.ln() - mass * mass.ln();
        }
    }
    let imbalance = (1.0 - entropy / ln_m).clamp(0.0, 1.0);
    Ok(FairnessReport {
        imbalance,
        entropy,
        total_weight,
        avg_tail: 1.0 - total_weight / pair_count as f64,
        pair_count,
        mode,
    })
}

fn exact_classes(hist: &DistanceHistogram, sla: &SlaParams) -> Result<Vec<(f64, f64)>> {
    if !hist.is_exact() {
        return Err(Error::SampledHistogram);
    }
    Ok(hist
        .counts()
        .iter()
        .map(|(&h, &n)| (n as f64, satisfaction_weight(h as f64, sla)))
        .collect())
}

/// Exact imbalance index from a distance histogram.
pub fn imbalance_index(hist: &DistanceHistogram, sla: &SlaParams) -> Result<FairnessReport> {
    let classes = exact_classes(hist, sla)?;
    report_from_classes(&classes, hist.pair_total(), FairnessMode::Exact)
}

/// Sampled imbalance index: distance-class frequencies from `samples` uniform
/// pairs, Dirichlet-`alpha` smoothing over the feasible classes up to the
/// observed maximum, then the histogram formula with `N_h = q_h * M`.
///
/// `samples >= M` falls back to the exhaustive exact path.
pub fn imbalance_index_sampled(
    g: &Graph,
    sla: &SlaParams,
    samples: u64,
    seed: u64,
    alpha: f64,
) -> Result<FairnessReport> {
    if samples == 0 {
        return Err(Error::InvalidInput("need at least one sample".into()));
    }
    if alpha.is_nan() || alpha < 0.0 {
        return Err(Error::InvalidInput(format!(
            "smoothing alpha must be non-negative, got {alpha}"
        )));
    }
    let mode = FairnessMode::Sampled { samples, alpha };
    let pair_count = g.unordered_pairs();
    if samples >= pair_count {
        let hist = distance_histogram(g, HistogramMode::Exact)?;
        let classes = exact_classes(&hist, sla)?;
        return report_from_classes(&classes, pair_count, mode);
    }
    let hist = distance_histogram(
        g,
        HistogramMode::Sampled {
            pairs: samples,
            seed,
        },
    )?;
    // Smoothing support: every feasible class up to the observed maximum,
    // including unobserved holes.
    let max_observed = hist.max_distance();
    let class_count = max_observed as f64;
    let denom = samples as f64 + alpha * class_count;
    let m_real = pair_count as f64;
    let mut classes = Vec::with_capacity(max_observed as usize);
    for h in 1..=max_observed {
        let observed = hist.counts().get(&h).copied().unwrap_or(0) as f64;
        let q_h = (observed + alpha) / denom;
        if q_h > 0.0 {
            classes.push((q_h * m_real, satisfaction_weight(h as f64, sla)));
        }
    }
    report_from_classes(&classes, pair_count, mode)
}

/// Average tail probability `J = E_u[1 - w(h)]`, computed directly as
/// `(1/M) sum_h N_h (1 - w_h)`.
pub fn average_tail_j(hist: &DistanceHistogram, sla: &SlaParams) -> Result<f64> {
    let classes = exact_classes(hist, sla)?;
    let m_real = hist.pair_total() as f64;
    Ok(classes
        .iter()
        .map(|&(n_h, w_h)| n_h * (1.0 - w_h))
        .sum::<f64>()
        / m_real)
}

/// Divergences of the satisfaction distribution from uniform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Divergences {
    pub kl: f64,
    pub chi2: f64,
    pub tv: f64,
}

/// `D_KL(p||u)`, `chi^2(p||u)`, and `D_TV(p, u)` over distance classes.
pub fn divergences_vs_uniform(hist: &DistanceHistogram, sla: &SlaParams) -> Result<Divergences> {
    let classes = exact_classes(hist, sla)?;
    let pair_count = hist.pair_total();
    if pair_count < 2 {
        return Err(Error::InvalidInput(
            "divergences need at least 2 node pairs".into(),
        ));
    }
    let m_real = pair_count as f64;
    let ln_m = m_real.ln();
    let total_weight: f64 = classes.iter().map(|&(n_h, w_h)| n_h * w_h).sum();
    if total_weight <= 0.0 {
        return Err(Error::InvalidInput(
            "all satisfaction weights underflowed to zero".into(),
        ));
    }
    let mut kl = 0.0;
    let mut chi2 = -1.0;
    let mut tv = 0.0;
    for &(n_h, w_h) in &classes {
        let mass = n_h * w_h / total_weight;
        if mass > 0.0 {
            kl += mass * (mass.ln() + ln_m - n_h.ln());
        }
        chi2 += mass * mass * (m_real / n_h);
        tv += 0.5 * (mass - n_h / m_real).abs();
    }
    Ok(Divergences {
        kl: kl.max(0.0),
        chi2: chi2.max(0.0),
        tv,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{complete_graph, path_graph, star_graph, generate, GraphSpec};
    use crate::graph::bfs_distances;

    fn exact_hist(g: &Graph) -> DistanceHistogram {
        distance_histogram(g, HistogramMode::Exact).unwrap()
    }

    /// Pair-level brute force of the defining formulas, independent of the
    /// distance-class collapse.
    fn brute_force(g: &Graph, sla: &SlaParams) -> (f64, Divergences, f64) {
        let n = g.node_count();
        let m_real = g.unordered_pairs() as f64;
        let ln_m = m_real.ln();
        let mut weights = Vec::new();
        for u in 0..n {
            let dist = bfs_distances(g, u).unwrap();
            for d in &dist[(u + 1)..] {
                weights.push(satisfaction_weight(d.unwrap() as f64, sla));
            }
        }
        let w_total: f64 = weights.iter().sum();
        let mut entropy = 0.0;
        let mut kl = 0.0;
        let mut chi2 = -1.0;
        let mut tv = 0.0;
        for &w in &weights {
            let p = w / w_total;
            if p > 0.0 {
                entropy -= p * p.ln();
                kl += p * (p * m_real).ln();
            }
            chi2 += p * p * m_real;
            tv += 0.5 * (p - 1.0 / m_real).abs();
        }
        let imbalance = 1.0 - entropy / ln_m;
        let j = weights.iter().map(|w| 1.0 - w).sum::<f64>() / m_real;
        (imbalance, Divergences { kl, chi2, tv }, j)
    }

    #[test]
    fn weight_midpoint_is_half() {
        let sla = SlaParams::new(2.0, 3.0).unwrap();
        assert_eq!(satisfaction_weight(3.0, &sla), 0.5);
    }

    #[test]
    fn weight_direct_value() {
        let sla = SlaParams::new(1.0, 3.0).unwrap();
        // 1 / (1 + e^2)
        assert!((satisfaction_weight(5.0, &sla) - 0.11920292202211755).abs() < 1e-15);
    }

    #[test]
    fn weight_saturates_without_nan() {
        let sla = SlaParams::new(2.0, 3.0).unwrap();
        let w = satisfaction_weight(1000.0, &sla);
        assert_eq!(w, 0.0);
        assert!(!w.is_nan());
        assert_eq!(satisfaction_weight(-1000.0, &sla), 1.0);
    }

    #[test]
    fn weight_strictly_decreasing() {
        let sla = SlaParams::new(0.7, 4.0).unwrap();
        let mut prev = f64::INFINITY;
        for i in 0..60 {
            let w = satisfaction_weight(i as f64 * 0.5, &sla);
            assert!(w < prev);
            prev = w;
        }
    }

    #[test]
    fn complete_graphs_have_zero_imbalance_exactly() {
        for n in [3, 4, 6, 9] {
            for (a, h0) in [(0.5, 1.0), (2.0, 3.0), (7.0, 0.5)] {
                let sla = SlaParams::new(a, h0).unwrap();
                let report = imbalance_index(&exact_hist(&complete_graph(n)), &sla).unwrap();
                assert_eq!(report.imbalance, 0.0, "K{n} a={a} h0={h0}");
            }
        }
    }

    #[test]
    fn histogram_collapse_matches_pair_brute_force() {
        let sla = SlaParams::new(1.0, 2.0).unwrap();
        let graphs = vec![
            path_graph(4),
            path_graph(17),
            star_graph(9),
            generate(&GraphSpec::er(30, 0.15, 5)).unwrap(),
            generate(&GraphSpec::ba(24, 2, 3)).unwrap(),
        ];
        for g in graphs {
            let (g, _) = crate::graph::largest_connected_component(&g).unwrap();
            let report = imbalance_index(&exact_hist(&g), &sla).unwrap();
            let (oracle_i, _, oracle_j) = brute_force(&g, &sla);
            assert!(
                (report.imbalance - oracle_i).abs() <= 1e-10,
                "I {} vs oracle {oracle_i}",
                report.imbalance
            );
            assert!((report.avg_tail - oracle_j).abs() <= 1e-12);
        }
    }

    #[test]
    fn near_zero_stringency_gives_near_uniform() {
        let sla = SlaParams::new(1e-9, 1.0).unwrap();
        let report = imbalance_index(&exact_hist(&star_graph(10)), &sla).unwrap();
        assert!(report.imbalance <= 1e-9, "I = {}", report.imbalance);
    }

    #[test]
    fn definitional_identities_hold() {
        let sla = SlaParams::new(2.0, 2.5).unwrap();
        for g in [path_graph(12), star_graph(7)] {
            let hist = exact_hist(&g);
            let report = imbalance_index(&hist, &sla).unwrap();
            let ln_m = (report.pair_count as f64).ln();
            let div = divergences_vs_uniform(&hist, &sla).unwrap();
            assert!((report.imbalance * ln_m - div.kl).abs() <= 1e-10);
            assert!(
                (report.avg_tail - (1.0 - report.total_weight / report.pair_count as f64)).abs()
                    <= 1e-12
            );
            let j_direct = average_tail_j(&hist, &sla).unwrap();
            assert!((report.avg_tail - j_direct).abs() <= 1e-12);
        }
    }

    #[test]
    fn average_tail_examples() {
        let sla = SlaParams::new(1.0, 2.0).unwrap();
        let j = average_tail_j(&exact_hist(&complete_graph(6)), &sla).unwrap();
        // Single class at distance 1: J = 1 - w(1) = 1 / (1 + e).
        assert!((j - 1.0 / (1.0 + std::f64::consts::E)).abs() <= 1e-12);

        let far = SlaParams::new(1.0, 1e6).unwrap();
        let j = average_tail_j(&exact_hist(&path_graph(9)), &far).unwrap();
        assert!(j <= 1e-12, "J should vanish for huge h0, got {j}");

        let j = average_tail_j(&exact_hist(&path_graph(4)), &sla).unwrap();
        let w = |h: f64| satisfaction_weight(h, &sla);
        let expect = (3.0 * (1.0 - w(1.0)) + 2.0 * (1.0 - w(2.0)) + (1.0 - w(3.0))) / 6.0;
        assert!((j - expect).abs() <= 1e-15);
    }

    #[test]
    fn divergences_zero_on_complete_graph() {
        let sla = SlaParams::new(1.5, 2.0).unwrap();
        let div = divergences_vs_uniform(&exact_hist(&complete_graph(7)), &sla).unwrap();
        assert_eq!((div.kl, div.chi2, div.tv), (0.0, 0.0, 0.0));
    }

    #[test]
    fn divergences_match_brute_force() {
        let sla = SlaParams::new(1.0, 2.0).unwrap();
        let g = path_graph(4);
        let div = divergences_vs_uniform(&exact_hist(&g), &sla).unwrap();
        let (_, oracle, _) = brute_force(&g, &sla);
        assert!((div.kl - oracle.kl).abs() <= 1e-12);
        assert!((div.chi2 - oracle.chi2).abs() <= 1e-12);
        assert!((div.tv - oracle.tv).abs() <= 1e-12);
    }

    #[test]
    fn tv_approaches_half_when_one_class_dominates() {
        // Two-class histogram {1: 1, 2: 1}; with high stringency the first
        // class carries all weight and TV -> 1/2.
        let counts = [(1u32, 1u64), (2, 1)].into_iter().collect();
        let hist =
            DistanceHistogram::from_counts(counts, 2, HistogramMode::Exact).unwrap();
        let sla = SlaParams::new(60.0, 1.5).unwrap();
        let div = divergences_vs_uniform(&hist, &sla).unwrap();
        assert!((div.tv - 0.5).abs() <= 1e-9, "tv = {}", div.tv);
    }

    #[test]
    fn sampled_falls_back_to_exact_when_exhaustive() {
        let g = generate(&GraphSpec::er(20, 0.3, 2)).unwrap();
        let (g, _) = crate::graph::largest_connected_component(&g).unwrap();
        let sla = SlaParams::new(1.0, 2.0).unwrap();
        let exact = imbalance_index(&exact_hist(&g), &sla).unwrap();
        let sampled =
            imbalance_index_sampled(&g, &sla, g.unordered_pairs() + 10, 3, 0.5).unwrap();
        assert_eq!(sampled.imbalance, exact.imbalance);
        assert!(matches!(sampled.mode, FairnessMode::Sampled { .. }));
    }

    #[test]
    fn sampled_complete_graph_is_exactly_zero() {
        let g = complete_graph(12);
        let sla = SlaParams::new(2.0, 3.0).unwrap();
        for samples in [5, 64] {
            let report = imbalance_index_sampled(&g, &sla, samples, 9, 0.5).unwrap();
            assert_eq!(report.imbalance, 0.0);
        }
    }

    #[test]
    fn sampled_is_deterministic() {
        let g = generate(&GraphSpec::er(40, 0.12, 8)).unwrap();
        let (g, _) = crate::graph::largest_connected_component(&g).unwrap();
        let sla = SlaParams::new(1.0, 3.0).unwrap();
        let a = imbalance_index_sampled(&g, &sla, 200, 5, 0.5).unwrap();
        let b = imbalance_index_sampled(&g, &sla, 200, 5, 0.5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sampling_error_shrinks_with_more_samples() {
        let g = generate(&GraphSpec::er(100, 0.08, 0)).unwrap();
        let (g, _) = crate::graph::largest_connected_component(&g).unwrap();
        let sla = SlaParams::new(1.0, 2.0).unwrap();
        let exact = imbalance_index(&exact_hist(&g), &sla).unwrap().imbalance;
        let mean_error = |samples: u64| {
            (0..32)
                .map(|seed| {
                    let est = imbalance_index_sampled(&g, &sla, samples, seed, 0.5)
                        .unwrap()
                        .imbalance;
                    (est - exact).abs()
                })
                .sum::<f64>()
                / 32.0
        };
        assert!(mean_error(4096) <= mean_error(256));
    }

    #[test]
    fn imbalance_rejects_sampled_histogram() {
        let g = path_graph(6);
        let hist = distance_histogram(
            &g,
            HistogramMode::Sampled {
                pairs: 20,
                seed: 1,
            },
        )
        .unwrap();
        let sla = SlaParams::new(1.0, 2.0).unwrap();
        assert!(matches!(
            imbalance_index(&hist, &sla),
            Err(Error::SampledHistogram)
        ));
    }

    #[test]
    fn saturated_weights_error_instead_of_nan() {
        let g = path_graph(4);
        let sla = SlaParams::new(2000.0, 0.1).unwrap();
        assert!(imbalance_index(&exact_hist(&g), &sla).is_err());
    }

    #[test]
    fn imbalance_vanishes_far_beyond_diameter() {
        let g = path_graph(12);
        let hist = exact_hist(&g);
        let diam = hist.max_distance() as f64;
        let a = 2.0;
        let sla = SlaParams::new(a, diam + 40.0 / a).unwrap();
        let report = imbalance_index(&hist, &sla).unwrap();
        assert!(report.imbalance < 1e-6, "I = {}", report.imbalance);
    }

    #[test]
    fn logistic_pointwise_bound_spot_checks() {
        for (a, h0, r) in [(0.5, 2.0, 7.0), (3.0, 4.0, 4.0), (1.2, 8.0, 1.5)] {
            let sla = SlaParams::new(a, h0).unwrap();
            let s = satisfaction_weight(r, &sla);
            assert!(s * (1.0 - s) <= (-a * (r - h0).abs()).exp() + 1e-15);
        }
    }
}
