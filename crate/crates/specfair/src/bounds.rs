//! The exponential spectral bound on the imbalance index, constant fitting,
//! the spectral tail envelope, the distance-only certificate, and the two
//! reverse-design calculators.
//!
//! With `H = h0 - r*` and `gamma = min(a, c lambda_2)`, the bound reads
//! `I <= C (1 + a H) / ln M * exp(-gamma H)` whenever `h0 >= r*`. `C` and `c`
//! are global constants fitted on topology families with bounded degree
//! ratio; the decay rate `gamma` splits the parameter plane into a
//! service-limited and a structure-limited regime.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fairness::SlaParams;
use crate::graph::TailProfile;

/// Global bound constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundConstants {
    /// Amplitude `C` of the bound.
    #[serde(rename = "C")]
    pub amplitude: f64,
    /// Scale `c` applied to `lambda_2` in the decay rate.
    #[serde(rename = "c")]
    pub rate_scale: f64,
    /// `C_deg` in the edge-addition condition; configured, never fitted.
    #[serde(rename = "C_deg")]
    pub degree_penalty: f64,
    #[serde(default)]
    pub fit_provenance: String,
}

impl Default for BoundConstants {
    fn default() -> Self {
        BoundConstants {
            amplitude: 1.0,
            rate_scale: 1.0,
            degree_penalty: 0.5,
            fit_provenance: "defaults (not fitted)".into(),
        }
    }
}

impl BoundConstants {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("C", self.amplitude),
            ("c", self.rate_scale),
            ("C_deg", self.degree_penalty),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidInput(format!(
                    "bound constant {name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Which of `a` and `c lambda_2` limits the decay rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    ServiceLimited,
    StructureLimited,
    Balanced,
}

impl Regime {
    /// `a` below `c lambda_2` is service-limited, above is structure-limited;
    /// within 1% relative difference the call is reported as balanced.
    pub fn classify(a: f64, c_lambda2: f64) -> Regime {
        if (a - c_lambda2).abs() <= 0.01 * a.max(c_lambda2) {
            Regime::Balanced
        } else if a < c_lambda2 {
            Regime::ServiceLimited
        } else {
            Regime::StructureLimited
        }
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Regime::ServiceLimited => "service-limited",
            Regime::StructureLimited => "structure-limited",
            Regime::Balanced => "balanced",
        })
    }
}

/// Evaluated spectral upper bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    /// Effective threshold `H = h0 - r*`.
    #[serde(rename = "H")]
    pub effective_threshold: f64,
    /// Decay rate `min(a, c lambda_2)`.
    pub gamma: f64,
    /// The bound on `I`; absent when `h0 < r*`.
    #[serde(rename = "bound_I", skip_serializing_if = "Option::is_none", default)]
    pub bound: Option<f64>,
    pub applicable: bool,
    pub regime: Regime,
}

/// Exponential spectral upper bound on the imbalance index.
pub fn spectral_upper_bound(
    lambda2: f64,
    r_star: usize,
    sla: &SlaParams,
    pair_count: u64,
    k: &BoundConstants,
) -> Result<BoundReport> {
    if pair_count < 2 {
        return Err(Error::InvalidInput(
            "bound needs at least 2 node pairs".into(),
        ));
    }
    k.validate()?;
    let h = sla.h0 - r_star as f64;
    let c_lambda2 = k.rate_scale * lambda2;
    let gamma = sla.a.min(c_lambda2);
    let applicable = h >= 0.0;
    let bound = applicable.then(|| {
        k.amplitude * (1.0 + sla.a * h) / (pair_count as f64).ln() * (-gamma * h).exp()
    });
    Ok(BoundReport {
        effective_threshold: h,
        gamma,
        bound,
        applicable,
        regime: Regime::classify(sla.a, c_lambda2),
    })
}

/// The bound without its `(1 + aH)` pre-factor, as used by the reverse-design
/// formulas.
pub fn prefactor_free_bound(
    lambda2: f64,
    r_star: usize,
    sla: &SlaParams,
    pair_count: u64,
    k: &BoundConstants,
) -> Result<f64> {
    if pair_count < 2 {
        return Err(Error::InvalidInput(
            "bound needs at least 2 node pairs".into(),
        ));
    }
    k.validate()?;
    let h = sla.h0 - r_star as f64;
    let gamma = sla.a.min(k.rate_scale * lambda2);
    Ok(k.amplitude / (pair_count as f64).ln() * (-gamma * h).exp())
}

/// Three-part exponential upper bound on the average tail probability `J`:
/// `C (e^{-aH} + aH e^{-min(a, c l2) H} + a/(a + c l2) e^{-c l2 H})`.
pub fn j_exponential_bound(
    lambda2: f64,
    r_star: usize,
    sla: &SlaParams,
    k: &BoundConstants,
) -> Result<f64> {
    k.validate()?;
    let h = sla.h0 - r_star as f64;
    if h < 0.0 {
        return Err(Error::InvalidInput(format!(
            "J bound requires h0 >= r_star, got H = {h}"
        )));
    }
    let a = sla.a;
    let cl = k.rate_scale * lambda2;
    let gamma = a.min(cl);
    Ok(k.amplitude
        * ((-a * h).exp() + a * h * (-gamma * h).exp() + a / (a + cl) * (-cl * h).exp()))
}

/// One measured sweep point used for constant fitting and breach evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    /// Measured imbalance index.
    #[serde(rename = "I")]
    pub imbalance: f64,
    pub lambda2: f64,
    pub r_star: usize,
    pub a: f64,
    pub h0: f64,
    #[serde(rename = "M")]
    pub pair_count: u64,
    /// Topology family (`er`, `ws`, `ba`, `path`, `file`), used to split fit
    /// set from held-out set.
    pub family: String,
}

impl Observation {
    /// `I ln M / ((1 + aH) e^{-gamma H})`: the smallest amplitude that keeps
    /// this observation under the bound at the given rate scale.
    fn amplitude_ratio(&self, rate_scale: f64) -> f64 {
        let h = self.h0 - self.r_star as f64;
        let gamma = self.a.min(rate_scale * self.lambda2);
        self.imbalance * (self.pair_count as f64).ln()
            / ((1.0 + self.a * h) * (-gamma * h).exp())
    }
}

/// Number of grid points scanned for the rate scale `c`.
const RATE_GRID_POINTS: usize = 200;
const RATE_GRID_LO: f64 = 1e-3;
const RATE_GRID_HI: f64 = 10.0;

/// Relative headroom applied to the fitted amplitude so the touching
/// observation cannot breach through rounding alone.
const AMPLITUDE_HEADROOM: f64 = 1e-9;

/// Fit `(C, c)` on the filtered observations: grid search over
/// `c in logspace(1e-3, 10)`; for each `c` the amplitude is the zero-breach
/// maximum ratio; the winning `c` minimizes the median log-slack of the fit
/// set. `C_deg` stays at its configured default.
pub fn fit_constants(
    observations: &[Observation],
    fit_filter: impl Fn(&Observation) -> bool,
) -> Result<BoundConstants> {
    let usable: Vec<&Observation> = observations
        .iter()
        .filter(|o| {
            fit_filter(o) && o.imbalance > 0.0 && o.h0 >= o.r_star as f64 && o.pair_count >= 2
        })
        .collect();
    if usable.is_empty() {
        return Err(Error::InvalidInput(
            "constant fit needs at least one observation with I > 0 and h0 >= r_star".into(),
        ));
    }
    let mut best: Option<(f64, f64, f64)> = None; // (median slack, c, C)
    for c in logspace(RATE_GRID_LO, RATE_GRID_HI, RATE_GRID_POINTS) {
        let ratios: Vec<f64> = usable.iter().map(|o| o.amplitude_ratio(c)).collect();
        let max_ratio = ratios.iter().fold(0.0f64, |m, &r| m.max(r));
        if !max_ratio.is_finite() || max_ratio <= 0.0 {
            continue;
        }
        let amplitude = max_ratio * (1.0 + AMPLITUDE_HEADROOM);
        let mut slacks: Vec<f64> = ratios.iter().map(|&r| (amplitude / r).ln()).collect();
        slacks.sort_by(|x, y| x.partial_cmp(y).expect("finite slack"));
        let median = slacks[slacks.len() / 2];
        if best.map(|(m, _, _)| median < m).unwrap_or(true) {
            best = Some((median, c, amplitude));
        }
    }
    let (_, rate_scale, amplitude) = best.ok_or_else(|| {
        Error::InvalidInput("constant fit failed: no finite amplitude on the grid".into())
    })?;
    Ok(BoundConstants {
        amplitude,
        rate_scale,
        degree_penalty: BoundConstants::default().degree_penalty,
        fit_provenance: format!(
            "zero-breach max-ratio fit on {} observations; c grid logspace[{RATE_GRID_LO}, {RATE_GRID_HI}] x {RATE_GRID_POINTS}",
            usable.len()
        ),
    })
}

/// Breach predicate shared by the envelope protocol: measured `I` strictly
/// above the bound.
pub fn is_breach(imbalance: f64, bound: f64) -> bool {
    imbalance > bound
}

/// Per-radius slack of the spectral tail envelope
/// `tau_r <= C exp(-c lambda_2 [r - r*]_+)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailEnvelopeReport {
    /// `C e^{-c l2 [r - r*]_+} - tau_r` per radius.
    pub slack: Vec<f64>,
    pub breaches: usize,
}

pub fn tail_envelope_check(
    profile: &TailProfile,
    lambda2: f64,
    k: &BoundConstants,
) -> TailEnvelopeReport {
    let rate = k.rate_scale * lambda2;
    let slack: Vec<f64> = profile
        .tau
        .iter()
        .enumerate()
        .map(|(r, &tau)| {
            let excess = (r as f64 - profile.r_star as f64).max(0.0);
            k.amplitude * (-rate * excess).exp() - tau
        })
        .collect();
    let breaches = slack.iter().filter(|&&s| s < 0.0).count();
    TailEnvelopeReport { slack, breaches }
}

/// Distance-only performance certificate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    /// Upper bound on `I`; `+inf` when no finite form applies.
    pub bound: f64,
    /// Minimizing integer radius.
    pub radius: usize,
    /// Whether the `tau_r + e^{-a(h0-r)} <= 1/2` condition held.
    pub valid: bool,
    /// Set when the factor-2 form was unavailable and the exact
    /// `J/(1-J)` denominator was used instead.
    pub general_form: bool,
}

/// Evaluate `I <= (2 / ln M)(tau_r + e^{-a(h0 - r)})` minimized over integer
/// radii `r in [0, floor(h0)]`, ties to the smallest radius. Consumes no
/// spectral quantities.
pub fn data_driven_certificate(
    profile: &TailProfile,
    sla: &SlaParams,
    pair_count: u64,
) -> Result<Certificate> {
    if pair_count < 2 {
        return Err(Error::InvalidInput(
            "certificate needs at least 2 node pairs".into(),
        ));
    }
    if sla.h0 < 1.0 {
        return Err(Error::InvalidInput(format!(
            "certificate needs h0 >= 1, got {}",
            sla.h0
        )));
    }
    // Radii past the diameter have tau = 0 and a strictly worse exponential
    // term than r = diameter, so the scan can stop there.
    let r_hi = (sla.h0.floor() as usize).min(profile.max_radius());
    let mut best_r = 0;
    let mut best = f64::INFINITY;
    for r in 0..=r_hi {
        let value = profile.tau_at(r) + (-sla.a * (sla.h0 - r as f64)).exp();
        if value < best {
            best = value;
            best_r = r;
        }
    }
    let ln_m = (pair_count as f64).ln();
    let valid = best <= 0.5;
    let (bound, general_form) = if valid {
        (2.0 / ln_m * best, false)
    } else if best < 1.0 {
        (best / (1.0 - best) / ln_m, true)
    } else {
        (f64::INFINITY, true)
    };
    Ok(Certificate {
        bound,
        radius: best_r,
        valid,
        general_form,
    })
}

/// Decay rate `gamma = min(a, c lambda_2)` and its regime.
pub fn decay_rate(a: f64, lambda2: f64, rate_scale: f64) -> Result<(f64, Regime)> {
    for (name, v) in [("a", a), ("lambda2", lambda2), ("c", rate_scale)] {
        if !v.is_finite() || v <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "decay rate needs positive {name}, got {v}"
            )));
        }
    }
    let c_lambda2 = rate_scale * lambda2;
    Ok((a.min(c_lambda2), Regime::classify(a, c_lambda2)))
}

/// One cell of the design phase diagram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseCell {
    pub a: f64,
    pub lambda2: f64,
    pub c_lambda2: f64,
    pub gamma: f64,
    pub regime: Regime,
}

impl PhaseCell {
    pub const CSV_HEADER: &'static str = "a,lambda2,c_lambda2,gamma,regime";

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.a, self.lambda2, self.c_lambda2, self.gamma, self.regime
        )
    }
}

/// Decay-rate table over an `(a, lambda_2)` grid, row-major in `a`.
pub fn phase_diagram(a_grid: &[f64], lambda2_grid: &[f64], rate_scale: f64) -> Result<Vec<PhaseCell>> {
    let mut cells = Vec::with_capacity(a_grid.len() * lambda2_grid.len());
    for &a in a_grid {
        for &lambda2 in lambda2_grid {
            let (gamma, regime) = decay_rate(a, lambda2, rate_scale)?;
            cells.push(PhaseCell {
                a,
                lambda2,
                c_lambda2: rate_scale * lambda2,
                gamma,
                regime,
            });
        }
    }
    Ok(cells)
}

/// Threshold sufficient for a target imbalance:
/// `h0 = r* + [ln(C / I_tar) - ln ln M] / min(a, c lambda_2)`, floored at
/// `r*` when the increment is negative. The `(1 + aH)` pre-factor is dropped,
/// matching the design formulas.
pub fn reverse_design_h0(
    i_target: f64,
    lambda2: f64,
    r_star: usize,
    a: f64,
    pair_count: u64,
    k: &BoundConstants,
) -> Result<f64> {
    if !i_target.is_finite() || i_target <= 0.0 || i_target >= 1.0 {
        return Err(Error::InvalidInput(format!(
            "target imbalance must be in (0, 1), got {i_target}"
        )));
    }
    if pair_count < 2 {
        return Err(Error::InvalidInput(
            "reverse design needs at least 2 node pairs".into(),
        ));
    }
    k.validate()?;
    let gamma = a.min(k.rate_scale * lambda2);
    if !gamma.is_finite() || gamma <= 0.0 {
        return Err(Error::InvalidInput(
            "reverse design needs a positive decay rate".into(),
        ));
    }
    let increment =
        ((k.amplitude / i_target).ln() - (pair_count as f64).ln().ln()) / gamma;
    Ok(r_star as f64 + increment.max(0.0))
}

/// Spectral gap sufficient for a target imbalance at fixed `(a, h0)`:
/// `lambda_2 = [ln(C / I_tar) - ln ln M] / (c (h0 - r*))`, assuming the
/// structure-limited regime. Zero when the target is already met at `r*`.
pub fn reverse_design_lambda2(
    i_target: f64,
    h0: f64,
    r_star: usize,
    pair_count: u64,
    k: &BoundConstants,
) -> Result<f64> {
    if !i_target.is_finite() || i_target <= 0.0 || i_target >= 1.0 {
        return Err(Error::InvalidInput(format!(
            "target imbalance must be in (0, 1), got {i_target}"
        )));
    }
    if pair_count < 2 {
        return Err(Error::InvalidInput(
            "reverse design needs at least 2 node pairs".into(),
        ));
    }
    k.validate()?;
    let headroom = h0 - r_star as f64;
    if !headroom.is_finite() || headroom <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "spectral-gap reverse design requires h0 > r_star (h0 = {h0}, r_star = {r_star})"
        )));
    }
    let numerator = (k.amplitude / i_target).ln() - (pair_count as f64).ln().ln();
    if numerator <= 0.0 {
        return Ok(0.0);
    }
    Ok(numerator / (k.rate_scale * headroom))
}

/// One row of the envelope sweep table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeRow {
    pub graph_id: String,
    pub model: String,
    pub n: usize,
    pub lambda2: f64,
    pub r_star: usize,
    pub a: f64,
    pub h0: f64,
    /// `H = h0 - r*`.
    pub effective_threshold: f64,
    pub gamma: f64,
    /// `x = gamma * H`, the abscissa of the semi-log envelope plot.
    pub x: f64,
    #[serde(rename = "I")]
    pub imbalance: f64,
    pub ln_imbalance: f64,
    pub bound: f64,
    pub breach: bool,
}

impl EnvelopeRow {
    pub const CSV_HEADER: &'static str =
        "graph_id,model,n,lambda2,r_star,a,h0,H,gamma,x,I,ln_I,bound_I,breach";

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.graph_id,
            self.model,
            self.n,
            self.lambda2,
            self.r_star,
            self.a,
            self.h0,
            self.effective_threshold,
            self.gamma,
            self.x,
            self.imbalance,
            self.ln_imbalance,
            self.bound,
            self.breach as u8
        )
    }
}

/// `count` points, log-spaced over `[lo, hi]` inclusive.
pub fn logspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && count >= 2);
    let (ln_lo, ln_hi) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (ln_lo + (ln_hi - ln_lo) * i as f64 / (count - 1) as f64).exp())
        .collect()
}
