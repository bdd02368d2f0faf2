//! Statistical verdicts: Poisson goodness of fit for window counts,
//! exponential goodness of fit for spacings, superposition condition sums,
//! negligibility reports for the block normalizers, Laplacian-versus-disorder
//! threshold sequences, and trace-variance decay.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF, Discrete, DiscreteCDF, Poisson};

use crate::ensemble;
use crate::error::{Error, Result};
use crate::hierarchy::HierarchyGeometry;
use crate::laplacian::{CouplingSequence, SpectralDimensionSpec};
use crate::measures::{self, CountRecord, RescaledProcess};
use crate::numeric::{self, kahan_sum};
use crate::potential::{Normalizers, PotentialModel};

/// Outcome of one goodness-of-fit test.
#[derive(Debug, Clone, Serialize)]
pub struct GofReport {
    pub test: String,
    /// Test statistic; absent when the test is inconclusive.
    pub statistic: Option<f64>,
    /// p-value in `[0, 1]`; absent when the test is inconclusive.
    pub p_value: Option<f64>,
    pub sample_size: usize,
    /// Parameters of the reference model.
    pub params: BTreeMap<String, f64>,
    /// Sample variance over sample mean of the counts (count test only).
    pub dispersion: Option<f64>,
    /// Set when there is too little data for a verdict.
    pub inconclusive: bool,
}

impl GofReport {
    /// True when the test ran and did not reject at the given floor.
    pub fn passes(&self, alpha: f64) -> bool {
        !self.inconclusive && self.p_value.is_some_and(|p| p > alpha)
    }
}

/// Chi-square goodness of fit of integer window counts against a Poisson
/// law with the given mean. Histogram cells with expected mass below 5 are
/// merged (the upper tail first), and the dispersion index
/// `sample variance / sample mean` is reported alongside.
pub fn poisson_count_gof(counts: &[u64], mean: f64) -> Result<GofReport> {
    if !(mean > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "Poisson mean must be positive, got {mean}"
        )));
    }
    if counts.len() < 100 {
        return Err(Error::InsufficientData(format!(
            "count test needs at least 100 samples, got {}",
            counts.len()
        )));
    }
    let n = counts.len() as f64;
    let law = Poisson::new(mean).expect("positive mean");
    let cmax = *counts.iter().max().expect("nonempty") as usize;

    // observed and expected masses per cell 0..=cmax, plus the open tail
    let mut observed = vec![0.0f64; cmax + 2];
    for &c in counts {
        observed[c as usize] += 1.0;
    }
    let mut expected: Vec<f64> = (0..=cmax as u64).map(|c| n * law.pmf(c)).collect();
    expected.push(n * (1.0 - law.cdf(cmax as u64)));

    // greedy merge: close a group once it carries expected mass ≥ 5; the
    // remainder lands in the final (tail) group
    let mut groups: Vec<(f64, f64)> = Vec::new();
    let mut acc = (0.0, 0.0);
    for (o, e) in observed.iter().zip(&expected) {
        acc.0 += o;
        acc.1 += e;
        if acc.1 >= 5.0 {
            groups.push(acc);
            acc = (0.0, 0.0);
        }
    }
    if acc.1 > 0.0 || acc.0 > 0.0 {
        match groups.last_mut() {
            Some(last) => {
                last.0 += acc.0;
                last.1 += acc.1;
            }
            None => groups.push(acc),
        }
    }
    if groups.len() < 2 {
        return Err(Error::InsufficientData(
            "histogram degenerates to a single cell; cannot test".into(),
        ));
    }

    let statistic = groups
        .iter()
        .map(|&(o, e)| (o - e) * (o - e) / e)
        .sum::<f64>();
    let df = (groups.len() - 1) as f64;
    let p_value = ChiSquared::new(df).expect("positive df").sf(statistic);

    let values: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    let (sample_mean, sample_var) = numeric::mean_variance(&values);
    let dispersion = (sample_mean > 0.0).then_some(sample_var / sample_mean);

    let mut params = BTreeMap::new();
    params.insert("mean".to_string(), mean);
    params.insert("cells".to_string(), groups.len() as f64);
    Ok(GofReport {
        test: "chi_square_poisson_counts".to_string(),
        statistic: Some(statistic),
        p_value: Some(p_value),
        sample_size: counts.len(),
        params,
        dispersion,
        inconclusive: false,
    })
}

/// Distribution function of the spacing between consecutive points of a
/// rate-`rate` Poisson process observed through a window of the given
/// length: density proportional to `(L − g)·e^(−rate·g)` on `[0, L]`.
///
/// Reduces to the plain exponential law as `L → ∞`.
pub fn windowed_exponential_cdf(gap: f64, rate: f64, window_length: f64) -> f64 {
    let l = window_length;
    if gap <= 0.0 {
        return 0.0;
    }
    if gap >= l {
        return 1.0;
    }
    let mass = |g: f64| (l - 1.0 / rate) * (-(-rate * g).exp_m1()) + g * (-rate * g).exp();
    (mass(gap) / mass(l)).clamp(0.0, 1.0)
}

/// Kolmogorov–Smirnov test of the pooled consecutive spacings of rescaled
/// processes against the spacing law of a Poisson process with the given
/// intensity, accounting for each process's finite window.
///
/// Fewer than 50 pooled gaps yields an inconclusive report, not an error.
pub fn exponential_gap_gof(processes: &[RescaledProcess], intensity: f64) -> Result<GofReport> {
    if !(intensity > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "intensity must be positive, got {intensity}"
        )));
    }
    let mut transformed: Vec<f64> = Vec::new();
    for p in processes {
        let l = p.window_length();
        if l <= 0.0 {
            continue;
        }
        for gap in p.gaps() {
            transformed.push(windowed_exponential_cdf(gap, intensity, l));
        }
    }
    let mut params = BTreeMap::new();
    params.insert("intensity".to_string(), intensity);
    if transformed.len() < 50 {
        return Ok(GofReport {
            test: "ks_exponential_gaps".to_string(),
            statistic: None,
            p_value: None,
            sample_size: transformed.len(),
            params,
            dispersion: None,
            inconclusive: true,
        });
    }
    transformed.sort_by(f64::total_cmp);
    let n = transformed.len() as f64;
    let mut d = 0.0f64;
    for (i, &u) in transformed.iter().enumerate() {
        d = d.max(u - i as f64 / n).max((i + 1) as f64 / n - u);
    }
    // finite-sample correction of the asymptotic Kolmogorov law
    let lambda = (n.sqrt() + 0.12 + 0.11 / n.sqrt()) * d;
    let p_value = numeric::kolmogorov_sf(lambda);
    Ok(GofReport {
        test: "ks_exponential_gaps".to_string(),
        statistic: Some(d),
        p_value: Some(p_value),
        sample_size: transformed.len(),
        params,
        dispersion: None,
        inconclusive: false,
    })
}

/// Empirical superposition condition sums for one volume level.
#[derive(Debug, Clone, Serialize)]
pub struct GrigelionisRow {
    pub k: u32,
    pub blocks: usize,
    pub realizations: usize,
    /// `max_j P̂[ξ_{k,j}(I) ≥ 1]`: uniform negligibility.
    pub max_p_at_least_one: f64,
    /// `Σ_j P̂[ξ_{k,j}(I) ≥ 1]`: converges to the window intensity mass.
    pub sum_p_at_least_one: f64,
    /// `Σ_j P̂[ξ_{k,j}(I) ≥ 2]`: double occupancy, vanishes in the limit.
    pub sum_p_at_least_two: f64,
    pub se_sum_p_at_least_one: f64,
    pub se_sum_p_at_least_two: f64,
}

/// Empirical per-block occupation probabilities from truncated-block count
/// ensembles, aggregated per volume level.
pub fn grigelionis_sums(ensembles: &[(u32, Vec<CountRecord>)]) -> Result<Vec<GrigelionisRow>> {
    ensembles
        .iter()
        .map(|(k, records)| {
            let m = records.len();
            if m < 200 {
                return Err(Error::InsufficientData(format!(
                    "condition sums need at least 200 realizations, got {m} at k={k}"
                )));
            }
            let blocks = records[0].blocks();
            if records.iter().any(|r| r.blocks() != blocks) {
                return Err(Error::DimensionMismatch(format!(
                    "inconsistent block counts in the k={k} ensemble"
                )));
            }
            let mut p1 = vec![0.0f64; blocks];
            let mut p2 = vec![0.0f64; blocks];
            for record in records {
                for (j, &c) in record.per_block().iter().enumerate() {
                    if c >= 1 {
                        p1[j] += 1.0;
                    }
                    if c >= 2 {
                        p2[j] += 1.0;
                    }
                }
            }
            for v in p1.iter_mut().chain(p2.iter_mut()) {
                *v /= m as f64;
            }
            let var_sum = |ps: &[f64]| {
                kahan_sum(ps.iter().map(|&p| p * (1.0 - p) / m as f64)).sqrt()
            };
            Ok(GrigelionisRow {
                k: *k,
                blocks,
                realizations: m,
                max_p_at_least_one: p1.iter().copied().fold(0.0, f64::max),
                sum_p_at_least_one: kahan_sum(p1.iter().copied()),
                sum_p_at_least_two: kahan_sum(p2.iter().copied()),
                se_sum_p_at_least_one: var_sum(&p1),
                se_sum_p_at_least_two: var_sum(&p2),
            })
        })
        .collect()
}

/// One row of the negligibility/threshold condition table.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionRow {
    pub k: u32,
    pub r: u32,
    pub volume: usize,
    /// `sup_j A_{k,j}/A_k`.
    pub max_block_share: f64,
    /// `Σ_j (A_{k,j}/A_k)²`.
    pub squared_share_sum: f64,
    /// `A_k·|B_k|·(1 − λ_{r_k})`, which must vanish for the local limit theorem.
    pub poisson_condition: f64,
    /// `(|B_k|/A_k)·(1 − λ_{r_k})`, which must vanish for the trace variance.
    pub trace_condition: f64,
}

fn condition_rows(
    model: &PotentialModel,
    couplings: &CouplingSequence,
    theta: f64,
    k_list: &[u32],
    geom: &HierarchyGeometry,
) -> Result<Vec<ConditionRow>> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "block exponent θ must lie in (0, 1), got {theta}"
        )));
    }
    if k_list.is_empty() {
        return Err(Error::InsufficientData("empty volume list".into()));
    }
    k_list
        .iter()
        .map(|&k| {
            let r = (theta * k as f64).floor() as u32;
            if r < 1 {
                return Err(Error::InvalidParameter(format!(
                    "r_k = ⌊θk⌋ = 0 at k={k}; increase k or θ"
                )));
            }
            if r > couplings.max_level() {
                return Err(Error::InvalidParameter(format!(
                    "couplings stop at level {}, need level {r}",
                    couplings.max_level()
                )));
            }
            let norms = Normalizers::compute(model, k, r, geom)?;
            let volume = geom.volume(k)?;
            let tail = couplings.tail(r);
            Ok(ConditionRow {
                k,
                r,
                volume,
                max_block_share: norms.max_block_share(),
                squared_share_sum: norms.squared_share_sum(),
                poisson_condition: norms.total() * volume as f64 * tail,
                trace_condition: volume as f64 / norms.total() * tail,
            })
        })
        .collect()
}

/// Negligibility report for the block normalizers along `r_k = ⌊θk⌋`.
#[derive(Debug, Clone, Serialize)]
pub struct HypothesisHReport {
    pub gamma: f64,
    pub theta: f64,
    pub rows: Vec<ConditionRow>,
    /// Least-squares slope of `ln Σ_j(A_{k,j}/A_k)²` against `ln|B_k|`.
    pub fitted_slope: f64,
    /// Asymptotic slope `−min{2(1+γ)(1−θ), 1−θ}`; at `γ = −1/2` the two
    /// branches meet and a logarithmic factor appears, so the expectation
    /// carries the finite-volume correction of that factor.
    pub expected_slope: f64,
    pub log_variant: bool,
}

fn expected_share_slope(
    gamma: f64,
    theta: f64,
    k_list: &[u32],
    branching: u32,
) -> (f64, bool) {
    let log_variant = (gamma + 0.5).abs() < 1e-9;
    if log_variant {
        let ln_n = (branching as f64).ln();
        let correction = k_list
            .iter()
            .map(|&k| 1.0 / (k as f64 * ln_n))
            .sum::<f64>()
            / k_list.len() as f64;
        (-(1.0 - theta) + correction, true)
    } else {
        let exponent = (2.0 * (1.0 + gamma) * (1.0 - theta)).min(1.0 - theta);
        (-exponent, false)
    }
}

/// Exact (sampling-free) negligibility sequences with a slope fit against
/// the predicted decay exponent.
pub fn hypothesis_h_report(
    model: &PotentialModel,
    couplings: &CouplingSequence,
    theta: f64,
    k_list: &[u32],
    geom: &HierarchyGeometry,
) -> Result<HypothesisHReport> {
    let rows = condition_rows(model, couplings, theta, k_list, geom)?;
    let xs: Vec<f64> = rows.iter().map(|r| (r.volume as f64).ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.squared_share_sum.ln()).collect();
    let (fitted_slope, _) = numeric::linear_fit(&xs, &ys)?;
    let (expected_slope, log_variant) =
        expected_share_slope(model.gamma(), theta, k_list, geom.branching());
    Ok(HypothesisHReport {
        gamma: model.gamma(),
        theta,
        rows,
        fitted_slope,
        expected_slope,
        log_variant,
    })
}

/// Verdict of the spectral-dimension threshold check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdVerdict {
    Satisfied,
    ThresholdViolated,
}

impl std::fmt::Display for ThresholdVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ThresholdVerdict::Satisfied => write!(f, "satisfied"),
            ThresholdVerdict::ThresholdViolated => write!(f, "threshold violated"),
        }
    }
}

/// Competition between the Laplacian tail and the disorder mass along
/// `r_k = ⌊θk⌋` for a geometric coupling family.
#[derive(Debug, Clone, Serialize)]
pub struct ThresholdReport {
    pub d: f64,
    pub gamma: f64,
    pub theta: f64,
    /// Whether `(1+γ/2)·d < 1`, i.e. an admissible θ interval exists.
    pub feasible: bool,
    pub verdict: ThresholdVerdict,
    pub rows: Vec<ConditionRow>,
    pub fitted_poisson_exponent: f64,
    /// `2 + γ − 2θ/d`.
    pub expected_poisson_exponent: f64,
    pub fitted_trace_exponent: f64,
    /// `−γ − 2θ/d`.
    pub expected_trace_exponent: f64,
}

/// Midpoint of the admissible interval `((1+γ/2)d, 1)`, when it exists.
pub fn feasible_theta(gamma: f64, d: f64) -> Option<f64> {
    let lower = (1.0 + gamma / 2.0) * d;
    (lower < 1.0).then_some(0.5 * (lower + 1.0))
}

/// Evaluate both Laplacian-versus-disorder sequences for a geometric
/// coupling family. Below the threshold `d < 1/(1+γ/2)` both sequences
/// decay; at or above it the report is still produced but flagged.
pub fn dimension_threshold_report(
    model: &PotentialModel,
    dim: &SpectralDimensionSpec,
    theta: Option<f64>,
    k_list: &[u32],
    geom: &HierarchyGeometry,
) -> Result<ThresholdReport> {
    if k_list.is_empty() {
        return Err(Error::InsufficientData("empty volume list".into()));
    }
    let feasible = feasible_theta(model.gamma(), dim.dimension()).is_some();
    let theta_used = match theta {
        Some(t) => {
            if !(t > 0.0 && t < 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "block exponent θ must lie in (0, 1), got {t}"
                )));
            }
            t
        }
        // no admissible interval: evaluate at the center of (0,1) and flag
        None => feasible_theta(model.gamma(), dim.dimension()).unwrap_or(0.5),
    };
    let max_k = *k_list.iter().max().expect("nonempty");
    let couplings = CouplingSequence::geometric(dim, max_k)?;
    let rows = condition_rows(model, &couplings, theta_used, k_list, geom)?;
    let xs: Vec<f64> = rows.iter().map(|r| (r.volume as f64).ln()).collect();
    let poisson_ys: Vec<f64> = rows.iter().map(|r| r.poisson_condition.ln()).collect();
    let trace_ys: Vec<f64> = rows.iter().map(|r| r.trace_condition.ln()).collect();
    let (fitted_poisson_exponent, _) = numeric::linear_fit(&xs, &poisson_ys)?;
    let (fitted_trace_exponent, _) = numeric::linear_fit(&xs, &trace_ys)?;
    let d = dim.dimension();
    let gamma = model.gamma();
    Ok(ThresholdReport {
        d,
        gamma,
        theta: theta_used,
        feasible,
        verdict: if feasible {
            ThresholdVerdict::Satisfied
        } else {
            ThresholdVerdict::ThresholdViolated
        },
        rows,
        fitted_poisson_exponent,
        expected_poisson_exponent: 2.0 + gamma - 2.0 * theta_used / d,
        fitted_trace_exponent,
        expected_trace_exponent: -gamma - 2.0 * theta_used / d,
    })
}

/// Ensemble variance of the normalized resolvent trace at one volume level.
#[derive(Debug, Clone, Serialize)]
pub struct TraceVarianceRow {
    pub k: u32,
    pub r: u32,
    pub realizations: usize,
    pub variance_re: f64,
    pub variance_im: f64,
    /// `Var(Re) + Var(Im)`, the centered second moment of the complex trace.
    pub variance_total: f64,
    /// Standard error of `variance_total`.
    pub variance_se: f64,
    /// `(2·(|B_k|/A_k)(1−λ_{r_k})/|Im z|²)² + Σ_j(A_{k,j}/A_k)²`.
    pub bound: f64,
}

/// Sample variance of `(1/A_k)·Σ_i 1/(e_i − z)` over full-operator
/// realizations, per volume level, against the closed-form bound evaluated
/// along `r_k = ⌊θk⌋`.
#[allow(clippy::too_many_arguments)]
pub fn trace_variance_decay(
    model: &PotentialModel,
    couplings: &CouplingSequence,
    geom: &HierarchyGeometry,
    theta: f64,
    z: Complex64,
    k_list: &[u32],
    realizations: usize,
    base_seed: u64,
    workers: Option<usize>,
) -> Result<Vec<TraceVarianceRow>> {
    if realizations < 100 {
        return Err(Error::InsufficientData(format!(
            "trace-variance ensembles need at least 100 realizations, got {realizations}"
        )));
    }
    if !(z.im > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "trace statistic needs Im z > 0, got {z}"
        )));
    }
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "block exponent θ must lie in (0, 1), got {theta}"
        )));
    }
    k_list
        .iter()
        .map(|&k| {
            let r = (theta * k as f64).floor() as u32;
            if r < 1 {
                return Err(Error::InvalidParameter(format!(
                    "r_k = ⌊θk⌋ = 0 at k={k}; increase k or θ"
                )));
            }
            let normalizer = model.normalizer(k, geom)?;
            let spectra =
                ensemble::spectra(model, couplings, geom, k, k, realizations, base_seed, workers)?;
            let traces: Vec<Complex64> = spectra
                .iter()
                .map(|s| Ok(measures::trace_statistic(s, z)? / normalizer))
                .collect::<Result<_>>()?;
            let res: Vec<f64> = traces.iter().map(|t| t.re).collect();
            let ims: Vec<f64> = traces.iter().map(|t| t.im).collect();
            let (mean_re, variance_re) = numeric::mean_variance(&res);
            let (mean_im, variance_im) = numeric::mean_variance(&ims);
            let sq_dev: Vec<f64> = traces
                .iter()
                .map(|t| {
                    let dr = t.re - mean_re;
                    let di = t.im - mean_im;
                    dr * dr + di * di
                })
                .collect();
            let variance_se = numeric::standard_error(&sq_dev);
            let norms = Normalizers::compute(model, k, r, geom)?;
            let volume = geom.volume(k)? as f64;
            let tail_term =
                2.0 * (volume / norms.total()) * couplings.tail(r) / (z.im * z.im);
            let bound = tail_term * tail_term + norms.squared_share_sum();
            Ok(TraceVarianceRow {
                k,
                r,
                realizations,
                variance_re,
                variance_im,
                variance_total: variance_re + variance_im,
                variance_se,
                bound,
            })
        })
        .collect()
}
