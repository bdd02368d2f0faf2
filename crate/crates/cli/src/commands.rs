//! Subcommand implementations. Every command writes a reproducibility
//! manifest, CSV data and a JSON summary into its own directory; statistical
//! "fail" verdicts are recorded in the JSON, not in the exit status.

use anyhow::anyhow;
use num_complex::Complex64;
use serde::Serialize;

use hieranderson::ensemble::{self, realization_seed};
use hieranderson::laplacian::{analytic_spectrum, CouplingSequence, SpectralDimensionSpec};
use hieranderson::measures::{self, EtaEstimate};
use hieranderson::numeric::{mean_variance, standard_error};
use hieranderson::operator::{assemble_hamiltonian, SpectrumSample};
use hieranderson::potential::PotentialModel;
use hieranderson::reference::{self, PoissonRef};
use hieranderson::stats::{self, GofReport};
use hieranderson::HierarchyGeometry;

use crate::config::ExperimentConfig;
use crate::output::{fmt, OutputWriter};
use crate::CliError;

/// Significance floor for acceptance verdicts recorded in summaries.
const P_FLOOR: f64 = 0.001;

pub struct Experiment {
    pub config: ExperimentConfig,
    pub geom: HierarchyGeometry,
    pub model: PotentialModel,
    pub out: OutputWriter,
    pub command: &'static str,
}

impl Experiment {
    pub fn new(config: ExperimentConfig, command: &'static str) -> Result<Self, CliError> {
        let geom = HierarchyGeometry::new(config.n).map_err(config_err)?;
        let model =
            PotentialModel::new(config.base_density(), config.gamma).map_err(config_err)?;
        let name = config.name.clone().unwrap_or_else(|| command.to_string());
        let out = OutputWriter::create(&config.out_dir, &name).map_err(CliError::Runtime)?;
        Ok(Self {
            config,
            geom,
            model,
            out,
            command,
        })
    }

    /// Coupling sequence through `max_level`: the explicit list when given,
    /// otherwise the geometric family of the configured dimension.
    fn couplings(&self, max_level: u32) -> Result<CouplingSequence, CliError> {
        match &self.config.couplings {
            Some(weights) => {
                if (weights.len() as u32) < max_level {
                    return Err(CliError::Config(vec![format!(
                        "explicit couplings stop at level {}, this run needs level {max_level}",
                        weights.len()
                    )]));
                }
                CouplingSequence::from_weights(weights.clone()).map_err(config_err)
            }
            None => {
                let dim =
                    SpectralDimensionSpec::new(self.config.d, self.config.n).map_err(config_err)?;
                CouplingSequence::geometric(&dim, max_level).map_err(config_err)
            }
        }
    }

    fn theta(&self) -> Result<f64, CliError> {
        self.config
            .resolve_theta()
            .map_err(|m| CliError::Config(vec![m]))
    }

    fn finish(&self) -> Result<(), CliError> {
        self.out
            .write_manifest(self.command, &self.config)
            .map_err(CliError::Runtime)?;
        println!("{}: outputs in {}", self.command, self.out.dir().display());
        Ok(())
    }
}

fn config_err(e: hieranderson::Error) -> CliError {
    CliError::Config(vec![e.to_string()])
}

fn runtime(e: hieranderson::Error) -> CliError {
    CliError::Runtime(anyhow!(e))
}

fn truncation_level(theta: f64, k: u32) -> u32 {
    (theta * k as f64).floor() as u32
}

fn linspace(min: f64, max: f64, points: usize) -> Vec<f64> {
    (0..points)
        .map(|i| min + (max - min) * i as f64 / (points - 1) as f64)
        .collect()
}

fn verdict_label(pass: bool) -> &'static str {
    if pass {
        "pass"
    } else {
        "fail"
    }
}

// ---------------------------------------------------------------- spectrum

#[derive(Serialize)]
struct SpectrumSummary {
    k: u32,
    truncation_level: u32,
    dim: usize,
    realization_seed: u64,
    normalizer: f64,
    lambda_full: f64,
    lambda_truncated: f64,
    full_min: f64,
    full_max: f64,
    truncated_min: f64,
    truncated_max: f64,
    /// Adjacent eigenvalue pairs of the full spectrum closer than 1e-12.
    near_degenerate_pairs: usize,
    laplacian_levels: Vec<f64>,
}

/// One realization: eigenvalues of the full and the truncated operator.
pub fn spectrum(exp: &Experiment) -> Result<(), CliError> {
    let cfg = &exp.config;
    cfg.check_dense_volume(&[cfg.k])
        .map_err(|m| CliError::Config(vec![m]))?;
    let theta = exp.theta()?;
    let r = truncation_level(theta, cfg.k);
    let couplings = exp.couplings(cfg.k)?;
    let seed = realization_seed(cfg.seed, 0);
    let potential = exp.model.sample(cfg.k, &exp.geom, seed).map_err(runtime)?;
    let full = assemble_hamiltonian(&couplings, cfg.k, cfg.k, &potential, &exp.geom)
        .map_err(runtime)?
        .eigenvalues()
        .map_err(runtime)?;
    let truncated = assemble_hamiltonian(&couplings, cfg.k, r, &potential, &exp.geom)
        .map_err(runtime)?
        .eigenvalues()
        .map_err(runtime)?;

    exp.out
        .write_csv(
            "eigenvalues.csv",
            &["index", "full", "truncated"],
            full.eigenvalues
                .iter()
                .zip(&truncated.eigenvalues)
                .enumerate()
                .map(|(i, (f, t))| vec![i.to_string(), fmt(*f), fmt(*t)]),
        )
        .map_err(CliError::Runtime)?;

    let levels = analytic_spectrum(&couplings, cfg.k, &exp.geom).map_err(runtime)?;
    let summary = SpectrumSummary {
        k: cfg.k,
        truncation_level: r,
        dim: full.len(),
        realization_seed: seed,
        normalizer: exp.model.normalizer(cfg.k, &exp.geom).map_err(runtime)?,
        lambda_full: couplings.cumulative(cfg.k),
        lambda_truncated: couplings.cumulative(r),
        full_min: full.eigenvalues[0],
        full_max: *full.eigenvalues.last().unwrap(),
        truncated_min: truncated.eigenvalues[0],
        truncated_max: *truncated.eigenvalues.last().unwrap(),
        near_degenerate_pairs: full.near_degenerate_pairs(1e-12),
        laplacian_levels: levels.iter().map(|&(e, _)| e).collect(),
    };
    exp.out
        .write_json("summary.json", &summary)
        .map_err(CliError::Runtime)?;
    exp.finish()
}

// --------------------------------------------------------------------- ids

#[derive(Serialize)]
struct IdsSummary {
    k: u32,
    realizations: usize,
    normalizer: f64,
    total_mass: f64,
    grid_points: usize,
}

/// Ensemble-averaged integrated density of states over an energy grid.
pub fn ids(exp: &Experiment) -> Result<(), CliError> {
    let cfg = &exp.config;
    cfg.check_dense_volume(&[cfg.k])
        .map_err(|m| CliError::Config(vec![m]))?;
    let couplings = exp.couplings(cfg.k)?;
    let normalizer = exp.model.normalizer(cfg.k, &exp.geom).map_err(runtime)?;
    let grid = linspace(cfg.grid_min, cfg.grid_max, cfg.grid_points);
    let spectra = ensemble::spectra(
        &exp.model,
        &couplings,
        &exp.geom,
        cfg.k,
        cfg.k,
        cfg.realizations,
        cfg.seed,
        cfg.workers,
    )
    .map_err(runtime)?;

    let tables: Vec<Vec<(f64, f64)>> = spectra
        .iter()
        .map(|s| measures::empirical_ids(s, normalizer, &grid))
        .collect::<hieranderson::Result<_>>()
        .map_err(runtime)?;

    let rows = grid.iter().enumerate().map(|(i, &e)| {
        let values: Vec<f64> = tables.iter().map(|t| t[i].1).collect();
        let (mean, _) = mean_variance(&values);
        let se = standard_error(&values);
        vec![fmt(e), fmt(mean), fmt(se)]
    });
    exp.out
        .write_csv("ids.csv", &["energy", "ids_mean", "ids_se"], rows)
        .map_err(CliError::Runtime)?;

    let summary = IdsSummary {
        k: cfg.k,
        realizations: cfg.realizations,
        normalizer,
        total_mass: exp.geom.volume(cfg.k).map_err(runtime)? as f64 / normalizer,
        grid_points: cfg.grid_points,
    };
    exp.out
        .write_json("summary.json", &summary)
        .map_err(CliError::Runtime)?;
    exp.finish()
}

// ----------------------------------------------------------------- poisson

#[derive(Serialize)]
struct PoissonVerdicts {
    count_gof_pass: bool,
    gap_gof_pass: bool,
    overall: String,
}

#[derive(Serialize)]
struct PoissonSummary {
    k: u32,
    energy: f64,
    half_width: f64,
    realizations: usize,
    normalizer: f64,
    eta: EtaEstimate,
    mean_count: f64,
    count_se: f64,
    dispersion: Option<f64>,
    count_report: GofReport,
    gap_report: GofReport,
    verdicts: PoissonVerdicts,
}

fn poisson_suite(
    exp: &Experiment,
    spectra: &[SpectrumSample],
    normalizer: f64,
    intensity: Option<f64>,
) -> Result<PoissonSummary, CliError> {
    let cfg = &exp.config;
    let processes: Vec<_> = spectra
        .iter()
        .map(|s| measures::rescale_spectrum(s, cfg.energy, normalizer, cfg.half_width))
        .collect::<hieranderson::Result<_>>()
        .map_err(runtime)?;
    let epsilon = cfg
        .epsilon
        .unwrap_or_else(|| measures::default_smoothing(normalizer));
    let eta =
        measures::eta_estimate(spectra, cfg.energy, epsilon, normalizer).map_err(runtime)?;
    let rate = intensity.unwrap_or(eta.value);

    let counts: Vec<u64> = processes.iter().map(|p| p.len() as u64).collect();
    let count_values: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    let (mean_count, _) = mean_variance(&count_values);
    let count_se = standard_error(&count_values);
    let count_report =
        stats::poisson_count_gof(&counts, rate * 2.0 * cfg.half_width).map_err(runtime)?;
    let gap_report = stats::exponential_gap_gof(&processes, rate).map_err(runtime)?;

    exp.out
        .write_csv(
            "counts.csv",
            &["realization", "seed", "count"],
            counts.iter().enumerate().map(|(i, &c)| {
                let seed = spectra[i].seed.unwrap_or_default();
                vec![i.to_string(), seed.to_string(), c.to_string()]
            }),
        )
        .map_err(CliError::Runtime)?;

    let count_pass = count_report.passes(P_FLOOR);
    let gap_pass = gap_report.passes(P_FLOOR);
    let overall = if gap_report.inconclusive {
        "inconclusive".to_string()
    } else {
        verdict_label(count_pass && gap_pass).to_string()
    };
    Ok(PoissonSummary {
        k: cfg.k,
        energy: cfg.energy,
        half_width: cfg.half_width,
        realizations: spectra.len(),
        normalizer,
        eta,
        mean_count,
        count_se,
        dispersion: count_report.dispersion,
        count_report,
        gap_report,
        verdicts: PoissonVerdicts {
            count_gof_pass: count_pass,
            gap_gof_pass: gap_pass,
            overall,
        },
    })
}

/// Full-model local statistics at one energy: window-count and gap
/// goodness of fit against the Poisson law with the estimated intensity.
pub fn poisson(exp: &Experiment) -> Result<(), CliError> {
    let cfg = &exp.config;
    cfg.check_dense_volume(&[cfg.k])
        .map_err(|m| CliError::Config(vec![m]))?;
    let couplings = exp.couplings(cfg.k)?;
    let normalizer = exp.model.normalizer(cfg.k, &exp.geom).map_err(runtime)?;
    let spectra = ensemble::spectra(
        &exp.model,
        &couplings,
        &exp.geom,
        cfg.k,
        cfg.k,
        cfg.realizations,
        cfg.seed,
        cfg.workers,
    )
    .map_err(runtime)?;
    let summary = poisson_suite(exp, &spectra, normalizer, None)?;
    exp.out
        .write_json("summary.json", &summary)
        .map_err(CliError::Runtime)?;
    exp.finish()
}

// ------------------------------------------------------------- pure-random

#[derive(Serialize)]
struct PureRandomSummary {
    #[serde(flatten)]
    suite: PoissonSummary,
    expected_count: f64,
    intensity: f64,
    mean_within_3se: bool,
}

/// Purely random operator (`H = V`): counts against the exact finite-volume
/// intensity, no matrices involved.
pub fn pure_random(exp: &Experiment) -> Result<(), CliError> {
    let cfg = &exp.config;
    let normalizer = exp.model.normalizer(cfg.k, &exp.geom).map_err(runtime)?;
    let spectra: Vec<SpectrumSample> = ensemble::map_realizations(
        cfg.realizations,
        cfg.workers,
        |i| {
            reference::diagonal_spectrum(
                &exp.model,
                cfg.k,
                &exp.geom,
                realization_seed(cfg.seed, i as u64),
            )
        },
    )
    .into_iter()
    .collect::<hieranderson::Result<_>>()
    .map_err(runtime)?;

    let intensity = exp
        .model
        .intensity(cfg.energy, cfg.k, &exp.geom)
        .map_err(runtime)?;
    let suite = poisson_suite(exp, &spectra, normalizer, Some(intensity))?;

    // exact expected window count from the site distribution functions
    let dim = exp.geom.volume(cfg.k).map_err(runtime)?;
    let lo = cfg.energy - cfg.half_width / normalizer;
    let hi = cfg.energy + cfg.half_width / normalizer;
    let expected_count: f64 = (0..dim)
        .map(|x| exp.model.interval_probability(x, lo, hi))
        .sum();

    let mean_within_3se = (suite.mean_count - expected_count).abs() <= 3.0 * suite.count_se;
    let summary = PureRandomSummary {
        suite,
        expected_count,
        intensity,
        mean_within_3se,
    };
    exp.out
        .write_json("summary.json", &summary)
        .map_err(CliError::Runtime)?;
    exp.finish()
}

// ------------------------------------------------------------- grigelionis

#[derive(Serialize)]
struct GrigelionisSummaryRow {
    #[serde(flatten)]
    row: stats::GrigelionisRow,
    truncation_level: u32,
    eta: EtaEstimate,
    intensity_mass: f64,
}

#[derive(Serialize)]
struct GrigelionisSummary {
    interval: [f64; 2],
    theta: f64,
    rows: Vec<GrigelionisSummaryRow>,
    max_occupancy_decreasing: bool,
    double_occupancy_decreasing: bool,
    intensity_match_3se: bool,
}

/// Superposition condition sums across a ladder of volumes, from the
/// truncated block ensembles.
pub fn grigelionis(exp: &Experiment) -> Result<(), CliError> {
    let cfg = &exp.config;
    let k_list = cfg.k_ladder().map_err(|m| CliError::Config(vec![m]))?;
    cfg.check_dense_volume(&k_list)
        .map_err(|m| CliError::Config(vec![m]))?;
    let theta = exp.theta()?;
    let max_k = *k_list.last().unwrap();
    let couplings = exp.couplings(max_k)?;
    let interval = cfg.interval_or_window();

    let mut ensembles = Vec::new();
    let mut summary_rows = Vec::new();
    for &k in &k_list {
        let r = truncation_level(theta, k);
        if r < 1 {
            return Err(CliError::Config(vec![format!(
                "r_k = floor(theta*k) = 0 at k={k}; increase k or theta"
            )]));
        }
        let normalizer = exp.model.normalizer(k, &exp.geom).map_err(runtime)?;
        let blocks_per_realization = ensemble::block_spectra(
            &exp.model,
            &couplings,
            &exp.geom,
            k,
            r,
            cfg.realizations,
            cfg.seed,
            cfg.workers,
        )
        .map_err(runtime)?;

        let records: Vec<_> = blocks_per_realization
            .iter()
            .map(|blocks| measures::block_counts(blocks, cfg.energy, normalizer, interval))
            .collect::<hieranderson::Result<_>>()
            .map_err(runtime)?;

        exp.out
            .write_csv(
                &format!("block_counts_k{k}.csv"),
                &["realization", "seed", "block", "count"],
                records.iter().enumerate().flat_map(|(i, rec)| {
                    let seed = blocks_per_realization[i][0].seed.unwrap_or_default();
                    rec.per_block()
                        .iter()
                        .enumerate()
                        .map(move |(j, &c)| {
                            vec![
                                i.to_string(),
                                seed.to_string(),
                                (j + 1).to_string(),
                                c.to_string(),
                            ]
                        })
                        .collect::<Vec<_>>()
                }),
            )
            .map_err(CliError::Runtime)?;

        // density estimate from the union spectra of the same ensemble
        let union_spectra: Vec<SpectrumSample> = blocks_per_realization
            .iter()
            .map(|blocks| {
                let mut eigenvalues: Vec<f64> = blocks
                    .iter()
                    .flat_map(|b| b.eigenvalues.iter().copied())
                    .collect();
                eigenvalues.sort_by(f64::total_cmp);
                SpectrumSample {
                    eigenvalues,
                    k,
                    r,
                    seed: blocks[0].seed,
                }
            })
            .collect();
        let epsilon = cfg
            .epsilon
            .unwrap_or_else(|| measures::default_smoothing(normalizer));
        let eta = measures::eta_estimate(&union_spectra, cfg.energy, epsilon, normalizer)
            .map_err(runtime)?;

        ensembles.push((k, records));
        summary_rows.push((r, eta));
    }

    let rows = stats::grigelionis_sums(&ensembles).map_err(runtime)?;
    exp.out
        .write_csv(
            "grigelionis.csv",
            &[
                "k",
                "truncation_level",
                "blocks",
                "realizations",
                "max_p_ge1",
                "sum_p_ge1",
                "se_sum_p_ge1",
                "sum_p_ge2",
                "se_sum_p_ge2",
                "eta",
                "eta_se",
            ],
            rows.iter().zip(&summary_rows).map(|(row, (r, eta))| {
                vec![
                    row.k.to_string(),
                    r.to_string(),
                    row.blocks.to_string(),
                    row.realizations.to_string(),
                    fmt(row.max_p_at_least_one),
                    fmt(row.sum_p_at_least_one),
                    fmt(row.se_sum_p_at_least_one),
                    fmt(row.sum_p_at_least_two),
                    fmt(row.se_sum_p_at_least_two),
                    fmt(eta.value),
                    fmt(eta.std_error),
                ]
            }),
        )
        .map_err(CliError::Runtime)?;

    let interval_len = interval.1 - interval.0;
    let max_dec = rows
        .windows(2)
        .all(|w| w[1].max_p_at_least_one < w[0].max_p_at_least_one);
    let two_dec = rows
        .windows(2)
        .all(|w| w[1].sum_p_at_least_two < w[0].sum_p_at_least_two);
    let last = rows.last().unwrap();
    let (_, last_eta) = summary_rows.last().unwrap();
    let gap = (last.sum_p_at_least_one - last_eta.value * interval_len).abs();
    let combined_se = (last.se_sum_p_at_least_one.powi(2)
        + (last_eta.std_error * interval_len).powi(2))
    .sqrt();
    let intensity_match = gap <= 3.0 * combined_se;

    let summary = GrigelionisSummary {
        interval: [interval.0, interval.1],
        theta,
        rows: rows
            .into_iter()
            .zip(summary_rows)
            .map(|(row, (r, eta))| GrigelionisSummaryRow {
                intensity_mass: eta.value * interval_len,
                truncation_level: r,
                eta,
                row,
            })
            .collect(),
        max_occupancy_decreasing: max_dec,
        double_occupancy_decreasing: two_dec,
        intensity_match_3se: intensity_match,
    };
    exp.out
        .write_json("summary.json", &summary)
        .map_err(CliError::Runtime)?;
    exp.finish()
}

// ------------------------------------------------------------ hypothesis-h

#[derive(Serialize)]
struct HypothesisSummary {
    #[serde(flatten)]
    report: stats::HypothesisHReport,
    slope_tolerance: f64,
    slope_within_tolerance: bool,
}

fn write_condition_csv(
    out: &OutputWriter,
    rows: &[stats::ConditionRow],
) -> Result<(), CliError> {
    out.write_csv(
        "conditions.csv",
        &[
            "k",
            "truncation_level",
            "volume",
            "max_block_share",
            "squared_share_sum",
            "poisson_condition",
            "trace_condition",
        ],
        rows.iter().map(|r| {
            vec![
                r.k.to_string(),
                r.r.to_string(),
                r.volume.to_string(),
                fmt(r.max_block_share),
                fmt(r.squared_share_sum),
                fmt(r.poisson_condition),
                fmt(r.trace_condition),
            ]
        }),
    )
    .map_err(CliError::Runtime)?;
    Ok(())
}

/// Exact negligibility sequences (no sampling) with the slope fit.
pub fn hypothesis_h(exp: &Experiment) -> Result<(), CliError> {
    let cfg = &exp.config;
    let k_list: Vec<u32> = match &cfg.k_list {
        Some(list) => {
            let mut l = list.clone();
            l.sort_unstable();
            l
        }
        None => (8..=20).collect(),
    };
    let theta = exp.theta()?;
    let max_k = *k_list.last().unwrap();
    let couplings = exp.couplings(max_k)?;
    let report =
        stats::hypothesis_h_report(&exp.model, &couplings, theta, &k_list, &exp.geom)
            .map_err(runtime)?;
    write_condition_csv(&exp.out, &report.rows)?;
    let tolerance = 0.2;
    let within = (report.fitted_slope - report.expected_slope).abs() <= tolerance;
    exp.out
        .write_json(
            "summary.json",
            &HypothesisSummary {
                report,
                slope_tolerance: tolerance,
                slope_within_tolerance: within,
            },
        )
        .map_err(CliError::Runtime)?;
    exp.finish()
}

// --------------------------------------------------------------- threshold

/// Laplacian-versus-disorder threshold sequences with verdict.
pub fn threshold(exp: &Experiment) -> Result<(), CliError> {
    let cfg = &exp.config;
    let k_list: Vec<u32> = match &cfg.k_list {
        Some(list) => {
            let mut l = list.clone();
            l.sort_unstable();
            l
        }
        None => (4..=16).collect(),
    };
    let dim = SpectralDimensionSpec::new(cfg.d, cfg.n).map_err(config_err)?;
    let report = stats::dimension_threshold_report(
        &exp.model,
        &dim,
        cfg.theta,
        &k_list,
        &exp.geom,
    )
    .map_err(runtime)?;
    write_condition_csv(&exp.out, &report.rows)?;
    exp.out
        .write_json("summary.json", &report)
        .map_err(CliError::Runtime)?;
    exp.finish()
}

// ---------------------------------------------------------- trace-variance

#[derive(Serialize)]
struct TraceVarianceSummary {
    z_imag: f64,
    theta: f64,
    rows: Vec<stats::TraceVarianceRow>,
    variance_decreasing: bool,
    within_bound_3se: bool,
}

/// Ensemble variance of the normalized resolvent trace across volumes.
pub fn trace_variance(exp: &Experiment) -> Result<(), CliError> {
    let cfg = &exp.config;
    let k_list = cfg.k_ladder().map_err(|m| CliError::Config(vec![m]))?;
    cfg.check_dense_volume(&k_list)
        .map_err(|m| CliError::Config(vec![m]))?;
    let theta = exp.theta()?;
    let max_k = *k_list.last().unwrap();
    let couplings = exp.couplings(max_k)?;
    let z = Complex64::new(0.0, cfg.z_imag);
    let rows = stats::trace_variance_decay(
        &exp.model,
        &couplings,
        &exp.geom,
        theta,
        z,
        &k_list,
        cfg.realizations,
        cfg.seed,
        cfg.workers,
    )
    .map_err(runtime)?;

    exp.out
        .write_csv(
            "trace_variance.csv",
            &[
                "k",
                "truncation_level",
                "realizations",
                "variance_re",
                "variance_im",
                "variance_total",
                "variance_se",
                "bound",
            ],
            rows.iter().map(|r| {
                vec![
                    r.k.to_string(),
                    r.r.to_string(),
                    r.realizations.to_string(),
                    fmt(r.variance_re),
                    fmt(r.variance_im),
                    fmt(r.variance_total),
                    fmt(r.variance_se),
                    fmt(r.bound),
                ]
            }),
        )
        .map_err(CliError::Runtime)?;

    let decreasing = rows
        .windows(2)
        .all(|w| w[1].variance_total < w[0].variance_total);
    let bounded = rows
        .iter()
        .all(|r| r.variance_total <= r.bound + 3.0 * r.variance_se);
    exp.out
        .write_json(
            "summary.json",
            &TraceVarianceSummary {
                z_imag: cfg.z_imag,
                theta,
                rows,
                variance_decreasing: decreasing,
                within_bound_3se: bounded,
            },
        )
        .map_err(CliError::Runtime)?;
    exp.finish()
}

// ---------------------------------------------------------------- selftest

#[derive(Serialize)]
struct SelftestRates {
    test: String,
    repetitions: usize,
    rate_05: f64,
    rate_01: f64,
    rate_floor: f64,
    ceiling_05: f64,
    ceiling_01: f64,
    pass: bool,
}

#[derive(Serialize)]
struct SelftestSummary {
    count_calibration: SelftestRates,
    gap_calibration: SelftestRates,
    overall: String,
}

fn rates(test: &str, p_values: &[f64]) -> SelftestRates {
    let reps = p_values.len();
    let frac = |alpha: f64| p_values.iter().filter(|&&p| p <= alpha).count() as f64 / reps as f64;
    let ceiling = |alpha: f64| alpha + 2.0 * (alpha * (1.0 - alpha) / reps as f64).sqrt();
    let rate_05 = frac(0.05);
    let rate_01 = frac(0.01);
    SelftestRates {
        test: test.to_string(),
        repetitions: reps,
        rate_05,
        rate_01,
        rate_floor: frac(P_FLOOR),
        ceiling_05: ceiling(0.05),
        ceiling_01: ceiling(0.01),
        pass: rate_05 <= ceiling(0.05) && rate_01 <= ceiling(0.01),
    }
}

/// Calibration of both goodness-of-fit tests against their own reference
/// samplers.
pub fn selftest(exp: &Experiment) -> Result<(), CliError> {
    let cfg = &exp.config;
    let reps = cfg.selftest_reps;
    let samples = cfg.selftest_samples;
    if reps < 200 {
        return Err(CliError::Config(vec![format!(
            "selftest needs at least 200 repetitions, got {reps}"
        )]));
    }
    let count_ref = PoissonRef::new(0.3, cfg.half_width).map_err(config_err)?;
    let gap_ref =
        PoissonRef::new(1.0 / std::f64::consts::PI, cfg.half_width).map_err(config_err)?;

    let count_ps: Vec<f64> = ensemble::map_realizations(reps, cfg.workers, |rep| {
        let counts: Vec<u64> = (0..samples)
            .map(|i| {
                count_ref
                    .sample(realization_seed(
                        realization_seed(cfg.seed, rep as u64),
                        i as u64,
                    ))
                    .len() as u64
            })
            .collect();
        stats::poisson_count_gof(&counts, count_ref.mean_count())
            .map(|r| r.p_value.unwrap_or(0.0))
    })
    .into_iter()
    .collect::<hieranderson::Result<_>>()
    .map_err(runtime)?;

    let gap_ps: Vec<f64> = ensemble::map_realizations(reps, cfg.workers, |rep| {
        let processes: Vec<_> = (0..samples)
            .map(|i| {
                gap_ref.sample(realization_seed(
                    realization_seed(cfg.seed.wrapping_add(1), rep as u64),
                    i as u64,
                ))
            })
            .collect();
        stats::exponential_gap_gof(&processes, gap_ref.intensity())
            .map(|r| r.p_value.unwrap_or(0.0))
    })
    .into_iter()
    .collect::<hieranderson::Result<_>>()
    .map_err(runtime)?;

    exp.out
        .write_csv(
            "selftest.csv",
            &["test", "repetition", "p_value"],
            count_ps
                .iter()
                .enumerate()
                .map(|(i, &p)| vec!["count".to_string(), i.to_string(), fmt(p)])
                .chain(
                    gap_ps
                        .iter()
                        .enumerate()
                        .map(|(i, &p)| vec!["gap".to_string(), i.to_string(), fmt(p)]),
                ),
        )
        .map_err(CliError::Runtime)?;

    let count_calibration = rates("chi_square_poisson_counts", &count_ps);
    let gap_calibration = rates("ks_exponential_gaps", &gap_ps);
    let overall = verdict_label(count_calibration.pass && gap_calibration.pass).to_string();
    exp.out
        .write_json(
            "summary.json",
            &SelftestSummary {
                count_calibration,
                gap_calibration,
                overall,
            },
        )
        .map_err(CliError::Runtime)?;
    exp.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linspace_endpoints() {
        let g = linspace(-1.0, 1.0, 5);
        assert_eq!(g.len(), 5);
        assert_eq!(g[0], -1.0);
        assert_eq!(g[4], 1.0);
    }

    #[test]
    fn truncation_level_floor() {
        assert_eq!(truncation_level(0.5, 9), 4);
        assert_eq!(truncation_level(0.75, 16), 12);
    }
}
