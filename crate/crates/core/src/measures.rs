//! Counting measures, the integrated density of states, rescaled local
//! point processes and trace statistics built from spectra.
//!
//! Intervals are closed; boundary hits (probability zero under continuous
//! potentials) count as inside. All aggregations run in realization order
//! with compensated sums, so ensembles reduce to the same bits regardless
//! of worker count.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::{self, kahan_sum};
use crate::operator::SpectrumSample;

/// Eigenvalues magnified around a center energy: the points
/// `A_k (e_i − e)` that fall inside the symmetric window `[−w, w]`.
#[derive(Debug, Clone, Serialize)]
pub struct RescaledProcess {
    points: Vec<f64>,
    center: f64,
    normalizer: f64,
    half_width: f64,
}

impl RescaledProcess {
    pub(crate) fn from_parts(
        points: Vec<f64>,
        center: f64,
        normalizer: f64,
        half_width: f64,
    ) -> Self {
        Self {
            points,
            center,
            normalizer,
            half_width,
        }
    }

    /// Rescaled coordinates, ascending.
    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Spacings between consecutive points inside the window.
    pub fn gaps(&self) -> Vec<f64> {
        self.points.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// Window length `|[−w, w]| = 2w`.
    pub fn window_length(&self) -> f64 {
        2.0 * self.half_width
    }
}

fn validate_interval(interval: (f64, f64)) -> Result<()> {
    if interval.0 > interval.1 {
        return Err(Error::InvalidParameter(format!(
            "interval endpoints out of order: [{}, {}]",
            interval.0, interval.1
        )));
    }
    Ok(())
}

fn count_in(sorted: &[f64], a: f64, b: f64) -> usize {
    let lo = sorted.partition_point(|&e| e < a);
    let hi = sorted.partition_point(|&e| e <= b);
    hi - lo
}

/// Normalized eigenvalue count `#{e_i ∈ [a, b]}/A_k`.
pub fn counting_measure(
    sample: &SpectrumSample,
    normalizer: f64,
    interval: (f64, f64),
) -> Result<f64> {
    validate_interval(interval)?;
    if !(normalizer > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "normalizer must be positive, got {normalizer}"
        )));
    }
    Ok(count_in(&sample.eigenvalues, interval.0, interval.1) as f64 / normalizer)
}

/// Normalized cumulative counts `e ↦ #{e_i ≤ e}/A_k` over a sorted grid.
pub fn empirical_ids(
    sample: &SpectrumSample,
    normalizer: f64,
    grid: &[f64],
) -> Result<Vec<(f64, f64)>> {
    if !(normalizer > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "normalizer must be positive, got {normalizer}"
        )));
    }
    if grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidParameter("grid must be sorted".into()));
    }
    Ok(grid
        .iter()
        .map(|&e| {
            let count = sample.eigenvalues.partition_point(|&x| x <= e);
            (e, count as f64 / normalizer)
        })
        .collect())
}

/// Magnify the spectrum around `center`: keep `A_k (e_i − center)` whenever
/// it lies in `[−half_width, half_width]`.
pub fn rescale_spectrum(
    sample: &SpectrumSample,
    center: f64,
    normalizer: f64,
    half_width: f64,
) -> Result<RescaledProcess> {
    if !(normalizer > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "normalizer must be positive, got {normalizer}"
        )));
    }
    if !(half_width >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "window half-width must be nonnegative, got {half_width}"
        )));
    }
    let points: Vec<f64> = sample
        .eigenvalues
        .iter()
        .map(|&e| normalizer * (e - center))
        .filter(|&t| (-half_width..=half_width).contains(&t))
        .collect();
    Ok(RescaledProcess {
        points,
        center,
        normalizer,
        half_width,
    })
}

/// Per-block counts of rescaled eigenvalues inside an interval.
#[derive(Debug, Clone, Serialize)]
pub struct CountRecord {
    per_block: Vec<u64>,
}

impl CountRecord {
    pub fn per_block(&self) -> &[u64] {
        &self.per_block
    }

    pub fn total(&self) -> u64 {
        self.per_block.iter().sum()
    }

    pub fn blocks(&self) -> usize {
        self.per_block.len()
    }
}

/// Count rescaled eigenvalues of each block spectrum inside `interval`
/// (rescaled coordinates). The totals add up to the count of the union
/// spectrum by construction.
pub fn block_counts(
    blocks: &[SpectrumSample],
    center: f64,
    normalizer: f64,
    interval: (f64, f64),
) -> Result<CountRecord> {
    validate_interval(interval)?;
    if !(normalizer > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "normalizer must be positive, got {normalizer}"
        )));
    }
    let per_block = blocks
        .iter()
        .map(|b| {
            b.eigenvalues
                .iter()
                .map(|&e| normalizer * (e - center))
                .filter(|t| (interval.0..=interval.1).contains(t))
                .count() as u64
        })
        .collect();
    Ok(CountRecord { per_block })
}

/// Resolvent trace `Σ_i 1/(e_i − z)` of one spectrum, `Im z > 0`.
///
/// Herglotz: the imaginary part is strictly positive.
pub fn trace_statistic(sample: &SpectrumSample, z: Complex64) -> Result<Complex64> {
    if !(z.im > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "trace statistic needs Im z > 0, got {z}"
        )));
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for &e in &sample.eigenvalues {
        acc += Complex64::new(1.0, 0.0) / (Complex64::new(e, 0.0) - z);
    }
    Ok(acc)
}

/// Density estimate of the expected spectral measure.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EtaEstimate {
    /// `(1/π) · mean_ω (1/A_k) Im Σ_i 1/(e_i − e − iε)`.
    pub value: f64,
    /// Standard error of the ensemble mean.
    pub std_error: f64,
    pub epsilon: f64,
    pub realizations: usize,
}

/// Default resolvent smoothing width at normalizer `A_k`: a few times the
/// mean local eigenvalue spacing, trading bias for variance.
pub fn default_smoothing(normalizer: f64) -> f64 {
    4.0 / normalizer
}

/// Estimate the density `η(e)` of the expected spectral measure from an
/// ensemble of spectra via the smoothed trace at `z = e + iε`.
pub fn eta_estimate(
    samples: &[SpectrumSample],
    e: f64,
    epsilon: f64,
    normalizer: f64,
) -> Result<EtaEstimate> {
    if samples.is_empty() {
        return Err(Error::InsufficientData(
            "density estimate needs at least one realization".into(),
        ));
    }
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "smoothing width must be positive, got {epsilon}"
        )));
    }
    if !(normalizer > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "normalizer must be positive, got {normalizer}"
        )));
    }
    let z = Complex64::new(e, epsilon);
    let scale = 1.0 / (std::f64::consts::PI * normalizer);
    let values: Vec<f64> = samples
        .iter()
        .map(|s| Ok(scale * trace_statistic(s, z)?.im))
        .collect::<Result<_>>()?;
    let mean = kahan_sum(values.iter().copied()) / values.len() as f64;
    Ok(EtaEstimate {
        value: mean,
        std_error: numeric::standard_error(&values),
        epsilon,
        realizations: values.len(),
    })
}
