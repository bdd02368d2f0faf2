//! Analytic reference constructions used to calibrate the statistical
//! machinery: the purely random operator (whose spectrum is the potential
//! itself, no matrices involved) and a textbook Poisson process sampler.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, Uniform};

use crate::error::{Error, Result};
use crate::hierarchy::HierarchyGeometry;
use crate::measures::{self, RescaledProcess};
use crate::numeric::kahan_sum;
use crate::operator::SpectrumSample;
use crate::potential::PotentialModel;

/// Spectrum of the purely random operator `H = V` on `B_k`: the sorted
/// potential values, built without any matrix work.
pub fn diagonal_spectrum(
    model: &PotentialModel,
    k: u32,
    geom: &HierarchyGeometry,
    seed: u64,
) -> Result<SpectrumSample> {
    let mut eigenvalues = model.sample(k, geom, seed)?;
    eigenvalues.sort_by(f64::total_cmp);
    Ok(SpectrumSample {
        eigenvalues,
        k,
        r: 0,
        seed: Some(seed),
    })
}

/// Rescaled local process of the purely random operator around energy `e`,
/// normalized by `A_k`. Agrees bit for bit with assembling the diagonal
/// Hamiltonian and rescaling its spectrum under the same seed.
pub fn pure_random_points(
    model: &PotentialModel,
    k: u32,
    e: f64,
    half_width: f64,
    geom: &HierarchyGeometry,
    seed: u64,
) -> Result<RescaledProcess> {
    let spectrum = diagonal_spectrum(model, k, geom, seed)?;
    let normalizer = model.normalizer(k, geom)?;
    measures::rescale_spectrum(&spectrum, e, normalizer, half_width)
}

/// Homogeneous Poisson point process restricted to a symmetric window;
/// the calibration target for the superposition limit theorems.
#[derive(Debug, Clone, Copy)]
pub struct PoissonRef {
    intensity: f64,
    half_width: f64,
}

impl PoissonRef {
    pub fn new(intensity: f64, half_width: f64) -> Result<Self> {
        if !(intensity > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "intensity must be positive, got {intensity}"
            )));
        }
        if !(half_width > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "window half-width must be positive, got {half_width}"
            )));
        }
        Ok(Self {
            intensity,
            half_width,
        })
    }

    pub fn intensity(&self) -> f64 {
        self.intensity
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// Mean point count per window, `intensity · 2w`.
    pub fn mean_count(&self) -> f64 {
        self.intensity * 2.0 * self.half_width
    }

    /// One window: `N ~ Poisson(intensity · 2w)` points placed uniformly,
    /// sorted.
    pub fn sample(&self, seed: u64) -> RescaledProcess {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = Poisson::new(self.mean_count())
            .expect("positive mean")
            .sample(&mut rng) as usize;
        let spread = Uniform::new_inclusive(-self.half_width, self.half_width)
            .expect("valid window");
        let mut points: Vec<f64> = (0..n).map(|_| spread.sample(&mut rng)).collect();
        points.sort_by(f64::total_cmp);
        RescaledProcess::from_parts(points, 0.0, 1.0, self.half_width)
    }
}

/// Law-of-large-numbers probe for the purely random model: per volume
/// level, the deviation `|μ̂_k(I) − E[μ_k(I)]|` between a single-realization
/// counting measure and its exact expectation
/// `(1/A_k) Σ_x P[V_x ∈ I]`.
pub fn counting_measure_deviation(
    model: &PotentialModel,
    interval: (f64, f64),
    k_list: &[u32],
    geom: &HierarchyGeometry,
    seed: u64,
) -> Result<Vec<(u32, f64)>> {
    k_list
        .iter()
        .map(|&k| {
            let normalizer = model.normalizer(k, geom)?;
            let spectrum = diagonal_spectrum(model, k, geom, seed)?;
            let observed = measures::counting_measure(&spectrum, normalizer, interval)?;
            let dim = geom.volume(k)?;
            let expected = kahan_sum(
                (0..dim).map(|x| model.interval_probability(x, interval.0, interval.1)),
            ) / normalizer;
            Ok((k, (observed - expected).abs()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::realization_seed;
    use crate::laplacian::{CouplingSequence, SpectralDimensionSpec};
    use crate::numeric::mean_variance;
    use crate::operator::assemble_hamiltonian;
    use crate::potential::BaseDensity;
    use approx::assert_relative_eq;

    fn geom() -> HierarchyGeometry {
        HierarchyGeometry::new(2).unwrap()
    }

    fn cauchy(gamma: f64) -> PotentialModel {
        PotentialModel::new(BaseDensity::Cauchy, gamma).unwrap()
    }

    #[test]
    fn matches_operator_route_bit_for_bit() {
        let g = geom();
        let m = cauchy(0.7);
        let c = CouplingSequence::geometric(
            &SpectralDimensionSpec::new(0.5, 2).unwrap(),
            6,
        )
        .unwrap();
        for seed in [1u64, 99, 4242] {
            let direct = pure_random_points(&m, 6, 0.25, 2.0, &g, seed).unwrap();
            let v = m.sample(6, &g, seed).unwrap();
            let h = assemble_hamiltonian(&c, 6, 0, &v, &g).unwrap();
            let s = h.eigenvalues().unwrap();
            let a_k = m.normalizer(6, &g).unwrap();
            let via_operator = measures::rescale_spectrum(&s, 0.25, a_k, 2.0).unwrap();
            assert_eq!(direct.points(), via_operator.points());
        }
    }

    #[test]
    fn poisson_sampler_moments() {
        let p = PoissonRef::new(1.0 / std::f64::consts::PI, 1.0).unwrap();
        let runs = 10_000;
        let counts: Vec<f64> = (0..runs)
            .map(|i| p.sample(realization_seed(5, i as u64)).len() as f64)
            .collect();
        let (mean, var) = mean_variance(&counts);
        let target = p.mean_count();
        let se = (target / runs as f64).sqrt();
        assert!(
            (mean - target).abs() < 3.0 * se,
            "mean {mean} vs {target} (se {se})"
        );
        let dispersion = var / mean;
        assert!((dispersion - 1.0).abs() < 0.05, "dispersion {dispersion}");
    }

    #[test]
    fn poisson_sampler_is_sorted_and_windowed() {
        let p = PoissonRef::new(2.0, 1.5).unwrap();
        for seed in 0..50u64 {
            let s = p.sample(seed);
            assert!(s.points().windows(2).all(|w| w[0] <= w[1]));
            assert!(s.points().iter().all(|&x| x.abs() <= 1.5));
        }
        assert!(PoissonRef::new(0.0, 1.0).is_err());
        assert!(PoissonRef::new(1.0, 0.0).is_err());
    }

    #[test]
    fn deviation_vanishes_on_empty_interval() {
        let g = geom();
        let m = cauchy(0.0);
        // an interval of one point has probability zero and count zero a.s.
        let rows = counting_measure_deviation(&m, (2.0, 2.0), &[4, 6], &g, 11).unwrap();
        for (_, gap) in rows {
            assert!(gap < 1e-12);
        }
    }

    #[test]
    fn half_line_expectation_is_exact_for_unit_cauchy() {
        // γ=0, I=[−1,1]: P[V ∈ I] = (2/π)·arctan(1) = 1/2 exactly
        let g = geom();
        let m = cauchy(0.0);
        let dim = g.volume(10).unwrap() as f64;
        let expected = (0..g.volume(10).unwrap())
            .map(|x| m.interval_probability(x, -1.0, 1.0))
            .sum::<f64>()
            / dim;
        assert_relative_eq!(expected, 0.5, epsilon = 1e-12);
    }
}
