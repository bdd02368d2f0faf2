//! Independent, non-identically-distributed site potentials.
//!
//! Site `x` carries the scaled density `ρ_x(v) = ρ_base(v/s_x)/s_x` with
//! `s_x = (1+x)^(−γ)`, `γ > −1`. The central quantity is the per-site bound
//!
//! ```text
//! a_x  ≥  sup_{t>0} sup_s ∫ ρ_x(v) · t/((v−s)² + t²) dv ,
//! ```
//!
//! the supremum of the Cauchy-kernel smoothing of the density, which equals
//! `π·‖ρ_x‖_∞`. For the Cauchy base the smoothing has the closed form
//! `1/(s_x + t)` and the bound `a_x = (1+x)^γ` is tight; for the Gaussian
//! base the smoothing is computed by quadrature and the bound carries the
//! peak factor `√(π/2)`. Partial sums of `a_x` over a volume and over its
//! blocks give the normalizers `A_k` and `A_{k,j}` used to rescale spectra.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Cauchy, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::hierarchy::HierarchyGeometry;
use crate::numeric::{self, kahan_sum};

const SQRT_TWO_PI: f64 = 2.506_628_274_631_000_5;

/// Base law of the potential before site scaling. Both choices have a
/// continuous, strictly positive, bounded density on the whole line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaseDensity {
    Cauchy,
    Gaussian,
}

impl BaseDensity {
    fn density(&self, w: f64) -> f64 {
        match self {
            BaseDensity::Cauchy => 1.0 / (std::f64::consts::PI * (1.0 + w * w)),
            BaseDensity::Gaussian => (-0.5 * w * w).exp() / SQRT_TWO_PI,
        }
    }

    fn peak(&self) -> f64 {
        self.density(0.0)
    }
}

impl std::str::FromStr for BaseDensity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cauchy" => Ok(BaseDensity::Cauchy),
            "gaussian" => Ok(BaseDensity::Gaussian),
            other => Err(Error::InvalidParameter(format!(
                "unknown base density '{other}' (expected cauchy or gaussian)"
            ))),
        }
    }
}

/// Scaled density family `ρ_x(v) = ρ_base(v/s_x)/s_x`, `s_x = (1+x)^(−γ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PotentialModel {
    base: BaseDensity,
    gamma: f64,
}

impl PotentialModel {
    /// Requires `γ > −1`: otherwise the bound mass `A_k` stays bounded and
    /// the rescaling degenerates.
    pub fn new(base: BaseDensity, gamma: f64) -> Result<Self> {
        if !(gamma > -1.0) {
            return Err(Error::InvalidParameter(format!(
                "scaling exponent must exceed −1, got {gamma}"
            )));
        }
        Ok(Self { base, gamma })
    }

    pub fn base(&self) -> BaseDensity {
        self.base
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Site scale `s_x = (1+x)^(−γ)`.
    pub fn site_scale(&self, x: usize) -> f64 {
        (1.0 + x as f64).powf(-self.gamma)
    }

    /// Per-site bound `a_x = π·‖ρ_x‖_∞ = sup over Cauchy smoothings of ρ_x`.
    ///
    /// Cauchy base: exactly `(1+x)^γ`. Gaussian base: `√(π/2)·(1+x)^γ`.
    pub fn site_bound(&self, x: usize) -> f64 {
        std::f64::consts::PI * self.base.peak() / self.site_scale(x)
    }

    /// Density `ρ_x(v)`; strictly positive everywhere.
    pub fn density(&self, x: usize, v: f64) -> f64 {
        let s = self.site_scale(x);
        self.base.density(v / s) / s
    }

    /// `P[V_x ∈ [a, b]]` from the closed-form distribution function.
    pub fn interval_probability(&self, x: usize, a: f64, b: f64) -> f64 {
        if b < a {
            return 0.0;
        }
        (self.cdf(x, b) - self.cdf(x, a)).max(0.0)
    }

    fn cdf(&self, x: usize, v: f64) -> f64 {
        let s = self.site_scale(x);
        match self.base {
            BaseDensity::Cauchy => 0.5 + (v / s).atan() / std::f64::consts::PI,
            BaseDensity::Gaussian => Normal::new(0.0, s).expect("positive scale").cdf(v),
        }
    }

    /// The Cauchy-kernel smoothing `∫ ρ_x(v) · t/((v−s)² + t²) dv` evaluated
    /// by adaptive quadrature. This is the generic route; the Cauchy base
    /// also has the closed form checked against it in tests.
    pub fn kernel_integral(&self, x: usize, s: f64, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "kernel width must be positive, got {t}"
            )));
        }
        numeric::integrate_line(
            |v| self.density(x, v) * t / ((v - s) * (v - s) + t * t),
            1e-10,
        )
    }

    /// `sup_s ∫ ρ_x(v) · t/((v−s)² + t²) dv` for a fixed width `t > 0`.
    ///
    /// Cauchy base: the convolution of two Cauchy kernels gives exactly
    /// `1/(s_x + t)`, peaked at `s = 0`. Gaussian base: quadrature plus a
    /// golden-section search over the center. Never exceeds `site_bound(x)`.
    pub fn kernel_bound(&self, x: usize, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "kernel width must be positive, got {t}"
            )));
        }
        let scale = self.site_scale(x);
        match self.base {
            BaseDensity::Cauchy => Ok(1.0 / (scale + t)),
            BaseDensity::Gaussian => {
                // the smoothed density is even and unimodal in the center,
                // so scanning s ≥ 0 suffices
                let hi = 8.0 * (scale + t);
                let eval = |s: f64| self.kernel_integral(x, s, t).unwrap_or(0.0);
                let (_, peak) = numeric::golden_max(eval, 0.0, hi, 1e-7 * (scale + t));
                Ok(peak.max(eval(0.0)))
            }
        }
    }

    /// One realization of the potential over `B_k`.
    ///
    /// Site `x` draws `W_x` from the base law using a generator derived from
    /// `(seed, x)` alone, so enlarging the volume extends the realization
    /// without changing existing sites. `V_x = s_x · W_x`.
    pub fn sample(&self, k: u32, geom: &HierarchyGeometry, seed: u64) -> Result<Vec<f64>> {
        let dim = geom.volume(k)?;
        let cauchy: Cauchy<f64> = Cauchy::new(0.0, 1.0).expect("unit cauchy");
        let mut values = Vec::with_capacity(dim);
        for x in 0..dim {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(x as u64);
            let w: f64 = match self.base {
                BaseDensity::Cauchy => cauchy.sample(&mut rng),
                BaseDensity::Gaussian => StandardNormal.sample(&mut rng),
            };
            values.push(self.site_scale(x) * w);
        }
        Ok(values)
    }

    /// Rescaling normalizer `A_k = Σ_{x ∈ B_k} a_x` (compensated, site order).
    pub fn normalizer(&self, k: u32, geom: &HierarchyGeometry) -> Result<f64> {
        let dim = geom.volume(k)?;
        Ok(kahan_sum((0..dim).map(|x| self.site_bound(x))))
    }

    /// Normalized density sum `(1/A_k) Σ_{x ∈ B_k} ρ_x(e)`: the finite-volume
    /// intensity of the expected counting measure at energy `e`.
    pub fn intensity(&self, e: f64, k: u32, geom: &HierarchyGeometry) -> Result<f64> {
        let dim = geom.volume(k)?;
        let mass = self.normalizer(k, geom)?;
        Ok(kahan_sum((0..dim).map(|x| self.density(x, e))) / mass)
    }
}

/// Partial sums of the per-site bounds over a volume and over its blocks:
/// `A_k` and the `A_{k,j}` for the radius-`r` partition of `B_k`.
///
/// The total is formed from the block sums, so `A_k = Σ_j A_{k,j}` holds
/// exactly, not just up to rounding.
#[derive(Debug, Clone, Serialize)]
pub struct Normalizers {
    k: u32,
    r: u32,
    total: f64,
    per_block: Vec<f64>,
}

impl Normalizers {
    pub fn compute(
        model: &PotentialModel,
        k: u32,
        r: u32,
        geom: &HierarchyGeometry,
    ) -> Result<Self> {
        let blocks = geom.partition(k, r)?;
        let per_block: Vec<f64> = blocks
            .iter()
            .map(|b| kahan_sum(b.members().map(|x| model.site_bound(x))))
            .collect();
        let total = kahan_sum(per_block.iter().copied());
        Ok(Self {
            k,
            r,
            total,
            per_block,
        })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn r(&self) -> u32 {
        self.r
    }

    /// `A_k`.
    pub fn total(&self) -> f64 {
        self.total
    }

    /// `A_{k,j}` in block order.
    pub fn per_block(&self) -> &[f64] {
        &self.per_block
    }

    /// `A_{k,j}/A_k`.
    pub fn block_share(&self, j: usize) -> f64 {
        self.per_block[j] / self.total
    }

    /// `sup_j A_{k,j}/A_k`.
    pub fn max_block_share(&self) -> f64 {
        self.per_block
            .iter()
            .fold(0.0f64, |acc, &a| acc.max(a / self.total))
    }

    /// `Σ_j (A_{k,j}/A_k)²`.
    pub fn squared_share_sum(&self) -> f64 {
        kahan_sum(self.per_block.iter().map(|&a| {
            let share = a / self.total;
            share * share
        }))
    }
}
