//! Coupling sequences `p_r`, their partial sums `λ_r`, the spectral
//! dimension, and the finite-volume hierarchical Laplacian
//! `Δ_k = Σ_{s=1}^k p_s E_s` together with its exact spectrum.
//!
//! On `ℓ²(B_k)` the averaging projections are nested, so `Δ_k` has eigenvalue
//! `λ_s` with multiplicity `(n−1)·n^(k−s−1)` for `s < k` and the simple
//! eigenvalue `λ_k` on constants. For the geometric coupling family
//! `p_r = (1−ρ)ρ^(r−1)` with `ρ = n^(−2/d)` the tail is `1 − λ_r = ρ^r`
//! exactly, which realizes spectral dimension `d` with no correction term.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hierarchy::HierarchyGeometry;
use crate::numeric;

/// Target spectral dimension of a geometric coupling family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralDimensionSpec {
    d: f64,
    branching: u32,
}

impl SpectralDimensionSpec {
    /// Any `d > 0` is accepted; `(0, 1)` is the regime the statistical
    /// experiments are designed for.
    pub fn new(d: f64, branching: u32) -> Result<Self> {
        if !(d > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "spectral dimension must be positive, got {d}"
            )));
        }
        if branching < 2 {
            return Err(Error::InvalidParameter(format!(
                "branching factor must be at least 2, got {branching}"
            )));
        }
        Ok(Self { d, branching })
    }

    pub fn dimension(&self) -> f64 {
        self.d
    }

    pub fn branching(&self) -> u32 {
        self.branching
    }

    /// Geometric ratio `ρ = n^(−2/d)`.
    pub fn ratio(&self) -> f64 {
        (self.branching as f64).powf(-2.0 / self.d)
    }
}

/// Coupling weights `p_r` with partial sums `λ_r` and tails `1 − λ_r`.
///
/// `p_0 = 0` always; for the geometric family the tail is stored in its
/// analytic form `ρ^r`, for explicit weight lists it is the remainder
/// `1 − λ_r` of the unit total mass.
#[derive(Debug, Clone, Serialize)]
pub struct CouplingSequence {
    weights: Vec<f64>,
    partial: Vec<f64>,
    tail: Vec<f64>,
}

impl CouplingSequence {
    /// Geometric family `p_r = (1−ρ)ρ^(r−1)`, `ρ = n^(−2/d)`, through
    /// `max_level ≥ 1`.
    pub fn geometric(spec: &SpectralDimensionSpec, max_level: u32) -> Result<Self> {
        if max_level < 1 {
            return Err(Error::InvalidParameter(
                "need at least one coupling level".into(),
            ));
        }
        let rho = spec.ratio();
        let mut weights = vec![0.0];
        let mut partial = vec![0.0];
        let mut tail = vec![1.0];
        for r in 1..=max_level {
            weights.push((1.0 - rho) * rho.powi(r as i32 - 1));
            let t = rho.powi(r as i32);
            tail.push(t);
            partial.push(1.0 - t);
        }
        Ok(Self {
            weights,
            partial,
            tail,
        })
    }

    /// Explicit nonnegative weights for levels `1, 2, …` in order. The total
    /// mass may not exceed 1; any shortfall is kept as the tail beyond the
    /// last level.
    pub fn from_weights(levels: Vec<f64>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InvalidParameter(
                "need at least one coupling level".into(),
            ));
        }
        let mut weights = vec![0.0];
        let mut partial = vec![0.0];
        let mut tail = vec![1.0];
        let mut acc = numeric::KahanSum::new();
        for (i, &p) in levels.iter().enumerate() {
            if !(p >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "coupling weight p_{} = {p} is not nonnegative",
                    i + 1
                )));
            }
            acc.add(p);
            let lambda = acc.value();
            if lambda > 1.0 + 1e-12 {
                return Err(Error::InvalidParameter(format!(
                    "partial sum λ_{} = {lambda} exceeds the unit total mass",
                    i + 1
                )));
            }
            weights.push(p);
            partial.push(lambda.min(1.0));
            tail.push((1.0 - lambda).max(0.0));
        }
        Ok(Self {
            weights,
            partial,
            tail,
        })
    }

    /// Largest level the sequence stores.
    pub fn max_level(&self) -> u32 {
        (self.weights.len() - 1) as u32
    }

    /// Coupling weight `p_r`.
    pub fn weight(&self, r: u32) -> f64 {
        self.weights[r as usize]
    }

    /// Partial sum `λ_r = Σ_{s≤r} p_s`.
    pub fn cumulative(&self, r: u32) -> f64 {
        self.partial[r as usize]
    }

    /// Tail mass `1 − λ_r`.
    pub fn tail(&self, r: u32) -> f64 {
        self.tail[r as usize]
    }

    /// Spectral dimension recovered from the tail decay: the least-squares
    /// slope of `ln(1 − λ_r)` against `r`, mapped through `2/d = −slope/ln n`.
    ///
    /// Returns `f64::INFINITY` when the tail does not decay. Errors if any
    /// stored tail vanishes (the logarithm is singular there) or when fewer
    /// than three levels are available.
    pub fn estimate_spectral_dimension(&self, branching: u32) -> Result<f64> {
        if self.max_level() < 2 {
            return Err(Error::InsufficientData(
                "need at least three levels to estimate a tail slope".into(),
            ));
        }
        if let Some(r) = self.tail.iter().position(|&t| t <= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "λ_{r} = 1 at a finite level; tail slope is singular"
            )));
        }
        // level 0 carries no information (p_0 = 0 forces tail 1), so the
        // fit starts at r = 1
        let xs: Vec<f64> = (1..self.tail.len()).map(|r| r as f64).collect();
        let ys: Vec<f64> = self.tail[1..].iter().map(|&t| t.ln()).collect();
        let (slope, _) = numeric::linear_fit(&xs, &ys)?;
        if slope >= 0.0 {
            return Ok(f64::INFINITY);
        }
        Ok(-2.0 * (branching as f64).ln() / slope)
    }
}

/// Replace each block of `n^r` consecutive entries by its arithmetic mean:
/// the averaging projection onto functions constant on radius-`r` balls.
pub fn apply_averaging(v: &[f64], r: u32, geom: &HierarchyGeometry) -> Result<Vec<f64>> {
    let n = geom.branching() as usize;
    let mut probe = v.len();
    let mut k = 0u32;
    while probe > 1 && probe.is_multiple_of(n) {
        probe /= n;
        k += 1;
    }
    if probe != 1 || v.is_empty() {
        return Err(Error::DimensionMismatch(format!(
            "vector length {} is not a power of the branching factor {n}",
            v.len()
        )));
    }
    if r > k {
        return Err(Error::InvalidParameter(format!(
            "averaging level {r} exceeds the volume level {k}"
        )));
    }
    let block = geom.volume(r)?;
    let mut out = Vec::with_capacity(v.len());
    for chunk in v.chunks_exact(block) {
        let mean = chunk.iter().sum::<f64>() / block as f64;
        out.extend(std::iter::repeat_n(mean, block));
    }
    Ok(out)
}

fn distance_coefficients(c: &CouplingSequence, r: u32, branching: u32) -> Vec<f64> {
    // coeff[d] = Σ_{s = max(d,1)}^{r} p_s n^{−s}: the matrix entry between
    // sites at hierarchical distance d
    let n = branching as f64;
    let mut coeff = vec![0.0; r as usize + 1];
    for d in 0..=r {
        let mut acc = 0.0;
        for s in d.max(1)..=r {
            acc += c.weight(s) * n.powi(-(s as i32));
        }
        coeff[d as usize] = acc;
    }
    coeff
}

/// Dense matrix of the level-`r` truncation `Σ_{s=1}^r p_s E_s` on `ℓ²(B_k)`.
///
/// Entry `(x, y)` is `Σ_{s ≥ max(d(x,y),1)}^{r} p_s n^(−s)`; every row sums
/// to `λ_r`. Requires couplings through level `r ≤ k`.
pub fn dense_laplacian_truncated(
    c: &CouplingSequence,
    k: u32,
    r: u32,
    geom: &HierarchyGeometry,
) -> Result<DMatrix<f64>> {
    if r > k {
        return Err(Error::InvalidParameter(format!(
            "truncation level {r} exceeds volume level {k}"
        )));
    }
    if r > c.max_level() {
        return Err(Error::InvalidParameter(format!(
            "couplings stop at level {}, need level {r}",
            c.max_level()
        )));
    }
    let dim = geom.volume(k)?;
    let coeff = distance_coefficients(c, r, geom.branching());
    let mut m = DMatrix::<f64>::zeros(dim, dim);
    for x in 0..dim {
        for y in 0..=x {
            let d = geom.distance(x, y);
            if d <= r {
                let v = coeff[d as usize];
                m[(x, y)] = v;
                m[(y, x)] = v;
            }
        }
    }
    Ok(m)
}

/// Dense matrix of the full finite-volume Laplacian `Δ_k` on `ℓ²(B_k)`.
pub fn dense_laplacian(
    c: &CouplingSequence,
    k: u32,
    geom: &HierarchyGeometry,
) -> Result<DMatrix<f64>> {
    dense_laplacian_truncated(c, k, k, geom)
}

/// Exact spectrum of `Δ_k`: eigenvalue `λ_s` with multiplicity
/// `(n−1)·n^(k−s−1)` for `s = 0, …, k−1`, plus the simple eigenvalue `λ_k`.
pub fn analytic_spectrum(
    c: &CouplingSequence,
    k: u32,
    geom: &HierarchyGeometry,
) -> Result<Vec<(f64, usize)>> {
    if k < 1 {
        return Err(Error::InvalidParameter("volume level must be ≥ 1".into()));
    }
    if k > c.max_level() {
        return Err(Error::InvalidParameter(format!(
            "couplings stop at level {}, need level {k}",
            c.max_level()
        )));
    }
    let n = geom.branching() as usize;
    let mut spectrum = Vec::with_capacity(k as usize + 1);
    for s in 0..k {
        let mult = (n - 1) * geom.volume(k - s - 1)?;
        spectrum.push((c.cumulative(s), mult));
    }
    spectrum.push((c.cumulative(k), 1));
    Ok(spectrum)
}

/// Assign each value of a sorted spectrum to the nearest of the given
/// centers and count cluster sizes. `None` if some value is farther than
/// `tol` from every center.
pub fn cluster_counts(sorted: &[f64], centers: &[f64], tol: f64) -> Option<Vec<usize>> {
    let mut counts = vec![0usize; centers.len()];
    for &e in sorted {
        let mut best = None;
        let mut best_gap = f64::INFINITY;
        for (i, &c) in centers.iter().enumerate() {
            let gap = (e - c).abs();
            if gap < best_gap {
                best_gap = gap;
                best = Some(i);
            }
        }
        match best {
            Some(i) if best_gap <= tol => counts[i] += 1,
            _ => return None,
        }
    }
    Some(counts)
}
