//! Deterministic Monte Carlo driving.
//!
//! Realization `i` of an experiment gets the seed `realization_seed(base, i)`
//! from a splittable counter scheme, and ensemble maps always collect results
//! in realization order. Output therefore depends only on `(base seed,
//! realization count)` and never on the worker count or scheduling.
//!
//! With the `parallel` feature (on by default) the maps run on a rayon pool;
//! without it, or with `workers = Some(1)`, they run sequentially on the
//! calling thread.

use crate::error::{Error, Result};
use crate::laplacian::CouplingSequence;
use crate::operator::{self, SpectrumSample};
use crate::potential::PotentialModel;
use crate::HierarchyGeometry;

/// Seed for realization `index` under `base`: one step of the splitmix64
/// output function applied to the counter stream.
pub fn realization_seed(base: u64, index: u64) -> u64 {
    let mut z = base.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Map `f` over realization indices `0..count`, sequentially.
pub fn map_realizations_sequential<T, F>(count: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..count).map(f).collect()
}

/// Map `f` over realization indices `0..count`, preserving index order.
///
/// `workers = None` uses the default rayon pool, `Some(1)` forces the
/// sequential path, `Some(w)` builds a dedicated `w`-thread pool.
#[cfg(feature = "parallel")]
pub fn map_realizations<T, F>(count: usize, workers: Option<usize>, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    match workers {
        Some(0) | Some(1) => map_realizations_sequential(count, f),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .expect("worker pool");
            pool.install(|| (0..count).into_par_iter().map(f).collect())
        }
        None => (0..count).into_par_iter().map(f).collect(),
    }
}

/// Sequential fallback used when the `parallel` feature is disabled.
#[cfg(not(feature = "parallel"))]
pub fn map_realizations<T, F>(count: usize, _workers: Option<usize>, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    map_realizations_sequential(count, f)
}

/// Ensemble of spectra of `H = Σ_{s≤r} p_s E_s + V` over independent
/// potential realizations, in realization order.
#[allow(clippy::too_many_arguments)]
pub fn spectra(
    model: &PotentialModel,
    couplings: &CouplingSequence,
    geom: &HierarchyGeometry,
    k: u32,
    r: u32,
    realizations: usize,
    base_seed: u64,
    workers: Option<usize>,
) -> Result<Vec<SpectrumSample>> {
    let results = map_realizations(realizations, workers, |i| {
        let seed = realization_seed(base_seed, i as u64);
        let potential = model.sample(k, geom, seed)?;
        let h = operator::assemble_hamiltonian(couplings, k, r, &potential, geom)?;
        let mut s = h.eigenvalues()?;
        s.seed = Some(seed);
        Ok::<_, Error>(s)
    });
    results.into_iter().collect()
}

/// Ensemble of per-block spectra of the truncated operator, one
/// `Vec<SpectrumSample>` (block order) per realization.
#[allow(clippy::too_many_arguments)]
pub fn block_spectra(
    model: &PotentialModel,
    couplings: &CouplingSequence,
    geom: &HierarchyGeometry,
    k: u32,
    r: u32,
    realizations: usize,
    base_seed: u64,
    workers: Option<usize>,
) -> Result<Vec<Vec<SpectrumSample>>> {
    let results = map_realizations(realizations, workers, |i| {
        let seed = realization_seed(base_seed, i as u64);
        let potential = model.sample(k, geom, seed)?;
        let mut blocks = operator::block_spectra(couplings, k, r, &potential, geom)?;
        for b in &mut blocks {
            b.seed = Some(seed);
        }
        Ok::<_, Error>(blocks)
    });
    results.into_iter().collect()
}
