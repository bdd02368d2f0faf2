//! Numerical laboratory for the hierarchical Anderson model with a
//! non-homogeneous random potential.
//!
//! The operator under study is `H = Δ + V` on the finite hierarchical ball
//! `B_k = {0, …, n^k − 1}`, where `Δ = Σ_r p_r E_r` is the hierarchical
//! Laplacian built from ball-averaging projections `E_r` and `V` is a
//! diagonal of independent (not necessarily identically distributed) random
//! variables. The crate provides:
//!
//! * index arithmetic for the ultrametric lattice ([`hierarchy`]),
//! * coupling sequences, spectral dimension and the dense Laplacian with an
//!   exact spectral oracle ([`laplacian`]),
//! * scaled density families, their smoothing bounds `a_x` and the
//!   normalizers `A_k`, `A_{k,j}` ([`potential`]),
//! * assembly and diagonalization of full and truncated Hamiltonians
//!   ([`operator`]),
//! * counting measures, rescaled local point processes and trace statistics
//!   ([`measures`]),
//! * statistical verdicts: Poisson goodness of fit, superposition condition
//!   sums, negligibility reports and trace-variance decay ([`stats`]),
//! * analytic reference constructions for calibration ([`mod@reference`]),
//! * deterministic, optionally parallel Monte Carlo driving ([`ensemble`]).
//!
//! Everything is deterministic given a seed: ensembles derive one seed per
//! realization and per-site generators from it, so results do not depend on
//! the worker count.

// parameter checks use negated comparisons (`!(x > 0.0)`) so NaN inputs are
// rejected along with out-of-range ones
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ensemble;
pub mod error;
pub mod hierarchy;
pub mod laplacian;
pub mod measures;
pub mod numeric;
pub mod operator;
pub mod potential;
pub mod reference;
pub mod stats;

pub use error::{Error, Result};
pub use hierarchy::{Ball, HierarchyGeometry};
pub use laplacian::{CouplingSequence, SpectralDimensionSpec};
pub use measures::RescaledProcess;
pub use operator::{HamiltonianInstance, SpectrumSample};
pub use potential::{BaseDensity, Normalizers, PotentialModel};
