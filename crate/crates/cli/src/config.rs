//! Experiment configuration: defaults, JSON config files, command-line
//! overrides (flags win over the file), and validation with one actionable
//! message per violation.

use std::path::PathBuf;
use std::str::FromStr;

use clap::Args;
use serde::{Deserialize, Serialize};

use hieranderson::potential::BaseDensity;
use hieranderson::stats::feasible_theta;

/// Full experiment configuration. Fields marked `skip` (output directory,
/// worker count) are execution details, not experiment identity: they are
/// excluded from manifests so reruns with different parallelism produce
/// byte-identical outputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Branching factor of the hierarchical lattice.
    pub n: u32,
    /// Volume level: the experiment lives on `B_k` with `n^k` sites.
    pub k: u32,
    /// Volume levels for the sweep commands; derived from `k` when absent.
    pub k_list: Option<Vec<u32>>,
    /// Spectral dimension of the geometric coupling family.
    pub d: f64,
    /// Explicit coupling weights `p_1, p_2, …`; overrides `d` when present.
    pub couplings: Option<Vec<f64>>,
    /// Site-scaling exponent γ of the disorder, `γ > −1`.
    pub gamma: f64,
    /// Base density: `cauchy` or `gaussian`.
    pub base: String,
    /// Block exponent θ for `r_k = ⌊θk⌋`; derived from `(γ, d)` when absent.
    pub theta: Option<f64>,
    /// Center energy of the local statistics.
    pub energy: f64,
    /// Half-width of the rescaled observation window.
    pub half_width: f64,
    /// Counting interval in rescaled coordinates; defaults to the window.
    pub interval: Option<[f64; 2]>,
    /// Monte Carlo ensemble size.
    pub realizations: usize,
    /// Base seed of the splittable realization-seed schedule.
    pub seed: u64,
    /// Resolvent smoothing width for density estimates; default `4/A_k`.
    pub epsilon: Option<f64>,
    /// Imaginary part of `z` for trace statistics.
    pub z_imag: f64,
    /// Energy grid for the integrated density of states.
    pub grid_min: f64,
    pub grid_max: f64,
    pub grid_points: usize,
    /// Largest dense matrix dimension the runner will materialize.
    pub max_dim: usize,
    /// Self-test repetitions and per-repetition sample count.
    pub selftest_reps: usize,
    pub selftest_samples: usize,
    /// Experiment name; defaults to the subcommand name.
    pub name: Option<String>,
    #[serde(skip)]
    pub out_dir: PathBuf,
    #[serde(skip)]
    pub workers: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n: 2,
            k: 10,
            k_list: None,
            d: 0.5,
            couplings: None,
            gamma: 0.0,
            base: "cauchy".to_string(),
            theta: None,
            energy: 0.0,
            half_width: 1.0,
            interval: None,
            realizations: 500,
            seed: 42,
            epsilon: None,
            z_imag: 1.0,
            grid_min: -4.0,
            grid_max: 4.0,
            grid_points: 81,
            max_dim: 4096,
            selftest_reps: 200,
            selftest_samples: 2000,
            name: None,
            out_dir: PathBuf::from("out"),
            workers: None,
        }
    }
}

/// Command-line overrides; every flag is optional and wins over the config
/// file value.
#[derive(Debug, Clone, Args)]
pub struct Overrides {
    /// Branching factor of the hierarchical lattice
    #[arg(long, global = true)]
    pub n: Option<u32>,
    /// Volume level (the lattice has n^k sites)
    #[arg(long, global = true)]
    pub k: Option<u32>,
    /// Comma-separated volume levels for sweep commands
    #[arg(long, global = true, value_delimiter = ',')]
    pub k_list: Option<Vec<u32>>,
    /// Spectral dimension of the geometric coupling family
    #[arg(long, global = true)]
    pub d: Option<f64>,
    /// Explicit coupling weights p_1,p_2,… (overrides --d)
    #[arg(long, global = true, value_delimiter = ',')]
    pub couplings: Option<Vec<f64>>,
    /// Site-scaling exponent of the disorder (> -1)
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub gamma: Option<f64>,
    /// Base density: cauchy or gaussian
    #[arg(long, global = true)]
    pub base: Option<String>,
    /// Block exponent for the truncation level r_k = floor(theta*k)
    #[arg(long, global = true)]
    pub theta: Option<f64>,
    /// Center energy of the local statistics
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub energy: Option<f64>,
    /// Half-width of the rescaled observation window
    #[arg(long, global = true)]
    pub half_width: Option<f64>,
    /// Counting interval in rescaled coordinates: LO,HI
    #[arg(long, global = true, number_of_values = 2, value_delimiter = ',', allow_negative_numbers = true)]
    pub interval: Option<Vec<f64>>,
    /// Monte Carlo ensemble size
    #[arg(long, global = true)]
    pub realizations: Option<usize>,
    /// Base seed of the realization-seed schedule
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Resolvent smoothing width (default 4/A_k)
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
    /// Imaginary part of z for trace statistics
    #[arg(long, global = true)]
    pub z_imag: Option<f64>,
    /// Energy grid for the integrated density of states
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub grid_min: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub grid_max: Option<f64>,
    #[arg(long, global = true)]
    pub grid_points: Option<usize>,
    /// Largest dense matrix dimension the runner will materialize
    #[arg(long, global = true)]
    pub max_dim: Option<usize>,
    /// Self-test repetitions
    #[arg(long, global = true)]
    pub selftest_reps: Option<usize>,
    /// Self-test samples per repetition
    #[arg(long, global = true)]
    pub selftest_samples: Option<usize>,
    /// Experiment name (also the output subdirectory)
    #[arg(long, global = true)]
    pub name: Option<String>,
    /// Output directory root
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Worker threads for realization-level parallelism (1 = sequential)
    #[arg(long, global = true)]
    pub workers: Option<usize>,
}

impl ExperimentConfig {
    pub fn apply_overrides(&mut self, o: &Overrides) {
        macro_rules! take {
            ($($field:ident),*) => {
                $(if let Some(v) = &o.$field { self.$field = v.clone(); })*
            };
        }
        take!(n, k, d, gamma, base, energy, half_width, realizations, seed, z_imag,
              grid_min, grid_max, grid_points, max_dim, selftest_reps, selftest_samples);
        if let Some(v) = &o.k_list {
            self.k_list = Some(v.clone());
        }
        if let Some(v) = &o.couplings {
            self.couplings = Some(v.clone());
        }
        if let Some(v) = o.theta {
            self.theta = Some(v);
        }
        if let Some(v) = &o.interval {
            self.interval = Some([v[0], v[1]]);
        }
        if let Some(v) = o.epsilon {
            self.epsilon = Some(v);
        }
        if let Some(v) = &o.name {
            self.name = Some(v.clone());
        }
        if let Some(v) = &o.out_dir {
            self.out_dir = v.clone();
        }
        if let Some(v) = o.workers {
            self.workers = Some(v);
        }
    }

    /// All violations, one message each; empty means valid.
    pub fn violations(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if self.n < 2 {
            errs.push(format!("branching factor n must be at least 2, got {}", self.n));
        }
        if self.k < 1 {
            errs.push("volume level k must be at least 1".to_string());
        }
        if BaseDensity::from_str(&self.base).is_err() {
            errs.push(format!(
                "base density must be 'cauchy' or 'gaussian', got '{}'",
                self.base
            ));
        }
        if !(self.gamma > -1.0) {
            errs.push(format!("gamma must exceed -1, got {}", self.gamma));
        }
        match &self.couplings {
            None => {
                if !(self.d > 0.0) {
                    errs.push(format!("spectral dimension d must be positive, got {}", self.d));
                }
            }
            Some(weights) => {
                if weights.is_empty() {
                    errs.push("explicit coupling list must be nonempty".to_string());
                }
                if weights.iter().any(|&p| !(p >= 0.0)) {
                    errs.push("coupling weights must be nonnegative".to_string());
                }
                if weights.iter().sum::<f64>() > 1.0 + 1e-12 {
                    errs.push("coupling weights must not exceed unit total mass".to_string());
                }
            }
        }
        if let Some(t) = self.theta {
            if !(t > 0.0 && t < 1.0) {
                errs.push(format!("theta must lie strictly inside (0, 1), got {t}"));
            }
        }
        if !(self.half_width > 0.0) {
            errs.push(format!(
                "window half-width must be positive, got {}",
                self.half_width
            ));
        }
        if let Some([a, b]) = self.interval {
            if a > b {
                errs.push(format!("interval endpoints out of order: [{a}, {b}]"));
            }
        }
        if self.realizations == 0 {
            errs.push("realizations must be at least 1".to_string());
        }
        if let Some(e) = self.epsilon {
            if !(e > 0.0) {
                errs.push(format!("epsilon must be positive, got {e}"));
            }
        }
        if !(self.z_imag > 0.0) {
            errs.push(format!("z-imag must be positive, got {}", self.z_imag));
        }
        if self.grid_points < 2 {
            errs.push("grid needs at least 2 points".to_string());
        }
        if !(self.grid_min < self.grid_max) {
            errs.push(format!(
                "grid bounds out of order: [{}, {}]",
                self.grid_min, self.grid_max
            ));
        }
        if let Some(list) = &self.k_list {
            if list.is_empty() {
                errs.push("k-list must be nonempty".to_string());
            }
            if list.iter().any(|&k| k < 1) {
                errs.push("k-list entries must be at least 1".to_string());
            }
        }
        errs
    }

    pub fn base_density(&self) -> BaseDensity {
        BaseDensity::from_str(&self.base).expect("validated")
    }

    /// Counting interval in rescaled coordinates, defaulting to the window.
    pub fn interval_or_window(&self) -> (f64, f64) {
        match self.interval {
            Some([a, b]) => (a, b),
            None => (-self.half_width, self.half_width),
        }
    }

    /// Resolve θ: explicit value, else the midpoint of the admissible
    /// interval `((1+γ/2)d, 1)`. An empty interval is reported, not clamped.
    pub fn resolve_theta(&self) -> Result<f64, String> {
        if let Some(t) = self.theta {
            return Ok(t);
        }
        feasible_theta(self.gamma, self.d).ok_or_else(|| {
            format!(
                "no admissible theta: (1+gamma/2)*d = {:.4} is not below 1; pass --theta explicitly",
                (1.0 + self.gamma / 2.0) * self.d
            )
        })
    }

    /// Volume levels for sweep commands: the configured list, or the ladder
    /// `{k-4, k-2, k}` derived from `k`.
    pub fn k_ladder(&self) -> Result<Vec<u32>, String> {
        if let Some(list) = &self.k_list {
            let mut sorted = list.clone();
            sorted.sort_unstable();
            return Ok(sorted);
        }
        if self.k < 5 {
            return Err(format!(
                "k = {} is too small to derive the default ladder {{k-4, k-2, k}}; pass --k-list",
                self.k
            ));
        }
        Ok(vec![self.k - 4, self.k - 2, self.k])
    }

    /// Reject volumes whose dense matrices would exceed the configured cap.
    pub fn check_dense_volume(&self, k_values: &[u32]) -> Result<(), String> {
        for &k in k_values {
            let dim = (self.n as u64).checked_pow(k);
            match dim {
                Some(d) if d <= self.max_dim as u64 => {}
                _ => {
                    return Err(format!(
                        "volume n^k = {}^{k} exceeds the dense-matrix cap {} (raise --max-dim to override)",
                        self.n, self.max_dim
                    ));
                }
            }
        }
        Ok(())
    }
}
