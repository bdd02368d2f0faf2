//! Small numerical utilities shared across modules: compensated summation,
//! adaptive quadrature (finite and whole-line), one-dimensional maximization,
//! least-squares slopes and the asymptotic Kolmogorov distribution.

use crate::error::{Error, Result};

/// Kahan compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, value: f64) {
        let y = value - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// Compensated sum of an iterator.
pub fn kahan_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut acc = KahanSum::new();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

const MAX_QUAD_DEPTH: u32 = 48;

fn simpson(a: f64, fa: f64, b: f64, fb: f64, fm: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adaptive_step(
    f: &impl Fn(f64) -> f64,
    a: f64,
    fa: f64,
    b: f64,
    fb: f64,
    fm: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, fa, m, fm, flm);
    let right = simpson(m, fm, b, fb, frm);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth >= MAX_QUAD_DEPTH {
        return Err(Error::Numerical(format!(
            "adaptive quadrature failed to converge on [{a}, {b}]"
        )));
    }
    let half = 0.5 * tol;
    Ok(
        adaptive_step(f, a, fa, m, fm, flm, left, half, depth + 1)?
            + adaptive_step(f, m, fm, b, fb, frm, right, half, depth + 1)?,
    )
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    if !(a < b) {
        return Err(Error::InvalidParameter(format!(
            "integration bounds must satisfy a < b, got [{a}, {b}]"
        )));
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, fa, b, fb, fm);
    adaptive_step(&f, a, fa, b, fb, fm, whole, tol, 0)
}

/// Quadrature of `f` over the whole real line via the substitution `v = tan u`.
///
/// Suitable for integrands decaying at least like `1/v²`.
pub fn integrate_line(f: impl Fn(f64) -> f64, tol: f64) -> Result<f64> {
    let margin = 1e-9;
    let g = move |u: f64| {
        let c = u.cos();
        let v = u.tan();
        let w = f(v) / (c * c);
        if w.is_finite() {
            w
        } else {
            0.0
        }
    };
    integrate(
        g,
        -std::f64::consts::FRAC_PI_2 + margin,
        std::f64::consts::FRAC_PI_2 - margin,
        tol,
    )
}

/// Golden-section maximization of a unimodal function on `[a, b]`.
///
/// Returns `(argmax, max)` to within `tol` in the argument.
pub fn golden_max(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (a, b);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
    }
    let x = 0.5 * (lo + hi);
    (x, f(x))
}

/// Least-squares slope and intercept of `y` against `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "fit inputs of lengths {} and {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::InsufficientData(
            "need at least two points for a slope".into(),
        ));
    }
    let n = x.len() as f64;
    let mx = kahan_sum(x.iter().copied()) / n;
    let my = kahan_sum(y.iter().copied()) / n;
    let sxx = kahan_sum(x.iter().map(|&v| (v - mx) * (v - mx)));
    if sxx == 0.0 {
        return Err(Error::InvalidParameter(
            "degenerate fit: all abscissae equal".into(),
        ));
    }
    let sxy = kahan_sum(x.iter().zip(y).map(|(&u, &v)| (u - mx) * (v - my)));
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// Survival function of the asymptotic Kolmogorov distribution,
/// `Q(λ) = 2 Σ_{j≥1} (−1)^{j−1} exp(−2 j² λ²)`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=100 {
        let term = (-2.0 * (j as f64) * (j as f64) * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-12 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Sample mean and unbiased variance.
pub fn mean_variance(samples: &[f64]) -> (f64, f64) {
    let n = samples.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = kahan_sum(samples.iter().copied()) / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let ss = kahan_sum(samples.iter().map(|&v| (v - mean) * (v - mean)));
    (mean, ss / (n - 1) as f64)
}

/// Standard error of the sample mean.
pub fn standard_error(samples: &[f64]) -> f64 {
    let (_, var) = mean_variance(samples);
    (var / samples.len() as f64).sqrt()
}
