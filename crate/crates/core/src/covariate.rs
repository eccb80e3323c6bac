//! Functional covariate space: gridded curves, their metrics, kernels,
//! Nadaraya–Watson weights and the empirical small-ball probability.

use serde::{Deserialize, Serialize};

use crate::error::{MeeError, Result};
use crate::quadrature::integrate_adaptive;
use crate::sample::Sample;

/// A curve sampled on a fixed grid of `p` points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CovariatePoint {
    values: Vec<f64>,
}

impl CovariatePoint {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(MeeError::Parameter("covariate grid must be non-empty".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(MeeError::NonFinite("covariate value".into()));
        }
        Ok(CovariatePoint { values })
    }

    pub fn constant(p: usize, level: f64) -> Self {
        CovariatePoint {
            values: vec![level; p.max(1)],
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn grid_size(&self) -> usize {
        self.values.len()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// `sqrt(step * Σ (a_t - b_t)^2)`, a Riemann approximation of the L² norm.
    L2Grid { step: f64 },
    /// `max_t |a_t - b_t|`.
    Sup,
}

impl Metric {
    /// L² metric for curves observed on `p` equispaced points of `[0, 1]`.
    pub fn l2_unit_interval(p: usize) -> Self {
        Metric::L2Grid {
            step: 1.0 / p.max(1) as f64,
        }
    }

    pub fn distance(&self, a: &CovariatePoint, b: &CovariatePoint) -> Result<f64> {
        if a.grid_size() != b.grid_size() {
            return Err(MeeError::Dimension {
                expected: a.grid_size(),
                found: b.grid_size(),
            });
        }
        let pairs = a.values.iter().zip(&b.values);
        Ok(match *self {
            Metric::L2Grid { step } => (step * pairs.map(|(x, y)| (x - y) * (x - y)).sum::<f64>()).sqrt(),
            Metric::Sup => pairs.map(|(x, y)| (x - y).abs()).fold(0.0, f64::max),
        })
    }
}

pub fn distance(a: &CovariatePoint, b: &CovariatePoint, m: Metric) -> Result<f64> {
    m.distance(a, b)
}

/// Kernels supported on `[0, 1]`, nonincreasing there.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kernel {
    Uniform,
    #[default]
    Quadratic,
}

impl Kernel {
    #[inline]
    pub fn eval(&self, s: f64) -> f64 {
        if !(0.0..=1.0).contains(&s) {
            return 0.0;
        }
        match self {
            Kernel::Uniform => 1.0,
            Kernel::Quadratic => 1.5 * (1.0 - s * s),
        }
    }

    /// Derivative on `[0, 1)`.
    pub fn derivative(&self, s: f64) -> f64 {
        match self {
            Kernel::Uniform => 0.0,
            Kernel::Quadratic => -3.0 * s,
        }
    }

    /// `K(1) - ∫_0^1 K'(s) τ(s) ds`; strictly positive for an admissible kernel.
    pub fn admissibility<T: Fn(f64) -> f64>(&self, tau: T) -> f64 {
        let integrand = |s: f64| self.derivative(s) * tau(s);
        let integral = integrate_adaptive(&integrand, 0.0, 1.0, &[], 1e-12, 1e-12, 200)
            .map(|r| r.value)
            .unwrap_or(f64::NAN);
        self.eval(1.0) - integral
    }
}

/// Nadaraya–Watson weights localizing a sample at a covariate point.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    weights: Vec<f64>,
    effective_count: usize,
}

impl WeightVector {
    /// Equal weights `1/n`.
    pub fn uniform(n: usize) -> Self {
        WeightVector {
            weights: vec![1.0 / n as f64; n],
            effective_count: n,
        }
    }

    /// Normalizes nonnegative raw weights to sum to one.
    pub fn from_raw(raw: Vec<f64>) -> Result<Self> {
        if raw.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(MeeError::Parameter("weights must be finite and nonnegative".into()));
        }
        let total: f64 = raw.iter().sum();
        if total <= 0.0 {
            return Err(MeeError::Parameter("weights have zero total mass".into()));
        }
        let weights: Vec<f64> = raw.into_iter().map(|w| w / total).collect();
        let effective_count = weights.iter().filter(|&&w| w > 0.0).count();
        Ok(WeightVector {
            weights,
            effective_count,
        })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Number of strictly positive weights.
    pub fn effective_count(&self) -> usize {
        self.effective_count
    }

    /// Kish effective sample size `1 / Σ w_i²`.
    pub fn kish_size(&self) -> f64 {
        1.0 / self.weights.iter().map(|w| w * w).sum::<f64>()
    }
}

/// Distances from every sample covariate to `y`.
pub fn distances(sample: &Sample, y: &CovariatePoint, m: Metric) -> Result<Vec<f64>> {
    sample.covariates().iter().map(|yi| m.distance(yi, y)).collect()
}

/// Weights `K(dist_i / h) / Σ_s K(dist_s / h)` for an arbitrary kernel function.
pub fn nw_weights_from_distances<K: Fn(f64) -> f64>(dists: &[f64], h: f64, kernel: K) -> Result<WeightVector> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(MeeError::Parameter(format!("bandwidth must be positive, got {h}")));
    }
    let raw: Vec<f64> = dists.iter().map(|&r| kernel(r / h)).collect();
    if raw.iter().sum::<f64>() <= 0.0 {
        return Err(MeeError::EmptyNeighborhood { h });
    }
    WeightVector::from_raw(raw)
}

pub fn nw_weights(sample: &Sample, y: &CovariatePoint, h: f64, k: Kernel, m: Metric) -> Result<WeightVector> {
    let dists = distances(sample, y, m)?;
    nw_weights_from_distances(&dists, h, |s| k.eval(s))
}

/// `(1/n) #{i : ‖Y_i - y‖ <= h}`.
pub fn small_ball_estimate(sample: &Sample, y: &CovariatePoint, h: f64, m: Metric) -> Result<f64> {
    let dists = distances(sample, y, m)?;
    Ok(small_ball_from_distances(&dists, h))
}

pub fn small_ball_from_distances(dists: &[f64], h: f64) -> f64 {
    dists.iter().filter(|&&r| r <= h).count() as f64 / dists.len() as f64
}

/// Smallest radius whose closed ball holds `⌈n^0.7⌉` covariates, nudged up so
/// that a kernel vanishing at 1 still gives the farthest of them positive weight.
pub fn auto_bandwidth(dists: &[f64]) -> f64 {
    let n = dists.len();
    let k = ((n as f64).powf(0.7).ceil() as usize).clamp(1, n);
    let mut sorted = dists.to_vec();
    sorted.sort_by(f64::total_cmp);
    let r = sorted[k - 1];
    if r > 0.0 {
        r * (1.0 + 1e-9)
    } else {
        // all k nearest covariates coincide with y
        1e-12
    }
}
