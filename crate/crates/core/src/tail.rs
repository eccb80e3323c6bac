//! Functional Hill estimator of the conditional tail index and the
//! tail-ratio estimators of the marginal scale constants.

use serde::{Deserialize, Serialize};

use crate::covariate::WeightVector;
use crate::empirical::CondEcdf;
use crate::error::{MeeError, Result};
use crate::sample::Sample;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HillConfig {
    /// Decreasing levels `τ_1 >= … >= τ_J` in `(0, 1]`.
    pub taus: Vec<f64>,
    /// Intermediate risk level `α_n`; the tail fraction is `1 - α_n`.
    pub alpha_n: f64,
}

impl HillConfig {
    /// `J` levels `τ_i = 1/i`.
    pub fn harmonic(j: usize, alpha_n: f64) -> Self {
        HillConfig {
            taus: (1..=j).map(|i| 1.0 / i as f64).collect(),
            alpha_n,
        }
    }

    /// Default `J = 9`, `τ_i = 1/i`.
    pub fn with_level(alpha_n: f64) -> Self {
        Self::harmonic(9, alpha_n)
    }

    pub fn j(&self) -> usize {
        self.taus.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.taus.is_empty() {
            return Err(MeeError::Parameter("Hill estimator needs J >= 1".into()));
        }
        if self.taus.iter().any(|&t| !(t > 0.0 && t <= 1.0)) {
            return Err(MeeError::Parameter("every τ_i must lie in (0, 1]".into()));
        }
        if self.taus.windows(2).any(|w| w[1] > w[0]) {
            return Err(MeeError::Parameter("τ_i must be nonincreasing".into()));
        }
        if self.log_tau_sum() <= 0.0 {
            return Err(MeeError::Parameter("not all τ_i may equal 1".into()));
        }
        if !(self.alpha_n > 0.0 && self.alpha_n < 1.0) {
            return Err(MeeError::Parameter(format!(
                "α_n must lie in (0, 1), got {}",
                self.alpha_n
            )));
        }
        Ok(())
    }

    /// `-Σ ln τ_i`.
    pub fn log_tau_sum(&self) -> f64 {
        -self.taus.iter().map(|t| t.ln()).sum::<f64>()
    }

    /// Quantile levels `1 - τ_i (1 - α_n)`.
    pub fn levels(&self) -> Vec<f64> {
        let tail = 1.0 - self.alpha_n;
        self.taus.iter().map(|t| 1.0 - t * tail).collect()
    }
}

/// Default intermediate level: the tail fraction `1 - α_n` is
/// `1/sqrt(m)` with `m` the Kish effective size of the local sample.
pub fn default_alpha_n(w: &WeightVector) -> f64 {
    let m = w.kish_size();
    1.0 - 1.0 / m.sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HillDiagnostics {
    pub levels: Vec<f64>,
    pub quantiles: Vec<f64>,
    pub threshold: f64,
    /// Positive-weight atoms strictly above the threshold quantile `q̂₁(α_n)`.
    pub atoms_above_threshold: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub gamma_hat: f64,
    /// `ĉ_j` for every margin, first entry exactly 1.
    pub c_hat: Vec<f64>,
    pub alpha_n: f64,
    pub diagnostics: HillDiagnostics,
}

const GAMMA_ONE_SLACK: f64 = 1e-12;

/// Hill-type estimate from an arbitrary quantile function of margin 1.
pub fn hill_from_quantiles<Q: Fn(f64) -> f64>(quantile: Q, cfg: &HillConfig) -> Result<f64> {
    cfg.validate()?;
    let threshold = quantile(cfg.alpha_n);
    if !(threshold > 0.0) {
        return Err(MeeError::LogDomain {
            what: "threshold quantile",
            value: threshold,
        });
    }
    let log_threshold = threshold.ln();
    let mut num = 0.0;
    for level in cfg.levels() {
        let q = quantile(level);
        if !(q > 0.0) {
            return Err(MeeError::LogDomain {
                what: "tail quantile",
                value: q,
            });
        }
        num += q.ln() - log_threshold;
    }
    let gamma = num / cfg.log_tau_sum();
    if !gamma.is_finite() {
        return Err(MeeError::NonFinite("Hill estimate".into()));
    }
    if gamma <= 0.0 {
        return Err(MeeError::DegenerateTail(format!(
            "Hill estimate {gamma} is not positive"
        )));
    }
    // log-ratio rounding can put an exact γ = 1 one ulp below
    if gamma >= 1.0 - GAMMA_ONE_SLACK {
        return Err(MeeError::InfiniteMean { gamma });
    }
    Ok(gamma)
}

fn hill_with_ecdf(ecdf: &CondEcdf, cfg: &HillConfig) -> Result<(f64, HillDiagnostics)> {
    cfg.validate()?;
    let threshold = ecdf.quantile(cfg.alpha_n);
    let above = ecdf.atoms_above(threshold);
    if above == 0 {
        return Err(MeeError::DegenerateTail(format!(
            "no positive-weight observation above q̂₁(α_n) = {threshold}"
        )));
    }
    let levels = cfg.levels();
    let quantiles = levels.iter().map(|&l| ecdf.quantile(l)).collect();
    let gamma = hill_from_quantiles(|a| ecdf.quantile(a), cfg)?;
    Ok((
        gamma,
        HillDiagnostics {
            levels,
            quantiles,
            threshold,
            atoms_above_threshold: above,
        },
    ))
}

/// Functional Hill estimator `γ̂` computed on margin 1.
pub fn hill_functional(sample: &Sample, w: &WeightVector, cfg: &HillConfig) -> Result<f64> {
    let ecdf = CondEcdf::new(sample, w, 0)?;
    hill_with_ecdf(&ecdf, cfg).map(|(g, _)| g)
}

fn ratio_from_quantiles(qj: f64, q1: f64, gamma_hat: f64) -> Result<f64> {
    if !(gamma_hat > 0.0) {
        return Err(MeeError::Parameter(format!(
            "tail index must be positive, got {gamma_hat}"
        )));
    }
    if !(qj > 0.0) {
        return Err(MeeError::LogDomain {
            what: "marginal quantile",
            value: qj,
        });
    }
    if !(q1 > 0.0) {
        return Err(MeeError::LogDomain {
            what: "first-margin quantile",
            value: q1,
        });
    }
    Ok((qj / q1).powf(1.0 / gamma_hat))
}

/// `ĉ_j = (q̂_j(α_n) / q̂_1(α_n))^{1/γ̂}`; margin indices are 0-based.
pub fn tail_ratio(sample: &Sample, w: &WeightVector, alpha_n: f64, gamma_hat: f64, j: usize) -> Result<f64> {
    sample.check_margin(j)?;
    if j == 0 {
        return Ok(1.0);
    }
    let q1 = CondEcdf::new(sample, w, 0)?.quantile(alpha_n);
    let qj = CondEcdf::new(sample, w, j)?.quantile(alpha_n);
    ratio_from_quantiles(qj, q1, gamma_hat)
}

/// `γ̂` and every `ĉ_j` in one pass.
pub fn estimate_tail(sample: &Sample, w: &WeightVector, cfg: &HillConfig) -> Result<TailEstimate> {
    let first = CondEcdf::new(sample, w, 0)?;
    let (gamma_hat, diagnostics) = hill_with_ecdf(&first, cfg)?;
    let q1 = first.quantile(cfg.alpha_n);
    let mut c_hat = vec![1.0];
    for j in 1..sample.d() {
        let qj = CondEcdf::new(sample, w, j)?.quantile(cfg.alpha_n);
        c_hat.push(ratio_from_quantiles(qj, q1, gamma_hat)?);
    }
    Ok(TailEstimate {
        gamma_hat,
        c_hat,
        alpha_n: cfg.alpha_n,
        diagnostics,
    })
}
