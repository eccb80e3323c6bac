//! End-to-end estimation: local weights, tail index and ratios, tail
//! dependence, minimization of the plug-in loss, and expectile assembly.

use serde::{Deserialize, Serialize};

use crate::covariate::{
    auto_bandwidth, distances, nw_weights_from_distances, small_ball_from_distances, CovariatePoint, Kernel, Metric,
    WeightVector,
};
use crate::dependence::{EmpiricalLambda, KnConfig, LambdaFunction, LambdaGrid, TailDependence};
use crate::empirical::CondEcdf;
use crate::error::{MeeError, Result, Stage, StageExt};
use crate::models::default_starts;
use crate::objective::{assemble_expectile, direct_empirical_expectile, loss, loss_gradient, ThetaVector, XiEstimate};
use crate::optimizer::{multi_start_minimize, OptimizerOptions, OptimizerReport, SearchBox};
use crate::quadrature::QuadratureConfig;
use crate::sample::Sample;
use crate::tail::{default_alpha_n, hill_functional, tail_ratio, HillConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    #[default]
    L2,
    Sup,
}

impl MetricKind {
    pub fn resolve(self, grid_size: usize) -> Metric {
        match self {
            MetricKind::L2 => Metric::l2_unit_interval(grid_size),
            MetricKind::Sup => Metric::Sup,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimationConfig {
    /// Target extreme level.
    pub alpha: f64,
    /// `None` selects the `⌈n^0.7⌉`-nearest-neighbour radius.
    pub bandwidth: Option<f64>,
    pub kernel: Kernel,
    pub metric: MetricKind,
    pub hill_j: usize,
    /// `None` uses `1 - 1/sqrt(m)` with `m` the effective local sample size.
    pub hill_alpha_n: Option<f64>,
    /// `None` uses [`KnConfig::from_small_ball`].
    pub kn: Option<usize>,
    pub bounds: (f64, f64),
    pub optimizer: OptimizerOptions,
    pub lambda_grid: LambdaGrid,
    pub quadrature: QuadratureConfig,
    /// Copula second-order exponent used only by the rate plan.
    pub mu: f64,
}

impl Default for EstimationConfig {
    fn default() -> Self {
        EstimationConfig {
            alpha: 0.999,
            bandwidth: None,
            kernel: Kernel::default(),
            metric: MetricKind::default(),
            hill_j: 9,
            hill_alpha_n: None,
            kn: None,
            bounds: (1e-3, 1e3),
            optimizer: OptimizerOptions::default(),
            lambda_grid: LambdaGrid::default(),
            quadrature: QuadratureConfig::default(),
            mu: 1.0,
        }
    }
}

impl EstimationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(MeeError::Parameter(format!("α must lie in (0, 1), got {}", self.alpha)));
        }
        if let Some(h) = self.bandwidth {
            if !(h > 0.0 && h.is_finite()) {
                return Err(MeeError::Parameter(format!("bandwidth must be positive, got {h}")));
            }
        }
        if self.hill_j == 0 {
            return Err(MeeError::Parameter("J must be at least 1".into()));
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(MeeError::Parameter(format!("μ must be positive, got {}", self.mu)));
        }
        let (lo, hi) = self.bounds;
        if !(lo > 0.0 && lo < hi && hi.is_finite()) {
            return Err(MeeError::Parameter(format!(
                "invalid box [{lo}, {hi}]; need 0 < lo < hi < ∞"
            )));
        }
        self.optimizer.validate()?;
        self.quadrature.validate()
    }
}

/// Convergence-rate diagnostics for the Lomax specialization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePlan {
    pub delta0: f64,
    pub delta_minus1: f64,
    pub delta_gamma: f64,
    /// `(nψ̂)^{min(1/2, μ)}` when `k_n` is the ball-probability choice.
    pub ball_component: Option<f64>,
    pub combined: f64,
}

pub fn rate_plan(n: usize, alpha_n: f64, psi_hat: f64, k_n: usize, gamma_hat: f64, mu: f64) -> Result<RatePlan> {
    if !(psi_hat > 0.0) {
        return Err(MeeError::DegenerateNeighborhood(format!(
            "small-ball estimate ψ̂ = {psi_hat}"
        )));
    }
    if n == 0 || k_n == 0 || !(alpha_n > 0.0 && alpha_n < 1.0) || !(gamma_hat > 0.0) || !(mu > 0.0) {
        return Err(MeeError::Parameter(format!(
            "rate plan inputs n={n}, α_n={alpha_n}, k_n={k_n}, γ̂={gamma_hat}, μ={mu}"
        )));
    }
    let n_f = n as f64;
    let tail = 1.0 - alpha_n;
    let local = n_f * psi_hat;
    let delta0 = (local * tail).sqrt();
    let delta_minus1 = (n_f / k_n as f64).powf(mu);
    let delta_gamma = gamma_hat * tail.powf(-gamma_hat);
    let (ball_component, combined) = if k_n == local.ceil() as usize {
        let ball = local.powf(mu.min(0.5));
        (Some(ball), delta_gamma.min(ball))
    } else {
        (None, delta0.min(delta_minus1).min(delta_gamma))
    };
    Ok(RatePlan {
        delta0,
        delta_minus1,
        delta_gamma,
        ball_component,
        combined,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MEEResult {
    pub theta_hat: ThetaVector,
    pub gamma_hat: f64,
    pub c_hat: Vec<f64>,
    pub expectile: Vec<f64>,
    pub q1_hat: f64,
    pub alpha: f64,
    pub alpha_n: f64,
    pub bandwidth: f64,
    pub psi_hat: f64,
    pub k_n: usize,
    pub optimizer: OptimizerReport,
    /// Further converged minima whose loss is within `1e-8` of the best.
    pub alternative_minima: Vec<Vec<f64>>,
    pub rate_plan: RatePlan,
    pub warnings: Vec<String>,
}

/// Kernel weights at `y`, with the bandwidth used and `ψ̂_y(h)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Localization {
    pub weights: WeightVector,
    pub bandwidth: f64,
    pub psi_hat: f64,
}

pub fn localize(sample: &Sample, y: &CovariatePoint, cfg: &EstimationConfig) -> Result<Localization> {
    let metric = cfg.metric.resolve(sample.p());
    let dists = distances(sample, y, metric)?;
    let h = cfg.bandwidth.unwrap_or_else(|| auto_bandwidth(&dists));
    let kernel = cfg.kernel;
    let weights = nw_weights_from_distances(&dists, h, |s| kernel.eval(s))?;
    Ok(Localization {
        weights,
        bandwidth: h,
        psi_hat: small_ball_from_distances(&dists, h),
    })
}

const NON_UNIQUE_LOSS_GAP: f64 = 1e-8;

pub fn estimate_mee(sample: &Sample, y: &CovariatePoint, cfg: &EstimationConfig) -> Result<MEEResult> {
    cfg.validate()?;
    let (n, d) = (sample.n(), sample.d());
    if d < 2 {
        return Err(MeeError::Dimension { expected: 2, found: d });
    }
    let local = localize(sample, y, cfg).stage(Stage::Weights)?;
    let w = &local.weights;

    let alpha_n = cfg.hill_alpha_n.unwrap_or_else(|| default_alpha_n(w));
    let hill = HillConfig::harmonic(cfg.hill_j, alpha_n);
    let gamma_hat = hill_functional(sample, w, &hill).stage(Stage::Hill)?;
    let c_hat = (0..d)
        .map(|j| tail_ratio(sample, w, alpha_n, gamma_hat, j))
        .collect::<Result<Vec<f64>>>()
        .stage(Stage::TailRatio)?;

    let (kn, xi) = (|| {
        let kn = match cfg.kn {
            Some(k) => KnConfig::new(k, n)?,
            None => KnConfig::from_small_ball(n, local.psi_hat)?,
        };
        let td = TailDependence::new(sample, w, kn)?;
        let xi = XiEstimate::new(gamma_hat, c_hat.clone(), |j, k| {
            Ok(LambdaFunction::Empirical(EmpiricalLambda::estimate(
                &td,
                j,
                k,
                &cfg.lambda_grid,
            )?))
        })?;
        Ok((kn, xi))
    })()
    .stage(Stage::Dependence)?;

    let mut warnings = Vec::new();
    let (report, alternative_minima) = (|| {
        let bounds = SearchBox::uniform(d, cfg.bounds.0, cfg.bounds.1)?;
        let q = cfg.quadrature;
        let f = |v: &[f64]| loss(&ThetaVector::from_slice(v)?, &xi, &q);
        let g = |v: &[f64]| loss_gradient(&ThetaVector::from_slice(v)?, &xi, &q);
        let starts = default_starts(gamma_hat, &c_hat, &bounds);
        let multi = multi_start_minimize(f, g, &bounds, &starts, &cfg.optimizer)?;
        if !multi.best.converged {
            return Err(MeeError::Optimization(format!(
                "no start converged (best projected gradient {:e})",
                multi.best.projected_gradient_norm
            )));
        }
        let best = multi.best;
        let alternatives: Vec<Vec<f64>> = multi
            .distinct_minima
            .into_iter()
            .filter(|m| m.minimizer != best.minimizer && m.objective - best.objective <= NON_UNIQUE_LOSS_GAP)
            .map(|m| m.minimizer)
            .collect();
        Ok((best, alternatives))
    })()
    .stage(Stage::Optimization)?;
    if !alternative_minima.is_empty() {
        warnings.push(format!(
            "loss has {} distinct minima within {NON_UNIQUE_LOSS_GAP:e} of the best; Θ̂ may not be unique",
            alternative_minima.len() + 1
        ));
    }

    let (theta_hat, q1_hat, expectile, plan) = (|| {
        let theta_hat = ThetaVector::from_slice(&report.minimizer)?;
        let q1_hat = CondEcdf::new(sample, w, 0)?.quantile(cfg.alpha);
        let expectile = assemble_expectile(q1_hat, &theta_hat, gamma_hat)?;
        let plan = rate_plan(n, alpha_n, local.psi_hat, kn.k_n, gamma_hat, cfg.mu)?;
        Ok((theta_hat, q1_hat, expectile, plan))
    })()
    .stage(Stage::Assembly)?;

    Ok(MEEResult {
        theta_hat,
        gamma_hat,
        c_hat,
        expectile,
        q1_hat,
        alpha: cfg.alpha,
        alpha_n,
        bandwidth: local.bandwidth,
        psi_hat: local.psi_hat,
        k_n: kn.k_n,
        optimizer: report,
        alternative_minima,
        rate_plan: plan,
        warnings,
    })
}

/// Direct and assembled expectiles at the same moderate level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModerateCheck {
    pub alpha: f64,
    pub direct: Vec<f64>,
    pub assembled: Vec<f64>,
    /// `|assembled_k - direct_k| / |direct_k|`.
    pub relative_gaps: Vec<f64>,
}

pub fn moderate_level_check(
    sample: &Sample,
    y: &CovariatePoint,
    cfg: &EstimationConfig,
    alpha_moderate: f64,
) -> Result<ModerateCheck> {
    if !(alpha_moderate > 0.9 && alpha_moderate < 0.99) {
        return Err(MeeError::Parameter(format!(
            "moderate level must lie in (0.9, 0.99), got {alpha_moderate}"
        )));
    }
    if sample.d() < 2 {
        return Err(MeeError::Dimension {
            expected: 2,
            found: sample.d(),
        });
    }
    let cfg = EstimationConfig {
        alpha: alpha_moderate,
        ..cfg.clone()
    };
    let result = estimate_mee(sample, y, &cfg)?;
    let local = localize(sample, y, &cfg).stage(Stage::Weights)?;
    let direct = direct_empirical_expectile(sample, &local.weights, alpha_moderate).stage(Stage::DirectExpectile)?;
    let relative_gaps = result
        .expectile
        .iter()
        .zip(&direct)
        .map(|(a, b)| (a - b).abs() / b.abs())
        .collect();
    Ok(ModerateCheck {
        alpha: alpha_moderate,
        direct,
        assembled: result.expectile,
        relative_gaps,
    })
}
