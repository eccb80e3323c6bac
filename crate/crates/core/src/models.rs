//! Synthetic conditional models: heavy-tailed margins, copula samplers,
//! functional covariate processes and ground-truth Θ* oracles.

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Gamma};
use serde::{Deserialize, Serialize};

use crate::covariate::CovariatePoint;
use crate::dependence::CopulaFamily;
use crate::error::{MeeError, Result};
use crate::objective::{loss, loss_gradient, ThetaVector, XiEstimate};
use crate::optimizer::{multi_start_minimize, OptimizerOptions, SearchBox};
use crate::quadrature::QuadratureConfig;
use crate::sample::Sample;

/// Marginal distributions with regularly varying upper tails.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MarginalFamily {
    /// `F̄(x) = (1 + x/s)^{-1/γ}`.
    Lomax { gamma: f64, scale: f64 },
    /// `F̄(x) = (1 + x^τ)^{-λ}`.
    Burr { tau: f64, lambda: f64 },
    /// `F̄(x) = 1 - exp(-x^{-1/γ})`.
    Frechet { gamma: f64 },
    /// `F̄(x) = ½ x^{-α} (1 + x^ρ)` for `x ≥ 1`, where `F̄(1) = 1`.
    HallWeiss { alpha: f64, rho: f64 },
}

const BISECTION_TOL: f64 = 1e-12;

impl MarginalFamily {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            MarginalFamily::Lomax { gamma, scale } => gamma > 0.0 && scale > 0.0,
            MarginalFamily::Burr { tau, lambda } => tau > 0.0 && lambda > 0.0,
            MarginalFamily::Frechet { gamma } => gamma > 0.0,
            MarginalFamily::HallWeiss { alpha, rho } => alpha > 0.0 && rho < 0.0 && rho.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(MeeError::Parameter(format!("invalid marginal family {self:?}")))
        }
    }

    pub fn left_endpoint(&self) -> f64 {
        match self {
            MarginalFamily::HallWeiss { .. } => 1.0,
            _ => 0.0,
        }
    }

    pub fn tail_index(&self) -> f64 {
        match *self {
            MarginalFamily::Lomax { gamma, .. } | MarginalFamily::Frechet { gamma } => gamma,
            MarginalFamily::Burr { tau, lambda } => 1.0 / (tau * lambda),
            MarginalFamily::HallWeiss { alpha, .. } => 1.0 / alpha,
        }
    }

    /// `C` in `F̄(x) ~ C x^{-1/γ}`.
    pub fn tail_constant(&self) -> f64 {
        match *self {
            MarginalFamily::Lomax { gamma, scale } => scale.powf(1.0 / gamma),
            MarginalFamily::Burr { .. } | MarginalFamily::Frechet { .. } => 1.0,
            MarginalFamily::HallWeiss { .. } => 0.5,
        }
    }

    pub fn survival(&self, x: f64) -> f64 {
        if x <= self.left_endpoint() {
            return 1.0;
        }
        match *self {
            MarginalFamily::Lomax { gamma, scale } => (-(x / scale).ln_1p() / gamma).exp(),
            MarginalFamily::Burr { tau, lambda } => (-lambda * x.powf(tau).ln_1p()).exp(),
            MarginalFamily::Frechet { gamma } => -(-x.powf(-1.0 / gamma)).exp_m1(),
            MarginalFamily::HallWeiss { alpha, rho } => 0.5 * x.powf(-alpha) * (1.0 + x.powf(rho)),
        }
    }

    /// `x` with `F̄(x) = u`; `u = 1` gives the left endpoint.
    pub fn inverse_survival(&self, u: f64) -> Result<f64> {
        self.validate()?;
        if !(u > 0.0 && u <= 1.0) {
            return Err(MeeError::Domain(format!("survival level {u} outside (0, 1]")));
        }
        if u == 1.0 {
            return Ok(self.left_endpoint());
        }
        Ok(match *self {
            MarginalFamily::Lomax { gamma, scale } => scale * (-gamma * u.ln()).exp_m1(),
            MarginalFamily::Burr { tau, lambda } => (-u.ln() / lambda).exp_m1().powf(1.0 / tau),
            MarginalFamily::Frechet { gamma } => (-(-u).ln_1p()).powf(-gamma),
            MarginalFamily::HallWeiss { .. } => self.bisect_survival(u),
        })
    }

    fn bisect_survival(&self, u: f64) -> f64 {
        let mut lo = self.left_endpoint();
        let mut hi = lo.max(1.0) * 2.0;
        while self.survival(hi) > u {
            lo = hi;
            hi *= 2.0;
        }
        for _ in 0..2000 {
            let mid = 0.5 * (lo + hi);
            if self.survival(mid) > u {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= BISECTION_TOL * hi.max(1.0) {
                break;
            }
        }
        0.5 * (lo + hi)
    }
}

/// Marginal family whose tail index follows the covariate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MarginKind {
    Lomax,
    Burr { tau: f64 },
    Frechet,
    HallWeiss { rho: f64 },
}

/// One response margin: a family evaluated at `γ(y)` and multiplied by `scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginModel {
    #[serde(flatten)]
    pub kind: MarginKind,
    pub scale: f64,
}

impl MarginModel {
    pub fn lomax(scale: f64) -> Self {
        MarginModel {
            kind: MarginKind::Lomax,
            scale,
        }
    }

    /// Family at tail index `gamma` and the multiplier applied to its draws.
    pub fn family(&self, gamma: f64) -> (MarginalFamily, f64) {
        match self.kind {
            MarginKind::Lomax => (
                MarginalFamily::Lomax {
                    gamma,
                    scale: self.scale,
                },
                1.0,
            ),
            MarginKind::Burr { tau } => (
                MarginalFamily::Burr {
                    tau,
                    lambda: 1.0 / (tau * gamma),
                },
                self.scale,
            ),
            MarginKind::Frechet => (MarginalFamily::Frechet { gamma }, self.scale),
            MarginKind::HallWeiss { rho } => (
                MarginalFamily::HallWeiss {
                    alpha: 1.0 / gamma,
                    rho,
                },
                self.scale,
            ),
        }
    }

    pub fn tail_constant(&self, gamma: f64) -> f64 {
        let (fam, mult) = self.family(gamma);
        fam.tail_constant() * mult.powf(1.0 / gamma)
    }

    pub fn draw(&self, gamma: f64, survival_level: f64) -> Result<f64> {
        let (fam, mult) = self.family(gamma);
        Ok(mult * fam.inverse_survival(survival_level)?)
    }

    fn validate(&self) -> Result<()> {
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(MeeError::Parameter(format!(
                "margin scale must be positive, got {}",
                self.scale
            )));
        }
        self.family(0.5).0.validate()
    }
}

/// `intercept + slope · mean(y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineParam {
    pub intercept: f64,
    #[serde(default)]
    pub slope: f64,
}

impl AffineParam {
    pub fn constant(v: f64) -> Self {
        AffineParam {
            intercept: v,
            slope: 0.0,
        }
    }

    pub fn at(&self, y: &CovariatePoint) -> f64 {
        self.intercept + self.slope * y.mean()
    }
}

/// Copula of the response given the covariate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum CopulaSpec {
    SurvivalClayton { theta: AffineParam },
    Comonotone,
    Independence,
}

impl CopulaSpec {
    pub fn at(&self, y: &CovariatePoint) -> Result<CopulaFamily> {
        match *self {
            CopulaSpec::SurvivalClayton { theta } => {
                let t = theta.at(y);
                if !(t > 0.0 && t.is_finite()) {
                    return Err(MeeError::Model(format!("Clayton θ(y) = {t} is not positive")));
                }
                Ok(CopulaFamily::SurvivalClayton { theta: t })
            }
            CopulaSpec::Comonotone => Ok(CopulaFamily::Comonotone),
            CopulaSpec::Independence => Ok(CopulaFamily::Independence),
        }
    }
}

/// Law of the functional covariate, observed on `grid_size` points of `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CovariateProcess {
    /// `c + a sin(2πt) + b cos(2πt)` with `a, b, c` uniform on `[-1, 1]`.
    Fourier { grid_size: usize },
    /// The zero curve.
    Constant { grid_size: usize },
}

pub const DEFAULT_GRID_SIZE: usize = 100;

impl Default for CovariateProcess {
    fn default() -> Self {
        CovariateProcess::Fourier {
            grid_size: DEFAULT_GRID_SIZE,
        }
    }
}

impl CovariateProcess {
    pub fn grid_size(&self) -> usize {
        match *self {
            CovariateProcess::Fourier { grid_size } | CovariateProcess::Constant { grid_size } => grid_size,
        }
    }

    pub fn draw<R: Rng>(&self, rng: &mut R) -> CovariatePoint {
        match *self {
            CovariateProcess::Constant { grid_size } => CovariatePoint::constant(grid_size, 0.0),
            CovariateProcess::Fourier { grid_size } => {
                let a: f64 = rng.random_range(-1.0..=1.0);
                let b: f64 = rng.random_range(-1.0..=1.0);
                let c: f64 = rng.random_range(-1.0..=1.0);
                Self::fourier_curve(grid_size, a, b, c)
            }
        }
    }

    pub fn fourier_curve(grid_size: usize, a: f64, b: f64, c: f64) -> CovariatePoint {
        let values = (0..grid_size)
            .map(|i| {
                let t = std::f64::consts::TAU * i as f64 / grid_size as f64;
                c + a * t.sin() + b * t.cos()
            })
            .collect();
        CovariatePoint::new(values).expect("finite curve")
    }

    /// Reference evaluation point: the zero curve.
    pub fn center(&self) -> CovariatePoint {
        CovariatePoint::constant(self.grid_size(), 0.0)
    }
}

fn default_gamma_clip() -> (f64, f64) {
    (0.2, 0.8)
}

/// Equivalent-tails conditional model of `X | Y = y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalModel {
    pub margins: Vec<MarginModel>,
    pub gamma: AffineParam,
    #[serde(default = "default_gamma_clip")]
    pub gamma_clip: (f64, f64),
    pub copula: CopulaSpec,
    #[serde(default)]
    pub covariate: CovariateProcess,
}

/// The model's ingredients at a fixed covariate value.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelAt {
    pub gamma: f64,
    pub copula: CopulaFamily,
    /// `c_j = lim F̄_j / F̄₁`, first entry 1.
    pub c: Vec<f64>,
}

impl ConditionalModel {
    /// Lomax margins with the given scales, constant tail index and covariate.
    pub fn lomax(gamma: f64, scales: &[f64], copula: CopulaSpec) -> Self {
        ConditionalModel {
            margins: scales.iter().map(|&s| MarginModel::lomax(s)).collect(),
            gamma: AffineParam::constant(gamma),
            gamma_clip: (0.0, 1.0),
            copula,
            covariate: CovariateProcess::Constant {
                grid_size: DEFAULT_GRID_SIZE,
            },
        }
    }

    pub fn d(&self) -> usize {
        self.margins.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.margins.is_empty() {
            return Err(MeeError::Dimension { expected: 1, found: 0 });
        }
        if self.covariate.grid_size() == 0 {
            return Err(MeeError::Parameter("covariate grid must be nonempty".into()));
        }
        let (lo, hi) = self.gamma_clip;
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(MeeError::Parameter(format!("invalid tail-index clip [{lo}, {hi}]")));
        }
        self.margins.iter().try_for_each(MarginModel::validate)
    }

    pub fn gamma_at(&self, y: &CovariatePoint) -> Result<f64> {
        let (lo, hi) = self.gamma_clip;
        let g = self.gamma.at(y).clamp(lo, hi);
        if !(g > 0.0 && g < 1.0) {
            return Err(MeeError::Model(format!("γ(y) = {g} outside (0, 1)")));
        }
        Ok(g)
    }

    pub fn at(&self, y: &CovariatePoint) -> Result<ModelAt> {
        self.validate()?;
        let gamma = self.gamma_at(y)?;
        let base = self.margins[0].tail_constant(gamma);
        Ok(ModelAt {
            gamma,
            copula: self.copula.at(y)?,
            c: self.margins.iter().map(|m| m.tail_constant(gamma) / base).collect(),
        })
    }
}

/// Survival levels `F̄_j(X_j)` of one copula draw.
fn draw_survival_levels<R: Rng>(family: CopulaFamily, d: usize, rng: &mut R) -> Vec<f64> {
    match family {
        CopulaFamily::Independence => (0..d).map(|_| rng.sample(Open01)).collect(),
        CopulaFamily::Comonotone => vec![rng.sample(Open01); d],
        CopulaFamily::SurvivalClayton { theta } => {
            let frailty: f64 = Gamma::new(1.0 / theta, 1.0).expect("validated θ").sample(rng);
            (0..d)
                .map(|_| {
                    let e: f64 = Exp1.sample(rng);
                    (-(e / frailty).ln_1p() / theta).exp().max(f64::MIN_POSITIVE)
                })
                .collect()
        }
    }
}

/// `n` draws from the copula, as an `n × d` matrix of uniforms.
pub fn sample_copula(family: CopulaFamily, d: usize, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    family.validate()?;
    if n == 0 || d == 0 {
        return Err(MeeError::Parameter("copula sample needs n ≥ 1 and d ≥ 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n)
        .map(|_| {
            draw_survival_levels(family, d, &mut rng)
                .into_iter()
                .map(|v| 1.0 - v)
                .collect()
        })
        .collect())
}

pub fn generate_dataset(model: &ConditionalModel, n: usize, seed: u64) -> Result<Sample> {
    model.validate()?;
    if n == 0 {
        return Err(MeeError::Parameter("sample size must be at least 1".into()));
    }
    let d = model.d();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Vec::with_capacity(n * d);
    let mut ys = Vec::with_capacity(n);
    for _ in 0..n {
        let y = model.covariate.draw(&mut rng);
        let gamma = model.gamma_at(&y)?;
        let copula = model.copula.at(&y)?;
        for (margin, v) in model.margins.iter().zip(draw_survival_levels(copula, d, &mut rng)) {
            x.push(margin.draw(gamma, v)?);
        }
        ys.push(y);
    }
    Sample::from_flat(n, d, x, ys)
}

/// `n` draws of `X | Y = y`; every row carries the covariate `y`.
pub fn sample_at(model: &ConditionalModel, y: &CovariatePoint, n: usize, seed: u64) -> Result<Sample> {
    model.validate()?;
    if n == 0 {
        return Err(MeeError::Parameter("sample size must be at least 1".into()));
    }
    let d = model.d();
    let gamma = model.gamma_at(y)?;
    let copula = model.copula.at(y)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Vec::with_capacity(n * d);
    for _ in 0..n {
        for (margin, v) in model.margins.iter().zip(draw_survival_levels(copula, d, &mut rng)) {
            x.push(margin.draw(gamma, v)?);
        }
    }
    Sample::from_flat(n, d, x, vec![y.clone(); n])
}

/// True `ξ(y)` with the closed-form tail dependence of the model's copula.
pub fn xi_true(model: &ConditionalModel, y: &CovariatePoint) -> Result<XiEstimate> {
    let at = model.at(y)?;
    XiEstimate::closed_form(at.gamma, at.c, at.copula)
}

/// Independence root `(γ/(d(1-γ)), 1, …, 1)`.
pub fn independence_root(gamma: f64, d: usize) -> ThetaVector {
    ThetaVector::symmetric(gamma / (d as f64 * (1.0 - gamma)), d)
}

/// Comonotone root `(γ/(1-γ), 1, …, 1)`.
pub fn comonotone_root(gamma: f64, d: usize) -> ThetaVector {
    ThetaVector::symmetric(gamma / (1.0 - gamma), d)
}

/// Closed-form Θ* for equal margins under independence or comonotonicity.
pub fn theta_star_analytic(model: &ConditionalModel, y: &CovariatePoint) -> Result<Option<ThetaVector>> {
    let at = model.at(y)?;
    if at.c.iter().any(|c| (c - 1.0).abs() > 1e-12) {
        return Ok(None);
    }
    let d = model.d();
    Ok(match at.copula {
        CopulaFamily::Independence => Some(independence_root(at.gamma, d)),
        CopulaFamily::Comonotone => Some(comonotone_root(at.gamma, d)),
        CopulaFamily::SurvivalClayton { .. } => None,
    })
}

/// Starting points: both analytic roots, their geometric mean, and the
/// independence root adjusted for unequal tail ratios.
pub fn default_starts(gamma: f64, c: &[f64], bounds: &SearchBox) -> Vec<Vec<f64>> {
    let d = c.len();
    let indep = independence_root(gamma, d).to_vec();
    let comon = comonotone_root(gamma, d).to_vec();
    let middle: Vec<f64> = indep.iter().zip(&comon).map(|(a, b)| (a * b).sqrt()).collect();
    let exponent = gamma / (1.0 - gamma);
    let betas: Vec<f64> = c.iter().map(|cj| cj.powf(exponent)).collect();
    let total: f64 = betas.iter().sum();
    let mut adjusted = vec![exponent / total];
    adjusted.extend_from_slice(&betas[1..]);
    let mut starts: Vec<Vec<f64>> = Vec::new();
    for s in [indep, comon, middle, adjusted] {
        let p = bounds.projected(&s);
        if p.iter().all(|v| v.is_finite()) && !starts.contains(&p) {
            starts.push(p);
        }
    }
    starts
}

/// Numerical Θ*: multi-start minimization of the true loss; the returned point
/// has loss at most `1e-12`.
pub fn theta_star_reference(xi: &XiEstimate, bounds: &SearchBox) -> Result<ThetaVector> {
    let q = QuadratureConfig {
        abs_tol: 1e-13,
        rel_tol: 1e-11,
        ..QuadratureConfig::default()
    };
    let d = xi.d();
    if bounds.dim() != d {
        return Err(MeeError::Dimension {
            expected: d,
            found: bounds.dim(),
        });
    }
    let f = |v: &[f64]| loss(&ThetaVector::from_slice(v)?, xi, &q);
    let g = |v: &[f64]| loss_gradient(&ThetaVector::from_slice(v)?, xi, &q);
    let opts = OptimizerOptions {
        grad_tol: 1e-12,
        max_iter: 1000,
        ..OptimizerOptions::default()
    };
    let report = multi_start_minimize(f, g, bounds, &default_starts(xi.gamma(), xi.c(), bounds), &opts)?;
    let best = &report.best;
    if !best.converged || best.objective > 1e-12 {
        return Err(MeeError::Optimization(format!(
            "no start reached a root (best loss {:e}, converged: {})",
            best.objective, best.converged
        )));
    }
    ThetaVector::from_slice(&best.minimizer)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn families() -> Vec<MarginalFamily> {
        vec![
            MarginalFamily::Lomax { gamma: 0.4, scale: 2.0 },
            MarginalFamily::Burr { tau: 2.0, lambda: 0.75 },
            MarginalFamily::Frechet { gamma: 0.3 },
            MarginalFamily::HallWeiss { alpha: 2.5, rho: -1.0 },
        ]
    }

    #[test]
    fn inverse_survival_examples() {
        let lomax = MarginalFamily::Lomax { gamma: 1.0, scale: 1.0 };
        assert!((lomax.inverse_survival(0.25).unwrap() - 3.0).abs() < 1e-12);
        let burr = MarginalFamily::Burr { tau: 1.0, lambda: 2.0 };
        assert!((burr.inverse_survival(1.0 / 16.0).unwrap() - 3.0).abs() < 1e-12);
        for fam in families() {
            assert_eq!(fam.inverse_survival(1.0).unwrap(), fam.left_endpoint());
            assert!(fam.inverse_survival(0.0).is_err());
            assert!(fam.inverse_survival(1.5).is_err());
        }
    }

    #[test]
    fn hall_weiss_left_endpoint_has_full_survival() {
        let fam = MarginalFamily::HallWeiss { alpha: 3.0, rho: -0.5 };
        let x0 = fam.left_endpoint();
        assert!((0.5 * x0.powf(-3.0) * (1.0 + x0.powf(-0.5)) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn inverse_survival_round_trip() {
        let levels = [1e-4, 1e-3, 0.01, 0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.99];
        for fam in families() {
            for &u in &levels {
                let x = fam.inverse_survival(u).unwrap();
                assert!(
                    (fam.survival(x) - u).abs() < 1e-10,
                    "{fam:?} u={u}: F̄({x}) = {}",
                    fam.survival(x)
                );
            }
        }
    }

    #[test]
    fn tail_constants_match_survival_asymptotics() {
        for fam in families() {
            let x: f64 = 1e8;
            let ratio = fam.survival(x) * x.powf(1.0 / fam.tail_index()) / fam.tail_constant();
            assert!((ratio - 1.0).abs() < 1e-2, "{fam:?}: {ratio}");
        }
    }

    fn kendall_tau_brute_force(rows: &[Vec<f64>]) -> f64 {
        let n = rows.len();
        let mut s: i64 = 0;
        for i in 0..n {
            for j in (i + 1)..n {
                let a = (rows[i][0] - rows[j][0]) * (rows[i][1] - rows[j][1]);
                s += if a > 0.0 {
                    1
                } else if a < 0.0 {
                    -1
                } else {
                    0
                };
            }
        }
        s as f64 / (n * (n - 1) / 2) as f64
    }

    #[test]
    fn comonotone_columns_are_identical() {
        let u = sample_copula(CopulaFamily::Comonotone, 3, 100, 5).unwrap();
        assert!(u.iter().all(|r| r[0] == r[1] && r[1] == r[2]));
    }

    #[test]
    fn kendall_tau_of_copula_samples() {
        let indep = sample_copula(CopulaFamily::Independence, 2, 50_000, 11).unwrap();
        assert!(kendall_tau_brute_force(&indep).abs() <= 0.02);
        let clayton = sample_copula(CopulaFamily::SurvivalClayton { theta: 2.0 }, 2, 50_000, 12).unwrap();
        assert!((kendall_tau_brute_force(&clayton) - 0.5).abs() <= 0.02);
    }

    #[test]
    fn copula_margins_are_uniform() {
        let n = 10_000;
        let bound = 1.36 / (n as f64).sqrt() * 1.5;
        for fam in [
            CopulaFamily::Independence,
            CopulaFamily::Comonotone,
            CopulaFamily::SurvivalClayton { theta: 1.5 },
        ] {
            let u = sample_copula(fam, 2, n, 3).unwrap();
            for j in 0..2 {
                let mut col: Vec<f64> = u.iter().map(|r| r[j]).collect();
                col.sort_by(f64::total_cmp);
                let ks = col
                    .iter()
                    .enumerate()
                    .map(|(i, &v)| {
                        (v - i as f64 / n as f64)
                            .abs()
                            .max(((i + 1) as f64 / n as f64 - v).abs())
                    })
                    .fold(0.0, f64::max);
                assert!(ks <= bound, "{fam:?} column {j}: KS = {ks}");
                assert!(col[0] > 0.0 && col[n - 1] < 1.0);
            }
        }
    }

    #[test]
    fn clayton_rejects_nonpositive_theta() {
        assert!(sample_copula(CopulaFamily::SurvivalClayton { theta: 0.0 }, 2, 10, 1).is_err());
    }

    #[test]
    fn dataset_shape_and_determinism() {
        let model = ConditionalModel {
            margins: vec![MarginModel::lomax(1.0), MarginModel::lomax(2.0)],
            gamma: AffineParam {
                intercept: 0.5,
                slope: 0.2,
            },
            gamma_clip: (0.2, 0.8),
            copula: CopulaSpec::SurvivalClayton {
                theta: AffineParam {
                    intercept: 1.0,
                    slope: 0.5,
                },
            },
            covariate: CovariateProcess::default(),
        };
        let a = generate_dataset(&model, 300, 9).unwrap();
        assert_eq!((a.n(), a.d(), a.p()), (300, 2, 100));
        let b = generate_dataset(&model, 300, 9).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, generate_dataset(&model, 300, 10).unwrap());
    }

    #[test]
    fn fixed_covariate_sample_has_lomax_margins() {
        let model = ConditionalModel::lomax(0.5, &[1.0, 2.0], CopulaSpec::Independence);
        let y = model.covariate.center();
        let s = sample_at(&model, &y, 20_000, 4).unwrap();
        assert!(s.covariates().iter().all(|c| c == &y));
        // P(X₂ > 2 t) = (1 + t)^{-2} for scale 2 and γ = 1/2
        let frac = s.column(1).iter().filter(|&&v| v > 2.0).count() as f64 / 20_000.0;
        assert!((frac - 0.25).abs() < 0.02, "{frac}");
    }

    #[test]
    fn unreachable_tail_index_is_a_model_error() {
        let mut model = ConditionalModel::lomax(0.5, &[1.0, 1.0], CopulaSpec::Independence);
        model.gamma = AffineParam::constant(1.2);
        model.gamma_clip = (0.0, 2.0);
        assert!(matches!(generate_dataset(&model, 10, 1), Err(MeeError::Model(_))));
    }

    #[test]
    fn equivalent_tails_ratio_for_lomax_scales() {
        let model = ConditionalModel::lomax(0.5, &[1.0, 2.0], CopulaSpec::Independence);
        let at = model.at(&model.covariate.center()).unwrap();
        assert!((at.c[1] - 4.0).abs() < 1e-12);
        // quantile-ratio estimate at a high level: c₂ ≈ (q₂/q₁)^{1/γ}
        let s = generate_dataset(&model, 50_000, 21).unwrap();
        let q = |j: usize| {
            let mut col = s.column(j);
            col.sort_by(f64::total_cmp);
            col[(0.995 * 50_000.0) as usize]
        };
        let est = (q(1) / q(0)).powf(2.0);
        assert!((est - 4.0).abs() / 4.0 < 0.1, "{est}");
    }

    #[test]
    fn analytic_roots() {
        let y = CovariatePoint::constant(100, 0.0);
        let m = ConditionalModel::lomax(0.5, &[1.0, 1.0], CopulaSpec::Independence);
        assert_eq!(
            theta_star_analytic(&m, &y).unwrap(),
            Some(ThetaVector::new(0.5, vec![1.0]).unwrap())
        );
        let m = ConditionalModel::lomax(0.5, &[1.0, 1.0], CopulaSpec::Comonotone);
        assert_eq!(
            theta_star_analytic(&m, &y).unwrap(),
            Some(ThetaVector::new(1.0, vec![1.0]).unwrap())
        );
        let m = ConditionalModel::lomax(
            0.5,
            &[1.0, 1.0],
            CopulaSpec::SurvivalClayton {
                theta: AffineParam::constant(1.0),
            },
        );
        assert_eq!(theta_star_analytic(&m, &y).unwrap(), None);
    }

    #[test]
    fn reference_matches_analytic_roots() {
        let y = CovariatePoint::constant(100, 0.0);
        let bounds = SearchBox::uniform(2, 1e-3, 1e3).unwrap();
        for copula in [CopulaSpec::Independence, CopulaSpec::Comonotone] {
            let m = ConditionalModel::lomax(0.5, &[1.0, 1.0], copula);
            let xi = xi_true(&m, &y).unwrap();
            let num = theta_star_reference(&xi, &bounds).unwrap();
            let exact = theta_star_analytic(&m, &y).unwrap().unwrap();
            assert!(num.l1_distance(&exact) < 1e-6, "{copula:?}: {num:?}");
            assert!(loss(&num, &xi, &QuadratureConfig::default()).unwrap() <= 1e-12);
        }
    }

    #[test]
    fn fourier_curve_mean_is_intercept() {
        let y = CovariateProcess::fourier_curve(100, 0.7, -0.3, 0.25);
        assert!((y.mean() - 0.25).abs() < 1e-14);
    }
}
