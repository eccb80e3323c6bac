//! Conditional empirical copula, empirical stable tail dependence and upper
//! tail dependence functions, and closed-form tail dependence oracles.

use serde::{Deserialize, Serialize};

use crate::covariate::WeightVector;
use crate::empirical::{pseudo_obs, PseudoObs, LEVEL_EPS};
use crate::error::{MeeError, Result};
use crate::sample::Sample;

/// Dependence structures with a closed-form upper tail dependence function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum CopulaFamily {
    SurvivalClayton { theta: f64 },
    Comonotone,
    Independence,
}

impl CopulaFamily {
    pub fn from_name(name: &str, param: Option<f64>) -> Result<Self> {
        match name {
            "survival_clayton" | "clayton" => {
                let theta = param.ok_or_else(|| MeeError::Parameter("survival Clayton needs θ".into()))?;
                let fam = CopulaFamily::SurvivalClayton { theta };
                fam.validate()?;
                Ok(fam)
            }
            "comonotone" => Ok(CopulaFamily::Comonotone),
            "independence" => Ok(CopulaFamily::Independence),
            other => Err(MeeError::Unsupported(format!("copula family `{other}`"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            CopulaFamily::SurvivalClayton { theta } if !(theta > 0.0 && theta.is_finite()) => {
                Err(MeeError::Parameter(format!("Clayton θ must be positive, got {theta}")))
            }
            _ => Ok(()),
        }
    }

    /// Kinks of `u ↦ λ(u, 1)` on `(0, ∞)`.
    pub fn breakpoints(&self) -> &'static [f64] {
        match self {
            CopulaFamily::Comonotone => &[1.0],
            _ => &[],
        }
    }
}

/// Closed-form `λ(x₁, x₂)`.
pub fn lambda_oracle(family: CopulaFamily, x: (f64, f64)) -> Result<f64> {
    family.validate()?;
    let (a, b) = x;
    if a < 0.0 || b < 0.0 {
        return Err(MeeError::Domain(format!("tail dependence at ({a}, {b})")));
    }
    Ok(match family {
        CopulaFamily::Independence => 0.0,
        CopulaFamily::Comonotone => a.min(b),
        CopulaFamily::SurvivalClayton { theta } => {
            if a == 0.0 || b == 0.0 {
                0.0
            } else if a.is_infinite() {
                b
            } else if b.is_infinite() {
                a
            } else {
                // (a^-θ + b^-θ)^(-1/θ) = min · (1 + r^θ)^(-1/θ), r = min/max
                let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                lo * (1.0 + (lo / hi).powf(theta)).powf(-1.0 / theta)
            }
        }
    })
}

/// Intermediate sequence `k_n` with `1 < k_n < n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnConfig {
    pub k_n: usize,
}

impl KnConfig {
    pub fn new(k_n: usize, n: usize) -> Result<Self> {
        let cfg = KnConfig { k_n };
        cfg.validate(n)?;
        Ok(cfg)
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.k_n <= 1 || self.k_n >= n {
            return Err(MeeError::Parameter(format!(
                "k_n = {} is not intermediate for n = {n}",
                self.k_n
            )));
        }
        Ok(())
    }

    /// `⌈n · min(ψ̂, (nψ̂)^{-0.3})⌉`: the ball-probability choice `n ψ̂`
    /// whenever the ball is a vanishing fraction of the sample, and
    /// `⌈(nψ̂)^{0.7}⌉`-scaled otherwise (for instance an uninformative covariate
    /// where `ψ̂ = 1`).
    pub fn from_small_ball(n: usize, psi_hat: f64) -> Result<Self> {
        if !(psi_hat > 0.0) {
            return Err(MeeError::Parameter(
                "small-ball estimate is zero; no default k_n".into(),
            ));
        }
        let local = n as f64 * psi_hat;
        let fraction = psi_hat.min(local.powf(-0.3));
        let k = ((n as f64 * fraction).ceil() as usize).clamp(2, n.saturating_sub(1).max(2));
        KnConfig::new(k, n)
    }

    pub fn fraction(&self, n: usize) -> f64 {
        self.k_n as f64 / n as f64
    }
}

/// `Σ_i w_i 1{P_ij <= u, P_ik <= v}`.
pub fn cond_empirical_copula(pseudo: &PseudoObs, w: &WeightVector, j: usize, k: usize, u: f64, v: f64) -> Result<f64> {
    if j >= pseudo.d() || k >= pseudo.d() {
        return Err(MeeError::Index {
            index: j.max(k),
            len: pseudo.d(),
        });
    }
    if w.len() != pseudo.n() {
        return Err(MeeError::Dimension {
            expected: pseudo.n(),
            found: w.len(),
        });
    }
    Ok(copula_sum(pseudo, w.as_slice(), j, k, u, v))
}

#[inline]
fn copula_sum(pseudo: &PseudoObs, w: &[f64], j: usize, k: usize, u: f64, v: f64) -> f64 {
    let (u, v) = (u + LEVEL_EPS, v + LEVEL_EPS);
    let total: f64 = w
        .iter()
        .enumerate()
        .filter(|&(i, &wi)| wi > 0.0 && pseudo.get(i, j) <= u && pseudo.get(i, k) <= v)
        .map(|(_, wi)| wi)
        .sum();
    total.min(1.0)
}

/// Pseudo-observations and weights bundled for repeated tail-dependence
/// evaluations at one covariate point.
#[derive(Debug, Clone)]
pub struct TailDependence {
    pseudo: PseudoObs,
    weights: WeightVector,
    kn: KnConfig,
}

impl TailDependence {
    pub fn new(sample: &Sample, w: &WeightVector, kn: KnConfig) -> Result<Self> {
        kn.validate(sample.n())?;
        Ok(TailDependence {
            pseudo: pseudo_obs(sample, w)?,
            weights: w.clone(),
            kn,
        })
    }

    pub fn kn(&self) -> KnConfig {
        self.kn
    }

    pub fn d(&self) -> usize {
        self.pseudo.d()
    }

    /// `(n/k_n)(1 - Ĉ_{jk}(1 - (k_n/n) x₁, 1 - (k_n/n) x₂))`.
    pub fn stdf(&self, j: usize, k: usize, x: (f64, f64)) -> Result<f64> {
        let d = self.pseudo.d();
        if j >= d || k >= d {
            return Err(MeeError::Index {
                index: j.max(k),
                len: d,
            });
        }
        if x.0 < 0.0 || x.1 < 0.0 {
            return Err(MeeError::Domain(format!(
                "stable tail dependence argument ({}, {}) is negative",
                x.0, x.1
            )));
        }
        let frac = self.kn.fraction(self.pseudo.n());
        let (a, b) = (1.0 - frac * x.0, 1.0 - frac * x.1);
        if a < -LEVEL_EPS || b < -LEVEL_EPS {
            return Err(MeeError::Domain(format!(
                "(k_n/n)·max(x) = {} exceeds 1",
                frac * x.0.max(x.1)
            )));
        }
        let c = copula_sum(&self.pseudo, self.weights.as_slice(), j, k, a, b);
        Ok((1.0 - c) / frac)
    }

    /// `‖x‖₁ - L̂(x)` clamped into the Fréchet range `[0, min(x₁, x₂)]`.
    pub fn lambda(&self, j: usize, k: usize, x: (f64, f64)) -> Result<f64> {
        let raw = x.0 + x.1 - self.stdf(j, k, x)?;
        Ok(raw.clamp(0.0, x.0.min(x.1)))
    }
}

pub fn stdf_hat(sample: &Sample, w: &WeightVector, j: usize, k: usize, kn: KnConfig, x: (f64, f64)) -> Result<f64> {
    TailDependence::new(sample, w, kn)?.stdf(j, k, x)
}

pub fn lambda_hat(sample: &Sample, w: &WeightVector, j: usize, k: usize, kn: KnConfig, x: (f64, f64)) -> Result<f64> {
    TailDependence::new(sample, w, kn)?.lambda(j, k, x)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LambdaGrid {
    pub points: usize,
    /// Smallest grid abscissa; the grid is geometric on `[u_min, 1]`.
    pub u_min: f64,
}

impl Default for LambdaGrid {
    fn default() -> Self {
        LambdaGrid {
            points: 64,
            u_min: 1e-3,
        }
    }
}

impl LambdaGrid {
    pub fn abscissae(&self) -> Vec<f64> {
        let m = self.points.max(2);
        let ratio = self.u_min.ln() / (m - 1) as f64;
        let mut g: Vec<f64> = (0..m).map(|i| (ratio * (m - 1 - i) as f64).exp()).collect();
        g[m - 1] = 1.0;
        g
    }
}

/// Piecewise-linear λ̂ for one ordered pair of margins, tabulated on the two
/// unit sections `u ↦ λ̂(u, 1)` and `v ↦ λ̂(1, v)`, `u, v ∈ (0, 1]`.
/// Other arguments follow by degree-1 homogeneity, so no evaluation ever
/// pushes the empirical copula below its domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalLambda {
    grid: Vec<f64>,
    first: Vec<f64>,
    second: Vec<f64>,
}

impl EmpiricalLambda {
    pub fn estimate(td: &TailDependence, j: usize, k: usize, grid: &LambdaGrid) -> Result<Self> {
        if !(grid.u_min > 0.0 && grid.u_min < 1.0) || grid.points < 2 {
            return Err(MeeError::Parameter(
                "λ̂ grid needs u_min in (0,1) and >= 2 points".into(),
            ));
        }
        let g = grid.abscissae();
        let first = g
            .iter()
            .map(|&u| td.lambda(j, k, (u, 1.0)))
            .collect::<Result<Vec<_>>>()?;
        let second = g
            .iter()
            .map(|&v| td.lambda(j, k, (1.0, v)))
            .collect::<Result<Vec<_>>>()?;
        Ok(EmpiricalLambda { grid: g, first, second })
    }

    /// Builds directly from tabulated sections (values are clamped).
    pub fn from_sections(grid: Vec<f64>, first: Vec<f64>, second: Vec<f64>) -> Result<Self> {
        if grid.len() < 2
            || first.len() != grid.len()
            || second.len() != grid.len()
            || grid[0] <= 0.0
            || (grid[grid.len() - 1] - 1.0).abs() > 1e-15
            || grid.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(MeeError::Parameter("malformed λ̂ grid".into()));
        }
        let clamp = |vals: Vec<f64>| -> Vec<f64> { vals.iter().zip(&grid).map(|(v, g)| v.clamp(0.0, *g)).collect() };
        let first = clamp(first);
        let second = clamp(second);
        Ok(EmpiricalLambda { grid, first, second })
    }

    fn interp(&self, values: &[f64], u: f64) -> f64 {
        let g = &self.grid;
        if u <= 0.0 {
            return 0.0;
        }
        if u <= g[0] {
            return values[0] * u / g[0];
        }
        if u >= 1.0 {
            return values[g.len() - 1];
        }
        let i = g.partition_point(|&x| x <= u) - 1;
        let t = (u - g[i]) / (g[i + 1] - g[i]);
        values[i] + t * (values[i + 1] - values[i])
    }

    /// `λ̂(u, 1)`.
    pub fn section(&self, u: f64) -> f64 {
        if u <= 1.0 {
            self.interp(&self.first, u)
        } else {
            u * self.interp(&self.second, 1.0 / u)
        }
    }

    pub fn eval(&self, x: (f64, f64)) -> f64 {
        let (a, b) = x;
        if a <= 0.0 || b <= 0.0 {
            return 0.0;
        }
        b * self.section(a / b)
    }

    /// `∫_0^m λ̂(u, 1) u^{-(γ+1)} du`, exact for the piecewise-linear interpolant.
    pub fn weighted_integral(&self, gamma: f64, m: f64) -> f64 {
        if m <= 0.0 {
            return 0.0;
        }
        let g = &self.grid;
        let mut total = 0.0;
        // u ∈ (0, min(m,1)], integrand (p + q u) u^{-γ-1}
        let upper = m.min(1.0);
        total += segments(g, &self.first, 0.0, upper, |p, q, a, b| {
            let lin = q * (b.powf(1.0 - gamma) - a.powf(1.0 - gamma)) / (1.0 - gamma);
            let con = if p == 0.0 {
                0.0
            } else {
                p * (a.powf(-gamma) - b.powf(-gamma)) / gamma
            };
            lin + con
        });
        if m > 1.0 {
            // u = 1/v: ∫_{1/m}^1 μ(v) v^{γ-2} dv with μ(v) = λ̂(1, v)
            total += segments(g, &self.second, 1.0 / m, 1.0, |p, q, a, b| {
                let lin = q * (b.powf(gamma) - a.powf(gamma)) / gamma;
                let con = if p == 0.0 {
                    0.0
                } else {
                    p * (b.powf(gamma - 1.0) - a.powf(gamma - 1.0)) / (gamma - 1.0)
                };
                lin + con
            });
        }
        total
    }
}

/// Sums `piece(p, q, a, b)` over the linear pieces `p + q u` of the
/// interpolant restricted to `[lo, hi] ⊂ [0, 1]`.
fn segments<F: Fn(f64, f64, f64, f64) -> f64>(grid: &[f64], values: &[f64], lo: f64, hi: f64, piece: F) -> f64 {
    let mut total = 0.0;
    let mut knots_x = Vec::with_capacity(grid.len() + 1);
    let mut knots_y = Vec::with_capacity(grid.len() + 1);
    knots_x.push(0.0);
    knots_y.push(0.0);
    knots_x.extend_from_slice(grid);
    knots_y.extend_from_slice(values);
    for i in 0..knots_x.len() - 1 {
        let (x0, x1) = (knots_x[i], knots_x[i + 1]);
        let a = x0.max(lo);
        let b = x1.min(hi);
        if b <= a {
            continue;
        }
        let q = (knots_y[i + 1] - knots_y[i]) / (x1 - x0);
        let p = knots_y[i] - q * x0;
        total += piece(p, q, a, b);
    }
    total
}

/// Upper tail dependence function of one ordered margin pair `(j, k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaFunction {
    Empirical(EmpiricalLambda),
    ClosedForm(CopulaFamily),
}

impl LambdaFunction {
    pub fn zero() -> Self {
        LambdaFunction::ClosedForm(CopulaFamily::Independence)
    }

    /// `λ(u, 1)`.
    pub fn section(&self, u: f64) -> f64 {
        match self {
            LambdaFunction::Empirical(e) => e.section(u),
            LambdaFunction::ClosedForm(f) => lambda_oracle(*f, (u.max(0.0), 1.0)).unwrap_or(f64::NAN),
        }
    }

    pub fn eval(&self, x: (f64, f64)) -> f64 {
        match self {
            LambdaFunction::Empirical(e) => e.eval(x),
            LambdaFunction::ClosedForm(f) => lambda_oracle(*f, x).unwrap_or(f64::NAN),
        }
    }

    pub fn is_identically_zero(&self) -> bool {
        match self {
            LambdaFunction::ClosedForm(CopulaFamily::Independence) => true,
            LambdaFunction::ClosedForm(_) => false,
            LambdaFunction::Empirical(e) => e.first.iter().all(|&v| v == 0.0) && e.second.iter().all(|&v| v == 0.0),
        }
    }
}
