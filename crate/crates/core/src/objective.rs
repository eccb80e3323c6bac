//! The φ-system whose root characterizes extreme multivariate expectiles,
//! its squared-norm loss with analytic gradient, the direct empirical
//! expectile, and assembly of the expectile from the system's solution.

use serde::{Deserialize, Serialize};

use crate::covariate::WeightVector;
use crate::dependence::{CopulaFamily, LambdaFunction};
use crate::error::{MeeError, Result};
use crate::optimizer::{minimize_box, OptimizerOptions, SearchBox};
use crate::quadrature::{integrate_from_zero, QuadratureConfig};
use crate::sample::Sample;

/// `Θ = (η, β₂, …, β_d)`; `β₁ ≡ 1` is implicit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaVector {
    pub eta: f64,
    pub betas: Vec<f64>,
}

impl ThetaVector {
    pub fn new(eta: f64, betas: Vec<f64>) -> Result<Self> {
        let theta = ThetaVector { eta, betas };
        theta.validate()?;
        Ok(theta)
    }

    pub fn from_slice(v: &[f64]) -> Result<Self> {
        match v.split_first() {
            Some((&eta, betas)) => Self::new(eta, betas.to_vec()),
            None => Err(MeeError::Dimension { expected: 1, found: 0 }),
        }
    }

    pub fn symmetric(eta: f64, d: usize) -> Self {
        ThetaVector {
            eta,
            betas: vec![1.0; d.saturating_sub(1)],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if std::iter::once(&self.eta)
            .chain(&self.betas)
            .any(|v| !(v.is_finite() && *v > 0.0))
        {
            return Err(MeeError::Domain(format!(
                "Θ must be strictly positive, got {:?}",
                self.to_vec()
            )));
        }
        Ok(())
    }

    pub fn d(&self) -> usize {
        self.betas.len() + 1
    }

    /// `β_k` with 0-based `k` (so `beta(0) = 1`).
    pub fn beta(&self, k: usize) -> f64 {
        if k == 0 {
            1.0
        } else {
            self.betas[k - 1]
        }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        std::iter::once(self.eta).chain(self.betas.iter().copied()).collect()
    }

    pub fn l1_distance(&self, other: &ThetaVector) -> f64 {
        self.to_vec()
            .iter()
            .zip(other.to_vec())
            .map(|(a, b)| (a - b).abs())
            .sum()
    }
}

/// Plug-in vector `(γ, c₂, …, c_d, λ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XiEstimate {
    gamma: f64,
    c: Vec<f64>,
    /// Row-major `d × d`; entry `(j, k)` is `λ_{j,k}`, diagonal unused.
    lambda: Vec<LambdaFunction>,
}

impl XiEstimate {
    pub fn new<F>(gamma: f64, c: Vec<f64>, mut lambda: F) -> Result<Self>
    where
        F: FnMut(usize, usize) -> Result<LambdaFunction>,
    {
        let d = c.len();
        if d < 2 {
            return Err(MeeError::Dimension { expected: 2, found: d });
        }
        check_gamma(gamma)?;
        if c.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(MeeError::Parameter(format!("tail ratios must be positive: {c:?}")));
        }
        if (c[0] - 1.0).abs() > 1e-12 {
            return Err(MeeError::Parameter(format!("c₁ must equal 1, got {}", c[0])));
        }
        let mut table = Vec::with_capacity(d * d);
        for j in 0..d {
            for k in 0..d {
                table.push(if j == k { LambdaFunction::zero() } else { lambda(j, k)? });
            }
        }
        Ok(XiEstimate {
            gamma,
            c,
            lambda: table,
        })
    }

    /// Every pair shares the same closed-form dependence.
    pub fn closed_form(gamma: f64, c: Vec<f64>, family: CopulaFamily) -> Result<Self> {
        family.validate()?;
        Self::new(gamma, c, |_, _| Ok(LambdaFunction::ClosedForm(family)))
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    pub fn d(&self) -> usize {
        self.c.len()
    }

    pub fn lambda(&self, j: usize, k: usize) -> &LambdaFunction {
        &self.lambda[j * self.d() + k]
    }

    /// Copy with margins `a` and `b` exchanged.
    pub fn swap_margins(&self, a: usize, b: usize) -> Self {
        let d = self.d();
        let map = |i: usize| {
            if i == a {
                b
            } else if i == b {
                a
            } else {
                i
            }
        };
        let mut c = self.c.clone();
        c.swap(a, b);
        let lambda = (0..d * d)
            .map(|idx| self.lambda(map(idx / d), map(idx % d)).clone())
            .collect();
        XiEstimate {
            gamma: self.gamma,
            c,
            lambda,
        }
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma >= 1.0 {
        return Err(MeeError::InfiniteMean { gamma });
    }
    if !(gamma > 0.0) {
        return Err(MeeError::Parameter(format!("tail index must be positive, got {gamma}")));
    }
    Ok(())
}

/// `∫_lower^∞ λ((c_j/c_k) t^{-1/γ}, 1) dt`, evaluated in the substituted form
/// `γ (c_j/c_k)^γ ∫_0^M λ(u, 1) u^{-(γ+1)} du` with `M = (c_j/c_k) lower^{-1/γ}`.
pub fn tail_integral(
    lambda: &LambdaFunction,
    gamma: f64,
    cj: f64,
    ck: f64,
    lower: f64,
    q: &QuadratureConfig,
) -> Result<f64> {
    tail_integral_impl(lambda, gamma, cj, ck, lower, q, false)
}

/// Same as [`tail_integral`] but every closed-form family goes through the
/// graded-mesh quadrature.
pub fn tail_integral_quadrature(
    lambda: &LambdaFunction,
    gamma: f64,
    cj: f64,
    ck: f64,
    lower: f64,
    q: &QuadratureConfig,
) -> Result<f64> {
    tail_integral_impl(lambda, gamma, cj, ck, lower, q, true)
}

fn tail_integral_impl(
    lambda: &LambdaFunction,
    gamma: f64,
    cj: f64,
    ck: f64,
    lower: f64,
    q: &QuadratureConfig,
    numeric: bool,
) -> Result<f64> {
    check_gamma(gamma)?;
    if !(lower > 0.0) {
        return Err(MeeError::Domain(format!(
            "integral lower bound {lower} must be positive"
        )));
    }
    if !(cj > 0.0 && ck > 0.0) {
        return Err(MeeError::Parameter("tail ratios must be positive".into()));
    }
    if lambda.is_identically_zero() {
        return Ok(0.0);
    }
    let ratio = cj / ck;
    let upper = ratio * lower.powf(-1.0 / gamma);
    let factor = gamma * ratio.powf(gamma);
    let value = match lambda {
        LambdaFunction::Empirical(e) => e.weighted_integral(gamma, upper),
        LambdaFunction::ClosedForm(CopulaFamily::Comonotone) if !numeric => {
            // λ(u, 1) = min(u, 1)
            if upper <= 1.0 {
                upper.powf(1.0 - gamma) / (1.0 - gamma)
            } else {
                1.0 / (1.0 - gamma) + (1.0 - upper.powf(-gamma)) / gamma
            }
        }
        LambdaFunction::ClosedForm(family) => {
            let f = |u: f64| {
                if u <= 0.0 {
                    0.0
                } else {
                    lambda.section(u) * u.powf(-(gamma + 1.0))
                }
            };
            integrate_from_zero(&f, upper, family.breakpoints(), q)?.value
        }
    };
    let out = factor * value;
    if !out.is_finite() {
        return Err(MeeError::NonFinite("tail integral".into()));
    }
    Ok(out)
}

fn check_theta(theta: &ThetaVector, xi: &XiEstimate) -> Result<()> {
    if theta.d() != xi.d() {
        return Err(MeeError::Dimension {
            expected: xi.d(),
            found: theta.d(),
        });
    }
    theta.validate()
}

/// Components of the φ-vector; φ = 0 characterizes the limiting Θ.
pub fn phi(theta: &ThetaVector, xi: &XiEstimate, q: &QuadratureConfig) -> Result<Vec<f64>> {
    check_theta(theta, xi)?;
    let d = xi.d();
    let gamma = xi.gamma;
    let constant = gamma / (1.0 - gamma);
    let beta_sum: f64 = (0..d).map(|k| theta.beta(k)).sum();
    let mut out = Vec::with_capacity(d);
    for k in 0..d {
        let bk = theta.beta(k);
        let mut v = constant - theta.eta * bk.powf(1.0 / gamma - 1.0) * beta_sum / xi.c[k];
        for j in (0..d).filter(|&j| j != k) {
            v += tail_integral(xi.lambda(j, k), gamma, xi.c[j], xi.c[k], theta.beta(j) / bk, q)?;
        }
        if !v.is_finite() {
            return Err(MeeError::NonFinite(format!("φ_{}", k + 1)));
        }
        out.push(v);
    }
    Ok(out)
}

/// `½ Σ_k φ_k²`.
pub fn loss(theta: &ThetaVector, xi: &XiEstimate, q: &QuadratureConfig) -> Result<f64> {
    Ok(0.5 * phi(theta, xi, q)?.iter().map(|v| v * v).sum::<f64>())
}

/// Jacobian `∂φ_k/∂Θ_r`, row `k`, column `r` (`r = 0` is η, `r >= 1` is β_{r+1}).
pub fn phi_jacobian(theta: &ThetaVector, xi: &XiEstimate) -> Result<Vec<Vec<f64>>> {
    check_theta(theta, xi)?;
    let d = xi.d();
    let gamma = xi.gamma;
    let e = 1.0 / gamma - 1.0;
    let beta_sum: f64 = (0..d).map(|k| theta.beta(k)).sum();
    let mut jac = vec![vec![0.0; d]; d];
    for k in 0..d {
        let bk = theta.beta(k);
        let ck = xi.c[k];
        let pow = bk.powf(e);
        jac[k][0] = -pow * beta_sum / ck;
        for r in 1..d {
            // second term η β_k^e S / c_k
            let mut d_a = theta.eta * pow / ck;
            if r == k {
                d_a += theta.eta * e * bk.powf(e - 1.0) * beta_sum / ck;
            }
            jac[k][r] = -d_a;
        }
        // integral terms: d/dℓ ∫_ℓ^∞ … = -λ((c_j/c_k) ℓ^{-1/γ}, 1)
        for j in (0..d).filter(|&j| j != k) {
            let bj = theta.beta(j);
            let ell = bj / bk;
            let at_lower = xi.lambda(j, k).section(xi.c[j] / ck * ell.powf(-1.0 / gamma));
            if at_lower == 0.0 {
                continue;
            }
            if j >= 1 {
                jac[k][j] -= at_lower / bk;
            }
            if k >= 1 {
                jac[k][k] += at_lower * bj / (bk * bk);
            }
        }
    }
    if jac.iter().flatten().any(|v| !v.is_finite()) {
        return Err(MeeError::NonFinite("φ Jacobian".into()));
    }
    Ok(jac)
}

/// `∇_Θ L = Σ_k φ_k ∇φ_k`.
pub fn loss_gradient(theta: &ThetaVector, xi: &XiEstimate, q: &QuadratureConfig) -> Result<Vec<f64>> {
    let phi_v = phi(theta, xi, q)?;
    let jac = phi_jacobian(theta, xi)?;
    let d = xi.d();
    Ok((0..d).map(|r| (0..d).map(|k| phi_v[k] * jac[k][r]).sum()).collect())
}

/// Scoring function of the L¹ expectile and its gradient in `x`.
fn expectile_score(sample: &Sample, w: &[f64], alpha: f64, x: &[f64], grad: Option<&mut [f64]>) -> f64 {
    let d = sample.d();
    let mut total = 0.0;
    let mut g = vec![0.0; d];
    for (i, &wi) in w.iter().enumerate() {
        if wi == 0.0 {
            continue;
        }
        let row = sample.row(i);
        let mut pos = 0.0;
        let mut neg = 0.0;
        for j in 0..d {
            let diff = row[j] - x[j];
            if diff > 0.0 {
                pos += diff;
            } else {
                neg -= diff;
            }
        }
        total += wi * (alpha * pos * pos + (1.0 - alpha) * neg * neg);
        for j in 0..d {
            if row[j] > x[j] {
                g[j] -= 2.0 * wi * alpha * pos;
            } else if row[j] < x[j] {
                g[j] += 2.0 * wi * (1.0 - alpha) * neg;
            }
        }
    }
    if let Some(out) = grad {
        out.copy_from_slice(&g);
    }
    total
}

/// Kernel-weighted empirical L¹-expectile: the minimizer over `x ∈ R^d` of
/// `Σ_i w_i [α (Σ_j (X_ij - x_j)₊)² + (1-α) (Σ_j (X_ij - x_j)₋)²]`.
pub fn direct_empirical_expectile(sample: &Sample, w: &WeightVector, alpha: f64) -> Result<Vec<f64>> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(MeeError::Parameter(format!(
            "expectile level must lie in (0,1), got {alpha}"
        )));
    }
    if w.len() != sample.n() {
        return Err(MeeError::Dimension {
            expected: sample.n(),
            found: w.len(),
        });
    }
    if w.effective_count() == 0 {
        return Err(MeeError::Parameter("weight vector has no positive entry".into()));
    }
    let d = sample.d();
    let ws = w.as_slice();
    let mut mean = vec![0.0; d];
    let mut spread: f64 = 0.0;
    for (i, &wi) in ws.iter().enumerate() {
        for j in 0..d {
            mean[j] += wi * sample.value(i, j);
        }
    }
    for (i, &wi) in ws.iter().enumerate() {
        if wi > 0.0 {
            for j in 0..d {
                spread = spread.max((sample.value(i, j) - mean[j]).abs());
            }
        }
    }
    if spread == 0.0 {
        return Ok(mean);
    }
    // Work in standardized coordinates so the tolerances are scale-free.
    let f = |z: &[f64]| -> Result<f64> {
        let x: Vec<f64> = z.iter().zip(&mean).map(|(zi, m)| m + spread * zi).collect();
        Ok(expectile_score(sample, ws, alpha, &x, None) / (spread * spread))
    };
    let g = |z: &[f64]| -> Result<Vec<f64>> {
        let x: Vec<f64> = z.iter().zip(&mean).map(|(zi, m)| m + spread * zi).collect();
        let mut grad = vec![0.0; d];
        expectile_score(sample, ws, alpha, &x, Some(&mut grad));
        Ok(grad.iter().map(|v| v / spread).collect())
    };
    let opts = OptimizerOptions {
        grad_tol: 1e-10,
        max_iter: 2000,
        ..OptimizerOptions::default()
    };
    let report = minimize_box(f, g, &SearchBox::unbounded(d), &vec![0.0; d], &opts)?;
    let x: Vec<f64> = report
        .minimizer
        .iter()
        .zip(&mean)
        .map(|(zi, m)| m + spread * zi)
        .collect();
    if report.converged || kink_stationary(sample, ws, alpha, &x, spread) {
        Ok(x)
    } else {
        Err(MeeError::Optimization(format!(
            "direct expectile did not converge (projected gradient {:e} after {} iterations)",
            report.projected_gradient_norm, report.iterations
        )))
    }
}

/// First-order check at a point where the empirical score may have a kink:
/// along every coordinate the one-sided slopes bracket zero.
fn kink_stationary(sample: &Sample, w: &[f64], alpha: f64, x: &[f64], spread: f64) -> bool {
    let d = x.len();
    let tol = 1e-7 * spread;
    let step = 1e-9 * spread;
    let mut g = vec![0.0; d];
    (0..d).all(|k| {
        let mut probe = x.to_vec();
        probe[k] = x[k] + step;
        expectile_score(sample, w, alpha, &probe, Some(&mut g));
        let right = g[k];
        probe[k] = x[k] - step;
        expectile_score(sample, w, alpha, &probe, Some(&mut g));
        let left = g[k];
        left <= tol && right >= -tol
    })
}

/// `q̂₁ · η^γ · (1, β₂, …, β_d)`.
pub fn assemble_expectile(q1_hat: f64, theta: &ThetaVector, gamma: f64) -> Result<Vec<f64>> {
    if !(q1_hat > 0.0 && q1_hat.is_finite()) {
        return Err(MeeError::Domain(format!(
            "first-margin quantile must be positive, got {q1_hat}"
        )));
    }
    theta.validate()?;
    check_gamma(gamma)?;
    let scale = q1_hat * theta.eta.powf(gamma);
    Ok((0..theta.d()).map(|k| scale * theta.beta(k)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    const CLAYTON1: CopulaFamily = CopulaFamily::SurvivalClayton { theta: 1.0 };

    fn q() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    #[test]
    fn tail_integral_closed_forms() {
        let z = tail_integral(&LambdaFunction::zero(), 0.5, 1.0, 1.0, 1.0, &q()).unwrap();
        assert_eq!(z, 0.0);
        let c = tail_integral(
            &LambdaFunction::ClosedForm(CopulaFamily::Comonotone),
            0.5,
            1.0,
            1.0,
            1.0,
            &q(),
        )
        .unwrap();
        assert!((c - 1.0).abs() < 1e-8, "{c}");
        let cl = tail_integral(&LambdaFunction::ClosedForm(CLAYTON1), 0.5, 1.0, 1.0, 1.0, &q()).unwrap();
        assert!((cl - FRAC_PI_4).abs() / FRAC_PI_4 < 1e-8, "{cl}");
    }

    #[test]
    fn tail_integral_rejects_infinite_mean() {
        let err = tail_integral(&LambdaFunction::ClosedForm(CLAYTON1), 1.0, 1.0, 1.0, 1.0, &q()).unwrap_err();
        assert!(matches!(err, MeeError::InfiniteMean { .. }));
    }

    #[test]
    fn tail_integral_comonotone_general_lower() {
        // ∫_ℓ^∞ min(r t^{-1/γ}, 1) dt with r = c_j/c_k: kink at t* = r^γ
        for (gamma, r, ell) in [
            (0.3_f64, 2.0_f64, 0.5_f64),
            (0.7, 0.5, 3.0),
            (0.5, 1.5, 1e-3),
            (0.4, 1.0, 50.0),
        ] {
            let t_star: f64 = r.powf(gamma);
            let tail = |a: f64| r * a.powf(1.0 - 1.0 / gamma) / (1.0 / gamma - 1.0);
            let exact = if ell >= t_star {
                tail(ell)
            } else {
                (t_star - ell) + tail(t_star)
            };
            let got = tail_integral(
                &LambdaFunction::ClosedForm(CopulaFamily::Comonotone),
                gamma,
                r,
                1.0,
                ell,
                &q(),
            )
            .unwrap();
            assert!(
                (got - exact).abs() / exact < 1e-8,
                "γ={gamma} r={r} ℓ={ell}: {got} vs {exact}"
            );
        }
    }

    #[test]
    fn comonotone_exact_branch_matches_quadrature() {
        let com = LambdaFunction::ClosedForm(CopulaFamily::Comonotone);
        for (gamma, r, ell) in [(0.3, 2.0, 0.5), (0.7, 0.5, 3.0), (0.5, 1.0, 1.0), (0.45, 1.3, 1e-4)] {
            let a = tail_integral(&com, gamma, r, 1.0, ell, &q()).unwrap();
            let b = tail_integral_quadrature(&com, gamma, r, 1.0, ell, &q()).unwrap();
            assert!((a - b).abs() / a < 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    fn phi_examples() {
        let indep = XiEstimate::closed_form(0.5, vec![1.0, 1.0], CopulaFamily::Independence).unwrap();
        let p = phi(&ThetaVector::new(0.5, vec![1.0]).unwrap(), &indep, &q()).unwrap();
        assert!(p.iter().all(|v| v.abs() < 1e-15));
        let com = XiEstimate::closed_form(0.5, vec![1.0, 1.0], CopulaFamily::Comonotone).unwrap();
        let p = phi(&ThetaVector::new(1.0, vec![1.0]).unwrap(), &com, &q()).unwrap();
        assert!(p.iter().all(|v| v.abs() < 1e-9), "{p:?}");
        // η → 0 leaves only the constant term
        let p = phi(&ThetaVector::new(1e-300, vec![1.0]).unwrap(), &indep, &q()).unwrap();
        assert!(p.iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn loss_examples() {
        let indep = XiEstimate::closed_form(0.5, vec![1.0, 1.0], CopulaFamily::Independence).unwrap();
        assert_eq!(
            loss(&ThetaVector::new(0.5, vec![1.0]).unwrap(), &indep, &q()).unwrap(),
            0.0
        );
        let l = loss(&ThetaVector::new(1e-300, vec![1.0]).unwrap(), &indep, &q()).unwrap();
        assert!((l - 1.0).abs() < 1e-12);
        assert!(ThetaVector::new(0.0, vec![1.0]).is_err());
    }

    #[test]
    fn gradient_examples() {
        let indep = XiEstimate::closed_form(0.5, vec![1.0, 1.0], CopulaFamily::Independence).unwrap();
        let g = loss_gradient(&ThetaVector::new(1.0, vec![1.0]).unwrap(), &indep, &q()).unwrap();
        assert!((g[0] - 4.0).abs() < 1e-12, "{g:?}");
        let g = loss_gradient(&ThetaVector::new(0.5, vec![1.0]).unwrap(), &indep, &q()).unwrap();
        assert!(g.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn swapping_symmetric_margins_permutes_phi() {
        let xi = XiEstimate::closed_form(0.4, vec![1.0, 1.0, 1.0], CLAYTON1).unwrap();
        let theta = ThetaVector::new(0.8, vec![1.3, 0.7]).unwrap();
        let swapped_theta = ThetaVector::new(0.8, vec![0.7, 1.3]).unwrap();
        let a = phi(&theta, &xi, &q()).unwrap();
        let b = phi(&swapped_theta, &xi.swap_margins(1, 2), &q()).unwrap();
        assert!((a[0] - b[0]).abs() < 1e-9);
        assert!((a[1] - b[2]).abs() < 1e-9);
        assert!((a[2] - b[1]).abs() < 1e-9);
    }

    fn univariate(values: &[f64]) -> Sample {
        Sample::with_constant_covariate(values.iter().map(|&v| vec![v]).collect()).unwrap()
    }

    #[test]
    fn direct_expectile_examples() {
        let s = univariate(&[1.0, 2.0, 4.0, 9.0]);
        let w = WeightVector::from_raw(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let e = direct_empirical_expectile(&s, &w, 0.5).unwrap();
        assert!((e[0] - (0.1 + 0.4 + 1.2 + 3.6)).abs() < 1e-8, "{e:?}");
        let s = univariate(&[0.0, 2.0]);
        let e = direct_empirical_expectile(&s, &WeightVector::uniform(2), 0.75).unwrap();
        assert!((e[0] - 1.5).abs() < 1e-8, "{e:?}");
    }

    #[test]
    fn direct_expectile_translation_and_scale() {
        let rows: Vec<Vec<f64>> = (0..60)
            .map(|i| {
                let t = i as f64;
                vec![
                    (t * 0.37).sin() * 3.0 + t * 0.1,
                    (t * 1.3).cos() * 2.0 + (t * 0.05).powi(2),
                ]
            })
            .collect();
        let s = Sample::with_constant_covariate(rows.clone()).unwrap();
        let w = WeightVector::uniform(60);
        let base = direct_empirical_expectile(&s, &w, 0.8).unwrap();
        let shifted_rows = rows.iter().map(|r| vec![r[0] + 5.0, r[1] - 2.0]).collect();
        let shifted = Sample::with_constant_covariate(shifted_rows).unwrap();
        let e = direct_empirical_expectile(&shifted, &w, 0.8).unwrap();
        assert!((e[0] - base[0] - 5.0).abs() < 1e-6 && (e[1] - base[1] + 2.0).abs() < 1e-6);
        let e = direct_empirical_expectile(&s.scaled(3.0), &w, 0.8).unwrap();
        assert!((e[0] - 3.0 * base[0]).abs() < 1e-6 && (e[1] - 3.0 * base[1]).abs() < 1e-6);
    }

    #[test]
    fn assemble_examples() {
        let e = assemble_expectile(10.0, &ThetaVector::new(1.0, vec![2.0]).unwrap(), 0.5).unwrap();
        assert_eq!(e, vec![10.0, 20.0]);
        let e = assemble_expectile(10.0, &ThetaVector::new(4.0, vec![1.0]).unwrap(), 0.5).unwrap();
        assert_eq!(e, vec![20.0, 20.0]);
        let bad = ThetaVector {
            eta: 0.0,
            betas: vec![1.0],
        };
        assert!(assemble_expectile(10.0, &bad, 0.5).is_err());
    }
}
