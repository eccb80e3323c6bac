//! Box-constrained limited-memory quasi-Newton minimizer with projected
//! Armijo backtracking, plus a multi-start driver.

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{MeeError, Result};

/// Componentwise bounds `lower ≤ x ≤ upper`; infinite bounds are allowed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl SearchBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(MeeError::Dimension {
                expected: lower.len(),
                found: upper.len(),
            });
        }
        for (l, u) in lower.iter().zip(&upper) {
            if l.is_nan() || u.is_nan() || !(l < u) {
                return Err(MeeError::Parameter(format!("invalid bounds [{l}, {u}]")));
            }
        }
        Ok(SearchBox { lower, upper })
    }

    pub fn uniform(d: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; d], vec![hi; d])
    }

    pub fn unbounded(d: usize) -> Self {
        SearchBox {
            lower: vec![f64::NEG_INFINITY; d],
            upper: vec![f64::INFINITY; d],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn project(&self, x: &mut [f64]) {
        for ((xi, l), u) in x.iter_mut().zip(&self.lower).zip(&self.upper) {
            *xi = xi.clamp(*l, *u);
        }
    }

    pub fn projected(&self, x: &[f64]) -> Vec<f64> {
        let mut out = x.to_vec();
        self.project(&mut out);
        out
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(&self.lower)
                .zip(&self.upper)
                .all(|((xi, l), u)| xi >= l && xi <= u)
    }

    /// `P(x - g) - x`; vanishes exactly at first-order stationary points.
    pub fn projected_gradient(&self, x: &[f64], g: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(g)
            .zip(self.lower.iter().zip(&self.upper))
            .map(|((xi, gi), (l, u))| (xi - gi).clamp(*l, *u) - xi)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerOptions {
    pub memory: usize,
    pub grad_tol: f64,
    pub max_iter: usize,
    pub restarts: usize,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        OptimizerOptions {
            memory: 7,
            grad_tol: 1e-8,
            max_iter: 500,
            restarts: 4,
        }
    }
}

impl OptimizerOptions {
    pub fn validate(&self) -> Result<()> {
        if self.memory == 0 || self.max_iter == 0 || !(self.grad_tol > 0.0) {
            return Err(MeeError::Parameter(format!("invalid optimizer options {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerReport {
    pub minimizer: Vec<f64>,
    pub objective: f64,
    pub projected_gradient_norm: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    pub restarts_used: usize,
    /// Objective at every accepted iterate, starting point included.
    pub trace: Vec<f64>,
}

const ARMIJO_C1: f64 = 1e-4;
const CURVATURE_EPS: f64 = 1e-10;
const MAX_BACKTRACKS: usize = 60;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn finite_value(v: f64, what: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(MeeError::NonFinite(format!("{what} = {v}")))
    }
}

fn finite_vec(v: Vec<f64>, d: usize) -> Result<Vec<f64>> {
    if v.len() != d {
        return Err(MeeError::Dimension {
            expected: d,
            found: v.len(),
        });
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(MeeError::NonFinite(format!("gradient {v:?}")));
    }
    Ok(v)
}

/// Two-loop recursion applied to `g` restricted to the free variables.
fn two_loop(g: &[f64], free: &[bool], memory: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q: Vec<f64> = g.iter().zip(free).map(|(v, &f)| if f { *v } else { 0.0 }).collect();
    let mut alphas = Vec::with_capacity(memory.len());
    for (s, y, rho) in memory.iter().rev() {
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some((s, y, _)) = memory.back() {
        let scale = dot(s, y) / dot(y, y);
        for qi in q.iter_mut() {
            *qi *= scale;
        }
    }
    for ((s, y, rho), a) in memory.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += si * (a - b);
        }
    }
    q.iter().zip(free).map(|(v, &f)| if f { -v } else { 0.0 }).collect()
}

/// Minimize `f` over `bounds` from `x0`, which must lie inside the box.
///
/// Convergence means `‖P(x - ∇f) - x‖_∞ ≤ grad_tol`. A failed line search
/// clears the curvature memory and restarts from the current iterate, at most
/// `restarts` times; the report then carries `converged = false`.
pub fn minimize_box<F, G>(
    f: F,
    grad: G,
    bounds: &SearchBox,
    x0: &[f64],
    opts: &OptimizerOptions,
) -> Result<OptimizerReport>
where
    F: Fn(&[f64]) -> Result<f64>,
    G: Fn(&[f64]) -> Result<Vec<f64>>,
{
    opts.validate()?;
    let d = bounds.dim();
    if x0.len() != d {
        return Err(MeeError::Dimension {
            expected: d,
            found: x0.len(),
        });
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(MeeError::NonFinite(format!("starting point {x0:?}")));
    }
    if !bounds.contains(x0) {
        return Err(MeeError::Parameter(format!("starting point {x0:?} outside the box")));
    }
    let mut x = x0.to_vec();
    let mut fx = finite_value(f(&x)?, "objective")?;
    let mut g = finite_vec(grad(&x)?, d)?;
    let mut evaluations = 1;
    let mut memory: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(opts.memory);
    let mut trace = vec![fx];
    let mut restarts_used = 0;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < opts.max_iter {
        let pg_norm = inf_norm(&bounds.projected_gradient(&x, &g));
        if pg_norm <= opts.grad_tol {
            converged = true;
            break;
        }
        iterations += 1;
        let free: Vec<bool> = (0..d)
            .map(|i| !((x[i] <= bounds.lower[i] && g[i] > 0.0) || (x[i] >= bounds.upper[i] && g[i] < 0.0)))
            .collect();
        let mut dir = two_loop(&g, &free, &memory);
        if !(dot(&g, &dir) < 0.0) {
            memory.clear();
            dir = two_loop(&g, &free, &memory);
        }
        let mut t = if memory.is_empty() {
            (1.0 / inf_norm(&dir)).min(1.0)
        } else {
            1.0
        };
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let mut trial: Vec<f64> = x.iter().zip(&dir).map(|(xi, di)| xi + t * di).collect();
            bounds.project(&mut trial);
            if trial == x {
                break;
            }
            let step: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
            let ft = finite_value(f(&trial)?, "objective")?;
            evaluations += 1;
            if ft <= fx + ARMIJO_C1 * dot(&g, &step) {
                accepted = Some((trial, step, ft));
                break;
            }
            t *= 0.5;
        }
        let Some((trial, s, ft)) = accepted else {
            if restarts_used < opts.restarts && !memory.is_empty() {
                memory.clear();
                restarts_used += 1;
                continue;
            }
            break;
        };
        let gt = finite_vec(grad(&trial)?, d)?;
        let y: Vec<f64> = gt.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > CURVATURE_EPS * norm(&s) * norm(&y) {
            if memory.len() == opts.memory {
                memory.pop_front();
            }
            memory.push_back((s, y, 1.0 / sy));
        }
        x = trial;
        fx = ft;
        g = gt;
        trace.push(fx);
    }
    let projected_gradient_norm = inf_norm(&bounds.projected_gradient(&x, &g));
    converged = converged || projected_gradient_norm <= opts.grad_tol;
    Ok(OptimizerReport {
        minimizer: x,
        objective: fx,
        projected_gradient_norm,
        iterations,
        evaluations,
        converged,
        restarts_used,
        trace,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiStartReport {
    pub best: OptimizerReport,
    /// Converged endpoints, pairwise further apart than the distinctness radius.
    pub distinct_minima: Vec<OptimizerReport>,
    pub runs: Vec<OptimizerReport>,
}

pub const DISTINCT_RADIUS: f64 = 1e-4;

/// Run [`minimize_box`] from every start (concurrently); the best report is
/// the converged run with the lowest objective, or the lowest overall when
/// none converged.
pub fn multi_start_minimize<F, G>(
    f: F,
    grad: G,
    bounds: &SearchBox,
    starts: &[Vec<f64>],
    opts: &OptimizerOptions,
) -> Result<MultiStartReport>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
    G: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
{
    if starts.is_empty() {
        return Err(MeeError::Parameter("no starting points".into()));
    }
    let runs: Vec<OptimizerReport> = starts
        .par_iter()
        .map(|x0| minimize_box(&f, &grad, bounds, x0, opts))
        .collect::<Result<_>>()?;
    let by_objective = |a: &&OptimizerReport, b: &&OptimizerReport| a.objective.total_cmp(&b.objective);
    let best = runs
        .iter()
        .filter(|r| r.converged)
        .min_by(by_objective)
        .or_else(|| runs.iter().min_by(by_objective))
        .expect("non-empty")
        .clone();
    let mut converged: Vec<&OptimizerReport> = runs.iter().filter(|r| r.converged).collect();
    converged.sort_by(by_objective);
    let mut distinct_minima: Vec<OptimizerReport> = Vec::new();
    for r in converged {
        let far = distinct_minima.iter().all(|m| {
            let diff: Vec<f64> = m.minimizer.iter().zip(&r.minimizer).map(|(a, b)| a - b).collect();
            norm(&diff) > DISTINCT_RADIUS
        });
        if far {
            distinct_minima.push(r.clone());
        }
    }
    Ok(MultiStartReport {
        best,
        distinct_minima,
        runs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64]) -> Result<f64> {
        Ok((1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2))
    }

    fn rosenbrock_grad(x: &[f64]) -> Result<Vec<f64>> {
        Ok(vec![
            -2.0 * (1.0 - x[0]) - 400.0 * x[0] * (x[1] - x[0] * x[0]),
            200.0 * (x[1] - x[0] * x[0]),
        ])
    }

    #[test]
    fn rosenbrock_in_box() {
        let b = SearchBox::uniform(2, -2.0, 2.0).unwrap();
        let r = minimize_box(
            rosenbrock,
            rosenbrock_grad,
            &b,
            &[-1.2, 1.0],
            &OptimizerOptions::default(),
        )
        .unwrap();
        assert!(r.converged);
        assert!(
            (r.minimizer[0] - 1.0).abs() < 1e-6 && (r.minimizer[1] - 1.0).abs() < 1e-6,
            "{r:?}"
        );
    }

    #[test]
    fn active_upper_bound() {
        let b = SearchBox::uniform(1, 0.0, 2.0).unwrap();
        let r = minimize_box(
            |x| Ok((x[0] - 3.0).powi(2)),
            |x| Ok(vec![2.0 * (x[0] - 3.0)]),
            &b,
            &[0.5],
            &OptimizerOptions::default(),
        )
        .unwrap();
        assert!(r.converged);
        assert_eq!(r.minimizer, vec![2.0]);
        assert_eq!(r.projected_gradient_norm, 0.0);
    }

    #[test]
    fn double_well_has_two_distinct_minima() {
        let b = SearchBox::uniform(1, -3.0, 3.0).unwrap();
        let rep = multi_start_minimize(
            |x| Ok((x[0] * x[0] - 1.0).powi(2)),
            |x| Ok(vec![4.0 * x[0] * (x[0] * x[0] - 1.0)]),
            &b,
            &[vec![-2.0], vec![2.0]],
            &OptimizerOptions::default(),
        )
        .unwrap();
        assert_eq!(rep.distinct_minima.len(), 2);
        let mut mins: Vec<f64> = rep.distinct_minima.iter().map(|r| r.minimizer[0]).collect();
        mins.sort_by(f64::total_cmp);
        assert!((mins[0] + 1.0).abs() < 1e-6 && (mins[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn nan_objective_is_an_error() {
        let b = SearchBox::unbounded(1);
        let err = minimize_box(
            |_| Ok(f64::NAN),
            |_| Ok(vec![0.0]),
            &b,
            &[0.0],
            &OptimizerOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, MeeError::NonFinite(_)));
    }

    #[test]
    fn start_outside_box_is_rejected() {
        let b = SearchBox::uniform(1, 0.0, 1.0).unwrap();
        assert!(minimize_box(
            |x| Ok(x[0]),
            |_| Ok(vec![1.0]),
            &b,
            &[2.0],
            &OptimizerOptions::default()
        )
        .is_err());
    }

    #[test]
    fn objective_never_increases() {
        let b = SearchBox::uniform(2, -2.0, 2.0).unwrap();
        let r = minimize_box(
            rosenbrock,
            rosenbrock_grad,
            &b,
            &[-1.9, 1.9],
            &OptimizerOptions::default(),
        )
        .unwrap();
        assert!(r.trace.windows(2).all(|w| w[1] <= w[0]));
    }
}
