//! Kernel-weighted conditional distribution functions, quantiles and
//! pseudo-observations.

use crate::covariate::WeightVector;
use crate::error::{MeeError, Result};
use crate::sample::Sample;

/// Slack used when comparing accumulated weights against a level.
pub(crate) const LEVEL_EPS: f64 = 1e-12;

/// Weighted marginal ECDF of one response column, stored as the distinct
/// positive-weight values and their cumulative weights.
#[derive(Debug, Clone, PartialEq)]
pub struct CondEcdf {
    margin: usize,
    values: Vec<f64>,
    cumulative: Vec<f64>,
}

impl CondEcdf {
    pub fn new(sample: &Sample, w: &WeightVector, j: usize) -> Result<Self> {
        sample.check_margin(j)?;
        check_weights(sample, w)?;
        let mut pairs: Vec<(f64, f64)> = w
            .as_slice()
            .iter()
            .enumerate()
            .filter(|(_, &wi)| wi > 0.0)
            .map(|(i, &wi)| (sample.value(i, j), wi))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut values: Vec<f64> = Vec::with_capacity(pairs.len());
        let mut cumulative: Vec<f64> = Vec::with_capacity(pairs.len());
        let mut acc = 0.0;
        for (x, wi) in pairs {
            acc += wi;
            if values.last() == Some(&x) {
                *cumulative.last_mut().unwrap() = acc;
            } else {
                values.push(x);
                cumulative.push(acc);
            }
        }
        let total = acc;
        cumulative.iter_mut().for_each(|c| *c /= total);
        if let Some(last) = cumulative.last_mut() {
            *last = 1.0;
        }
        Ok(CondEcdf {
            margin: j,
            values,
            cumulative,
        })
    }

    pub fn margin(&self) -> usize {
        self.margin
    }

    /// Distinct atoms, ascending.
    pub fn atoms(&self) -> &[f64] {
        &self.values
    }

    /// `Σ_i w_i 1{X_ij <= x}`.
    pub fn cdf(&self, x: f64) -> f64 {
        let idx = self.values.partition_point(|&v| v <= x);
        if idx == 0 {
            0.0
        } else {
            self.cumulative[idx - 1]
        }
    }

    /// `inf { x : F(x) >= alpha }`; the smallest atom for `alpha <= 0`.
    pub fn quantile(&self, alpha: f64) -> f64 {
        let idx = self.cumulative.partition_point(|&c| c + LEVEL_EPS < alpha);
        self.values[idx.min(self.values.len() - 1)]
    }

    /// Weight strictly above `x`.
    pub fn mass_above(&self, x: f64) -> f64 {
        1.0 - self.cdf(x)
    }

    /// Number of atoms strictly above `x`.
    pub fn atoms_above(&self, x: f64) -> usize {
        self.values.len() - self.values.partition_point(|&v| v <= x)
    }
}

fn check_weights(sample: &Sample, w: &WeightVector) -> Result<()> {
    if w.len() != sample.n() {
        return Err(MeeError::Dimension {
            expected: sample.n(),
            found: w.len(),
        });
    }
    if w.effective_count() == 0 {
        return Err(MeeError::Parameter("weight vector has no positive entry".into()));
    }
    Ok(())
}

pub fn cond_marginal_ecdf(sample: &Sample, w: &WeightVector, j: usize, x: f64) -> Result<f64> {
    sample.check_margin(j)?;
    check_weights(sample, w)?;
    Ok(w.as_slice()
        .iter()
        .enumerate()
        .filter(|(i, _)| sample.value(*i, j) <= x)
        .map(|(_, wi)| wi)
        .sum())
}

pub fn cond_quantile(sample: &Sample, w: &WeightVector, j: usize, alpha: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(MeeError::Domain(format!("quantile level {alpha} outside [0, 1]")));
    }
    Ok(CondEcdf::new(sample, w, j)?.quantile(alpha))
}

/// `F̂_j(X_ij)` for every observation and margin, row-major `n × d`.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoObs {
    n: usize,
    d: usize,
    data: Vec<f64>,
}

impl PseudoObs {
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.d + j]
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, j)).collect()
    }
}

pub fn pseudo_obs(sample: &Sample, w: &WeightVector) -> Result<PseudoObs> {
    check_weights(sample, w)?;
    let (n, d) = (sample.n(), sample.d());
    let mut data = vec![0.0; n * d];
    for j in 0..d {
        let ecdf = CondEcdf::new(sample, w, j)?;
        for i in 0..n {
            data[i * d + j] = ecdf.cdf(sample.value(i, j));
        }
    }
    Ok(PseudoObs { n, d, data })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn univariate(values: &[f64]) -> Sample {
        Sample::with_constant_covariate(values.iter().map(|&v| vec![v]).collect()).unwrap()
    }

    fn w(raw: &[f64]) -> WeightVector {
        WeightVector::from_raw(raw.to_vec()).unwrap()
    }

    #[test]
    fn ecdf_examples() {
        let s = univariate(&[1.0, 2.0, 3.0, 4.0]);
        let u = WeightVector::uniform(4);
        assert_eq!(cond_marginal_ecdf(&s, &u, 0, 2.5).unwrap(), 0.5);
        assert_eq!(cond_marginal_ecdf(&s, &u, 0, 0.0).unwrap(), 0.0);
        let s3 = univariate(&[1.0, 2.0, 3.0]);
        let wv = w(&[0.5, 0.25, 0.25]);
        assert_eq!(cond_marginal_ecdf(&s3, &wv, 0, 1.0).unwrap(), 0.5);
        assert!(matches!(
            cond_marginal_ecdf(&s3, &wv, 1, 1.0),
            Err(MeeError::Index { index: 1, len: 1 })
        ));
    }

    #[test]
    fn quantile_examples() {
        let s = univariate(&[1.0, 2.0, 3.0, 4.0]);
        let u = WeightVector::uniform(4);
        assert_eq!(cond_quantile(&s, &u, 0, 0.5).unwrap(), 2.0);
        assert_eq!(cond_quantile(&s, &u, 0, 1.0).unwrap(), 4.0);
        assert_eq!(cond_quantile(&s, &u, 0, 0.0).unwrap(), 1.0);
        let s3 = univariate(&[1.0, 2.0, 3.0]);
        assert_eq!(cond_quantile(&s3, &w(&[0.5, 0.25, 0.25]), 0, 0.5).unwrap(), 1.0);
        assert!(cond_quantile(&s3, &u_of(3), 0, 1.5).is_err());
    }

    fn u_of(n: usize) -> WeightVector {
        WeightVector::uniform(n)
    }

    #[test]
    fn pseudo_obs_examples() {
        let s = univariate(&[3.0, 1.0, 2.0]);
        let p = pseudo_obs(&s, &u_of(3)).unwrap();
        let col = p.column(0);
        let expected = [1.0, 1.0 / 3.0, 2.0 / 3.0];
        for (a, b) in col.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        let single = univariate(&[5.0]);
        assert_eq!(pseudo_obs(&single, &u_of(1)).unwrap().get(0, 0), 1.0);
        let ties = univariate(&[1.0, 1.0, 2.0]);
        let p = pseudo_obs(&ties, &u_of(3)).unwrap();
        assert_eq!(p.get(0, 0), p.get(1, 0));
        assert!((p.get(0, 0) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn zero_weight_rows_are_ignored_by_quantile() {
        let s = univariate(&[-5.0, 1.0, 2.0]);
        let wv = w(&[0.0, 0.5, 0.5]);
        assert_eq!(cond_quantile(&s, &wv, 0, 0.0).unwrap(), 1.0);
        assert_eq!(cond_quantile(&s, &wv, 0, 0.5).unwrap(), 1.0);
        assert_eq!(cond_quantile(&s, &wv, 0, 0.51).unwrap(), 2.0);
    }

    fn arb_weighted() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (1usize..40).prop_flat_map(|n| {
            (
                prop::collection::vec(-5.0f64..5.0, n),
                prop::collection::vec(0.0f64..1.0, n),
            )
        })
    }

    proptest! {
        #[test]
        fn quantile_duality((xs, raw) in arb_weighted(), alpha in 0.0f64..=1.0) {
            prop_assume!(raw.iter().any(|&r| r > 0.0));
            let s = univariate(&xs);
            let wv = w(&raw);
            let ecdf = CondEcdf::new(&s, &wv, 0).unwrap();
            let q = ecdf.quantile(alpha);
            prop_assert!(ecdf.cdf(q) >= alpha - LEVEL_EPS);
            for (i, &x) in xs.iter().enumerate() {
                if raw[i] > 0.0 {
                    prop_assert!(ecdf.quantile(ecdf.cdf(x)) <= x);
                }
            }
        }

        #[test]
        fn quantile_monotone((xs, raw) in arb_weighted(), a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
            prop_assume!(raw.iter().any(|&r| r > 0.0));
            let s = univariate(&xs);
            let ecdf = CondEcdf::new(&s, &w(&raw), 0).unwrap();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(ecdf.quantile(lo) <= ecdf.quantile(hi));
        }

        #[test]
        fn equal_weights_match_classical_ecdf(xs in prop::collection::vec(-5.0f64..5.0, 1..30), x in -6.0f64..6.0) {
            let s = univariate(&xs);
            let n = xs.len();
            let classical = xs.iter().filter(|&&v| v <= x).count() as f64 / n as f64;
            let weighted = cond_marginal_ecdf(&s, &u_of(n), 0, x).unwrap();
            prop_assert!((classical - weighted).abs() < 1e-12);
            let ecdf = CondEcdf::new(&s, &u_of(n), 0).unwrap();
            prop_assert!((ecdf.cdf(x) - classical).abs() < 1e-12);
        }
    }
}
