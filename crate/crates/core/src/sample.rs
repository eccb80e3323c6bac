use crate::covariate::CovariatePoint;
use crate::error::{MeeError, Result};

/// `n` observations of a `d`-dimensional response, each paired with a
/// gridded functional covariate. Responses are stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    n: usize,
    d: usize,
    x: Vec<f64>,
    y: Vec<CovariatePoint>,
}

impl Sample {
    pub fn from_rows(rows: Vec<Vec<f64>>, y: Vec<CovariatePoint>) -> Result<Self> {
        let d = rows.first().map(Vec::len).unwrap_or(0);
        let mut x = Vec::with_capacity(rows.len() * d);
        for row in &rows {
            if row.len() != d {
                return Err(MeeError::Dimension {
                    expected: d,
                    found: row.len(),
                });
            }
            x.extend_from_slice(row);
        }
        Self::from_flat(rows.len(), d, x, y)
    }

    pub fn from_flat(n: usize, d: usize, x: Vec<f64>, y: Vec<CovariatePoint>) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(MeeError::Parameter(format!(
                "sample needs n >= 1 and d >= 1 (got n = {n}, d = {d})"
            )));
        }
        if x.len() != n * d {
            return Err(MeeError::Dimension {
                expected: n * d,
                found: x.len(),
            });
        }
        if y.len() != n {
            return Err(MeeError::Dimension {
                expected: n,
                found: y.len(),
            });
        }
        if let Some(pos) = x.iter().position(|v| !v.is_finite()) {
            return Err(MeeError::NonFinite(format!(
                "response at row {}, column {}",
                pos / d,
                pos % d
            )));
        }
        let p = y[0].grid_size();
        if let Some(bad) = y.iter().find(|c| c.grid_size() != p) {
            return Err(MeeError::Dimension {
                expected: p,
                found: bad.grid_size(),
            });
        }
        Ok(Sample { n, d, x, y })
    }

    /// Sample whose covariate carries no information (single-point grid, all zero).
    pub fn with_constant_covariate(rows: Vec<Vec<f64>>) -> Result<Self> {
        let y = vec![CovariatePoint::constant(1, 0.0); rows.len()];
        Self::from_rows(rows, y)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Covariate grid size.
    pub fn p(&self) -> usize {
        self.y[0].grid_size()
    }

    #[inline]
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.x[i * self.d + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.d..(i + 1) * self.d]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.value(i, j)).collect()
    }

    pub fn covariate(&self, i: usize) -> &CovariatePoint {
        &self.y[i]
    }

    pub fn covariates(&self) -> &[CovariatePoint] {
        &self.y
    }

    pub fn responses(&self) -> &[f64] {
        &self.x
    }

    pub(crate) fn check_margin(&self, j: usize) -> Result<()> {
        if j < self.d {
            Ok(())
        } else {
            Err(MeeError::Index { index: j, len: self.d })
        }
    }

    /// Copy with every response multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Sample {
        let mut out = self.clone();
        out.x.iter_mut().for_each(|v| *v *= factor);
        out
    }

    /// Copy with margin `j` multiplied by `factor`.
    pub fn scaled_margin(&self, j: usize, factor: f64) -> Sample {
        let mut out = self.clone();
        for i in 0..self.n {
            out.x[i * self.d + j] *= factor;
        }
        out
    }

    /// Copy with rows reordered by `perm` (row `i` of the result is row `perm[i]`).
    pub fn permuted(&self, perm: &[usize]) -> Sample {
        let mut x = Vec::with_capacity(self.x.len());
        let mut y = Vec::with_capacity(self.n);
        for &i in perm {
            x.extend_from_slice(self.row(i));
            y.push(self.y[i].clone());
        }
        Sample {
            n: perm.len(),
            d: self.d,
            x,
            y,
        }
    }
}
