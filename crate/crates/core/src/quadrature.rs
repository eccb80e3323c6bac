//! Gauss–Kronrod quadrature: a fixed 7/15-point rule, a globally adaptive
//! driver, and a graded-mesh driver for integrands with an integrable power
//! singularity at the left endpoint 0.

use serde::{Deserialize, Serialize};

use crate::error::{MeeError, Result};

// Kronrod abscissae (positive half, descending) and weights; every other
// abscissa is a 7-point Gauss node.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    /// Fraction of `[0, M]` integrated on the graded mesh near 0.
    pub endpoint_split: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            max_subdivisions: 200,
            endpoint_split: 0.1,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(MeeError::Parameter("quadrature tolerances must be positive".into()));
        }
        if !(self.endpoint_split > 0.0 && self.endpoint_split < 1.0) {
            return Err(MeeError::Parameter("endpoint_split must lie in (0, 1)".into()));
        }
        if self.max_subdivisions == 0 {
            return Err(MeeError::Parameter("max_subdivisions must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

/// One application of the 15-point Kronrod rule on `[a, b]`, with the
/// QUADPACK error heuristic.
pub fn gauss_kronrod_15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut resk = fc * WGK[7];
    let mut resg = fc * WG[3];
    let mut resabs = resk.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        resk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    let reskh = 0.5 * resk;
    let mut resasc = WGK[7] * (fc - reskh).abs();
    for j in 0..7 {
        resasc += WGK[j] * ((fv1[j] - reskh).abs() + (fv2[j] - reskh).abs());
    }
    let result = resk * half;
    let resabs = resabs * half.abs();
    let resasc = resasc * half.abs();
    let mut err = ((resk - resg) * half).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    (result, err)
}

/// Globally adaptive bisection on `[a, b]`, optionally pre-split at
/// `breakpoints` (points outside `(a, b)` are ignored).
pub fn integrate_adaptive<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    abs_tol: f64,
    rel_tol: f64,
    max_subdivisions: usize,
) -> Result<Integral> {
    if a == b {
        return Ok(Integral {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        });
    }
    let mut cuts: Vec<f64> = vec![a];
    let mut inner: Vec<f64> = breakpoints.iter().copied().filter(|&p| p > a && p < b).collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    cuts.extend(inner);
    cuts.push(b);

    // (a, b, value, error)
    let mut segments: Vec<(f64, f64, f64, f64)> = Vec::with_capacity(cuts.len() + 16);
    let mut evaluations = 0;
    for w in cuts.windows(2) {
        let (v, e) = gauss_kronrod_15(f, w[0], w[1]);
        evaluations += 15;
        segments.push((w[0], w[1], v, e));
    }
    loop {
        let value: f64 = segments.iter().map(|s| s.2).sum();
        let error: f64 = segments.iter().map(|s| s.3).sum();
        if !value.is_finite() || !error.is_finite() {
            return Err(MeeError::NonFinite("quadrature integrand".into()));
        }
        if error <= abs_tol.max(rel_tol * value.abs()) {
            return Ok(Integral {
                value,
                error,
                evaluations,
            });
        }
        if segments.len() >= max_subdivisions {
            return Err(MeeError::Quadrature { value, error });
        }
        let (idx, _) = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("at least one segment");
        let (lo, hi, _, _) = segments.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        if !(mid > lo && mid < hi) {
            // interval exhausted at machine precision
            return Err(MeeError::Quadrature { value, error });
        }
        let (v1, e1) = gauss_kronrod_15(f, lo, mid);
        let (v2, e2) = gauss_kronrod_15(f, mid, hi);
        evaluations += 30;
        segments.push((lo, mid, v1, e1));
        segments.push((mid, hi, v2, e2));
    }
}

/// `∫_0^upper f(u) du` for `f` with an integrable power singularity at 0.
///
/// `[split, upper]` goes to the adaptive driver; `[0, split]` is covered by
/// dyadic cells `[split/2^(k+1), split/2^k]` until the cell contributions
/// decay geometrically, and the remaining sliver is extrapolated as the sum
/// of that geometric series (exact for a pure power law).
pub fn integrate_from_zero<F: Fn(f64) -> f64>(
    f: &F,
    upper: f64,
    breakpoints: &[f64],
    cfg: &QuadratureConfig,
) -> Result<Integral> {
    if upper <= 0.0 {
        return Ok(Integral {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        });
    }
    let mut split = cfg.endpoint_split * upper;
    if let Some(&b) = breakpoints
        .iter()
        .filter(|&&b| b > 0.0 && b < upper)
        .min_by(|x, y| x.total_cmp(y))
    {
        split = split.min(b);
    }
    // geometric pre-split keeps long ranges of power-law decay cheap
    let mut cuts = breakpoints.to_vec();
    let mut p = 4.0 * split;
    while p < upper {
        cuts.push(p);
        p *= 4.0;
    }
    let regular = integrate_adaptive(
        f,
        split,
        upper,
        &cuts,
        cfg.abs_tol * 0.5,
        cfg.rel_tol * 0.5,
        cfg.max_subdivisions,
    )?;

    let mut value = regular.value;
    let mut error = regular.error;
    let mut evaluations = regular.evaluations;
    let mut prev: Option<f64> = None;
    let mut hi = split;
    const MAX_CELLS: usize = 1000;
    for _ in 0..MAX_CELLS {
        let lo = 0.5 * hi;
        let cell = integrate_adaptive(
            f,
            lo,
            hi,
            &[],
            cfg.abs_tol / 64.0,
            cfg.rel_tol * 0.5,
            cfg.max_subdivisions,
        )?;
        evaluations += cell.evaluations;
        value += cell.value;
        error += cell.error;
        hi = lo;
        let target = cfg.abs_tol.max(cfg.rel_tol * value.abs());
        if cell.value == 0.0 {
            if prev == Some(0.0) {
                return Ok(Integral {
                    value,
                    error,
                    evaluations,
                });
            }
            prev = Some(0.0);
            continue;
        }
        if let Some(p) = prev.filter(|&p| p != 0.0) {
            let ratio = cell.value / p;
            if ratio > 0.0 && ratio < 1.0 {
                let tail = cell.value * ratio / (1.0 - ratio);
                if tail.abs() <= 1e-3 * target {
                    return Ok(Integral {
                        value: value + tail,
                        error: error + tail.abs() * 1e-2,
                        evaluations,
                    });
                }
            }
        }
        prev = Some(cell.value);
    }
    Err(MeeError::Quadrature { value, error })
}
