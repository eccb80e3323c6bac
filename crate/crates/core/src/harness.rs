//! Dataset and result-table CSV I/O, experiment configuration and the
//! replicated Monte Carlo runner.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covariate::CovariatePoint;
use crate::error::{MeeError, Result};
use crate::models::{generate_dataset, theta_star_analytic, theta_star_reference, xi_true, ConditionalModel};
use crate::objective::ThetaVector;
use crate::optimizer::SearchBox;
use crate::pipeline::{estimate_mee, EstimationConfig};
use crate::sample::Sample;

/// Environment variable capping the experiment worker count.
pub const THREADS_ENV: &str = "MEE_THREADS";

fn parse_error(line: u64, column: usize, message: impl Into<String>) -> MeeError {
    MeeError::Parse {
        line,
        column,
        message: message.into(),
    }
}

fn csv_error(e: csv::Error) -> MeeError {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => MeeError::Io(io.to_string()),
        other => parse_error(line, 0, format!("{other:?}")),
    }
}

/// Header `x_1..x_d, y_1..y_p`, one row per observation.
pub fn write_dataset<W: Write>(sample: &Sample, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let header: Vec<String> = (1..=sample.d())
        .map(|j| format!("x_{j}"))
        .chain((1..=sample.p()).map(|t| format!("y_{t}")))
        .collect();
    w.write_record(&header).map_err(csv_error)?;
    for i in 0..sample.n() {
        let record: Vec<String> = sample
            .row(i)
            .iter()
            .chain(sample.covariate(i).values())
            .map(|v| v.to_string())
            .collect();
        w.write_record(&record).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_dataset_file(sample: &Sample, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| MeeError::Io(format!("{}: {e}", path.display())))?;
    write_dataset(sample, BufWriter::new(file))
}

fn header_index(name: &str, prefix: &str) -> Option<usize> {
    name.strip_prefix(prefix)?.parse().ok()
}

pub fn read_dataset<R: Read>(input: R) -> Result<Sample> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(input);
    let mut records = reader.records();
    let header = match records.next() {
        Some(r) => r.map_err(csv_error)?,
        None => return Err(parse_error(1, 1, "missing header row")),
    };
    let mut d = 0;
    let mut p = 0;
    for (col, name) in header.iter().enumerate() {
        let name = name.trim();
        if p == 0 && header_index(name, "x_") == Some(d + 1) {
            d += 1;
        } else if header_index(name, "y_") == Some(p + 1) {
            p += 1;
        } else {
            return Err(parse_error(
                1,
                col + 1,
                format!("unexpected header `{name}`; expected x_1..x_d then y_1..y_p"),
            ));
        }
    }
    if d == 0 || p == 0 {
        return Err(parse_error(1, 1, "header needs at least one x_ and one y_ column"));
    }
    let mut x = Vec::new();
    let mut ys = Vec::new();
    for record in records {
        let record = record.map_err(csv_error)?;
        let line = record.position().map(|pos| pos.line()).unwrap_or(0);
        if record.len() != d + p {
            return Err(parse_error(
                line,
                record.len().min(d + p) + 1,
                format!("expected {} fields, found {}", d + p, record.len()),
            ));
        }
        let mut curve = Vec::with_capacity(p);
        for (col, cell) in record.iter().enumerate() {
            let v: f64 = cell
                .trim()
                .parse()
                .map_err(|_| parse_error(line, col + 1, format!("`{cell}` is not a number")))?;
            if !v.is_finite() {
                return Err(parse_error(line, col + 1, format!("`{cell}` is not finite")));
            }
            if col < d {
                x.push(v);
            } else {
                curve.push(v);
            }
        }
        ys.push(CovariatePoint::new(curve)?);
    }
    if ys.is_empty() {
        return Err(parse_error(2, 1, "no data rows"));
    }
    Sample::from_flat(ys.len(), d, x, ys)
}

pub fn parse_dataset(path: &Path) -> Result<Sample> {
    let file = File::open(path).map_err(|e| MeeError::Io(format!("{}: {e}", path.display())))?;
    read_dataset(BufReader::new(file))
}

/// Replicated simulation study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: ConditionalModel,
    pub sizes: Vec<usize>,
    pub replications: usize,
    pub master_seed: u64,
    #[serde(default)]
    pub estimation: EstimationConfig,
    /// Evaluation curve; the zero curve when absent.
    #[serde(default)]
    pub point: Option<Vec<f64>>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| MeeError::Parse {
            line: e.line() as u64,
            column: e.column(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(MeeError::Parameter("need at least one replication".into()));
        }
        if self.sizes.is_empty() || self.sizes.iter().any(|&n| n < 100) {
            return Err(MeeError::Parameter(format!(
                "sample sizes must all be >= 100, got {:?}",
                self.sizes
            )));
        }
        self.model.validate()?;
        self.estimation.validate()?;
        self.evaluation_point().map(|_| ())
    }

    pub fn evaluation_point(&self) -> Result<CovariatePoint> {
        match &self.point {
            Some(v) => {
                let y = CovariatePoint::new(v.clone())?;
                if y.grid_size() != self.model.covariate.grid_size() {
                    return Err(MeeError::Dimension {
                        expected: self.model.covariate.grid_size(),
                        found: y.grid_size(),
                    });
                }
                Ok(y)
            }
            None => Ok(self.model.covariate.center()),
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replication `rep` at the `n_index`-th sample size.
pub fn derive_seed(master: u64, n_index: usize, rep: usize) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ n_index as u64) ^ rep as u64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub n: usize,
    pub rep: usize,
    pub seed: u64,
    pub gamma_hat: Option<f64>,
    pub c_hat: Vec<f64>,
    pub theta_hat: Vec<f64>,
    pub theta_star: Option<Vec<f64>>,
    pub l1_error: Option<f64>,
    pub expectile: Vec<f64>,
    pub rate_combined: Option<f64>,
    pub wall_time_ms: f64,
    pub converged: bool,
    pub error: Option<String>,
}

/// Column names in their fixed order.
pub fn result_header(d: usize) -> Vec<String> {
    let block = |name: &'static str| (1..=d).map(move |j| format!("{name}_{j}"));
    ["n", "rep", "seed", "gamma_hat"]
        .into_iter()
        .map(String::from)
        .chain(block("c_hat"))
        .chain(block("theta_hat"))
        .chain(block("theta_star"))
        .chain(std::iter::once("l1_error".to_string()))
        .chain(block("expectile"))
        .chain(["rate_combined", "wall_time_ms", "converged", "error"].map(String::from))
        .collect()
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn padded(values: &[f64], d: usize) -> impl Iterator<Item = String> + '_ {
    (0..d).map(move |j| values.get(j).map(|v| v.to_string()).unwrap_or_default())
}

pub fn write_results<W: Write>(rows: &[ResultRow], d: usize, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(result_header(d)).map_err(csv_error)?;
    for r in rows {
        let star = r.theta_star.as_deref().unwrap_or(&[]);
        let record: Vec<String> = [r.n.to_string(), r.rep.to_string(), r.seed.to_string(), opt(r.gamma_hat)]
            .into_iter()
            .chain(padded(&r.c_hat, d))
            .chain(padded(&r.theta_hat, d))
            .chain(padded(star, d))
            .chain(std::iter::once(opt(r.l1_error)))
            .chain(padded(&r.expectile, d))
            .chain([
                opt(r.rate_combined),
                r.wall_time_ms.to_string(),
                r.converged.to_string(),
                r.error.clone().unwrap_or_default(),
            ])
            .collect();
        w.write_record(&record).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_results<R: Read>(input: R) -> Result<Vec<ResultRow>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = reader.headers().map_err(csv_error)?.clone();
    let d = header.iter().filter(|h| h.starts_with("c_hat_")).count();
    let expected = result_header(d);
    if header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(parse_error(1, 1, "result header does not match the fixed column order"));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let cell = |col: usize| record.get(col).unwrap_or("");
        let num = |col: usize| -> Result<Option<f64>> {
            let s = cell(col);
            if s.is_empty() {
                return Ok(None);
            }
            s.parse()
                .map(Some)
                .map_err(|_| parse_error(line, col + 1, format!("`{s}` is not a number")))
        };
        let int = |col: usize| -> Result<u64> {
            cell(col)
                .parse()
                .map_err(|_| parse_error(line, col + 1, format!("`{}` is not an integer", cell(col))))
        };
        let block = |start: usize| -> Result<Vec<f64>> {
            Ok((start..start + d)
                .map(num)
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .flatten()
                .collect())
        };
        let star = block(4 + 2 * d)?;
        let tail = 5 + 3 * d;
        rows.push(ResultRow {
            n: int(0)? as usize,
            rep: int(1)? as usize,
            seed: int(2)?,
            gamma_hat: num(3)?,
            c_hat: block(4)?,
            theta_hat: block(4 + d)?,
            theta_star: (!star.is_empty()).then_some(star),
            l1_error: num(4 + 3 * d)?,
            expectile: block(tail)?,
            rate_combined: num(tail + d)?,
            wall_time_ms: num(tail + d + 1)?.unwrap_or(0.0),
            converged: cell(tail + d + 2)
                .parse()
                .map_err(|_| parse_error(line, tail + d + 3, "expected true/false"))?,
            error: Some(cell(tail + d + 3).to_string()).filter(|s| !s.is_empty()),
        });
    }
    Ok(rows)
}

/// Ground-truth Θ* at `y`: closed form when available, else the numerical reference.
pub fn theta_star_for(model: &ConditionalModel, y: &CovariatePoint, bounds: (f64, f64)) -> Result<Option<ThetaVector>> {
    if let Some(t) = theta_star_analytic(model, y)? {
        return Ok(Some(t));
    }
    if model.d() < 2 {
        return Ok(None);
    }
    let xi = xi_true(model, y)?;
    let bx = SearchBox::uniform(model.d(), bounds.0, bounds.1)?;
    Ok(theta_star_reference(&xi, &bx).ok())
}

fn run_one(
    cfg: &ExperimentConfig,
    y: &CovariatePoint,
    star: Option<&ThetaVector>,
    n_index: usize,
    rep: usize,
) -> ResultRow {
    let n = cfg.sizes[n_index];
    let seed = derive_seed(cfg.master_seed, n_index, rep);
    let start = Instant::now();
    let outcome = generate_dataset(&cfg.model, n, seed).and_then(|s| estimate_mee(&s, y, &cfg.estimation));
    let wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    let mut row = ResultRow {
        n,
        rep,
        seed,
        gamma_hat: None,
        c_hat: Vec::new(),
        theta_hat: Vec::new(),
        theta_star: star.map(ThetaVector::to_vec),
        l1_error: None,
        expectile: Vec::new(),
        rate_combined: None,
        wall_time_ms,
        converged: false,
        error: None,
    };
    match outcome {
        Ok(r) => {
            row.gamma_hat = Some(r.gamma_hat);
            row.l1_error = star.map(|s| s.l1_distance(&r.theta_hat));
            row.theta_hat = r.theta_hat.to_vec();
            row.c_hat = r.c_hat;
            row.expectile = r.expectile;
            row.rate_combined = Some(r.rate_plan.combined);
            row.converged = r.optimizer.converged;
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

/// Worker count from [`THREADS_ENV`], if set to a positive integer.
pub fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|&t| t > 0)
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    run_experiment_with_threads(cfg, threads_from_env())
}

/// One row per (size, replication), sorted by `(n, rep)`; per-row failures
/// are recorded in the row rather than aborting the run.
pub fn run_experiment_with_threads(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let y = cfg.evaluation_point()?;
    let star = theta_star_for(&cfg.model, &y, cfg.estimation.bounds)?;
    let jobs: Vec<(usize, usize)> = (0..cfg.sizes.len())
        .flat_map(|i| (0..cfg.replications).map(move |r| (i, r)))
        .collect();
    let work = || -> Vec<ResultRow> {
        jobs.par_iter()
            .map(|&(i, r)| run_one(cfg, &y, star.as_ref(), i, r))
            .collect()
    };
    let mut rows = match threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| MeeError::Parameter(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    };
    rows.sort_by_key(|r| (r.n, r.rep));
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::CopulaSpec;

    #[test]
    fn header_contract() {
        let s = read_dataset("x_1,x_2,y_1\n1,2,0\n3,4.5,1\n".as_bytes()).unwrap();
        assert_eq!((s.n(), s.d(), s.p()), (2, 2, 1));
        assert_eq!(s.row(1), &[3.0, 4.5]);
    }

    #[test]
    fn non_numeric_cell_names_location() {
        let err = read_dataset("x_1,x_2,y_1\n1,2,0\n3,abc,1\n".as_bytes()).unwrap_err();
        assert_eq!(
            err,
            MeeError::Parse {
                line: 3,
                column: 2,
                message: "`abc` is not a number".into()
            }
        );
    }

    #[test]
    fn malformed_files_are_rejected() {
        assert!(matches!(
            read_dataset("".as_bytes()),
            Err(MeeError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            read_dataset("a,b\n1,2\n".as_bytes()),
            Err(MeeError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            read_dataset("x_1,y_1\n1,2\n3\n".as_bytes()),
            Err(MeeError::Parse { line: 3, .. })
        ));
        assert!(matches!(
            read_dataset("x_1,y_1\n".as_bytes()),
            Err(MeeError::Parse { .. })
        ));
    }

    #[test]
    fn dataset_round_trip_is_lossless() {
        let model = ConditionalModel {
            covariate: crate::models::CovariateProcess::Fourier { grid_size: 7 },
            ..ConditionalModel::lomax(0.3, &[1.0, 3.0, 0.5], CopulaSpec::Independence)
        };
        let s = generate_dataset(&model, 200, 3).unwrap();
        let mut buf = Vec::new();
        write_dataset(&s, &mut buf).unwrap();
        assert_eq!(read_dataset(buf.as_slice()).unwrap(), s);
    }

    #[test]
    fn seeds_differ_across_cells() {
        let mut seeds: Vec<u64> = (0..3)
            .flat_map(|i| (0..50).map(move |r| derive_seed(42, i, r)))
            .collect();
        seeds.sort();
        seeds.dedup();
        assert_eq!(seeds.len(), 150);
        assert_eq!(derive_seed(42, 1, 7), derive_seed(42, 1, 7));
    }

    #[test]
    fn result_rows_round_trip() {
        let rows = vec![
            ResultRow {
                n: 100,
                rep: 0,
                seed: u64::MAX,
                gamma_hat: Some(0.1 + 0.2),
                c_hat: vec![1.0, 4.000000000000001],
                theta_hat: vec![0.5, 1.25],
                theta_star: Some(vec![0.5, 1.0]),
                l1_error: Some(0.25),
                expectile: vec![12.5, 1e-300],
                rate_combined: Some(3.3),
                wall_time_ms: 1.5,
                converged: true,
                error: None,
            },
            ResultRow {
                n: 100,
                rep: 1,
                seed: 5,
                gamma_hat: None,
                c_hat: vec![],
                theta_hat: vec![],
                theta_star: None,
                l1_error: None,
                expectile: vec![],
                rate_combined: None,
                wall_time_ms: 0.25,
                converged: false,
                error: Some("hill stage failed: degenerate tail, \"quoted\"".into()),
            },
        ];
        let mut buf = Vec::new();
        write_results(&rows, 2, &mut buf).unwrap();
        assert_eq!(read_results(buf.as_slice()).unwrap(), rows);
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(
            "n,rep,seed,gamma_hat,c_hat_1,c_hat_2,theta_hat_1,theta_hat_2,theta_star_1,theta_star_2,l1_error,expectile_1,expectile_2,rate_combined,wall_time_ms,converged,error\n"
        ));
    }

    #[test]
    fn config_validation() {
        let cfg = ExperimentConfig {
            model: ConditionalModel::lomax(0.5, &[1.0, 1.0], CopulaSpec::Comonotone),
            sizes: vec![50],
            replications: 1,
            master_seed: 0,
            estimation: EstimationConfig::default(),
            point: None,
            output: None,
        };
        assert!(cfg.validate().is_err());
        let cfg = ExperimentConfig {
            sizes: vec![500],
            replications: 0,
            ..cfg
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn json_config_errors_carry_location() {
        let err = ExperimentConfig::from_json("{\n  \"sizes\": [1000,\n}").unwrap_err();
        assert!(matches!(err, MeeError::Parse { line: 3, .. }), "{err:?}");
    }
}
