//! `mee`: simulate data, estimate extreme expectiles, run experiments.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mee_core::harness::{parse_dataset, run_experiment_with_threads, threads_from_env, write_dataset, write_results};
use mee_core::models::{
    generate_dataset, sample_at, theta_star_analytic, theta_star_reference, xi_true, AffineParam, CovariateProcess,
    MarginModel, DEFAULT_GRID_SIZE,
};
use mee_core::objective::direct_empirical_expectile;
use mee_core::pipeline::rate_plan;
use mee_core::{
    estimate_mee, ConditionalModel, CopulaSpec, CovariatePoint, EstimationConfig, ExperimentConfig, Kernel, MeeError,
    MetricKind, Sample, SearchBox, WeightVector,
};

#[derive(Parser, Debug)]
#[command(
    name = "mee",
    version,
    about = "Extreme multivariate L1-expectiles with a functional covariate"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw a dataset from a conditional model and write it as CSV.
    Simulate(SimulateArgs),
    /// Estimate the extreme expectile at one covariate curve.
    Estimate(EstimateArgs),
    /// Run a Monte-Carlo experiment and write one CSV row per replication.
    Experiment(ExperimentArgs),
    /// Print the true Θ* and a direct expectile for a model.
    Oracle(OracleArgs),
    /// Print the convergence-rate plan for given inputs.
    Rates(RatesArgs),
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum CopulaArg {
    Independence,
    Comonotone,
    Clayton,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum CovariateArg {
    Fourier,
    Constant,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum KernelArg {
    Uniform,
    Quadratic,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum MetricArg {
    L2,
    Sup,
}

#[derive(Args, Debug)]
struct ModelArgs {
    /// JSON model file; overrides the other model flags.
    #[arg(long, value_name = "PATH")]
    model: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "independence")]
    copula: CopulaArg,
    /// Survival Clayton parameter.
    #[arg(long, default_value_t = 1.0)]
    theta: f64,
    /// Tail index shared by all margins.
    #[arg(long, default_value_t = 0.5)]
    gamma: f64,
    #[arg(long, default_value_t = 2)]
    d: usize,
    /// Comma-separated Lomax scales, one per margin (default all 1).
    #[arg(long, value_delimiter = ',')]
    scales: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value = "fourier")]
    covariate: CovariateArg,
    /// Covariate grid size.
    #[arg(long, default_value_t = DEFAULT_GRID_SIZE)]
    grid: usize,
}

impl ModelArgs {
    fn build(&self) -> Result<ConditionalModel, MeeError> {
        if let Some(path) = &self.model {
            let text = read_text(path)?;
            let model: ConditionalModel = serde_json::from_str(&text).map_err(json_error)?;
            model.validate()?;
            return Ok(model);
        }
        let scales = self.scales.clone().unwrap_or_else(|| vec![1.0; self.d]);
        if scales.len() != self.d {
            return Err(MeeError::Dimension {
                expected: self.d,
                found: scales.len(),
            });
        }
        let copula = match self.copula {
            CopulaArg::Independence => CopulaSpec::Independence,
            CopulaArg::Comonotone => CopulaSpec::Comonotone,
            CopulaArg::Clayton => CopulaSpec::SurvivalClayton {
                theta: AffineParam::constant(self.theta),
            },
        };
        let covariate = match self.covariate {
            CovariateArg::Fourier => CovariateProcess::Fourier { grid_size: self.grid },
            CovariateArg::Constant => CovariateProcess::Constant { grid_size: self.grid },
        };
        let model = ConditionalModel {
            margins: scales.iter().map(|&s| MarginModel::lomax(s)).collect(),
            gamma: AffineParam::constant(self.gamma),
            gamma_clip: (0.0, 1.0),
            copula,
            covariate,
        };
        model.validate()?;
        Ok(model)
    }
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV (stdout when absent).
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EstimateArgs {
    #[arg(long, value_name = "PATH")]
    data: PathBuf,
    /// Extreme level α in (0, 1).
    #[arg(long)]
    alpha: f64,
    /// Covariate curve: a file of comma/whitespace separated values, or
    /// `const:V` for a flat curve. Defaults to the mean of the sample curves.
    #[arg(long, value_name = "PATH|const:V")]
    point: Option<String>,
    /// Bandwidth, or `auto`.
    #[arg(long, default_value = "auto")]
    h: String,
    #[arg(long, value_enum, default_value = "quadratic")]
    kernel: KernelArg,
    #[arg(long, value_enum, default_value = "l2")]
    metric: MetricArg,
    /// Number of Hill levels.
    #[arg(long = "J", default_value_t = 9)]
    j: usize,
    /// Tail-dependence threshold count, or `auto`.
    #[arg(long, default_value = "auto")]
    kn: String,
    /// Search box for Θ as LO:HI.
    #[arg(long, default_value = "0.001:1000")]
    bounds: String,
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
    /// Output JSON (stdout when absent).
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output CSV; falls back to the config's `output`, then stdout.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Override the number of replications.
    #[arg(long)]
    reps: Option<usize>,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct OracleArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Level of the Monte-Carlo direct expectile.
    #[arg(long, default_value_t = 0.99)]
    alpha: f64,
    /// Draws of X | Y = y for the direct expectile.
    #[arg(long, default_value_t = 20_000)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "0.001:1000")]
    bounds: String,
}

#[derive(Args, Debug)]
struct RatesArgs {
    #[arg(long)]
    n: usize,
    /// Intermediate level α_n.
    #[arg(long = "alpha-n")]
    alpha_n: f64,
    /// Small-ball probability estimate ψ̂.
    #[arg(long)]
    psi: f64,
    #[arg(long)]
    kn: usize,
    #[arg(long)]
    gamma: f64,
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
}

fn json_error(e: serde_json::Error) -> MeeError {
    MeeError::Parse {
        line: e.line() as u64,
        column: e.column(),
        message: e.to_string(),
    }
}

fn read_text(path: &Path) -> Result<String, MeeError> {
    fs::read_to_string(path).map_err(|e| MeeError::Io(format!("{}: {e}", path.display())))
}

fn write_output(out: Option<&Path>, bytes: &[u8]) -> Result<(), MeeError> {
    let io_err = |e: io::Error| MeeError::Io(e.to_string());
    match out {
        Some(p) => fs::write(p, bytes).map_err(|e| MeeError::Io(format!("{}: {e}", p.display()))),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(bytes).map_err(io_err)?;
            stdout.flush().map_err(io_err)
        }
    }
}

fn parse_bounds(s: &str) -> Result<(f64, f64), MeeError> {
    let bad = || MeeError::Parameter(format!("--bounds expects LO:HI, got {s:?}"));
    let (lo, hi) = s.split_once(':').ok_or_else(bad)?;
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    Ok((lo, hi))
}

fn parse_auto<T: std::str::FromStr>(flag: &str, s: &str) -> Result<Option<T>, MeeError> {
    if s.eq_ignore_ascii_case("auto") {
        return Ok(None);
    }
    s.parse()
        .map(Some)
        .map_err(|_| MeeError::Parameter(format!("--{flag} expects a number or `auto`, got {s:?}")))
}

fn mean_curve(sample: &Sample) -> Result<CovariatePoint, MeeError> {
    let p = sample.p();
    let mut acc = vec![0.0; p];
    for c in sample.covariates() {
        for (a, v) in acc.iter_mut().zip(c.values()) {
            *a += v;
        }
    }
    let n = sample.n() as f64;
    CovariatePoint::new(acc.into_iter().map(|a| a / n).collect())
}

fn parse_point(spec: &str, p: usize) -> Result<CovariatePoint, MeeError> {
    if let Some(v) = spec.strip_prefix("const:") {
        let v: f64 = v
            .parse()
            .map_err(|_| MeeError::Parameter(format!("--point const:V needs a number, got {v:?}")))?;
        return Ok(CovariatePoint::constant(p, v));
    }
    let text = read_text(Path::new(spec))?;
    let mut values = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let mut column = 1;
        for tok in line.split(|c: char| c == ',' || c.is_whitespace()) {
            if !tok.is_empty() {
                let v = tok.parse().map_err(|_| MeeError::Parse {
                    line: line_no as u64 + 1,
                    column,
                    message: format!("not a number: {tok:?}"),
                })?;
                values.push(v);
            }
            column += tok.chars().count() + 1;
        }
    }
    if values.len() != p {
        return Err(MeeError::Dimension {
            expected: p,
            found: values.len(),
        });
    }
    CovariatePoint::new(values)
}

fn simulate(a: &SimulateArgs) -> Result<(), MeeError> {
    let model = a.model.build()?;
    let sample = generate_dataset(&model, a.n, a.seed)?;
    let mut buf = Vec::new();
    write_dataset(&sample, &mut buf)?;
    write_output(a.out.as_deref(), &buf)
}

fn estimate(a: &EstimateArgs) -> Result<(), MeeError> {
    let sample = parse_dataset(&a.data)?;
    let y = match &a.point {
        Some(spec) => parse_point(spec, sample.p())?,
        None => mean_curve(&sample)?,
    };
    let cfg = EstimationConfig {
        alpha: a.alpha,
        bandwidth: parse_auto("h", &a.h)?,
        kernel: match a.kernel {
            KernelArg::Uniform => Kernel::Uniform,
            KernelArg::Quadratic => Kernel::Quadratic,
        },
        metric: match a.metric {
            MetricArg::L2 => MetricKind::L2,
            MetricArg::Sup => MetricKind::Sup,
        },
        hill_j: a.j,
        kn: parse_auto("kn", &a.kn)?,
        bounds: parse_bounds(&a.bounds)?,
        mu: a.mu,
        ..EstimationConfig::default()
    };
    let result = estimate_mee(&sample, &y, &cfg)?;
    let mut json = serde_json::to_vec_pretty(&result).map_err(|e| MeeError::Io(e.to_string()))?;
    json.push(b'\n');
    write_output(a.out.as_deref(), &json)
}

fn experiment(a: &ExperimentArgs) -> Result<(), MeeError> {
    let mut cfg = ExperimentConfig::from_json(&read_text(&a.config)?)?;
    if let Some(r) = a.reps {
        cfg.replications = r;
    }
    if let Some(s) = a.seed {
        cfg.master_seed = s;
    }
    cfg.validate()?;
    let rows = run_experiment_with_threads(&cfg, threads_from_env())?;
    let mut buf = Vec::new();
    write_results(&rows, cfg.model.d(), &mut buf)?;
    write_output(a.out.as_deref().or(cfg.output.as_deref()), &buf)
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
    format!("({})", parts.join(", "))
}

fn oracle(a: &OracleArgs) -> Result<(), MeeError> {
    let model = a.model.build()?;
    let y = model.covariate.center();
    let bounds = parse_bounds(&a.bounds)?;
    let xi = xi_true(&model, &y)?;
    let mut out = String::new();
    out.push_str(&format!("gamma = {}\n", xi.gamma()));
    out.push_str(&format!("c = {}\n", fmt_vec(xi.c())));
    match theta_star_analytic(&model, &y)? {
        Some(t) => out.push_str(&format!("Θ* (analytic) = {}\n", fmt_vec(&t.to_vec()))),
        None => out.push_str("Θ* (analytic) = n/a\n"),
    }
    let bx = SearchBox::uniform(model.d(), bounds.0, bounds.1)?;
    let reference = theta_star_reference(&xi, &bx)?;
    out.push_str(&format!("Θ* (reference) = {}\n", fmt_vec(&reference.to_vec())));
    let sample = sample_at(&model, &y, a.n, a.seed)?;
    let direct = direct_empirical_expectile(&sample, &WeightVector::uniform(a.n), a.alpha)?;
    out.push_str(&format!(
        "direct expectile (α = {}, n = {}) = {}\n",
        a.alpha,
        a.n,
        fmt_vec(&direct)
    ));
    write_output(None, out.as_bytes())
}

fn rates(a: &RatesArgs) -> Result<(), MeeError> {
    let plan = rate_plan(a.n, a.alpha_n, a.psi, a.kn, a.gamma, a.mu)?;
    let mut json = serde_json::to_vec_pretty(&plan).map_err(|e| MeeError::Io(e.to_string()))?;
    json.push(b'\n');
    write_output(None, &json)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let outcome = match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Estimate(a) => estimate(a),
        Command::Experiment(a) => experiment(a),
        Command::Oracle(a) => oracle(a),
        Command::Rates(a) => rates(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
