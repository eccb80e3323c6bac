//! Extreme multivariate L¹-expectiles given a functional covariate.
//!
//! The estimator localizes the sample at a covariate curve with kernel
//! weights, estimates the tail index, tail ratios and pairwise tail
//! dependence, solves the limiting first-order system by box-constrained
//! least squares and rescales the solution by a marginal quantile.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod covariate;
pub mod dependence;
pub mod empirical;
pub mod error;
pub mod harness;
pub mod models;
pub mod objective;
pub mod optimizer;
pub mod pipeline;
pub mod quadrature;
pub mod sample;
pub mod tail;

pub use covariate::{CovariatePoint, Kernel, Metric, WeightVector};
pub use dependence::{CopulaFamily, EmpiricalLambda, KnConfig, LambdaFunction, LambdaGrid};
pub use error::{MeeError, Result, Stage};
pub use harness::{ExperimentConfig, ResultRow};
pub use models::{ConditionalModel, CopulaSpec, MarginalFamily};
pub use objective::{ThetaVector, XiEstimate};
pub use optimizer::{OptimizerOptions, OptimizerReport, SearchBox};
pub use pipeline::{estimate_mee, EstimationConfig, MEEResult, MetricKind, RatePlan};
pub use quadrature::QuadratureConfig;
pub use sample::Sample;
pub use tail::HillConfig;
