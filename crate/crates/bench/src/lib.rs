//! Fixtures shared by the benchmarks.

use mee_core::models::{generate_dataset, xi_true};
use mee_core::{ConditionalModel, CopulaSpec, CovariatePoint, Sample, XiEstimate};

pub fn clayton_model(d: usize) -> ConditionalModel {
    let scales: Vec<f64> = (0..d).map(|j| 1.0 + j as f64).collect();
    ConditionalModel::lomax(
        0.4,
        &scales,
        CopulaSpec::SurvivalClayton {
            theta: mee_core::models::AffineParam::constant(1.0),
        },
    )
}

pub fn clayton_sample(n: usize, d: usize, seed: u64) -> Sample {
    generate_dataset(&clayton_model(d), n, seed).expect("valid model")
}

pub fn clayton_xi(d: usize) -> XiEstimate {
    let model = clayton_model(d);
    xi_true(&model, &model.covariate.center()).expect("valid model")
}

pub fn center(grid_size: usize) -> CovariatePoint {
    CovariatePoint::constant(grid_size, 0.0)
}
