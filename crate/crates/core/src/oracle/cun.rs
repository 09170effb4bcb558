//! Bundled models: the published smoking / emphysema / lung cancer logistic
//! fits, a structural model that generates data resembling that cohort, and
//! a small model separating the two cross-world assumptions.

use nalgebra::DMatrix;

use crate::design::{DesignSpec, Role};
use crate::fit::FittedGlm;
use crate::scalar::expit;

use super::scm::{Probability, StructuralModel};

/// Mediator model terms and `(estimate, standard error)` pairs.
pub const MEDIATOR_TABLE: [(&str, f64, f64); 4] = [
    ("1", 0.418, 0.296),
    ("x", 0.017, 0.002),
    ("BMI", -0.098, 0.012),
    ("Gender", 0.595, 0.114),
];

/// Outcome model terms and `(estimate, standard error)` pairs.
pub const OUTCOME_TABLE: [(&str, f64, f64); 5] = [
    ("1", -3.925, 0.899),
    ("x", 0.020, 0.004),
    ("m", 1.250, 0.264),
    ("BMI", -0.064, 0.034),
    ("Gender", 0.587, 0.376),
];

pub const COHORT_SIZE: usize = 3270;
pub const MALE_SHARE: f64 = 0.725;
pub const BMI_MEAN: f64 = 27.564;
pub const BMI_SD: f64 = 4.443;
pub const EXPOSURE_MEAN: f64 = 36.933;
pub const EXPOSURE_SD: f64 = 21.521;
/// Reference exposure used throughout the analysis, in pack-years.
pub const REFERENCE_EXPOSURE: f64 = 10.0;
/// Per-gender BMI means used as covariate profiles.
pub const FEMALE_BMI: f64 = 25.05;
pub const MALE_BMI: f64 = 28.50;

fn published(role: Role, table: &[(&str, f64, f64)]) -> FittedGlm {
    let design = DesignSpec::parse(&table.iter().map(|r| r.0).collect::<Vec<_>>())
        .expect("valid published design");
    let coefficients = table.iter().map(|r| r.1).collect();
    let covariance =
        DMatrix::from_diagonal(&table.iter().map(|r| r.2 * r.2).collect::<Vec<_>>().into());
    FittedGlm::from_parts(role, design, coefficients, covariance).expect("valid published model")
}

/// Published outcome model; covariance is diagonal from the standard errors.
pub fn published_outcome_model() -> FittedGlm {
    published(Role::Outcome, &OUTCOME_TABLE)
}

/// Published mediator model; covariance is diagonal from the standard errors.
pub fn published_mediator_model() -> FittedGlm {
    published(Role::Mediator, &MEDIATOR_TABLE)
}

fn linear(table: &[(&str, f64, f64)], x: f64, m: f64, bmi: f64, gender: f64) -> f64 {
    table
        .iter()
        .map(|&(term, b, _)| {
            b * match term {
                "1" => 1.0,
                "x" => x,
                "m" => m,
                "BMI" => bmi,
                "Gender" => gender,
                _ => unreachable!("unexpected published term {term}"),
            }
        })
        .sum()
}

/// Exposure grid 10, 20, ..., 170 pack-years.
pub fn exposure_grid() -> Vec<f64> {
    (1..=17).map(|k| 10.0 * f64::from(k)).collect()
}

/// Exposure weights: a lognormal density with the cohort's mean and SD,
/// evaluated on the grid and normalized.
fn exposure_weights(grid: &[f64]) -> Vec<f64> {
    let s2 = (1.0 + (EXPOSURE_SD / EXPOSURE_MEAN).powi(2)).ln();
    let mu = EXPOSURE_MEAN.ln() - s2 / 2.0;
    let w: Vec<f64> = grid
        .iter()
        .map(|&x| (-(x.ln() - mu).powi(2) / (2.0 * s2)).exp() / x)
        .collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|v| v / total).collect()
}

/// Seven-point BMI grid: a symmetric binomial(6, 1/2) on an even lattice
/// with the cohort's mean and SD.
fn bmi_support() -> Vec<(f64, f64)> {
    const WEIGHTS: [f64; 7] = [1.0, 6.0, 15.0, 20.0, 15.0, 6.0, 1.0];
    let step = BMI_SD / 1.5f64.sqrt();
    WEIGHTS
        .iter()
        .enumerate()
        .map(|(k, w)| (BMI_MEAN + step * (k as f64 - 3.0), w / 64.0))
        .collect()
}

/// Gender, BMI and exposure drawn independently; mediator and outcome follow
/// the published logistic models. No latent confounders.
pub fn cun_like_scm() -> StructuralModel<f64> {
    let grid = exposure_grid();
    let weights = exposure_weights(&grid);
    let support: Vec<(Vec<f64>, f64)> = [(0.0, 1.0 - MALE_SHARE), (1.0, MALE_SHARE)]
        .into_iter()
        .flat_map(|(g, pg)| {
            bmi_support()
                .into_iter()
                .map(move |(b, pb)| (vec![g, b], pg * pb))
        })
        .collect();
    let profiles: Vec<Vec<f64>> = support.iter().map(|s| s.0.clone()).collect();
    StructuralModel::from_fn(
        vec!["Gender".into(), "BMI".into()],
        support,
        vec![1.0],
        vec![1.0],
        grid.clone(),
        |_, _| weights.clone(),
        |x, c, _| {
            expit(linear(
                &MEDIATOR_TABLE,
                grid[x],
                0.0,
                profiles[c][1],
                profiles[c][0],
            ))
        },
        |x, m, c, _, _| {
            let m = if m { 1.0 } else { 0.0 };
            expit(linear(
                &OUTCOME_TABLE,
                grid[x],
                m,
                profiles[c][1],
                profiles[c][0],
            ))
        },
    )
    .expect("bundled model is valid")
}

/// A model where partially constant cross-world dependence holds but
/// cross-world independence fails.
///
/// A three-point `U2` affects both mediator and outcome. The outcome
/// mechanism is identical on the first two points, and the mediator
/// mechanism swaps its values on those points between the two exposure
/// levels while keeping their weighted sum fixed. Conditioning on `M(x*)`
/// or on `M(x)` therefore gives the same outcome law, while conditioning on
/// the opposite mediator value does not.
///
/// Probabilities are produced by `frac(numerator, denominator)` so the
/// model can be built over exact rationals.
pub fn cross_world_counterexample<T: Probability>(
    frac: impl Fn(i64, i64) -> T,
) -> StructuralModel<T> {
    let pm = [[(3, 5), (1, 5), (1, 2)], [(1, 5), (3, 5), (1, 2)]];
    let py_shared = [[(1, 20), (1, 5)], [(1, 10), (3, 10)]];
    let py_third = [[(2, 5), (7, 10)], [(1, 2), (4, 5)]];
    StructuralModel::from_fn(
        Vec::new(),
        vec![(Vec::new(), frac(1, 1))],
        vec![frac(1, 1)],
        vec![frac(1, 4), frac(1, 4), frac(1, 2)],
        vec![0.0, 1.0],
        |_, _| vec![frac(1, 2), frac(1, 2)],
        |x, _, u2| {
            let (n, d) = pm[x][u2];
            frac(n, d)
        },
        |x, m, _, _, u2| {
            let (n, d) = if u2 < 2 {
                py_shared[x][m as usize]
            } else {
                py_third[x][m as usize]
            };
            frac(n, d)
        },
    )
    .expect("counterexample tables are valid")
}
