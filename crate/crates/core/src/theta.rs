//! The six linear predictors that determine every effect for one contrast.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::design::Point;
use crate::error::{Error, Result};
use crate::fit::FittedGlm;
use crate::scalar::Scalar;

/// Active level `x`, reference level `x*` and covariate profile `c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrastSpec {
    pub x: f64,
    pub x_star: f64,
    pub covariates: BTreeMap<String, f64>,
}

impl ContrastSpec {
    /// An effect contrast; the two levels must differ.
    pub fn new(x: f64, x_star: f64, covariates: BTreeMap<String, f64>) -> Result<Self> {
        if !x.is_finite() || !x_star.is_finite() {
            return Err(Error::InvalidContrast(
                "exposure levels must be finite".into(),
            ));
        }
        if x == x_star {
            return Err(Error::InvalidContrast(format!(
                "active and reference levels are both {x}; use ContrastSpec::single_world"
            )));
        }
        Ok(ContrastSpec {
            x,
            x_star,
            covariates,
        })
    }

    /// `x = x*`, for single-world evaluations and reference rows of a curve.
    pub fn single_world(x: f64, covariates: BTreeMap<String, f64>) -> Self {
        ContrastSpec {
            x,
            x_star: x,
            covariates,
        }
    }

    pub fn is_single_world(&self) -> bool {
        self.x == self.x_star
    }

    fn point(&self, level: Level, mediator: Option<f64>) -> Point {
        let exposure = match level {
            Level::Active => self.x,
            Level::Reference => self.x_star,
        };
        Point::new(exposure, mediator, self.covariates.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Level {
    /// `x`
    Active,
    /// `x*`
    Reference,
}

/// The exposure levels entering the outcome and mediator parts of a
/// (possibly crossed) counterfactual `Y(a, M(b))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LevelPair {
    /// `(x, x*)`
    Cross,
    /// `(x, x)`
    Active,
    /// `(x*, x*)`
    Reference,
}

impl LevelPair {
    pub const ALL: [LevelPair; 3] = [LevelPair::Cross, LevelPair::Active, LevelPair::Reference];

    pub fn outcome_level(self) -> Level {
        match self {
            LevelPair::Cross | LevelPair::Active => Level::Active,
            LevelPair::Reference => Level::Reference,
        }
    }

    pub fn mediator_level(self) -> Level {
        match self {
            LevelPair::Active => Level::Active,
            LevelPair::Cross | LevelPair::Reference => Level::Reference,
        }
    }
}

pub const OUTCOME_X_M0: usize = 0;
pub const OUTCOME_XSTAR_M0: usize = 1;
pub const OUTCOME_X_M1: usize = 2;
pub const OUTCOME_XSTAR_M1: usize = 3;
pub const MEDIATOR_X: usize = 4;
pub const MEDIATOR_XSTAR: usize = 5;

/// `(r_b(x,0), r_b(x*,0), r_b(x,1), r_b(x*,1), r_g(x), r_g(x*))` and the
/// covariance of its estimator. The ordering is fixed: derivative matrices
/// index against it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaBundle<T> {
    pub theta: [T; 6],
    pub sigma: [[T; 6]; 6],
}

impl<T: Scalar> ThetaBundle<T> {
    pub fn new(theta: [T; 6], sigma: [[T; 6]; 6]) -> Result<Self> {
        if theta
            .iter()
            .chain(sigma.iter().flatten())
            .any(|v| !v.is_finite())
        {
            return Err(Error::Numerical(
                "theta bundle has non-finite entries".into(),
            ));
        }
        let tol = T::lit(1e-10);
        for i in 0..6 {
            for j in 0..i {
                let (a, b) = (sigma[i][j], sigma[j][i]);
                if (a - b).abs() > tol * (T::one() + a.abs().max(b.abs())) {
                    return Err(Error::NotPositiveSemiDefinite(
                        "sigma is not symmetric".into(),
                    ));
                }
            }
        }
        Ok(ThetaBundle { theta, sigma })
    }

    /// Predictors only, with zero covariance (population-level use).
    pub fn from_predictors(theta: [T; 6]) -> Self {
        ThetaBundle {
            theta,
            sigma: [[T::zero(); 6]; 6],
        }
    }

    /// `r_b(level, m)`.
    pub fn outcome(&self, level: Level, mediator: bool) -> T {
        self.theta[match (level, mediator) {
            (Level::Active, false) => OUTCOME_X_M0,
            (Level::Reference, false) => OUTCOME_XSTAR_M0,
            (Level::Active, true) => OUTCOME_X_M1,
            (Level::Reference, true) => OUTCOME_XSTAR_M1,
        }]
    }

    /// `r_g(level)`.
    pub fn mediator(&self, level: Level) -> T {
        self.theta[match level {
            Level::Active => MEDIATOR_X,
            Level::Reference => MEDIATOR_XSTAR,
        }]
    }

    pub fn with_theta(&self, theta: [T; 6]) -> Self {
        ThetaBundle {
            theta,
            sigma: self.sigma,
        }
    }

    pub fn cast<U: Scalar>(&self) -> ThetaBundle<U> {
        let c = |v: T| U::from(v).expect("scalar conversion");
        ThetaBundle {
            theta: self.theta.map(c),
            sigma: self.sigma.map(|row| row.map(c)),
        }
    }
}

/// Evaluates both models at the six points of a contrast and propagates
/// their coefficient covariances (treated as independent across models).
pub fn theta_bundle(
    outcome: &FittedGlm,
    mediator: &FittedGlm,
    contrast: &ContrastSpec,
) -> Result<ThetaBundle<f64>> {
    let outcome_points = [
        contrast.point(Level::Active, Some(0.0)),
        contrast.point(Level::Reference, Some(0.0)),
        contrast.point(Level::Active, Some(1.0)),
        contrast.point(Level::Reference, Some(1.0)),
    ];
    let mediator_points = [
        contrast.point(Level::Active, None),
        contrast.point(Level::Reference, None),
    ];

    let outcome_rows = outcome_points
        .iter()
        .map(|p| outcome.design_row(p))
        .collect::<Result<Vec<_>>>()?;
    let mediator_rows = mediator_points
        .iter()
        .map(|p| mediator.design_row(p))
        .collect::<Result<Vec<_>>>()?;

    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let quad = |a: &[f64], cov: &nalgebra::DMatrix<f64>, b: &[f64]| {
        let mut s = 0.0;
        for (i, ai) in a.iter().enumerate() {
            for (j, bj) in b.iter().enumerate() {
                s += ai * cov[(i, j)] * bj;
            }
        }
        s
    };

    let mut theta = [0.0; 6];
    let mut sigma = [[0.0; 6]; 6];
    for (i, row) in outcome_rows.iter().enumerate() {
        theta[i] = dot(row, outcome.coefficients());
        for (j, other) in outcome_rows.iter().enumerate() {
            sigma[i][j] = quad(row, outcome.covariance(), other);
        }
    }
    for (i, row) in mediator_rows.iter().enumerate() {
        theta[4 + i] = dot(row, mediator.coefficients());
        for (j, other) in mediator_rows.iter().enumerate() {
            sigma[4 + i][4 + j] = quad(row, mediator.covariance(), other);
        }
    }
    ThetaBundle::new(theta, sigma)
}
