//! Natural direct and indirect effects on the log odds-ratio scale for a
//! binary mediator and a binary outcome, with identification bounds that
//! remain valid under partially constant cross-world dependence.
//!
//! The effect computations are generic over [`Scalar`] (`f32` or `f64`);
//! model fitting runs in `f64`. The aliases below name the `f64` instances.

pub mod bounds;
pub mod data;
pub mod design;
pub mod error;
pub mod fit;
pub mod normal;
pub mod oracle;
pub mod point;
pub mod scalar;
pub mod theta;
pub mod uncertainty;
pub mod validate;

pub use bounds::{
    delta_beta, effect_bounds, g_tilde, log_pair_bounds, p_bounds, p_of_psi, pair_bounds,
    psi_effects, sensitivity_curve, straight_line, BoundPair, EffectBounds, SensitivityCurve,
};
pub use data::{ColumnMap, Dataset, Record};
pub use design::{DesignSpec, Point, Role, Term, Var, Variables};
pub use error::{Error, IterationRecord, Result};
pub use fit::{
    fit_logistic, fit_logistic_with, CoefficientRow, ConvergenceReport, FitOptions, FittedGlm,
};
pub use point::{g_y, nem_logit, point_effects, EffectTriple};
pub use scalar::{expit, log1pexp, logit, Scalar};
pub use theta::{theta_bundle, ContrastSpec, Level, LevelPair, ThetaBundle};
pub use uncertainty::{
    analyze, derivative_matrix, tau, tau_covariance, uncertainty_intervals, ContrastAnalysis,
    DerivativeMatrix, TauBounds, UncertaintyIntervals,
};

pub type Theta = ThetaBundle<f64>;
pub type Effects = EffectTriple<f64>;
pub type Bounds = EffectBounds<f64>;
pub type Interval = BoundPair<f64>;
pub type Intervals = UncertaintyIntervals<f64>;
pub type Analysis = ContrastAnalysis<f64>;

pub type Theta32 = ThetaBundle<f32>;
pub type Effects32 = EffectTriple<f32>;
pub type Bounds32 = EffectBounds<f32>;
