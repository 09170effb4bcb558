//! Maximum-likelihood logistic regression by damped Newton iteration.
//!
//! Columns are centred and scaled before iterating, so the convergence
//! tolerance and the separation threshold act on a standardized scale and the
//! fit is equivariant under affine rescaling of any continuous basis column.

use log::warn;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::design::{DesignSpec, Role, Term, Variables};
use crate::error::{Error, IterationRecord, Result};
use crate::normal::two_sided_p_value;
use crate::scalar::log1pexp;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Convergence threshold on the max-norm of the score (standardized scale).
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Any standardized coefficient beyond this magnitude, while the
    /// likelihood is still improving, is reported as separation.
    pub separation_threshold: f64,
    pub max_step_halvings: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            tolerance: 1e-8,
            max_iterations: 100,
            separation_threshold: 15.0,
            max_step_halvings: 40,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub iterations: usize,
    pub gradient_max_norm: f64,
    /// NaN for models built from external estimates; stored as `null`.
    #[serde(with = "nan_as_null")]
    pub log_likelihood: f64,
    pub trajectory: Vec<IterationRecord>,
    pub warnings: Vec<String>,
}

mod nan_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_nan() {
            s.serialize_none()
        } else {
            s.serialize_some(v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

/// One row of a coefficient table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientRow {
    pub term: String,
    pub estimate: f64,
    pub std_error: f64,
    pub z: f64,
    pub p_value: f64,
}

/// A fitted logistic model: design, estimates and their covariance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FittedGlmRepr")]
pub struct FittedGlm {
    role: Role,
    design: DesignSpec,
    coefficients: Vec<f64>,
    covariance: DMatrix<f64>,
    n_obs: usize,
    report: ConvergenceReport,
}

#[derive(Deserialize)]
struct FittedGlmRepr {
    role: Role,
    design: DesignSpec,
    coefficients: Vec<f64>,
    covariance: DMatrix<f64>,
    #[serde(default)]
    n_obs: usize,
    report: Option<ConvergenceReport>,
}

impl TryFrom<FittedGlmRepr> for FittedGlm {
    type Error = Error;
    fn try_from(r: FittedGlmRepr) -> Result<Self> {
        let mut glm = FittedGlm::from_parts(r.role, r.design, r.coefficients, r.covariance)?;
        glm.n_obs = r.n_obs;
        if let Some(report) = r.report {
            glm.report = report;
        }
        Ok(glm)
    }
}

impl FittedGlm {
    /// Builds a model from externally supplied estimates, e.g. published
    /// coefficients and standard errors.
    pub fn from_parts(
        role: Role,
        design: DesignSpec,
        coefficients: Vec<f64>,
        covariance: DMatrix<f64>,
    ) -> Result<Self> {
        let p = design.len();
        if coefficients.len() != p || covariance.nrows() != p || covariance.ncols() != p {
            return Err(Error::InvalidDesign(format!(
                "design has {p} terms but {} coefficients and a {}x{} covariance",
                coefficients.len(),
                covariance.nrows(),
                covariance.ncols()
            )));
        }
        if role == Role::Mediator && design.includes_mediator() {
            return Err(Error::InvalidDesign(
                "a mediator model cannot reference the mediator".into(),
            ));
        }
        if coefficients
            .iter()
            .chain(covariance.iter())
            .any(|v| !v.is_finite())
        {
            return Err(Error::Numerical("non-finite model parameters".into()));
        }
        for i in 0..p {
            if covariance[(i, i)] < 0.0 {
                return Err(Error::NotPositiveSemiDefinite(format!(
                    "negative variance for term {i}"
                )));
            }
            for j in 0..i {
                let (a, b) = (covariance[(i, j)], covariance[(j, i)]);
                if (a - b).abs() > 1e-12 * (1.0 + a.abs().max(b.abs())) {
                    return Err(Error::NotPositiveSemiDefinite(
                        "covariance is not symmetric".into(),
                    ));
                }
            }
        }
        let covariance = (&covariance + covariance.transpose()) * 0.5;
        Ok(FittedGlm {
            role,
            design,
            coefficients,
            covariance,
            n_obs: 0,
            report: ConvergenceReport {
                iterations: 0,
                gradient_max_norm: 0.0,
                log_likelihood: f64::NAN,
                trajectory: Vec::new(),
                warnings: Vec::new(),
            },
        })
    }

    pub fn role(&self) -> Role {
        self.role
    }
    pub fn design(&self) -> &DesignSpec {
        &self.design
    }
    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }
    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }
    pub fn n_obs(&self) -> usize {
        self.n_obs
    }
    pub fn report(&self) -> &ConvergenceReport {
        &self.report
    }

    pub fn std_errors(&self) -> Vec<f64> {
        (0..self.design.len())
            .map(|i| self.covariance[(i, i)].sqrt())
            .collect()
    }

    /// Gradient of the linear predictor with respect to the coefficients.
    pub fn design_row(&self, point: &impl Variables) -> Result<Vec<f64>> {
        self.design.row(point)
    }

    pub fn linear_predictor(&self, point: &impl Variables) -> Result<f64> {
        Ok(dot(&self.design_row(point)?, &self.coefficients))
    }

    pub fn coefficient_table(&self) -> Vec<CoefficientRow> {
        self.design
            .labels()
            .into_iter()
            .zip(self.coefficients.iter().zip(self.std_errors()))
            .map(|(term, (&estimate, std_error))| {
                let z = estimate / std_error;
                CoefficientRow {
                    term,
                    estimate,
                    std_error,
                    z,
                    p_value: two_sided_p_value(z),
                }
            })
            .collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Fits with [`FitOptions::default`].
pub fn fit_logistic(data: &Dataset, design: &DesignSpec, role: Role) -> Result<FittedGlm> {
    fit_logistic_with(data, design, role, &FitOptions::default())
}

pub fn fit_logistic_with(
    data: &Dataset,
    design: &DesignSpec,
    role: Role,
    options: &FitOptions,
) -> Result<FittedGlm> {
    if role == Role::Mediator && design.includes_mediator() {
        return Err(Error::InvalidDesign(
            "a mediator model cannot reference the mediator".into(),
        ));
    }
    let y: Vec<f64> = data
        .records()
        .iter()
        .map(|r| match role {
            Role::Outcome => r.outcome,
            Role::Mediator => r.mediator,
        })
        .map(|b| if b { 1.0 } else { 0.0 })
        .collect();
    let events: f64 = y.iter().sum();
    if events == 0.0 || events == y.len() as f64 {
        return Err(Error::InvalidData(
            format!("the {role:?} response takes a single value").to_lowercase(),
        ));
    }

    let labels = design.labels();
    let n = data.len();
    let p = design.len();
    let mut x = Vec::with_capacity(n * p);
    for (row, vars) in data.rows().enumerate() {
        for (term, label) in design.terms().iter().zip(&labels) {
            let v = term.eval(&vars)?;
            if !v.is_finite() {
                return Err(Error::NonFiniteTerm {
                    term: label.clone(),
                    row: row + 1,
                });
            }
            x.push(v);
        }
    }

    let scaling = Standardization::new(&x, n, design, &labels)?;
    let z = scaling.apply(&x, n);
    check_rank(&z, n, p, &labels)?;

    let mut b = vec![0.0; p];
    let mut state = NewtonState::evaluate(&z, &y, &b, p);
    let mut trajectory = vec![IterationRecord {
        iteration: 0,
        log_likelihood: state.log_likelihood,
        gradient_max_norm: state.gradient_max_norm(),
        step_scale: 0.0,
    }];
    let mut warnings = Vec::new();
    let mut converged = state.gradient_max_norm() < options.tolerance;
    let mut iteration = 0;
    while !converged {
        if iteration == options.max_iterations {
            return Err(Error::NonConvergence { trajectory });
        }
        iteration += 1;
        let info = DMatrix::from_row_slice(p, p, &state.information);
        let chol = info.cholesky().ok_or_else(|| {
            Error::Numerical("observed information is not positive definite".into())
        })?;
        let step = chol.solve(&DVector::from_column_slice(&state.score));

        // Below this predicted gain the summed log-likelihood cannot resolve
        // the change, so the full Newton step is taken without comparison.
        let resolution = 1e-9 * (1.0 + state.log_likelihood.abs());
        let predicted: f64 = state
            .score
            .iter()
            .zip(step.iter())
            .map(|(g, s)| g * s)
            .sum();
        let slack = 16.0 * f64::EPSILON * (1.0 + state.log_likelihood.abs());
        let mut scale = 1.0;
        let mut accepted = None;
        if predicted < resolution {
            let candidate: Vec<f64> = b.iter().zip(step.iter()).map(|(bi, si)| bi + si).collect();
            let ll = log_likelihood(&z, &y, &candidate, p);
            accepted = Some((candidate, ll));
        }
        for _ in 0..=options.max_step_halvings {
            if accepted.is_some() {
                break;
            }
            let candidate: Vec<f64> = b
                .iter()
                .zip(step.iter())
                .map(|(bi, si)| bi + scale * si)
                .collect();
            let ll = log_likelihood(&z, &y, &candidate, p);
            if ll >= state.log_likelihood - slack {
                accepted = Some((candidate, ll));
                break;
            }
            scale *= 0.5;
        }
        let Some((candidate, ll)) = accepted else {
            return Err(Error::NonConvergence { trajectory });
        };
        if scale < 1.0 {
            warnings.push(format!("step halved to {scale:e} at iteration {iteration}"));
        }
        if ll > state.log_likelihood {
            if let Some(j) = candidate
                .iter()
                .position(|c| c.abs() > options.separation_threshold)
            {
                return Err(Error::Separation {
                    term: labels[j].clone(),
                    iteration,
                });
            }
        }
        b = candidate;
        state = NewtonState::evaluate(&z, &y, &b, p);
        trajectory.push(IterationRecord {
            iteration,
            log_likelihood: state.log_likelihood,
            gradient_max_norm: state.gradient_max_norm(),
            step_scale: scale,
        });
        converged = state.gradient_max_norm() < options.tolerance;
    }

    let info = DMatrix::from_row_slice(p, p, &state.information);
    let standardized_cov = info
        .cholesky()
        .ok_or_else(|| {
            Error::Numerical("observed information is not positive definite at the optimum".into())
        })?
        .inverse();
    let t = scaling.back_transform(p);
    let coefficients = (&t * DVector::from_column_slice(&b))
        .iter()
        .copied()
        .collect();
    let covariance = &t * standardized_cov * t.transpose();
    let covariance = (&covariance + covariance.transpose()) * 0.5;

    let extreme = (0..n).any(|i| dot(&z[i * p..(i + 1) * p], &b).abs() > 30.0);
    if extreme {
        warnings.push("some fitted probabilities are numerically 0 or 1".into());
    }
    for w in &warnings {
        warn!("{role:?} model: {w}");
    }

    Ok(FittedGlm {
        role,
        design: design.clone(),
        coefficients,
        covariance,
        n_obs: n,
        report: ConvergenceReport {
            iterations: iteration,
            gradient_max_norm: state.gradient_max_norm(),
            log_likelihood: state.log_likelihood,
            trajectory,
            warnings,
        },
    })
}

struct Standardization {
    shift: Vec<f64>,
    scale: Vec<f64>,
    intercept: Option<usize>,
}

impl Standardization {
    fn new(x: &[f64], n: usize, design: &DesignSpec, labels: &[String]) -> Result<Self> {
        let p = design.len();
        let intercept = design.has_intercept().then_some(0);
        let mut shift = vec![0.0; p];
        let mut scale = vec![1.0; p];
        for (j, term) in design.terms().iter().enumerate() {
            if *term == Term::Intercept {
                continue;
            }
            let column = (0..n).map(|i| x[i * p + j]);
            let mean = column.clone().sum::<f64>() / n as f64;
            let centre = if intercept.is_some() { mean } else { 0.0 };
            let spread = (column.map(|v| (v - centre).powi(2)).sum::<f64>() / n as f64).sqrt();
            // Also catches a NaN spread.
            if spread.partial_cmp(&(1e-12 * (1.0 + mean.abs())))
                != Some(std::cmp::Ordering::Greater)
            {
                return Err(Error::SingularDesign {
                    term: labels[j].clone(),
                    collinear_with: intercept
                        .map(|_| vec![labels[0].clone()])
                        .unwrap_or_default(),
                });
            }
            shift[j] = centre;
            scale[j] = spread;
        }
        Ok(Standardization {
            shift,
            scale,
            intercept,
        })
    }

    fn apply(&self, x: &[f64], n: usize) -> Vec<f64> {
        let p = self.shift.len();
        let mut z = x.to_vec();
        for i in 0..n {
            for j in 0..p {
                z[i * p + j] = (x[i * p + j] - self.shift[j]) / self.scale[j];
            }
        }
        z
    }

    /// Linear map from standardized to original-scale coefficients.
    fn back_transform(&self, p: usize) -> DMatrix<f64> {
        let mut t = DMatrix::zeros(p, p);
        for j in 0..p {
            t[(j, j)] = 1.0 / self.scale[j];
            if let Some(k) = self.intercept {
                if j != k {
                    t[(k, j)] = -self.shift[j] / self.scale[j];
                }
            }
        }
        t
    }
}

/// Gram-Schmidt pass over the standardized columns; a column whose residual
/// is negligible is reported together with the terms that reproduce it.
fn check_rank(z: &[f64], n: usize, p: usize, labels: &[String]) -> Result<()> {
    let column = |j: usize| DVector::from_iterator(n, (0..n).map(|i| z[i * p + j]));
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(p);
    for j in 0..p {
        let original = column(j);
        let mut v = original.clone();
        for q in &basis {
            let proj = q.dot(&v);
            v.axpy(-proj, q, 1.0);
        }
        let norm = v.norm();
        if norm * norm < 1e-10 * original.norm_squared() {
            let previous = DMatrix::from_fn(n, j, |i, k| z[i * p + k]);
            let coef = previous
                .svd(true, true)
                .solve(&original, 1e-12)
                .map_err(|e| Error::Numerical(e.to_string()))?;
            let biggest = coef.amax();
            let collinear_with = coef
                .iter()
                .enumerate()
                .filter(|(_, c)| c.abs() > 1e-6 * biggest)
                .map(|(k, _)| labels[k].clone())
                .collect();
            return Err(Error::SingularDesign {
                term: labels[j].clone(),
                collinear_with,
            });
        }
        basis.push(v / norm);
    }
    Ok(())
}

fn log_likelihood(z: &[f64], y: &[f64], b: &[f64], p: usize) -> f64 {
    y.iter()
        .enumerate()
        .map(|(i, yi)| {
            let eta = dot(&z[i * p..(i + 1) * p], b);
            yi * eta - log1pexp(eta)
        })
        .sum()
}

struct NewtonState {
    log_likelihood: f64,
    score: Vec<f64>,
    /// Row-major `p x p`.
    information: Vec<f64>,
}

impl NewtonState {
    fn evaluate(z: &[f64], y: &[f64], b: &[f64], p: usize) -> Self {
        let mut ll = 0.0;
        let mut score = vec![0.0; p];
        let mut info = vec![0.0; p * p];
        for (i, yi) in y.iter().enumerate() {
            let row = &z[i * p..(i + 1) * p];
            let eta = dot(row, b);
            ll += yi * eta - log1pexp(eta);
            let mu = crate::scalar::expit(eta);
            let w = mu * (1.0 - mu);
            let r = yi - mu;
            for a in 0..p {
                score[a] += row[a] * r;
                let wa = w * row[a];
                for c in 0..=a {
                    info[a * p + c] += wa * row[c];
                }
            }
        }
        for a in 0..p {
            for c in 0..a {
                info[c * p + a] = info[a * p + c];
            }
        }
        NewtonState {
            log_likelihood: ll,
            score,
            information: info,
        }
    }

    fn gradient_max_norm(&self) -> f64 {
        self.score.iter().fold(0.0, |m, s| m.max(s.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Record;

    fn dataset(rows: &[(bool, bool, f64, f64)]) -> Dataset {
        Dataset::new(
            vec!["BMI".into()],
            rows.iter()
                .map(|&(y, m, x, c)| Record {
                    outcome: y,
                    mediator: m,
                    exposure: x,
                    covariates: vec![c],
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn balanced_intercept_only() {
        let d = dataset(&[
            (false, true, 1.0, 1.0),
            (true, false, 2.0, 1.0),
            (false, false, 3.0, 1.0),
            (true, true, 4.0, 1.0),
        ]);
        let fit = fit_logistic(&d, &DesignSpec::parse(&["1"]).unwrap(), Role::Outcome).unwrap();
        assert!(fit.coefficients()[0].abs() < 1e-12);
        assert!((fit.covariance()[(0, 0)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn perfect_separation_is_reported() {
        let rows: Vec<_> = (0..40)
            .map(|i| (i % 3 == 0, i % 3 == 0, i as f64, 20.0 + (i % 7) as f64))
            .collect();
        let d = dataset(&rows);
        let design = DesignSpec::parse(&["1", "m"]).unwrap();
        match fit_logistic(&d, &design, Role::Outcome) {
            Err(Error::Separation { .. }) => {}
            other => panic!("expected separation, got {other:?}"),
        }
    }

    #[test]
    fn collinear_terms_are_named() {
        let rows: Vec<_> = (0..30)
            .map(|i| (i % 2 == 0, i % 5 == 0, i as f64, 2.0 * i as f64 + 1.0))
            .collect();
        let d = dataset(&rows);
        let design = DesignSpec::parse(&["1", "x", "BMI"]).unwrap();
        match fit_logistic(&d, &design, Role::Outcome) {
            Err(Error::SingularDesign {
                term,
                collinear_with,
            }) => {
                assert_eq!(term, "BMI");
                assert!(collinear_with.contains(&"x".to_string()));
            }
            other => panic!("expected singular design, got {other:?}"),
        }
        let constant = DesignSpec::parse(&["1", "x", "table(x; 100=1, 200=2)"]).unwrap();
        assert!(matches!(
            fit_logistic(&d, &constant, Role::Outcome),
            Err(Error::SingularDesign { .. })
        ));
    }

    #[test]
    fn mediator_design_may_not_use_mediator() {
        let d = dataset(&[(false, true, 1.0, 1.0), (true, false, 2.0, 1.0)]);
        let design = DesignSpec::parse(&["1", "m"]).unwrap();
        assert!(matches!(
            fit_logistic(&d, &design, Role::Mediator),
            Err(Error::InvalidDesign(_))
        ));
    }

    #[test]
    fn constant_response_is_rejected() {
        let d = dataset(&[(false, true, 1.0, 1.0), (false, false, 2.0, 1.0)]);
        assert!(matches!(
            fit_logistic(&d, &DesignSpec::parse(&["1"]).unwrap(), Role::Outcome),
            Err(Error::InvalidData(_))
        ));
    }

    #[test]
    fn iteration_cap_yields_trajectory() {
        let rows: Vec<_> = (0..50)
            .map(|i| (i % 3 == 0, i % 2 == 0, i as f64, 1.0))
            .collect();
        let d = dataset(&rows);
        let options = FitOptions {
            max_iterations: 1,
            ..FitOptions::default()
        };
        match fit_logistic_with(
            &d,
            &DesignSpec::parse(&["1", "x"]).unwrap(),
            Role::Outcome,
            &options,
        ) {
            Err(Error::NonConvergence { trajectory }) => assert_eq!(trajectory.len(), 2),
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn from_parts_validates_shapes() {
        let design = DesignSpec::parse(&["1", "x"]).unwrap();
        assert!(FittedGlm::from_parts(
            Role::Outcome,
            design.clone(),
            vec![0.0],
            DMatrix::zeros(2, 2)
        )
        .is_err());
        let mut asym = DMatrix::zeros(2, 2);
        asym[(0, 1)] = 0.1;
        assert!(FittedGlm::from_parts(Role::Outcome, design, vec![0.0, 0.0], asym).is_err());
    }
}
