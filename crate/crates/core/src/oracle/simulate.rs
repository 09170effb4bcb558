//! Repeated-sampling studies: interval coverage and a parametric bootstrap
//! of the bound endpoints.

use std::collections::BTreeMap;

use log::debug;
use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::design::{DesignSpec, Point, Role};
use crate::error::{Error, Result};
use crate::fit::{fit_logistic, FittedGlm};
use crate::point::EffectTriple;
use crate::scalar::expit;
use crate::theta::{theta_bundle, ContrastSpec, ThetaBundle};
use crate::uncertainty::{analyze, tau};

use super::enumerate::true_effects;
use super::sample::{replicate_seed, sample_dataset};
use super::scm::StructuralModel;

#[derive(Debug, Clone)]
pub struct CoverageSetup {
    pub scm: StructuralModel<f64>,
    pub contrast: ContrastSpec,
    pub outcome_design: DesignSpec,
    pub mediator_design: DesignSpec,
    pub n: usize,
    pub replicates: usize,
    pub alpha: f64,
    pub seed: u64,
}

impl CoverageSetup {
    /// Measured confounding by a binary covariate, no latents, correctly
    /// specified logistic models; cross-world independence holds.
    pub fn default_model(n: usize, replicates: usize, seed: u64) -> Self {
        let x_rows = [[0.4, 0.3, 0.2, 0.1], [0.2, 0.3, 0.3, 0.2]];
        let grid = vec![0.0, 1.0, 2.0, 3.0];
        let g = grid.clone();
        let scm = StructuralModel::from_fn(
            vec!["Gender".into()],
            vec![(vec![0.0], 0.45), (vec![1.0], 0.55)],
            vec![1.0],
            vec![1.0],
            grid,
            |c, _| x_rows[c].to_vec(),
            |x, c, _| expit(-0.8 + 0.5 * g[x] + 0.4 * c as f64),
            |x, m, c, _, _| {
                expit(-1.5 + 0.35 * g[x] + 0.9 * f64::from(u8::from(m)) + 0.3 * c as f64)
            },
        )
        .expect("coverage model is valid");
        let contrast = ContrastSpec::new(3.0, 0.0, BTreeMap::from([("Gender".to_string(), 1.0)]))
            .expect("distinct levels");
        CoverageSetup {
            scm,
            contrast,
            outcome_design: DesignSpec::parse(&["1", "x", "m", "Gender"]).expect("valid design"),
            mediator_design: DesignSpec::parse(&["1", "x", "Gender"]).expect("valid design"),
            n,
            replicates,
            alpha: 0.05,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub truth: EffectTriple<f64>,
    pub replicates: usize,
    /// Replicates where either model failed to fit; counted as not covering.
    pub failed_fits: usize,
    /// Replicates whose interval contains the truth, for NDE, NIE, TE.
    pub covered: [usize; 3],
}

impl CoverageReport {
    pub fn rates(&self) -> [f64; 3] {
        self.covered.map(|k| k as f64 / self.replicates as f64)
    }
}

/// Samples, refits and checks interval coverage of the exact effects.
pub fn coverage_simulation(setup: &CoverageSetup) -> Result<CoverageReport> {
    if setup.replicates == 0 {
        return Err(Error::Config(
            "coverage simulation needs at least one replicate".into(),
        ));
    }
    let truth = true_effects(&setup.scm, &setup.contrast)?;
    let mut covered = [0usize; 3];
    let mut failed_fits = 0;
    for r in 0..setup.replicates {
        let data = sample_dataset(&setup.scm, setup.n, replicate_seed(setup.seed, r as u64))?;
        let fitted = fit_logistic(&data, &setup.outcome_design, Role::Outcome).and_then(|o| {
            Ok((
                o,
                fit_logistic(&data, &setup.mediator_design, Role::Mediator)?,
            ))
        });
        let (outcome, mediator) = match fitted {
            Ok(pair) => pair,
            Err(e) => {
                debug!("replicate {r}: fit failed: {e}");
                failed_fits += 1;
                continue;
            }
        };
        let theta = theta_bundle(&outcome, &mediator, &setup.contrast)?;
        let intervals = analyze(&theta, setup.alpha)?.intervals;
        for (k, (iv, t)) in intervals
            .components()
            .iter()
            .zip(truth.components())
            .enumerate()
        {
            if iv.contains(t, 0.0) {
                covered[k] += 1;
            }
        }
    }
    Ok(CoverageReport {
        truth,
        replicates: setup.replicates,
        failed_fits,
        covered,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    pub replicates: usize,
    pub tau_mean: [f64; 4],
    pub tau_sd: [f64; 4],
}

/// Square root `L` with `L L^T = cov`; falls back to an eigen decomposition
/// with negative eigenvalues clipped when Cholesky fails.
fn covariance_root(cov: &DMatrix<f64>) -> DMatrix<f64> {
    match Cholesky::new(cov.clone()) {
        Some(ch) => ch.l(),
        None => {
            let eig = SymmetricEigen::new(cov.clone());
            let sqrt = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
            &eig.eigenvectors * DMatrix::from_diagonal(&sqrt)
        }
    }
}

/// Draws coefficient vectors from their estimated sampling distributions
/// and reports the spread of the four log bound endpoints.
pub fn parametric_bootstrap(
    outcome: &FittedGlm,
    mediator: &FittedGlm,
    contrast: &ContrastSpec,
    replicates: usize,
    seed: u64,
) -> Result<BootstrapSummary> {
    if replicates < 2 {
        return Err(Error::Config(
            "bootstrap needs at least two replicates".into(),
        ));
    }
    let covs = || contrast.covariates.clone();
    let outcome_rows = [
        (contrast.x, 0.0),
        (contrast.x_star, 0.0),
        (contrast.x, 1.0),
        (contrast.x_star, 1.0),
    ]
    .iter()
    .map(|&(x, m)| outcome.design_row(&Point::new(x, Some(m), covs())))
    .collect::<Result<Vec<_>>>()?;
    let mediator_rows = [contrast.x, contrast.x_star]
        .iter()
        .map(|&x| mediator.design_row(&Point::new(x, None, covs())))
        .collect::<Result<Vec<_>>>()?;

    let models = [(outcome, &outcome_rows), (mediator, &mediator_rows)];
    let roots = models.map(|(m, _)| covariance_root(m.covariance()));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = [0.0; 4];
    let mut sum_sq = [0.0; 4];
    for _ in 0..replicates {
        let mut theta = Vec::with_capacity(6);
        for ((model, rows), root) in models.iter().zip(&roots) {
            let p = model.coefficients().len();
            let z = DVector::from_fn(p, |_, _| StandardNormal.sample(&mut rng));
            let beta = DVector::from_column_slice(model.coefficients()) + root * z;
            theta.extend(
                rows.iter()
                    .map(|r| r.iter().zip(beta.iter()).map(|(a, b)| a * b).sum::<f64>()),
            );
        }
        let t = tau(&ThetaBundle::from_predictors(
            theta.try_into().expect("six predictors"),
        ));
        for j in 0..4 {
            sum[j] += t[j];
            sum_sq[j] += t[j] * t[j];
        }
    }
    let n = replicates as f64;
    let tau_mean = sum.map(|s| s / n);
    let tau_sd = std::array::from_fn(|j| {
        ((sum_sq[j] - n * tau_mean[j] * tau_mean[j]) / (n - 1.0))
            .max(0.0)
            .sqrt()
    });
    Ok(BootstrapSummary {
        replicates,
        tau_mean,
        tau_sd,
    })
}
