//! Self-check of the effect machinery against the independent oracles.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bounds::{effect_bounds, log_pair_bounds, psi_effects};
use crate::error::Result;
use crate::oracle::enumerate::{enumerate_counterfactuals, observational_theta, true_effects};
use crate::oracle::fd::{central_jacobian, max_abs_difference};
use crate::oracle::random::{per_mille_f64, random_scm, random_theta, RandomScmShape};
use crate::oracle::sample::replicate_seed;
use crate::oracle::simulate::{coverage_simulation, CoverageSetup};
use crate::oracle::sweep::{decoupled_sweep_bounds, pair_sweep_bounds, psi_sweep_bounds};
use crate::point::{nem_logit, point_effects};
use crate::scalar::logit;
use crate::theta::{Level, LevelPair, ThetaBundle};
use crate::uncertainty::{derivative_matrix, DerivativeMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationConfig {
    pub seed: u64,
    pub thetas: usize,
    pub sweep_points: usize,
    pub sweep_range: (f64, f64),
    pub scms: usize,
    pub fd_step: f64,
    pub coverage_n: usize,
    pub coverage_replicates: usize,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        ValidationConfig {
            seed: 20240611,
            thetas: 200,
            sweep_points: 20_001,
            sweep_range: (-30.0, 30.0),
            scms: 200,
            fd_step: 1e-6,
            coverage_n: 5000,
            coverage_replicates: 500,
        }
    }
}

impl ValidationConfig {
    /// Small sizes for smoke tests.
    pub fn quick(seed: u64) -> Self {
        ValidationConfig {
            seed,
            thetas: 20,
            sweep_points: 2001,
            scms: 20,
            coverage_n: 1000,
            coverage_replicates: 40,
            ..Self::default()
        }
    }
}

/// Outcome of one check. For rate checks `measured` must reach `tolerance`;
/// for error checks it must stay at or below it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl Check {
    fn error(name: &str, measured: f64, tolerance: f64, detail: String) -> Self {
        Check {
            name: name.into(),
            passed: measured <= tolerance,
            measured,
            tolerance,
            detail,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub seed: u64,
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let _ = writeln!(
                out,
                "{} {:<34} measured {:.3e}  tolerance {:.1e}  {}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.measured,
                c.tolerance,
                c.detail
            );
        }
        let failed = self.checks.iter().filter(|c| !c.passed).count();
        let _ = writeln!(
            out,
            "{} checks, {failed} failed (seed {})",
            self.checks.len(),
            self.seed
        );
        out
    }
}

fn thetas(seed: u64, count: usize) -> Vec<ThetaBundle<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_theta(&mut rng)).collect()
}

/// Compares a derivative implementation with central finite differences.
pub fn check_derivatives(
    derivative: impl Fn(&ThetaBundle<f64>) -> DerivativeMatrix<f64>,
    thetas: &[ThetaBundle<f64>],
    h: f64,
    tolerance: f64,
) -> Check {
    let err = thetas
        .iter()
        .map(|t| max_abs_difference(&derivative(t), &central_jacobian(t, h)))
        .fold(0.0, f64::max);
    Check::error(
        "derivative matrix vs differences",
        err,
        tolerance,
        format!("{} thetas, h = {h:e}", thetas.len()),
    )
}

fn sweep_checks(cfg: &ValidationConfig, sample: &[ThetaBundle<f64>]) -> Result<Vec<Check>> {
    let (range, points) = (cfg.sweep_range, cfg.sweep_points);
    let (mut pair_err, mut decoupled_err, mut excess) = (0.0f64, 0.0f64, 0.0f64);
    for t in sample {
        for pair in LevelPair::ALL {
            let swept = pair_sweep_bounds(t, pair, range, points)?;
            let closed = log_pair_bounds(t, pair);
            pair_err = pair_err
                .max((swept.lower - closed.lower).abs())
                .max((swept.upper - closed.upper).abs());
        }
        let closed = effect_bounds(t);
        let decoupled = decoupled_sweep_bounds(t, range, points)?;
        for (s, c) in decoupled
            .components()
            .iter()
            .zip(closed.components())
            .take(2)
        {
            decoupled_err = decoupled_err
                .max((s.lower - c.lower).abs())
                .max((s.upper - c.upper).abs());
        }
        let shared = psi_sweep_bounds(t, range, points)?;
        for (s, c) in shared.components().iter().zip(closed.components()) {
            excess = excess.max(c.lower - s.lower).max(s.upper - c.upper);
        }
    }
    let detail = format!(
        "{} thetas, {points} shifts on [{}, {}]",
        sample.len(),
        range.0,
        range.1
    );
    Ok(vec![
        Check::error("pair bounds vs shift sweep", pair_err, 1e-6, detail.clone()),
        Check::error(
            "NDE/NIE bounds vs per-pair sweep",
            decoupled_err,
            1e-6,
            detail.clone(),
        ),
        Check::error(
            "shared-shift sweep inside bounds",
            excess.max(0.0),
            1e-9,
            detail,
        ),
    ])
}

fn scm_checks(cfg: &ValidationConfig) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(replicate_seed(cfg.seed, 1));
    let (mut outside, mut point_err, mut formula_err) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..cfg.scms {
        let scm = random_scm(&mut rng, RandomScmShape::default(), per_mille_f64);
        for c in 0..scm.c_support().len() {
            let contrast = scm.contrast(2, 0, c);
            let truth = true_effects(&scm, &contrast)?;
            let theta = observational_theta(&scm, &contrast)?;
            let bounds = effect_bounds(&theta);
            for (b, v) in bounds.components().iter().zip(truth.components()) {
                outside = outside.max(b.lower - v).max(v - b.upper);
            }
            for (p, v) in point_effects(&theta)
                .components()
                .iter()
                .zip(truth.components())
            {
                point_err = point_err.max((p - v).abs());
            }
            let law = enumerate_counterfactuals(&scm, &contrast)?;
            let crossed = logit(*law.crossed(Level::Active, Level::Reference));
            formula_err = formula_err.max((nem_logit(&theta, LevelPair::Cross) - crossed).abs());
        }
    }
    let detail = format!("{} random models without latent confounding", cfg.scms);
    Ok(vec![
        Check::error(
            "true effects inside bounds",
            outside.max(0.0),
            1e-9,
            detail.clone(),
        ),
        Check::error(
            "point effects equal true effects",
            point_err,
            1e-9,
            detail.clone(),
        ),
        Check::error("mediation formula identity", formula_err, 1e-10, detail),
    ])
}

/// Runs every check; deterministic given the configuration.
pub fn run_validation(cfg: &ValidationConfig) -> Result<ValidationReport> {
    let sample = thetas(cfg.seed, cfg.thetas);
    let mut checks = sweep_checks(cfg, &sample)?;

    let psi0 = sample
        .iter()
        .map(|t| {
            let (a, b) = (psi_effects(t, 0.0), point_effects(t));
            a.components()
                .iter()
                .zip(b.components())
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    checks.push(Check::error(
        "zero shift equals point effects",
        psi0,
        1e-12,
        format!("{} thetas", sample.len()),
    ));

    checks.push(check_derivatives(
        derivative_matrix,
        &sample,
        cfg.fd_step,
        1e-6,
    ));
    checks.extend(scm_checks(cfg)?);

    let setup = CoverageSetup::default_model(
        cfg.coverage_n,
        cfg.coverage_replicates,
        replicate_seed(cfg.seed, 2),
    );
    let report = coverage_simulation(&setup)?;
    let worst = report.rates().into_iter().fold(1.0, f64::min);
    checks.push(Check {
        name: "uncertainty interval coverage".into(),
        passed: worst >= 0.93,
        measured: worst,
        tolerance: 0.93,
        detail: format!(
            "NDE {:.3}, NIE {:.3}, TE {:.3} over {} replicates of n = {}",
            report.rates()[0],
            report.rates()[1],
            report.rates()[2],
            report.replicates,
            cfg.coverage_n
        ),
    });
    Ok(ValidationReport {
        seed: cfg.seed,
        checks,
    })
}
