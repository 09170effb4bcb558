use medbounds::oracle::cun::cun_like_scm;
use medbounds::oracle::sample_dataset;
use medbounds::oracle::simulate::CoverageSetup;
use medbounds::{fit_logistic, logit, Dataset, DesignSpec, Record, Role};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn record(outcome: bool, mediator: bool, exposure: f64, c: f64) -> Record {
    Record {
        outcome,
        mediator,
        exposure,
        covariates: vec![c],
    }
}

/// Two exposure groups with chosen outcome counts.
fn two_groups(n0: usize, k0: usize, n1: usize, k1: usize) -> Dataset {
    let mut rows = Vec::new();
    for (x, n, k) in [(0.0, n0, k0), (1.0, n1, k1)] {
        for i in 0..n {
            rows.push(record(i < k, i % 2 == 0, x, 0.0));
        }
    }
    Dataset::new(vec!["C".into()], rows).unwrap()
}

#[test]
fn saturated_binary_exposure_matches_closed_form() {
    let data = two_groups(400, 90, 600, 310);
    let fit = fit_logistic(
        &data,
        &DesignSpec::parse(&["1", "x"]).unwrap(),
        Role::Outcome,
    )
    .unwrap();
    let (p0, p1) = (90.0 / 400.0, 310.0 / 600.0);
    let b = fit.coefficients();
    assert!((b[0] - logit(p0)).abs() < 1e-9);
    assert!((b[1] - (logit(p1) - logit(p0))).abs() < 1e-9);

    let v0 = 1.0 / (400.0 * p0 * (1.0 - p0));
    let v1 = 1.0 / (600.0 * p1 * (1.0 - p1));
    let cov = fit.covariance();
    assert!((cov[(0, 0)] - v0).abs() < 1e-9 * v0);
    assert!((cov[(1, 1)] - (v0 + v1)).abs() < 1e-9 * (v0 + v1));
    assert!((cov[(0, 1)] + v0).abs() < 1e-9 * v0);
}

/// Observed information `X' W X` computed directly from the data.
fn information(data: &Dataset, design: &DesignSpec, beta: &[f64]) -> DMatrix<f64> {
    let p = design.len();
    let mut info = DMatrix::zeros(p, p);
    for row in data.rows() {
        let x = design.row(&row).unwrap();
        let eta: f64 = x.iter().zip(beta).map(|(a, b)| a * b).sum();
        let mu = 1.0 / (1.0 + (-eta).exp());
        let w = mu * (1.0 - mu);
        for i in 0..p {
            for j in 0..p {
                info[(i, j)] += w * x[i] * x[j];
            }
        }
    }
    info
}

#[test]
fn covariance_inverts_information() {
    let data = sample_dataset(&cun_like_scm(), 5000, 41).unwrap();
    let design = DesignSpec::parse(&["1", "x", "m", "BMI", "Gender"]).unwrap();
    let fit = fit_logistic(&data, &design, Role::Outcome).unwrap();
    let product = fit.covariance() * information(&data, &design, fit.coefficients());
    let err = (product - DMatrix::identity(design.len(), design.len()))
        .abs()
        .max();
    assert!(err < 1e-6, "max |Cov * Info - I| = {err:e}");
}

#[test]
fn score_vanishes_at_the_estimate() {
    let data = sample_dataset(&cun_like_scm(), 5000, 42).unwrap();
    let design = DesignSpec::parse(&["1", "x", "BMI", "Gender"]).unwrap();
    let fit = fit_logistic(&data, &design, Role::Mediator).unwrap();
    let mut score = vec![0.0; design.len()];
    for (row, r) in data.rows().zip(data.records()) {
        let x = design.row(&row).unwrap();
        let eta: f64 = x.iter().zip(fit.coefficients()).map(|(a, b)| a * b).sum();
        let resid = f64::from(u8::from(r.mediator)) - 1.0 / (1.0 + (-eta).exp());
        for (s, xi) in score.iter_mut().zip(&x) {
            *s += resid * xi;
        }
    }
    // Score of the BMI and exposure columns scales with their magnitude.
    let worst = score.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    assert!(worst < 1e-5, "score {score:?}");
}

#[test]
fn trajectory_is_monotone() {
    let data = sample_dataset(&cun_like_scm(), 5000, 43).unwrap();
    let fit = fit_logistic(
        &data,
        &DesignSpec::parse(&["1", "x", "m", "BMI", "Gender"]).unwrap(),
        Role::Outcome,
    )
    .unwrap();
    let t = &fit.report().trajectory;
    assert!(t.len() >= 2);
    for w in t.windows(2) {
        let noise = 1e-9 * (1.0 + w[0].log_likelihood.abs());
        assert!(
            w[1].log_likelihood >= w[0].log_likelihood - noise,
            "{:?} then {:?}",
            w[0],
            w[1]
        );
    }
    assert!(fit.report().gradient_max_norm < 1e-8);
}

/// Every replicate of the coverage design at its sample size converges.
#[test]
fn coverage_design_fits_converge() {
    let setup = CoverageSetup::default_model(5000, 60, 7);
    for r in 0..setup.replicates {
        let data = sample_dataset(
            &setup.scm,
            setup.n,
            medbounds::oracle::replicate_seed(setup.seed, r as u64),
        )
        .unwrap();
        fit_logistic(&data, &setup.outcome_design, Role::Outcome).unwrap();
        fit_logistic(&data, &setup.mediator_design, Role::Mediator).unwrap();
    }
}

#[test]
fn refit_is_bit_identical() {
    let data = sample_dataset(&cun_like_scm(), 3000, 44).unwrap();
    let design = DesignSpec::parse(&["1", "x", "m", "BMI", "Gender"]).unwrap();
    let a = fit_logistic(&data, &design, Role::Outcome).unwrap();
    let b = fit_logistic(&data, &design, Role::Outcome).unwrap();
    assert_eq!(a, b);
}

fn rescaled(data: &Dataset, scale: f64, shift: f64) -> Dataset {
    let records = data
        .records()
        .iter()
        .map(|r| Record {
            exposure: r.exposure * scale + shift,
            ..r.clone()
        })
        .collect();
    Dataset::new(data.covariate_names().to_vec(), records).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    /// Rescaling the exposure leaves fitted linear predictors unchanged and
    /// scales its coefficient by the inverse factor.
    #[test]
    fn affine_exposure_rescaling(scale in 0.01f64..100.0, shift in -50.0f64..50.0, seed in 0u64..1000) {
        let data = sample_dataset(&cun_like_scm(), 2000, seed).unwrap();
        let design = DesignSpec::parse(&["1", "x", "BMI", "Gender"]).unwrap();
        let a = fit_logistic(&data, &design, Role::Mediator).unwrap();
        let moved = rescaled(&data, scale, shift);
        let b = fit_logistic(&moved, &design, Role::Mediator).unwrap();
        prop_assert!((b.coefficients()[1] * scale - a.coefficients()[1]).abs() < 1e-7 * (1.0 + a.coefficients()[1].abs()));
        prop_assert!((b.std_errors()[1] * scale - a.std_errors()[1]).abs() < 1e-6 * a.std_errors()[1]);
        for (ra, rb) in data.rows().zip(moved.rows()).take(50) {
            let (la, lb) = (a.linear_predictor(&ra).unwrap(), b.linear_predictor(&rb).unwrap());
            prop_assert!((la - lb).abs() < 1e-7, "{la} vs {lb}");
        }
    }
}
