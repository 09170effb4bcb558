use medbounds::oracle::random::random_theta;
use medbounds::oracle::simulate::{coverage_simulation, CoverageSetup};
use medbounds::validate::{check_derivatives, run_validation, ValidationConfig};
use medbounds::{derivative_matrix, ThetaBundle};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn thetas(n: usize) -> Vec<ThetaBundle<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    (0..n).map(|_| random_theta(&mut rng)).collect()
}

#[test]
fn derivative_check_passes_on_the_real_matrix() {
    assert!(check_derivatives(derivative_matrix, &thetas(30), 1e-6, 1e-6).passed);
}

#[test]
fn derivative_check_catches_a_sign_error() {
    // Flip the sign of the lower NDE endpoint's derivative in one row.
    let mutated = |t: &ThetaBundle<f64>| {
        let mut d = derivative_matrix(t);
        d[3][0] = -d[3][0];
        d
    };
    let check = check_derivatives(mutated, &thetas(30), 1e-6, 1e-6);
    assert!(!check.passed);
    assert!(check.measured > 1e-3);
}

#[test]
fn quick_validation_passes_and_reproduces() {
    let cfg = ValidationConfig::quick(3);
    let a = run_validation(&cfg).unwrap();
    assert!(a.passed(), "{}", a.render());
    let b = run_validation(&cfg).unwrap();
    assert_eq!(a.render(), b.render());
    assert_eq!(a, b);
}

#[test]
fn coverage_report_is_seed_pinned() {
    let setup = CoverageSetup::default_model(800, 12, 21);
    let a = coverage_simulation(&setup).unwrap();
    let b = coverage_simulation(&setup).unwrap();
    assert_eq!(
        serde_json::to_string(&a).unwrap(),
        serde_json::to_string(&b).unwrap()
    );
    assert_eq!(a.failed_fits, 0);
}
