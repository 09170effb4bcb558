//! Central finite differences for the bound Jacobian.

use crate::theta::ThetaBundle;
use crate::uncertainty::{tau, DerivativeMatrix};

/// `(f(theta + h e_i) - f(theta - h e_i)) / 2h` for each component `i`.
pub fn central_jacobian_of(
    f: impl Fn(&ThetaBundle<f64>) -> [f64; 4],
    theta: &ThetaBundle<f64>,
    h: f64,
) -> DerivativeMatrix<f64> {
    std::array::from_fn(|i| {
        let mut up = theta.theta;
        let mut down = theta.theta;
        up[i] += h;
        down[i] -= h;
        let (fu, fd) = (f(&theta.with_theta(up)), f(&theta.with_theta(down)));
        std::array::from_fn(|j| (fu[j] - fd[j]) / (2.0 * h))
    })
}

/// Finite-difference Jacobian of the four log bound endpoints.
pub fn central_jacobian(theta: &ThetaBundle<f64>, h: f64) -> DerivativeMatrix<f64> {
    central_jacobian_of(tau, theta, h)
}

pub fn max_abs_difference(a: &DerivativeMatrix<f64>, b: &DerivativeMatrix<f64>) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
