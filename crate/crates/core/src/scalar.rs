//! Scalar abstraction shared by the effect, bound and delta-method code.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive};

/// Floating point type the effect formulas are evaluated in: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + Debug + Display + LowerExp + Sum + Send + Sync + 'static
{
    /// Converts an `f64` constant into `Self`.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("constant representable in scalar type")
    }
}

impl<T> Scalar for T where
    T: Float + FromPrimitive + Debug + Display + LowerExp + Sum + Send + Sync + 'static
{
}

/// `log(1 + exp(z))` without overflow for large `|z|`.
pub fn log1pexp<T: Scalar>(z: T) -> T {
    if z > T::zero() {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Logistic function `exp(z) / (1 + exp(z))`.
pub fn expit<T: Scalar>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

/// Log-odds of a probability.
pub fn logit<T: Scalar>(p: T) -> T {
    p.ln() - (-p).ln_1p()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log1pexp_is_stable_at_extremes() {
        assert_eq!(log1pexp(800.0_f64), 800.0);
        assert!(log1pexp(-800.0_f64) >= 0.0);
        assert!((log1pexp(0.0_f64) - 2.0_f64.ln()).abs() < 1e-15);
        assert!((log1pexp(35.0_f64) - (35.0 + (-35.0_f64).exp())).abs() < 1e-12);
        assert!(log1pexp(100.0_f32).is_finite());
    }

    #[test]
    fn expit_logit_roundtrip() {
        for z in [-30.0, -2.5, 0.0, 0.7, 12.0_f64] {
            assert!((logit(expit(z)) - z).abs() < 1e-9 * (1.0 + z.abs()));
        }
        assert_eq!(expit(-1000.0_f64), 0.0);
        assert_eq!(expit(1000.0_f64), 1.0);
    }
}
