//! Standard normal quantile and tail probabilities.

use statrs::function::erf::{erfc, erfc_inv};

use crate::scalar::Scalar;

/// Inverse of the standard normal CDF, evaluated in `f64`.
///
/// Returns `-inf`/`+inf` at `p = 0`/`p = 1` and NaN outside `[0, 1]`.
pub fn quantile<T: Scalar>(p: T) -> T {
    let p = p.to_f64().unwrap_or(f64::NAN);
    if p.is_nan() || !(0.0..=1.0).contains(&p) {
        return T::nan();
    }
    T::lit(-std::f64::consts::SQRT_2 * erfc_inv(2.0 * p))
}

/// Two-sided critical value `z_{alpha/2}`, i.e. the `1 - alpha/2` quantile.
pub fn two_sided_critical<T: Scalar>(alpha: T) -> T {
    quantile(T::one() - alpha / T::lit(2.0))
}

/// Standard normal CDF.
pub fn cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Two-sided Wald p-value for a standardized statistic.
pub fn two_sided_p_value(z: f64) -> f64 {
    erfc(z.abs() / std::f64::consts::SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_quantiles() {
        let known: [(f64, f64); 4] = [
            (0.975, 1.959_963_984_540_054),
            (0.999, 3.090_232_306_167_813),
            (1e-10, -6.361_340_902_404_056),
            (0.3, -0.524_400_512_708_040_9),
        ];
        for (p, z) in known {
            assert!(
                (quantile(p) - z).abs() < 1e-12 * (1.0 + z.abs()),
                "p={p}: {}",
                quantile(p)
            );
        }
        assert!((two_sided_critical(0.05_f64) - 1.959_963_984_540_054).abs() < 1e-12);
    }

    #[test]
    fn quantile_inverts_cdf() {
        for z in [-7.5, -3.0, -0.4, 0.0, 0.2, 1.5, 6.0] {
            assert!((quantile(cdf(z)) - z).abs() < 1e-8, "z={z}");
        }
    }

    #[test]
    fn edge_values() {
        assert_eq!(quantile(0.5_f64), 0.0);
        assert_eq!(quantile(0.0_f64), f64::NEG_INFINITY);
        assert_eq!(quantile(1.0_f64), f64::INFINITY);
        assert!(quantile(1.5_f64).is_nan());
        assert!((quantile(0.975_f32) - 1.959_964).abs() < 1e-5);
        assert_eq!(two_sided_critical(1.0_f64), 0.0);
    }

    #[test]
    fn p_values() {
        let p = two_sided_p_value(1.959_963_984_540_054);
        assert!((p - 0.05).abs() < 1e-10, "{p}");
        assert_eq!(two_sided_p_value(0.0), 1.0);
    }
}
