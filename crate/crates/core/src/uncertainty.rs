//! Delta-method standard errors for the bound endpoints and the resulting
//! point-wise uncertainty intervals.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::bounds::{effect_bounds, BoundPair, EffectBounds};
use crate::error::{Error, Result};
use crate::normal::two_sided_critical;
use crate::point::EffectTriple;
use crate::scalar::{expit, Scalar};
use crate::theta::{Level, ThetaBundle};

/// `(log l_NDE, log u_NDE, log l_NIE, log u_NIE)` with its approximate covariance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TauBounds<T> {
    pub tau: [T; 4],
    pub v0: [[T; 4]; 4],
}

impl<T: Scalar> TauBounds<T> {
    pub fn std_errors(&self) -> [T; 4] {
        std::array::from_fn(|i| self.v0[i][i].max(T::zero()).sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyIntervals<T> {
    pub alpha: T,
    pub nde: BoundPair<T>,
    pub nie: BoundPair<T>,
    pub te: BoundPair<T>,
}

impl<T: Scalar> UncertaintyIntervals<T> {
    pub fn components(&self) -> [BoundPair<T>; 3] {
        [self.nde, self.nie, self.te]
    }
}

/// `d tau_j / d theta_i`, rows in theta order, columns in tau order.
pub type DerivativeMatrix<T> = [[T; 4]; 6];

/// Closed-form Jacobian of the four log bound endpoints.
pub fn derivative_matrix<T: Scalar>(theta: &ThetaBundle<T>) -> DerivativeMatrix<T> {
    let gs = theta.mediator(Level::Reference);
    let gx = theta.mediator(Level::Active);
    let dx = theta.outcome(Level::Active, true) - theta.outcome(Level::Active, false);
    let ds = theta.outcome(Level::Reference, true) - theta.outcome(Level::Reference, false);
    if dx.abs() < T::lit(crate::bounds::DEGENERACY_THRESHOLD)
        || ds.abs() < T::lit(crate::bounds::DEGENERACY_THRESHOLD)
    {
        warn!("derivative matrix evaluated at a degenerate mediator effect");
    }
    let one = T::one();
    let two = T::lit(2.0);
    let zero = T::zero();

    let e_gs = expit(gs);
    let e_gs_mdx = expit(gs - dx);
    let e_gs_pdx = expit(gs + dx);
    let e_gs_pds = expit(gs + ds);
    let e_gs_mds = expit(gs - ds);
    let e_gx = expit(gx);
    let e_gx_mdx = expit(gx - dx);
    let e_gx_pdx = expit(gx + dx);

    let l_nde = [
        one - e_gs_mdx,
        e_gs_pds - one,
        e_gs_mdx,
        -e_gs_pds,
        zero,
        two * e_gs - e_gs_mdx - e_gs_pds,
    ];
    let u_nde = [
        one - e_gs_pdx,
        e_gs_mds - one,
        e_gs_pdx,
        -e_gs_mds,
        zero,
        -two * e_gs + e_gs_pdx + e_gs_mds,
    ];
    let l_nie = [
        e_gs_pdx - e_gx_mdx,
        zero,
        e_gx_mdx - e_gs_pdx,
        zero,
        e_gx - e_gx_mdx,
        e_gs - e_gs_pdx,
    ];
    let u_nie = [
        e_gs_mdx - e_gx_pdx,
        zero,
        e_gx_pdx - e_gs_mdx,
        zero,
        e_gx_pdx - e_gx,
        e_gs_mdx - e_gs,
    ];
    std::array::from_fn(|i| [l_nde[i], u_nde[i], l_nie[i], u_nie[i]])
}

/// The four log bound endpoints as a function of theta.
pub fn tau<T: Scalar>(theta: &ThetaBundle<T>) -> [T; 4] {
    let b = effect_bounds(theta);
    [b.nde.lower, b.nde.upper, b.nie.lower, b.nie.upper]
}

/// Fails unless `sigma + eps I` admits a Cholesky factor, with `eps` a
/// small multiple of the largest variance.
pub fn check_psd<T: Scalar, const N: usize>(sigma: &[[T; N]; N]) -> Result<()> {
    let scale = (0..N).map(|i| sigma[i][i].abs()).fold(T::one(), T::max);
    let jitter = T::lit(1e-9) * scale;
    let mut l = [[T::zero(); N]; N];
    for j in 0..N {
        let mut d = sigma[j][j] + jitter;
        for k in 0..j {
            d = d - l[j][k] * l[j][k];
        }
        if !(d > T::zero()) {
            return Err(Error::NotPositiveSemiDefinite(format!("pivot {j} is {d}")));
        }
        let d = d.sqrt();
        l[j][j] = d;
        for i in j + 1..N {
            let mut s = sigma[i][j];
            for k in 0..j {
                s = s - l[i][k] * l[j][k];
            }
            l[i][j] = s / d;
        }
    }
    Ok(())
}

/// `tau` together with `V0 = D' Sigma D`.
pub fn tau_covariance<T: Scalar>(theta: &ThetaBundle<T>) -> Result<TauBounds<T>> {
    check_psd(&theta.sigma)?;
    Ok(TauBounds {
        tau: tau(theta),
        v0: sandwich(&derivative_matrix(theta), &theta.sigma),
    })
}

pub(crate) fn sandwich<T: Scalar>(d: &DerivativeMatrix<T>, sigma: &[[T; 6]; 6]) -> [[T; 4]; 4] {
    let mut v = [[T::zero(); 4]; 4];
    for a in 0..4 {
        for b in 0..=a {
            let mut s = T::zero();
            for i in 0..6 {
                for j in 0..6 {
                    s = s + d[i][a] * sigma[i][j] * d[j][b];
                }
            }
            v[a][b] = s;
            v[b][a] = s;
        }
    }
    v
}

/// Variances of the log TE lower and upper bounds, including the NDE/NIE
/// cross covariances.
pub fn te_bound_variances<T: Scalar>(tb: &TauBounds<T>) -> (T, T) {
    let v = &tb.v0;
    let two = T::lit(2.0);
    let clip = |x: T, which: &str| {
        if x < T::zero() {
            warn!("negative variance {x} for the TE {which} bound clipped to 0");
            T::zero()
        } else {
            x
        }
    };
    (
        clip(v[0][0] + v[2][2] + two * v[0][2], "lower"),
        clip(v[1][1] + v[3][3] + two * v[1][3], "upper"),
    )
}

/// Widens each identification interval by `z_{alpha/2}` standard errors on
/// each side.
pub fn uncertainty_intervals<T: Scalar>(
    bounds: &EffectBounds<T>,
    tb: &TauBounds<T>,
    alpha: T,
) -> Result<UncertaintyIntervals<T>> {
    if !(alpha > T::zero() && alpha < T::one()) {
        return Err(Error::InvalidAlpha(alpha.to_f64().unwrap_or(f64::NAN)));
    }
    let z = two_sided_critical(alpha);
    let se = tb.std_errors();
    let (var_lo, var_hi) = te_bound_variances(tb);
    let widen = |b: &BoundPair<T>, se_lo: T, se_hi: T| {
        BoundPair::new(b.lower - z * se_lo, b.upper + z * se_hi)
    };
    Ok(UncertaintyIntervals {
        alpha,
        nde: widen(&bounds.nde, se[0], se[1]),
        nie: widen(&bounds.nie, se[2], se[3]),
        te: widen(&bounds.te, var_lo.sqrt(), var_hi.sqrt()),
    })
}

/// Everything reported for one contrast.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContrastAnalysis<T> {
    pub point: EffectTriple<T>,
    pub bounds: EffectBounds<T>,
    pub tau: TauBounds<T>,
    pub intervals: UncertaintyIntervals<T>,
}

pub fn analyze<T: Scalar>(theta: &ThetaBundle<T>, alpha: T) -> Result<ContrastAnalysis<T>> {
    let bounds = effect_bounds(theta);
    let tau = tau_covariance(theta)?;
    let intervals = uncertainty_intervals(&bounds, &tau, alpha)?;
    Ok(ContrastAnalysis {
        point: bounds.point_at_psi0,
        bounds,
        tau,
        intervals,
    })
}
