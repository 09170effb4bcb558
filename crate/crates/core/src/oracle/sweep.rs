//! Brute-force bound oracles: evaluate the shifted model on a grid of `psi`
//! and take extremes, without using any closed-form limit.

use serde::{Deserialize, Serialize};

use crate::bounds::{g_tilde, psi_effects, BoundPair};
use crate::error::{Error, Result};
use crate::scalar::{log1pexp, Scalar};
use crate::theta::{Level, LevelPair, ThetaBundle};

/// Componentwise extremes of the three effects.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepBounds<T> {
    pub nde: BoundPair<T>,
    pub nie: BoundPair<T>,
    pub te: BoundPair<T>,
}

impl<T: Scalar> SweepBounds<T> {
    pub fn components(&self) -> [BoundPair<T>; 3] {
        [self.nde, self.nie, self.te]
    }
}

/// Evenly spaced grid including both end points.
pub fn linspace<T: Scalar>(lo: T, hi: T, points: usize) -> impl Iterator<Item = T> {
    let step = (hi - lo) / T::from_usize(points.max(2) - 1).expect("grid size");
    (0..points).map(move |i| {
        if i + 1 == points {
            hi
        } else {
            lo + step * T::from_usize(i).expect("grid index")
        }
    })
}

fn check_grid<T: Scalar>(range: (T, T), points: usize) -> Result<()> {
    if points < 2 {
        return Err(Error::Config(format!(
            "a sweep needs at least 2 points, got {points}"
        )));
    }
    if !(range.0 < range.1) || !range.0.is_finite() || !range.1.is_finite() {
        return Err(Error::Config(format!(
            "invalid sweep range ({}, {})",
            range.0, range.1
        )));
    }
    Ok(())
}

#[derive(Clone, Copy)]
struct MinMax<T>(T, T);

impl<T: Scalar> MinMax<T> {
    fn empty() -> Self {
        MinMax(T::infinity(), T::neg_infinity())
    }
    fn push(&mut self, v: T) {
        self.0 = self.0.min(v);
        self.1 = self.1.max(v);
    }
    fn pair(self) -> BoundPair<T> {
        BoundPair::new(self.0, self.1)
    }
}

/// Extremes of `psi_effects` with one shift shared by all level pairs.
pub fn psi_sweep_bounds<T: Scalar>(
    theta: &ThetaBundle<T>,
    range: (T, T),
    points: usize,
) -> Result<SweepBounds<T>> {
    check_grid(range, points)?;
    let mut acc = [MinMax::empty(); 3];
    for psi in linspace(range.0, range.1, points) {
        for (slot, v) in acc.iter_mut().zip(psi_effects(theta, psi).components()) {
            slot.push(v);
        }
    }
    Ok(SweepBounds {
        nde: acc[0].pair(),
        nie: acc[1].pair(),
        te: acc[2].pair(),
    })
}

fn log_ratio<T: Scalar>(theta: &ThetaBundle<T>, psi: T, pair: LevelPair) -> T {
    log1pexp(g_tilde(theta, psi, true, pair)) - log1pexp(g_tilde(theta, psi, false, pair))
}

/// Extremes of `log[(1 + exp g~_1) / (1 + exp g~_0)]` for one level pair.
pub fn pair_sweep_bounds<T: Scalar>(
    theta: &ThetaBundle<T>,
    pair: LevelPair,
    range: (T, T),
    points: usize,
) -> Result<BoundPair<T>> {
    check_grid(range, points)?;
    let mut acc = MinMax::empty();
    for psi in linspace(range.0, range.1, points) {
        acc.push(log_ratio(theta, psi, pair));
    }
    Ok(acc.pair())
}

/// Effect extremes when every level pair carries its own shift. NDE and NIE
/// combine the per-pair sweeps; TE is their endpoint sum.
pub fn decoupled_sweep_bounds<T: Scalar>(
    theta: &ThetaBundle<T>,
    range: (T, T),
    points: usize,
) -> Result<SweepBounds<T>> {
    let cross = pair_sweep_bounds(theta, LevelPair::Cross, range, points)?;
    let active = pair_sweep_bounds(theta, LevelPair::Active, range, points)?;
    let reference = pair_sweep_bounds(theta, LevelPair::Reference, range, points)?;
    let shift = theta.outcome(Level::Active, false) - theta.outcome(Level::Reference, false);
    let nde = BoundPair::new(
        shift + cross.lower - reference.upper,
        shift + cross.upper - reference.lower,
    );
    let nie = BoundPair::new(active.lower - cross.upper, active.upper - cross.lower);
    Ok(SweepBounds {
        nde,
        nie,
        te: nde + nie,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linspace_hits_both_ends() {
        let g: Vec<f64> = linspace(-1.0, 1.0, 5).collect();
        assert_eq!(g, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
    }

    #[test]
    fn rejects_single_point() {
        let theta = ThetaBundle::from_predictors([0.0; 6]);
        assert!(psi_sweep_bounds(&theta, (-1.0, 1.0), 1).is_err());
        assert!(psi_sweep_bounds(&theta, (1.0, -1.0), 10).is_err());
    }
}
