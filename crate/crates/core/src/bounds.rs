//! Identification bounds for natural effects under partially constant
//! cross-world dependence.
//!
//! The unidentified single-world outcome logit is written as a shift
//! `psi + r_b(x, m; c)`. Every effect is then a function of `psi` through the
//! sensitivity parameter `p(psi) = P(M(x*)=0 | Y(x,M(x*))=0, c)`, which is
//! monotone in `psi` and confined to an interval fixed by the observed law.
//! The bounds below are the images of that interval.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point::{mediator_adjustment, point_effects, EffectTriple};
use crate::scalar::{expit, log1pexp, Scalar};
use crate::theta::{Level, LevelPair, ThetaBundle};

/// Below this magnitude the mediator's effect on the outcome is treated as null.
pub const DEGENERACY_THRESHOLD: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundPair<T> {
    pub lower: T,
    pub upper: T,
}

impl<T: Scalar> BoundPair<T> {
    pub fn new(lower: T, upper: T) -> Self {
        debug_assert!(
            lower <= upper + T::lit(1e-12) * (T::one() + upper.abs()),
            "inverted bounds {lower} > {upper}"
        );
        BoundPair { lower, upper }
    }

    pub fn contains(&self, value: T, tol: T) -> bool {
        value >= self.lower - tol && value <= self.upper + tol
    }

    pub fn width(&self) -> T {
        self.upper - self.lower
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        BoundPair {
            lower: f(self.lower),
            upper: f(self.upper),
        }
    }
}

impl<T: Scalar> std::ops::Add for BoundPair<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        BoundPair::new(self.lower + rhs.lower, self.upper + rhs.upper)
    }
}

/// Log-scale bounds for the three effects plus the `psi = 0` estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectBounds<T> {
    pub nde: BoundPair<T>,
    pub nie: BoundPair<T>,
    pub te: BoundPair<T>,
    pub point_at_psi0: EffectTriple<T>,
    /// Set when the mediator effect on the outcome vanishes at `x` or `x*`.
    pub degenerate: bool,
}

impl<T: Scalar> EffectBounds<T> {
    pub fn components(&self) -> [BoundPair<T>; 3] {
        [self.nde, self.nie, self.te]
    }

    /// Odds-ratio scale version of every interval.
    pub fn to_odds_ratio(&self) -> [BoundPair<T>; 3] {
        self.components().map(|b| b.map(T::exp))
    }
}

/// Effects and sensitivity parameter traced over a grid of shifts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityCurve<T> {
    pub psi_grid: Vec<T>,
    pub effects: Vec<EffectTriple<T>>,
    pub p_values: Vec<T>,
}

/// `delta_b(level) = r_b(level, 1) - r_b(level, 0)`.
pub fn delta_beta<T: Scalar>(theta: &ThetaBundle<T>, at: Level) -> T {
    let d = theta.outcome(at, true) - theta.outcome(at, false);
    if d.abs() < T::lit(DEGENERACY_THRESHOLD) {
        warn!("mediator has no effect on the outcome at the {at:?} level (delta = {d:e})");
    }
    d
}

fn delta_quiet<T: Scalar>(theta: &ThetaBundle<T>, at: Level) -> T {
    theta.outcome(at, true) - theta.outcome(at, false)
}

/// Shifted counterpart of `g_y` with `O(psi, a, m) = psi + r_b(a, m)`.
pub fn g_tilde<T: Scalar>(theta: &ThetaBundle<T>, psi: T, y: bool, pair: LevelPair) -> T {
    let a = pair.outcome_level();
    let r0 = theta.outcome(a, false);
    let r1 = theta.outcome(a, true);
    let slope = if y { r1 - r0 } else { T::zero() };
    slope + log1pexp(psi + r0) - log1pexp(psi + r1) + theta.mediator(pair.mediator_level())
}

fn psi_adjustment<T: Scalar>(theta: &ThetaBundle<T>, psi: T, pair: LevelPair) -> T {
    mediator_adjustment(
        g_tilde(theta, psi, false, pair),
        g_tilde(theta, psi, true, pair),
    )
}

/// Natural effects for a given shift `psi` (shared by all level pairs).
pub fn psi_effects<T: Scalar>(theta: &ThetaBundle<T>, psi: T) -> EffectTriple<T> {
    let cross = psi_adjustment(theta, psi, LevelPair::Cross);
    let nde = theta.outcome(Level::Active, false) - theta.outcome(Level::Reference, false) + cross
        - psi_adjustment(theta, psi, LevelPair::Reference);
    let nie = psi_adjustment(theta, psi, LevelPair::Active) - cross;
    EffectTriple::new(nde, nie)
}

/// Sensitivity parameter `1 / (1 + exp(g~_0))` for the given pair.
pub fn p_of_psi<T: Scalar>(theta: &ThetaBundle<T>, psi: T, pair: LevelPair) -> T {
    expit(-g_tilde(theta, psi, false, pair))
}

/// Right-hand side of the straight-line identity for the ratio
/// `(1 + e^{g~_1}) / (1 + e^{g~_0})` as a function of `p`.
pub fn straight_line<T: Scalar>(theta: &ThetaBundle<T>, pair: LevelPair, p: T) -> T {
    let e = delta_quiet(theta, pair.outcome_level()).exp();
    e + (T::one() - e) * p
}

/// Admissible range of the sensitivity parameter (open at both ends).
pub fn p_bounds<T: Scalar>(theta: &ThetaBundle<T>, pair: LevelPair) -> Result<BoundPair<T>> {
    let delta = delta_quiet(theta, pair.outcome_level());
    if delta.abs() < T::lit(DEGENERACY_THRESHOLD) {
        return Err(Error::DegenerateMediatorEffect(
            delta.to_f64().unwrap_or(f64::NAN),
        ));
    }
    let g = theta.mediator(pair.mediator_level());
    let psi_to_minus_inf = expit(-g);
    let psi_to_plus_inf = expit(delta - g);
    Ok(if delta > T::zero() {
        BoundPair::new(psi_to_minus_inf, psi_to_plus_inf)
    } else {
        BoundPair::new(psi_to_plus_inf, psi_to_minus_inf)
    })
}

/// `(log l, log u)` for the pair; valid for either sign of the mediator effect.
pub fn log_pair_bounds<T: Scalar>(theta: &ThetaBundle<T>, pair: LevelPair) -> BoundPair<T> {
    let delta = delta_quiet(theta, pair.outcome_level());
    let g = theta.mediator(pair.mediator_level());
    BoundPair::new(
        log1pexp(g) - log1pexp(g - delta),
        log1pexp(g + delta) - log1pexp(g),
    )
}

/// `(l, u)` bounding `(1 + e^{g~_1}) / (1 + e^{g~_0})` over all shifts.
pub fn pair_bounds<T: Scalar>(theta: &ThetaBundle<T>, pair: LevelPair) -> BoundPair<T> {
    if delta_quiet(theta, pair.outcome_level()).abs() < T::lit(DEGENERACY_THRESHOLD) {
        warn!("degenerate mediator effect for {pair:?}: pair bounds collapse to 1");
    }
    log_pair_bounds(theta, pair).map(T::exp)
}

/// Closed-form log odds-ratio bounds for NDE, NIE and TE.
pub fn effect_bounds<T: Scalar>(theta: &ThetaBundle<T>) -> EffectBounds<T> {
    let cross = log_pair_bounds(theta, LevelPair::Cross);
    let active = log_pair_bounds(theta, LevelPair::Active);
    let reference = log_pair_bounds(theta, LevelPair::Reference);
    let shift = theta.outcome(Level::Active, false) - theta.outcome(Level::Reference, false);

    let nde = BoundPair::new(
        shift + cross.lower - reference.upper,
        shift + cross.upper - reference.lower,
    );
    let nie = BoundPair::new(active.lower - cross.upper, active.upper - cross.lower);

    let threshold = T::lit(DEGENERACY_THRESHOLD);
    let degenerate = [Level::Active, Level::Reference]
        .into_iter()
        .any(|l| delta_quiet(theta, l).abs() < threshold);
    if degenerate {
        warn!("degenerate mediator effect: bounds collapse around the direct contrast");
    }
    EffectBounds {
        nde,
        nie,
        te: nde + nie,
        point_at_psi0: point_effects(theta),
        degenerate,
    }
}

pub fn sensitivity_curve<T: Scalar>(theta: &ThetaBundle<T>, psi_grid: &[T]) -> SensitivityCurve<T> {
    SensitivityCurve {
        psi_grid: psi_grid.to_vec(),
        effects: psi_grid
            .iter()
            .map(|&psi| psi_effects(theta, psi))
            .collect(),
        p_values: psi_grid
            .iter()
            .map(|&psi| p_of_psi(theta, psi, LevelPair::Cross))
            .collect(),
    }
}
