//! Point-identified natural effects under cross-world independence and no
//! unmeasured confounding.

use serde::{Deserialize, Serialize};

use crate::scalar::{log1pexp, Scalar};
use crate::theta::{Level, LevelPair, ThetaBundle};

/// Log odds-ratio natural direct, indirect and total effects.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectTriple<T> {
    pub nde: T,
    pub nie: T,
    pub te: T,
}

impl<T: Scalar> EffectTriple<T> {
    /// The total effect is always the sum of its two components.
    pub fn new(nde: T, nie: T) -> Self {
        EffectTriple {
            nde,
            nie,
            te: nde + nie,
        }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero())
    }

    pub fn components(&self) -> [T; 3] {
        [self.nde, self.nie, self.te]
    }
}

/// `logit P(M(b)=1 | Y(a, M(b)) = y, c)` for the level pair `(a, b)`.
pub fn g_y<T: Scalar>(theta: &ThetaBundle<T>, y: bool, pair: LevelPair) -> T {
    let a = pair.outcome_level();
    let r0 = theta.outcome(a, false);
    let r1 = theta.outcome(a, true);
    let slope = if y { r1 - r0 } else { T::zero() };
    slope + log1pexp(r0) - log1pexp(r1) + theta.mediator(pair.mediator_level())
}

/// `log[(1 + e^{g_1}) / (1 + e^{g_0})]`, the mediator adjustment shared by
/// the natural effect model and the effect formulas.
pub(crate) fn mediator_adjustment<T: Scalar>(g0: T, g1: T) -> T {
    log1pexp(g1) - log1pexp(g0)
}

/// `logit P(Y(a, M(b)) = 1 | c)` from the natural effect model.
pub fn nem_logit<T: Scalar>(theta: &ThetaBundle<T>, pair: LevelPair) -> T {
    theta.outcome(pair.outcome_level(), false)
        + mediator_adjustment(g_y(theta, false, pair), g_y(theta, true, pair))
}

pub fn point_effects<T: Scalar>(theta: &ThetaBundle<T>) -> EffectTriple<T> {
    let adj = |pair| mediator_adjustment(g_y(theta, false, pair), g_y(theta, true, pair));
    let cross = adj(LevelPair::Cross);
    let nde = theta.outcome(Level::Active, false) - theta.outcome(Level::Reference, false) + cross
        - adj(LevelPair::Reference);
    let nie = adj(LevelPair::Active) - cross;
    EffectTriple::new(nde, nie)
}
