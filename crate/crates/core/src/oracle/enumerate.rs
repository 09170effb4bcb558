//! Exact counterfactual and observational laws of a [`StructuralModel`].
//!
//! Each mechanism carries one uniform noise variable per unit, shared by
//! every intervention level: the unit has `M(a) = 1` iff its mediator noise
//! falls below `P(M=1 | a, c, u2)`, and likewise for the outcome. The
//! thresholds of all levels cut `[0, 1]` into finitely many cells, so every
//! cross-world probability is a finite sum of cell lengths.

use num_traits::ToPrimitive;

use crate::error::{Error, Result};
use crate::point::EffectTriple;
use crate::scalar::{logit, Scalar};
use crate::theta::{ContrastSpec, Level, ThetaBundle};

use super::scm::{close, Probability, StructuralModel};

fn idx(level: Level) -> usize {
    match level {
        Level::Active => 0,
        Level::Reference => 1,
    }
}

/// Cells between sorted thresholds as `(length, [noise < t_k for each k])`.
fn cells<T: Probability>(thresholds: &[T]) -> Vec<(T, Vec<bool>)> {
    let mut cuts = thresholds.to_vec();
    cuts.push(T::zero());
    cuts.push(T::one());
    cuts.sort_by(|a, b| a.partial_cmp(b).expect("probabilities are ordered"));
    cuts.dedup();
    cuts.windows(2)
        .map(|w| {
            let hi = &w[1];
            (
                hi.clone() - w[0].clone(),
                thresholds.iter().map(|t| t >= hi).collect(),
            )
        })
        .collect()
}

fn complement<T: Probability>(p: &T, m: bool) -> T {
    if m {
        p.clone()
    } else {
        T::one() - p.clone()
    }
}

/// Exact counterfactual law at one contrast. Level index 0 is `x`, 1 is `x*`.
#[derive(Debug, Clone, PartialEq)]
pub struct CounterfactualLaw<T> {
    /// `P(Y(a, M(b)) = 1 | c)`, indexed `[a][b]`.
    pub crossed: [[T; 2]; 2],
    /// `P(M(a) = 1 | c)`.
    pub mediator: [T; 2],
    /// `P(Y(a, m) = 1 | c)`, indexed `[a][m]`.
    pub controlled: [[T; 2]; 2],
    /// `P(Y(a, m) = 1, M(b) = m' | c)`, indexed `[a][m][b][m']`.
    joint: [[[[T; 2]; 2]; 2]; 2],
    /// `P(Y(a) = 1 | c)` by marginalizing the intervened system, without the
    /// cell coupling. Equals `crossed[a][a]` by composition.
    pub total: [T; 2],
}

impl<T: Probability> CounterfactualLaw<T> {
    pub fn crossed(&self, a: Level, b: Level) -> &T {
        &self.crossed[idx(a)][idx(b)]
    }

    pub fn mediator(&self, a: Level) -> &T {
        &self.mediator[idx(a)]
    }

    /// `P(Y(a, m) = 1 | M(b) = m', c)`; `None` on a null conditioning event.
    pub fn conditional(&self, a: Level, m: bool, b: Level, m_prime: bool) -> Option<T> {
        let event = complement(&self.mediator[idx(b)], m_prime);
        if event == T::zero() {
            return None;
        }
        Some(self.joint[idx(a)][m as usize][idx(b)][m_prime as usize].clone() / event)
    }

    /// The four probabilities constrained by cross-world assumptions, in the
    /// order: given `M(a) = 1-m`, unconditional, given `M(b) = m`, given
    /// `M(b) = 1-m`; paired with the reference `P(Y(a,m)=1 | M(a)=m)`.
    pub fn constrained_rows(&self, a: Level, b: Level, m: bool) -> ([Option<T>; 4], Option<T>) {
        let rows = [
            self.conditional(a, m, a, !m),
            Some(self.controlled[idx(a)][m as usize].clone()),
            self.conditional(a, m, b, m),
            self.conditional(a, m, b, !m),
        ];
        (rows, self.conditional(a, m, a, m))
    }

    /// Cross-world independence together with single-world independence:
    /// all four constrained rows equal the reference, for both orderings of
    /// the contrast and both mediator values.
    pub fn cwi_holds(&self, tol: &T) -> bool {
        self.rows_hold(tol, &[0, 1, 2, 3])
    }

    /// Partially constant cross-world dependence: only the row given
    /// `M(b) = m` must equal the reference.
    pub fn pc_cwd_holds(&self, tol: &T) -> bool {
        self.rows_hold(tol, &[2])
    }

    fn rows_hold(&self, tol: &T, which: &[usize]) -> bool {
        let orders = [
            (Level::Active, Level::Reference),
            (Level::Reference, Level::Active),
        ];
        orders.into_iter().all(|(a, b)| {
            [false, true].into_iter().all(|m| {
                let (rows, reference) = self.constrained_rows(a, b, m);
                which.iter().all(|&k| match (&rows[k], &reference) {
                    (Some(r), Some(q)) => close(r, q, tol),
                    _ => true,
                })
            })
        })
    }
}

/// Enumerates latent configurations and mechanism-noise cells for the
/// contrast's two levels at its covariate profile.
pub fn enumerate_counterfactuals<T: Probability>(
    scm: &StructuralModel<T>,
    contrast: &ContrastSpec,
) -> Result<CounterfactualLaw<T>> {
    let (xi, xs, c) = scm.resolve(contrast)?;
    let levels = [xi, xs];
    let zero2 = || [T::zero(), T::zero()];
    let mut law = CounterfactualLaw {
        crossed: [zero2(), zero2()],
        mediator: zero2(),
        controlled: [zero2(), zero2()],
        joint: std::array::from_fn(|_| std::array::from_fn(|_| std::array::from_fn(|_| zero2()))),
        total: zero2(),
    };

    for (u1, w1) in scm.u1_probs().iter().enumerate() {
        for (u2, w2) in scm.u2_probs().iter().enumerate() {
            let w = w1.clone() * w2.clone();
            if w == T::zero() {
                continue;
            }
            let pm = levels.map(|l| scm.pm(l, c, u2).clone());
            let py: Vec<T> = levels
                .iter()
                .flat_map(|&l| [false, true].map(|m| scm.py(l, m, c, u1, u2).clone()))
                .collect();

            for a in 0..2 {
                let mut total = T::zero();
                for m in [false, true] {
                    total = total + complement(&pm[a], m) * py[a * 2 + m as usize].clone();
                }
                law.total[a] = law.total[a].clone() + w.clone() * total;
            }

            let m_cells = cells(&pm);
            let y_cells = cells(&py);
            for (lm, mv) in &m_cells {
                for (ly, yv) in &y_cells {
                    let prob = w.clone() * lm.clone() * ly.clone();
                    for a in 0..2 {
                        if mv[a] {
                            law.mediator[a] = law.mediator[a].clone() + prob.clone();
                        }
                        for b in 0..2 {
                            if yv[a * 2 + mv[b] as usize] {
                                law.crossed[a][b] = law.crossed[a][b].clone() + prob.clone();
                            }
                        }
                        for m in 0..2 {
                            if !yv[a * 2 + m] {
                                continue;
                            }
                            law.controlled[a][m] = law.controlled[a][m].clone() + prob.clone();
                            for b in 0..2 {
                                let slot = &mut law.joint[a][m][b][mv[b] as usize];
                                *slot = slot.clone() + prob.clone();
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(law)
}

fn checked_logit<T: Scalar>(p: T, what: &str) -> Result<T> {
    if p <= T::zero() || p >= T::one() {
        return Err(Error::DegenerateProbability(format!("{what} = {p}")));
    }
    Ok(logit(p))
}

/// Log odds-ratio natural effects from the exact counterfactual law.
pub fn true_effects<T: Scalar + Probability>(
    scm: &StructuralModel<T>,
    contrast: &ContrastSpec,
) -> Result<EffectTriple<T>> {
    let law = enumerate_counterfactuals(scm, contrast)?;
    let l = |a, b, name| checked_logit(*law.crossed(a, b), name);
    let active = l(Level::Active, Level::Active, "P(Y(x, M(x)) = 1)")?;
    let cross = l(Level::Active, Level::Reference, "P(Y(x, M(x*)) = 1)")?;
    let reference = l(Level::Reference, Level::Reference, "P(Y(x*, M(x*)) = 1)")?;
    Ok(EffectTriple::new(cross - reference, active - cross))
}

impl<T: Probability> StructuralModel<T> {
    /// `P(X = x, M = m, Y = y | c)` summed over latents, for grid indices.
    fn observational_joint(&self, x: usize, m: Option<bool>, y: Option<bool>, c: usize) -> T {
        let mut acc = T::zero();
        for (u1, w1) in self.u1_probs().iter().enumerate() {
            let px = self.px(x, c, u1).clone();
            for (u2, w2) in self.u2_probs().iter().enumerate() {
                let w = w1.clone() * w2.clone() * px.clone();
                let pm = self.pm(x, c, u2);
                let term = match m {
                    None => w,
                    Some(m) => {
                        let wm = w * complement(pm, m);
                        match y {
                            None => wm,
                            Some(y) => wm * complement(self.py(x, m, c, u1, u2), y),
                        }
                    }
                };
                acc = acc + term;
            }
        }
        acc
    }

    /// `P(Y = 1 | X = x, M = m, C = c)`, by grid indices.
    pub fn observational_outcome(&self, x: usize, m: bool, c: usize) -> Result<T> {
        let den = self.observational_joint(x, Some(m), None, c);
        if den == T::zero() {
            return Err(Error::DegenerateProbability(format!(
                "P(X = {}, M = {m}, C = c{c}) is zero",
                self.exposure_grid()[x]
            )));
        }
        Ok(self.observational_joint(x, Some(m), Some(true), c) / den)
    }

    /// `P(M = 1 | X = x, C = c)`, by grid indices.
    pub fn observational_mediator(&self, x: usize, c: usize) -> Result<T> {
        let den = self.observational_joint(x, None, None, c);
        if den == T::zero() {
            return Err(Error::DegenerateProbability(format!(
                "P(X = {}, C = c{c}) is zero",
                self.exposure_grid()[x]
            )));
        }
        Ok(self.observational_joint(x, Some(true), None, c) / den)
    }

    /// `sum_m P(Y=1 | x, m, c) P(M=m | x*, c)` from the observational law.
    pub fn mediation_formula(&self, contrast: &ContrastSpec) -> Result<T> {
        let (xi, xs, c) = self.resolve(contrast)?;
        let pm = self.observational_mediator(xs, c)?;
        let mut acc = T::zero();
        for m in [false, true] {
            acc = acc + self.observational_outcome(xi, m, c)? * complement(&pm, m);
        }
        Ok(acc)
    }

    fn population_sum(&self, f: impl Fn(usize, usize, usize, usize, T) -> T) -> T {
        let mut acc = T::zero();
        for c in 0..self.c_support().len() {
            for (u1, w1) in self.u1_probs().iter().enumerate() {
                for (u2, w2) in self.u2_probs().iter().enumerate() {
                    let w = self.c_prob(c).clone() * w1.clone() * w2.clone();
                    for x in 0..self.exposure_grid().len() {
                        acc = acc + f(x, c, u1, u2, w.clone() * self.px(x, c, u1).clone());
                    }
                }
            }
        }
        acc
    }

    /// Population `P(M = 1)`.
    pub fn marginal_mediator(&self) -> T {
        self.population_sum(|x, c, _, u2, w| w * self.pm(x, c, u2).clone())
    }

    /// Population `P(Y = 1)`.
    pub fn marginal_outcome(&self) -> T {
        self.population_sum(|x, c, u1, u2, w| {
            let pm = self.pm(x, c, u2).clone();
            let y1 = self.py(x, true, c, u1, u2).clone();
            let y0 = self.py(x, false, c, u1, u2).clone();
            w * (pm.clone() * y1 + (T::one() - pm) * y0)
        })
    }
}

/// Population logits of the observational law at the six contrast points.
pub fn observational_theta<T: Scalar + Probability>(
    scm: &StructuralModel<T>,
    contrast: &ContrastSpec,
) -> Result<ThetaBundle<T>> {
    let (xi, xs, c) = scm.resolve(contrast)?;
    let y = |x, m| checked_logit(scm.observational_outcome(x, m, c)?, "P(Y = 1 | X, M, C)");
    let m = |x| checked_logit(scm.observational_mediator(x, c)?, "P(M = 1 | X, C)");
    Ok(ThetaBundle::from_predictors([
        y(xi, false)?,
        y(xs, false)?,
        y(xi, true)?,
        y(xs, true)?,
        m(xi)?,
        m(xs)?,
    ]))
}

fn to_f64<T: Probability + ToPrimitive>(p: &T) -> Result<f64> {
    p.to_f64()
        .ok_or_else(|| Error::Numerical(format!("probability {p:?} has no f64 representation")))
}

/// [`true_effects`] for exact number types: the law is computed exactly and
/// only the final logits are taken in `f64`.
pub fn true_effects_exact<T: Probability + ToPrimitive>(
    scm: &StructuralModel<T>,
    contrast: &ContrastSpec,
) -> Result<EffectTriple<f64>> {
    let law = enumerate_counterfactuals(scm, contrast)?;
    let l = |a, b, name| checked_logit(to_f64(law.crossed(a, b))?, name);
    let active = l(Level::Active, Level::Active, "P(Y(x, M(x)) = 1)")?;
    let cross = l(Level::Active, Level::Reference, "P(Y(x, M(x*)) = 1)")?;
    let reference = l(Level::Reference, Level::Reference, "P(Y(x*, M(x*)) = 1)")?;
    Ok(EffectTriple::new(cross - reference, active - cross))
}

/// [`observational_theta`] for exact number types.
pub fn observational_theta_exact<T: Probability + ToPrimitive>(
    scm: &StructuralModel<T>,
    contrast: &ContrastSpec,
) -> Result<ThetaBundle<f64>> {
    let (xi, xs, c) = scm.resolve(contrast)?;
    let y = |x, m| {
        checked_logit(
            to_f64(&scm.observational_outcome(x, m, c)?)?,
            "P(Y = 1 | X, M, C)",
        )
    };
    let m = |x| {
        checked_logit(
            to_f64(&scm.observational_mediator(x, c)?)?,
            "P(M = 1 | X, C)",
        )
    };
    Ok(ThetaBundle::from_predictors([
        y(xi, false)?,
        y(xs, false)?,
        y(xi, true)?,
        y(xs, true)?,
        m(xi)?,
        m(xs)?,
    ]))
}
