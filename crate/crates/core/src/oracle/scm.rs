//! Finite structural causal models.

use std::collections::BTreeMap;
use std::fmt::Debug;

use num_rational::{BigRational, Ratio};
use num_traits::Num;

use crate::error::{Error, Result};
use crate::theta::ContrastSpec;

/// Number type an exact oracle can run on. Floats use a normalization
/// tolerance, rationals must normalize exactly.
pub trait Probability: Num + Clone + PartialOrd + Debug {
    fn normalization_tolerance() -> Self;
}

impl Probability for f64 {
    fn normalization_tolerance() -> Self {
        1e-12
    }
}

impl Probability for f32 {
    fn normalization_tolerance() -> Self {
        1e-6
    }
}

impl Probability for Ratio<i64> {
    fn normalization_tolerance() -> Self {
        Ratio::from_integer(0)
    }
}

impl Probability for BigRational {
    fn normalization_tolerance() -> Self {
        BigRational::from_integer(0.into())
    }
}

pub(crate) fn close<T: Probability>(a: &T, b: &T, tol: &T) -> bool {
    a.clone() - b.clone() <= *tol && b.clone() - a.clone() <= *tol
}

fn check_unit<T: Probability>(p: &T, what: &str) -> Result<()> {
    if *p < T::zero() || *p > T::one() {
        return Err(Error::InvalidModel(format!(
            "{what} = {p:?} is not a probability"
        )));
    }
    Ok(())
}

fn check_distribution<T: Probability>(probs: &[T], what: &str) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::InvalidModel(format!("{what} has empty support")));
    }
    for p in probs {
        check_unit(p, what)?;
    }
    let total = probs.iter().cloned().fold(T::zero(), |a, b| a + b);
    if !close(&total, &T::one(), &T::normalization_tolerance()) {
        return Err(Error::InvalidModel(format!(
            "{what} sums to {total:?}, not 1"
        )));
    }
    Ok(())
}

/// Covariates `C`, latent confounders `U1` (exposure-outcome) and `U2`
/// (mediator-outcome), and the three mechanisms `X | C,U1`, `M | X,C,U2` and
/// `Y | X,M,C,U1,U2`. All supports are finite.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuralModel<T = f64> {
    covariate_names: Vec<String>,
    c_support: Vec<Vec<f64>>,
    c_probs: Vec<T>,
    u1_probs: Vec<T>,
    u2_probs: Vec<T>,
    exposure_grid: Vec<f64>,
    x_table: Vec<Vec<T>>,
    m_table: Vec<T>,
    y_table: Vec<T>,
}

impl<T: Probability> StructuralModel<T> {
    /// Builds every table by evaluating the mechanisms on the supports.
    ///
    /// `x_mech(c, u1)` returns the distribution over the exposure grid;
    /// `m_mech(x, c, u2)` and `y_mech(x, m, c, u1, u2)` return success
    /// probabilities. Arguments are indices into the respective supports.
    #[allow(clippy::too_many_arguments)]
    pub fn from_fn(
        covariate_names: Vec<String>,
        c_support: Vec<(Vec<f64>, T)>,
        u1_probs: Vec<T>,
        u2_probs: Vec<T>,
        exposure_grid: Vec<f64>,
        x_mech: impl Fn(usize, usize) -> Vec<T>,
        m_mech: impl Fn(usize, usize, usize) -> T,
        y_mech: impl Fn(usize, bool, usize, usize, usize) -> T,
    ) -> Result<Self> {
        let (c_support, c_probs): (Vec<_>, Vec<_>) = c_support.into_iter().unzip();
        check_distribution(&c_probs, "covariate distribution")?;
        check_distribution(&u1_probs, "U1 distribution")?;
        check_distribution(&u2_probs, "U2 distribution")?;
        if exposure_grid.is_empty() {
            return Err(Error::InvalidModel("exposure grid is empty".into()));
        }
        if exposure_grid.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidModel(
                "exposure grid has non-finite levels".into(),
            ));
        }
        for (i, a) in exposure_grid.iter().enumerate() {
            if exposure_grid[..i].contains(a) {
                return Err(Error::InvalidModel(format!(
                    "exposure level {a} appears twice"
                )));
            }
        }
        for values in &c_support {
            if values.len() != covariate_names.len() {
                return Err(Error::InvalidModel(format!(
                    "covariate profile {values:?} does not match names {covariate_names:?}"
                )));
            }
        }

        let (nc, nu1, nu2, nx) = (
            c_support.len(),
            u1_probs.len(),
            u2_probs.len(),
            exposure_grid.len(),
        );
        let mut x_table = Vec::with_capacity(nc * nu1);
        for c in 0..nc {
            for u1 in 0..nu1 {
                let row = x_mech(c, u1);
                if row.len() != nx {
                    return Err(Error::InvalidModel(format!(
                        "exposure mechanism returned {} probabilities for a grid of {nx}",
                        row.len()
                    )));
                }
                check_distribution(&row, "exposure mechanism")?;
                x_table.push(row);
            }
        }
        let mut m_table = Vec::with_capacity(nx * nc * nu2);
        for x in 0..nx {
            for c in 0..nc {
                for u2 in 0..nu2 {
                    let p = m_mech(x, c, u2);
                    check_unit(&p, "mediator mechanism")?;
                    m_table.push(p);
                }
            }
        }
        let mut y_table = Vec::with_capacity(nx * 2 * nc * nu1 * nu2);
        for x in 0..nx {
            for m in [false, true] {
                for c in 0..nc {
                    for u1 in 0..nu1 {
                        for u2 in 0..nu2 {
                            let p = y_mech(x, m, c, u1, u2);
                            check_unit(&p, "outcome mechanism")?;
                            y_table.push(p);
                        }
                    }
                }
            }
        }
        Ok(StructuralModel {
            covariate_names,
            c_support,
            c_probs,
            u1_probs,
            u2_probs,
            exposure_grid,
            x_table,
            m_table,
            y_table,
        })
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    /// Covariate profiles, in the order of `covariate_names`.
    pub fn c_support(&self) -> &[Vec<f64>] {
        &self.c_support
    }

    pub fn c_prob(&self, c: usize) -> &T {
        &self.c_probs[c]
    }

    pub fn u1_probs(&self) -> &[T] {
        &self.u1_probs
    }

    pub fn u2_probs(&self) -> &[T] {
        &self.u2_probs
    }

    pub fn exposure_grid(&self) -> &[f64] {
        &self.exposure_grid
    }

    /// True when both latent supports are singletons.
    pub fn is_latent_free(&self) -> bool {
        self.u1_probs.len() == 1 && self.u2_probs.len() == 1
    }

    /// `P(X = grid[x] | c, u1)`.
    pub fn px(&self, x: usize, c: usize, u1: usize) -> &T {
        &self.x_table[c * self.u1_probs.len() + u1][x]
    }

    /// `P(M = 1 | x, c, u2)`.
    pub fn pm(&self, x: usize, c: usize, u2: usize) -> &T {
        &self.m_table[(x * self.c_support.len() + c) * self.u2_probs.len() + u2]
    }

    /// `P(Y = 1 | x, m, c, u1, u2)`.
    pub fn py(&self, x: usize, m: bool, c: usize, u1: usize, u2: usize) -> &T {
        let (nc, nu1, nu2) = (
            self.c_support.len(),
            self.u1_probs.len(),
            self.u2_probs.len(),
        );
        &self.y_table[(((x * 2 + m as usize) * nc + c) * nu1 + u1) * nu2 + u2]
    }

    /// Grid index of an exposure level.
    pub fn level_index(&self, x: f64) -> Result<usize> {
        self.exposure_grid
            .iter()
            .position(|&g| (g - x).abs() <= 1e-9 * (1.0 + g.abs()))
            .ok_or(Error::OffGrid(x))
    }

    /// Support index of a covariate profile; every covariate must be given.
    pub fn profile_index(&self, profile: &BTreeMap<String, f64>) -> Result<usize> {
        if let Some(extra) = profile.keys().find(|k| !self.covariate_names.contains(k)) {
            return Err(Error::InvalidContrast(format!(
                "unknown covariate `{extra}`"
            )));
        }
        let wanted = self
            .covariate_names
            .iter()
            .map(|n| {
                profile
                    .get(n)
                    .copied()
                    .ok_or_else(|| Error::MissingVariable(n.clone()))
            })
            .collect::<Result<Vec<_>>>()?;
        self.c_support
            .iter()
            .position(|values| {
                values
                    .iter()
                    .zip(&wanted)
                    .all(|(a, b)| (a - b).abs() <= 1e-9 * (1.0 + a.abs()))
            })
            .ok_or_else(|| {
                Error::InvalidContrast(format!(
                    "covariate profile {profile:?} has zero probability"
                ))
            })
    }

    /// Contrast between two grid levels at a support profile, all by index.
    pub fn contrast(&self, x: usize, x_star: usize, c: usize) -> ContrastSpec {
        let covariates = self
            .covariate_names
            .iter()
            .cloned()
            .zip(self.c_support[c].iter().copied())
            .collect();
        let (a, b) = (self.exposure_grid[x], self.exposure_grid[x_star]);
        if x == x_star {
            ContrastSpec::single_world(a, covariates)
        } else {
            ContrastSpec::new(a, b, covariates).expect("grid levels are distinct and finite")
        }
    }

    pub(crate) fn resolve(&self, contrast: &ContrastSpec) -> Result<(usize, usize, usize)> {
        Ok((
            self.level_index(contrast.x)?,
            self.level_index(contrast.x_star)?,
            self.profile_index(&contrast.covariates)?,
        ))
    }
}
