//! Declarative TOML description of a [`StructuralModel`].
//!
//! ```toml
//! covariates = ["Gender"]
//! exposure_grid = [0.0, 1.0, 2.0]
//! u1 = [0.5, 0.5]            # optional, default [1.0]
//! u2 = [1.0]                 # optional, default [1.0]
//!
//! [[profile]]
//! values = [0.0]
//! prob = 0.4
//! [[profile]]
//! values = [1.0]
//! prob = 0.6
//!
//! [exposure]                 # one row, or one row per (profile, u1)
//! table = [[0.3, 0.3, 0.4]]
//!
//! [mediator.logistic]        # or: table = [...] in (x, profile, u2) order
//! intercept = -1.0
//! exposure = 0.5
//! covariates = { Gender = 0.3 }
//! u2 = [0.0]
//!
//! [outcome.logistic]         # or: table = [...] in (x, m, profile, u1, u2) order
//! intercept = -2.0
//! exposure = 0.4
//! mediator = 1.0
//! covariates = { Gender = 0.2 }
//! u1 = [0.0, 0.8]
//! ```
//!
//! Latent effects in a logistic mechanism are additive offsets, one per
//! support point; omitted offsets are zero.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::expit;

use super::scm::StructuralModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScmConfig {
    #[serde(default)]
    pub covariates: Vec<String>,
    pub exposure_grid: Vec<f64>,
    #[serde(default = "unit")]
    pub u1: Vec<f64>,
    #[serde(default = "unit")]
    pub u2: Vec<f64>,
    #[serde(default = "single_profile", rename = "profile")]
    pub profiles: Vec<ProfileConfig>,
    pub exposure: ExposureConfig,
    pub mediator: MechanismConfig,
    pub outcome: MechanismConfig,
}

fn unit() -> Vec<f64> {
    vec![1.0]
}

fn single_profile() -> Vec<ProfileConfig> {
    vec![ProfileConfig {
        values: Vec::new(),
        prob: 1.0,
    }]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileConfig {
    pub values: Vec<f64>,
    pub prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExposureConfig {
    pub table: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum MechanismConfig {
    Table(Vec<f64>),
    Logistic(LogisticConfig),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogisticConfig {
    #[serde(default)]
    pub intercept: f64,
    #[serde(default)]
    pub exposure: f64,
    /// Ignored for the mediator mechanism.
    #[serde(default)]
    pub mediator: f64,
    #[serde(default)]
    pub covariates: BTreeMap<String, f64>,
    #[serde(default)]
    pub u1: Vec<f64>,
    #[serde(default)]
    pub u2: Vec<f64>,
}

impl LogisticConfig {
    fn offset(v: &[f64], i: usize) -> f64 {
        v.get(i).copied().unwrap_or(0.0)
    }

    fn check(&self, names: &[String], what: &str) -> Result<()> {
        if let Some(k) = self.covariates.keys().find(|k| !names.contains(k)) {
            return Err(Error::Config(format!(
                "{what} mechanism references unknown covariate `{k}`"
            )));
        }
        Ok(())
    }

    fn logit(&self, names: &[String], x: f64, m: f64, c: &[f64], u1: usize, u2: usize) -> f64 {
        let cov: f64 = names
            .iter()
            .zip(c)
            .map(|(n, v)| self.covariates.get(n).copied().unwrap_or(0.0) * v)
            .sum();
        self.intercept
            + self.exposure * x
            + self.mediator * m
            + cov
            + Self::offset(&self.u1, u1)
            + Self::offset(&self.u2, u2)
    }
}

impl ScmConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn build(&self) -> Result<StructuralModel<f64>> {
        let (nc, nu1, nu2, nx) = (
            self.profiles.len(),
            self.u1.len(),
            self.u2.len(),
            self.exposure_grid.len(),
        );
        let names = &self.covariates;

        let rows = &self.exposure.table;
        if rows.len() != 1 && rows.len() != nc * nu1 {
            return Err(Error::Config(format!(
                "exposure table needs 1 or {} rows, found {}",
                nc * nu1,
                rows.len()
            )));
        }
        let check_table = |mech: &MechanismConfig, len: usize, what: &str| -> Result<()> {
            match mech {
                MechanismConfig::Table(t) if t.len() != len => Err(Error::Config(format!(
                    "{what} table needs {len} entries, found {}",
                    t.len()
                ))),
                MechanismConfig::Logistic(l) => l.check(names, what),
                _ => Ok(()),
            }
        };
        check_table(&self.mediator, nx * nc * nu2, "mediator")?;
        check_table(&self.outcome, nx * 2 * nc * nu1 * nu2, "outcome")?;

        let profiles = &self.profiles;
        let grid = &self.exposure_grid;
        StructuralModel::from_fn(
            names.clone(),
            profiles
                .iter()
                .map(|p| (p.values.clone(), p.prob))
                .collect(),
            self.u1.clone(),
            self.u2.clone(),
            grid.clone(),
            |c, u1| {
                if rows.len() == 1 {
                    rows[0].clone()
                } else {
                    rows[c * nu1 + u1].clone()
                }
            },
            |x, c, u2| match &self.mediator {
                MechanismConfig::Table(t) => t[(x * nc + c) * nu2 + u2],
                MechanismConfig::Logistic(l) => {
                    expit(l.logit(names, grid[x], 0.0, &profiles[c].values, 0, u2))
                }
            },
            |x, m, c, u1, u2| match &self.outcome {
                MechanismConfig::Table(t) => {
                    t[(((x * 2 + m as usize) * nc + c) * nu1 + u1) * nu2 + u2]
                }
                MechanismConfig::Logistic(l) => {
                    let mv = if m { 1.0 } else { 0.0 };
                    expit(l.logit(names, grid[x], mv, &profiles[c].values, u1, u2))
                }
            },
        )
    }
}
