//! Analysis configuration: a TOML file whose fields can be overridden by
//! command-line flags.
//!
//! ```toml
//! data = "cun_like.csv"          # relative to this file
//! models = "models.json"         # optional; skips fitting when set
//! alpha = 0.05
//! format = "table"               # table | csv | json
//!
//! [columns]
//! outcome = "Y"
//! mediator = "M"
//! exposure = "X"
//! covariates = ["Gender", "BMI"]
//!
//! [design]                       # defaults: 1, x, (m), every covariate
//! outcome = ["1", "x", "m", "BMI", "Gender"]
//! mediator = ["1", "x", "BMI", "Gender"]
//!
//! [contrasts]
//! x = [20.0, 50.0]               # or: x_range = { from = 10, to = 170, step = 10 }
//! x_star = 10.0
//!
//! [[contrasts.profile]]
//! name = "male"
//! values = { Gender = 1.0, BMI = 28.5 }
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use medbounds::{ColumnMap, DesignSpec};
use serde::{Deserialize, Serialize};

use crate::emit::Format;
use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    pub data: Option<PathBuf>,
    pub models: Option<PathBuf>,
    pub columns: Option<ColumnMap>,
    #[serde(default)]
    pub design: DesignConfig,
    #[serde(default)]
    pub contrasts: ContrastConfig,
    pub alpha: Option<f64>,
    pub format: Option<Format>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignConfig {
    pub outcome: Option<Vec<String>>,
    pub mediator: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContrastConfig {
    pub x: Option<Vec<f64>>,
    pub x_range: Option<RangeConfig>,
    pub x_star: Option<f64>,
    #[serde(default, rename = "profile")]
    pub profiles: Vec<Profile>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeConfig {
    pub from: f64,
    pub to: f64,
    pub step: f64,
}

impl RangeConfig {
    pub fn values(&self) -> Result<Vec<f64>> {
        let RangeConfig { from, to, step } = *self;
        if !(from.is_finite() && to.is_finite() && step.is_finite()) || step <= 0.0 || to < from {
            return Err(CliError::Usage(format!(
                "exposure range {from}:{to}:{step} needs from <= to and a positive step"
            )));
        }
        let count = ((to - from) / step + 1e-9).floor() as usize + 1;
        if count > 100_000 {
            return Err(CliError::Usage(format!(
                "exposure range has {count} points; at most 100000"
            )));
        }
        Ok((0..count).map(|i| from + i as f64 * step).collect())
    }
}

/// A named covariate profile `c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Profile {
    #[serde(default)]
    pub name: Option<String>,
    pub values: BTreeMap<String, f64>,
}

impl Profile {
    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| {
            let parts: Vec<String> = self
                .values
                .iter()
                .map(|(k, v)| format!("{k}={v}"))
                .collect();
            if parts.is_empty() {
                "all".into()
            } else {
                parts.join(",")
            }
        })
    }
}

impl AnalysisConfig {
    /// Reads a config file; relative paths inside it are resolved against
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg: AnalysisConfig = toml::from_str(&text).map_err(|e| CliError::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.data, &mut cfg.models].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }
}

/// Values given on the command line; each replaces its config counterpart.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub data: Option<PathBuf>,
    pub models: Option<PathBuf>,
    pub x: Option<Vec<f64>>,
    pub x_star: Option<f64>,
    pub profile: Option<Profile>,
    pub alpha: Option<f64>,
    pub format: Option<Format>,
}

/// Fully resolved analysis settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub data: Option<PathBuf>,
    pub models: Option<PathBuf>,
    pub columns: ColumnMap,
    pub outcome_design: DesignSpec,
    pub mediator_design: DesignSpec,
    pub xs: Vec<f64>,
    pub x_star: f64,
    /// Empty means "derive from the data".
    pub profiles: Vec<Profile>,
    pub alpha: f64,
    pub format: Format,
}

pub const DEFAULT_X_STAR: f64 = 10.0;
pub const DEFAULT_ALPHA: f64 = 0.05;

impl Settings {
    pub fn resolve(cfg: AnalysisConfig, over: Overrides) -> Result<Self> {
        let columns = cfg.columns.unwrap_or_default();
        let design = |given: Option<Vec<String>>, with_m: bool| -> Result<DesignSpec> {
            let terms = given.unwrap_or_else(|| {
                let mut t = vec!["1".to_string(), "x".to_string()];
                if with_m {
                    t.push("m".into());
                }
                t.extend(columns.covariates.iter().cloned());
                t
            });
            Ok(DesignSpec::parse(&terms)?)
        };
        let outcome_design = design(cfg.design.outcome, true)?;
        let mediator_design = design(cfg.design.mediator, false)?;

        let xs = match (over.x, cfg.contrasts.x, cfg.contrasts.x_range) {
            (Some(x), _, _) => x,
            (None, Some(_), Some(_)) => {
                return Err(CliError::Usage(
                    "contrasts: give either `x` or `x_range`, not both".into(),
                ))
            }
            (None, Some(x), None) => x,
            (None, None, Some(r)) => r.values()?,
            (None, None, None) => Vec::new(),
        };
        if let Some(bad) = xs.iter().find(|v| !v.is_finite()) {
            return Err(CliError::Usage(format!(
                "exposure level {bad} is not finite"
            )));
        }
        let x_star = over
            .x_star
            .or(cfg.contrasts.x_star)
            .unwrap_or(DEFAULT_X_STAR);
        if !x_star.is_finite() {
            return Err(CliError::Usage("x_star must be finite".into()));
        }
        let alpha = over.alpha.or(cfg.alpha).unwrap_or(DEFAULT_ALPHA);
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(medbounds::Error::InvalidAlpha(alpha).into());
        }
        let profiles = match over.profile {
            Some(p) => vec![p],
            None => cfg.contrasts.profiles,
        };
        Ok(Settings {
            data: over.data.or(cfg.data),
            models: over.models.or(cfg.models),
            columns,
            outcome_design,
            mediator_design,
            xs,
            x_star,
            profiles,
            alpha,
            format: over.format.or(cfg.format).unwrap_or_default(),
        })
    }
}

/// Parses `50`, `20,50,90` or `from:to:step`.
pub fn parse_levels(s: &str) -> Result<Vec<f64>> {
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|_| CliError::Usage(format!("`{t}` is not a number in exposure levels `{s}`")))
    };
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [from, to, step] => RangeConfig {
            from: num(from)?,
            to: num(to)?,
            step: num(step)?,
        }
        .values(),
        [list] => list.split(',').map(num).collect(),
        _ => Err(CliError::Usage(format!(
            "exposure levels `{s}`: expected a list or from:to:step"
        ))),
    }
}

/// Builds one profile from `key=value` pairs.
pub fn parse_profile(pairs: &[String]) -> Result<Option<Profile>> {
    if pairs.is_empty() {
        return Ok(None);
    }
    let mut values = BTreeMap::new();
    for pair in pairs {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("profile entry `{pair}` is not key=value")))?;
        let v: f64 = v.trim().parse().map_err(|_| {
            CliError::Usage(format!("profile entry `{pair}`: value is not a number"))
        })?;
        if values.insert(k.trim().to_string(), v).is_some() {
            return Err(CliError::Usage(format!(
                "profile key `{}` given twice",
                k.trim()
            )));
        }
    }
    Ok(Some(Profile { name: None, values }))
}
