use std::collections::BTreeMap;
use std::path::Path;

use log::{info, warn};
use medbounds::oracle::cun::{cun_like_scm, COHORT_SIZE};
use medbounds::oracle::{sample_dataset, ScmConfig};
use medbounds::validate::{run_validation, ValidationConfig, ValidationReport};
use medbounds::{
    analyze, fit_logistic, point_effects, theta_bundle, Analysis, ColumnMap, ContrastSpec, Dataset,
    FittedGlm, Role,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Profile, Settings};
use crate::emit::{Cell, Table};
use crate::error::{CliError, Result};

/// Saved pair of fitted models, reusable with `--models`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub outcome: FittedGlm,
    pub mediator: FittedGlm,
}

impl ModelFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let file: ModelFile =
            serde_json::from_str(&text).map_err(|source| CliError::ModelFile {
                path: path.to_path_buf(),
                source,
            })?;
        if file.outcome.role() != Role::Outcome || file.mediator.role() != Role::Mediator {
            return Err(CliError::Usage(format!(
                "{}: `outcome` and `mediator` entries have swapped roles",
                path.display()
            )));
        }
        Ok(file)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s =
            serde_json::to_string_pretty(self).map_err(|e| CliError::Encode(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    /// Covariates either model needs, sorted.
    fn covariates(&self) -> Vec<String> {
        let mut names = self.outcome.design().covariates();
        names.extend(self.mediator.design().covariates());
        names.sort();
        names.dedup();
        names
    }
}

pub fn load_data(settings: &Settings) -> Result<Option<Dataset>> {
    let Some(path) = &settings.data else {
        return Ok(None);
    };
    let data = Dataset::from_csv_path(path, &settings.columns)?;
    info!("read {} rows from {}", data.len(), path.display());
    Ok(Some(data))
}

fn fit_models(settings: &Settings, data: &Dataset) -> Result<ModelFile> {
    Ok(ModelFile {
        outcome: fit_logistic(data, &settings.outcome_design, Role::Outcome)?,
        mediator: fit_logistic(data, &settings.mediator_design, Role::Mediator)?,
    })
}

/// Models from `--models` when given, otherwise fitted to the data.
pub fn obtain_models(settings: &Settings, data: Option<&Dataset>) -> Result<ModelFile> {
    match (&settings.models, data) {
        (Some(path), _) => ModelFile::load(path),
        (None, Some(data)) => fit_models(settings, data),
        (None, None) => Err(CliError::Usage(
            "no data or model file: pass --data, --models or --config".into(),
        )),
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// One profile per level of the first binary covariate, with the remaining
/// covariates at their within-group means; a single all-means profile when
/// no covariate is binary.
pub fn default_profiles(data: &Dataset, needed: &[String]) -> Result<Vec<Profile>> {
    let columns: Vec<(String, Vec<f64>)> = needed
        .iter()
        .map(|n| {
            data.covariate_column(n)
                .map(|c| (n.clone(), c))
                .ok_or_else(|| {
                    CliError::Usage(format!("models need covariate `{n}`, which the data lacks"))
                })
        })
        .collect::<Result<_>>()?;
    let binary = columns.iter().position(|(_, c)| {
        c.iter().all(|&v| v == 0.0 || v == 1.0) && c.contains(&0.0) && c.contains(&1.0)
    });
    let Some(b) = binary else {
        return Ok(vec![Profile {
            name: Some(if needed.is_empty() { "all" } else { "mean" }.into()),
            values: columns.iter().map(|(n, c)| (n.clone(), mean(c))).collect(),
        }]);
    };
    let (group_name, group) = &columns[b];
    Ok([0.0, 1.0]
        .into_iter()
        .map(|level| {
            let rows: Vec<usize> = (0..group.len()).filter(|&i| group[i] == level).collect();
            let values: BTreeMap<String, f64> = columns
                .iter()
                .map(|(n, c)| {
                    let v = if n == group_name {
                        level
                    } else {
                        mean(&rows.iter().map(|&i| c[i]).collect::<Vec<_>>())
                    };
                    (n.clone(), v)
                })
                .collect();
            Profile {
                name: Some(format!("{group_name}={level}")),
                values,
            }
        })
        .collect())
}

fn profiles(
    settings: &Settings,
    data: Option<&Dataset>,
    models: &ModelFile,
) -> Result<Vec<Profile>> {
    let needed = models.covariates();
    let profiles = if !settings.profiles.is_empty() {
        settings.profiles.clone()
    } else if needed.is_empty() {
        vec![Profile {
            name: Some("all".into()),
            values: BTreeMap::new(),
        }]
    } else {
        match data {
            Some(d) => default_profiles(d, &needed)?,
            None => {
                return Err(CliError::Usage(format!(
                    "without data, covariate profiles must be given for [{}]",
                    needed.join(", ")
                )))
            }
        }
    };
    for p in &profiles {
        if let Some(missing) = needed.iter().find(|n| !p.values.contains_key(*n)) {
            return Err(CliError::Usage(format!(
                "profile `{}` has no value for `{missing}`",
                p.label()
            )));
        }
    }
    Ok(profiles)
}

fn warn_outside_support(settings: &Settings, data: Option<&Dataset>) {
    if let Some(d) = data {
        let (lo, hi) = d.exposure_range();
        if settings.x_star < lo || settings.x_star > hi {
            warn!(
                "reference level x* = {} is outside the observed exposure range [{lo}, {hi}]",
                settings.x_star
            );
        }
    }
}

fn contrast(x: f64, x_star: f64, profile: &Profile) -> Result<ContrastSpec> {
    if x == x_star {
        Ok(ContrastSpec::single_world(x, profile.values.clone()))
    } else {
        Ok(ContrastSpec::new(x, x_star, profile.values.clone())?)
    }
}

/// Everything the contrast commands share: models, profiles and levels.
struct Prepared {
    models: ModelFile,
    profiles: Vec<Profile>,
    covariates: Vec<String>,
}

fn prepare(settings: &Settings) -> Result<Prepared> {
    if settings.xs.is_empty() {
        return Err(CliError::Usage(
            "no exposure levels: pass --x or set `x` / `x_range` under [contrasts]".into(),
        ));
    }
    let data = load_data(settings)?;
    warn_outside_support(settings, data.as_ref());
    let models = obtain_models(settings, data.as_ref())?;
    let profiles = profiles(settings, data.as_ref(), &models)?;
    let covariates = models.covariates();
    Ok(Prepared {
        models,
        profiles,
        covariates,
    })
}

fn contrast_columns<'a>(covariates: &'a [String], tail: &[&'a str]) -> Vec<&'a str> {
    let mut cols = vec!["profile"];
    cols.extend(covariates.iter().map(String::as_str));
    cols.extend(["x", "x_star"]);
    cols.extend(tail);
    cols
}

fn contrast_cells(p: &Profile, covariates: &[String], x: f64, x_star: f64) -> Vec<Cell> {
    let mut row = vec![Cell::Text(p.label())];
    row.extend(covariates.iter().map(|c| Cell::Num(p.values[c])));
    row.extend([Cell::Num(x), Cell::Num(x_star)]);
    row
}

/// `(profile, x)` grid in output order: profiles outer, exposure levels in
/// the order given.
fn grid<'a>(prep: &'a Prepared, settings: &Settings) -> Vec<(&'a Profile, f64)> {
    prep.profiles
        .iter()
        .flat_map(|p| settings.xs.iter().map(move |&x| (p, x)))
        .collect()
}

fn analyses(prep: &Prepared, settings: &Settings) -> Result<Vec<Analysis>> {
    grid(prep, settings)
        .into_par_iter()
        .map(|(p, x)| {
            let theta = theta_bundle(
                &prep.models.outcome,
                &prep.models.mediator,
                &contrast(x, settings.x_star, p)?,
            )?;
            let a = analyze(&theta, settings.alpha)?;
            if a.bounds.degenerate {
                warn!(
                    "profile {}, x = {x}: mediator effect on the outcome is degenerate",
                    p.label()
                );
            }
            Ok(a)
        })
        .collect()
}

fn coefficient_table(name: &str, title: &str, model: &FittedGlm) -> Table {
    let mut t = Table::new(name, &["term", "est.", "s.e.", "p-value"]);
    let r = model.report();
    t.title = Some(format!(
        "{title} (n = {}, log-likelihood {:.4}, {} iterations)",
        model.n_obs(),
        r.log_likelihood,
        r.iterations
    ));
    for row in model.coefficient_table() {
        let term = if row.term == "1" {
            "Intercept".to_string()
        } else {
            row.term
        };
        t.push(vec![
            Cell::Text(term),
            Cell::Num(row.estimate),
            Cell::Num(row.std_error),
            Cell::PValue(row.p_value),
        ]);
    }
    t
}

/// Fits both models and reports their coefficient tables; optionally saves
/// the models for reuse.
pub fn cmd_fit(settings: &Settings, save_models: Option<&Path>) -> Result<Vec<Table>> {
    let data = load_data(settings)?
        .ok_or_else(|| CliError::Usage("fit needs data: pass --data or --config".into()))?;
    let models = fit_models(settings, &data)?;
    if let Some(path) = save_models {
        std::fs::write(path, models.to_json()?).map_err(|source| CliError::Write {
            path: path.to_path_buf(),
            source,
        })?;
        info!("models saved to {}", path.display());
    }
    Ok(vec![
        coefficient_table("outcome", "Outcome model", &models.outcome),
        coefficient_table("mediator", "Mediator model", &models.mediator),
    ])
}

/// Point estimates of the three effects on the log odds-ratio scale.
pub fn cmd_effects(settings: &Settings) -> Result<Vec<Table>> {
    let prep = prepare(settings)?;
    let mut t = Table::new(
        "effects",
        &contrast_columns(&prep.covariates, &["nde", "nie", "te"]),
    );
    for (p, x) in grid(&prep, settings) {
        let theta = theta_bundle(
            &prep.models.outcome,
            &prep.models.mediator,
            &contrast(x, settings.x_star, p)?,
        )?;
        let e = point_effects(&theta);
        let mut row = contrast_cells(p, &prep.covariates, x, settings.x_star);
        row.extend(e.components().map(Cell::Num));
        t.push(row);
    }
    Ok(vec![t])
}

/// Identification bounds and uncertainty intervals, one row per effect.
pub fn cmd_bounds(settings: &Settings) -> Result<Vec<Table>> {
    let prep = prepare(settings)?;
    let results = analyses(&prep, settings)?;
    let mut t = Table::new(
        "bounds",
        &contrast_columns(
            &prep.covariates,
            &[
                "effect", "point", "lower", "upper", "ui_lower", "ui_upper", "or_lower", "or_upper",
            ],
        ),
    );
    for ((p, x), a) in grid(&prep, settings).into_iter().zip(&results) {
        let odds = a.bounds.to_odds_ratio();
        for (k, name) in ["NDE", "NIE", "TE"].into_iter().enumerate() {
            let (b, ui) = (a.bounds.components()[k], a.intervals.components()[k]);
            let mut row = contrast_cells(p, &prep.covariates, x, settings.x_star);
            row.extend([
                Cell::Text(name.into()),
                Cell::Num(a.point.components()[k]),
                Cell::Num(b.lower),
                Cell::Num(b.upper),
                Cell::Num(ui.lower),
                Cell::Num(ui.upper),
                Cell::Num(odds[k].lower),
                Cell::Num(odds[k].upper),
            ]);
            t.push(row);
        }
    }
    Ok(vec![t])
}

/// Wide plot data: one row per `(profile, x)` with every effect's point
/// estimate, bounds and uncertainty interval.
pub fn cmd_curve(settings: &Settings) -> Result<Vec<Table>> {
    let prep = prepare(settings)?;
    let results = analyses(&prep, settings)?;
    let mut tail = Vec::new();
    for e in ["nde", "nie", "te"] {
        for suffix in ["", "_lower", "_upper", "_ui_lower", "_ui_upper"] {
            tail.push(format!("{e}{suffix}"));
        }
    }
    let tail_refs: Vec<&str> = tail.iter().map(String::as_str).collect();
    let mut t = Table::new("curve", &contrast_columns(&prep.covariates, &tail_refs));
    for ((p, x), a) in grid(&prep, settings).into_iter().zip(&results) {
        let mut row = contrast_cells(p, &prep.covariates, x, settings.x_star);
        for k in 0..3 {
            let (b, ui) = (a.bounds.components()[k], a.intervals.components()[k]);
            row.extend(
                [
                    a.point.components()[k],
                    b.lower,
                    b.upper,
                    ui.lower,
                    ui.upper,
                ]
                .map(Cell::Num),
            );
        }
        t.push(row);
    }
    Ok(vec![t])
}

/// Samples a dataset from a structural model (the bundled cohort-like model
/// when `scm` is absent) and returns it as CSV.
pub fn cmd_simulate(scm: Option<&Path>, n: Option<usize>, seed: u64) -> Result<String> {
    let model = match scm {
        Some(path) => ScmConfig::from_path(path)?.build()?,
        None => cun_like_scm(),
    };
    let data = sample_dataset(&model, n.unwrap_or(COHORT_SIZE), seed)?;
    let columns = ColumnMap {
        covariates: model.covariate_names().to_vec(),
        ..ColumnMap::default()
    };
    let mut buf = Vec::new();
    data.write_csv(&mut buf, &columns)?;
    String::from_utf8(buf).map_err(|e| CliError::Encode(e.to_string()))
}

pub fn cmd_validate(cfg: &ValidationConfig) -> Result<ValidationReport> {
    Ok(run_validation(cfg)?)
}

pub fn validation_table(report: &ValidationReport) -> Table {
    let mut t = Table::new(
        "validation",
        &["status", "check", "measured", "tolerance", "detail"],
    );
    t.title = Some(format!("Validation (seed {})", report.seed));
    for c in &report.checks {
        t.push(vec![
            Cell::Text(if c.passed { "PASS" } else { "FAIL" }.into()),
            Cell::Text(c.name.clone()),
            Cell::Sci(c.measured),
            Cell::Sci(c.tolerance),
            Cell::Text(c.detail.clone()),
        ]);
    }
    t
}
