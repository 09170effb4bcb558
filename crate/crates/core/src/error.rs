use thiserror::Error;

/// One accepted (or rejected) Newton iterate, kept for diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub log_likelihood: f64,
    pub gradient_max_norm: f64,
    pub step_scale: f64,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("ingestion error at data row {row}: {message}")]
    Ingestion { row: usize, message: String },

    #[error("invalid dataset: {0}")]
    InvalidData(String),

    #[error("invalid design term `{term}`: {message}")]
    InvalidTerm { term: String, message: String },

    #[error("invalid design: {0}")]
    InvalidDesign(String),

    #[error("missing variable `{0}`")]
    MissingVariable(String),

    #[error("term `{term}` is not finite on data row {row}")]
    NonFiniteTerm { term: String, row: usize },

    #[error("singular design: term `{term}` is collinear with [{}]", collinear_with.join(", "))]
    SingularDesign {
        term: String,
        collinear_with: Vec<String>,
    },

    #[error("complete or quasi-complete separation detected at iteration {iteration}: |coefficient of `{term}`| exceeded the divergence threshold")]
    Separation { term: String, iteration: usize },

    #[error("Newton iteration did not converge in {} iterations (final gradient max-norm {:.3e})",
        trajectory.len(),
        trajectory.last().map(|r| r.gradient_max_norm).unwrap_or(f64::NAN))]
    NonConvergence { trajectory: Vec<IterationRecord> },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("mediator effect on the outcome is degenerate (|delta| = {0:e}); bounds on the sensitivity parameter are undefined")]
    DegenerateMediatorEffect(f64),

    #[error("covariance matrix is not positive semi-definite: {0}")]
    NotPositiveSemiDefinite(String),

    #[error("alpha must lie in (0, 1), got {0}")]
    InvalidAlpha(f64),

    #[error("invalid contrast: {0}")]
    InvalidContrast(String),

    #[error("exposure level {0} is not on the structural model's exposure grid")]
    OffGrid(f64),

    #[error("invalid structural model: {0}")]
    InvalidModel(String),

    #[error("degenerate probability: {0}")]
    DegenerateProbability(String),

    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    /// True for failures of the numerical machinery, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SingularDesign { .. }
                | Error::Separation { .. }
                | Error::NonConvergence { .. }
                | Error::Numerical(_)
                | Error::DegenerateMediatorEffect(_)
                | Error::NotPositiveSemiDefinite(_)
                | Error::DegenerateProbability(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
