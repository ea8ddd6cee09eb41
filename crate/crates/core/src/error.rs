use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found} ({what})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid prevalence {0}: must lie strictly between 0 and 1")]
    InvalidPrevalence(f64),

    #[error("labels must contain at least one labeled and one unlabeled sample (labeled={labeled}, unlabeled={unlabeled})")]
    DegenerateLabels { labeled: usize, unlabeled: usize },

    #[error("labels must be binary (0/1): {0}")]
    NonBinaryLabels(String),

    #[error("invalid group specification: {0}")]
    InvalidGroups(String),

    #[error("group {group} is rank deficient after centering (pivot {pivot:.3e} below {threshold:.3e})")]
    RankDeficient {
        group: usize,
        pivot: f64,
        threshold: f64,
    },

    #[error("initial point violates F(theta0) <= F(theta_null): {initial} > {null}")]
    InfeasibleStart { initial: f64, null: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("simulation failed: {0}")]
    Simulation(String),
}

pub(crate) fn check_len(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch {
            what,
            expected,
            found,
        });
    }
    Ok(())
}
