use thiserror::Error;

/// Errors produced by model evaluation, fitting, and allocation routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {constraint} (got {value})")]
    InvalidParameter {
        field: &'static str,
        constraint: &'static str,
        value: f64,
    },

    #[error("target {target} is unreachable: curve ceiling is {ceiling}")]
    TargetUnreachable { target: f64, ceiling: f64 },

    #[error("level {level} is unreachable for user {user}: ceiling is {ceiling}")]
    LevelUnreachable { user: usize, level: f64, ceiling: f64 },

    #[error("channel gain is zero: infinite power required")]
    ZeroChannel,

    #[error("infeasible power box: rate floor {lower} W exceeds cap {upper} W")]
    InfeasibleBox { lower: f64, upper: f64 },

    #[error("length mismatch: {left} samples vs {right} fitted values")]
    LengthMismatch { left: usize, right: usize },

    #[error("insufficient samples: need {needed} with {distinct_needed} distinct abscissae, got {got} with {distinct}")]
    InsufficientSamples {
        needed: usize,
        distinct_needed: usize,
        got: usize,
        distinct: usize,
    },

    #[error("sample {index} has a non-finite or negative field `{field}`")]
    NonFinite { index: usize, field: &'static str },

    #[error("no multistart produced a finite descent ({starts} starts)")]
    NoDescent { starts: usize },

    #[error("Dinkelbach iteration limit ({limit}) reached")]
    IterationLimit {
        limit: usize,
        trace: Box<crate::single_user::DinkelbachTrace>,
    },

    #[error("user set is empty")]
    EmptyUserSet,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors that mean the requested problem has no solution,
    /// as opposed to malformed input or an internal failure.
    pub fn is_infeasible(&self) -> bool {
        matches!(
            self,
            Error::TargetUnreachable { .. }
                | Error::LevelUnreachable { .. }
                | Error::ZeroChannel
                | Error::InfeasibleBox { .. }
        )
    }

    pub(crate) fn invalid(field: &'static str, constraint: &'static str, value: f64) -> Self {
        Error::InvalidParameter {
            field,
            constraint,
            value,
        }
    }
}
