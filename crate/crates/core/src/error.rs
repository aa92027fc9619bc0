use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported operator kind: {0}")]
    UnsupportedKind(String),
    #[error("point lies outside dom A (residual {residual:.3e})")]
    OutsideDomain { residual: f64 },
    #[error("operator has no potential (not declared as a subdifferential)")]
    NoPotential,
    #[error("operator has an empty zero set")]
    EmptyZeroSet,
    #[error("region does not intersect dom A")]
    EmptyIntersection,
    #[error("cannot reduce operator: {0}")]
    ReductionUnsupported(String),
    #[error("non-finite state at step {step}")]
    NonFiniteState { step: usize },
    #[error("initial condition outside cl dom A (residual {residual:.3e})")]
    InitialConditionOutsideDomain { residual: f64 },
    #[error("probe ({index}) is not a graph pair: residual {residual:.3e}")]
    InvalidProbe { index: usize, residual: f64 },
    #[error("metric {metric} is incompatible with the operator: {reason}")]
    IncompatibleMetric { metric: String, reason: String },
    #[error("rate fit window has {points} usable points (need at least 5)")]
    DegenerateWindow { points: usize },
    #[error("operator is not strongly monotone")]
    NotStronglyMonotone,
    #[error("potential is not strongly convex")]
    NotStronglyConvex,
    #[error("auxiliary process W is not available")]
    MissingAuxiliary,
    #[error("Tikhonov schedule is off")]
    ScheduleOff,
    #[error("series grids do not match")]
    GridMismatch,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid operator: {0}")]
    InvalidOperator(String),
    #[error("parse error at line {line}, column {col}: {message}")]
    Parse {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("validation error in `{field}`: {rule}")]
    Validation { field: String, rule: String },
    #[error("no manifest found in {0}")]
    MissingManifest(String),
    #[error("path {index}: {source}")]
    Path {
        index: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("I/O failure: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn validation(field: impl Into<String>, rule: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            rule: rule.into(),
        }
    }
}
