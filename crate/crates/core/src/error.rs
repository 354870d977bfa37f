use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("adversary construction infeasible: {0}")]
    ConstructionInfeasible(String),

    #[error("moment budget exceeded: requested m = {requested}, largest feasible m = {largest_feasible}")]
    MomentBudgetExceeded { requested: usize, largest_feasible: usize },

    #[error("capability guard: {0}")]
    Capability(String),

    #[error("no usable samples: {0}")]
    EmptyData(String),

    #[error("insufficient samples: need {required} visible, have {available}")]
    InsufficientSamples { required: u64, available: u64 },

    #[error("quantile level {level:e} is below 1/n for n = {n}")]
    QuantileUnresolvable { level: f64, n: usize },

    #[error("constraint system infeasible: best objective {objective:e} exceeds {tolerance:e}")]
    Infeasible { objective: f64, tolerance: f64 },

    #[error("retained subspace has dimension {dim} > {max} (eta = {eta:e})")]
    SubspaceTooLarge { dim: usize, max: usize, eta: f64 },

    #[error("numeric failure: {message} (achieved {achieved:e})")]
    Numeric { message: String, achieved: f64 },

    #[error("an order-0 tensor has no flattening")]
    NotFlattenable,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("certification failed: {0}")]
    Certification(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code: 2 usage/input, 3 certification, 4 capability, 5 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_)
            | Error::DimensionMismatch { .. }
            | Error::Parse(_)
            | Error::Io(_)
            | Error::Json(_)
            | Error::EmptyData(_) => 2,
            Error::Certification(_) => 3,
            Error::Capability(_)
            | Error::SubspaceTooLarge { .. }
            | Error::NotFlattenable
            | Error::MomentBudgetExceeded { .. } => 4,
            Error::ConstructionInfeasible(_)
            | Error::InsufficientSamples { .. }
            | Error::QuantileUnresolvable { .. }
            | Error::Infeasible { .. }
            | Error::Numeric { .. } => 5,
        }
    }

    /// Short stable tag used in CSV status columns.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::ConstructionInfeasible(_) => "construction_infeasible",
            Error::MomentBudgetExceeded { .. } => "moment_budget_exceeded",
            Error::Capability(_) => "capability",
            Error::EmptyData(_) => "empty_data",
            Error::InsufficientSamples { .. } => "insufficient_samples",
            Error::QuantileUnresolvable { .. } => "quantile_unresolvable",
            Error::Infeasible { .. } => "infeasible",
            Error::SubspaceTooLarge { .. } => "subspace_too_large",
            Error::Numeric { .. } => "numeric",
            Error::NotFlattenable => "not_flattenable",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::Certification(_) => "certification",
            Error::Parse(_) => "parse",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
