use thiserror::Error;

use crate::sup_search::RiemannReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("argument {value} outside the domain {domain}")]
    Domain { value: f64, domain: &'static str },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("cantor construction at depth {depth} needs {needed} intervals, cap is {cap}")]
    ResourceLimit { depth: u32, needed: u64, cap: u64 },

    #[error("adaptive quadrature stopped at estimated error {achieved:e} (tolerance {tolerance:e})")]
    ToleranceNotMet { achieved: f64, tolerance: f64 },

    #[error("search budget of {budget} evaluations exhausted (best so far {:e})", partial.r_n)]
    BudgetExceeded {
        budget: u64,
        partial: Box<RiemannReport>,
    },

    #[error("insufficient data: {usable} usable points, need at least {needed}")]
    InsufficientData { usable: usize, needed: usize },

    #[error("Hölder bound violated at n = {n}: r_n = {r_n:e} > bound {bound:e}")]
    HolderViolation { n: u64, r_n: f64, bound: f64 },

    #[error("every test function has zero norm")]
    DegenerateInput,

    #[error("matrix norm {norm} exceeds the exponential cap {cap}")]
    Overflow { norm: f64, cap: f64 },

    #[error("spec error: {0}")]
    Spec(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
