use thiserror::Error;

/// Errors produced by the solvers and diagnostics.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("grid needs at least {min} nodes, got {n}")]
    GridTooSmall { n: usize, min: usize },

    #[error("grid functions live on different grids ({left} vs {right} nodes)")]
    GridMismatch { left: usize, right: usize },

    #[error("grid function has {got} values for a {expected}-node grid")]
    LengthMismatch { expected: usize, got: usize },

    #[error("non-finite value at node {index}")]
    NonFiniteValue { index: usize },

    #[error("velocity {v} is not attainable with |p| <= {p_box}; enlarge the momentum window")]
    VelocityOutOfRange { v: f64, p_box: f64 },

    #[error("CFL violation: {reason}")]
    CflViolation { reason: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("not converged after t = {t_max} (last gap {last_gap:e})")]
    NotConverged { t_max: f64, last_gap: f64 },

    #[error("model '{0}' is not of discounted form lambda*u + h(x, p)")]
    NotDiscountedForm(String),

    #[error("bracket [{a_lo}, {a_hi}] does not enclose a sign change (c = {c_lo}, {c_hi})")]
    BracketInvalid {
        a_lo: f64,
        a_hi: f64,
        c_lo: f64,
        c_hi: f64,
    },

    #[error("trajectory left the finite range at t = {t}")]
    NonFinite { t: f64 },

    #[error("jet cloud is empty")]
    EmptyCloud,

    #[error("need at least {needed} usable points in the fit window, found {found}")]
    InsufficientData { needed: usize, found: usize },

    #[error("series value {value:e} at t = {t} is not positive; clip the window above the floor")]
    NonPositiveValues { t: f64, value: f64 },

    #[error("no sampled point of the slab satisfies |H| <= {b}")]
    EmptySlab { b: f64 },

    #[error("malformed csv: {0}")]
    Csv(String),

    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for LabError {
    fn from(e: std::io::Error) -> Self {
        LabError::Io(e.to_string())
    }
}

impl From<csv::Error> for LabError {
    fn from(e: csv::Error) -> Self {
        LabError::Csv(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
