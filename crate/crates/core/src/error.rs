use thiserror::Error;

/// Errors raised by geometry, projection and operator evaluation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("syntax error at byte {offset}: {msg}")]
    Syntax { offset: usize, msg: String },
    #[error("unknown name `{name}` at byte {offset}")]
    UnknownName { name: String, offset: usize },
    #[error("variable `{0}` is not bound at this evaluation")]
    Unbound(String),
    #[error("parameters {0:?} outside the chart domain")]
    OutOfDomain(Vec<f64>),
    #[error("derivative order {requested} unsupported (max {max})")]
    OrderUnsupported { requested: usize, max: usize },
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("degenerate tangents at {0:?}")]
    Degenerate(Vec<f64>),
    #[error("singular Jacobian: {0}")]
    Singular(String),
    #[error("umbilic point: rotation coefficients undefined")]
    Umbilic,
    #[error("vanishing curvature: {0}")]
    StraightSegment(String),
    #[error("Newton iteration did not converge: {0}")]
    NoConvergence(String),
    #[error("ambiguous closest point: {0}")]
    Multiplicity(String),
    #[error("point outside the collar: {0}")]
    Collar(String),
    #[error("point on the curve axis (sigma = {0:e})")]
    OnAxis(f64),
    #[error("time dependence required: {0}")]
    MissingTime(String),
    #[error("integration grid too coarse: error estimate {0:e}")]
    GridTooCoarse(f64),
    #[error("series invalid: |eps xi kappa| = {0} >= 1")]
    SeriesValidity(f64),
    #[error("all errors below underflow threshold")]
    Underflow,
    #[error("invalid specification at `{field}`: {msg}")]
    Spec { field: String, msg: String },
    #[error("empty region")]
    EmptyRegion,
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
