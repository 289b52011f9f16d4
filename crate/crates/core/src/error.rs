use thiserror::Error;

/// Errors raised by the solver stack.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("calibration cubic has no positive real root (mu = {mu}, delta = {delta})")]
    NoRealPositiveRoot { mu: f64, delta: f64 },

    #[error("root refinement stalled: residual {residual:e} exceeds {tol:e}")]
    ToleranceNotMet { residual: f64, tol: f64 },

    #[error("degenerate calibration branch: 1 - alpha*mu*delta = {denominator:e}")]
    DegenerateBranch { denominator: f64 },

    #[error("calibration branch ambiguous at endpoint {endpoint}: roots {roots:?} collide")]
    BranchAmbiguity { endpoint: usize, roots: Vec<f64> },

    #[error("probe validation failed at endpoint {endpoint} (worst residual {residual:e})")]
    ValidationFailed { endpoint: usize, residual: f64 },

    #[error("grid mismatch: {left} vs {right} intervals")]
    GridMismatch { left: usize, right: usize },

    #[error("grid must be even and at least 16 intervals, got {0}")]
    InvalidGrid(usize),

    #[error("secular roots {first} and {second} are closer than the collision threshold")]
    BracketCollision { first: f64, second: f64 },

    #[error("basis mode {index} violates the Robin condition (residual {residual:e})")]
    RobinViolation { index: i64, residual: f64 },

    #[error("mode {index} has lambda = {lambda} >= w2 = {w2}; no oscillatory frequency")]
    FrequencyDomainError { index: i64, lambda: f64, w2: f64 },

    #[error("time step {dt} violates CFL bound 0.9*dx = {limit}")]
    CflViolation { dt: f64, limit: f64 },

    #[error("finite-difference solution blew up at t = {time}")]
    BlowUp { time: f64 },

    #[error("basis mismatch: {left} vs {right} coefficients")]
    BasisMismatch { left: usize, right: usize },

    #[error("need at least {need} modes, got {got}")]
    InsufficientModes { got: usize, need: usize },

    #[error("malformed mu-function CSV: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
