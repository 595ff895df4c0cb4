use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// The tilted integral of the outcome density diverged at this covariate row.
    #[error("tilted integral is not finite at x = {x:?}")]
    Domain { x: Vec<f64> },

    /// No root of the Lagrange equation inside the feasibility interval.
    #[error("no interior Lagrange multiplier root: t ranges over [{t_min}, {t_max}]")]
    NoInteriorRoot { t_min: f64, t_max: f64 },

    #[error("infeasible multiplier: 1 + lambda (e^t - 1) <= 0 at row {row}")]
    InfeasibleLambda { row: usize },

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("optimizer did not converge after {starts} start(s): gradient norm {grad_norm:.3e}")]
    NonConvergence {
        starts: usize,
        grad_norm: f64,
        best: Vec<f64>,
    },

    #[error("information matrix is singular (condition number {condition:.3e})")]
    SingularVhat { condition: f64 },

    #[error("sampling failed: {0}")]
    Sampling(String),

    #[error("model specification: {0}")]
    Spec(String),

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("insufficient sample points: need {needed}, got {got}")]
    InsufficientPoints { needed: usize, got: usize },

    #[error("bootstrap: {failures} of {requested} refits failed")]
    BootstrapFailures { failures: usize, requested: usize },

    #[error("monte carlo: {failures} of {reps} replications failed")]
    TooManyFailures { failures: usize, reps: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
