use thiserror::Error;

/// Failures reported by the solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A linear solve broke down or produced non-finite values.
    #[error("solver failure: {0}")]
    SolverFailure(String),
    /// The terminal misfit vanished, so the adjoint terminal value is undefined.
    #[error("degenerate target: terminal misfit norm {misfit_norm:e} is below {threshold:e}")]
    DegenerateTarget { misfit_norm: f64, threshold: f64 },
    /// Invalid problem or solver configuration.
    #[error("configuration error: {0}")]
    ConfigError(String),
    /// The semi-smooth Newton iteration for the fully corrective step did not converge.
    #[error("acceleration failure after {iterations} iterations (residual {residual:e})")]
    AccelerationFailure { iterations: usize, residual: f64 },
    /// The derivative of the value function vanished at the current iterate.
    #[error("non-qualified stationarity at nu = {nu}: derivative {derivative:e}")]
    NonQualifiedStationarity { nu: f64, derivative: f64 },
    /// The outer Newton iteration exhausted its budget.
    #[error("no convergence after {steps} steps (|delta| = {residual:e})")]
    NoConvergence { steps: usize, residual: f64 },
    /// A bracketing oracle found no sign change on its range.
    #[error("no sign change on [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
