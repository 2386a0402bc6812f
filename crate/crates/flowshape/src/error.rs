use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("mesh validation failed: {0}")]
    Mesh(String),

    #[error("cell {cell} inverted: det(I + Du) = {det:.6e}")]
    Inversion { cell: usize, det: f64 },

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("linear solve residual {residual:.3e} above tolerance {tol:.3e}")]
    SolveTolerance { residual: f64, tol: f64 },

    #[error("krylov solver stagnated after {iterations} iterations, residual {residual:.3e} (history: {history:?})")]
    KrylovStagnation {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("newton did not converge after {iterations} iterations (residual history: {history:?})")]
    NewtonNonconvergence {
        iterations: usize,
        history: Vec<f64>,
    },

    #[error("descent subproblem failed at ADMM iteration {admm_iteration}: {source}")]
    Subproblem {
        admm_iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("p-laplace stage p = {p} failed: {source}")]
    PlapStage {
        p: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("outer step {step} failed: {source}")]
    OuterStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{count} consecutive trial failures at outer step {step}; last: {last}")]
    ConsecutiveFailures {
        step: usize,
        count: usize,
        last: String,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path} line {line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
}
