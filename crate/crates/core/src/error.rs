use thiserror::Error;

/// Error taxonomy shared by the whole crate.
///
/// `Config` covers every precondition violation that a caller can fix by
/// changing inputs (bad dimensions, non-symmetric weights, grid mismatches).
/// `NonConvergence` is reserved for iterative solvers that ran out of
/// iterations or started to oscillate; it carries enough context to report
/// the failure without re-running the solve.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("evaluation outside the stored span: t = {t}, span = [0, {t_max}]")]
    OutOfRange { t: f64, t_max: f64 },

    #[error("shape mismatch for {what}: expected {expected}, got {got}")]
    Shape {
        what: String,
        expected: String,
        got: String,
    },

    #[error("matrix inversion failed at t = {t}: {what} (condition estimate {cond:.3e})")]
    Singular { what: String, t: f64, cond: f64 },

    #[error(
        "fixed-point iteration did not converge: defect {defect:.3e} after {iterations} \
         iterations (tolerance {tol:.3e}){reason}"
    )]
    NonConvergence {
        defect: f64,
        iterations: usize,
        tol: f64,
        reason: String,
    },

    #[error("simulation failed on path {path} at step {step}: {what}")]
    Simulation {
        path: usize,
        step: usize,
        what: String,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
