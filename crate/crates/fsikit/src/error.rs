//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FsiError {
    #[error("assembly error: {0}")]
    Assembly(String),

    #[error("singular factorization: pivot {value:.3e} at equation {index} (threshold {threshold:.3e})")]
    Singular {
        index: usize,
        value: f64,
        threshold: f64,
    },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("mesh parse error at line {line}: {msg}")]
    MeshParse { line: usize, msg: String },

    #[error("invalid mesh: {0}")]
    MeshInvalid(String),

    #[error("unknown boundary tag '{0}'")]
    UnknownTag(String),

    #[error("nonphysical state: {0}")]
    NonphysicalState(String),

    #[error("Newton diverged after {iterations} iterations; residual history: {history:?}")]
    NewtonDiverged {
        iterations: usize,
        history: Vec<f64>,
    },

    #[error("mesh motion produced a tangled mesh: element {element} has area {area:.3e}")]
    Tangled { element: usize, area: f64 },

    #[error("coupling loop exceeded {max_iterations} iterations; last residual {last_residual:.3e}")]
    CouplingDiverged {
        max_iterations: usize,
        last_residual: f64,
    },

    #[error("relaxation stagnated: residual difference vanished at nonzero residual {residual:.3e}")]
    RelaxationStagnated { residual: f64 },

    #[error("perturbation error: {0}")]
    Perturbation(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("objective error: {0}")]
    Objective(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, FsiError>;
