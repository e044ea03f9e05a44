use thiserror::Error;

/// Errors raised by the model, solvers and analysis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter violates one of the admissibility inequalities.
    #[error("parameter out of range: {0}")]
    Range(String),

    /// The operation is only defined for multiplicative (linear) jump maps.
    #[error("operation requires linear jump families, found {0}")]
    UnsupportedFamily(&'static str),

    #[error("jump inversion did not converge for b = {target} after {iterations} iterations")]
    Convergence { target: f64, iterations: usize },

    #[error(
        "adaptive quadrature on [{lo}, {hi}] stopped at error {error:e} (tolerance {tolerance:e})"
    )]
    Quadrature {
        lo: f64,
        hi: f64,
        error: f64,
        tolerance: f64,
    },

    /// The equilibrium moment product needs chi_j > 0 on the whole range.
    #[error("chi_{index} = {value:e} is not positive; equilibrium moment undefined")]
    Sign { index: u32, value: f64 },

    /// The chi_k sign sequence is not a single + to - change.
    #[error("chi_k sign pattern violates the single-change hypothesis: {0}")]
    Pattern(String),

    #[error("CFL violation: {0}")]
    CflViolation(String),

    #[error("negative mass {mass:e} in cell {cell}")]
    NegativeMass { cell: usize, mass: f64 },

    #[error("binning mismatch: {0}")]
    BinningMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;
