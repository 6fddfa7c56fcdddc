use crate::numeric::NumericError;
use crate::symbolic::SymbolicError;

#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Symbolic(#[from] SymbolicError),
    #[error(transparent)]
    Numeric(#[from] NumericError),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("not a solution: relative residual {residual:e} exceeds {tol:e}")]
    NotASolution { residual: f64, tol: f64 },
    #[error("function vanishes near x = {x} inside the working interval")]
    ZeroCrossing { x: f64 },
    #[error("solution blows up near x = {x}")]
    BlowUp { x: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
