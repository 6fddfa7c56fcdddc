//! Numerical substrate shared by every other module: initial-value
//! integrators, adaptive quadrature, small dense linear solves, polynomial
//! root finding and finite-difference stencils.

mod fd;
mod ivp;
mod linalg;
mod poly;
mod quadrature;

pub use fd::{fd_derivative, fornberg_weights, FdResult};
pub use ivp::{integrate_ivp, integrate_rk4, IvpProblem, Trajectory};
pub use linalg::{linsolve, LuFactorization, Matrix};
pub use poly::{polyroots, DensePoly, RootGroup, Roots};
pub use quadrature::{integrate_real_line, quadrature, Regularization};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericError {
    #[error("step size underflow at x = {x} (stiffness or blow-up)")]
    StepUnderflow { x: f64 },
    #[error("non-finite state at x = {x}")]
    NonFinite { x: f64 },
    #[error("step budget of {budget} exhausted at x = {x}")]
    StepBudget { budget: usize, x: f64 },
    #[error("quadrature did not converge: estimate {estimate}, error {error}")]
    QuadratureNonConvergence { estimate: f64, error: f64 },
    #[error("singular matrix: pivot {pivot:e} below threshold at column {column}")]
    Singular { column: usize, pivot: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("polynomial degree {0} outside supported range 1..=16")]
    UnsupportedDegree(usize),
    #[error("grid too short: {len} samples, stencil needs {needed}")]
    GridTooShort { len: usize, needed: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, NumericError>;
