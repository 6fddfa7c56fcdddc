//! Expression kernel and the ring of differential polynomials.

mod diffpoly;
mod expr;
mod integrate;
mod parse;
mod sample;
mod series;


pub use diffpoly::{DiffPolynomial, FormalSeries, Monomial, Symbol};
pub use expr::{Env, Expr, Func, Node, Number};
pub use integrate::{antiderivative, integrate_or_quadrature};
pub use parse::parse;
pub use sample::{max_abs_on, residual_vanishes, sample_points, ResidualReport};
pub use series::{
    generalized_potential, modschwarz_residual, modschwarz_series, riccati_series, zeta_chain, RiccatiSeries,
    ZetaNormalization,
};


use crate::numeric::NumericError;

#[derive(Debug, Clone, thiserror::Error)]
pub enum SymbolicError {
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("{func} undefined at {arg}")]
    Domain { func: &'static str, arg: f64 },
    #[error("division by zero")]
    DivisionByZero,
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("no closed-form antiderivative for {0}")]
    NotIntegrable(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Numeric(#[from] NumericError),
}
