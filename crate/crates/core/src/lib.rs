//! Riccati equations, their linear and Schwarzian forms, and the exactly
//! solvable Schrodinger potentials built from them.

pub mod error;
pub mod finitegap;
pub mod numeric;
pub mod riccati;
pub mod schwarzian;
pub mod soliton;
pub mod symbolic;

pub use error::{Error, Result};
