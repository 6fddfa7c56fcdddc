//! The Riccati equation, its transformation group, its linear second-order
//! form and the Hermite and Kovalevskii examples.

mod equation;
mod hermite;
mod kovalevskii;
mod lode;

pub use equation::{
    cross_ratio, cross_ratio_drift, cross_ratio_solution, general_from_particular, integrate_solutions, invert,
    mobius_transform, scale, shift, variation_of_constants, Interval, MobiusMap, RiccatiEq, SolutionFamily, C,
    RESIDUAL_TOL, X,
};
pub(crate) use equation::sampled_max;
pub(crate) use lode::check_no_zero;
pub use lode::{
    apply_const_operator, canonical_form, convert_re_lode, lode_factor, lode_to_re, lode_to_re_with,
    lodo_const_kernel, re_to_lode, second_solution, wronskian_drift, wronskian_trajectory, CanonicalForm, Converted, Direction, Factorization, Kernel,
    Lode2, PsiMap,
};
pub use hermite::{
    hermite_ladder, hermite_polynomial, hermite_residual, hermite_rodrigues, inverse_ladder, pole_series,
    poly_string, Hermite, PoleSeries,
};
pub use kovalevskii::{kovalevskii_blowup, kovalevskii_check, kovalevskii_flow, IntegralDrift, KovalevskiiReport};
