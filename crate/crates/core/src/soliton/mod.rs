//! N-soliton transparent potentials from the algebraic interpolation
//! system, their closed forms for N <= 2, and KP/KdV fields.

mod fields;
mod system;

pub use fields::{
    closed_form_a1, closed_form_u, convergence_ratio, kdv_field, kdv_mass, kp_field, pde_residual_exact,
    pde_residual_expr, pde_residual_fd, richardson_ratio, sample_box, tau_function, Flow, Pde, PdeReport, T, X, Y,
};
pub use system::{
    eval_poly, potential, schrodinger_residual, solve_coefficients, u_at, wavefunctions, wronskian_numeric,
    wronskian_poly, Coefficients, SolitonSpec, TransparentPotential,
};
