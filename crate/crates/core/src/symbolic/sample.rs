use super::expr::{Env, Expr};

/// `n` midpoints of a uniform partition of `[a, b]`.
pub fn sample_points(a: f64, b: f64, n: usize) -> Vec<f64> {
    let h = (b - a) / n as f64;
    (0..n).map(|i| a + h * (i as f64 + 0.5)).collect()
}

/// Sampled size of a residual relative to a reference magnitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualReport {
    pub max_abs: f64,
    pub max_reference: f64,
    pub worst_x: f64,
    pub evaluated: usize,
    pub skipped: usize,
}

impl ResidualReport {
    pub fn relative(&self) -> f64 {
        self.max_abs / self.max_reference.max(1.0)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.evaluated > 0 && self.relative() <= tol
    }
}

/// Evaluate `residual` and `reference` at the sample points (other variables
/// fixed by `env`). Points where either is undefined are skipped.
pub fn max_abs_on(residual: &Expr, reference: &Expr, var: &str, xs: &[f64], env: &Env) -> ResidualReport {
    let mut rep = ResidualReport { max_abs: 0.0, max_reference: 0.0, worst_x: f64::NAN, evaluated: 0, skipped: 0 };
    let mut local: Vec<(&str, f64)> = env.to_vec();
    local.push((var, 0.0));
    let slot = local.len() - 1;
    for &x in xs {
        local[slot].1 = x;
        match (residual.eval(&local), reference.eval(&local)) {
            (Ok(r), Ok(s)) if r.is_finite() && s.is_finite() => {
                rep.evaluated += 1;
                rep.max_reference = rep.max_reference.max(s.abs());
                if r.abs() > rep.max_abs || rep.worst_x.is_nan() {
                    rep.max_abs = rep.max_abs.max(r.abs());
                    rep.worst_x = x;
                }
            }
            _ => rep.skipped += 1,
        }
    }
    rep
}

/// Numerical zero test of a symbolic residual on `[-5, 5]`.
pub fn residual_vanishes(residual: &Expr, reference: &Expr, var: &str, tol: f64) -> bool {
    max_abs_on(residual, reference, var, &sample_points(-5.0, 5.0, 32), &[]).passes(tol)
}
