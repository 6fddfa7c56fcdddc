//! Schwarzian and modified Schwarzian derivatives and the third-order
//! equation satisfied by products of solutions of `psi_xx = c psi`.

use crate::numeric::fornberg_weights;
use crate::riccati::{check_no_zero, sampled_max, Interval, X};
use crate::symbolic::{Expr, ResidualReport};
use crate::{Error, Result};

/// `3/4 (phi_xx/phi_x)^2 - 1/2 phi_xxx/phi_x`. For `phi = psi1/psi2` with
/// `psi_xx = c psi` this equals `c`.
pub fn schwarz(phi: &Expr) -> Result<Expr> {
    let d1 = phi.diff(X);
    if d1.is_zero() {
        return Err(Error::Degenerate("Schwarzian of a constant".into()));
    }
    let d2 = d1.diff(X);
    let d3 = d2.diff(X);
    Ok(d2.div(&d1).powi(2).mul(&Expr::ratio(3, 4)).sub(&d3.div(&d1).mul(&Expr::ratio(1, 2))))
}

/// `3/4 a_x^2/a^2 - 1/2 a_xx/a`; `dmod(exp(-2b)) = b_xx + b_x^2`.
pub fn dmod(a: &Expr, iv: Interval) -> Result<Expr> {
    if a.is_zero() {
        return Err(Error::Degenerate("dmod of zero".into()));
    }
    check_no_zero(a, iv)?;
    let d1 = a.diff(X);
    let d2 = d1.diff(X);
    Ok(d1.div(a).powi(2).mul(&Expr::ratio(3, 4)).sub(&d2.div(a).mul(&Expr::ratio(1, 2))))
}

/// Potential recovered from `a = 1/phi`, `phi` a product of solutions with
/// Wronskian `v`: `c = dmod(a) + v^2 a^2 / 4`.
pub fn modschwarz(a: &Expr, v: f64, iv: Interval) -> Result<Expr> {
    Ok(dmod(a, iv)?.add(&a.powi(2).scale(v * v / 4.0)))
}

/// `phi_xxx - 4 c phi_x - 2 c_x phi`.
pub fn third_order_residual(phi: &Expr, c: &Expr) -> Expr {
    let d1 = phi.diff(X);
    Expr::sum(vec![
        d1.diff_n(X, 2),
        c.mul(&d1).scale(-4.0),
        c.diff(X).mul(phi).scale(-2.0),
    ])
}

/// `4 c phi^2 + phi_x^2 - 2 phi phi_xx`.
pub fn first_integral(phi: &Expr, c: &Expr) -> Expr {
    let d1 = phi.diff(X);
    Expr::sum(vec![
        c.mul(&phi.powi(2)).scale(4.0),
        d1.powi(2),
        phi.mul(&d1.diff(X)).scale(-2.0),
    ])
}

/// `c` solving `4 c A^2 + A_x^2 - 2 A A_xx = z` for the given `A`.
pub fn potential_from_first_integral(a: &Expr, z: f64) -> Expr {
    let d1 = a.diff(X);
    Expr::sum(vec![Expr::real(z), d1.powi(2).neg(), a.mul(&d1.diff(X)).scale(2.0)]).div(&a.powi(2).scale(4.0))
}

/// `f = 1/2 A_x/A +- sqrt(z)/(2A)`, solving `f_x + f^2 = c` when
/// `4 c A^2 + A_x^2 - 2 A A_xx = z`.
#[derive(Debug, Clone)]
pub struct RiccatiPair {
    pub plus: Expr,
    pub minus: Expr,
    pub c: Expr,
}

pub fn riccati_pair(a: &Expr, z: f64, iv: Interval) -> Result<RiccatiPair> {
    if z < 0.0 {
        return Err(Error::InvalidInput(format!("z = {z} must be a square")));
    }
    if a.is_zero() {
        return Err(Error::Degenerate("A vanishes identically".into()));
    }
    check_no_zero(a, iv)?;
    let half_log = a.diff(X).div(a).mul(&Expr::ratio(1, 2));
    let w = Expr::real(z.sqrt()).div(&a.scale(2.0));
    Ok(RiccatiPair { plus: half_log.add(&w), minus: half_log.sub(&w), c: potential_from_first_integral(a, z) })
}

/// `f_x + f^2 - c`.
pub fn riccati_pair_residual(f: &Expr, c: &Expr) -> Expr {
    f.diff(X).add(&f.powi(2)).sub(c)
}

/// Determinant of the three functions and their first two derivatives.
pub fn wronskian3(f: &Expr, g: &Expr, h: &Expr) -> Expr {
    let rows: Vec<[Expr; 3]> = (0..3).map(|k| [f.diff_n(X, k), g.diff_n(X, k), h.diff_n(X, k)]).collect();
    let m = |i: usize, j: usize| &rows[i][j];
    let minor = |j: usize, k: usize| m(1, j).mul(m(2, k)).sub(&m(1, k).mul(m(2, j)));
    Expr::sum(vec![m(0, 0).mul(&minor(1, 2)), m(0, 1).mul(&minor(0, 2)).neg(), m(0, 2).mul(&minor(0, 1))])
}

/// Squares and product of a fundamental pair of `psi_xx = c psi`.
#[derive(Debug, Clone)]
pub struct SchwarzTriple {
    pub phi1: Expr,
    pub phi2: Expr,
    pub phi3: Expr,
    /// `<psi1, psi2>`
    pub v: f64,
}

impl SchwarzTriple {
    pub fn from_pair(psi1: &Expr, psi2: &Expr, iv: Interval) -> Result<Self> {
        let w = psi1.mul(&psi2.diff(X)).sub(&psi2.mul(&psi1.diff(X)));
        let v = w.eval(&[(X, 0.5 * (iv.a + iv.b))])?;
        if v == 0.0 {
            return Err(Error::Degenerate("solutions are linearly dependent".into()));
        }
        let drift = sampled_max(&w.sub(&Expr::real(v)), iv);
        if drift > 1e-8 * v.abs().max(1.0) {
            return Err(Error::NotASolution { residual: drift, tol: 1e-8 });
        }
        Ok(SchwarzTriple { phi1: psi1.powi(2), phi2: psi2.powi(2), phi3: psi1.mul(psi2), v })
    }

    /// Equals `-2 v^3` for every `x`.
    pub fn wronskian(&self) -> Expr {
        wronskian3(&self.phi1, &self.phi2, &self.phi3)
    }

    /// `f_1, f_2 = (phi3_x -+ v)/(2 phi3)`, the logarithmic derivatives of
    /// `psi1` and `psi2`.
    pub fn log_derivatives(&self) -> (Expr, Expr) {
        let d = self.phi3.diff(X);
        let den = self.phi3.scale(2.0);
        (d.sub(&Expr::real(self.v)).div(&den), d.add(&Expr::real(self.v)).div(&den))
    }
}

/// Third-order residual of samples `phi(x0 + i h)`, differentiated by
/// 9-point stencils at the interior nodes.
pub fn third_order_residual_on_grid(c: &Expr, x0: f64, h: f64, phi: &[f64]) -> Result<ResidualReport> {
    const HALF: usize = 4;
    if phi.len() < 2 * HALF + 1 {
        return Err(Error::InvalidInput(format!("need at least {} samples", 2 * HALF + 1)));
    }
    let offsets: Vec<f64> = (0..=2 * HALF).map(|j| (j as f64 - HALF as f64) * h).collect();
    let w = fornberg_weights(0.0, &offsets, 3);
    let dc = c.diff(X);
    let mut rep = ResidualReport { max_abs: 0.0, max_reference: 0.0, worst_x: f64::NAN, evaluated: 0, skipped: 0 };
    for i in HALF..phi.len() - HALF {
        let x = x0 + i as f64 * h;
        let window = &phi[i - HALF..=i + HALF];
        let d = |k: usize| w[k].iter().zip(window).map(|(a, b)| a * b).sum::<f64>();
        let (cv, dcv) = (c.eval(&[(X, x)])?, dc.eval(&[(X, x)])?);
        let terms = [d(3), 4.0 * cv * d(1), 2.0 * dcv * phi[i]];
        let r = (terms[0] - terms[1] - terms[2]).abs();
        rep.evaluated += 1;
        rep.max_reference = rep.max_reference.max(terms.iter().fold(0.0, |m, t| m.max(t.abs())));
        if r > rep.max_abs || rep.worst_x.is_nan() {
            rep.max_abs = rep.max_abs.max(r);
            rep.worst_x = x;
        }
    }
    Ok(rep)
}
