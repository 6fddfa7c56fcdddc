use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::equation::{sampled_max, Interval, X};
use crate::numeric::{integrate_ivp, IvpProblem};
use crate::symbolic::{Expr, Number};
use crate::{Error, Result};

/// Hermite polynomial with its Riccati witness.
#[derive(Debug, Clone)]
pub struct Hermite {
    pub n: usize,
    /// Ascending integer coefficients.
    pub coeffs: Vec<BigInt>,
    pub omega: Expr,
    /// `y = -x + omega_x/omega`, solving `y_x + y^2 = x^2 + alpha`.
    pub witness: Expr,
    pub alpha: f64,
}

fn poly_expr(coeffs: &[BigInt]) -> Expr {
    let x = Expr::var(X);
    Expr::sum(
        coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(k, c)| Expr::num(Number::Rat(BigRational::from_integer(c.clone()))).mul(&x.powi(k as i32)))
            .collect(),
    )
}

/// Display as `4x^2-2`, highest power first.
pub fn poly_string(coeffs: &[BigInt]) -> String {
    let mut out = String::new();
    for (k, c) in coeffs.iter().enumerate().rev() {
        if c.is_zero() {
            continue;
        }
        let mag = c.abs();
        if c.is_negative() {
            out.push('-');
        } else if !out.is_empty() {
            out.push('+');
        }
        if k == 0 || !mag.is_one() {
            out.push_str(&mag.to_string());
        }
        match k {
            0 => {}
            1 => out.push('x'),
            _ => out.push_str(&format!("x^{k}")),
        }
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

fn recurrence(n: usize) -> Vec<BigInt> {
    let mut prev: Vec<BigInt> = vec![];
    let mut cur = vec![BigInt::one()];
    for k in 0..n {
        // H_{k+1} = 2x H_k - 2k H_{k-1}
        let mut next = vec![BigInt::zero(); k + 2];
        for (i, c) in cur.iter().enumerate() {
            next[i + 1] += c * 2;
        }
        for (i, c) in prev.iter().enumerate() {
            next[i] -= c * (2 * k);
        }
        prev = std::mem::replace(&mut cur, next);
    }
    cur
}

pub fn hermite_polynomial(n: usize) -> Hermite {
    let coeffs = recurrence(n);
    let omega = poly_expr(&coeffs);
    let witness = omega.diff(X).div(&omega).sub(&Expr::var(X));
    Hermite { n, coeffs, omega, witness, alpha: -2.0 * n as f64 - 1.0 }
}

/// Coefficients of `(-1)^n e^{x^2} d^n/dx^n e^{-x^2}`, built from
/// `d/dx (P e^{-x^2}) = (P' - 2xP) e^{-x^2}`.
pub fn hermite_rodrigues(n: usize) -> Vec<BigInt> {
    let mut p = vec![BigInt::one()];
    for _ in 0..n {
        let mut next = vec![BigInt::zero(); p.len() + 1];
        for (i, c) in p.iter().enumerate() {
            if i > 0 {
                next[i - 1] += c * i;
            }
            next[i + 1] -= c * 2;
        }
        p = next;
    }
    if n % 2 == 1 {
        for c in &mut p {
            *c = -c.clone();
        }
    }
    while p.len() > 1 && p.last().is_some_and(|c| c.is_zero()) {
        p.pop();
    }
    p
}

/// `y_x + y^2 - x^2 - alpha`.
pub fn hermite_residual(y: &Expr, alpha: f64) -> Expr {
    let x = Expr::var(X);
    Expr::sum(vec![y.diff(X), y.powi(2), x.powi(2).neg(), Expr::real(-alpha)])
}

/// `y_hat = x + (alpha + 1)/(y + x)`, solving the equation with `alpha + 2`.
pub fn hermite_ladder(y: &Expr, alpha: f64) -> Result<(Expr, f64)> {
    let x = Expr::var(X);
    let denom = y.add(&x);
    if denom.is_zero() || sampled_max(&denom, Interval::default()) == 0.0 {
        return Err(Error::Degenerate("y + x vanishes identically".into()));
    }
    Ok((x.add(&Expr::real(alpha + 1.0).div(&denom)), alpha + 2.0))
}

/// `y = -x + (alpha_hat - 1)/(y_hat - x)`, solving the equation with `alpha_hat - 2`.
pub fn inverse_ladder(y_hat: &Expr, alpha_hat: f64) -> Result<(Expr, f64)> {
    let x = Expr::var(X);
    let denom = y_hat.sub(&x);
    if denom.is_zero() || sampled_max(&denom, Interval::default()) == 0.0 {
        return Err(Error::Degenerate("y_hat - x vanishes identically".into()));
    }
    Ok((Expr::real(alpha_hat - 1.0).div(&denom).sub(&x), alpha_hat - 2.0))
}

/// `y = 1/t + a_0 + a_1 t + ...`, `t = x + eps`.
#[derive(Debug, Clone)]
pub struct PoleSeries {
    pub alpha: f64,
    pub eps: f64,
    pub coeffs: Vec<BigRational>,
}

fn exact(v: f64) -> Result<BigRational> {
    BigRational::from_float(v).ok_or_else(|| Error::InvalidInput(format!("non-finite parameter {v}")))
}

/// Matching powers of `t` in `y_x + y^2 = (t - eps)^2 + alpha` gives
/// `(n+2) a_n = r_{n-1} - sum_{i+j=n-1} a_i a_j`.
pub fn pole_series(alpha: f64, eps: f64, depth: usize) -> Result<PoleSeries> {
    let e = exact(eps)?;
    let rhs = [e.clone() * e.clone() + exact(alpha)?, -(e * BigInt::from(2)), BigRational::one()];
    let mut a: Vec<BigRational> = Vec::with_capacity(depth + 1);
    for n in 0..=depth {
        let mut v = if n >= 1 && n - 1 < rhs.len() { rhs[n - 1].clone() } else { BigRational::zero() };
        if n >= 1 {
            for i in 0..n {
                v -= &a[i] * &a[n - 1 - i];
            }
        }
        a.push(v / BigInt::from(n + 2));
    }
    Ok(PoleSeries { alpha, eps, coeffs: a })
}

impl PoleSeries {
    pub fn coeffs_f64(&self) -> Vec<f64> {
        self.coeffs.iter().map(|c| c.to_f64().unwrap_or(f64::NAN)).collect()
    }

    pub fn eval(&self, x: f64) -> f64 {
        let t = x + self.eps;
        let tail = self.coeffs_f64().iter().rev().fold(0.0, |acc, c| acc * t + c);
        1.0 / t + tail
    }

    pub fn to_expr(&self) -> Expr {
        let t = Expr::var(X).add(&Expr::real(self.eps));
        let mut terms = vec![t.recip()];
        for (k, c) in self.coeffs.iter().enumerate() {
            if !c.is_zero() {
                terms.push(Expr::num(Number::Rat(c.clone())).mul(&t.powi(k as i32)));
            }
        }
        Expr::sum(terms)
    }

    /// Differences between the truncated series and a numeric solution
    /// started from the series at `t = start`, at each offset `t` from the pole.
    pub fn ivp_errors(&self, start: f64, offsets: &[f64], tol: f64) -> Result<Vec<(f64, f64)>> {
        let alpha = self.alpha;
        let x0 = start - self.eps;
        let p = IvpProblem::new(x0, vec![self.eval(x0)], move |x: f64, y: &[f64], dy: &mut [f64]| {
            dy[0] = x * x + alpha - y[0] * y[0];
        });
        let x_end = offsets.iter().cloned().fold(start, f64::max) - self.eps;
        let traj = integrate_ivp(&p, x_end, tol)?;
        Ok(offsets
            .iter()
            .map(|&t| {
                let x = t - self.eps;
                (t, (traj.eval(x)[0] - self.eval(x)).abs())
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::parse;

    fn r(p: i64, q: i64) -> BigRational {
        BigRational::new(p.into(), q.into())
    }

    #[test]
    fn table_entries() {
        let h0 = hermite_polynomial(0);
        assert!(h0.omega.is_one());
        assert_eq!(h0.witness, parse("-x").unwrap());
        assert_eq!(hermite_polynomial(1).omega, parse("2*x").unwrap());
        let h2 = hermite_polynomial(2);
        assert_eq!(h2.omega, parse("4*x^2 - 2").unwrap());
        assert_eq!(poly_string(&h2.coeffs), "4x^2-2");
        assert_eq!(poly_string(&hermite_polynomial(3).coeffs), "8x^3-12x");
        assert_eq!(poly_string(&hermite_polynomial(0).coeffs), "1");
    }

    #[test]
    fn recurrence_matches_rodrigues() {
        for n in 0..=10 {
            assert_eq!(hermite_polynomial(n).coeffs, hermite_rodrigues(n), "n = {n}");
        }
    }

    #[test]
    fn rodrigues_form_symbolically() {
        let x = Expr::var(X);
        let g = x.powi(2).neg().exp();
        for n in 0..=4 {
            let rod = x.powi(2).exp().mul(&g.diff_n(X, n)).scale(if n % 2 == 0 { 1.0 } else { -1.0 });
            let diff = rod.sub(&hermite_polynomial(n).omega);
            assert!(sampled_max(&diff, Interval::new(-2.0, 2.0)) < 1e-9, "n = {n}");
        }
    }

    #[test]
    fn witnesses_solve_hermite_riccati() {
        for n in 0..=6 {
            let h = hermite_polynomial(n);
            let res = hermite_residual(&h.witness, h.alpha);
            assert!(sampled_max(&res, Interval::default()) < 1e-10, "n = {n}");
        }
    }

    #[test]
    fn ladder_steps() {
        let (y1, a1) = hermite_ladder(&Expr::var(X), 1.0).unwrap();
        assert_eq!(y1, parse("x + 1/x").unwrap());
        assert_eq!(a1, 3.0);
        let (y2, a2) = hermite_ladder(&y1, a1).unwrap();
        assert_eq!(a2, 5.0);
        assert!(sampled_max(&hermite_residual(&y2, a2), Interval::default()) < 1e-10);
        let (back, a0) = inverse_ladder(&y1, a1).unwrap();
        assert_eq!(back, Expr::var(X));
        assert_eq!(a0, 1.0);
        assert!(matches!(hermite_ladder(&parse("-x").unwrap(), -1.0), Err(Error::Degenerate(_))));
    }

    #[test]
    fn inverse_ladder_walks_the_hermite_table() {
        let mut y = hermite_polynomial(0).witness;
        let mut alpha = -1.0;
        for n in 1..=4 {
            (y, alpha) = inverse_ladder(&y, alpha).unwrap();
            let h = hermite_polynomial(n);
            assert_eq!(alpha, h.alpha);
            assert!(sampled_max(&y.sub(&h.witness), Interval::new(0.1, 0.4)) < 1e-10, "n = {n}");
        }
    }

    #[test]
    fn pole_coefficients() {
        let s = pole_series(3.0, 0.0, 5).unwrap();
        assert_eq!(s.coeffs, vec![r(0, 1), r(1, 1), r(0, 1), r(0, 1), r(0, 1), r(0, 1)]);
        let t = pole_series(1.0, 0.0, 3).unwrap();
        assert_eq!(t.coeffs[1], r(1, 3));
        assert_eq!(t.coeffs[3], r(8, 45));
        let u = pole_series(0.7, 0.25, 4).unwrap();
        assert!(u.coeffs[0].is_zero());
        assert_eq!(u.coeffs[2], r(-1, 8));
    }

    #[test]
    fn pole_series_satisfies_system() {
        let alpha = 2.5;
        let eps = -0.75;
        let s = pole_series(alpha, eps, 5).unwrap();
        let a = s.coeffs_f64();
        let e2 = eps * eps;
        assert!((3.0 * a[1] - alpha - e2).abs() < 1e-14);
        assert!((4.0 * a[2] + 2.0 * eps).abs() < 1e-14);
        assert!((5.0 * a[3] - 1.0 + a[1] * a[1]).abs() < 1e-14);
        assert!((6.0 * a[4] + 2.0 * a[1] * a[2]).abs() < 1e-14);
        assert!((7.0 * a[5] + 2.0 * a[1] * a[3] + a[2] * a[2]).abs() < 1e-14);
    }

    #[test]
    fn exact_pole_solution_tracks_ivp() {
        let s = pole_series(3.0, 0.0, 5).unwrap();
        for (_, err) in s.ivp_errors(1e-3, &[0.1, 0.2, 0.4], 1e-12).unwrap() {
            assert!(err < 1e-8);
        }
    }
}
