use rayon::prelude::*;

use super::system::{u_at, SolitonSpec};
use crate::symbolic::Expr;
use crate::{Error, Result};

pub const X: &str = "x";
pub const Y: &str = "y";
pub const T: &str = "t";

/// How the phases move with the extra variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flow {
    /// `tau_j = k_j x + beta_j`
    Static,
    /// `tau_j = k_j x + k_j^2 y + k_j^3 t + beta_j`
    Kp,
    /// `tau_j = k_j x - 4 k_j^3 t + beta_j`
    Kdv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pde {
    /// `(-4u_t + u_xxx + 6u u_x)_x + 3u_yy = 0`
    Kp,
    /// `u_t + 6u u_x + u_xxx = 0`
    Kdv,
}

fn tau_expr(k: f64, beta: f64, flow: Flow) -> Expr {
    let x = Expr::var(X).scale(k);
    let b = Expr::real(beta);
    match flow {
        Flow::Static => x.add(&b),
        Flow::Kp => Expr::sum(vec![x, Expr::var(Y).scale(k * k), Expr::var(T).scale(k * k * k), b]),
        Flow::Kdv => Expr::sum(vec![x, Expr::var(T).scale(-4.0 * k * k * k), b]),
    }
}

/// `F` with `a_1 = -D_x log F`: `cosh tau_1` for one soliton and
/// `(k1 - k2) cosh(tau_1 + tau_2) + (k1 + k2) cosh(tau_1 - tau_2)` for two.
pub fn tau_function(spec: &SolitonSpec, flow: Flow) -> Result<Expr> {
    let taus: Vec<Expr> = (0..spec.n()).map(|j| tau_expr(spec.k[j], spec.beta[j], flow)).collect();
    match spec.n() {
        1 => Ok(taus[0].cosh()),
        2 => {
            let (k1, k2) = (spec.k[0], spec.k[1]);
            Ok(taus[0].add(&taus[1]).cosh().scale(k1 - k2).add(&taus[0].sub(&taus[1]).cosh().scale(k1 + k2)))
        }
        n => Err(Error::InvalidInput(format!("closed form available for N <= 2, got N = {n}"))),
    }
}

pub fn closed_form_a1(spec: &SolitonSpec) -> Result<Expr> {
    Ok(tau_function(spec, Flow::Static)?.log().diff(X).neg())
}

/// `-2 D_x^2 log F`, the potential; the KdV flow returns its negative
/// `2 D_x^2 log F`, which is the positive-amplitude KdV solution.
pub fn closed_form_u(spec: &SolitonSpec, flow: Flow) -> Result<Expr> {
    let f = tau_function(spec, flow)?;
    let fx = f.diff(X);
    let fxx = fx.diff(X);
    let lxx = f.mul(&fxx).sub(&fx.powi(2)).div(&f.powi(2));
    Ok(match flow {
        Flow::Kdv => lxx.scale(2.0),
        _ => lxx.scale(-2.0),
    })
}

/// Static potential with phases moved along the KP flow.
pub fn kp_field(spec: &SolitonSpec, x: f64, y: f64, t: f64) -> Result<f64> {
    u_at(&spec.shifted(|k| k * k * y + k * k * k * t), x)
}

/// `-u` with phases `beta_j - 4 k_j^3 t`.
pub fn kdv_field(spec: &SolitonSpec, x: f64, t: f64) -> Result<f64> {
    Ok(-u_at(&spec.shifted(|k| -4.0 * k * k * k * t), x)?)
}

/// Symbolic residual of the equation for a field in `x, y, t`.
pub fn pde_residual_expr(u: &Expr, pde: Pde) -> Expr {
    let ux = u.diff(X);
    match pde {
        Pde::Kdv => Expr::sum(vec![u.diff(T), u.mul(&ux).scale(6.0), ux.diff_n(X, 2)]),
        Pde::Kp => {
            let inner = Expr::sum(vec![u.diff(T).scale(-4.0), ux.diff_n(X, 2), u.mul(&ux).scale(6.0)]);
            inner.diff(X).add(&u.diff_n(Y, 2).scale(3.0))
        }
    }
}

/// Largest residual over a set of points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdeReport {
    pub max_abs: f64,
    /// Largest single term of the equation over the same points.
    pub max_term: f64,
    pub worst: [f64; 3],
    pub evaluated: usize,
}

impl PdeReport {
    fn from_values(vals: &[(f64, f64, [f64; 3])]) -> PdeReport {
        let mut rep = PdeReport { max_abs: 0.0, max_term: 0.0, worst: [f64::NAN; 3], evaluated: vals.len() };
        for &(r, s, p) in vals {
            rep.max_term = rep.max_term.max(s);
            if r.abs() > rep.max_abs || rep.worst[0].is_nan() {
                rep.max_abs = rep.max_abs.max(r.abs());
                rep.worst = p;
            }
        }
        rep
    }

    pub fn relative(&self) -> f64 {
        self.max_abs / self.max_term.max(1.0)
    }
}

/// `(-h..h)^3` sampled with `n` points per axis; the `y` axis collapses for KdV.
pub fn sample_box(half_width: f64, n: usize, pde: Pde) -> Vec<[f64; 3]> {
    let axis: Vec<f64> = if n == 1 {
        vec![0.0]
    } else {
        (0..n).map(|i| -half_width + 2.0 * half_width * i as f64 / (n - 1) as f64).collect()
    };
    let ys = if pde == Pde::Kdv { vec![0.0] } else { axis.clone() };
    let mut out = Vec::new();
    for &x in &axis {
        for &y in &ys {
            for &t in &axis {
                out.push([x, y, t]);
            }
        }
    }
    out
}

/// Residual of a closed-form field evaluated with exact partial derivatives.
pub fn pde_residual_exact(u: &Expr, pde: Pde, points: &[[f64; 3]]) -> Result<PdeReport> {
    let res = pde_residual_expr(u, pde);
    let ux = u.diff(X);
    let terms: Vec<Expr> = match pde {
        Pde::Kdv => vec![u.diff(T), u.mul(&ux).scale(6.0), ux.diff_n(X, 2)],
        Pde::Kp => vec![
            u.diff(T).diff(X).scale(-4.0),
            ux.diff_n(X, 3),
            ux.powi(2).add(&u.mul(&ux.diff(X))).scale(6.0),
            u.diff_n(Y, 2).scale(3.0),
        ],
    };
    let vals: Vec<(f64, f64, [f64; 3])> = points
        .par_iter()
        .map(|p| {
            let env = [(X, p[0]), (Y, p[1]), (T, p[2])];
            let r = res.eval(&env)?;
            let mut s = 0.0f64;
            for term in &terms {
                s = s.max(term.eval(&env)?.abs());
            }
            Ok((r, s, *p))
        })
        .collect::<Result<_>>()?;
    Ok(PdeReport::from_values(&vals))
}

/// Residual from second-order central differences with step `h`.
pub fn pde_residual_fd<F>(field: &F, pde: Pde, points: &[[f64; 3]], h: f64) -> Result<Vec<f64>>
where
    F: Fn(f64, f64, f64) -> Result<f64> + Sync,
{
    points
        .par_iter()
        .map(|&[x, y, t]| {
            let u = |dx: f64, dy: f64, dt: f64| field(x + dx * h, y + dy * h, t + dt * h);
            let u0 = u(0.0, 0.0, 0.0)?;
            let (p1, m1, p2, m2) = (u(1.0, 0.0, 0.0)?, u(-1.0, 0.0, 0.0)?, u(2.0, 0.0, 0.0)?, u(-2.0, 0.0, 0.0)?);
            let ux = (p1 - m1) / (2.0 * h);
            let uxx = (p1 - 2.0 * u0 + m1) / (h * h);
            let uxxx = (p2 - 2.0 * p1 + 2.0 * m1 - m2) / (2.0 * h.powi(3));
            Ok(match pde {
                Pde::Kdv => {
                    let ut = (u(0.0, 0.0, 1.0)? - u(0.0, 0.0, -1.0)?) / (2.0 * h);
                    ut + 6.0 * u0 * ux + uxxx
                }
                Pde::Kp => {
                    let uxxxx = (p2 - 4.0 * p1 + 6.0 * u0 - 4.0 * m1 + m2) / h.powi(4);
                    let uxt = (u(1.0, 0.0, 1.0)? - u(1.0, 0.0, -1.0)? - u(-1.0, 0.0, 1.0)? + u(-1.0, 0.0, -1.0)?)
                        / (4.0 * h * h);
                    let uyy = (u(0.0, 1.0, 0.0)? - 2.0 * u0 + u(0.0, -1.0, 0.0)?) / (h * h);
                    -4.0 * uxt + uxxxx + 6.0 * (ux * ux + u0 * uxx) + 3.0 * uyy
                }
            })
        })
        .collect()
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (p, q)| m.max((p - q).abs()))
}

/// `|R_h - R_(h/2)| / |R_(h/2) - R_(h/4)|`, close to 4 for a second-order scheme.
pub fn richardson_ratio<F>(field: &F, pde: Pde, points: &[[f64; 3]], h: f64) -> Result<f64>
where
    F: Fn(f64, f64, f64) -> Result<f64> + Sync,
{
    let r1 = pde_residual_fd(field, pde, points, h)?;
    let r2 = pde_residual_fd(field, pde, points, h / 2.0)?;
    let r4 = pde_residual_fd(field, pde, points, h / 4.0)?;
    Ok(sup_diff(&r1, &r2) / sup_diff(&r2, &r4))
}

/// `|R_h - R| / |R_(h/2) - R|` against exact residual values `R`.
pub fn convergence_ratio<F>(field: &F, pde: Pde, points: &[[f64; 3]], exact: &[f64], h: f64) -> Result<f64>
where
    F: Fn(f64, f64, f64) -> Result<f64> + Sync,
{
    let r1 = pde_residual_fd(field, pde, points, h)?;
    let r2 = pde_residual_fd(field, pde, points, h / 2.0)?;
    Ok(sup_diff(&r1, exact) / sup_diff(&r2, exact))
}

/// `\int u dx` over `[-l, l]` for the KdV field at time `t`.
pub fn kdv_mass(spec: &SolitonSpec, t: f64, l: f64, tol: f64) -> Result<f64> {
    let f = |x: f64| kdv_field(spec, x, t).unwrap_or(f64::NAN);
    Ok(crate::numeric::quadrature(f, -l, l, tol, crate::numeric::Regularization::None)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::soliton::system::{potential, solve_coefficients};

    fn spec(k: &[f64], b: &[f64]) -> SolitonSpec {
        SolitonSpec::new(k.to_vec(), b.to_vec()).unwrap()
    }

    #[test]
    fn closed_forms_match_linear_solve() {
        for s in [spec(&[1.3], &[0.4]), spec(&[2.0, 1.0], &[0.0, 0.0]), spec(&[1.5, 0.4], &[-0.3, 0.8])] {
            let a1 = closed_form_a1(&s).unwrap();
            let u = closed_form_u(&s, Flow::Static).unwrap();
            for x in [-6.0, -1.0, 0.0, 0.5, 3.0, 9.0] {
                let c = solve_coefficients(&s, x).unwrap();
                assert!((a1.eval_at(X, x).unwrap() - c.a[0]).abs() < 1e-10);
                assert!((u.eval_at(X, x).unwrap() - c.u()).abs() < 1e-10);
            }
        }
        assert!(tau_function(&spec(&[3.0, 2.0, 1.0], &[0.0; 3]), Flow::Static).is_err());
    }

    #[test]
    fn kp_field_reduces_to_static() {
        let s = spec(&[2.0, 1.0], &[0.1, 0.2]);
        let p = potential(&s, &[-1.0, 0.5]).unwrap();
        assert_eq!(kp_field(&s, -1.0, 0.0, 0.0).unwrap(), p.u[0]);
        assert_eq!(kp_field(&s, 0.5, 0.0, 0.0).unwrap(), p.u[1]);
        let one = spec(&[1.5], &[0.2]);
        let (x, y, t) = (0.3, -0.4, 0.25);
        let xi = 1.5 * x + 2.25 * y + 3.375 * t + 0.2;
        assert!((kp_field(&one, x, y, t).unwrap() + 2.0 * 2.25 / xi.cosh().powi(2)).abs() < 1e-12);
    }

    #[test]
    fn zero_field_has_zero_residual() {
        assert!(pde_residual_expr(&Expr::zero(), Pde::Kp).is_zero());
        assert!(pde_residual_expr(&Expr::zero(), Pde::Kdv).is_zero());
    }

    #[test]
    fn kdv_solitons_solve_kdv() {
        for s in [spec(&[1.2], &[0.0]), spec(&[2.0, 1.0], &[0.3, -0.1])] {
            let u = closed_form_u(&s, Flow::Kdv).unwrap();
            let rep = pde_residual_exact(&u, Pde::Kdv, &sample_box(2.0, 9, Pde::Kdv)).unwrap();
            assert!(rep.relative() <= 1e-9, "{rep:?}");
            let field = |x: f64, _y: f64, t: f64| kdv_field(&s, x, t);
            for p in sample_box(1.0, 3, Pde::Kdv) {
                let want = u.eval(&[(X, p[0]), (Y, 0.0), (T, p[2])]).unwrap();
                assert!((field(p[0], 0.0, p[2]).unwrap() - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn finite_differences_converge_at_second_order() {
        let s = spec(&[2.0, 1.0], &[0.0, 0.0]);
        let field = |x: f64, y: f64, t: f64| kp_field(&s, x, y, t);
        let pts = sample_box(1.0, 3, Pde::Kp);
        let ratio = richardson_ratio(&field, Pde::Kp, &pts, 0.04).unwrap();
        assert!((ratio - 4.0).abs() < 0.5, "{ratio}");
        let kdv = |x: f64, _y: f64, t: f64| kdv_field(&s, x, t);
        let kp = sample_box(1.0, 3, Pde::Kdv);
        let zeros = vec![0.0; kp.len()];
        let q = convergence_ratio(&kdv, Pde::Kdv, &kp, &zeros, 0.01).unwrap();
        assert!((q - 4.0).abs() < 0.5, "{q}");
    }

    #[test]
    fn kdv_mass_is_conserved() {
        let s = spec(&[1.5, 0.8], &[0.0, 0.4]);
        let m0 = kdv_mass(&s, 0.0, 60.0, 1e-12).unwrap();
        assert!((m0 - 4.0 * s.sum_k()).abs() < 1e-8);
        for t in [-0.5, 0.3, 1.0] {
            assert!((kdv_mass(&s, t, 60.0, 1e-12).unwrap() - m0).abs() < 1e-8);
        }
    }

    #[test]
    fn one_soliton_matches_zeta_chain() {
        use crate::symbolic::{zeta_chain, ZetaNormalization};
        let s = spec(&[1.4], &[0.0]);
        let u = closed_form_u(&s, Flow::Static).unwrap();
        let z = zeta_chain(&u, X, 1, ZetaNormalization::default(), true).unwrap();
        let a1 = closed_form_a1(&s).unwrap();
        let check = z[0].powi(2).sub(&z[0].diff(X));
        for x in [-3.0, -0.2, 0.0, 1.1, 4.0] {
            assert!((z[0].eval_at(X, x).unwrap() - a1.eval_at(X, x).unwrap()).abs() < 1e-10);
            assert!((check.eval_at(X, x).unwrap() - 1.96).abs() < 1e-12);
        }
    }

    #[test]
    fn kp_phases_leave_a_residual() {
        // with tau = k x + k^2 y + k^3 t even one soliton misses the KP equation
        let s = spec(&[1.0], &[0.0]);
        let u = closed_form_u(&s, Flow::Kp).unwrap();
        let rep = pde_residual_exact(&u, Pde::Kp, &sample_box(1.0, 3, Pde::Kp)).unwrap();
        assert!(rep.max_abs > 1e-2, "{rep:?}");
    }
}
