use num_complex::Complex64;

use super::equation::{sampled_max, Interval, RiccatiEq, X};
use crate::numeric::{integrate_ivp, polyroots, DensePoly, IvpProblem, Roots};
use crate::symbolic::{antiderivative, max_abs_on, parse, Expr};
use crate::{Error, Result};

/// `psi_xx = b psi_x + c psi`.
#[derive(Debug, Clone, PartialEq)]
pub struct Lode2 {
    pub b: Expr,
    pub c: Expr,
}

impl Lode2 {
    pub fn new(b: Expr, c: Expr) -> Self {
        Lode2 { b, c }
    }

    pub fn parse(b: &str, c: &str) -> Result<Self> {
        Ok(Lode2::new(parse(b)?, parse(c)?))
    }

    /// From the form `psi_xx + p psi_x + q psi = 0`.
    pub fn from_zero_form(p: Expr, q: Expr) -> Self {
        Lode2::new(p.neg(), q.neg())
    }

    /// `psi_xx - b psi_x - c psi`.
    pub fn residual(&self, psi: &Expr) -> Expr {
        let d1 = psi.diff(X);
        Expr::sum(vec![d1.diff(X), self.b.mul(&d1).neg(), self.c.mul(psi).neg()])
    }

    /// Sampled residual, relative to the second derivative's size.
    pub fn residual_max(&self, psi: &Expr, iv: Interval) -> f64 {
        let reference = psi.diff_n(X, 2);
        max_abs_on(&self.residual(psi), &reference, X, &iv.samples(), &[]).relative()
    }

    pub fn wronskian(psi1: &Expr, psi2: &Expr) -> Expr {
        psi1.mul(&psi2.diff(X)).sub(&psi2.mul(&psi1.diff(X)))
    }
}

/// How a Riccati unknown is recovered from the linear one:
/// `phi = -psi_x / (a psi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiMap {
    pub a: Expr,
}

impl PsiMap {
    pub fn phi(&self, psi: &Expr) -> Expr {
        psi.diff(X).div(&self.a.mul(psi)).neg()
    }
}

impl std::fmt::Display for PsiMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.a == Expr::int(-1) {
            write!(f, "phi = psi_x/psi")
        } else {
            write!(f, "phi = -psi_x/(({})*psi)", self.a)
        }
    }
}

/// RE to LODE through `phi = -psi_x/(a psi)`:
/// `psi_xx = ((a_x + a b)/a) psi_x - c a psi`.
pub fn re_to_lode(eq: &RiccatiEq) -> Result<(Lode2, PsiMap)> {
    if eq.is_linear() || sampled_max(&eq.a, Interval::default()) == 0.0 {
        return Err(Error::Degenerate("a vanishes identically; the equation is linear".into()));
    }
    let a = &eq.a;
    let b = a.diff(X).add(&a.mul(&eq.b)).div(a);
    let c = eq.c.mul(a).neg();
    Ok((Lode2::new(b, c), PsiMap { a: a.clone() }))
}

/// LODE to RE through `phi = psi_x/psi`, giving `phi_x = -phi^2 + b phi + c`.
pub fn lode_to_re(l: &Lode2) -> (RiccatiEq, PsiMap) {
    lode_to_re_with(l, &Expr::int(-1)).expect("constant map is nondegenerate")
}

/// LODE to RE through `phi = -psi_x/(a psi)` for a chosen `a`; inverts
/// [`re_to_lode`] exactly.
pub fn lode_to_re_with(l: &Lode2, a: &Expr) -> Result<(RiccatiEq, PsiMap)> {
    if sampled_max(a, Interval::default()) == 0.0 {
        return Err(Error::Degenerate("map coefficient vanishes identically".into()));
    }
    let b = l.b.sub(&a.diff(X).div(a));
    let c = l.c.div(a).neg();
    Ok((RiccatiEq::new(a.clone(), b, c), PsiMap { a: a.clone() }))
}

/// Result of either conversion direction.
#[derive(Debug, Clone)]
pub enum Converted {
    Lode(Lode2, PsiMap),
    Riccati(RiccatiEq, PsiMap),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    ReToLode,
    LodeToRe,
}

pub fn convert_re_lode(direction: Direction, eq: &RiccatiEq) -> Result<Converted> {
    match direction {
        Direction::ReToLode => re_to_lode(eq).map(|(l, m)| Converted::Lode(l, m)),
        Direction::LodeToRe => {
            // read (b, c) of the RE slot as the LODE pair
            let l = Lode2::new(eq.b.clone(), eq.c.clone());
            let (r, m) = lode_to_re(&l);
            Ok(Converted::Riccati(r, m))
        }
    }
}

/// Gauge transformation to the form without first derivative.
#[derive(Debug, Clone)]
pub struct CanonicalForm {
    /// `psi_hat_xx + c_hat psi_hat = 0`
    pub c_hat: Expr,
    /// `psi = gauge * psi_hat`
    pub gauge: Expr,
}

/// Canonical form of `psi_xx = b psi_x + c psi`. Writing the equation as
/// `psi_xx + B psi_x + C psi = 0` (`B = -b`, `C = -c`),
/// `c_hat = C - B^2/4 - B_x/2` and the gauge is `exp(-1/2 int B)`.
pub fn canonical_form(l: &Lode2, anchor: f64) -> CanonicalForm {
    let big_b = l.b.neg();
    let big_c = l.c.neg();
    let c_hat = Expr::sum(vec![
        big_c,
        big_b.powi(2).mul(&Expr::ratio(-1, 4)),
        big_b.diff(X).mul(&Expr::ratio(-1, 2)),
    ]);
    let half_b = l.b.mul(&Expr::ratio(1, 2));
    let int = antiderivative(&half_b, X).unwrap_or_else(|| Expr::integral(half_b.clone(), X, anchor));
    CanonicalForm { c_hat, gauge: int.exp() }
}

/// `psi2 = psi1 int dx/psi1^2` for an equation without first-derivative
/// term; the Wronskian `<psi1, psi2>` is 1.
pub fn second_solution(l: &Lode2, psi1: &Expr, iv: Interval) -> Result<Expr> {
    if sampled_max(&l.b, iv) != 0.0 {
        return Err(Error::InvalidInput("second_solution expects an equation in canonical form".into()));
    }
    check_no_zero(psi1, iv)?;
    let integrand = psi1.powi(-2);
    let anchor = 0.5 * (iv.a + iv.b);
    let int = antiderivative(&integrand, X).unwrap_or_else(|| Expr::integral(integrand.clone(), X, anchor));
    Ok(psi1.mul(&int))
}

pub(crate) fn check_no_zero(f: &Expr, iv: Interval) -> Result<()> {
    let n = 400;
    let h = (iv.b - iv.a) / n as f64;
    let mut prev: Option<f64> = None;
    for i in 0..=n {
        let x = iv.a + h * i as f64;
        let v = f.eval(&[(X, x)]).map_err(|_| Error::ZeroCrossing { x })?;
        if v == 0.0 || prev.is_some_and(|p| p * v < 0.0) {
            return Err(Error::ZeroCrossing { x });
        }
        prev = Some(v);
    }
    Ok(())
}

/// Right division of `d^2 - b d - c` by `d - a`, `a = psi1_x/psi1`:
/// quotient `d + (a - b)`, remainder `a_x + a(a - b) - c = L(psi1)/psi1`.
#[derive(Debug, Clone)]
pub struct Factorization {
    pub a: Expr,
    pub quotient_shift: Expr,
    pub remainder: Expr,
    pub remainder_max: f64,
}

pub fn lode_factor(l: &Lode2, psi1: &Expr, iv: Interval) -> Factorization {
    let a = psi1.diff(X).div(psi1);
    let quotient_shift = a.sub(&l.b);
    let remainder = Expr::sum(vec![a.diff(X), a.mul(&quotient_shift), l.c.neg()]).expand();
    let remainder_max = sampled_max(&remainder, iv);
    Factorization { a, quotient_shift, remainder, remainder_max }
}

/// Kernel of `d^n + a_1 d^(n-1) + ... + a_n` with constant coefficients.
#[derive(Debug, Clone)]
pub struct Kernel {
    pub basis: Vec<Expr>,
    pub roots: Roots,
}

fn snap(v: f64) -> Expr {
    let r = v.round();
    if (v - r).abs() <= 1e-10 * v.abs().max(1.0) {
        Expr::real(r)
    } else {
        Expr::real(v)
    }
}

pub fn lodo_const_kernel(coeffs: &[f64]) -> Result<Kernel> {
    if coeffs.is_empty() {
        return Err(Error::InvalidInput("operator order must be at least 1".into()));
    }
    let n = coeffs.len();
    // ascending: a_n + a_{n-1} l + ... + l^n
    let mut asc: Vec<f64> = coeffs.iter().rev().cloned().collect();
    asc.push(1.0);
    let roots = polyroots(&DensePoly::new(asc))?;
    let x = Expr::var(X);
    let mut basis = Vec::with_capacity(n);
    for g in &roots.groups {
        let z: Complex64 = g.value;
        if z.im < 0.0 {
            continue;
        }
        let growth = snap(z.re).mul(&x).exp();
        for s in 0..g.multiplicity {
            let poly = x.powi(s as i32);
            if g.is_real() {
                basis.push(poly.mul(&growth));
            } else {
                let arg = snap(z.im).mul(&x);
                basis.push(poly.mul(&growth).mul(&arg.cos()));
                basis.push(poly.mul(&growth).mul(&arg.sin()));
            }
        }
    }
    Ok(Kernel { basis, roots })
}

/// Apply `d^n + a_1 d^(n-1) + ... + a_n` symbolically.
pub fn apply_const_operator(coeffs: &[f64], f: &Expr) -> Expr {
    let n = coeffs.len();
    let mut terms = vec![f.diff_n(X, n)];
    for (i, a) in coeffs.iter().enumerate() {
        terms.push(Expr::real(*a).mul(&f.diff_n(X, n - 1 - i)));
    }
    Expr::sum(terms)
}

/// `(x, W(x))` along a numeric pair of solutions started from
/// `[psi1, psi1_x, psi2, psi2_x]` at `x0`.
pub fn wronskian_trajectory(l: &Lode2, x0: f64, init: [f64; 4], x_end: f64, tol: f64) -> Result<Vec<(f64, f64)>> {
    let (b, c) = (l.b.clone(), l.c.clone());
    let p = IvpProblem::new(x0, init.to_vec(), move |x: f64, y: &[f64], dy: &mut [f64]| {
        let bv = b.eval(&[(X, x)]).unwrap_or(f64::NAN);
        let cv = c.eval(&[(X, x)]).unwrap_or(f64::NAN);
        dy[0] = y[1];
        dy[1] = bv * y[1] + cv * y[0];
        dy[2] = y[3];
        dy[3] = bv * y[3] + cv * y[2];
    });
    let traj = integrate_ivp(&p, x_end, tol)?;
    Ok(traj.xs.iter().zip(&traj.ys).map(|(x, y)| (*x, y[0] * y[3] - y[2] * y[1])).collect())
}

/// Largest `|W(x) - W(x0)| / |W(x0)|`.
pub fn wronskian_drift(l: &Lode2, x0: f64, init: [f64; 4], x_end: f64, tol: f64) -> Result<f64> {
    let w = wronskian_trajectory(l, x0, init, x_end, tol)?;
    let w0 = w[0].1;
    if w0 == 0.0 {
        return Err(Error::Degenerate("initial data are linearly dependent".into()));
    }
    Ok(w.iter().map(|(_, v)| (v - w0).abs() / w0.abs()).fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> Expr {
        Expr::var(X)
    }

    #[test]
    fn lode_to_re_picks_up_minus_sign() {
        let l = Lode2::parse("x", "x^2 - 1").unwrap();
        let (eq, map) = lode_to_re(&l);
        assert_eq!(eq.a, Expr::int(-1));
        assert_eq!(eq.b, l.b);
        assert_eq!(eq.c, l.c);
        // psi = exp(x) solves psi'' = psi
        let psi = x().exp();
        let l1 = Lode2::parse("0", "1").unwrap();
        let (eq1, map1) = lode_to_re(&l1);
        assert!(eq1.is_solution(&map1.phi(&psi), Interval::default()));
        assert_eq!(map.to_string(), "phi = psi_x/psi");
    }

    #[test]
    fn re_to_lode_for_pure_potential() {
        let eq = RiccatiEq::parse("1", "0", "x^2 + 1").unwrap();
        let (l, map) = re_to_lode(&eq).unwrap();
        assert!(l.b.is_zero());
        assert_eq!(l.c, parse("-(x^2 + 1)").unwrap());
        // cos solves psi'' = -psi, i.e. the LODE of phi_x = phi^2 + 1; phi = tan
        let (l1, m1) = re_to_lode(&RiccatiEq::parse("1", "0", "1").unwrap()).unwrap();
        let psi = x().cos();
        assert!(l1.residual_max(&psi, Interval::default()) < 1e-14);
        let eq1 = RiccatiEq::parse("1", "0", "1").unwrap();
        assert!(eq1.is_solution(&m1.phi(&psi), Interval::new(-1.4, 1.4)));
        let _ = map;
    }

    #[test]
    fn round_trip_is_exact() {
        let eq = RiccatiEq::parse("1", "0", "x^2 + 1").unwrap();
        let (l, map) = re_to_lode(&eq).unwrap();
        let (back, _) = lode_to_re_with(&l, &map.a).unwrap();
        assert_eq!(back, eq);
        let eq2 = RiccatiEq::parse("exp(x)", "sin(x)", "x").unwrap();
        let (l2, m2) = re_to_lode(&eq2).unwrap();
        let (back2, _) = lode_to_re_with(&l2, &m2.a).unwrap();
        assert!(back2.distance(&eq2, Interval::default()) < 1e-12);
    }

    #[test]
    fn linear_riccati_has_no_lode() {
        let eq = RiccatiEq::parse("0", "1", "1").unwrap();
        assert!(matches!(re_to_lode(&eq), Err(Error::Degenerate(_))));
    }

    #[test]
    fn canonical_forms() {
        let c = canonical_form(&Lode2::parse("0", "x").unwrap(), 0.0);
        assert_eq!(c.c_hat, parse("-x").unwrap());
        assert!(c.gauge.is_one());
        // omega'' - 2x omega' + 2 lambda omega = 0 with lambda = 3
        let h = canonical_form(&Lode2::from_zero_form(parse("-2*x").unwrap(), Expr::int(6)), 0.0);
        assert_eq!(h.c_hat, parse("7 - x^2").unwrap());
        assert_eq!(h.gauge, parse("exp(x^2/2)").unwrap());
        let k = canonical_form(&Lode2::from_zero_form(Expr::int(2), Expr::zero()), 0.0);
        assert_eq!(k.c_hat, Expr::int(-1));
    }

    #[test]
    fn canonical_form_maps_solutions() {
        // psi'' = 2 psi' - psi has psi = x e^x; psi_hat = psi/gauge solves the canonical form
        let l = Lode2::parse("2", "-1").unwrap();
        let cf = canonical_form(&l, 0.0);
        let psi_hat = x().mul(&x().exp()).div(&cf.gauge);
        let canon = Lode2::new(Expr::zero(), cf.c_hat.neg());
        assert!(canon.residual_max(&psi_hat, Interval::default()) < 1e-12);
    }

    #[test]
    fn second_solutions() {
        let free = Lode2::parse("0", "0").unwrap();
        assert_eq!(second_solution(&free, &Expr::one(), Interval::default()).unwrap(), x());
        let l = Lode2::parse("0", "1").unwrap();
        let psi2 = second_solution(&l, &x().exp(), Interval::default()).unwrap();
        assert_eq!(psi2, parse("-1/2*exp(-x)").unwrap());
        let w = Lode2::wronskian(&x().exp(), &psi2);
        assert!(sampled_max(&w.sub(&Expr::one()), Interval::default()) < 1e-12);
        let osc = Lode2::parse("0", "-1").unwrap();
        let iv = Interval::new(-1.5, 1.5);
        let s = second_solution(&osc, &x().cos(), iv).unwrap();
        assert_eq!(s, x().sin());
    }

    #[test]
    fn second_solution_refuses_zero_crossing() {
        let osc = Lode2::parse("0", "-1").unwrap();
        assert!(matches!(second_solution(&osc, &x().cos(), Interval::default()), Err(Error::ZeroCrossing { .. })));
    }

    #[test]
    fn factor_remainders() {
        let l = Lode2::parse("0", "1").unwrap();
        let f = lode_factor(&l, &x().exp(), Interval::default());
        assert!(f.a.is_one());
        assert!(f.remainder.is_zero());
        let g = lode_factor(&l, &x().mul(&Expr::int(2)).exp(), Interval::default());
        assert_eq!(g.remainder, Expr::int(3));
        let herm = Lode2::from_zero_form(parse("-2*x").unwrap(), Expr::int(2));
        let h = lode_factor(&herm, &parse("2*x").unwrap(), Interval::default());
        assert!(h.remainder_max <= 1e-10);
    }

    #[test]
    fn constant_coefficient_kernels() {
        let k = lodo_const_kernel(&[-3.0, 2.0]).unwrap();
        assert_eq!(k.basis, vec![x().exp(), x().mul(&Expr::int(2)).exp()]);
        let d = lodo_const_kernel(&[-2.0, 1.0]).unwrap();
        assert_eq!(d.basis, vec![x().exp(), x().mul(&x().exp())]);
        let p = lodo_const_kernel(&[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(p.basis, vec![Expr::one(), x(), x().powi(2)]);
    }

    #[test]
    fn complex_roots_give_real_basis() {
        // psi'' + 2 psi' + 5 psi: roots -1 +- 2i
        let coeffs = [2.0, 5.0];
        let k = lodo_const_kernel(&coeffs).unwrap();
        assert_eq!(k.basis.len(), 2);
        for f in &k.basis {
            assert!(sampled_max(&apply_const_operator(&coeffs, f), Interval::new(-2.0, 2.0)) < 1e-10);
        }
    }

    #[test]
    fn wronskian_constant_without_first_derivative() {
        let l = Lode2::parse("0", "x^2 - 3 + sin(x)").unwrap();
        assert!(wronskian_drift(&l, 0.0, [1.0, 0.3, -0.2, 1.1], 3.0, 1e-12).unwrap() <= 1e-8);
        // psi'' = psi' has W = W0 e^x
        let damped = Lode2::parse("1", "0").unwrap();
        let w = wronskian_trajectory(&damped, 0.0, [1.0, 0.0, 0.0, 1.0], 1.0, 1e-12).unwrap();
        let (x, v) = *w.last().unwrap();
        assert!((v - x.exp()).abs() < 1e-8);
        assert!(wronskian_drift(&damped, 0.0, [1.0, 0.0, 0.0, 1.0], 1.0, 1e-12).unwrap() > 1.0);
    }
}
