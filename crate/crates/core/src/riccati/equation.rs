use crate::numeric::{integrate_ivp, IvpProblem, Trajectory};
use crate::symbolic::{antiderivative, max_abs_on, parse, sample_points, Expr, ResidualReport};
use crate::{Error, Result};

/// Independent variable of every coefficient.
pub const X: &str = "x";
/// Free constant of a one-parameter solution family.
pub const C: &str = "C";

pub const RESIDUAL_TOL: f64 = 1e-9;
const SAMPLES: usize = 32;

/// Closed interval used for sampled residual checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub a: f64,
    pub b: f64,
}

impl Default for Interval {
    fn default() -> Self {
        Interval { a: -5.0, b: 5.0 }
    }
}

impl Interval {
    pub fn new(a: f64, b: f64) -> Self {
        Interval { a, b }
    }

    pub fn samples(&self) -> Vec<f64> {
        sample_points(self.a, self.b, SAMPLES)
    }
}

/// Largest sampled `|e|` on the interval, ignoring undefined points.
pub(crate) fn sampled_max(e: &Expr, iv: Interval) -> f64 {
    max_abs_on(e, &Expr::zero(), X, &iv.samples(), &[]).max_abs
}

/// `phi_x = a phi^2 + b phi + c`.
#[derive(Debug, Clone, PartialEq)]
pub struct RiccatiEq {
    pub a: Expr,
    pub b: Expr,
    pub c: Expr,
}

impl RiccatiEq {
    pub fn new(a: Expr, b: Expr, c: Expr) -> Self {
        RiccatiEq { a, b, c }
    }

    pub fn parse(a: &str, b: &str, c: &str) -> Result<Self> {
        Ok(RiccatiEq::new(parse(a)?, parse(b)?, parse(c)?))
    }

    pub fn is_linear(&self) -> bool {
        self.a.is_zero()
    }

    pub fn rhs(&self, phi: &Expr) -> Expr {
        Expr::sum(vec![self.a.mul(&phi.powi(2)), self.b.mul(phi), self.c.clone()])
    }

    /// `phi_x - (a phi^2 + b phi + c)`.
    pub fn residual(&self, phi: &Expr) -> Expr {
        phi.diff(X).sub(&self.rhs(phi))
    }

    /// Sampled residual relative to the size of the terms it balances.
    pub fn residual_report(&self, phi: &Expr, iv: Interval) -> ResidualReport {
        let reference = phi.diff(X).powi(2).add(&self.rhs(phi).powi(2)).sqrt();
        max_abs_on(&self.residual(phi), &reference, X, &iv.samples(), &[])
    }

    pub fn is_solution(&self, phi: &Expr, iv: Interval) -> bool {
        self.residual_report(phi, iv).passes(RESIDUAL_TOL)
    }

    pub fn coefficients_at(&self, x: f64) -> Result<(f64, f64, f64)> {
        let env = [(X, x)];
        Ok((self.a.eval(&env)?, self.b.eval(&env)?, self.c.eval(&env)?))
    }

    /// Largest sampled coefficient difference to another equation.
    pub fn distance(&self, o: &RiccatiEq, iv: Interval) -> f64 {
        [(&self.a, &o.a), (&self.b, &o.b), (&self.c, &o.c)]
            .iter()
            .map(|(p, q)| sampled_max(&p.sub(q), iv))
            .fold(0.0, f64::max)
    }
}

/// `phi -> 1/phi`.
pub fn invert(eq: &RiccatiEq) -> RiccatiEq {
    RiccatiEq::new(eq.c.neg(), eq.b.neg(), eq.a.neg())
}

/// `phi -> alpha phi`.
pub fn scale(eq: &RiccatiEq, alpha: &Expr) -> RiccatiEq {
    RiccatiEq::new(
        eq.a.div(alpha),
        eq.b.add(&alpha.diff(X).div(alpha)),
        alpha.mul(&eq.c),
    )
}

/// `phi -> phi + beta`.
pub fn shift(eq: &RiccatiEq, beta: &Expr) -> RiccatiEq {
    let a = &eq.a;
    RiccatiEq::new(
        a.clone(),
        eq.b.sub(&Expr::int(2).mul(a).mul(beta)),
        Expr::sum(vec![a.mul(&beta.powi(2)), eq.b.mul(beta).neg(), eq.c.clone(), beta.diff(X)]),
    )
}

/// `phi -> (alpha phi + beta) / (gamma phi + delta)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MobiusMap {
    pub alpha: Expr,
    pub beta: Expr,
    pub gamma: Expr,
    pub delta: Expr,
}

impl MobiusMap {
    pub fn new(alpha: Expr, beta: Expr, gamma: Expr, delta: Expr) -> Self {
        MobiusMap { alpha, beta, gamma, delta }
    }

    pub fn constant(alpha: f64, beta: f64, gamma: f64, delta: f64) -> Self {
        MobiusMap::new(Expr::real(alpha), Expr::real(beta), Expr::real(gamma), Expr::real(delta))
    }

    pub fn identity() -> Self {
        MobiusMap::constant(1.0, 0.0, 0.0, 1.0)
    }

    pub fn determinant(&self) -> Expr {
        self.alpha.mul(&self.delta).sub(&self.beta.mul(&self.gamma))
    }

    pub fn apply(&self, phi: &Expr) -> Expr {
        self.alpha.mul(phi).add(&self.beta).div(&self.gamma.mul(phi).add(&self.delta))
    }

    /// `self` after `inner`.
    pub fn compose(&self, inner: &MobiusMap) -> MobiusMap {
        let (a, b, c, d) = (&self.alpha, &self.beta, &self.gamma, &self.delta);
        let (p, q, r, s) = (&inner.alpha, &inner.beta, &inner.gamma, &inner.delta);
        MobiusMap::new(
            a.mul(p).add(&b.mul(r)),
            a.mul(q).add(&b.mul(s)),
            c.mul(p).add(&d.mul(r)),
            c.mul(q).add(&d.mul(s)),
        )
    }

    pub fn check_nondegenerate(&self, iv: Interval) -> Result<()> {
        if sampled_max(&self.determinant(), iv) <= 1e-12 {
            return Err(Error::Degenerate("Mobius determinant vanishes identically".into()));
        }
        Ok(())
    }

    fn gamma_vanishes(&self, iv: Interval) -> bool {
        self.gamma.is_zero() || sampled_max(&self.gamma, iv) == 0.0
    }
}

/// The equation satisfied by `m(phi)` when `phi` solves `eq`, built from
/// the three generator rules.
pub fn mobius_transform(eq: &RiccatiEq, m: &MobiusMap) -> Result<RiccatiEq> {
    let iv = Interval::default();
    m.check_nondegenerate(iv)?;
    if m.gamma_vanishes(iv) {
        let scaled = scale(eq, &m.alpha.div(&m.delta));
        return Ok(shift(&scaled, &m.beta.div(&m.delta)));
    }
    // (a phi + b)/(c phi + d) = a/c + ((b c - a d)/c) / (c phi + d)
    let g = &m.gamma;
    let step = shift(&scale(eq, g), &m.delta);
    let inv = invert(&step);
    let k = m.beta.mul(g).sub(&m.alpha.mul(&m.delta)).div(g);
    Ok(shift(&scale(&inv, &k), &m.alpha.div(g)))
}

/// Solutions `C -> phi(C)`; the expression contains the free symbol `C`.
#[derive(Debug, Clone)]
pub struct SolutionFamily {
    pub expr: Expr,
}

impl SolutionFamily {
    pub fn at(&self, c: f64) -> Expr {
        self.expr.subs(C, &Expr::real(c))
    }
}

fn antiderivative_or_node(e: &Expr, anchor: f64) -> Expr {
    antiderivative(e, X).unwrap_or_else(|| Expr::integral(e.clone(), X, anchor))
}

/// `phi = z (int c/z + C)`, `z = exp(int b)`, for `phi_x = b phi + c`.
pub fn variation_of_constants(b: &Expr, c: &Expr, anchor: f64) -> SolutionFamily {
    let z = antiderivative_or_node(b, anchor).exp();
    let inner = antiderivative_or_node(&c.div(&z), anchor);
    SolutionFamily { expr: z.mul(&inner.add(&Expr::var(C))) }
}

/// General solution from one particular solution. With `w = 1/(phi - phi1)`
/// the equation becomes linear, `w_x = -(b + 2 a phi1) w - a`. Integrals
/// without a closed form become quadrature nodes anchored at `anchor`.
pub fn general_from_particular(eq: &RiccatiEq, phi1: &Expr, anchor: f64) -> Result<SolutionFamily> {
    let rep = eq.residual_report(phi1, Interval::default());
    if !rep.passes(RESIDUAL_TOL) {
        return Err(Error::NotASolution { residual: rep.relative(), tol: RESIDUAL_TOL });
    }
    if eq.is_linear() {
        return Ok(variation_of_constants(&eq.b, &eq.c, anchor));
    }
    let b_tilde = eq.b.add(&Expr::int(2).mul(&eq.a).mul(phi1));
    let w = variation_of_constants(&b_tilde.neg(), &eq.a.neg(), anchor);
    Ok(SolutionFamily { expr: phi1.add(&w.expr.recip()) })
}

/// `phi = (phi1 - R phi2)/(1 - R)` with `R = A (phi3 - phi1)/(phi3 - phi2)`.
pub fn cross_ratio_solution(phi1: &Expr, phi2: &Expr, phi3: &Expr, a: f64) -> Result<Expr> {
    let iv = Interval::default();
    for (p, q) in [(phi1, phi2), (phi1, phi3), (phi2, phi3)] {
        if sampled_max(&p.sub(q), iv) == 0.0 {
            return Err(Error::Degenerate("solutions are not pairwise distinct".into()));
        }
    }
    let r = Expr::real(a).mul(&phi3.sub(phi1)).div(&phi3.sub(phi2));
    let one_minus = Expr::one().sub(&r);
    if sampled_max(&one_minus, iv) <= 1e-12 {
        return Err(Error::Degenerate("cross-ratio parameter makes R identically 1".into()));
    }
    if a == 0.0 {
        return Ok(phi1.clone());
    }
    Ok(phi1.sub(&r.mul(phi2)).div(&one_minus))
}

/// `(p - p1)(p3 - p2) / ((p - p2)(p3 - p1))`.
pub fn cross_ratio(p1: f64, p2: f64, p3: f64, p: f64) -> f64 {
    (p - p1) * (p3 - p2) / ((p - p2) * (p3 - p1))
}

/// Integrate several solutions of one equation side by side.
pub fn integrate_solutions(eq: &RiccatiEq, x0: f64, phi0: &[f64], x_end: f64, tol: f64) -> Result<Trajectory> {
    let failure = std::cell::RefCell::new(None);
    let rhs = |x: f64, y: &[f64], dy: &mut [f64]| match eq.coefficients_at(x) {
        Ok((a, b, c)) => {
            for (d, p) in dy.iter_mut().zip(y) {
                *d = a * p * p + b * p + c;
            }
        }
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            dy.iter_mut().for_each(|d| *d = f64::NAN);
        }
    };
    let traj = integrate_ivp(&IvpProblem::new(x0, phi0.to_vec(), rhs), x_end, tol);
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(traj?)
}

/// Largest deviation of the cross-ratio of four integrated solutions from
/// its initial value, over all accepted steps.
pub fn cross_ratio_drift(eq: &RiccatiEq, x0: f64, phi0: [f64; 4], x_end: f64, tol: f64) -> Result<f64> {
    let t = integrate_solutions(eq, x0, &phi0, x_end, tol)?;
    let cr = |y: &[f64]| cross_ratio(y[0], y[1], y[2], y[3]);
    let start = cr(&phi0);
    Ok(t.ys.iter().map(|y| (cr(y) - start).abs()).fold(0.0, f64::max))
}
