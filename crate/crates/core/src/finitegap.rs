//! One-gap potentials from the root-variable equation
//! `gamma_x^2 = 4 (gamma - l1)(gamma - l2)(gamma - l3)`, the Dubrovin
//! system for several root variables, and Dubrovin's lemma checks.

use crate::numeric::{integrate_ivp, integrate_rk4, quadrature, DensePoly, IvpProblem, NumericError, Regularization};
use crate::{Error, Result};

const EDGE_GAP: f64 = 1e-12;

/// Band edges `l1 > l2 > l3`, start `gamma0` in `(l3, l2)` and the sign of
/// the initial slope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapSpec {
    pub lambda: [f64; 3],
    pub gamma0: f64,
    pub slope_sign: f64,
}

impl GapSpec {
    pub fn new(lambda: [f64; 3], gamma0: f64, slope_sign: f64) -> Result<Self> {
        let [l1, l2, l3] = lambda;
        if !(l1 > l2 && l2 > l3) || lambda.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("need l1 > l2 > l3, got {lambda:?}")));
        }
        if !(gamma0 > l3 && gamma0 < l2) {
            return Err(Error::InvalidInput(format!("gamma0 = {gamma0} must lie strictly inside ({l3}, {l2})")));
        }
        if slope_sign != 1.0 && slope_sign != -1.0 {
            return Err(Error::InvalidInput(format!("slope sign must be +1 or -1, got {slope_sign}")));
        }
        Ok(GapSpec { lambda, gamma0, slope_sign })
    }

    pub fn c_poly(&self) -> CPoly {
        CPoly::from_edges(&self.lambda, 1).expect("three edges give N = 1")
    }

    pub fn c(&self, g: f64) -> f64 {
        let [l1, l2, l3] = self.lambda;
        4.0 * (g - l1) * (g - l2) * (g - l3)
    }

    /// `C'(gamma) / 2`
    pub fn half_dc(&self, g: f64) -> f64 {
        let [l1, l2, l3] = self.lambda;
        2.0 * ((g - l2) * (g - l3) + (g - l1) * (g - l3) + (g - l1) * (g - l2))
    }

    pub fn lambda_sum(&self) -> f64 {
        self.lambda.iter().sum()
    }

    pub fn scaled(&self, s: f64) -> Result<GapSpec> {
        GapSpec::new(self.lambda.map(|l| l * s), self.gamma0 * s, self.slope_sign)
    }
}

/// `C(l) = 4 l^(2N+m) + ...` together with `N` and `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct CPoly {
    pub poly: DensePoly,
    pub n: usize,
    pub m: usize,
}

impl CPoly {
    pub fn new(coeffs: Vec<f64>, n: usize, m: usize) -> Result<Self> {
        let poly = DensePoly::new(coeffs);
        if poly.degree() != 2 * n + m || poly.leading() != 4.0 {
            return Err(Error::InvalidInput(format!(
                "C must have degree {} and leading coefficient 4, got degree {} and {}",
                2 * n + m,
                poly.degree(),
                poly.leading()
            )));
        }
        Ok(CPoly { poly, n, m })
    }

    /// `4 prod (l - e_i)` with `m = #edges - 2N`.
    pub fn from_edges(edges: &[f64], n: usize) -> Result<Self> {
        if edges.len() < 2 * n {
            return Err(Error::InvalidInput(format!("{} edges cannot carry N = {n}", edges.len())));
        }
        CPoly::new(DensePoly::from_roots(4.0, edges).coeffs().to_vec(), n, edges.len() - 2 * n)
    }

    pub fn eval(&self, l: f64) -> f64 {
        self.poly.eval(l)
    }
}

/// Root variables and their first two derivatives on a grid.
#[derive(Debug, Clone)]
pub struct RootTrajectory {
    pub xs: Vec<f64>,
    pub gamma: Vec<Vec<f64>>,
    pub dgamma: Vec<Vec<f64>>,
    pub ddgamma: Vec<Vec<f64>>,
}

impl RootTrajectory {
    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    /// First component at every grid point.
    pub fn first(&self) -> Vec<f64> {
        self.gamma.iter().map(|g| g[0]).collect()
    }
}

fn map_blowup(e: NumericError) -> Error {
    match e {
        NumericError::StepUnderflow { x } | NumericError::NonFinite { x } => Error::BlowUp { x },
        other => other.into(),
    }
}

/// How [`integrate_gamma`] advances between grid points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Stepper {
    /// Embedded pair with the given tolerance.
    Adaptive(f64),
    /// Classical RK4 with this many equal steps per grid interval.
    Fixed(usize),
}

/// Integrate `gamma_xx = C'(gamma)/2` from `gamma0` with slope
/// `sign sqrt(C(gamma0))` over `x0 + i step`, restarting the solver at every
/// grid point so each value carries the full solver accuracy.
pub fn integrate_gamma(spec: &GapSpec, x0: f64, steps: usize, step: f64, stepper: Stepper) -> Result<RootTrajectory> {
    if !(step > 0.0) {
        return Err(Error::InvalidInput(format!("step {step} must be positive")));
    }
    if let Stepper::Fixed(0) = stepper {
        return Err(Error::InvalidInput("need at least one RK4 step per interval".into()));
    }
    let s = *spec;
    let c0 = spec.c(spec.gamma0);
    let mut state = vec![spec.gamma0, spec.slope_sign * c0.sqrt()];
    let mut traj = RootTrajectory { xs: vec![], gamma: vec![], dgamma: vec![], ddgamma: vec![] };
    let scale = c0.abs().max(1.0);
    for i in 0..=steps {
        let x = x0 + step * i as f64;
        if i > 0 {
            let xp = x0 + step * (i - 1) as f64;
            let p = IvpProblem::new(xp, state.clone(), move |_x: f64, y: &[f64], dy: &mut [f64]| {
                dy[0] = y[1];
                dy[1] = s.half_dc(y[0]);
            });
            let t = match stepper {
                Stepper::Adaptive(tol) => integrate_ivp(&p, x, tol),
                Stepper::Fixed(n) => integrate_rk4(&p, x, n),
            };
            state = t.map_err(map_blowup)?.last_y().to_vec();
        }
        let drift = (state[1] * state[1] - spec.c(state[0])).abs();
        if drift > 1e-8 * scale {
            return Err(Error::NotASolution { residual: drift, tol: 1e-8 * scale });
        }
        traj.xs.push(x);
        traj.gamma.push(vec![state[0]]);
        traj.dgamma.push(vec![state[1]]);
        traj.ddgamma.push(vec![spec.half_dc(state[0])]);
    }
    Ok(traj)
}

/// `T = \int_{l3}^{l2} dl / sqrt((l - l1)(l - l2)(l - l3))`.
pub fn period(spec: &GapSpec, tol: f64) -> Result<f64> {
    let [l1, l2, l3] = spec.lambda;
    if l2 - l3 < EDGE_GAP {
        return Err(Error::Degenerate("degenerate gap: the period diverges".into()));
    }
    let f = move |l: f64| 1.0 / ((l - l1) * (l - l2) * (l - l3)).abs().sqrt();
    Ok(quadrature(f, l3, l2, tol, Regularization::InverseSqrtEndpoints)?)
}

/// Locations of the maxima of `gamma` (downward zeros of `gamma_x`), refined
/// by Newton steps on `gamma_x` with the exact flow.
pub fn maxima(spec: &GapSpec, traj: &RootTrajectory, tol: f64) -> Result<Vec<f64>> {
    let s = *spec;
    let mut out = Vec::new();
    for i in 0..traj.len().saturating_sub(1) {
        let (d0, d1) = (traj.dgamma[i][0], traj.dgamma[i + 1][0]);
        if !(d0 > 0.0 && d1 <= 0.0) {
            continue;
        }
        let x0 = traj.xs[i];
        let start = vec![traj.gamma[i][0], d0];
        let mut x = x0 + (traj.xs[i + 1] - x0) * d0 / (d0 - d1);
        for _ in 0..30 {
            let p = IvpProblem::new(x0, start.clone(), move |_x: f64, y: &[f64], dy: &mut [f64]| {
                dy[0] = y[1];
                dy[1] = s.half_dc(y[0]);
            });
            let y = if x == x0 { start.clone() } else { integrate_ivp(&p, x, tol)?.last_y().to_vec() };
            let dx = y[1] / spec.half_dc(y[0]);
            x -= dx;
            if dx.abs() < 1e-14 * x.abs().max(1.0) {
                break;
            }
        }
        out.push(x);
    }
    Ok(out)
}

/// `u = 2 gamma - l1 - l2 - l3`.
pub fn trace_potential(traj: &RootTrajectory, spec: &GapSpec) -> Vec<f64> {
    traj.gamma.iter().map(|g| 2.0 * g[0] - spec.lambda_sum()).collect()
}

/// `4 (l + u)(l - gamma)^2 + gamma_x^2 + 2 (l - gamma) gamma_xx` with
/// `u = 2 gamma - sum l_i`; its coefficients should not depend on `x`.
pub fn spectral_curve(spec: &GapSpec, g: f64, dg: f64, ddg: f64) -> DensePoly {
    let u = 2.0 * g - spec.lambda_sum();
    let phi = DensePoly::new(vec![-g, 1.0]);
    let a = &(&DensePoly::new(vec![u, 1.0]) * &(&phi * &phi)).scale(4.0);
    let b = &DensePoly::constant(dg * dg) + &phi.scale(2.0 * ddg);
    a + &b
}

/// Trace of the monodromy matrix of `psi_xx = (lambda + u) psi` over one
/// period, integrated together with the root variable.
pub fn floquet_trace(spec: &GapSpec, lambda: f64, t: f64, tol: f64) -> Result<f64> {
    let s = *spec;
    let sum = spec.lambda_sum();
    let y0 = vec![spec.gamma0, spec.slope_sign * spec.c(spec.gamma0).sqrt(), 1.0, 0.0, 0.0, 1.0];
    let p = IvpProblem::new(0.0, y0, move |_x: f64, y: &[f64], dy: &mut [f64]| {
        let u = 2.0 * y[0] - sum;
        dy[0] = y[1];
        dy[1] = s.half_dc(y[0]);
        dy[2] = y[3];
        dy[3] = (lambda + u) * y[2];
        dy[4] = y[5];
        dy[5] = (lambda + u) * y[4];
    });
    let end = integrate_ivp(&p, t, tol).map_err(map_blowup)?;
    let y = end.last_y();
    Ok(y[2] + y[5])
}

/// `|gamma_j'| = sqrt(C(gamma_j)) / prod_{k != j} |gamma_j - gamma_k|`, with
/// the caller's branch signs.
pub fn dubrovin_rhs(c: &CPoly, gamma: &[f64], signs: &[f64]) -> Result<Vec<f64>> {
    if gamma.len() != signs.len() {
        return Err(Error::InvalidInput("one sign per root variable".into()));
    }
    let mut out = Vec::with_capacity(gamma.len());
    for (j, &g) in gamma.iter().enumerate() {
        let cv = c.eval(g);
        if cv < 0.0 {
            if cv > -1e-12 * c.poly.coeffs().iter().fold(1.0f64, |m, v| m.max(v.abs())) {
                out.push(0.0);
                continue;
            }
            return Err(Error::InvalidInput(format!("C(gamma_{}) = {cv} < 0: root left its band", j + 1)));
        }
        let mut den = 1.0;
        for (k, &h) in gamma.iter().enumerate() {
            if k != j {
                if g == h {
                    return Err(Error::Degenerate(format!("gamma_{} = gamma_{}", j + 1, k + 1)));
                }
                den *= (g - h).abs();
            }
        }
        out.push(signs[j] * cv.sqrt() / den);
    }
    Ok(out)
}

/// Bands `[a_j, b_j]` of a degree `2N + 1` polynomial with real simple
/// roots: the j-th root variable moves between the `2j+2`-th and `2j+1`-th
/// largest edges.
pub fn bands(edges_desc: &[f64], n: usize) -> Result<Vec<(f64, f64)>> {
    if edges_desc.len() != 2 * n + 1 || edges_desc.windows(2).any(|w| w[0] <= w[1]) {
        return Err(Error::InvalidInput("need 2N + 1 strictly decreasing edges".into()));
    }
    Ok((0..n).map(|j| (edges_desc[2 * j + 2], edges_desc[2 * j + 1])).collect())
}

fn angle_rate(edges: &[f64], bands: &[(f64, f64)], gamma: &[f64], j: usize) -> f64 {
    let (a, b) = bands[j];
    let g = gamma[j];
    let mut num = 1.0;
    for &e in edges {
        if e != a && e != b {
            num *= (g - e).abs();
        }
    }
    let mut den = 1.0;
    for (k, &h) in gamma.iter().enumerate() {
        if k != j {
            den *= (g - h).abs();
        }
    }
    num.sqrt() / den
}

/// Integrate the Dubrovin system for `C = 4 prod (l - e_i)` (`m = 1`) through
/// `gamma_j = a_j + (b_j - a_j) sin^2 theta_j`, which passes the band ends
/// without branch bookkeeping.
pub fn integrate_dubrovin(
    edges_desc: &[f64],
    gamma0: &[f64],
    signs: &[f64],
    steps: usize,
    step: f64,
    tol: f64,
) -> Result<RootTrajectory> {
    let n = gamma0.len();
    let bands = bands(edges_desc, n)?;
    let mut theta = Vec::with_capacity(n);
    for (j, &g) in gamma0.iter().enumerate() {
        let (a, b) = bands[j];
        if !(g > a && g < b) {
            return Err(Error::InvalidInput(format!("gamma_{} = {g} outside its band ({a}, {b})", j + 1)));
        }
        let t = ((g - a) / (b - a)).sqrt().asin();
        theta.push(if signs[j] < 0.0 { -t } else { t });
    }
    let to_gamma = {
        let bands = bands.clone();
        move |th: &[f64]| -> Vec<f64> {
            th.iter().zip(&bands).map(|(t, (a, b))| a + (b - a) * t.sin().powi(2)).collect()
        }
    };
    let edges = edges_desc.to_vec();
    let (bands_rhs, edges_rhs, tg) = (bands.clone(), edges.clone(), to_gamma.clone());
    let rhs = move |_x: f64, th: &[f64], dth: &mut [f64]| {
        let g = tg(th);
        for j in 0..g.len() {
            dth[j] = angle_rate(&edges_rhs, &bands_rhs, &g, j);
        }
    };
    let mut traj = RootTrajectory { xs: vec![], gamma: vec![], dgamma: vec![], ddgamma: vec![] };
    let mut state = theta;
    for i in 0..=steps {
        let x = step * i as f64;
        if i > 0 {
            let p = IvpProblem::new(x - step, state.clone(), rhs.clone());
            state = integrate_ivp(&p, x, tol).map_err(map_blowup)?.last_y().to_vec();
        }
        let g = to_gamma(&state);
        let rates: Vec<f64> = (0..n).map(|j| angle_rate(&edges, &bands, &g, j)).collect();
        let dg: Vec<f64> = (0..n).map(|j| (bands[j].1 - bands[j].0) * (2.0 * state[j]).sin() * rates[j]).collect();
        // second derivative by the chain rule; the rate's gamma-gradient by central differences
        let mut ddg = vec![0.0; n];
        for j in 0..n {
            let w = bands[j].1 - bands[j].0;
            let mut drate = 0.0;
            for k in 0..n {
                let h = 1e-6 * g[k].abs().max(1.0);
                let mut gp = g.clone();
                let mut gm = g.clone();
                gp[k] += h;
                gm[k] -= h;
                drate += (angle_rate(&edges, &bands, &gp, j) - angle_rate(&edges, &bands, &gm, j)) / (2.0 * h) * dg[k];
            }
            let th = state[j];
            ddg[j] = w * (2.0 * (2.0 * th).cos() * rates[j] * rates[j] + (2.0 * th).sin() * drate);
        }
        traj.xs.push(x);
        traj.gamma.push(g);
        traj.dgamma.push(dg);
        traj.ddgamma.push(ddg);
    }
    Ok(traj)
}

/// Outcome of Dubrovin's lemma on a trajectory.
#[derive(Debug, Clone)]
pub struct DubrovinReport {
    /// `max |C(gamma_j) - phi_x(gamma_j)^2|`
    pub item1: f64,
    /// Largest remainder coefficient of `(2 phi phi_xx + C - phi_x^2) / phi^2`.
    pub remainder: f64,
    pub quotient_degree: usize,
    /// Leading coefficients of the quotients, min and max.
    pub leading: (f64, f64),
    /// Quotients at each grid point, ascending coefficients.
    pub quotients: Vec<Vec<f64>>,
}

impl DubrovinReport {
    pub fn passes(&self, tol: f64, m: usize) -> bool {
        self.item1 <= tol
            && self.remainder <= tol
            && self.quotient_degree == m
            && (self.leading.0 - 4.0).abs() <= tol
            && (self.leading.1 - 4.0).abs() <= tol
    }
}

fn phi_and_derivatives(g: &[f64], dg: &[f64], ddg: &[f64]) -> (DensePoly, DensePoly, DensePoly) {
    let n = g.len();
    let lin: Vec<DensePoly> = g.iter().map(|&v| DensePoly::linear_factor(v)).collect();
    let prod_except = |skip: &[usize]| {
        (0..n).filter(|k| !skip.contains(k)).fold(DensePoly::constant(1.0), |acc, k| &acc * &lin[k])
    };
    let phi = prod_except(&[]);
    let mut dphi = DensePoly::zero();
    let mut ddphi = DensePoly::zero();
    for j in 0..n {
        dphi = &dphi + &prod_except(&[j]).scale(-dg[j]);
        ddphi = &ddphi + &prod_except(&[j]).scale(-ddg[j]);
        for l in 0..n {
            if l != j {
                ddphi = &ddphi + &prod_except(&[j, l]).scale(dg[j] * dg[l]);
            }
        }
    }
    (phi, dphi, ddphi)
}

pub fn dubrovin_checks(traj: &RootTrajectory, c: &CPoly) -> Result<DubrovinReport> {
    let mut rep = DubrovinReport {
        item1: 0.0,
        remainder: 0.0,
        quotient_degree: 0,
        leading: (f64::INFINITY, f64::NEG_INFINITY),
        quotients: Vec::with_capacity(traj.len()),
    };
    for i in 0..traj.len() {
        let (g, dg, ddg) = (&traj.gamma[i], &traj.dgamma[i], &traj.ddgamma[i]);
        let (phi, dphi, ddphi) = phi_and_derivatives(g, dg, ddg);
        for &gj in g {
            rep.item1 = rep.item1.max((c.eval(gj) - dphi.eval(gj).powi(2)).abs());
        }
        let num = &(&(&phi * &ddphi).scale(2.0) + &c.poly) - &(&dphi * &dphi);
        let (q, r) = num.div_rem(&(&phi * &phi))?;
        rep.remainder = r.coeffs().iter().fold(rep.remainder, |m, v| m.max(v.abs()));
        rep.quotient_degree = rep.quotient_degree.max(q.degree());
        rep.leading = (rep.leading.0.min(q.leading()), rep.leading.1.max(q.leading()));
        rep.quotients.push(q.coeffs().to_vec());
    }
    Ok(rep)
}
