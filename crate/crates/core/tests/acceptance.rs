//! Acceptance suite: one PASS/FAIL line per check, exit status nonzero on
//! any unexpected failure.

use std::process::ExitCode;

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use riccati_core::finitegap::{
    dubrovin_checks, integrate_gamma, maxima, period, spectral_curve, trace_potential, GapSpec, Stepper,
};
use riccati_core::numeric::polyroots;
use riccati_core::riccati::{
    cross_ratio_drift, hermite_ladder, hermite_polynomial, hermite_residual, hermite_rodrigues, kovalevskii_check,
    pole_series, MobiusMap, RiccatiEq, X,
};
use riccati_core::schwarzian::schwarz;
use riccati_core::soliton::{
    closed_form_a1, closed_form_u, convergence_ratio, kdv_field, kdv_mass, kp_field, pde_residual_exact,
    potential, richardson_ratio, sample_box, schrodinger_residual, solve_coefficients, wronskian_numeric,
    wronskian_poly, eval_poly, Flow, Pde, SolitonSpec,
};
use riccati_core::symbolic::{
    max_abs_on, modschwarz_series, parse, riccati_series, sample_points, zeta_chain, DiffPolynomial, Expr,
    ZetaNormalization,
};

/// Checks that cannot hold as stated; reported as FAIL without failing the run.
/// The KP phases `k x + k^2 y + k^3 t` do not give a KP solution, and the
/// sign of `a_1` at infinity is fixed by `u = 2 a_1'` with `u < 0`.
const UNATTAINABLE: &[&str] = &["10a", "2c"];

struct Line {
    id: &'static str,
    name: String,
    value: f64,
    tol: f64,
    pass: bool,
}

#[derive(Default)]
struct Suite {
    lines: Vec<Line>,
}

impl Suite {
    fn le(&mut self, id: &'static str, name: &str, value: f64, tol: f64) {
        let pass = value.is_finite() && value <= tol;
        self.push(id, name, value, tol, pass);
    }

    fn holds(&mut self, id: &'static str, name: &str, pass: bool) {
        self.push(id, name, if pass { 0.0 } else { 1.0 }, 0.0, pass);
    }

    fn push(&mut self, id: &'static str, name: &str, value: f64, tol: f64, pass: bool) {
        let tag = if pass { "PASS" } else { "FAIL" };
        println!("{tag} [{id:>3}] {name}: {value:.3e} (tol {tol:.1e})");
        self.lines.push(Line { id, name: name.to_string(), value, tol, pass });
    }

    fn error(&mut self, id: &'static str, name: &str, e: impl std::fmt::Display) {
        println!("FAIL [{id:>3}] {name}: error {e}");
        self.lines.push(Line { id, name: name.to_string(), value: f64::NAN, tol: 0.0, pass: false });
    }
}

macro_rules! attempt {
    ($s:expr, $id:expr, $name:expr, $e:expr) => {
        match $e {
            Ok(v) => v,
            Err(err) => {
                $s.error($id, $name, err);
                return;
            }
        }
    };
}

fn grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

fn soliton_one(s: &mut Suite) {
    let spec = attempt!(s, "1", "one soliton", SolitonSpec::new(vec![1.0], vec![0.0]));
    let xs = grid(-10.0, 10.0, 2001);
    let p = attempt!(s, "1", "one soliton", potential(&spec, &xs));
    let u = attempt!(s, "1", "one soliton", closed_form_u(&spec, Flow::Static));
    let mut diff: f64 = 0.0;
    for (x, v) in xs.iter().zip(&p.u) {
        let want = attempt!(s, "1", "one soliton", u.eval_at(X, *x));
        diff = diff.max((v - want).abs());
    }
    s.le("1a", "one soliton: pipeline vs -2 sech^2 x", diff, 1e-10);
    let u0 = p.u[1000];
    s.le("1b", "one soliton: |u(0) + 2|", (u0 + 2.0).abs(), 1e-12);
}

fn soliton_two(s: &mut Suite) {
    let spec = attempt!(s, "2", "two soliton", SolitonSpec::new(vec![2.0, 1.0], vec![0.0, 0.0]));
    let xs = grid(-10.0, 10.0, 2001);
    let p = attempt!(s, "2", "two soliton", potential(&spec, &xs));
    let u = attempt!(s, "2", "two soliton", closed_form_u(&spec, Flow::Static));
    let a1 = attempt!(s, "2", "two soliton", closed_form_a1(&spec));
    let mut diff: f64 = 0.0;
    for ((x, v), w) in xs.iter().zip(&p.u).zip(&p.a1) {
        let want_u = attempt!(s, "2", "two soliton", u.eval_at(X, *x));
        let want_a = attempt!(s, "2", "two soliton", a1.eval_at(X, *x));
        diff = diff.max((v - want_u).abs()).max((w - want_a).abs());
    }
    s.le("2a", "two soliton: pipeline vs closed form (u, a_1)", diff, 1e-10);
    let plus = attempt!(s, "2", "two soliton", solve_coefficients(&spec, 30.0)).a[0];
    let minus = attempt!(s, "2", "two soliton", solve_coefficients(&spec, -30.0)).a[0];
    s.le("2b", "two soliton: a_1(+-30) = -+3", (plus + 3.0).abs().max((minus - 3.0).abs()), 1e-8);
    s.le("2c", "two soliton: a_1(+-30) = +-3 as stated", (plus - 3.0).abs().max((minus + 3.0).abs()), 1e-8);
}

fn transparency(s: &mut Suite) {
    let specs = [vec![1.0], vec![2.0, 1.0], vec![2.5, 1.5, 1.0]];
    let mut worst: f64 = 0.0;
    for k in specs {
        let spec = attempt!(s, "3", "transparency", SolitonSpec::from_k(k));
        for kk in [0.5, 1.7, 3.0] {
            for x in grid(-6.0, 6.0, 49) {
                worst = worst.max(attempt!(s, "3", "transparency", schrodinger_residual(&spec, kk, x)));
            }
        }
    }
    s.le("3", "psi'' = (k^2 + u) psi, N = 1..3, relative residual", worst, 1e-8);
}

fn wronskian(s: &mut Suite) {
    let spec = attempt!(s, "4", "wronskian", SolitonSpec::new(vec![2.0, 1.0], vec![0.3, -0.2]));
    let poly = wronskian_poly(&spec);
    let (mut drift, mut err): (f64, f64) = (0.0, 0.0);
    for k in [0.3, 0.7, 1.4, 2.6, 3.5] {
        let want = -2.0 * k * spec.k.iter().map(|kj| k * k - kj * kj).product::<f64>();
        let w0 = attempt!(s, "4", "wronskian", wronskian_numeric(&spec, k, 0.0));
        for x in grid(-5.0, 5.0, 21) {
            let w = attempt!(s, "4", "wronskian", wronskian_numeric(&spec, k, x));
            drift = drift.max((w - w0).abs() / w0.abs());
        }
        err = err.max((w0 - want).abs() / want.abs());
        err = err.max((eval_poly(&poly, k) - want).abs() / want.abs());
    }
    s.le("4a", "Wronskian x-drift", drift, 1e-8);
    s.le("4b", "Wronskian vs -2k prod(k^2 - k_j^2)", err, 1e-8);
}

fn series(s: &mut Suite) {
    let half = BigRational::new(BigInt::from(1), BigInt::from(2));
    let f = attempt!(s, "5", "series", riccati_series(2, 1));
    s.holds("5a", "f_0 = u_1/2 exactly", f.f_coeff(0) == DiffPolynomial::symbol(1, 0).scale(&half));
    let h = attempt!(s, "5", "series", modschwarz_series(1, 2));
    s.holds("5b", "h_1 = u/2 exactly", h.coeff(-1) == DiffPolynomial::symbol(1, 0).scale(&half));
    let (k1, x0) = (1.3, 0.4);
    let u = attempt!(s, "5", "series", parse(&format!("-2*{}/cosh({k1}*(x - {x0}))^2", k1 * k1)));
    let z = attempt!(s, "5", "series", zeta_chain(&u, X, 1, ZetaNormalization::default(), false));
    let closed = attempt!(s, "5", "series", parse(&format!("-{k1}*tanh({k1}*(x - {x0}))")));
    let id = z[0].powi(2).sub(&z[0].diff(X)).sub(&Expr::real(k1 * k1));
    let xs = sample_points(-6.0, 6.0, 64);
    let r = max_abs_on(&id, &Expr::zero(), X, &xs, &[]).max_abs;
    let gap = max_abs_on(&z[0].sub(&closed), &Expr::zero(), X, &xs, &[]).max_abs;
    s.le("5c", "zeta_1 = -k tanh(k(x - x0)), zeta^2 - zeta_x = k^2", r.max(gap), 1e-12);
}

fn schwarzian(s: &mut Suite) {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let phi = attempt!(s, "6", "schwarzian", parse("exp(x/2) + x/3"));
    let base = attempt!(s, "6", "schwarzian", schwarz(&phi));
    let xs = sample_points(-2.0, 2.0, 32);
    let mut worst: f64 = 0.0;
    let mut maps = 0;
    while maps < 20 {
        let c: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-3.0..3.0));
        if (c[0] * c[3] - c[1] * c[2]).abs() < 0.5 {
            continue;
        }
        let m = MobiusMap::constant(c[0], c[1], c[2], c[3]);
        let moved = attempt!(s, "6", "schwarzian", schwarz(&m.apply(&phi)));
        worst = worst.max(max_abs_on(&moved.sub(&base), &Expr::zero(), X, &xs, &[]).max_abs);
        maps += 1;
    }
    s.le("6", "|S(m o phi) - S(phi)|, 20 maps x 32 points", worst, 1e-9);
}

fn hermite(s: &mut Suite) {
    let exact = (0..=10).all(|n| hermite_polynomial(n).coeffs == hermite_rodrigues(n));
    s.holds("7a", "recurrence = Rodrigues, n <= 10", exact);
    let xs = sample_points(-3.0, 3.0, 100);
    // near a zero of w the terms of the residual are large; measure against them
    let mut worst: f64 = 0.0;
    for n in 0..=6 {
        let h = hermite_polynomial(n);
        let r = hermite_residual(&h.witness, h.alpha);
        for &x in &xs {
            let rv = attempt!(s, "7", "hermite", r.eval_at(X, x));
            let y = attempt!(s, "7", "hermite", h.witness.eval_at(X, x));
            worst = worst.max(rv.abs() / (y * y).max(x * x).max(1.0));
        }
    }
    s.le("7b", "y = -x + w'/w solves y' + y^2 = x^2 - 2n - 1, n <= 6, relative", worst, 1e-10);
    let (y, a) = attempt!(s, "7", "hermite", hermite_ladder(&Expr::var(X), 1.0));
    let want = attempt!(s, "7", "hermite", parse("x + 1/x"));
    s.holds("7c", "ladder from (1, x) gives x + 1/x", y == want && a == 3.0);
}

fn pole(s: &mut Suite) {
    let p = attempt!(s, "8", "pole series", pole_series(3.0, 0.0, 5));
    let want: Vec<BigRational> =
        [0, 1, 0, 0, 0, 0].iter().map(|&v| BigRational::from_integer(BigInt::from(v))).collect();
    s.holds("8a", "alpha = 3: a = (0,1,0,0,0,0)", p.coeffs == want);
    // alpha = 1 has odd coefficients only; depth 6 leaves a t^7 error
    let q = attempt!(s, "8", "pole series", pole_series(1.0, 0.0, 6));
    let errs = attempt!(s, "8", "pole series", q.ivp_errors(0.01, &[0.4, 0.2], 1e-13));
    let order = (errs[0].1 / errs[1].1).log2();
    s.le("8b", "truncation order of depth 6 series vs IVP (expect 7)", (order - 7.0).abs(), 0.5);
}

fn finite_gap(s: &mut Suite) {
    let spec = attempt!(s, "9", "finite gap", GapSpec::new([2.0, 1.0, 0.0], 0.5, 1.0));
    let t = attempt!(s, "9", "finite gap", period(&spec, 1e-13));
    let m = 400;
    let traj = attempt!(s, "9", "finite gap", integrate_gamma(&spec, 0.0, 2 * m, t / m as f64, Stepper::Adaptive(1e-12)));
    let peaks = attempt!(s, "9", "finite gap", maxima(&spec, &traj, 1e-12));
    let measured = if peaks.len() >= 2 { peaks[1] - peaks[0] } else { f64::NAN };
    s.le("9a", "quadrature vs trajectory period", (measured - t).abs() / t, 1e-6);
    let u = trace_potential(&traj, &spec);
    let per = (0..=m).map(|i| (u[i + m] - u[i]).abs()).fold(0.0, f64::max);
    s.le("9b", "|u(x + T) - u(x)|", per, 1e-6);
    let c0 = spec.c_poly();
    let mut drift: f64 = 0.0;
    for i in 0..traj.len() {
        let cv = spectral_curve(&spec, traj.gamma[i][0], traj.dgamma[i][0], traj.ddgamma[i][0]);
        for (a, b) in cv.coeffs().iter().zip(c0.poly.coeffs()) {
            drift = drift.max((a - b).abs());
        }
    }
    s.le("9c", "spectral curve coefficient drift", drift, 1e-6);
    let cv = spectral_curve(&spec, traj.gamma[37][0], traj.dgamma[37][0], traj.ddgamma[37][0]);
    let mut roots = attempt!(s, "9", "finite gap", polyroots(&cv)).real_values();
    roots.sort_by(|a, b| b.total_cmp(a));
    let root_err = if roots.len() == 3 {
        roots.iter().zip([2.0, 1.0, 0.0]).map(|(r, w)| (r - w).abs()).fold(0.0, f64::max)
    } else {
        f64::NAN
    };
    s.le("9d", "recovered roots {2, 1, 0}", root_err, 1e-6);
    let rep = attempt!(s, "9", "finite gap", dubrovin_checks(&traj, &c0));
    s.le("9e", "Dubrovin item (1): C(gamma) - gamma_x^2", rep.item1, 1e-6);
}

fn kp(s: &mut Suite) {
    let spec = attempt!(s, "10", "KP", SolitonSpec::new(vec![2.0, 1.0], vec![0.0, 0.0]));
    let u = attempt!(s, "10", "KP", closed_form_u(&spec, Flow::Kp));
    let rep = attempt!(s, "10", "KP", pde_residual_exact(&u, Pde::Kp, &sample_box(3.0, 7, Pde::Kp)));
    s.le("10a", "KP exact residual, tau_j = k x + k^2 y + k^3 t", rep.max_abs, 1e-8);
    let field = |x: f64, y: f64, t: f64| kp_field(&spec, x, y, t);
    let r = attempt!(s, "10", "KP", richardson_ratio(&field, Pde::Kp, &sample_box(1.0, 3, Pde::Kp), 0.04));
    s.le("10b", "KP finite-difference step-halving ratio, |r - 4|", (r - 4.0).abs(), 0.5);
    let kdv = |x: f64, _y: f64, t: f64| kdv_field(&spec, x, t);
    let pts = sample_box(1.0, 3, Pde::Kdv);
    let q = attempt!(s, "10", "KP", convergence_ratio(&kdv, Pde::Kdv, &pts, &vec![0.0; pts.len()], 0.01));
    s.le("10c", "KdV two soliton finite-difference ratio, |r - 4|", (q - 4.0).abs(), 0.5);
}

fn kovalevskii(s: &mut Suite) {
    let r3 = attempt!(s, "11", "Kovalevskii", kovalevskii_check(3, &[1.0, 2.0, 3.0], -0.5, 1e-10));
    s.le("11a", "n = 3 integrals F1, F2 drift", r3.max_drift, 1e-7);
    for (id, n) in [("11b", 4usize), ("11c", 5)] {
        let y0: Vec<f64> = (1..=n).map(|k| k as f64 * 0.3).collect();
        let r = attempt!(s, id, "Kovalevskii", kovalevskii_check(n, &y0, -0.4, 1e-10));
        s.le(id, &format!("n = {n} cross-ratio drift"), r.max_drift, 1e-7);
    }
}

fn cross_ratio(s: &mut Suite) {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let x = Expr::var(X);
    let mut worst: f64 = 0.0;
    let mut runs = 0;
    for _ in 0..50 {
        if runs == 5 {
            break;
        }
        let mut coef = || {
            let (p, q): (f64, f64) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            Expr::real(p).add(&Expr::real(q).mul(&x))
        };
        let eq = RiccatiEq::new(coef(), coef(), coef());
        let phi0: [f64; 4] = std::array::from_fn(|i| -0.9 + 0.6 * i as f64 + rng.gen_range(-0.1..0.1));
        if let Ok(d) = cross_ratio_drift(&eq, 0.0, phi0, 0.5, 1e-11) {
            worst = worst.max(d);
            runs += 1;
        }
    }
    if runs < 5 {
        s.error("12", "cross-ratio", "too few random equations stayed finite");
        return;
    }
    s.le("12", "cross-ratio drift, 5 random equations", worst, 1e-8);
}

fn kdv_density(s: &mut Suite) {
    let spec = attempt!(s, "13", "KdV density", SolitonSpec::new(vec![1.2], vec![0.0]));
    let m0 = attempt!(s, "13", "KdV density", kdv_mass(&spec, 0.0, 60.0, 1e-12));
    let mut drift: f64 = 0.0;
    for t in [-1.0, -0.3, 0.5, 1.0] {
        drift = drift.max((attempt!(s, "13", "KdV density", kdv_mass(&spec, t, 60.0, 1e-12)) - m0).abs());
    }
    s.le("13", "int h_1 dx = 1/2 int u dx, t-drift", drift / 2.0, 1e-8);
}

fn main() -> ExitCode {
    let mut s = Suite::default();
    soliton_one(&mut s);
    soliton_two(&mut s);
    transparency(&mut s);
    wronskian(&mut s);
    series(&mut s);
    schwarzian(&mut s);
    hermite(&mut s);
    pole(&mut s);
    finite_gap(&mut s);
    kp(&mut s);
    kovalevskii(&mut s);
    cross_ratio(&mut s);
    kdv_density(&mut s);

    let passed = s.lines.iter().filter(|l| l.pass).count();
    let unexpected: Vec<&Line> = s.lines.iter().filter(|l| !l.pass && !UNATTAINABLE.contains(&l.id)).collect();
    let expected = s.lines.iter().filter(|l| !l.pass && UNATTAINABLE.contains(&l.id)).count();
    println!("{passed}/{} checks passed, {expected} unattainable as stated", s.lines.len());
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        for l in unexpected {
            println!("unexpected failure: [{}] {} = {:e} > {:e}", l.id, l.name, l.value, l.tol);
        }
        ExitCode::FAILURE
    }
}
