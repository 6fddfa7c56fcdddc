use serde_json::Value;

use riccati_core::finitegap::{
    dubrovin_checks, floquet_trace, integrate_gamma, maxima, period, spectral_curve, trace_potential, GapSpec, Stepper,
};
use riccati_core::riccati::{
    cross_ratio_drift, general_from_particular, hermite_polynomial, hermite_residual, hermite_rodrigues,
    kovalevskii_check, mobius_transform, pole_series, poly_string, wronskian_drift, Interval, Lode2, MobiusMap,
    RiccatiEq, X,
};
use riccati_core::schwarzian::schwarz;
use riccati_core::soliton::{
    closed_form_u, convergence_ratio, eval_poly, kdv_field, kdv_mass, kp_field, pde_residual_exact, potential,
    richardson_ratio, sample_box, schrodinger_residual, wronskian_numeric, wronskian_poly, Flow, Pde, SolitonSpec,
};
use riccati_core::symbolic::{max_abs_on, modschwarz_series, parse, riccati_series, sample_points, Expr, FormalSeries};
use riccati_core::Error;

use crate::args::{Grid, List};
use crate::output::{num, Check, Report, Table};

/// Exit 2: bad input. Exit 3: the computation failed.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Failure { code: 2, message: msg.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        use riccati_core::symbolic::SymbolicError as S;
        let code = match &e {
            Error::InvalidInput(_) | Error::Degenerate(_) => 2,
            Error::Symbolic(S::Parse { .. } | S::Unbound(_) | S::Unsupported(_)) => 2,
            _ => 3,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<riccati_core::symbolic::SymbolicError> for Failure {
    fn from(e: riccati_core::symbolic::SymbolicError) -> Self {
        Error::from(e).into()
    }
}

pub type Outcome = Result<(Report, Option<(String, Table)>), Failure>;

fn expr(s: &str) -> Result<Expr, Failure> {
    parse(s).map_err(|e| Failure::invalid(format!("cannot parse '{s}': {e}")))
}

fn sampled(e: &Expr, xs: &[f64]) -> f64 {
    max_abs_on(e, &Expr::zero(), X, xs, &[]).max_abs
}

fn eval_column(e: &Expr, xs: &[f64]) -> Vec<f64> {
    xs.iter().map(|&x| e.eval_at(X, x).unwrap_or(f64::NAN)).collect()
}

fn spec_from(k: &List, beta: &Option<List>) -> Result<SolitonSpec, Failure> {
    let beta = beta.as_ref().map_or_else(|| vec![0.0; k.0.len()], |b| b.0.clone());
    Ok(SolitonSpec::new(k.0.clone(), beta)?)
}

pub fn transform(a: &str, b: &str, c: &str, map: &List, phi: Option<&str>) -> Outcome {
    let eq = RiccatiEq::new(expr(a)?, expr(b)?, expr(c)?);
    let [al, be, ga, de] = map.0[..] else {
        return Err(Failure::invalid("--map needs four numbers"));
    };
    let m = MobiusMap::constant(al, be, ga, de);
    let out = mobius_transform(&eq, &m)?;
    let mut r = Report::new("transform");
    r.field("a", out.a.to_string());
    r.field("b", out.b.to_string());
    r.field("c", out.c.to_string());
    r.check(Check::at_least("Mobius determinant |ad - bc|", (al * de - be * ga).abs(), 1e-12));
    if let Some(p) = phi {
        let p = expr(p)?;
        let iv = Interval::default();
        r.check(Check::at_most("solution of the source equation", eq.residual_report(&p, iv).relative(), 1e-9));
        let moved = m.apply(&p);
        r.field("phi", moved.to_string());
        r.check(Check::at_most("transported solution residual", out.residual_report(&moved, iv).relative(), 1e-9));
    }
    Ok((r, None))
}

pub fn solve_re(a: &str, b: &str, c: &str, phi1: &str, anchor: f64, constants: &List, grid: &Grid) -> Outcome {
    let eq = RiccatiEq::new(expr(a)?, expr(b)?, expr(c)?);
    let p1 = expr(phi1)?;
    let fam = general_from_particular(&eq, &p1, anchor)?;
    let xs = grid.points();
    let iv = Interval::new(grid.min, grid.max);
    let mut r = Report::new("solve-re");
    r.field("general", fam.expr.to_string());
    r.check(Check::at_most("particular solution residual", eq.residual_report(&p1, iv).relative(), 1e-9));
    let mut t = Table::new().column("x", xs.clone()).column("phi1", eval_column(&p1, &xs));
    for &cv in &constants.0 {
        let phi = fam.at(cv);
        r.check(Check::at_most(&format!("general solution residual at C = {cv}"), eq.residual_report(&phi, iv).relative(), 1e-8));
        t = t.column(&format!("phi_C={cv}"), eval_column(&phi, &xs));
    }
    Ok((r, Some(("solve-re.csv".into(), t))))
}

pub fn hermite(n: usize) -> Outcome {
    if n > 60 {
        return Err(Failure::invalid("--n above 60 is not supported"));
    }
    let h = hermite_polynomial(n);
    let mut r = Report::new("hermite");
    r.field("n", n);
    r.field("polynomial", poly_string(&h.coeffs));
    r.field("coefficients", h.coeffs.iter().map(|c| Value::String(c.to_string())).collect::<Vec<_>>());
    r.number("alpha", h.alpha);
    r.field("witness", h.witness.to_string());
    r.check(Check::holds("recurrence equals Rodrigues formula", h.coeffs == hermite_rodrigues(n)));
    if n <= 12 {
        let res = hermite_residual(&h.witness, h.alpha);
        let xs = sample_points(-3.0, 3.0, 100);
        let mut worst: f64 = 0.0;
        for &x in &xs {
            let (rv, y) = (res.eval_at(X, x)?, h.witness.eval_at(X, x)?);
            worst = worst.max(rv.abs() / (y * y).max(x * x).max(1.0));
        }
        r.check(Check::at_most("witness solves y' + y^2 = x^2 + alpha", worst, 1e-10));
    }
    Ok((r, None))
}

pub fn pole(alpha: f64, eps: f64, depth: usize) -> Outcome {
    let s = pole_series(alpha, eps, depth)?;
    let mut r = Report::new("pole-series");
    r.number("alpha", alpha);
    r.number("eps", eps);
    r.field("coefficients", s.coeffs.iter().map(|c| Value::String(c.to_string())).collect::<Vec<_>>());
    r.field("values", s.coeffs_f64().into_iter().map(num).collect::<Vec<_>>());
    let errs = s.ivp_errors(0.01, &[0.4, 0.2], 1e-13)?;
    let worst = errs.iter().map(|e| e.1).fold(0.0, f64::max);
    let order = (errs[0].1 / errs[1].1).log2();
    r.number("error_at_0.4", errs[0].1);
    r.number("error_at_0.2", errs[1].1);
    r.number("observed_order", order);
    // an exact series leaves only solver noise
    let ok = worst <= 1e-8 || order >= depth as f64 + 0.5;
    r.check(Check { pass: ok, ..Check::at_least("truncation error order vs IVP", order, depth as f64 + 0.5) });
    Ok((r, None))
}

pub fn schwarz_cmd(phi: &str, grid: &Grid) -> Outcome {
    let p = expr(phi)?;
    let s = schwarz(&p)?;
    let xs = grid.points();
    let mut r = Report::new("schwarz");
    r.field("schwarzian", s.to_string());
    let moved = schwarz(&MobiusMap::constant(2.0, 1.0, 1.0, 1.0).apply(&p))?;
    r.check(Check::at_most("invariance under a constant Mobius map", sampled(&moved.sub(&s), &xs), 1e-9));
    let t = Table::new().column("x", xs.clone()).column("S", eval_column(&s, &xs));
    Ok((r, Some(("schwarz.csv".into(), t))))
}

/// `u` alone when there is one potential, `u_i` otherwise.
fn coefficients(f: &FormalSeries, depth: usize, m: usize) -> Vec<Value> {
    (0..=depth as i32).map(|j| Value::String(f.coeff(-j).display(m == 1))).collect()
}

pub fn series(kind: &str, m: usize, depth: usize) -> Outcome {
    let mut r = Report::new("series");
    r.field("kind", kind);
    r.field("m", m);
    match kind {
        "riccati" => {
            let s = riccati_series(m, depth)?;
            r.field("f", coefficients(&s.f, depth, m));
            r.field("g", coefficients(&s.g, depth, m));
            let f = s.f.with_floor(None);
            let res = f.total_derivative().add(&f.mul(&f)).sub(&s.potential());
            let lead = res.leading().map_or(f64::NEG_INFINITY, f64::from);
            r.check(Check::at_most("Riccati residual degree below truncation", lead, -(depth as f64)));
        }
        "modschwarz" => {
            let h = modschwarz_series(m, depth)?;
            r.field("h", coefficients(&h, depth, m));
            let res = riccati_core::symbolic::modschwarz_residual(&h.with_floor(None), m);
            let lead = res.leading().map_or(f64::NEG_INFINITY, f64::from);
            r.check(Check::at_most("modified Schwarzian residual degree", lead, m as f64 - depth as f64 - 1.0));
        }
        other => return Err(Failure::invalid(format!("unknown series kind '{other}'"))),
    }
    Ok((r, None))
}

pub fn soliton(k: &List, beta: &Option<List>, grid: &Grid) -> Outcome {
    let spec = spec_from(k, beta)?;
    let xs = grid.points();
    let p = potential(&spec, &xs)?;
    let mut r = Report::new("soliton");
    r.field("k", spec.k.iter().map(|&v| num(v)).collect::<Vec<_>>());
    r.field("beta", spec.beta.iter().map(|&v| num(v)).collect::<Vec<_>>());
    if spec.n() <= 2 {
        let u = closed_form_u(&spec, Flow::Static)?;
        let diff = xs.iter().zip(&p.u).map(|(&x, v)| (u.eval_at(X, x).unwrap_or(f64::NAN) - v).abs()).fold(0.0, f64::max);
        r.check(Check::at_most("linear system vs closed form", diff, 1e-10));
    }
    let kt = spec.k.iter().cloned().fold(0.0, f64::max) + 0.5;
    let res = [grid.min, 0.5 * (grid.min + grid.max), grid.max]
        .iter()
        .map(|&x| schrodinger_residual(&spec, kt, x))
        .collect::<Result<Vec<_>, _>>()?;
    r.check(Check::at_most("psi'' = (k^2 + u) psi", res.iter().cloned().fold(0.0, f64::max), 1e-8));
    let w = wronskian_numeric(&spec, kt, 0.0)?;
    let want = eval_poly(&wronskian_poly(&spec), kt);
    r.check(Check::at_most("Wronskian polynomial", (w - want).abs() / want.abs().max(1e-300), 1e-8));
    let t = Table::new().column("x", xs).column("u", p.u).column("a1", p.a1);
    Ok((r, Some(("soliton.csv".into(), t))))
}

pub fn kp(k: &List, beta: &Option<List>, flow: &str, y: f64, t: f64, grid: &Grid) -> Outcome {
    let spec = spec_from(k, beta)?;
    let (fl, pde) = match flow {
        "kp" => (Flow::Kp, Pde::Kp),
        "kdv" => (Flow::Kdv, Pde::Kdv),
        other => return Err(Failure::invalid(format!("unknown flow '{other}'"))),
    };
    let xs = grid.points();
    let mut u = Vec::with_capacity(xs.len());
    for &x in &xs {
        u.push(match fl {
            Flow::Kdv => kdv_field(&spec, x, t)?,
            _ => kp_field(&spec, x, y, t)?,
        });
    }
    let mut r = Report::new("kp");
    r.field("flow", flow);
    r.number("y", y);
    r.number("t", t);
    if spec.n() <= 2 {
        let ue = closed_form_u(&spec, fl)?;
        let rep = pde_residual_exact(&ue, pde, &sample_box(3.0, 7, pde))?;
        r.check(Check::at_most("exact PDE residual", rep.max_abs, 1e-8));
    }
    let pts = sample_box(1.0, 3, pde);
    let ratio = match fl {
        Flow::Kdv => {
            let f = |x: f64, _y: f64, t: f64| kdv_field(&spec, x, t);
            convergence_ratio(&f, pde, &pts, &vec![0.0; pts.len()], 0.01)?
        }
        _ => {
            let f = |x: f64, y: f64, t: f64| kp_field(&spec, x, y, t);
            richardson_ratio(&f, pde, &pts, 0.04)?
        }
    };
    r.number("fd_ratio", ratio);
    r.check(Check::at_most("finite-difference second order, |ratio - 4|", (ratio - 4.0).abs(), 0.5));
    let tab = Table::new().column("x", xs).column("u", u);
    Ok((r, Some(("kp.csv".into(), tab))))
}

pub fn finite_gap(lambdas: &List, gamma0: f64, sign: f64, periods: usize, m: usize, deterministic: bool) -> Outcome {
    let [l1, l2, l3] = lambdas.0[..] else {
        return Err(Failure::invalid("--lambdas needs three band edges"));
    };
    if periods == 0 || m < 8 {
        return Err(Failure::invalid("need --periods >= 1 and --samples-per-period >= 8"));
    }
    let spec = GapSpec::new([l1, l2, l3], gamma0, sign)?;
    let t = period(&spec, 1e-13)?;
    let stepper = if deterministic { Stepper::Fixed(16) } else { Stepper::Adaptive(1e-12) };
    let traj = integrate_gamma(&spec, 0.0, periods * m, t / m as f64, stepper)?;
    let u = trace_potential(&traj, &spec);
    let peaks = maxima(&spec, &traj, 1e-12)?;
    let mut r = Report::new("finite-gap");
    r.field("lambdas", lambdas.0.iter().map(|&v| num(v)).collect::<Vec<_>>());
    r.number("gamma0", gamma0);
    r.number("period", t);
    if peaks.len() >= 2 {
        let measured = peaks[1] - peaks[0];
        r.number("trajectory_period", measured);
        r.check(Check::at_most("quadrature vs trajectory period", (measured - t).abs() / t, 1e-6));
    } else {
        r.field("trajectory_period", Value::Null);
        r.check(Check::holds("two maxima within the integrated range", false));
    }
    let per = (0..=m * (periods - 1)).map(|i| (u[i + m] - u[i]).abs()).fold(0.0, f64::max);
    if periods >= 2 {
        r.check(Check::at_most("|u(x + T) - u(x)|", per, 1e-6));
    }
    let c = spec.c_poly();
    let drift = (0..traj.len())
        .map(|i| {
            let cv = spectral_curve(&spec, traj.gamma[i][0], traj.dgamma[i][0], traj.ddgamma[i][0]);
            cv.coeffs().iter().zip(c.poly.coeffs()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    r.check(Check::at_most("spectral curve coefficients constant in x", drift, 1e-6));
    let d = dubrovin_checks(&traj, &c)?;
    r.check(Check::at_most("C(gamma) = gamma_x^2", d.item1, 1e-6));
    r.check(Check::at_most("(2 phi phi_xx + C - phi_x^2) / phi^2 remainder", d.remainder, 1e-6));
    let tr = floquet_trace(&spec, l1, t, 1e-12)?;
    r.number("floquet_trace_at_l1", tr);
    r.check(Check::at_most("|Floquet trace| = 2 at a band edge", (tr.abs() - 2.0).abs(), 1e-4));
    let tab = Table::new()
        .column("x", traj.xs.clone())
        .column("gamma", traj.first())
        .column("u", u);
    Ok((r, Some(("finite-gap.csv".into(), tab))))
}

pub fn verify(suite: &str) -> Outcome {
    let all = suite == "all";
    if !["all", "riccati", "schwarzian", "soliton", "finite-gap"].contains(&suite) {
        return Err(Failure::invalid(format!("unknown suite '{suite}'")));
    }
    let mut r = Report::new("verify");
    r.field("suite", suite);
    if all || suite == "riccati" {
        let eq = RiccatiEq::new(expr("1")?, expr("x")?, expr("-1 + x^2/4")?);
        let d = cross_ratio_drift(&eq, 0.0, [-0.6, -0.1, 0.3, 0.8], 0.5, 1e-11)?;
        r.check(Check::at_most("cross-ratio of four solutions", d, 1e-8));
        let l = Lode2::parse("0", "1 + x^2/4")?;
        let w = wronskian_drift(&l, 0.0, [1.0, 0.0, 0.0, 1.0], 3.0, 1e-12)?;
        r.check(Check::at_most("Wronskian drift", w, 1e-8));
        let k = kovalevskii_check(3, &[1.0, 2.0, 3.0], -0.5, 1e-10)?;
        r.check(Check::at_most("three-component first integrals", k.max_drift, 1e-7));
    }
    if all || suite == "schwarzian" {
        let p = expr("exp(x/2) + x/3")?;
        let s = schwarz(&p)?;
        let xs = sample_points(-2.0, 2.0, 32);
        let mut worst: f64 = 0.0;
        for (a, b, c, d) in [(2.0, 1.0, 1.0, 1.0), (0.0, 1.0, 1.0, 0.0), (1.5, -2.0, 0.5, 3.0)] {
            let moved = schwarz(&MobiusMap::constant(a, b, c, d).apply(&p))?;
            worst = worst.max(sampled(&moved.sub(&s), &xs));
        }
        r.check(Check::at_most("Schwarzian Mobius invariance", worst, 1e-9));
        let st = schwarz(&expr("sin(x)/cos(x)")?)?;
        r.check(Check::at_most("S(tan) = -1", sampled(&st.add(&Expr::one()), &sample_points(-1.0, 1.0, 32)), 1e-9));
    }
    if all || suite == "soliton" {
        let spec = SolitonSpec::new(vec![2.0, 1.0], vec![0.3, -0.2])?;
        let mut worst: f64 = 0.0;
        for k in [0.5, 1.7, 3.0] {
            for x in [-4.0, 0.0, 2.5] {
                worst = worst.max(schrodinger_residual(&spec, k, x)?);
            }
        }
        r.check(Check::at_most("transparency residual", worst, 1e-8));
        let m0 = kdv_mass(&spec, 0.0, 60.0, 1e-12)?;
        let m1 = kdv_mass(&spec, 0.7, 60.0, 1e-12)?;
        r.check(Check::at_most("KdV mass conservation", (m1 - m0).abs(), 1e-8));
    }
    if all || suite == "finite-gap" {
        return finite_gap(&List(vec![2.0, 1.0, 0.0]), 0.5, 1.0, 2, 200, false).map(|(fg, _)| {
            for c in fg.checks {
                r.check(Check { name: format!("finite gap: {}", c.name), ..c });
            }
            (r, None)
        });
    }
    Ok((r, None))
}
