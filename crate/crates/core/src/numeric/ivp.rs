use super::{NumericError, Result};

/// First-order system `y' = f(x, y)` with its initial condition.
pub struct IvpProblem<F>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    pub rhs: F,
    pub x0: f64,
    pub y0: Vec<f64>,
}

impl<F> IvpProblem<F>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    pub fn new(x0: f64, y0: Vec<f64>, rhs: F) -> Self {
        Self { rhs, x0, y0 }
    }

    pub fn dim(&self) -> usize {
        self.y0.len()
    }

    fn eval(&self, x: f64, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; y.len()];
        (self.rhs)(x, y, &mut out);
        out
    }
}

/// Accepted steps of an integration, with cubic Hermite dense output.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub xs: Vec<f64>,
    pub ys: Vec<Vec<f64>>,
    pub fs: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn last_x(&self) -> f64 {
        *self.xs.last().expect("trajectory has at least the initial point")
    }

    pub fn last_y(&self) -> &[f64] {
        self.ys.last().expect("trajectory has at least the initial point")
    }

    fn segment(&self, x: f64) -> usize {
        let n = self.xs.len();
        if n < 2 {
            return 0;
        }
        let forward = self.xs[n - 1] >= self.xs[0];
        // partition_point on a monotone sequence in either direction
        let idx = if forward {
            self.xs.partition_point(|&xi| xi <= x)
        } else {
            self.xs.partition_point(|&xi| xi >= x)
        };
        idx.clamp(1, n - 1) - 1
    }

    /// State at `x` by cubic Hermite interpolation; `x` is clamped to the
    /// integrated range.
    pub fn eval(&self, x: f64) -> Vec<f64> {
        let (y, _) = self.eval_with_derivative(x);
        y
    }

    /// State and its derivative at `x`.
    pub fn eval_with_derivative(&self, x: f64) -> (Vec<f64>, Vec<f64>) {
        if self.xs.len() == 1 {
            return (self.ys[0].clone(), self.fs[0].clone());
        }
        let i = self.segment(x);
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let h = x1 - x0;
        let s = ((x - x0) / h).clamp(0.0, 1.0);
        let (y0, y1, f0, f1) = (&self.ys[i], &self.ys[i + 1], &self.fs[i], &self.fs[i + 1]);
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        let d00 = (6.0 * s2 - 6.0 * s) / h;
        let d10 = 3.0 * s2 - 4.0 * s + 1.0;
        let d01 = (-6.0 * s2 + 6.0 * s) / h;
        let d11 = 3.0 * s2 - 2.0 * s;
        let y = (0..y0.len())
            .map(|k| h00 * y0[k] + h10 * h * f0[k] + h01 * y1[k] + h11 * h * f1[k])
            .collect();
        let dy = (0..y0.len())
            .map(|k| d00 * y0[k] + d10 * f0[k] + d01 * y1[k] + d11 * f1[k])
            .collect();
        (y, dy)
    }
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const MAX_STEPS: usize = 2_000_000;

/// Adaptive Dormand-Prince 5(4) integration from `p.x0` to `x_end`.
///
/// The per-step error estimate is kept below `tol * (1 + |y|)` componentwise.
/// Integration backwards in `x` is allowed.
pub fn integrate_ivp<F>(p: &IvpProblem<F>, x_end: f64, tol: f64) -> Result<Trajectory>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    if !(tol > 0.0) {
        return Err(NumericError::InvalidArgument(format!("tolerance {tol} must be positive")));
    }
    let n = p.dim();
    if n == 0 {
        return Err(NumericError::InvalidArgument("empty state".into()));
    }
    let mut x = p.x0;
    let mut y = p.y0.clone();
    let mut f = p.eval(x, &y);
    if f.iter().any(|v| !v.is_finite()) {
        return Err(NumericError::NonFinite { x });
    }
    let mut traj = Trajectory { xs: vec![x], ys: vec![y.clone()], fs: vec![f.clone()] };
    let span = x_end - x;
    if span == 0.0 {
        return Ok(traj);
    }
    let dir = span.signum();

    let d0 = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let d1 = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut h = if d0 > 1e-5 && d1 > 1e-5 { 0.01 * d0 / d1 } else { 1e-6 };
    h = h.min(span.abs()).max(1e-12 * span.abs()) * dir;

    let mut k = vec![vec![0.0; n]; 7];
    let mut stage = vec![0.0; n];
    let mut steps = 0usize;
    while (x_end - x) * dir > 0.0 {
        steps += 1;
        if steps > MAX_STEPS {
            return Err(NumericError::StepBudget { budget: MAX_STEPS, x });
        }
        if (x + h - x_end) * dir > 0.0 {
            h = x_end - x;
        }
        k[0].copy_from_slice(&f);
        for s in 1..7 {
            for i in 0..n {
                let mut acc = y[i];
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += h * A[s][j] * kj[i];
                }
                stage[i] = acc;
            }
            (p.rhs)(x + C[s] * h, &stage, &mut k[s]);
        }
        // stage now holds the 5th-order solution (row 7 of A == b5), k[6] = f(x+h, y_new)
        let y_new = stage.clone();
        let mut err = 0.0f64;
        let mut finite = true;
        for i in 0..n {
            let mut e = 0.0;
            for s in 0..7 {
                e += E[s] * k[s][i];
            }
            e *= h;
            if !y_new[i].is_finite() || !e.is_finite() || !k[6][i].is_finite() {
                finite = false;
                break;
            }
            let sc = tol * (1.0 + y[i].abs().max(y_new[i].abs()));
            err = err.max(e.abs() / sc);
        }
        if !finite {
            h *= 0.2;
        } else if err <= 1.0 {
            x += h;
            y = y_new;
            f = k[6].clone();
            traj.xs.push(x);
            traj.ys.push(y.clone());
            traj.fs.push(f.clone());
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h *= fac;
            continue;
        } else {
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
        }
        if h.abs() < 1e-13 * x.abs().max(1.0) {
            return Err(NumericError::StepUnderflow { x });
        }
    }
    Ok(traj)
}

/// Classical fixed-step RK4 with `n_steps` equal steps. Fully deterministic
/// step sequence; used where byte-identical outputs matter.
pub fn integrate_rk4<F>(p: &IvpProblem<F>, x_end: f64, n_steps: usize) -> Result<Trajectory>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    if n_steps == 0 {
        return Err(NumericError::InvalidArgument("n_steps must be positive".into()));
    }
    let n = p.dim();
    let h = (x_end - p.x0) / n_steps as f64;
    let mut y = p.y0.clone();
    let mut f = p.eval(p.x0, &y);
    let mut traj = Trajectory { xs: vec![p.x0], ys: vec![y.clone()], fs: vec![f.clone()] };
    let mut tmp = vec![0.0; n];
    let (mut k2, mut k3, mut k4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for step in 0..n_steps {
        let x = p.x0 + step as f64 * h;
        for i in 0..n {
            tmp[i] = y[i] + 0.5 * h * f[i];
        }
        (p.rhs)(x + 0.5 * h, &tmp, &mut k2);
        for i in 0..n {
            tmp[i] = y[i] + 0.5 * h * k2[i];
        }
        (p.rhs)(x + 0.5 * h, &tmp, &mut k3);
        for i in 0..n {
            tmp[i] = y[i] + h * k3[i];
        }
        (p.rhs)(x + h, &tmp, &mut k4);
        for i in 0..n {
            y[i] += h / 6.0 * (f[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        let x_next = p.x0 + (step + 1) as f64 * h;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(NumericError::NonFinite { x: x_next });
        }
        f = p.eval(x_next, &y);
        traj.xs.push(x_next);
        traj.ys.push(y.clone());
        traj.fs.push(f.clone());
    }
    Ok(traj)
}
