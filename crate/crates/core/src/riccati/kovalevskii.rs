use crate::numeric::{integrate_ivp, IvpProblem, NumericError, Trajectory};
use crate::{Error, Result};

/// One conserved quantity and how far it moved.
#[derive(Debug, Clone)]
pub struct IntegralDrift {
    pub label: String,
    pub initial: f64,
    pub drift: f64,
}

#[derive(Debug, Clone)]
pub struct KovalevskiiReport {
    pub n: usize,
    pub integrals: Vec<IntegralDrift>,
    pub max_drift: f64,
    pub steps: usize,
}

fn rhs(_x: f64, y: &[f64], dy: &mut [f64]) {
    let s: f64 = y.iter().sum();
    for (d, v) in dy.iter_mut().zip(y) {
        *d = s * v - 2.0 * v * v;
    }
}

/// Integrate `y_j' = s y_j - 2 y_j^2`, `s = sum y_j`.
pub fn kovalevskii_flow(y0: &[f64], span: f64, tol: f64) -> Result<Trajectory> {
    let p = IvpProblem::new(0.0, y0.to_vec(), rhs);
    integrate_ivp(&p, span, tol).map_err(|e| match e {
        NumericError::StepUnderflow { x } | NumericError::NonFinite { x } => Error::BlowUp { x },
        other => other.into(),
    })
}

type Integral = (String, Box<dyn Fn(&[f64]) -> f64>);

fn integrals(n: usize) -> Vec<Integral> {
    if n == 3 {
        return vec![
            ("F1 = (y1-y2)*y3".to_string(), Box::new(|y: &[f64]| (y[0] - y[1]) * y[2])),
            ("F2 = (y2-y3)*y1".to_string(), Box::new(|y: &[f64]| (y[1] - y[2]) * y[0])),
        ];
    }
    let mut out: Vec<Integral> = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                for l in k + 1..n {
                    out.push((
                        format!("[{},{},{},{}]", i + 1, j + 1, k + 1, l + 1),
                        Box::new(move |y: &[f64]| {
                            (y[l] - y[i]) * (y[k] - y[j]) / ((y[l] - y[j]) * (y[k] - y[i]))
                        }),
                    ));
                }
            }
        }
    }
    out
}

/// Drift of the first integrals along a numeric solution, relative to
/// `max(1, |F(0)|)`.
pub fn kovalevskii_check(n: usize, y0: &[f64], span: f64, tol: f64) -> Result<KovalevskiiReport> {
    if n < 3 {
        return Err(Error::InvalidInput(format!("need n >= 3, got {n}")));
    }
    if y0.len() != n {
        return Err(Error::InvalidInput(format!("expected {n} initial values, got {}", y0.len())));
    }
    if n >= 4 {
        for i in 0..n {
            for j in i + 1..n {
                if y0[i] == y0[j] {
                    return Err(Error::InvalidInput(format!("y{} = y{} makes a cross-ratio undefined", i + 1, j + 1)));
                }
            }
        }
    }
    let traj = kovalevskii_flow(y0, span, tol)?;
    let mut report = KovalevskiiReport { n, integrals: Vec::new(), max_drift: 0.0, steps: traj.len() };
    for (label, f) in integrals(n) {
        let initial = f(y0);
        let scale = initial.abs().max(1.0);
        let drift = traj.ys.iter().map(|y| (f(y) - initial).abs() / scale).fold(0.0, f64::max);
        report.max_drift = report.max_drift.max(drift);
        report.integrals.push(IntegralDrift { label, initial, drift });
    }
    Ok(report)
}

/// Where the solution from `y0` stops existing, searched up to `limit`.
pub fn kovalevskii_blowup(y0: &[f64], limit: f64, tol: f64) -> Option<f64> {
    match kovalevskii_flow(y0, limit, tol) {
        Err(Error::BlowUp { x }) => Some(x),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_component_integrals() {
        let y0 = [1.0, 2.0, 3.0];
        let r = kovalevskii_check(3, &y0, -0.5, 1e-10).unwrap();
        assert_eq!(r.integrals.len(), 2);
        assert!(r.max_drift <= 1e-7, "{r:?}");
    }

    #[test]
    fn cross_ratios_conserved() {
        for n in [4, 5] {
            let y0: Vec<f64> = (1..=n).map(|k| k as f64 * 0.3).collect();
            let r = kovalevskii_check(n, &y0, -0.4, 1e-10).unwrap();
            assert_eq!(r.integrals.len(), [0, 0, 0, 0, 1, 5][n]);
            assert!(r.max_drift <= 1e-7, "{r:?}");
        }
    }

    #[test]
    fn coincident_components() {
        let r = kovalevskii_check(3, &[0.5, 0.5, 1.0], -0.3, 1e-10).unwrap();
        assert_eq!(r.integrals[0].initial, 0.0);
        assert!(r.integrals[0].drift == 0.0);
        assert!(kovalevskii_check(4, &[1.0, 1.0, 2.0, 3.0], 0.1, 1e-10).is_err());
    }

    #[test]
    fn blow_up_is_located() {
        // all equal: y' = (n - 2) y^2 blows up at 1/((n-2) y0)
        let x = kovalevskii_blowup(&[1.0, 1.0, 1.0], 5.0, 1e-10).unwrap();
        assert!((x - 1.0).abs() < 1e-3, "{x}");
        assert!(matches!(kovalevskii_check(3, &[1.0, 1.0, 1.0], 5.0, 1e-10), Err(Error::BlowUp { .. })));
    }
}
