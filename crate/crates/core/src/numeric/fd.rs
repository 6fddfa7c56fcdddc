use super::{NumericError, Result};

/// Finite-difference weights for derivatives `0..=max_order` at `x0` on the
/// given nodes (Fornberg's recursion). `w[k][j]` weights node `j` for the
/// k-th derivative.
pub fn fornberg_weights(x0: f64, nodes: &[f64], max_order: usize) -> Vec<Vec<f64>> {
    let n = nodes.len();
    let mut c = vec![vec![0.0; n]; max_order + 1];
    if n == 0 {
        return c;
    }
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(max_order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - x0;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// Derivative samples with a flag for points that used a one-sided stencil.
#[derive(Debug, Clone)]
pub struct FdResult {
    pub values: Vec<f64>,
    pub one_sided: Vec<bool>,
}

/// Second-order accurate derivative of uniformly spaced `samples`.
/// Central stencils in the interior, one-sided ones near the ends.
pub fn fd_derivative(samples: &[f64], order: usize, step: f64) -> Result<FdResult> {
    if order == 0 || order > 4 {
        return Err(NumericError::InvalidArgument(format!("derivative order {order} outside 1..=4")));
    }
    if !(step > 0.0) {
        return Err(NumericError::InvalidArgument("step must be positive".into()));
    }
    let half = order.div_ceil(2);
    let central = 2 * half + 1;
    let one_sided = order + 2;
    let needed = central.max(one_sided);
    let n = samples.len();
    if n < needed {
        return Err(NumericError::GridTooShort { len: n, needed });
    }
    let mut values = Vec::with_capacity(n);
    let mut flags = Vec::with_capacity(n);
    for i in 0..n {
        let (lo, width, flag) = if i >= half && i + half < n {
            (i - half, central, false)
        } else if i < half {
            (0, one_sided, true)
        } else {
            (n - one_sided, one_sided, true)
        };
        let nodes: Vec<f64> = (lo..lo + width).map(|j| j as f64).collect();
        let w = fornberg_weights(i as f64, &nodes, order);
        let d: f64 = (0..width).map(|j| w[order][j] * samples[lo + j]).sum();
        values.push(d / step.powi(order as i32));
        flags.push(flag);
    }
    Ok(FdResult { values, one_sided: flags })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(a: f64, h: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| a + h * i as f64).collect()
    }

    #[test]
    fn third_derivative_of_cubic_is_six() {
        let h = 0.05;
        let s: Vec<f64> = grid(-1.0, h, 41).iter().map(|x| x.powi(3)).collect();
        let d = fd_derivative(&s, 3, h).unwrap();
        for v in &d.values {
            assert!((v - 6.0).abs() < 1e-6, "{v}");
        }
        assert!(d.one_sided[0] && !d.one_sided[20]);
    }

    #[test]
    fn first_derivative_of_sine_at_zero() {
        let h = 1e-2;
        let xs = grid(-0.1, h, 21);
        let s: Vec<f64> = xs.iter().map(|x| x.sin()).collect();
        let d = fd_derivative(&s, 1, h).unwrap();
        assert!((d.values[10] - 1.0).abs() < h * h);
    }

    #[test]
    fn halving_step_quarters_error_on_cosh() {
        let err = |h: f64| {
            let n = (2.0 / h).round() as usize + 1;
            let xs = grid(-1.0, h, n);
            let s: Vec<f64> = xs.iter().map(|x| x.cosh()).collect();
            let d = fd_derivative(&s, 2, h).unwrap();
            let mid = n / 2;
            (d.values[mid] - xs[mid].cosh()).abs()
        };
        let ratio = err(0.1) / err(0.05);
        assert!((ratio - 4.0).abs() < 0.1, "{ratio}");
    }

    #[test]
    fn boundary_stencils_are_second_order() {
        let err = |h: f64| {
            let xs = grid(0.0, h, 12);
            let s: Vec<f64> = xs.iter().map(|x| x.exp()).collect();
            let d = fd_derivative(&s, 4, h).unwrap();
            (d.values[0] - 1.0).abs()
        };
        let ratio = err(0.02) / err(0.01);
        assert!((ratio - 4.0).abs() < 0.3, "{ratio}");
    }

    #[test]
    fn short_grid_is_rejected() {
        assert!(matches!(fd_derivative(&[1.0, 2.0, 3.0], 3, 0.1), Err(NumericError::GridTooShort { .. })));
    }
}
