use rayon::prelude::*;

use crate::numeric::{LuFactorization, Matrix};
use crate::{Error, Result};

/// Spectral data of an N-soliton potential: `k_1 > ... > k_N > 0` and
/// phases `beta_j`, `B_j = exp(2 beta_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SolitonSpec {
    pub k: Vec<f64>,
    pub beta: Vec<f64>,
}

impl SolitonSpec {
    pub fn new(k: Vec<f64>, beta: Vec<f64>) -> Result<Self> {
        if k.is_empty() {
            return Err(Error::InvalidInput("need at least one k".into()));
        }
        if k.len() != beta.len() {
            return Err(Error::InvalidInput(format!("{} values of k but {} phases", k.len(), beta.len())));
        }
        if k.iter().chain(&beta).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite spectral data".into()));
        }
        if k[k.len() - 1] <= 0.0 || k.windows(2).any(|w| w[0] <= w[1]) {
            return Err(Error::InvalidInput(format!("k must be strictly decreasing and positive, got {k:?}")));
        }
        Ok(SolitonSpec { k, beta })
    }

    /// Zero phases.
    pub fn from_k(k: Vec<f64>) -> Result<Self> {
        let n = k.len();
        SolitonSpec::new(k, vec![0.0; n])
    }

    pub fn n(&self) -> usize {
        self.k.len()
    }

    pub fn b(&self, j: usize) -> f64 {
        (2.0 * self.beta[j]).exp()
    }

    pub fn tau(&self, j: usize, x: f64) -> f64 {
        self.k[j] * x + self.beta[j]
    }

    /// Same `k` with `beta_j + shift(k_j)`.
    pub fn shifted(&self, shift: impl Fn(f64) -> f64) -> SolitonSpec {
        SolitonSpec { k: self.k.clone(), beta: self.k.iter().zip(&self.beta).map(|(k, b)| b + shift(*k)).collect() }
    }

    pub fn sum_k(&self) -> f64 {
        self.k.iter().sum()
    }
}

/// `a_1..a_N` at one point with their first two x-derivatives.
#[derive(Debug, Clone)]
pub struct Coefficients {
    pub x: f64,
    pub a: Vec<f64>,
    pub da: Vec<f64>,
    pub dda: Vec<f64>,
    pub det: f64,
    pub pivot_ratio: f64,
}

impl Coefficients {
    /// `u = 2 a_1'`.
    pub fn u(&self) -> f64 {
        2.0 * self.da[0]
    }

    pub fn du(&self) -> f64 {
        2.0 * self.dda[0]
    }

    /// `P(k) = k^N + a_1 k^(N-1) + ... + a_N` and its first two x-derivatives.
    pub fn poly(&self, k: f64) -> (f64, f64, f64) {
        let mut p = 1.0;
        let mut dp = 0.0;
        let mut ddp = 0.0;
        for i in 0..self.a.len() {
            p = p * k + self.a[i];
            dp = dp * k + self.da[i];
            ddp = ddp * k + self.dda[i];
        }
        (p, dp, ddp)
    }
}

/// `tanh`, its derivative and second derivative in x for `tau = k x + beta`.
fn tanh_jet(k: f64, tau: f64) -> (f64, f64, f64) {
    let e = tau.tanh();
    let sech2 = 1.0 / tau.cosh().powi(2);
    (e, k * sech2, -2.0 * k * k * e * sech2)
}

/// Solve the interpolation system `psi_2(x, k_j) = (-1)^(j+1) B_j psi_1(x, k_j)`
/// for `a_j` and differentiate it implicitly twice.
///
/// Row `j` (1-based) reads `sum_i w_ij k_j^(N-i) a_i = -w_0j k_j^N` with
/// `w_ij = E_j` when `i + j` is odd and `1` otherwise.
pub fn solve_coefficients(spec: &SolitonSpec, x: f64) -> Result<Coefficients> {
    let n = spec.n();
    let mut m = Matrix::zeros(n);
    let mut dm = Matrix::zeros(n);
    let mut ddm = Matrix::zeros(n);
    let mut r = vec![0.0; n];
    let mut dr = vec![0.0; n];
    let mut ddr = vec![0.0; n];
    for row in 0..n {
        let j = row + 1;
        let k = spec.k[row];
        let (e, de, dde) = tanh_jet(k, spec.tau(row, x));
        for i in 0..=n {
            let p = k.powi((n - i) as i32);
            let (w, dw, ddw) = if (i + j) % 2 == 1 { (e, de, dde) } else { (1.0, 0.0, 0.0) };
            if i == 0 {
                r[row] = -p * w;
                dr[row] = -p * dw;
                ddr[row] = -p * ddw;
            } else {
                m[(row, i - 1)] = p * w;
                dm[(row, i - 1)] = p * dw;
                ddm[(row, i - 1)] = p * ddw;
            }
        }
    }
    let lu = LuFactorization::new(&m)
        .map_err(|e| Error::Degenerate(format!("soliton system singular at x = {x}: {e}")))?;
    let a = lu.solve(&r)?;
    // M a' = r' - M' a
    let ma = dm.mul_vec(&a);
    let rhs1: Vec<f64> = dr.iter().zip(&ma).map(|(p, q)| p - q).collect();
    let da = lu.solve(&rhs1)?;
    // M a'' = r'' - M'' a - 2 M' a'
    let mma = ddm.mul_vec(&a);
    let mda = dm.mul_vec(&da);
    let rhs2: Vec<f64> = (0..n).map(|i| ddr[i] - mma[i] - 2.0 * mda[i]).collect();
    let dda = lu.solve(&rhs2)?;
    Ok(Coefficients { x, a, da, dda, det: lu.det(), pivot_ratio: lu.pivot_ratio() })
}

/// Potential and `a_1` sampled on a grid.
#[derive(Debug, Clone)]
pub struct TransparentPotential {
    pub spec: SolitonSpec,
    pub xs: Vec<f64>,
    pub u: Vec<f64>,
    pub a1: Vec<f64>,
}

pub fn potential(spec: &SolitonSpec, xs: &[f64]) -> Result<TransparentPotential> {
    if xs.is_empty() {
        return Err(Error::InvalidInput("empty grid".into()));
    }
    let coeffs: Vec<Coefficients> = xs.par_iter().map(|&x| solve_coefficients(spec, x)).collect::<Result<_>>()?;
    Ok(TransparentPotential {
        spec: spec.clone(),
        xs: xs.to_vec(),
        u: coeffs.iter().map(Coefficients::u).collect(),
        a1: coeffs.iter().map(|c| c.a[0]).collect(),
    })
}

pub fn u_at(spec: &SolitonSpec, x: f64) -> Result<f64> {
    Ok(solve_coefficients(spec, x)?.u())
}

/// Values of `psi_1(x, k) = e^(kx) P(k)` and `psi_2(x, k) = (-1)^N psi_1(x, -k)`.
pub fn wavefunctions(spec: &SolitonSpec, k: f64, x: f64) -> Result<(f64, f64)> {
    let c = solve_coefficients(spec, x)?;
    let sign = if spec.n().is_multiple_of(2) { 1.0 } else { -1.0 };
    Ok(((k * x).exp() * c.poly(k).0, sign * (-k * x).exp() * c.poly(-k).0))
}

/// `psi_1 psi_2' - psi_2 psi_1'`.
pub fn wronskian_numeric(spec: &SolitonSpec, k: f64, x: f64) -> Result<f64> {
    let c = solve_coefficients(spec, x)?;
    let sign = if spec.n().is_multiple_of(2) { 1.0 } else { -1.0 };
    let (p, dp, _) = c.poly(k);
    let (q, dq, _) = c.poly(-k);
    // the exponentials cancel
    Ok(sign * (p * (dq - k * q) - q * (dp + k * p)))
}

/// Ascending coefficients of `-2k prod (k^2 - k_j^2)`.
pub fn wronskian_poly(spec: &SolitonSpec) -> Vec<f64> {
    let mut c = vec![-2.0];
    for kj in &spec.k {
        let mut next = vec![0.0; c.len() + 1];
        for (i, v) in c.iter().enumerate() {
            next[i + 1] += v;
            next[i] -= v * kj * kj;
        }
        c = next;
    }
    // the polynomial above is in k^2; spread and multiply by k
    let mut out = vec![0.0; 2 * c.len()];
    for (i, v) in c.iter().enumerate() {
        out[2 * i + 1] = *v;
    }
    out
}

pub fn eval_poly(coeffs: &[f64], k: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * k + c)
}

/// Relative residual of `psi_xx = (k^2 + u) psi` for `psi_1` at one point:
/// `|2k P' + P'' - u P|` over the largest term.
pub fn schrodinger_residual(spec: &SolitonSpec, k: f64, x: f64) -> Result<f64> {
    let c = solve_coefficients(spec, x)?;
    let (p, dp, ddp) = c.poly(k);
    let u = c.u();
    let terms = [2.0 * k * dp, ddp, u * p, k * k * p];
    let scale = terms.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    let res = (terms[0] + terms[1] - terms[2]).abs();
    Ok(if scale == 0.0 { res } else { res / scale })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(k: &[f64], b: &[f64]) -> SolitonSpec {
        SolitonSpec::new(k.to_vec(), b.to_vec()).unwrap()
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(SolitonSpec::new(vec![1.0, 2.0], vec![0.0, 0.0]).is_err());
        assert!(SolitonSpec::new(vec![1.0, 0.0], vec![0.0, 0.0]).is_err());
        assert!(SolitonSpec::new(vec![], vec![]).is_err());
        assert!(SolitonSpec::new(vec![1.0], vec![0.0, 1.0]).is_err());
    }

    #[test]
    fn one_soliton() {
        let s = spec(&[1.0], &[0.0]);
        let c = solve_coefficients(&s, 0.0).unwrap();
        assert_eq!(c.a[0], 0.0);
        assert!((c.u() + 2.0).abs() < 1e-14);
        for x in [-3.0, -0.4, 1.7] {
            let c = solve_coefficients(&s, x).unwrap();
            assert!((c.a[0] + x.tanh()).abs() < 1e-14);
            assert!((c.u() + 2.0 / x.cosh().powi(2)).abs() < 1e-13);
        }
    }

    #[test]
    fn limit_gives_vieta_coefficients() {
        // at large x every E_j is 1 and P(k_j) = 0
        let s = spec(&[3.0, 2.0, 1.0], &[0.0, 0.0, 0.0]);
        let c = solve_coefficients(&s, 40.0).unwrap();
        for (got, want) in c.a.iter().zip([-6.0, 11.0, -6.0]) {
            assert!((got - want).abs() < 1e-10, "{:?}", c.a);
        }
    }

    #[test]
    fn two_soliton_matches_rational_form() {
        let s = spec(&[2.0, 1.0], &[0.3, -0.2]);
        for x in [-2.0, -0.5, 0.0, 0.8, 2.5] {
            let e1 = s.tau(0, x).tanh();
            let e2 = s.tau(1, x).tanh();
            let want = (1.0 - 4.0) * e1 / (2.0 - e1 * e2);
            let got = solve_coefficients(&s, x).unwrap().a[0];
            assert!((got - want).abs() < 1e-13);
        }
        assert_eq!(solve_coefficients(&spec(&[2.0, 1.0], &[0.0, 0.0]), 0.0).unwrap().a[0], 0.0);
    }

    #[test]
    fn implicit_derivatives_match_differences() {
        let s = spec(&[2.2, 1.3, 0.6], &[0.1, -0.4, 0.25]);
        let h = 1e-4;
        for x in [-1.0, 0.3, 1.9] {
            let c = solve_coefficients(&s, x).unwrap();
            let p = solve_coefficients(&s, x + h).unwrap();
            let m = solve_coefficients(&s, x - h).unwrap();
            for i in 0..3 {
                assert!(((p.a[i] - m.a[i]) / (2.0 * h) - c.da[i]).abs() < 1e-6);
                assert!(((p.da[i] - m.da[i]) / (2.0 * h) - c.dda[i]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn proportionality_at_the_nodes() {
        let s = spec(&[2.5, 1.5, 0.5], &[0.2, -0.3, 0.1]);
        for x in [-1.0, 0.0, 0.7] {
            for j in 0..3 {
                let (p1, p2) = wavefunctions(&s, s.k[j], x).unwrap();
                let want = if j % 2 == 0 { s.b(j) } else { -s.b(j) };
                assert!((p2 / p1 - want).abs() < 1e-10 * want.abs().max(1.0));
            }
        }
        let (z1, z2) = wavefunctions(&s, 0.0, 0.4).unwrap();
        assert!((z1 + z2).abs() < 1e-14);
    }

    #[test]
    fn one_soliton_wavefunction() {
        let s = spec(&[1.0], &[0.0]);
        let (p1, _) = wavefunctions(&s, 0.7, 0.3).unwrap();
        assert!((p1 - (0.7f64 * 0.3).exp() * (0.7 - 0.3f64.tanh())).abs() < 1e-14);
    }

    #[test]
    fn wronskian_polynomial() {
        let s = spec(&[1.0], &[0.0]);
        assert_eq!(wronskian_poly(&s), vec![0.0, 2.0, 0.0, -2.0]);
        let t = spec(&[2.0, 1.2], &[0.0, 0.5]);
        let w = wronskian_poly(&t);
        for kj in &t.k {
            assert!(eval_poly(&w, *kj).abs() < 1e-12);
        }
        for k in [0.3, 1.7, 2.9] {
            assert!((eval_poly(&w, -k) + eval_poly(&w, k)).abs() < 1e-12);
            for x in [-2.0, 0.0, 1.5] {
                let num = wronskian_numeric(&t, k, x).unwrap();
                let exact = eval_poly(&w, k);
                assert!((num - exact).abs() <= 1e-8 * exact.abs());
            }
        }
    }

    #[test]
    fn schrodinger_residuals() {
        for s in [spec(&[1.0], &[0.2]), spec(&[2.0, 1.0], &[0.0, 0.4]), spec(&[3.0, 1.8, 0.7], &[0.1, 0.0, -0.3])] {
            for k in [0.5, 1.7, 3.0] {
                for x in [-4.0, -1.1, 0.0, 0.9, 3.3] {
                    assert!(schrodinger_residual(&s, k, x).unwrap() <= 1e-8);
                }
            }
        }
    }

    #[test]
    fn potential_decays() {
        let s = spec(&[2.0, 1.0], &[0.0, 0.0]);
        let p = potential(&s, &[-30.0, 0.0, 30.0]).unwrap();
        assert!(p.u[0].abs() <= 1e-10 && p.u[2].abs() <= 1e-10);
        assert!((p.a1[0] - 3.0).abs() < 1e-8);
        assert!((p.a1[2] + 3.0).abs() < 1e-8);
    }

    #[test]
    fn grid_evaluation_is_order_independent() {
        let s = spec(&[2.0, 1.1, 0.4], &[0.3, 0.0, -0.2]);
        let xs: Vec<f64> = (0..200).map(|i| -10.0 + 0.1 * i as f64).collect();
        let p = potential(&s, &xs).unwrap();
        let rev: Vec<f64> = xs.iter().rev().cloned().collect();
        let q = potential(&s, &rev).unwrap();
        for (i, v) in p.u.iter().enumerate() {
            assert_eq!(*v, q.u[xs.len() - 1 - i]);
            assert_eq!(*v, u_at(&s, xs[i]).unwrap());
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn specs() -> impl Strategy<Value = SolitonSpec> {
            (1usize..=6)
                .prop_flat_map(|n| (prop::collection::vec(0.3..3.0f64, n), prop::collection::vec(-1.0..1.0f64, n)))
                .prop_filter_map("distinct k", |(mut k, beta)| {
                    k.sort_by(|a, b| b.total_cmp(a));
                    if k.windows(2).any(|w| w[0] - w[1] < 0.15) {
                        return None;
                    }
                    SolitonSpec::new(k, beta).ok()
                })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]

            #[test]
            fn determinant_keeps_its_sign(s in specs()) {
                let first = solve_coefficients(&s, -50.0).unwrap().det.signum();
                for i in 0..=200 {
                    let x = -50.0 + 0.5 * i as f64;
                    let c = solve_coefficients(&s, x).unwrap();
                    prop_assert_eq!(c.det.signum(), first);
                    prop_assert!(c.pivot_ratio > 0.0);
                }
            }

            #[test]
            fn residual_for_random_specs(s in specs(), k in 0.2..3.5f64, x in -4.0..4.0f64) {
                prop_assert!(schrodinger_residual(&s, k, x).unwrap() <= 1e-8);
            }
        }
    }
}
