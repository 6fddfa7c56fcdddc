use num_bigint::BigInt;
use num_rational::BigRational;

use super::diffpoly::{DiffPolynomial, FormalSeries};
use super::expr::Expr;
use super::integrate::antiderivative;
use super::SymbolicError;

fn frac(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

/// Log-derivative series of the two Jost-type solutions:
/// `f = lambda + sum_j f_j lambda^-j` and `g = -lambda + sum_j g_j lambda^-j`,
/// both solving `f_x + f^2 = lambda^2 + u_1 lambda + u_2`.
#[derive(Debug, Clone)]
pub struct RiccatiSeries {
    pub m: usize,
    pub f: FormalSeries,
    pub g: FormalSeries,
}

impl RiccatiSeries {
    /// Coefficient of `lambda^-j` in `f`.
    pub fn f_coeff(&self, j: usize) -> DiffPolynomial {
        self.f.coeff(-(j as i32))
    }

    pub fn g_coeff(&self, j: usize) -> DiffPolynomial {
        self.g.coeff(-(j as i32))
    }

    /// The quadratic potential `lambda^2 + u_1 lambda + u_2` as a series.
    pub fn potential(&self) -> FormalSeries {
        let mut p = FormalSeries::new(None);
        p.set(2, DiffPolynomial::integer(1));
        if self.m == 2 {
            p.set(1, DiffPolynomial::symbol(1, 0));
            p.set(0, DiffPolynomial::symbol(2, 0));
        } else {
            p.set(0, DiffPolynomial::symbol(1, 0));
        }
        p
    }
}

fn convolution(c: &[DiffPolynomial], n: usize) -> DiffPolynomial {
    let mut s = DiffPolynomial::zero();
    for i in 0..=n {
        s = &s + &(&c[i] * &c[n - i]);
    }
    s
}

/// Coefficients `f_0..f_K` and `g_0..g_K` by the triangular recurrences.
///
/// `m = 2` uses potentials `u_1, u_2`. `m = 1` is the Schrodinger case
/// `k^2 + u` with the series taken in `k`; `u` is potential index 1.
pub fn riccati_series(m: usize, depth: usize) -> Result<RiccatiSeries, SymbolicError> {
    let (u1, u2) = match m {
        1 => (DiffPolynomial::zero(), DiffPolynomial::symbol(1, 0)),
        2 => (DiffPolynomial::symbol(1, 0), DiffPolynomial::symbol(2, 0)),
        _ => return Err(SymbolicError::Unsupported(format!("riccati_series for m = {m}"))),
    };
    let half = frac(1, 2);
    let rhs = |n: usize| if n == 0 { u2.clone() } else { DiffPolynomial::zero() };

    let mut f = vec![u1.scale(&half)];
    let mut g = vec![u1.scale(&frac(-1, 2))];
    for n in 0..depth {
        // 2 f_{n+1} = rhs_n - f_{n,x} - sum f_i f_j
        let next_f = &(&rhs(n) - &f[n].total_derivative()) - &convolution(&f, n);
        f.push(next_f.scale(&half));
        // 2 g_{n+1} = g_{n,x} + sum g_i g_j - rhs_n
        let next_g = &(&g[n].total_derivative() + &convolution(&g, n)) - &rhs(n);
        g.push(next_g.scale(&half));
    }
    let floor = Some(-(depth as i32));
    let mut fs = FormalSeries::new(floor);
    let mut gs = FormalSeries::new(floor);
    fs.set(1, DiffPolynomial::integer(1));
    gs.set(1, DiffPolynomial::integer(-1));
    for (j, (fj, gj)) in f.into_iter().zip(g).enumerate() {
        fs.set(-(j as i32), fj);
        gs.set(-(j as i32), gj);
    }
    Ok(RiccatiSeries { m, f: fs, g: gs })
}

/// `lambda^m + u_1 lambda^(m-1) + ... + u_m`.
pub fn generalized_potential(m: usize) -> FormalSeries {
    let mut u = FormalSeries::new(None);
    u.set(m as i32, DiffPolynomial::integer(1));
    for i in 1..=m {
        u.set((m - i) as i32, DiffPolynomial::symbol(i, 0));
    }
    u
}

/// `3/4 h_x^2 - 1/2 h h_xx + lambda^m h^4 - U h^2`, i.e. the modified
/// Schwarzian equation multiplied through by `h^2`.
pub fn modschwarz_residual(h: &FormalSeries, m: usize) -> FormalSeries {
    let hx = h.total_derivative();
    let hxx = hx.total_derivative();
    let h2 = h.mul(h);
    hx.mul(&hx)
        .scale(&frac(3, 4))
        .sub(&h.mul(&hxx).scale(&half()))
        .add(&h2.mul(&h2).shift(m as i32))
        .sub(&generalized_potential(m).mul(&h2))
}

fn half() -> BigRational {
    frac(1, 2)
}

/// `h = 1 + sum_{k=1..K} lambda^-k h_k` solving the modified Schwarzian
/// equation order by order. The coefficient of `lambda^(m-k)` in the
/// residual is `2 h_k` plus terms in `h_1..h_{k-1}`.
pub fn modschwarz_series(m: usize, depth: usize) -> Result<FormalSeries, SymbolicError> {
    if m == 0 {
        return Err(SymbolicError::Unsupported("modschwarz_series needs m >= 1".into()));
    }
    // every term of the residual at degree >= m - K only involves h_j with
    // j <= K, so truncating all products below -K is exact there
    let mut h = FormalSeries::new(Some(-(depth as i32)));
    h.set(0, DiffPolynomial::integer(1));
    for k in 1..=depth {
        let r = modschwarz_residual(&h, m).coeff(m as i32 - k as i32);
        h.set(-(k as i32), r.scale(&frac(-1, 2)));
    }
    Ok(h)
}

/// How the constant of each integration in [`zeta_chain`] is fixed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ZetaNormalization {
    /// Closed-form antiderivative plus the given constant.
    Constant(f64),
    /// Constant chosen so each `zeta_j` tends to zero as `x -> +inf`.
    DecayAtPlusInfinity,
}

impl Default for ZetaNormalization {
    fn default() -> Self {
        ZetaNormalization::Constant(0.0)
    }
}

/// `zeta_0 = 1`, `zeta_{j+1,x} = (u zeta_j - zeta_{j,xx}) / 2`; returns
/// `zeta_1..zeta_J`. Without `allow_quadrature` a missing closed form is an
/// error; with it the integral is represented by a node anchored at 0.
pub fn zeta_chain(
    u: &Expr,
    var: &str,
    count: usize,
    norm: ZetaNormalization,
    allow_quadrature: bool,
) -> Result<Vec<Expr>, SymbolicError> {
    let mut out = Vec::with_capacity(count);
    let mut prev = Expr::one();
    for _ in 0..count {
        let integrand = u.mul(&prev).sub(&prev.diff_n(var, 2)).mul(&Expr::ratio(1, 2));
        let anti = match antiderivative(&integrand, var) {
            Some(a) => a,
            None if allow_quadrature => Expr::integral(integrand.clone(), var, 0.0),
            None => return Err(SymbolicError::NotIntegrable(integrand.to_string())),
        };
        let next = match norm {
            ZetaNormalization::Constant(c) => anti.add(&Expr::real(c)),
            ZetaNormalization::DecayAtPlusInfinity => {
                let far = anti.eval_at(var, 30.0)?;
                let farther = anti.eval_at(var, 40.0)?;
                if (far - farther).abs() > 1e-8 * far.abs().max(1.0) {
                    return Err(SymbolicError::Unsupported(format!(
                        "antiderivative {anti} has no limit at +inf"
                    )));
                }
                anti.sub(&Expr::real(farther))
            }
        };
        out.push(next.clone());
        prev = next;
    }
    Ok(out)
}
