use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::expr::{Expr, Number};

/// `(i, d)` stands for the `d`-th x-derivative of the potential `u_i`.
pub type Symbol = (usize, usize);

/// Product of symbol powers, sorted by symbol, all powers positive.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Monomial(Vec<(Symbol, u32)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn symbol(i: usize, d: usize) -> Self {
        Monomial(vec![((i, d), 1)])
    }

    pub fn factors(&self) -> &[(Symbol, u32)] {
        &self.0
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|(_, p)| p).sum()
    }

    /// Sum of derivative orders counted with multiplicity.
    pub fn weight(&self) -> usize {
        self.0.iter().map(|((_, d), p)| d * *p as usize).sum()
    }

    fn mul(&self, o: &Monomial) -> Monomial {
        let mut out: Vec<(Symbol, u32)> = Vec::with_capacity(self.0.len() + o.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() || j < o.0.len() {
            match (self.0.get(i), o.0.get(j)) {
                (Some(a), Some(b)) if a.0 == b.0 => {
                    out.push((a.0, a.1 + b.1));
                    i += 1;
                    j += 1;
                }
                (Some(a), Some(b)) if a.0 < b.0 => {
                    out.push(*a);
                    i += 1;
                }
                (Some(_), Some(b)) => {
                    out.push(*b);
                    j += 1;
                }
                (Some(a), None) => {
                    out.push(*a);
                    i += 1;
                }
                (None, Some(b)) => {
                    out.push(*b);
                    j += 1;
                }
                (None, None) => unreachable!(),
            }
        }
        Monomial(out)
    }

    /// Leibniz rule: list of (multiplier, monomial) pairs.
    fn derivative(&self) -> Vec<(u32, Monomial)> {
        let mut out = Vec::with_capacity(self.0.len());
        for (k, &((i, d), p)) in self.0.iter().enumerate() {
            let mut rest = self.0.clone();
            if p == 1 {
                rest.remove(k);
            } else {
                rest[k].1 = p - 1;
            }
            out.push((p, Monomial(rest).mul(&Monomial::symbol(i, d + 1))));
        }
        out
    }
}

/// Polynomial with rational coefficients in the potentials `u_i` and their
/// x-derivatives. Zero coefficients are never stored.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DiffPolynomial {
    terms: BTreeMap<Monomial, BigRational>,
}

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

impl DiffPolynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: BigRational) -> Self {
        let mut p = Self::zero();
        p.add_term(Monomial::one(), c);
        p
    }

    pub fn integer(n: i64) -> Self {
        Self::constant(rat(n))
    }

    /// `u_i^{(d)}`, indices starting at 1.
    pub fn symbol(i: usize, d: usize) -> Self {
        let mut p = Self::zero();
        p.add_term(Monomial::symbol(i, d), rat(1));
        p
    }

    pub fn from_terms<I: IntoIterator<Item = (Monomial, BigRational)>>(it: I) -> Self {
        let mut p = Self::zero();
        for (m, c) in it {
            p.add_term(m, c);
        }
        p
    }

    fn add_term(&mut self, m: Monomial, c: BigRational) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &BigRational)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, m: &Monomial) -> BigRational {
        self.terms.get(m).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Self { terms: self.terms.iter().map(|(m, v)| (m.clone(), v * c)).collect() }
    }

    /// Total x-derivative.
    pub fn total_derivative(&self) -> Self {
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            for (k, dm) in m.derivative() {
                out.add_term(dm, c * rat(k as i64));
            }
        }
        out
    }

    pub fn derivative_n(&self, n: usize) -> Self {
        (0..n).fold(self.clone(), |p, _| p.total_derivative())
    }

    /// Largest potential index occurring.
    pub fn max_index(&self) -> usize {
        self.terms.keys().flat_map(|m| m.0.iter().map(|((i, _), _)| *i)).max().unwrap_or(0)
    }

    /// Evaluate with `values[(i, d)]` supplying `u_i^{(d)}`.
    pub fn eval<F: Fn(Symbol) -> f64>(&self, value: F) -> f64 {
        self.terms
            .iter()
            .map(|(m, c)| {
                let v: f64 = m.0.iter().map(|(s, p)| value(*s).powi(*p as i32)).product();
                c.to_f64().unwrap_or(f64::NAN) * v
            })
            .sum()
    }

    /// Substitute concrete potentials (`potentials[i - 1]` for `u_i`).
    pub fn to_expr(&self, potentials: &[Expr], var: &str) -> Expr {
        let mut cache: BTreeMap<Symbol, Expr> = BTreeMap::new();
        let mut terms = Vec::with_capacity(self.terms.len());
        for (m, c) in &self.terms {
            let mut factors = vec![Expr::num(Number::Rat(c.clone()))];
            for &((i, d), p) in &m.0 {
                let e = cache
                    .entry((i, d))
                    .or_insert_with(|| potentials.get(i - 1).cloned().unwrap_or_else(Expr::zero).diff_n(var, d))
                    .clone();
                factors.push(e.powi(p as i32));
            }
            terms.push(Expr::product(factors));
        }
        Expr::sum(terms)
    }

    /// Display using `u` for a single potential and `u_i` otherwise.
    pub fn display(&self, single: bool) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut items: Vec<(&Monomial, &BigRational)> = self.terms.iter().collect();
        items.sort_by(|a, b| {
            let key = |m: &Monomial| {
                let first = m.0.first().map(|((i, _), _)| *i).unwrap_or(0);
                (m.degree(), m.weight(), std::cmp::Reverse(first))
            };
            key(a.0).cmp(&key(b.0)).then_with(|| a.0.cmp(b.0))
        });
        let mut out = String::new();
        for (k, (m, c)) in items.into_iter().enumerate() {
            let neg = c.is_negative();
            let mag = c.abs();
            if k == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            let mut parts: Vec<String> = Vec::new();
            if !mag.is_one() || m.0.is_empty() {
                parts.push(if mag.is_integer() {
                    mag.numer().to_string()
                } else {
                    format!("{}/{}", mag.numer(), mag.denom())
                });
            }
            for &((i, d), p) in &m.0 {
                let mut s = if single { "u".to_string() } else { format!("u_{i}") };
                if d <= 3 {
                    s.push_str(&"'".repeat(d));
                } else {
                    s.push_str(&format!("^({d})"));
                }
                if p > 1 {
                    s.push_str(&format!("^{p}"));
                }
                parts.push(s);
            }
            out.push_str(&parts.join("*"));
        }
        out
    }
}

impl fmt::Display for DiffPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.display(self.max_index() <= 1))
    }
}

impl Add for &DiffPolynomial {
    type Output = DiffPolynomial;
    fn add(self, o: &DiffPolynomial) -> DiffPolynomial {
        let mut out = self.clone();
        for (m, c) in &o.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }
}

impl Sub for &DiffPolynomial {
    type Output = DiffPolynomial;
    fn sub(self, o: &DiffPolynomial) -> DiffPolynomial {
        let mut out = self.clone();
        for (m, c) in &o.terms {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }
}

impl Neg for &DiffPolynomial {
    type Output = DiffPolynomial;
    fn neg(self) -> DiffPolynomial {
        self.scale(&rat(-1))
    }
}

impl Mul for &DiffPolynomial {
    type Output = DiffPolynomial;
    fn mul(self, o: &DiffPolynomial) -> DiffPolynomial {
        let mut out = DiffPolynomial::zero();
        for (a, ca) in &self.terms {
            for (b, cb) in &o.terms {
                out.add_term(a.mul(b), ca * cb);
            }
        }
        out
    }
}

/// Laurent series `sum_d c_d lambda^d` with differential-polynomial
/// coefficients. Degrees below `floor` are discarded by every operation.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FormalSeries {
    coeffs: BTreeMap<i32, DiffPolynomial>,
    floor: Option<i32>,
}

impl FormalSeries {
    pub fn new(floor: Option<i32>) -> Self {
        Self { coeffs: BTreeMap::new(), floor }
    }

    pub fn floor(&self) -> Option<i32> {
        self.floor
    }

    pub fn with_floor(&self, floor: Option<i32>) -> Self {
        let mut out = Self::new(floor);
        for (d, c) in &self.coeffs {
            out.set(*d, c.clone());
        }
        out
    }

    fn keeps(&self, d: i32) -> bool {
        self.floor.is_none_or(|f| d >= f)
    }

    pub fn set(&mut self, degree: i32, c: DiffPolynomial) {
        if c.is_zero() || !self.keeps(degree) {
            self.coeffs.remove(&degree);
        } else {
            self.coeffs.insert(degree, c);
        }
    }

    pub fn accumulate(&mut self, degree: i32, c: &DiffPolynomial) {
        if c.is_zero() || !self.keeps(degree) {
            return;
        }
        let sum = &self.coeff(degree) + c;
        self.set(degree, sum);
    }

    pub fn coeff(&self, degree: i32) -> DiffPolynomial {
        self.coeffs.get(&degree).cloned().unwrap_or_default()
    }

    /// Highest degree with a nonzero coefficient.
    pub fn leading(&self) -> Option<i32> {
        self.coeffs.keys().next_back().copied()
    }

    pub fn lowest(&self) -> Option<i32> {
        self.coeffs.keys().next().copied()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (i32, &DiffPolynomial)> {
        self.coeffs.iter().map(|(d, c)| (*d, c))
    }

    fn meet(&self, o: &FormalSeries) -> Option<i32> {
        match (self.floor, o.floor) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        }
    }

    pub fn add(&self, o: &FormalSeries) -> FormalSeries {
        let mut out = self.with_floor(self.meet(o));
        for (d, c) in &o.coeffs {
            out.accumulate(*d, c);
        }
        out
    }

    pub fn sub(&self, o: &FormalSeries) -> FormalSeries {
        self.add(&o.scale(&rat(-1)))
    }

    pub fn scale(&self, c: &BigRational) -> FormalSeries {
        let mut out = Self::new(self.floor);
        for (d, p) in &self.coeffs {
            out.set(*d, p.scale(c));
        }
        out
    }

    pub fn mul(&self, o: &FormalSeries) -> FormalSeries {
        let mut out = Self::new(self.meet(o));
        for (da, a) in &self.coeffs {
            for (db, b) in &o.coeffs {
                if out.keeps(da + db) {
                    out.accumulate(da + db, &(a * b));
                }
            }
        }
        out
    }

    /// Multiply by `lambda^k`.
    pub fn shift(&self, k: i32) -> FormalSeries {
        let mut out = Self::new(self.floor.map(|f| f + k));
        for (d, c) in &self.coeffs {
            out.set(d + k, c.clone());
        }
        out
    }

    /// Termwise total x-derivative.
    pub fn total_derivative(&self) -> FormalSeries {
        let mut out = Self::new(self.floor);
        for (d, c) in &self.coeffs {
            out.set(*d, c.total_derivative());
        }
        out
    }

    /// Evaluate as a function of `lambda` given the potential values.
    pub fn eval<F: Fn(Symbol) -> f64 + Copy>(&self, lambda: f64, value: F) -> f64 {
        self.coeffs.iter().map(|(d, c)| c.eval(value) * lambda.powi(*d)).sum()
    }
}
