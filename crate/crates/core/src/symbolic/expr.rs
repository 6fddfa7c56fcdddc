use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::SymbolicError;
use crate::numeric::{quadrature, Regularization};

/// A constant: exact rational whenever possible, otherwise a double.
#[derive(Debug, Clone)]
pub enum Number {
    Rat(BigRational),
    Real(f64),
}

impl Number {
    pub fn int(n: i64) -> Self {
        Number::Rat(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn ratio(p: i64, q: i64) -> Self {
        Number::Rat(BigRational::new(BigInt::from(p), BigInt::from(q)))
    }

    /// Exact when `v` is an integer of moderate size.
    pub fn from_f64(v: f64) -> Self {
        if v.fract() == 0.0 && v.abs() < 1e15 {
            Number::int(v as i64)
        } else {
            Number::Real(v)
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Number::Rat(r) => r.to_f64().unwrap_or(f64::NAN),
            Number::Real(v) => *v,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Number::Rat(r) => r.is_zero(),
            Number::Real(v) => *v == 0.0,
        }
    }

    pub fn is_one(&self) -> bool {
        match self {
            Number::Rat(r) => r.is_one(),
            Number::Real(v) => *v == 1.0,
        }
    }

    pub fn is_negative(&self) -> bool {
        match self {
            Number::Rat(r) => r.is_negative(),
            Number::Real(v) => *v < 0.0,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Number::Rat(_))
    }

    pub fn add(&self, o: &Number) -> Number {
        match (self, o) {
            (Number::Rat(a), Number::Rat(b)) => Number::Rat(a + b),
            _ => Number::Real(self.to_f64() + o.to_f64()),
        }
    }

    pub fn mul(&self, o: &Number) -> Number {
        match (self, o) {
            (Number::Rat(a), Number::Rat(b)) => Number::Rat(a * b),
            _ => Number::Real(self.to_f64() * o.to_f64()),
        }
    }

    pub fn neg(&self) -> Number {
        match self {
            Number::Rat(a) => Number::Rat(-a),
            Number::Real(v) => Number::Real(-v),
        }
    }

    /// `None` for a negative power of zero.
    pub fn powi(&self, n: i32) -> Option<Number> {
        if n < 0 && self.is_zero() {
            return None;
        }
        Some(match self {
            Number::Rat(a) => {
                let p = num_traits::pow(a.clone(), n.unsigned_abs() as usize);
                Number::Rat(if n < 0 { p.recip() } else { p })
            }
            Number::Real(v) => Number::Real(v.powi(n)),
        })
    }

    fn cmp_total(&self, o: &Number) -> Ordering {
        match (self, o) {
            (Number::Rat(a), Number::Rat(b)) => a.cmp(b),
            (Number::Rat(_), Number::Real(_)) => Ordering::Less,
            (Number::Real(_), Number::Rat(_)) => Ordering::Greater,
            (Number::Real(a), Number::Real(b)) => a.total_cmp(b),
        }
    }
}

impl fmt::Display for Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Number::Rat(r) if r.is_integer() => write!(f, "{}", r.numer()),
            Number::Rat(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            Number::Real(v) => write!(f, "{v:?}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Func {
    Exp,
    Log,
    Sqrt,
    Sin,
    Cos,
    Sinh,
    Cosh,
    Tanh,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
        }
    }

    pub fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "exp" => Func::Exp,
            "log" | "ln" => Func::Log,
            "sqrt" => Func::Sqrt,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            "tanh" => Func::Tanh,
            _ => return None,
        })
    }
}

#[derive(Debug)]
pub enum Node {
    Const(Number, f64),
    Var(String),
    Sum(Vec<Expr>),
    Product(Vec<Expr>),
    Pow(Expr, i32),
    Apply(Func, Expr),
    /// `int_{anchor}^{upper} integrand d(bound)`, evaluated by quadrature.
    Integral { integrand: Expr, bound: String, anchor: f64, upper: Expr },
}

/// Immutable, cheaply clonable expression tree.
///
/// Negation is a product with `-1` and division a power `-1`; constructors
/// fold constants and merge like terms and like factors.
#[derive(Clone)]
pub struct Expr(Arc<Node>);

pub type Env<'a> = [(&'a str, f64)];

const INTEGRAL_TOL: f64 = 1e-12;

impl Expr {
    fn wrap(n: Node) -> Expr {
        Expr(Arc::new(n))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn num(n: Number) -> Expr {
        let v = n.to_f64();
        Expr::wrap(Node::Const(n, v))
    }

    pub fn int(n: i64) -> Expr {
        Expr::num(Number::int(n))
    }

    pub fn ratio(p: i64, q: i64) -> Expr {
        Expr::num(Number::ratio(p, q))
    }

    pub fn real(v: f64) -> Expr {
        Expr::num(Number::from_f64(v))
    }

    pub fn zero() -> Expr {
        Expr::int(0)
    }

    pub fn one() -> Expr {
        Expr::int(1)
    }

    pub fn var(name: &str) -> Expr {
        Expr::wrap(Node::Var(name.to_string()))
    }

    pub fn as_number(&self) -> Option<&Number> {
        match self.node() {
            Node::Const(n, _) => Some(n),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_number().is_some_and(Number::is_zero)
    }

    pub fn is_one(&self) -> bool {
        self.as_number().is_some_and(Number::is_one)
    }

    pub fn add(&self, o: &Expr) -> Expr {
        Expr::sum(vec![self.clone(), o.clone()])
    }

    pub fn sub(&self, o: &Expr) -> Expr {
        Expr::sum(vec![self.clone(), o.neg()])
    }

    pub fn mul(&self, o: &Expr) -> Expr {
        Expr::product(vec![self.clone(), o.clone()])
    }

    pub fn div(&self, o: &Expr) -> Expr {
        Expr::product(vec![self.clone(), o.recip()])
    }

    pub fn neg(&self) -> Expr {
        Expr::product(vec![Expr::int(-1), self.clone()])
    }

    pub fn recip(&self) -> Expr {
        self.powi(-1)
    }

    pub fn scale(&self, c: f64) -> Expr {
        self.mul(&Expr::real(c))
    }

    pub fn apply(f: Func, arg: Expr) -> Expr {
        if let Some(n) = arg.as_number() {
            if n.is_zero() {
                match f {
                    Func::Exp | Func::Cos | Func::Cosh => return Expr::one(),
                    Func::Sin | Func::Sinh | Func::Tanh | Func::Sqrt => return Expr::zero(),
                    Func::Log => {}
                }
            }
            if n.is_one() && matches!(f, Func::Log) {
                return Expr::zero();
            }
            if n.is_one() && matches!(f, Func::Sqrt) {
                return Expr::one();
            }
        }
        if f == Func::Exp {
            match arg.node() {
                Node::Apply(Func::Log, inner) => return inner.clone(),
                Node::Product(fs) if fs.len() == 2 => {
                    if let (Node::Const(Number::Rat(n), _), Node::Apply(Func::Log, inner)) = (fs[0].node(), fs[1].node()) {
                        if let Some(k) = n.to_integer().to_i32().filter(|_| n.is_integer()) {
                            return inner.powi(k);
                        }
                    }
                }
                _ => {}
            }
        }
        Expr::wrap(Node::Apply(f, arg))
    }

    pub fn exp(&self) -> Expr {
        Expr::apply(Func::Exp, self.clone())
    }
    pub fn log(&self) -> Expr {
        Expr::apply(Func::Log, self.clone())
    }
    pub fn sqrt(&self) -> Expr {
        Expr::apply(Func::Sqrt, self.clone())
    }
    pub fn sin(&self) -> Expr {
        Expr::apply(Func::Sin, self.clone())
    }
    pub fn cos(&self) -> Expr {
        Expr::apply(Func::Cos, self.clone())
    }
    pub fn sinh(&self) -> Expr {
        Expr::apply(Func::Sinh, self.clone())
    }
    pub fn cosh(&self) -> Expr {
        Expr::apply(Func::Cosh, self.clone())
    }
    pub fn tanh(&self) -> Expr {
        Expr::apply(Func::Tanh, self.clone())
    }

    /// `int_{anchor}^{var} integrand d(var)` as a function of `var`.
    pub fn integral(integrand: Expr, var: &str, anchor: f64) -> Expr {
        if integrand.is_zero() {
            return Expr::zero();
        }
        let bound = format!("_s{}", integrand.binding_depth() + 1);
        let body = integrand.subs(var, &Expr::var(&bound));
        Expr::wrap(Node::Integral { integrand: body, bound, anchor, upper: Expr::var(var) })
    }

    fn binding_depth(&self) -> usize {
        match self.node() {
            Node::Const(..) | Node::Var(_) => 0,
            Node::Sum(ts) | Node::Product(ts) => ts.iter().map(Expr::binding_depth).max().unwrap_or(0),
            Node::Pow(b, _) | Node::Apply(_, b) => b.binding_depth(),
            Node::Integral { integrand, upper, .. } => (integrand.binding_depth() + 1).max(upper.binding_depth()),
        }
    }

    pub fn powi(&self, n: i32) -> Expr {
        if n == 0 {
            return Expr::one();
        }
        if n == 1 {
            return self.clone();
        }
        match self.node() {
            Node::Const(c, _) => match c.powi(n) {
                Some(v) => Expr::num(v),
                None => Expr::wrap(Node::Pow(self.clone(), n)),
            },
            Node::Pow(b, m) => b.powi(m * n),
            Node::Product(fs) => Expr::product(fs.iter().map(|f| f.powi(n)).collect()),
            Node::Apply(Func::Exp, a) => a.scale(n as f64).exp(),
            _ => Expr::wrap(Node::Pow(self.clone(), n)),
        }
    }

    pub fn sum(terms: Vec<Expr>) -> Expr {
        let mut flat = Vec::with_capacity(terms.len());
        let mut constant = Number::int(0);
        for t in terms {
            match t.node() {
                Node::Sum(inner) => {
                    for s in inner {
                        match s.node() {
                            Node::Const(c, _) => constant = constant.add(c),
                            _ => flat.push(s.clone()),
                        }
                    }
                }
                Node::Const(c, _) => constant = constant.add(c),
                _ => flat.push(t),
            }
        }
        let mut split: Vec<(Expr, Number)> = flat.iter().map(split_coefficient).collect();
        split.sort_by(|a, b| a.0.cmp(&b.0));
        let mut merged: Vec<(Expr, Number)> = Vec::with_capacity(split.len());
        for (rest, c) in split {
            match merged.last_mut() {
                Some((r, acc)) if *r == rest => *acc = acc.add(&c),
                _ => merged.push((rest, c)),
            }
        }
        let mut out: Vec<Expr> = Vec::with_capacity(merged.len() + 1);
        if !constant.is_zero() {
            out.push(Expr::num(constant));
        }
        for (rest, c) in merged {
            if c.is_zero() {
                continue;
            }
            out.push(join_coefficient(c, rest));
        }
        match out.len() {
            0 => Expr::zero(),
            1 => out.pop().expect("one term"),
            _ => Expr::wrap(Node::Sum(out)),
        }
    }

    pub fn product(factors: Vec<Expr>) -> Expr {
        let mut coeff = Number::int(1);
        let mut powers: Vec<(Expr, i32)> = Vec::new();
        let mut exp_args: Vec<Expr> = Vec::new();
        let mut stack: Vec<Expr> = factors;
        while let Some(f) = stack.pop() {
            match f.node() {
                Node::Const(c, _) => coeff = coeff.mul(c),
                Node::Product(inner) => stack.extend(inner.iter().cloned()),
                Node::Apply(Func::Exp, a) => exp_args.push(a.clone()),
                Node::Pow(b, n) => powers.push((b.clone(), *n)),
                _ => powers.push((f.clone(), 1)),
            }
        }
        if coeff.is_zero() {
            return Expr::zero();
        }
        if !exp_args.is_empty() {
            let e = Expr::sum(exp_args);
            match e.node() {
                Node::Const(..) if e.is_zero() => {}
                _ => powers.push((Expr::wrap(Node::Apply(Func::Exp, e)), 1)),
            }
        }
        powers.sort_by(|a, b| a.0.cmp(&b.0));
        let mut merged: Vec<(Expr, i32)> = Vec::with_capacity(powers.len());
        for (b, n) in powers {
            match merged.last_mut() {
                Some((mb, acc)) if *mb == b => *acc += n,
                _ => merged.push((b, n)),
            }
        }
        let mut out: Vec<Expr> = Vec::with_capacity(merged.len() + 1);
        for (b, n) in merged {
            match n {
                0 => {}
                1 => out.push(b),
                _ => out.push(Expr::wrap(Node::Pow(b, n))),
            }
        }
        if out.is_empty() {
            return Expr::num(coeff);
        }
        if out.len() == 1 {
            if coeff.is_one() {
                return out.pop().expect("one factor");
            }
            // a bare number times a sum is distributed so that like terms meet
            if let Node::Sum(ts) = out[0].node() {
                let c = Expr::num(coeff);
                return Expr::sum(ts.iter().map(|t| c.mul(t)).collect());
            }
        }
        if !coeff.is_one() {
            out.insert(0, Expr::num(coeff));
        }
        Expr::wrap(Node::Product(out))
    }

    pub fn depends_on(&self, v: &str) -> bool {
        match self.node() {
            Node::Const(..) => false,
            Node::Var(n) => n == v,
            Node::Sum(ts) | Node::Product(ts) => ts.iter().any(|t| t.depends_on(v)),
            Node::Pow(b, _) | Node::Apply(_, b) => b.depends_on(v),
            Node::Integral { integrand, bound, upper, .. } => {
                upper.depends_on(v) || (bound != v && integrand.depends_on(v))
            }
        }
    }

    /// Free variable names in first-seen order.
    pub fn variables(&self) -> Vec<String> {
        fn walk(e: &Expr, out: &mut Vec<String>) {
            match e.node() {
                Node::Const(..) => {}
                Node::Var(n) => {
                    if !out.contains(n) {
                        out.push(n.clone())
                    }
                }
                Node::Sum(ts) | Node::Product(ts) => ts.iter().for_each(|t| walk(t, out)),
                Node::Pow(b, _) | Node::Apply(_, b) => walk(b, out),
                Node::Integral { integrand, bound, upper, .. } => {
                    walk(upper, out);
                    let mut inner = Vec::new();
                    walk(integrand, &mut inner);
                    for n in inner {
                        if n != *bound && !out.contains(&n) {
                            out.push(n);
                        }
                    }
                }
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out
    }

    pub fn contains_integral(&self) -> bool {
        match self.node() {
            Node::Const(..) | Node::Var(_) => false,
            Node::Sum(ts) | Node::Product(ts) => ts.iter().any(Expr::contains_integral),
            Node::Pow(b, _) | Node::Apply(_, b) => b.contains_integral(),
            Node::Integral { .. } => true,
        }
    }

    /// Exact symbolic derivative.
    pub fn diff(&self, v: &str) -> Expr {
        if !self.depends_on(v) {
            return Expr::zero();
        }
        match self.node() {
            Node::Const(..) => Expr::zero(),
            Node::Var(_) => Expr::one(),
            Node::Sum(ts) => Expr::sum(ts.iter().map(|t| t.diff(v)).collect()),
            Node::Product(fs) => {
                let mut terms = Vec::with_capacity(fs.len());
                for i in 0..fs.len() {
                    let d = fs[i].diff(v);
                    if d.is_zero() {
                        continue;
                    }
                    let mut parts: Vec<Expr> = fs.clone();
                    parts[i] = d;
                    terms.push(Expr::product(parts));
                }
                Expr::sum(terms)
            }
            Node::Pow(b, n) => Expr::product(vec![Expr::int(*n as i64), b.powi(n - 1), b.diff(v)]),
            Node::Apply(f, a) => {
                let da = a.diff(v);
                let outer = match f {
                    Func::Exp => self.clone(),
                    Func::Log => a.recip(),
                    Func::Sqrt => self.recip().mul(&Expr::ratio(1, 2)),
                    Func::Sin => a.cos(),
                    Func::Cos => a.sin().neg(),
                    Func::Sinh => a.cosh(),
                    Func::Cosh => a.sinh(),
                    Func::Tanh => Expr::one().sub(&self.powi(2)),
                };
                outer.mul(&da)
            }
            Node::Integral { integrand, bound, anchor, upper } => {
                let edge = integrand.subs(bound, upper).mul(&upper.diff(v));
                let d = integrand.diff(v);
                if bound == v || d.is_zero() {
                    return edge;
                }
                let inner = Expr::wrap(Node::Integral {
                    integrand: d,
                    bound: bound.clone(),
                    anchor: *anchor,
                    upper: upper.clone(),
                });
                edge.add(&inner)
            }
        }
    }

    pub fn diff_n(&self, v: &str, n: usize) -> Expr {
        (0..n).fold(self.clone(), |e, _| e.diff(v))
    }

    /// Replace every free occurrence of `v` by `with`.
    pub fn subs(&self, v: &str, with: &Expr) -> Expr {
        if !self.depends_on(v) {
            return self.clone();
        }
        match self.node() {
            Node::Const(..) => self.clone(),
            Node::Var(n) => {
                if n == v {
                    with.clone()
                } else {
                    self.clone()
                }
            }
            Node::Sum(ts) => Expr::sum(ts.iter().map(|t| t.subs(v, with)).collect()),
            Node::Product(ts) => Expr::product(ts.iter().map(|t| t.subs(v, with)).collect()),
            Node::Pow(b, n) => b.subs(v, with).powi(*n),
            Node::Apply(f, a) => Expr::apply(*f, a.subs(v, with)),
            Node::Integral { integrand, bound, anchor, upper } => {
                let body = if bound == v { integrand.clone() } else { integrand.subs(v, with) };
                if body.is_zero() {
                    return Expr::zero();
                }
                Expr::wrap(Node::Integral {
                    integrand: body,
                    bound: bound.clone(),
                    anchor: *anchor,
                    upper: upper.subs(v, with),
                })
            }
        }
    }

    /// Evaluate in double precision.
    pub fn eval(&self, env: &Env) -> Result<f64, SymbolicError> {
        match self.node() {
            Node::Const(_, v) => Ok(*v),
            Node::Var(n) => lookup(env, n),
            Node::Sum(ts) => {
                let mut s = 0.0;
                for t in ts {
                    s += t.eval(env)?;
                }
                Ok(s)
            }
            Node::Product(ts) => {
                let mut p = 1.0;
                for t in ts {
                    p *= t.eval(env)?;
                }
                Ok(p)
            }
            Node::Pow(b, n) => {
                let v = b.eval(env)?;
                if *n < 0 && v == 0.0 {
                    return Err(SymbolicError::DivisionByZero);
                }
                Ok(v.powi(*n))
            }
            Node::Apply(f, a) => {
                let v = a.eval(env)?;
                match f {
                    Func::Exp => Ok(v.exp()),
                    Func::Log if v <= 0.0 => Err(SymbolicError::Domain { func: "log", arg: v }),
                    Func::Log => Ok(v.ln()),
                    Func::Sqrt if v < 0.0 => Err(SymbolicError::Domain { func: "sqrt", arg: v }),
                    Func::Sqrt => Ok(v.sqrt()),
                    Func::Sin => Ok(v.sin()),
                    Func::Cos => Ok(v.cos()),
                    Func::Sinh => Ok(v.sinh()),
                    Func::Cosh => Ok(v.cosh()),
                    Func::Tanh => Ok(v.tanh()),
                }
            }
            Node::Integral { integrand, bound, anchor, upper } => {
                let upper = upper.eval(env)?;
                let mut local: Vec<(&str, f64)> = env.to_vec();
                local.push((bound.as_str(), 0.0));
                let slot = local.len() - 1;
                let failure = std::cell::Cell::new(None);
                let f = |s: f64| {
                    let mut l = local.clone();
                    l[slot].1 = s;
                    match integrand.eval(&l) {
                        Ok(v) => v,
                        Err(e) => {
                            failure.set(Some(e));
                            0.0
                        }
                    }
                };
                let v = quadrature(f, *anchor, upper, INTEGRAL_TOL, Regularization::None)?;
                match failure.into_inner() {
                    Some(e) => Err(e),
                    None => Ok(v),
                }
            }
        }
    }

    /// Evaluate a function of the single variable `v`.
    pub fn eval_at(&self, v: &str, x: f64) -> Result<f64, SymbolicError> {
        self.eval(&[(v, x)])
    }

    /// Fully distribute products and positive integer powers over sums.
    pub fn expand(&self) -> Expr {
        match self.node() {
            Node::Sum(ts) => Expr::sum(ts.iter().map(Expr::expand).collect()),
            Node::Product(fs) => fs.iter().fold(Expr::one(), |acc, f| distribute(&acc, &f.expand())),
            Node::Pow(b, n) if *n > 1 => {
                let e = b.expand();
                if matches!(e.node(), Node::Sum(_)) {
                    (1..*n).fold(e.clone(), |acc, _| distribute(&acc, &e))
                } else {
                    e.powi(*n)
                }
            }
            Node::Pow(b, n) => b.expand().powi(*n),
            Node::Apply(f, a) => Expr::apply(*f, a.expand()),
            _ => self.clone(),
        }
    }

    fn rank(&self) -> u8 {
        match self.node() {
            Node::Const(..) => 0,
            Node::Var(_) => 1,
            Node::Pow(..) => 2,
            Node::Apply(..) => 3,
            Node::Product(_) => 4,
            Node::Sum(_) => 5,
            Node::Integral { .. } => 6,
        }
    }
}

fn distribute(a: &Expr, b: &Expr) -> Expr {
    let parts = |e: &Expr| match e.node() {
        Node::Sum(ts) => ts.clone(),
        _ => vec![e.clone()],
    };
    let (pa, pb) = (parts(a), parts(b));
    let mut out = Vec::with_capacity(pa.len() * pb.len());
    for x in &pa {
        for y in &pb {
            out.push(x.mul(y));
        }
    }
    Expr::sum(out)
}

fn lookup(env: &Env, name: &str) -> Result<f64, SymbolicError> {
    env.iter()
        .rev()
        .find(|(n, _)| *n == name)
        .map(|(_, v)| *v)
        .ok_or_else(|| SymbolicError::Unbound(name.to_string()))
}

fn split_coefficient(t: &Expr) -> (Expr, Number) {
    if let Node::Product(fs) = t.node() {
        if let Node::Const(c, _) = fs[0].node() {
            let rest = if fs.len() == 2 { fs[1].clone() } else { Expr::wrap(Node::Product(fs[1..].to_vec())) };
            return (rest, c.clone());
        }
    }
    (t.clone(), Number::int(1))
}

fn join_coefficient(c: Number, rest: Expr) -> Expr {
    if c.is_one() {
        return rest;
    }
    let mut fs = vec![Expr::num(c)];
    match rest.node() {
        Node::Product(inner) => fs.extend(inner.iter().cloned()),
        _ => fs.push(rest),
    }
    Expr::wrap(Node::Product(fs))
}

impl PartialEq for Expr {
    fn eq(&self, o: &Expr) -> bool {
        Arc::ptr_eq(&self.0, &o.0) || self.cmp(o) == Ordering::Equal
    }
}

impl Eq for Expr {}

impl PartialOrd for Expr {
    fn partial_cmp(&self, o: &Expr) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl Ord for Expr {
    fn cmp(&self, o: &Expr) -> Ordering {
        if Arc::ptr_eq(&self.0, &o.0) {
            return Ordering::Equal;
        }
        let r = self.rank().cmp(&o.rank());
        if r != Ordering::Equal {
            return r;
        }
        match (self.node(), o.node()) {
            (Node::Const(a, _), Node::Const(b, _)) => a.cmp_total(b),
            (Node::Var(a), Node::Var(b)) => a.cmp(b),
            (Node::Sum(a), Node::Sum(b)) | (Node::Product(a), Node::Product(b)) => a.cmp(b),
            (Node::Pow(a, n), Node::Pow(b, m)) => a.cmp(b).then(n.cmp(m)),
            (Node::Apply(f, a), Node::Apply(g, b)) => f.cmp(g).then_with(|| a.cmp(b)),
            (
                Node::Integral { integrand: a, bound: va, anchor: x, upper: ua },
                Node::Integral { integrand: b, bound: vb, anchor: y, upper: ub },
            ) => va.cmp(vb).then(x.total_cmp(y)).then_with(|| ua.cmp(ub)).then_with(|| a.cmp(b)),
            _ => unreachable!("ranks are equal"),
        }
    }
}

impl std::hash::Hash for Expr {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.to_string().hash(state)
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({self})")
    }
}

fn needs_parens_in_product(e: &Expr) -> bool {
    match e.node() {
        Node::Sum(_) => true,
        Node::Const(n, _) => n.is_negative() || matches!(n, Number::Rat(r) if !r.is_integer()),
        Node::Product(_) => true,
        _ => false,
    }
}

fn write_factor(f: &mut fmt::Formatter<'_>, e: &Expr) -> fmt::Result {
    if needs_parens_in_product(e) {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

fn write_product(f: &mut fmt::Formatter<'_>, fs: &[Expr]) -> fmt::Result {
    let mut coeff: Option<&Number> = None;
    let mut num: Vec<Expr> = Vec::new();
    let mut den: Vec<Expr> = Vec::new();
    for e in fs {
        match e.node() {
            Node::Const(c, _) => coeff = Some(c),
            Node::Pow(b, n) if *n < 0 => den.push(b.powi(-n)),
            _ => num.push(e.clone()),
        }
    }
    let mut wrote = false;
    if let Some(c) = coeff {
        if c.is_negative() {
            write!(f, "-")?;
        }
        let a = c.neg();
        let mag = if c.is_negative() { &a } else { c };
        if !mag.is_one() || num.is_empty() {
            match mag {
                Number::Rat(r) if !r.is_integer() => write!(f, "{}/{}", r.numer(), r.denom())?,
                _ => write!(f, "{mag}")?,
            }
            wrote = true;
        }
    }
    for e in &num {
        if wrote {
            write!(f, "*")?;
        }
        write_factor(f, e)?;
        wrote = true;
    }
    if !wrote {
        write!(f, "1")?;
    }
    if !den.is_empty() {
        write!(f, "/")?;
        if den.len() == 1 && !needs_parens_in_product(&den[0]) {
            write!(f, "{}", den[0])?;
        } else {
            write!(f, "(")?;
            for (i, d) in den.iter().enumerate() {
                if i > 0 {
                    write!(f, "*")?;
                }
                write_factor(f, d)?;
            }
            write!(f, ")")?;
        }
    }
    Ok(())
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node() {
            Node::Const(n, _) => write!(f, "{n}"),
            Node::Var(n) => write!(f, "{n}"),
            Node::Sum(ts) => {
                for (i, t) in ts.iter().enumerate() {
                    let s = t.to_string();
                    if i == 0 {
                        write!(f, "{s}")?;
                    } else if let Some(rest) = s.strip_prefix('-') {
                        write!(f, " - {rest}")?;
                    } else {
                        write!(f, " + {s}")?;
                    }
                }
                Ok(())
            }
            Node::Product(fs) => write_product(f, fs),
            Node::Pow(b, n) => {
                if *n < 0 {
                    return write_product(f, std::slice::from_ref(self));
                }
                match b.node() {
                    Node::Var(_) | Node::Apply(..) => write!(f, "{b}^{n}"),
                    Node::Const(c, _) if !c.is_negative() && c.is_exact() => write!(f, "({b})^{n}"),
                    _ => write!(f, "({b})^{n}"),
                }
            }
            Node::Apply(func, a) => write!(f, "{}({a})", func.name()),
            Node::Integral { integrand, bound, anchor, upper } => {
                write!(f, "int({integrand}, {bound}, {anchor:?}, {upper})")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> Expr {
        Expr::var("x")
    }

    #[test]
    fn power_rule() {
        assert_eq!(x().powi(2).diff("x"), Expr::int(2).mul(&x()));
    }

    #[test]
    fn tanh_chain_rule() {
        let k = Expr::var("k");
        let e = k.mul(&x()).tanh();
        let want = k.mul(&Expr::one().sub(&k.mul(&x()).tanh().powi(2)));
        let d = e.diff("x");
        for (kv, xv) in [(0.5, 0.3), (2.0, -1.1)] {
            let env = [("k", kv), ("x", xv)];
            assert!((d.eval(&env).unwrap() - want.eval(&env).unwrap()).abs() < 1e-15);
        }
    }

    #[test]
    fn gaussian_derivative_matches_finite_difference() {
        let g = x().powi(2).neg().exp();
        let d = g.diff("x").eval_at("x", 1.0).unwrap();
        let h = 1e-6;
        let fd = (g.eval_at("x", 1.0 + h).unwrap() - g.eval_at("x", 1.0 - h).unwrap()) / (2.0 * h);
        assert!((d - fd).abs() < 1e-9);
        assert!((d + 0.7357588823).abs() < 1e-9);
    }

    #[test]
    fn basic_evaluation() {
        assert_eq!(x().add(&Expr::one()).eval_at("x", 2.0).unwrap(), 3.0);
        assert_eq!(Expr::zero().cosh().eval(&[]).unwrap(), 1.0);
        let u = Expr::int(-2).mul(&x().cosh().powi(-2));
        assert_eq!(u.eval_at("x", 0.0).unwrap(), -2.0);
    }

    #[test]
    fn rational_constants_fold_exactly() {
        let third = Expr::ratio(1, 3);
        let s = Expr::sum(vec![third.clone(), third.clone(), third]);
        assert!(s.is_one());
        let p = Expr::ratio(2, 3).mul(&Expr::ratio(3, 2));
        assert!(p.is_one());
    }

    #[test]
    fn like_terms_cancel() {
        let e = x().sin().mul(&x()).sub(&x().mul(&x().sin()));
        assert!(e.is_zero());
        let f = x().powi(3).div(&x().powi(3));
        assert!(f.is_one());
        let g = x().exp().mul(&x().neg().exp());
        assert!(g.is_one());
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(Expr::int(-1).log().eval(&[]), Err(SymbolicError::Domain { .. })));
        assert!(matches!(x().recip().eval_at("x", 0.0), Err(SymbolicError::DivisionByZero)));
        assert!(matches!(x().eval(&[]), Err(SymbolicError::Unbound(_))));
    }

    #[test]
    fn integral_node_differentiates_to_integrand() {
        let g = x().powi(2).neg().exp();
        let i = Expr::integral(g.clone(), "x", 0.0);
        assert_eq!(i.diff("x"), g);
        let v = i.eval_at("x", 3.0).unwrap();
        assert!((v - std::f64::consts::PI.sqrt() / 2.0).abs() < 1e-4);
    }

    #[test]
    fn expansion_distributes() {
        let e = x().add(&Expr::one()).powi(2).expand();
        let want = Expr::sum(vec![x().powi(2), Expr::int(2).mul(&x()), Expr::one()]);
        assert_eq!(e, want);
    }

    #[test]
    fn substitution() {
        let e = x().powi(2).add(&Expr::var("y"));
        let s = e.subs("x", &Expr::var("y").add(&Expr::one()));
        assert!((s.eval(&[("y", 2.0)]).unwrap() - 11.0).abs() < 1e-15);
    }

    #[test]
    fn display_is_readable() {
        let e = Expr::ratio(1, 2).mul(&Expr::var("u")).sub(&x().recip());
        assert_eq!(e.to_string(), "1/2*u - 1/x");
    }

    mod random {
        use super::*;
        use proptest::prelude::*;

        fn arb_expr() -> impl Strategy<Value = Expr> {
            let leaf = prop_oneof![
                Just(Expr::var("x")),
                (-4i64..=4, 1i64..=3).prop_map(|(p, q)| Expr::ratio(p, q)),
            ];
            leaf.prop_recursive(4, 24, 2, |inner| {
                prop_oneof![
                    (inner.clone(), inner.clone()).prop_map(|(a, b)| a.add(&b)),
                    (inner.clone(), inner.clone()).prop_map(|(a, b)| a.mul(&b)),
                    inner.clone().prop_map(|a| a.sin()),
                    inner.clone().prop_map(|a| a.tanh()),
                    inner.clone().prop_map(|a| a.cosh()),
                    inner.clone().prop_map(|a| a.mul(&Expr::ratio(1, 4)).exp()),
                    inner.clone().prop_map(|a| a.powi(2)),
                    inner.prop_map(|a| a.powi(2).add(&Expr::one()).recip()),
                ]
            })
        }

        proptest! {
            #[test]
            fn derivative_matches_central_difference(e in arb_expr(), x in -1.5f64..1.5) {
                let d = e.diff("x");
                let h = 1e-6;
                let (Ok(fp), Ok(fm), Ok(dv)) = (e.eval_at("x", x + h), e.eval_at("x", x - h), d.eval_at("x", x)) else {
                    return Ok(());
                };
                prop_assume!(fp.abs() < 1e6 && fm.abs() < 1e6);
                let fd = (fp - fm) / (2.0 * h);
                let scale = dv.abs().max(fp.abs()).max(1.0);
                prop_assert!((fd - dv).abs() <= 1e-7 * scale, "{e}: {dv} vs {fd}");
            }
        }
    }
}
