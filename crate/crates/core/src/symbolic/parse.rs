use num_bigint::BigInt;
use num_rational::BigRational;

use super::expr::{Expr, Func, Number};
use super::SymbolicError;

/// Parse an infix expression such as `-2/cosh(x)^2 + 1/2*u`.
///
/// Decimal literals become exact rationals; powers take integer exponents;
/// `pi` is the only named constant.
pub fn parse(src: &str) -> Result<Expr, SymbolicError> {
    let mut p = Parser { s: src.as_bytes(), pos: 0 };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.s.len() {
        return Err(p.err("trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> SymbolicError {
        SymbolicError::Parse { pos: self.pos, msg: msg.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.s.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr, SymbolicError> {
        let mut terms = vec![self.term()?];
        loop {
            if self.eat(b'+') {
                terms.push(self.term()?);
            } else if self.eat(b'-') {
                terms.push(self.term()?.neg());
            } else {
                return Ok(Expr::sum(terms));
            }
        }
    }

    fn term(&mut self) -> Result<Expr, SymbolicError> {
        let mut acc = self.unary()?;
        loop {
            if self.eat(b'*') {
                acc = acc.mul(&self.unary()?);
            } else if self.eat(b'/') {
                acc = acc.div(&self.unary()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, SymbolicError> {
        if self.eat(b'-') {
            return Ok(self.unary()?.neg());
        }
        if self.eat(b'+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, SymbolicError> {
        let base = self.atom()?;
        if !self.eat(b'^') {
            return Ok(base);
        }
        let paren = self.eat(b'(');
        let neg = self.eat(b'-');
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        let digits = std::str::from_utf8(&self.s[start..self.pos]).expect("ascii digits");
        let n: i32 = digits.parse().map_err(|_| self.err("expected integer exponent"))?;
        if paren && !self.eat(b')') {
            return Err(self.err("expected `)`"));
        }
        Ok(base.powi(if neg { -n } else { n }))
    }

    fn atom(&mut self) -> Result<Expr, SymbolicError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.err("expected `)`"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while self.pos < self.s.len() && (self.s[self.pos].is_ascii_alphanumeric() || self.s[self.pos] == b'_') {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.s[start..self.pos]).expect("ascii identifier");
                if let Some(f) = Func::from_name(name) {
                    if !self.eat(b'(') {
                        return Err(self.err("expected `(` after function name"));
                    }
                    let arg = self.expr()?;
                    if !self.eat(b')') {
                        return Err(self.err("expected `)`"));
                    }
                    return Ok(Expr::apply(f, arg));
                }
                if name == "pi" {
                    return Ok(Expr::num(Number::Real(std::f64::consts::PI)));
                }
                Ok(Expr::var(name))
            }
            _ => Err(self.err("expected expression")),
        }
    }

    fn number(&mut self) -> Result<Expr, SymbolicError> {
        let start = self.pos;
        let mut mantissa = String::new();
        let mut frac_digits = 0i32;
        let mut seen_dot = false;
        while self.pos < self.s.len() {
            let c = self.s[self.pos];
            if c.is_ascii_digit() {
                mantissa.push(c as char);
                if seen_dot {
                    frac_digits += 1;
                }
            } else if c == b'.' && !seen_dot {
                seen_dot = true;
            } else {
                break;
            }
            self.pos += 1;
        }
        if mantissa.is_empty() {
            self.pos = start;
            return Err(self.err("malformed number"));
        }
        let mut exp10 = -frac_digits;
        if self.pos < self.s.len() && (self.s[self.pos] == b'e' || self.s[self.pos] == b'E') {
            let save = self.pos;
            self.pos += 1;
            let mut sign = 1;
            if self.pos < self.s.len() && (self.s[self.pos] == b'-' || self.s[self.pos] == b'+') {
                if self.s[self.pos] == b'-' {
                    sign = -1;
                }
                self.pos += 1;
            }
            let ds = self.pos;
            while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if ds == self.pos {
                self.pos = save;
            } else {
                let e: i32 = std::str::from_utf8(&self.s[ds..self.pos])
                    .expect("ascii digits")
                    .parse()
                    .map_err(|_| self.err("exponent too large"))?;
                exp10 += sign * e;
            }
        }
        let m: BigInt = mantissa.parse().expect("digit string");
        let ten = BigRational::from_integer(BigInt::from(10));
        let scale = num_traits::pow(ten, exp10.unsigned_abs() as usize);
        let r = BigRational::from_integer(m);
        let r = if exp10 < 0 { r / scale } else { r * scale };
        Ok(Expr::num(Number::Rat(r)))
    }
}
