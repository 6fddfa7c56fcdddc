use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::{Map, Value};

/// C's `%.17g`.
pub fn fmt_g17(v: f64) -> String {
    const P: i32 = 17;
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.*e}", (P - 1) as usize, v);
    let (mant, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..P).contains(&exp) {
        let fixed = format!("{:.*}", (P - 1 - exp) as usize, v);
        trim_zeros(&fixed).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mant), exp.abs())
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Columns of equal length, written as CSV.
#[derive(Debug, Default)]
pub struct Table {
    pub names: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl Table {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn column(mut self, name: &str, values: Vec<f64>) -> Self {
        self.names.push(name.to_string());
        self.columns.push(values);
        self
    }

    pub fn to_csv(&self) -> Result<String, String> {
        let rows = self.columns.first().map_or(0, Vec::len);
        if self.columns.iter().any(|c| c.len() != rows) {
            return Err("table columns differ in length".into());
        }
        let mut out = self.names.join(",");
        out.push('\n');
        for r in 0..rows {
            let line: Vec<String> = self.columns.iter().map(|c| fmt_g17(c[r])).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        Ok(out)
    }
}

#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tol: f64,
    pub pass: bool,
}

impl Check {
    /// Passes when `value <= tol`.
    pub fn at_most(name: &str, value: f64, tol: f64) -> Self {
        Check { name: name.into(), value, tol, pass: value.is_finite() && value <= tol }
    }

    /// Passes when `value >= tol`.
    pub fn at_least(name: &str, value: f64, tol: f64) -> Self {
        Check { name: name.into(), value, tol, pass: value >= tol }
    }

    pub fn holds(name: &str, ok: bool) -> Self {
        Check { name: name.into(), value: if ok { 0.0 } else { 1.0 }, tol: 0.0, pass: ok }
    }
}

/// JSON report: declared fields in insertion order, then `checks`.
#[derive(Debug)]
pub struct Report {
    pub fields: Map<String, Value>,
    pub checks: Vec<Check>,
}

pub fn num(v: f64) -> Value {
    serde_json::Number::from_f64(v).map_or(Value::Null, Value::Number)
}

impl Report {
    pub fn new(command: &str) -> Self {
        let mut fields = Map::new();
        fields.insert("command".into(), Value::String(command.into()));
        Report { fields, checks: vec![] }
    }

    pub fn field(&mut self, key: &str, v: impl Into<Value>) {
        self.fields.insert(key.into(), v.into());
    }

    pub fn number(&mut self, key: &str, v: f64) {
        self.fields.insert(key.into(), num(v));
    }

    pub fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_json(&self) -> Value {
        let mut m = self.fields.clone();
        let checks = self
            .checks
            .iter()
            .map(|c| {
                let mut o = Map::new();
                o.insert("name".into(), Value::String(c.name.clone()));
                o.insert("value".into(), num(c.value));
                o.insert("tol".into(), num(c.tol));
                o.insert("pass".into(), Value::Bool(c.pass));
                Value::Object(o)
            })
            .collect();
        m.insert("checks".into(), Value::Array(checks));
        Value::Object(m)
    }
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> std::io::Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let mut f = fs::File::create(&path)?;
    f.write_all(contents.as_bytes())?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g17_matches_printf() {
        assert_eq!(fmt_g17(-2.0), "-2");
        assert_eq!(fmt_g17(0.1), "0.10000000000000001");
        assert_eq!(fmt_g17(1e-5), "1.0000000000000001e-05");
        assert_eq!(fmt_g17(1.5e20), "1.5e+20");
        assert_eq!(fmt_g17(123456.0), "123456");
        assert_eq!(fmt_g17(0.0), "0");
        assert_eq!(fmt_g17(1e16), "10000000000000000");
        assert_eq!(fmt_g17(1e17), "1e+17");
        assert_eq!(fmt_g17(f64::NAN), "nan");
    }

    #[test]
    fn csv_layout() {
        let t = Table::new().column("x", vec![0.0, 0.5]).column("u", vec![-2.0, 1.25]);
        assert_eq!(t.to_csv().unwrap(), "x,u\n0,-2\n0.5,1.25\n");
        let empty = Table::new().column("x", vec![]).column("u", vec![]);
        assert_eq!(empty.to_csv().unwrap(), "x,u\n");
        assert!(Table::new().column("x", vec![1.0]).column("u", vec![]).to_csv().is_err());
    }

    #[test]
    fn report_schema() {
        let mut r = Report::new("demo");
        r.number("period", 2.5);
        r.check(Check::at_most("residual", 1e-12, 1e-8));
        let j = r.to_json();
        let keys: Vec<&String> = j.as_object().unwrap().keys().collect();
        assert_eq!(keys, ["command", "period", "checks"]);
        let c = &j["checks"][0];
        assert_eq!(c["name"], "residual");
        assert_eq!(c["pass"], true);
        assert!(r.passed());
    }
}
