use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::Value;

/// `min:max:step`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl std::str::FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("grid '{s}' is not min:max:step"));
        }
        let v: Vec<f64> = parts
            .iter()
            .map(|p| p.trim().parse::<f64>().map_err(|e| format!("grid '{s}': {e}")))
            .collect::<Result<_, _>>()?;
        let g = Grid { min: v[0], max: v[1], step: v[2] };
        if !v.iter().all(|x| x.is_finite()) || !(g.min < g.max) || !(g.step > 0.0) {
            return Err(format!("grid '{s}' needs min < max and a positive step"));
        }
        Ok(g)
    }
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        let span = (self.max - self.min) / self.step;
        let n = (span + 1e-9).floor() as usize;
        if (span - n as f64).abs() <= 1e-9 {
            // step divides the range: interpolate so both ends are exact
            (0..=n).map(|i| self.min + (self.max - self.min) * i as f64 / n as f64).collect()
        } else {
            (0..=n).map(|i| self.min + self.step * i as f64).collect()
        }
    }
}

/// Comma-separated numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct List(pub Vec<f64>);

impl std::str::FromStr for List {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        s.split(',')
            .map(|p| p.trim().parse::<f64>().map_err(|e| format!("list '{s}': {e}")))
            .collect::<Result<Vec<_>, _>>()
            .map(List)
    }
}

#[derive(Debug, Parser)]
#[command(name = "riccati", version, about = "Riccati equations, Schwarzians, soliton and finite-gap potentials")]
#[command(args_override_self = true)]
pub struct Cli {
    /// JSON file with the command and its flags
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Output directory
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Fixed-step integrators for reproducible files
    #[arg(long)]
    pub deterministic: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Apply a constant Mobius map to the coefficients of phi_x = a phi^2 + b phi + c
    Transform {
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        #[arg(long)]
        c: String,
        /// alpha,beta,gamma,delta of (alpha phi + beta)/(gamma phi + delta)
        #[arg(long, allow_hyphen_values = true)]
        map: List,
        /// A solution of the original equation to carry along
        #[arg(long)]
        phi: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// General solution from one particular solution
    SolveRe {
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        #[arg(long)]
        c: String,
        #[arg(long)]
        phi1: String,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        anchor: f64,
        /// Values of the constant C to tabulate
        #[arg(long, default_value = "1", allow_hyphen_values = true)]
        constants: List,
        #[arg(long, default_value = "-1:1:0.05", allow_hyphen_values = true)]
        grid: Grid,
        #[command(flatten)]
        common: Common,
    },
    /// Hermite polynomial H_n and its Riccati witness
    Hermite {
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Laurent series at a pole of y' + y^2 = x^2 + alpha
    PoleSeries {
        #[arg(long, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        eps: f64,
        #[arg(long, default_value_t = 6)]
        depth: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Schwarzian derivative of phi(x)
    Schwarz {
        #[arg(long)]
        phi: String,
        #[arg(long, default_value = "-1:1:0.05", allow_hyphen_values = true)]
        grid: Grid,
        #[command(flatten)]
        common: Common,
    },
    /// Formal series coefficients as differential polynomials
    Series {
        /// riccati or modschwarz
        #[arg(long, default_value = "riccati")]
        kind: String,
        #[arg(long, default_value_t = 2)]
        m: usize,
        #[arg(long, default_value_t = 3)]
        depth: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Reflectionless potential from k_j, beta_j
    Soliton {
        #[arg(long, allow_hyphen_values = true)]
        k: List,
        #[arg(long, allow_hyphen_values = true)]
        beta: Option<List>,
        #[arg(long, default_value = "-10:10:0.01", allow_hyphen_values = true)]
        grid: Grid,
        #[command(flatten)]
        common: Common,
    },
    /// Soliton field evolved in y and t, with PDE residuals
    Kp {
        #[arg(long, allow_hyphen_values = true)]
        k: List,
        #[arg(long, allow_hyphen_values = true)]
        beta: Option<List>,
        /// kp or kdv
        #[arg(long, default_value = "kp")]
        flow: String,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        y: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        t: f64,
        #[arg(long, default_value = "-10:10:0.05", allow_hyphen_values = true)]
        grid: Grid,
        #[command(flatten)]
        common: Common,
    },
    /// One-gap potential from band edges l1 > l2 > l3
    FiniteGap {
        #[arg(long, allow_hyphen_values = true)]
        lambdas: List,
        #[arg(long, allow_hyphen_values = true)]
        gamma0: f64,
        /// Sign of gamma_x at x = 0
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        sign: f64,
        #[arg(long, default_value_t = 2)]
        periods: usize,
        #[arg(long, default_value_t = 400)]
        samples_per_period: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Run invariant suites
    Verify {
        /// all, riccati, schwarzian, soliton or finite-gap
        #[arg(long, default_value = "all")]
        suite: String,
        #[command(flatten)]
        common: Common,
    },
}

impl Command {
    pub fn common(&self) -> &Common {
        match self {
            Command::Transform { common, .. }
            | Command::SolveRe { common, .. }
            | Command::Hermite { common, .. }
            | Command::PoleSeries { common, .. }
            | Command::Schwarz { common, .. }
            | Command::Series { common, .. }
            | Command::Soliton { common, .. }
            | Command::Kp { common, .. }
            | Command::FiniteGap { common, .. }
            | Command::Verify { common, .. } => common,
        }
    }
}

/// Expand `--config FILE` into flags. The file holds `"command"` plus one
/// key per long flag; explicit flags on the command line win.
pub fn expand_config(args: Vec<String>) -> Result<Vec<String>, String> {
    let Some(pos) = args.iter().position(|a| a == "--config" || a.starts_with("--config=")) else {
        return Ok(args);
    };
    let (path, skip) = match args[pos].strip_prefix("--config=") {
        Some(p) => (p.to_string(), 1),
        None => (args.get(pos + 1).cloned().ok_or("--config needs a file")?, 2),
    };
    let mut rest: Vec<String> = args.clone();
    rest.drain(pos..pos + skip);
    let text = std::fs::read_to_string(&path).map_err(|e| format!("cannot read config {path}: {e}"))?;
    let json: Value = serde_json::from_str(&text).map_err(|e| format!("config {path}: {e}"))?;
    let obj = json.as_object().ok_or_else(|| format!("config {path} must be a JSON object"))?;

    let prog = rest.first().cloned().unwrap_or_else(|| "riccati".into());
    let explicit_cmd = rest.get(1).filter(|a| !a.starts_with("--")).cloned();
    let cmd = match (&explicit_cmd, obj.get("command")) {
        (Some(c), _) => c.clone(),
        (None, Some(Value::String(c))) => c.clone(),
        _ => return Err("no command given on the command line or in the config".into()),
    };
    let mut out = vec![prog, cmd];
    for (key, v) in obj {
        if key == "command" {
            continue;
        }
        let flag = format!("--{}", key.replace('_', "-"));
        match v {
            Value::Bool(true) => out.push(flag),
            Value::Bool(false) | Value::Null => {}
            Value::Array(items) => {
                let parts: Vec<String> = items.iter().map(scalar).collect::<Result<_, _>>()?;
                out.push(format!("{flag}={}", parts.join(",")));
            }
            other => out.push(format!("{flag}={}", scalar(other)?)),
        }
    }
    let skip_rest = if explicit_cmd.is_some() { 2 } else { 1 };
    out.extend(rest.into_iter().skip(skip_rest));
    Ok(out)
}

fn scalar(v: &Value) -> Result<String, String> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        Value::Bool(b) => Ok(b.to_string()),
        other => Err(format!("unsupported config value {other}")),
    }
}
