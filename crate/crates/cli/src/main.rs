mod args;
mod commands;
mod output;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use args::{expand_config, Cli, Command};
use commands::{Failure, Outcome};

fn dispatch(cmd: &Command) -> Outcome {
    match cmd {
        Command::Transform { a, b, c, map, phi, .. } => commands::transform(a, b, c, map, phi.as_deref()),
        Command::SolveRe { a, b, c, phi1, anchor, constants, grid, .. } => {
            commands::solve_re(a, b, c, phi1, *anchor, constants, grid)
        }
        Command::Hermite { n, .. } => commands::hermite(*n),
        Command::PoleSeries { alpha, eps, depth, .. } => commands::pole(*alpha, *eps, *depth),
        Command::Schwarz { phi, grid, .. } => commands::schwarz_cmd(phi, grid),
        Command::Series { kind, m, depth, .. } => commands::series(kind, *m, *depth),
        Command::Soliton { k, beta, grid, .. } => commands::soliton(k, beta, grid),
        Command::Kp { k, beta, flow, y, t, grid, .. } => commands::kp(k, beta, flow, *y, *t, grid),
        Command::FiniteGap { lambdas, gamma0, sign, periods, samples_per_period, common } => {
            commands::finite_gap(lambdas, *gamma0, *sign, *periods, *samples_per_period, common.deterministic)
        }
        Command::Verify { suite, .. } => commands::verify(suite),
    }
}

fn run(cli: &Cli) -> Result<bool, Failure> {
    let (report, table) = dispatch(&cli.command)?;
    let out = &cli.command.common().out;
    let io = |e: std::io::Error| Failure { code: 3, message: format!("cannot write to {}: {e}", out.display()) };
    if let Some((name, t)) = table {
        let csv = t.to_csv().map_err(|m| Failure { code: 3, message: m })?;
        output::write_file(out, &name, &csv).map_err(io)?;
    }
    let json = serde_json::to_string_pretty(&report.to_json()).expect("report serializes");
    output::write_file(out, "report.json", &(json.clone() + "\n")).map_err(io)?;
    // a closed pipe is not an error; the files are already written
    let _ = writeln!(std::io::stdout(), "{json}");
    for c in report.checks.iter().filter(|c| !c.pass) {
        eprintln!("check failed: {} = {:e} (tol {:e})", c.name, c.value, c.tol);
    }
    Ok(report.passed())
}

fn main() -> ExitCode {
    let argv = match expand_config(std::env::args().collect()) {
        Ok(a) => a,
        Err(m) => {
            eprintln!("error: {m}");
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
