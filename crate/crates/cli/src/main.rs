mod args;
mod backtest;
mod bench;
mod compare;
mod input;
mod output;
mod solve;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Command, RunManifest};

/// Process exit status: 0 converged, 1 input or usage error, 2 iteration cap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Ok = 0,
    InputError = 1,
    IterationCap = 2,
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CCMV_LOG", "warn"))
        .format_timestamp(None)
        .init();

    let manifest = match RunManifest::try_parse() {
        Ok(m) => m,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::Ok,
                _ => ExitCode::InputError,
            };
            let _ = e.print();
            std::process::exit(code as i32);
        }
    };
    log::debug!("{}", serde_json::to_string(&manifest).unwrap_or_default());

    let result = match &manifest.command {
        Command::Solve(a) => solve::run(a),
        Command::Backtest(a) => backtest::run(a),
        Command::Compare(a) => compare::run(a),
        Command::Bench(a) => bench::run(a),
    };
    let code = match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::InputError
        }
    };
    std::process::exit(code as i32);
}
