use ccmv_core::backtest::solve_with;
use ccmv_core::io::{write_json, write_trace_csv, write_weights_csv};
use ccmv_core::{Result, Status};

use crate::args::{Emit, SolveArgs};
use crate::input::load;
use crate::output::sink;
use crate::ExitCode;

pub fn run(args: &SolveArgs) -> Result<ExitCode> {
    let cfg = args.solver_args.config()?;
    let loaded = load(&args.input, args.k, args.tau)?;
    let sol = solve_with(args.solver.into(), &loaded.spec, &cfg)?;
    log::info!(
        "{} finished: f = {}, support {:?}, status {}",
        sol.solver,
        sol.objective,
        sol.support,
        sol.status
    );

    let mut out = sink(args.out.as_deref())?;
    match args.emit {
        Emit::Json => write_json(&mut out, &sol)?,
        Emit::Csv => write_weights_csv(
            &mut out,
            &loaded.tickers,
            [(sol.solver.to_string(), &sol.weights)],
        )?,
    }
    out.flush()?;
    if let Some(path) = &args.trace {
        write_trace_csv(std::fs::File::create(path)?, &sol.trace)?;
    }
    Ok(match sol.status {
        Status::MaxIterations => ExitCode::IterationCap,
        _ => ExitCode::Ok,
    })
}
