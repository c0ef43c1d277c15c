use ccmv_core::backtest::{rolling_horizon, BacktestConfig, BacktestReport};
use ccmv_core::io::{read_returns_csv_file, write_json};
use ccmv_core::{Error, Result, Status};

use crate::args::{BacktestArgs, Emit};
use crate::output::sink;
use crate::ExitCode;

fn write_csv(out: impl std::io::Write, dates: &[String], rep: &BacktestReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec![
        "date".to_string(),
        "realized_return".into(),
        "status".into(),
    ];
    header.extend(rep.tickers.iter().cloned());
    w.write_record(&header)?;
    for win in &rep.windows {
        let status = win
            .status
            .map(|s| s.to_string())
            .unwrap_or_else(|| "failed".into());
        let mut rec = vec![
            dates[win.realized_row].clone(),
            win.realized_return.to_string(),
            status,
        ];
        rec.extend(win.weights.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn run(args: &BacktestArgs) -> Result<ExitCode> {
    let solver_cfg = args.solver_args.config()?;
    if !args.returns.is_file() {
        return Err(Error::InvalidConfig(format!(
            "{} does not exist",
            args.returns.display()
        )));
    }
    let table = read_returns_csv_file(&args.returns, "period")?;
    let cfg = BacktestConfig {
        window: args.window,
        solver_kind: args.solver.into(),
        solver_cfg,
        tau: args.tau,
        k: args.k,
    };
    let rep = rolling_horizon(&table.returns, &cfg)?;
    log::info!(
        "{} windows, mu_hat {}, sigma_hat {}, sharpe_hat {:?}",
        rep.windows.len(),
        rep.mu_hat,
        rep.sigma_hat,
        rep.sharpe_hat
    );

    let mut out = sink(args.out.as_deref())?;
    match args.emit {
        Emit::Json => write_json(&mut out, &rep)?,
        Emit::Csv => write_csv(&mut out, &table.dates, &rep)?,
    }
    out.flush()?;

    let capped = rep
        .windows
        .iter()
        .any(|w| matches!(w.status, None | Some(Status::MaxIterations)));
    Ok(if capped {
        ExitCode::IterationCap
    } else {
        ExitCode::Ok
    })
}
