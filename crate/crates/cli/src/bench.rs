use std::time::Instant;

use ccmv_core::backtest::solve_with;
use ccmv_core::io::write_json;
use ccmv_core::{synthetic, Error, Result, SolverKind};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::args::{BenchArgs, Emit};
use crate::output::sink;
use crate::ExitCode;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub n: usize,
    pub k: usize,
    pub solver: String,
    pub time_s: f64,
    pub log_time: f64,
    pub objective: f64,
    pub outer_iters: usize,
    pub inner_iters: usize,
    pub status: String,
}

/// Seed of the size-`n` instance; every `k` at that size shares the matrix.
pub fn instance_seed(seed: u64, n: usize) -> u64 {
    seed.wrapping_mul(1_000_003).wrapping_add(n as u64)
}

pub fn build_rows(args: &BenchArgs) -> Result<Vec<BenchRow>> {
    let cfg = args.solver_args.config()?;
    let mut cells = Vec::new();
    for &n in &args.sizes {
        for &k in &args.ks {
            if k == 0 || k > n {
                return Err(Error::BadK { k, n });
            }
            for kind in [SolverKind::Pd, SolverKind::Padm] {
                cells.push((n, k, kind));
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let rows: Vec<Result<BenchRow>> = pool.install(|| {
        cells
            .into_par_iter()
            .map(|(n, k, kind)| {
                let spec = synthetic::factor_model(n, k, args.tau, instance_seed(args.seed, n))?;
                let t0 = Instant::now();
                let sol = solve_with(kind, &spec, &cfg)?;
                let time_s = t0.elapsed().as_secs_f64();
                log::info!("n = {n}, k = {k}, {kind}: {time_s:.4}s");
                Ok(BenchRow {
                    n,
                    k,
                    solver: kind.to_string(),
                    time_s,
                    log_time: time_s.ln(),
                    objective: sol.objective,
                    outer_iters: sol.trace.len(),
                    inner_iters: sol.total_inner_iterations(),
                    status: sol.status.to_string(),
                })
            })
            .collect()
    });
    rows.into_iter().collect()
}

pub fn run(args: &BenchArgs) -> Result<ExitCode> {
    let rows = build_rows(args)?;
    let mut out = sink(args.out.as_deref())?;
    match args.emit {
        Emit::Json => write_json(&mut out, &rows)?,
        Emit::Csv => {
            let mut w = csv::Writer::from_writer(&mut out);
            for row in &rows {
                w.serialize(row)?;
            }
            w.flush()?;
        }
    }
    out.flush()?;
    Ok(ExitCode::Ok)
}
