use std::time::Instant;

use ccmv_core::backtest::solve_with;
use ccmv_core::io::{read_json, write_json};
use ccmv_core::{
    gap, in_sample_stats, Error, ProblemSpec, Result, Solution, SolverConfig, SolverKind, Status,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::args::{CompareArgs, Emit, Reference};
use crate::input::load;
use crate::output::sink;
use crate::ExitCode;

/// One `(k, solver)` line of the comparison table. Empty numeric cells mark
/// skipped solves or undefined quantities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub k: usize,
    pub solver: String,
    pub status: String,
    pub objective: Option<f64>,
    #[serde(rename = "return")]
    pub ret: Option<f64>,
    pub risk: Option<f64>,
    pub sharpe: Option<f64>,
    pub time_s: Option<f64>,
    pub gap_return: Option<f64>,
    pub gap_risk: Option<f64>,
    pub gap_sharpe: Option<f64>,
}

impl CompareRow {
    fn skipped(k: usize, solver: String, reason: &str) -> Self {
        Self {
            k,
            solver,
            status: format!("skipped: {reason}"),
            objective: None,
            ret: None,
            risk: None,
            sharpe: None,
            time_s: None,
            gap_return: None,
            gap_risk: None,
            gap_sharpe: None,
        }
    }

    fn from_solution(
        k: usize,
        solver: String,
        spec: &ProblemSpec,
        sol: &Solution,
        time_s: Option<f64>,
    ) -> Self {
        let w = &sol.weights;
        let ret = spec.mu.dot(w);
        let risk = (&spec.a * w).dot(w).max(0.0);
        Self {
            k,
            solver,
            status: sol.status.to_string(),
            objective: Some(sol.objective),
            ret: Some(ret),
            risk: Some(risk),
            sharpe: in_sample_stats(spec, w).ok().map(|s| s.sharpe),
            time_s,
            gap_return: None,
            gap_risk: None,
            gap_sharpe: None,
        }
    }

    fn set_gaps(&mut self, reference: &CompareRow) {
        let g = |a: Option<f64>, b: Option<f64>| Some(gap(a?, b?));
        self.gap_return = g(self.ret, reference.ret);
        self.gap_risk = g(self.risk, reference.risk);
        self.gap_sharpe = g(self.sharpe, reference.sharpe);
    }
}

enum Cell {
    Solve(usize, SolverKind),
    External(usize, Box<Solution>),
}

fn reference_solutions(args: &CompareArgs) -> Result<Vec<Solution>> {
    let path = args.reference_file.as_ref().ok_or_else(|| {
        Error::InvalidConfig("--reference mosek-file needs --reference-file".into())
    })?;
    if !path.is_file() {
        return Err(Error::InvalidConfig(format!(
            "{} does not exist",
            path.display()
        )));
    }
    let value: serde_json::Value = read_json(path)?;
    let sols: Vec<Solution> = if value.is_array() {
        serde_json::from_value(value)?
    } else {
        vec![serde_json::from_value(value)?]
    };
    if sols.len() != args.k.len() {
        return Err(Error::InvalidConfig(format!(
            "--reference-file holds {} solutions for {} values of --k",
            sols.len(),
            args.k.len()
        )));
    }
    Ok(sols)
}

fn run_cell(
    spec: &ProblemSpec,
    kind: SolverKind,
    cfg: &SolverConfig,
) -> Result<(Option<Solution>, f64)> {
    let t0 = Instant::now();
    match solve_with(kind, spec, cfg) {
        Ok(sol) => Ok((Some(sol), t0.elapsed().as_secs_f64())),
        Err(Error::TooLarge(msg)) => {
            log::warn!("{kind} skipped at k = {}: {msg}", spec.k);
            Ok((None, 0.0))
        }
        Err(e) => Err(e),
    }
}

/// Builds the table in `(k, solver)` order; the reference row is appended to
/// each `k` block when it is not one of the listed solvers.
pub fn build_table(args: &CompareArgs) -> Result<Vec<CompareRow>> {
    let cfg = args.solver_args.config()?;
    let base = load(&args.input, args.k[0], args.tau)?;
    let mut solvers: Vec<SolverKind> = Vec::new();
    for s in &args.solver {
        let kind = SolverKind::from(*s);
        if !solvers.contains(&kind) {
            solvers.push(kind);
        }
    }
    let reference_kind = match args.reference {
        Reference::Pd => Some(SolverKind::Pd),
        Reference::Oracle => Some(SolverKind::Oracle),
        Reference::MosekFile => None,
    };
    let mut external = match args.reference {
        Reference::MosekFile => reference_solutions(args)?.into_iter().map(Some).collect(),
        _ => vec![None; args.k.len()],
    };

    let mut cells = Vec::new();
    for (i, &k) in args.k.iter().enumerate() {
        for &kind in &solvers {
            cells.push(Cell::Solve(k, kind));
        }
        match reference_kind {
            Some(kind) if !solvers.contains(&kind) => cells.push(Cell::Solve(k, kind)),
            Some(_) => {}
            None => cells.push(Cell::External(
                k,
                Box::new(external[i].take().expect("one per k")),
            )),
        }
    }

    let spec_for = |k: usize| -> Result<ProblemSpec> {
        let spec = ProblemSpec {
            k,
            ..base.spec.clone()
        };
        spec.validate()?;
        Ok(spec)
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let rows: Vec<Result<CompareRow>> = pool.install(|| {
        cells
            .into_par_iter()
            .map(|cell| match cell {
                Cell::Solve(k, kind) => {
                    let spec = spec_for(k)?;
                    Ok(match run_cell(&spec, kind, &cfg)? {
                        (Some(sol), t) => {
                            CompareRow::from_solution(k, kind.to_string(), &spec, &sol, Some(t))
                        }
                        (None, _) => {
                            CompareRow::skipped(k, kind.to_string(), "beyond enumeration budget")
                        }
                    })
                }
                Cell::External(k, sol) => {
                    let spec = spec_for(k)?;
                    ccmv_core::objective_f(&spec, &sol.weights)?;
                    Ok(CompareRow::from_solution(
                        k,
                        "reference".into(),
                        &spec,
                        &sol,
                        None,
                    ))
                }
            })
            .collect()
    });
    let mut rows = rows.into_iter().collect::<Result<Vec<_>>>()?;

    let reference_name = reference_kind.map_or("reference".to_string(), |k| k.to_string());
    for &k in &args.k {
        let reference = rows
            .iter()
            .find(|r| r.k == k && r.solver == reference_name)
            .cloned()
            .expect("reference row present");
        for row in rows.iter_mut().filter(|r| r.k == k) {
            row.set_gaps(&reference);
        }
    }
    Ok(rows)
}

pub fn run(args: &CompareArgs) -> Result<ExitCode> {
    let rows = build_table(args)?;
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
    let capped = rows
        .iter()
        .any(|r| r.status == Status::MaxIterations.to_string());
    Ok(if capped {
        ExitCode::IterationCap
    } else {
        ExitCode::Ok
    })
}
