//! Penalty decomposition solver.
//!
//! The coupling `x = y` between the budget hyperplane and the sparse
//! nonnegative set is penalized by `rho ||x - y||^2`. For each penalty value
//! the subproblem is solved by block coordinate descent whose two block
//! minimizers are both closed form. The penalty grows geometrically until
//! `||x - y||_inf <= eps_outer`, and the support of `y` is then polished to an
//! exact restricted minimizer and certified.

mod bcd;
mod kkt;
mod polish;
mod steps;

pub(crate) use bcd::relative_change;
pub use bcd::{bcd_inner, bcd_inner_with, BcdOutcome, MONOTONE_TOL};
pub use kkt::{kkt_check, ACTIVE_TOL};
pub use polish::{polish_support, Polished, FALLBACK_PG_STEPS};
pub use steps::{build_factorization, x_step, y_step, PenaltyFactorization};

use nalgebra::DVector;

use crate::error::Result;
use crate::model::{
    make_feasible_point, max_eigenvalue, objective_unchecked, penalty_unchecked, ProblemSpec,
    SolverConfig,
};
use crate::solution::{support_of, Solution, SolverKind, Status, TraceRecord};
use steps::x_step_unchecked;

/// Relative accuracy of the `lambda_max(A)` estimate behind the `rho0` floor.
pub const EIG_TOL: f64 = 1e-8;

/// Smallest admissible initial penalty, `lambda_max(A) + 1`, padded by the
/// eigenvalue estimate's tolerance so the bound holds for the true spectrum.
pub fn rho0_floor(spec: &ProblemSpec) -> Result<f64> {
    let lam = max_eigenvalue(&spec.a, EIG_TOL)?;
    Ok(lam * (1.0 + EIG_TOL) + 1.0)
}

/// `rho_j = rho0 * zeta^j`.
pub fn penalty_schedule(rho0: f64, zeta: f64, j: usize) -> f64 {
    rho0 * zeta.powi(j as i32)
}

pub fn ccmv_pd_solve(spec: &ProblemSpec, cfg: &SolverConfig) -> Result<Solution> {
    spec.validate()?;
    cfg.validate()?;
    let mut notes = Vec::new();

    let floor = rho0_floor(spec)?;
    let rho0 = if cfg.rho0 < floor {
        notes.push(format!(
            "rho0 raised from {} to lambda_max(A) + 1 = {floor}",
            cfg.rho0
        ));
        floor
    } else {
        cfg.rho0
    };

    let x_feas = make_feasible_point(spec);
    let f_feas = objective_unchecked(spec, &x_feas);
    let mut fact = build_factorization(spec, rho0)?;
    let probe = x_step_unchecked(&fact, &x_feas);
    let q_start = penalty_unchecked(spec, rho0, &probe, &x_feas);
    let upsilon = f_feas.max(q_start) + cfg.upsilon_slack;

    let mut y_start = x_feas.clone();
    let mut trace = Vec::new();
    let mut resets = 0;
    let mut converged = false;
    let mut last: Option<BcdOutcome> = None;

    for j in 0..cfg.max_outer {
        let out = bcd_inner_with(spec, &fact, &y_start, cfg)?;
        let infeas = (&out.x - &out.y).amax();
        if out.hit_cap {
            notes.push(format!("inner loop capped at rho = {:e}", fact.rho));
        }
        trace.push(TraceRecord {
            rho: fact.rho,
            inner_iters: out.iterations,
            q: *out.q_trace.last().expect("at least one sweep"),
            infeas,
            reset: false,
        });
        if infeas <= cfg.eps_outer {
            converged = true;
            last = Some(out);
            break;
        }
        if j + 1 == cfg.max_outer {
            last = Some(out);
            break;
        }

        let next = build_factorization(spec, penalty_schedule(rho0, cfg.zeta, j + 1))?;
        let probe = x_step_unchecked(&next, &out.y);
        if penalty_unchecked(spec, next.rho, &probe, &out.y) > upsilon {
            y_start = x_feas.clone();
            resets += 1;
            if let Some(rec) = trace.last_mut() {
                rec.reset = true;
            }
        } else {
            y_start = out.y.clone();
        }
        fact = next;
        last = Some(out);
    }

    let out = last.expect("max_outer >= 1");
    let status = match (converged, resets) {
        (false, _) => Status::MaxIterations,
        (true, 0) => Status::Converged,
        (true, c) => Status::SafeguardReset(c),
    };
    finish(
        spec,
        SolverKind::Pd,
        &out.y,
        &x_feas,
        Some(upsilon),
        status,
        trace,
        rho0,
        notes,
    )
}

/// Polishes the support of `y`, falls back to the feasible point's support if
/// that does worse than the safeguard bound, and attaches the certificate.
#[allow(clippy::too_many_arguments)]
pub(crate) fn finish(
    spec: &ProblemSpec,
    solver: SolverKind,
    y: &DVector<f64>,
    x_feas: &DVector<f64>,
    upsilon: Option<f64>,
    status: Status,
    trace: Vec<TraceRecord>,
    rho0: f64,
    mut notes: Vec<String>,
) -> Result<Solution> {
    let mut support = support_of(y);
    if support.is_empty() {
        notes.push("empty iterate support; polishing the feasible point".into());
        support = support_of(x_feas);
    }
    let mut polished = polish_support(spec, &support)?;
    if let Some(bound) = upsilon {
        if polished.objective > bound + 1e-8 {
            notes.push(format!(
                "polished objective {} exceeded bound {bound}; using the feasible point's support",
                polished.objective
            ));
            support = support_of(x_feas);
            polished = polish_support(spec, &support)?;
        }
    }
    if polished.fallback {
        notes.push(format!(
            "restricted solve used {FALLBACK_PG_STEPS} projected-gradient steps"
        ));
    }
    let kkt = kkt_check(spec, &polished.x, &support)?;
    Ok(Solution {
        solver,
        support: support_of(&polished.x),
        weights: polished.x,
        objective: polished.objective,
        kkt,
        status,
        trace,
        upsilon,
        rho0: Some(rho0),
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dvector, DMatrix};

    #[test]
    fn toy_instance_is_sparse_and_feasible() {
        let spec =
            ProblemSpec::new(DMatrix::identity(3, 3), dvector![0.3, 0.2, 0.1], 1.0, 1).unwrap();
        let sol = ccmv_pd_solve(&spec, &SolverConfig::default()).unwrap();
        assert_eq!(sol.support.len(), 1);
        assert!(sol.respects_cardinality(1));
        assert!([0.7, 0.8, 0.9]
            .iter()
            .any(|f| (sol.objective - f).abs() < 1e-12));
        assert!(sol.status.is_converged());
        assert!(sol.kkt.max_residual() <= 1e-10);
        assert!(sol.notes.iter().any(|n| n.contains("rho0 raised")));
    }

    #[test]
    fn schedule_is_geometric() {
        let spec = ProblemSpec::new(
            DMatrix::from_diagonal(&dvector![0.04, 0.09, 0.01, 0.02]),
            dvector![0.05, 0.12, 0.02, 0.04],
            0.5,
            2,
        )
        .unwrap();
        let cfg = SolverConfig::default();
        let sol = ccmv_pd_solve(&spec, &cfg).unwrap();
        let rho0 = sol.rho0.unwrap();
        for (j, rec) in sol.trace.iter().enumerate() {
            assert_eq!(rec.rho, rho0 * cfg.zeta.powi(j as i32));
        }
    }

    #[test]
    fn outer_cap_is_flagged() {
        let spec = ProblemSpec::new(
            DMatrix::from_diagonal(&dvector![0.04, 0.09, 0.01, 0.02]),
            dvector![0.05, 0.12, 0.02, 0.04],
            0.5,
            2,
        )
        .unwrap();
        let cfg = SolverConfig {
            max_outer: 1,
            eps_outer: 1e-14,
            ..SolverConfig::default()
        };
        let sol = ccmv_pd_solve(&spec, &cfg).unwrap();
        assert_eq!(sol.status, Status::MaxIterations);
        assert!(sol.respects_cardinality(2));
    }
}
