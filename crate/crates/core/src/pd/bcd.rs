use nalgebra::DVector;

use super::steps::{build_factorization, y_step, InverseColumns, PenaltyFactorization};
use crate::error::{Error, Result};
use crate::model::{penalty_unchecked, ProblemSpec, SolverConfig};

/// Relative slack allowed on a single increase of the penalty value before
/// the inner loop reports a monotonicity violation.
pub const MONOTONE_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct BcdOutcome {
    pub x: DVector<f64>,
    pub y: DVector<f64>,
    pub iterations: usize,
    /// `q_rho(x_l, y_l)` after every full x/y sweep.
    pub q_trace: Vec<f64>,
    /// The loop stopped on `max_inner` rather than the change criterion.
    pub hit_cap: bool,
}

/// Relative sup-norm change used by the inner stopping rule.
pub(crate) fn relative_change(new: &DVector<f64>, old: &DVector<f64>) -> f64 {
    (new - old).amax() / new.amax().max(1.0)
}

/// Alternating minimization of `q_rho` over `{e'x = 1}` and `{y >= 0, ||y||_0 <= k}`.
pub fn bcd_inner(
    spec: &ProblemSpec,
    rho: f64,
    y0: &DVector<f64>,
    cfg: &SolverConfig,
) -> Result<BcdOutcome> {
    let fact = build_factorization(spec, rho)?;
    bcd_inner_with(spec, &fact, y0, cfg)
}

/// Same as [`bcd_inner`] with a prebuilt factorization of `A + rho I`.
pub fn bcd_inner_with(
    spec: &ProblemSpec,
    fact: &PenaltyFactorization,
    y0: &DVector<f64>,
    cfg: &SolverConfig,
) -> Result<BcdOutcome> {
    spec.check_len(y0)?;
    let rho = fact.rho;
    let mut y = y0.clone();
    let mut x_prev: Option<DVector<f64>> = None;
    let mut q_trace = Vec::new();
    let mut inverse = InverseColumns::new(fact);

    for l in 1..=cfg.max_inner {
        let x = inverse.x_step(&y);
        let y_next = y_step(&x, spec.k);
        let q = penalty_unchecked(spec, rho, &x, &y_next);
        if let Some(&prev) = q_trace.last() {
            if q > prev + MONOTONE_TOL * (1.0 + f64::abs(prev)) {
                return Err(Error::MonotonicityViolation {
                    iteration: l,
                    prev,
                    next: q,
                });
            }
        }
        q_trace.push(q);

        let done = match &x_prev {
            Some(xp) => relative_change(&x, xp).max(relative_change(&y_next, &y)) <= cfg.eps_inner,
            None => false,
        };
        y = y_next;
        if done {
            return Ok(BcdOutcome {
                x,
                y,
                iterations: l,
                q_trace,
                hit_cap: false,
            });
        }
        x_prev = Some(x);
    }

    let x = x_prev.expect("max_inner >= 1");
    log::debug!("inner loop hit cap {} at rho {rho}", cfg.max_inner);
    Ok(BcdOutcome {
        x,
        y,
        iterations: cfg.max_inner,
        q_trace,
        hit_cap: true,
    })
}
