//! Exhaustive global solver for desk-scale instances.

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{objective_unchecked, ProblemSpec};
use crate::pd::kkt_check;
use crate::solution::{support_of, Solution, SolverKind, Status};

/// Largest support handled by zero-pattern enumeration.
pub const MAX_RESTRICTED: usize = 20;
/// Largest number of size-`k` supports [`brute_force_solve`] will visit.
pub const SUPPORT_BUDGET: u64 = 1_000_000;

const FEAS_TOL: f64 = 1e-12;
const MULT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub x: DVector<f64>,
    /// Indices of the nonzero weights.
    pub support: Vec<usize>,
    pub objective: f64,
    pub supports_examined: u64,
}

/// Global minimizer of `f` over the simplex restricted to `support`.
///
/// Every nonempty subset `P` of the support is tried as the set of positive
/// weights: the equality-constrained KKT system on `P` is solved directly and
/// the candidate is kept if it is nonnegative and the bound multipliers off
/// `P` are nonnegative. Singular systems are skipped.
pub fn restricted_qp_solve(spec: &ProblemSpec, support: &[usize]) -> Result<(DVector<f64>, f64)> {
    let n = spec.n();
    let mut s = support.to_vec();
    s.sort_unstable();
    s.dedup();
    if s.is_empty() || s.iter().any(|&i| i >= n) {
        return Err(Error::BadSupport);
    }
    if s.len() > MAX_RESTRICTED {
        return Err(Error::TooLarge(format!(
            "support of size {} exceeds {MAX_RESTRICTED}",
            s.len()
        )));
    }

    let m = s.len();
    let mut certified: Option<(f64, DVector<f64>)> = None;
    let mut feasible: Option<(f64, DVector<f64>)> = None;
    for mask in 1u32..(1u32 << m) {
        let pattern: Vec<usize> = (0..m)
            .filter(|b| mask & (1 << b) != 0)
            .map(|b| s[b])
            .collect();
        let Some((x, beta)) = solve_pattern(spec, &pattern) else {
            log::debug!("singular KKT system for pattern {pattern:?}");
            continue;
        };
        if pattern.iter().any(|&i| x[i] < -FEAS_TOL) {
            continue;
        }
        let x = x.map(|v| v.max(0.0));
        let f = objective_unchecked(spec, &x);
        let grad = (&spec.a * &x) * 2.0 - &spec.mu * spec.tau;
        let scale = 1.0 + grad.amax();
        let multipliers_ok = s
            .iter()
            .filter(|i| !pattern.contains(i))
            .all(|&i| grad[i] + beta >= -MULT_TOL * scale);
        let slot = if multipliers_ok {
            &mut certified
        } else {
            &mut feasible
        };
        if slot.as_ref().is_none_or(|(bf, _)| f < *bf) {
            *slot = Some((f, x));
        }
    }
    // Round-off can reject every multiplier check on degenerate data; any
    // feasible candidate is still a valid upper bound then.
    let (f, x) = certified
        .or(feasible)
        .ok_or_else(|| Error::NumericalBreakdown("no nonsingular zero pattern".into()))?;
    Ok((x, f))
}

/// Solves `2 A_PP x_P + beta e = tau mu_P`, `e'x_P = 1`; returns the full
/// vector and `beta`.
fn solve_pattern(spec: &ProblemSpec, pattern: &[usize]) -> Option<(DVector<f64>, f64)> {
    let p = pattern.len();
    let mut kkt = DMatrix::zeros(p + 1, p + 1);
    let mut rhs = DVector::zeros(p + 1);
    for (a, &i) in pattern.iter().enumerate() {
        for (b, &j) in pattern.iter().enumerate() {
            kkt[(a, b)] = 2.0 * spec.a[(i, j)];
        }
        kkt[(a, p)] = 1.0;
        kkt[(p, a)] = 1.0;
        rhs[a] = spec.tau * spec.mu[i];
    }
    rhs[p] = 1.0;
    let sol = kkt.clone().full_piv_lu().solve(&rhs)?;
    let resid = (&kkt * &sol - &rhs).amax();
    if !sol.iter().all(|v| v.is_finite()) || resid > 1e-9 * (1.0 + kkt.amax() * sol.amax()) {
        return None;
    }
    let mut x = DVector::zeros(spec.n());
    for (a, &i) in pattern.iter().enumerate() {
        x[i] = sol[a];
    }
    Some((x, sol[p]))
}

fn binomial(n: usize, k: usize) -> u64 {
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| {
        acc.saturating_mul((n - i) as u64) / (i as u64 + 1)
    })
}

/// Global optimum of the cardinality-constrained problem by visiting every
/// support of size exactly `k` (smaller supports are covered by the zero
/// patterns inside each restricted solve).
pub fn brute_force_solve(spec: &ProblemSpec) -> Result<OracleResult> {
    spec.validate()?;
    let n = spec.n();
    let k = spec.k;
    let count = binomial(n, k);
    if count > SUPPORT_BUDGET {
        return Err(Error::TooLarge(format!(
            "C({n}, {k}) = {count} supports exceeds budget {SUPPORT_BUDGET}"
        )));
    }
    if k > MAX_RESTRICTED {
        return Err(Error::TooLarge(format!("k = {k} exceeds {MAX_RESTRICTED}")));
    }
    let supports: Vec<Vec<usize>> = (0..n).combinations(k).collect();
    let best = supports
        .par_iter()
        .enumerate()
        .filter_map(|(idx, s)| restricted_qp_solve(spec, s).ok().map(|(x, f)| (f, idx, x)))
        .reduce_with(|a, b| match a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)) {
            std::cmp::Ordering::Greater => b,
            _ => a,
        })
        .ok_or_else(|| Error::NumericalBreakdown("no support produced a solution".into()))?;
    let (objective, _, x) = best;
    Ok(OracleResult {
        support: support_of(&x),
        x,
        objective,
        supports_examined: count,
    })
}

impl OracleResult {
    pub fn into_solution(self, spec: &ProblemSpec) -> Result<Solution> {
        let kkt = kkt_check(spec, &self.x, &self.support)?;
        Ok(Solution {
            solver: SolverKind::Oracle,
            weights: self.x,
            support: self.support,
            objective: self.objective,
            kkt,
            status: Status::Converged,
            trace: Vec::new(),
            upsilon: None,
            rho0: None,
            notes: vec![format!("{} supports examined", self.supports_examined)],
        })
    }
}

/// [`brute_force_solve`] packaged as a [`Solution`].
pub fn oracle_solve(spec: &ProblemSpec) -> Result<Solution> {
    brute_force_solve(spec)?.into_solution(spec)
}
