//! Penalty alternating direction baseline with an l1 coupling penalty.
//!
//! Each penalty subproblem `min f(x) + rho ||x - y||_1` over
//! `x in {e'x = 1, x >= 0}` and `y in {e'y = 1, ||y||_0 <= k}` is attacked by
//! block coordinate descent. The y-block has a combinatorial closed form; the
//! x-block is a nonsmooth convex program solved iteratively, which is what
//! makes this baseline slower than the quadratic-penalty solver.

use itertools::Itertools;
use nalgebra::DVector;

use crate::error::Result;
use crate::model::{
    make_feasible_point, max_eigenvalue, objective_unchecked, ProblemSpec, SolverConfig,
};
use crate::pd::{finish, penalty_schedule, EIG_TOL};
use crate::solution::{Solution, SolverKind, Status, TraceRecord};

/// Supports are enumerated exhaustively up to this many assets.
pub const EXHAUSTIVE_Y_MAX_N: usize = 20;

/// `f(x) + rho ||x - y||_1`.
pub fn phi(spec: &ProblemSpec, rho: f64, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
    objective_unchecked(spec, x) + rho * (x - y).lp_norm(1)
}

#[derive(Debug, Clone)]
pub struct XStepOptions {
    /// Stop once successive iterates differ by at most `tol` in sup-norm.
    pub tol: f64,
    pub max_iters: usize,
    /// Lipschitz constant of the gradient of `f`, i.e. `2 lambda_max(A)`.
    pub lipschitz: f64,
}

impl XStepOptions {
    pub fn for_spec(spec: &ProblemSpec, tol: f64) -> Result<Self> {
        Ok(Self {
            tol,
            max_iters: default_x_iters(spec.n()),
            lipschitz: 2.0 * max_eigenvalue(&spec.a, EIG_TOL)?,
        })
    }
}

fn default_x_iters(n: usize) -> usize {
    (10 * n).max(100)
}

#[derive(Debug, Clone)]
pub struct XStep {
    pub x: DVector<f64>,
    pub iterations: usize,
    /// False when `max_iters` was reached before the `tol` criterion.
    pub converged: bool,
}

/// Approximate minimizer of `f(x) + rho ||x - y||_1` over the simplex.
pub fn padm_x_step(spec: &ProblemSpec, rho: f64, y: &DVector<f64>, tol: f64) -> Result<XStep> {
    spec.check_len(y)?;
    let opts = XStepOptions::for_spec(spec, tol)?;
    Ok(padm_x_step_with(spec, rho, y, None, &opts))
}

/// Accelerated proximal gradient on the smooth part `f`, with the exact prox
/// of `rho ||. - y||_1` plus the simplex indicator. Returns the best iterate
/// seen, `start` included, so the penalized value never increases.
pub fn padm_x_step_with(
    spec: &ProblemSpec,
    rho: f64,
    y: &DVector<f64>,
    start: Option<&DVector<f64>>,
    opts: &XStepOptions,
) -> XStep {
    let n = spec.n();
    let step = 1.0 / opts.lipschitz.max(1e-12);
    let mut x = match start {
        Some(s) => crate::simplex::project_simplex(s),
        None => DVector::from_element(n, 1.0 / n as f64),
    };
    let mut best = x.clone();
    let mut best_val = phi(spec, rho, &x, y);
    let mut z = x.clone();
    let mut t = 1.0_f64;

    for it in 1..=opts.max_iters {
        let grad = (&spec.a * &z) * 2.0 - &spec.mu * spec.tau;
        let x_next = prox_l1_simplex(&(&z - grad * step), y, rho * step);
        let val = phi(spec, rho, &x_next, y);
        if val < best_val {
            best_val = val;
            best.copy_from(&x_next);
        }
        let moved = (&x_next - &x).amax();
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        z = &x_next + (&x_next - &x) * ((t - 1.0) / t_next);
        x = x_next;
        t = t_next;
        if moved <= opts.tol {
            return XStep {
                x: best,
                iterations: it,
                converged: true,
            };
        }
    }
    XStep {
        x: best,
        iterations: opts.max_iters,
        converged: false,
    }
}

/// `argmin_x 1/2 ||x - v||^2 + gamma ||x - y||_1` over the simplex.
///
/// For a budget multiplier `theta` each coordinate is
/// `max(0, y_i + soft(v_i - theta - y_i, gamma))`, nonincreasing in `theta`;
/// the multiplier is bracketed by bisection and then fixed exactly on the
/// final linear piece.
pub(crate) fn prox_l1_simplex(v: &DVector<f64>, y: &DVector<f64>, gamma: f64) -> DVector<f64> {
    let coord = |vi: f64, yi: f64, theta: f64| -> f64 {
        let u = vi - theta - yi;
        let shrunk = if u > gamma {
            u - gamma
        } else if u < -gamma {
            u + gamma
        } else {
            0.0
        };
        (yi + shrunk).max(0.0)
    };
    let total = |theta: f64| -> f64 {
        v.iter()
            .zip(y.iter())
            .map(|(&vi, &yi)| coord(vi, yi, theta))
            .sum()
    };

    let mut lo = v
        .iter()
        .zip(y.iter())
        .map(|(&vi, &yi)| (vi - yi - gamma).min(vi - gamma))
        .fold(f64::INFINITY, f64::min)
        - 1.0;
    let mut hi = v
        .iter()
        .zip(y.iter())
        .map(|(&vi, &yi)| (vi - yi + gamma).max(vi + gamma))
        .fold(f64::NEG_INFINITY, f64::max)
        + 1.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if total(mid) >= 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let theta = 0.5 * (lo + hi);

    // Coordinates on a sloped piece move one-for-one with theta.
    let mut fixed = 0.0;
    let mut sloped_sum = 0.0;
    let mut sloped = 0usize;
    for (&vi, &yi) in v.iter().zip(y.iter()) {
        let u = vi - theta - yi;
        let xi = coord(vi, yi, theta);
        if xi > 0.0 && u.abs() > gamma {
            sloped += 1;
            sloped_sum += vi + if u > gamma { -gamma } else { gamma };
        } else {
            fixed += xi;
        }
    }
    let theta = if sloped > 0 {
        (sloped_sum + fixed - 1.0) / sloped as f64
    } else {
        theta
    };
    let x = DVector::from_fn(v.len(), |i, _| coord(v[i], y[i], theta));
    let s = x.sum();
    // Guard against a piece change caused by the exact correction.
    if (s - 1.0).abs() > 1e-12 {
        let theta = 0.5 * (lo + hi);
        return DVector::from_fn(v.len(), |i, _| coord(v[i], y[i], theta));
    }
    x
}

/// `sum_{i not in S} |x_i| + |1 - sum_{i in S} x_i|`: the least l1 distance from
/// `x` to a budget-feasible vector supported on `S`.
pub fn support_cost(x: &DVector<f64>, support: &[usize]) -> f64 {
    let total_abs: f64 = x.iter().map(|v| v.abs()).sum();
    let in_abs: f64 = support.iter().map(|&i| x[i].abs()).sum();
    let in_sum: f64 = support.iter().map(|&i| x[i]).sum();
    total_abs - in_abs + (1.0 - in_sum).abs()
}

#[derive(Debug, Clone)]
pub struct YStep {
    pub y: DVector<f64>,
    pub support: Vec<usize>,
    /// `||x - y||_1`.
    pub cost: f64,
}

/// Minimizer of `||x - y||_1` over `{e'y = 1, ||y||_0 <= k}`.
///
/// Chooses the support minimizing [`support_cost`] (exhaustively for
/// `n <= 20`, otherwise by swap local search from the top-`k` by `|x|`), copies
/// `x` there and puts the budget deficit on the largest-`|x|` support entry.
pub fn padm_y_step(x: &DVector<f64>, k: usize) -> YStep {
    let n = x.len();
    let k = k.clamp(1, n);
    let support = if n <= EXHAUSTIVE_Y_MAX_N {
        best_support_exhaustive(x, k)
    } else {
        best_support_local(x, k)
    };
    build_y(x, support)
}

fn build_y(x: &DVector<f64>, support: Vec<usize>) -> YStep {
    let mut y = DVector::zeros(x.len());
    for &i in &support {
        y[i] = x[i];
    }
    let anchor = *support
        .iter()
        .min_by(|&&i, &&j| x[j].abs().total_cmp(&x[i].abs()).then(i.cmp(&j)))
        .expect("nonempty support");
    let others: f64 = support
        .iter()
        .filter(|&&i| i != anchor)
        .map(|&i| x[i])
        .sum();
    y[anchor] = 1.0 - others;
    let cost = (x - &y).lp_norm(1);
    YStep { y, support, cost }
}

fn best_support_exhaustive(x: &DVector<f64>, k: usize) -> Vec<usize> {
    let mut best: Option<(f64, Vec<usize>)> = None;
    for s in (0..x.len()).combinations(k) {
        let c = support_cost(x, &s);
        if best.as_ref().is_none_or(|(bc, _)| c < *bc) {
            best = Some((c, s));
        }
    }
    best.expect("k <= n").1
}

pub(crate) fn top_k_by_abs(x: &DVector<f64>, k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&i, &j| x[j].abs().total_cmp(&x[i].abs()).then(i.cmp(&j)));
    let mut s = idx[..k].to_vec();
    s.sort_unstable();
    s
}

fn best_support_local(x: &DVector<f64>, k: usize) -> Vec<usize> {
    let n = x.len();
    let mut support = top_k_by_abs(x, k);
    let mut member = vec![false; n];
    for &i in &support {
        member[i] = true;
    }
    let total_abs: f64 = x.iter().map(|v| v.abs()).sum();
    let mut in_abs: f64 = support.iter().map(|&i| x[i].abs()).sum();
    let mut in_sum: f64 = support.iter().map(|&i| x[i]).sum();
    let cost = |in_abs: f64, in_sum: f64| total_abs - in_abs + (1.0 - in_sum).abs();

    for _ in 0..n * k {
        let current = cost(in_abs, in_sum);
        let mut best: Option<(f64, usize, usize)> = None;
        for (pos, &out) in support.iter().enumerate() {
            for inn in (0..n).filter(|&j| !member[j]) {
                let c = cost(
                    in_abs - x[out].abs() + x[inn].abs(),
                    in_sum - x[out] + x[inn],
                );
                if c < current - 1e-15 * (1.0 + current) && best.is_none_or(|(bc, _, _)| c < bc) {
                    best = Some((c, pos, inn));
                }
            }
        }
        let Some((_, pos, inn)) = best else { break };
        let out = support[pos];
        member[out] = false;
        member[inn] = true;
        in_abs += x[inn].abs() - x[out].abs();
        in_sum += x[inn] - x[out];
        support[pos] = inn;
    }
    support.sort_unstable();
    support
}

pub fn ccmv_padm_solve(spec: &ProblemSpec, cfg: &SolverConfig) -> Result<Solution> {
    spec.validate()?;
    cfg.validate()?;
    let mut notes = Vec::new();
    let rho0 = cfg.rho0;
    let opts = XStepOptions::for_spec(spec, 1e-2 * cfg.eps_inner)?;
    let x_feas = make_feasible_point(spec);

    let mut x = x_feas.clone();
    let mut y = x_feas.clone();
    let mut trace = Vec::new();
    let mut converged = false;
    let mut capped_x_steps = 0usize;

    for j in 0..cfg.max_outer {
        let rho = penalty_schedule(rho0, cfg.zeta, j);
        let mut iterations = cfg.max_inner;
        let mut hit_cap = true;
        for l in 1..=cfg.max_inner {
            let xs = padm_x_step_with(spec, rho, &y, Some(&x), &opts);
            if !xs.converged {
                capped_x_steps += 1;
            }
            let mut ys = padm_y_step(&xs.x, spec.k);
            // keep the previous y when the heuristic support search does worse
            if (&xs.x - &y).lp_norm(1) <= ys.cost {
                ys.y = y.clone();
            }
            let change =
                crate::pd::relative_change(&xs.x, &x).max(crate::pd::relative_change(&ys.y, &y));
            x = xs.x;
            y = ys.y;
            if l >= 2 && change <= cfg.eps_inner {
                iterations = l;
                hit_cap = false;
                break;
            }
        }
        if hit_cap {
            notes.push(format!("inner loop capped at rho = {rho:e}"));
        }
        trace.push(TraceRecord {
            rho,
            inner_iters: iterations,
            q: phi(spec, rho, &x, &y),
            infeas: (&x - &y).lp_norm(1),
            reset: false,
        });
        if (&x - &y).amax() <= cfg.eps_outer {
            converged = true;
            break;
        }
    }
    if capped_x_steps > 0 {
        notes.push(format!(
            "{capped_x_steps} x-steps stopped at the iteration cap"
        ));
    }
    let status = if converged {
        Status::Converged
    } else {
        Status::MaxIterations
    };
    finish(
        spec,
        SolverKind::Padm,
        &y,
        &x_feas,
        None,
        status,
        trace,
        rho0,
        notes,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dvector, DMatrix};
    use proptest::prelude::*;

    #[test]
    fn y_step_example_from_brute_force() {
        let x = dvector![0.6, 0.3, 0.1];
        assert!((support_cost(&x, &[0, 1]) - 0.2).abs() < 1e-15);
        assert!((support_cost(&x, &[0, 2]) - 0.6).abs() < 1e-15);
        assert!((support_cost(&x, &[1, 2]) - 1.2).abs() < 1e-15);
        let ys = padm_y_step(&x, 2);
        assert_eq!(ys.support, vec![0, 1]);
        assert!((ys.y.clone() - dvector![0.7, 0.3, 0.0]).amax() < 1e-15);
        assert!((ys.cost - 0.2).abs() < 1e-15);
    }

    #[test]
    fn y_step_keeps_feasible_input() {
        let x = dvector![0.0, 0.25, 0.75, 0.0];
        let ys = padm_y_step(&x, 2);
        assert_eq!(ys.y, x);
        assert_eq!(ys.cost, 0.0);
    }

    #[test]
    fn y_step_full_support_shifts_largest() {
        let x = dvector![0.2, -0.1, 0.5, 0.1];
        let ys = padm_y_step(&x, 4);
        let delta = 1.0 - x.sum();
        let mut expect = x.clone();
        expect[2] += delta;
        assert!((ys.y - expect).amax() < 1e-15);
    }

    #[test]
    fn prox_matches_projection_when_gamma_is_zero() {
        let v = dvector![0.9, -0.3, 0.4, 0.2];
        let y = dvector![0.0, 0.0, 1.0, 0.0];
        let p = prox_l1_simplex(&v, &y, 0.0);
        let q = crate::simplex::project_simplex(&v);
        assert!((p - q).amax() < 1e-12);
    }

    #[test]
    fn x_step_large_rho_returns_y() {
        let spec = ProblemSpec::new(
            DMatrix::from_diagonal(&dvector![0.04, 0.09, 0.01]),
            dvector![0.05, 0.12, 0.02],
            0.5,
            2,
        )
        .unwrap();
        let y = dvector![0.5, 0.0, 0.5];
        let xs = padm_x_step(&spec, 1e3, &y, 1e-10).unwrap();
        assert!((xs.x - y).amax() < 1e-8);
    }

    #[test]
    fn x_step_symmetric_without_penalty() {
        let spec = ProblemSpec {
            a: DMatrix::identity(2, 2),
            mu: DVector::zeros(2),
            tau: 0.0,
            k: 2,
        };
        let xs = padm_x_step(&spec, 0.0, &dvector![1.0, 0.0], 1e-12).unwrap();
        assert!((xs.x - dvector![0.5, 0.5]).amax() < 1e-9);
    }

    #[test]
    fn toy_instance() {
        let spec =
            ProblemSpec::new(DMatrix::identity(3, 3), dvector![0.3, 0.2, 0.1], 1.0, 1).unwrap();
        let sol = ccmv_padm_solve(&spec, &SolverConfig::default()).unwrap();
        assert_eq!(sol.solver, SolverKind::Padm);
        assert!(sol.respects_cardinality(1));
        assert!([0.7, 0.8, 0.9]
            .iter()
            .any(|f| (sol.objective - f).abs() < 1e-12));
    }

    proptest! {
        #[test]
        fn prox_lands_on_simplex(
            v in prop::collection::vec(-2.0f64..2.0, 1..10),
            gamma in 0.0f64..1.0,
            seed in 0usize..10,
        ) {
            let n = v.len();
            let v = DVector::from_vec(v);
            let mut y = DVector::zeros(n);
            y[seed % n] = 1.0;
            let p = prox_l1_simplex(&v, &y, gamma);
            prop_assert!((p.sum() - 1.0).abs() < 1e-10);
            prop_assert!(p.iter().all(|&x| x >= 0.0));
        }

        #[test]
        fn local_search_never_worse_than_top_k(
            x in prop::collection::vec(-0.5f64..1.0, 2..40),
            k in 1usize..6,
        ) {
            let x = DVector::from_vec(x);
            let k = k.min(x.len());
            let init = support_cost(&x, &top_k_by_abs(&x, k));
            let chosen = support_cost(&x, &best_support_local(&x, k));
            prop_assert!(chosen <= init + 1e-15);
        }
    }
}
