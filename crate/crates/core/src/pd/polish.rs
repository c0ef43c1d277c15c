//! Exact solve of the support-restricted convex problem
//! `min x'Ax - tau mu'x  s.t.  e'x = 1, x >= 0, x_i = 0 off the support`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{max_eigenvalue, objective_unchecked, ProblemSpec};
use crate::simplex::project_simplex;

/// Projected-gradient steps used when the active-set method breaks down.
pub const FALLBACK_PG_STEPS: usize = 500;

#[derive(Debug, Clone)]
pub struct Polished {
    pub x: DVector<f64>,
    pub objective: f64,
    /// Set when the active-set method hit a singular subsystem and the
    /// projected-gradient fallback produced `x`.
    pub fallback: bool,
}

/// Minimizes `f` over the simplex restricted to `support`.
///
/// A primal active-set method started at the best vertex of the support;
/// every working-set subproblem is an equality-constrained QP solved through
/// its KKT system. Singular subsystems (e.g. perfectly collinear assets) hand
/// over to accelerated projected gradient.
pub fn polish_support(spec: &ProblemSpec, support: &[usize]) -> Result<Polished> {
    let n = spec.n();
    if support.is_empty() || support.iter().any(|&i| i >= n) {
        return Err(Error::BadSupport);
    }
    let mut l = support.to_vec();
    l.sort_unstable();
    l.dedup();
    let m = l.len();
    let h = DMatrix::from_fn(m, m, |i, j| 2.0 * spec.a[(l[i], l[j])]);
    let c = DVector::from_fn(m, |i, _| -spec.tau * spec.mu[l[i]]);

    let (z, fallback) = match active_set(&h, &c) {
        Some(z) => (z, false),
        None => {
            log::debug!("active set broke down on |L| = {m}; projected gradient fallback");
            (projected_gradient(&h, &c)?, true)
        }
    };
    let mut x = DVector::zeros(n);
    for (i, &li) in l.iter().enumerate() {
        x[li] = z[i];
    }
    let objective = objective_unchecked(spec, &x);
    Ok(Polished {
        x,
        objective,
        fallback,
    })
}

/// Solves the KKT system of `min 1/2 p'Hp + g'p  s.t.  e'p = rhs` over `free`.
fn eqp(
    h: &DMatrix<f64>,
    g: &DVector<f64>,
    free: &[usize],
    rhs: f64,
) -> Option<(DVector<f64>, f64)> {
    let f = free.len();
    let mut kkt = DMatrix::zeros(f + 1, f + 1);
    let mut b = DVector::zeros(f + 1);
    for (a, &i) in free.iter().enumerate() {
        for (bb, &j) in free.iter().enumerate() {
            kkt[(a, bb)] = h[(i, j)];
        }
        kkt[(a, f)] = 1.0;
        kkt[(f, a)] = 1.0;
        b[a] = -g[i];
    }
    b[f] = rhs;
    let scale = kkt.amax().max(1.0);
    let lu = kkt.clone().lu();
    let sol = lu.solve(&b)?;
    if !sol.iter().all(|v| v.is_finite()) {
        return None;
    }
    // reject numerically singular systems
    let resid = (&kkt * &sol - &b).amax();
    if resid > 1e-9 * scale * (1.0 + sol.amax()) {
        return None;
    }
    Some((sol.rows(0, f).into_owned(), sol[f]))
}

fn active_set(h: &DMatrix<f64>, c: &DVector<f64>) -> Option<DVector<f64>> {
    let m = c.len();
    let start = (0..m)
        .min_by(|&i, &j| (0.5 * h[(i, i)] + c[i]).total_cmp(&(0.5 * h[(j, j)] + c[j])))
        .expect("nonempty support");
    let mut x = DVector::zeros(m);
    x[start] = 1.0;
    let mut free = vec![start];
    let cap = 20 * m + 50;

    for _ in 0..cap {
        let g = h * &x + c;
        let (p, _) = eqp(h, &g, &free, 0.0)?;
        let tol = 1e-12 * (1.0 + g.amax());
        if p.amax() <= 1e-12 {
            let beta = -free.iter().map(|&i| g[i]).sum::<f64>() / free.len() as f64;
            let entering = (0..m)
                .filter(|i| !free.contains(i))
                .map(|i| (i, g[i] + beta))
                .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
            match entering {
                Some((i, lambda)) if lambda < -tol => {
                    free.push(i);
                    free.sort_unstable();
                }
                _ => return Some(refine(h, c, &free, x)),
            }
            continue;
        }
        let mut alpha = 1.0;
        let mut blocking = None;
        for (a, &i) in free.iter().enumerate() {
            if p[a] < 0.0 {
                let ratio = -x[i] / p[a];
                if ratio < alpha {
                    alpha = ratio;
                    blocking = Some(i);
                }
            }
        }
        for (a, &i) in free.iter().enumerate() {
            x[i] = (x[i] + alpha * p[a]).max(0.0);
        }
        if let Some(b) = blocking {
            x[b] = 0.0;
            free.retain(|&i| i != b);
        }
    }
    None
}

/// One direct solve on the final free set removes the drift accumulated by
/// the steps; kept only if it stays nonnegative.
fn refine(h: &DMatrix<f64>, c: &DVector<f64>, free: &[usize], x: DVector<f64>) -> DVector<f64> {
    let Some((z, _)) = eqp(h, c, free, 1.0) else {
        return x;
    };
    if z.iter().any(|&v| v < 0.0) {
        return x;
    }
    let mut out = DVector::zeros(x.len());
    for (a, &i) in free.iter().enumerate() {
        out[i] = z[a];
    }
    out
}

fn projected_gradient(h: &DMatrix<f64>, c: &DVector<f64>) -> Result<DVector<f64>> {
    let m = c.len();
    let lip = max_eigenvalue(h, 1e-8)?.max(1e-12);
    let step = 1.0 / lip;
    let mut x = DVector::from_element(m, 1.0 / m as f64);
    let mut z = x.clone();
    let mut t = 1.0_f64;
    for _ in 0..FALLBACK_PG_STEPS {
        let grad = h * &z + c;
        let x_next = project_simplex(&(&z - grad * step));
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        z = &x_next + (&x_next - &x) * ((t - 1.0) / t_next);
        x = x_next;
        t = t_next;
    }
    Ok(x)
}
