//! Closed-form block minimizers of the quadratic penalty subproblem.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::model::ProblemSpec;

/// Cached pieces of the x-step closed form for one penalty value:
/// the Cholesky factor of `A + rho I`, `s = (A + rho I)^-1 e`,
/// `t = (A + rho I)^-1 (tau mu)` and `e's`.
#[derive(Debug, Clone)]
pub struct PenaltyFactorization {
    pub rho: f64,
    pub chol: Cholesky<f64, Dyn>,
    pub s: DVector<f64>,
    pub t: DVector<f64>,
    pub ets: f64,
}

impl PenaltyFactorization {
    /// Lower-triangular factor `L` with `L L' = A + rho I`.
    pub fn l(&self) -> DMatrix<f64> {
        self.chol.l()
    }
}

pub fn build_factorization(spec: &ProblemSpec, rho: f64) -> Result<PenaltyFactorization> {
    if !(rho.is_finite() && rho > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "rho must be positive, got {rho}"
        )));
    }
    let n = spec.n();
    spec.check_len(&spec.mu)?;
    let shifted = &spec.a + DMatrix::identity(n, n) * rho;
    let chol = Cholesky::new(shifted).ok_or_else(|| {
        Error::NumericalBreakdown(format!("A + {rho} I is not positive definite"))
    })?;
    let s = chol.solve(&DVector::from_element(n, 1.0));
    let t = chol.solve(&(&spec.mu * spec.tau));
    let ets = s.sum();
    if !(ets > 0.0 && ets.is_finite()) {
        return Err(Error::NumericalBreakdown(format!(
            "e'(A + rho I)^-1 e = {ets}"
        )));
    }
    Ok(PenaltyFactorization {
        rho,
        chol,
        s,
        t,
        ets,
    })
}

/// Minimizer of `q_rho(x, y)` over the hyperplane `e'x = 1`:
///
/// `x = 1/2 (A + rho I)^-1 (tau mu + 2 rho y + c e)` with
/// `c = (1 - 1/2 e'(A + rho I)^-1 (tau mu + 2 rho y)) / (1/2 e'(A + rho I)^-1 e)`.
///
/// Uses the cached `s` and `t`, so only `(A + rho I)^-1 y` is solved here.
pub fn x_step(
    fact: &PenaltyFactorization,
    spec: &ProblemSpec,
    y: &DVector<f64>,
) -> Result<DVector<f64>> {
    spec.check_len(y)?;
    if fact.s.len() != y.len() {
        return Err(Error::BadDimension {
            expected: fact.s.len(),
            got: y.len(),
        });
    }
    Ok(x_step_unchecked(fact, y))
}

pub(crate) fn x_step_unchecked(fact: &PenaltyFactorization, y: &DVector<f64>) -> DVector<f64> {
    combine(fact, fact.chol.solve(y))
}

/// Assembles the x-step from `u = (A + rho I)^-1 y`.
fn combine(fact: &PenaltyFactorization, u: DVector<f64>) -> DVector<f64> {
    let rho = fact.rho;
    // b = (A + rho I)^-1 (tau mu + 2 rho y)
    let mut b = u;
    b *= 2.0 * rho;
    b += &fact.t;
    let c = (1.0 - 0.5 * b.sum()) / (0.5 * fact.ets);
    b.axpy(c, &fact.s, 1.0);
    b *= 0.5;
    b
}

/// Columns of `(A + rho I)^-1`, solved on first use. The y-iterates have at
/// most `k` nonzeros, so `(A + rho I)^-1 y` becomes a sum of `k` cached columns.
#[derive(Debug)]
pub(crate) struct InverseColumns<'a> {
    fact: &'a PenaltyFactorization,
    cols: Vec<Option<DVector<f64>>>,
}

impl<'a> InverseColumns<'a> {
    pub(crate) fn new(fact: &'a PenaltyFactorization) -> Self {
        Self {
            fact,
            cols: vec![None; fact.s.len()],
        }
    }

    /// `(A + rho I)^-1 y`.
    pub(crate) fn apply(&mut self, y: &DVector<f64>) -> DVector<f64> {
        let n = y.len();
        let nnz = y.iter().filter(|&&v| v != 0.0).count();
        if 2 * nnz > n {
            return self.fact.chol.solve(y);
        }
        let mut u = DVector::zeros(n);
        for (i, &yi) in y.iter().enumerate() {
            if yi != 0.0 {
                let col = self.cols[i].get_or_insert_with(|| {
                    let mut e = DVector::zeros(n);
                    e[i] = 1.0;
                    self.fact.chol.solve(&e)
                });
                u.axpy(yi, col, 1.0);
            }
        }
        u
    }

    /// Same as [`x_step_unchecked`] through the column cache.
    pub(crate) fn x_step(&mut self, y: &DVector<f64>) -> DVector<f64> {
        let u = self.apply(y);
        combine(self.fact, u)
    }
}

/// Projection onto `{y >= 0, ||y||_0 <= k}`: clamp negatives to zero and keep
/// the `k` largest entries (lower index wins ties).
pub fn y_step(x: &DVector<f64>, k: usize) -> DVector<f64> {
    let n = x.len();
    let clamped: Vec<f64> = x.iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect();
    let mut y = DVector::zeros(n);
    if k == 0 {
        return y;
    }
    if k >= n {
        y.iter_mut().zip(&clamped).for_each(|(yi, &c)| *yi = c);
        return y;
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.select_nth_unstable_by(k - 1, |&i, &j| {
        clamped[j].total_cmp(&clamped[i]).then(i.cmp(&j))
    });
    for &i in &idx[..k] {
        y[i] = clamped[i];
    }
    y
}
