//! Problem data, moment estimation and the objective/penalty evaluators
//! shared by every solver.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::serde_helpers::{dmat, dvec};

/// Relative tolerance on `|A_ij - A_ji|` accepted by [`ProblemSpec::validate`].
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Eigenvalues down to `-PSD_TOL * lambda_max` are treated as round-off.
pub const PSD_TOL: f64 = 1e-10;

/// Per-period simple returns, one row per period and one column per asset.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnsMatrix {
    values: DMatrix<f64>,
    tickers: Vec<String>,
    period_label: String,
}

impl ReturnsMatrix {
    pub fn new(
        values: DMatrix<f64>,
        tickers: Vec<String>,
        period_label: impl Into<String>,
    ) -> Result<Self> {
        let (t, n) = values.shape();
        if n == 0 {
            return Err(Error::BadDimension {
                expected: 1,
                got: 0,
            });
        }
        if tickers.len() != n {
            return Err(Error::BadDimension {
                expected: n,
                got: tickers.len(),
            });
        }
        if t < 2 {
            return Err(Error::InsufficientData(t));
        }
        check_finite(&values)?;
        Ok(Self {
            values,
            tickers,
            period_label: period_label.into(),
        })
    }

    /// Builds a matrix with generated tickers `A1..An`.
    pub fn from_values(values: DMatrix<f64>) -> Result<Self> {
        let tickers = (1..=values.ncols()).map(|i| format!("A{i}")).collect();
        Self::new(values, tickers, "period")
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn period_label(&self) -> &str {
        &self.period_label
    }

    pub fn n_periods(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_assets(&self) -> usize {
        self.values.ncols()
    }

    /// Copy of rows `start..start + len`.
    pub fn window(&self, start: usize, len: usize) -> Result<Self> {
        if start + len > self.n_periods() {
            return Err(Error::BadDimension {
                expected: self.n_periods(),
                got: start + len,
            });
        }
        let values = self.values.rows(start, len).into_owned();
        Self::new(values, self.tickers.clone(), self.period_label.clone())
    }
}

fn check_finite(values: &DMatrix<f64>) -> Result<()> {
    for (i, row) in values.row_iter().enumerate() {
        if let Some(j) = row.iter().position(|v| !v.is_finite()) {
            return Err(Error::BadData {
                row: i,
                col: j,
                reason: format!("non-finite value {}", row[j]),
            });
        }
    }
    Ok(())
}

/// Sample mean and covariance of a returns matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentEstimate {
    pub mu: DVector<f64>,
    pub a: DMatrix<f64>,
}

/// Column means and the unbiased (`T - 1`) sample covariance, symmetrized.
pub fn estimate_moments(returns: &ReturnsMatrix) -> Result<MomentEstimate> {
    let values = returns.values();
    let t = values.nrows();
    if t < 2 {
        return Err(Error::InsufficientData(t));
    }
    check_finite(values)?;
    // Shifting by the first row keeps constant columns exactly zero.
    let shift = values.row(0).clone_owned();
    let mut centered = values.clone();
    for mut row in centered.row_iter_mut() {
        row -= &shift;
    }
    let shifted_mean = centered.row_mean();
    for mut row in centered.row_iter_mut() {
        row -= &shifted_mean;
    }
    let mu = (shift + shifted_mean).transpose();
    let cov = centered.tr_mul(&centered) / (t as f64 - 1.0);
    let a = (&cov + cov.transpose()) * 0.5;
    Ok(MomentEstimate { mu, a })
}

/// One instance of the cardinality-constrained mean-variance problem
/// `min x'Ax - tau mu'x  s.t.  e'x = 1, x >= 0, ||x||_0 <= k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    #[serde(rename = "A", with = "dmat")]
    pub a: DMatrix<f64>,
    #[serde(with = "dvec")]
    pub mu: DVector<f64>,
    pub tau: f64,
    pub k: usize,
}

impl ProblemSpec {
    /// Validated constructor.
    pub fn new(a: DMatrix<f64>, mu: DVector<f64>, tau: f64, k: usize) -> Result<Self> {
        let spec = Self { a, mu, tau, k };
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_moments(m: MomentEstimate, tau: f64, k: usize) -> Result<Self> {
        Self::new(m.a, m.mu, tau, k)
    }

    pub fn n(&self) -> usize {
        self.mu.len()
    }

    /// Checks dimensions, `tau > 0`, `1 <= k <= n`, symmetry and PSD-ness of `A`.
    pub fn validate(&self) -> Result<()> {
        let n = self.mu.len();
        if self.a.nrows() != n || self.a.ncols() != n {
            return Err(Error::BadDimension {
                expected: n,
                got: self.a.nrows().max(self.a.ncols()),
            });
        }
        if n == 0 {
            return Err(Error::BadDimension {
                expected: 1,
                got: 0,
            });
        }
        check_finite(&self.a)?;
        if let Some(i) = self.mu.iter().position(|v| !v.is_finite()) {
            return Err(Error::BadData {
                row: 0,
                col: i,
                reason: "non-finite expected return".into(),
            });
        }
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(Error::BadTau(self.tau));
        }
        if self.k < 1 || self.k > n {
            return Err(Error::BadK { k: self.k, n });
        }
        let scale = self.a.amax();
        if scale > 0.0 {
            let asym = (&self.a - self.a.transpose()).amax() / scale;
            if asym > SYMMETRY_TOL {
                return Err(Error::AsymmetricA(asym));
            }
        }
        let sym = (&self.a + self.a.transpose()) * 0.5;
        // A shifted Cholesky settles the common case; the spectrum is only
        // computed to decide borderline matrices and report failures.
        let lmax_bound = sym
            .row_iter()
            .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max);
        let shift = PSD_TOL * 1e-3 * lmax_bound;
        if shift > 0.0 && Cholesky::new(&sym + DMatrix::identity(n, n) * shift).is_some() {
            return Ok(());
        }
        let eig = SymmetricEigen::new(sym).eigenvalues;
        let min = eig.min();
        let max = eig.max();
        if min < -PSD_TOL * max.max(0.0) {
            return Err(Error::NotPsd { min, max });
        }
        Ok(())
    }

    pub(crate) fn check_len(&self, v: &DVector<f64>) -> Result<()> {
        if v.len() != self.n() || self.a.nrows() != self.n() {
            return Err(Error::BadDimension {
                expected: self.n(),
                got: v.len(),
            });
        }
        Ok(())
    }
}

/// Hyperparameters of the penalty schedule and the inner block coordinate loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Initial penalty. The PD solver raises it to `lambda_max(A) + 1` when smaller.
    pub rho0: f64,
    /// Geometric growth factor of the penalty.
    pub zeta: f64,
    pub eps_inner: f64,
    pub eps_outer: f64,
    pub max_inner: usize,
    pub max_outer: usize,
    /// Added to the upper bound used by the warm-start safeguard.
    pub upsilon_slack: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            rho0: 0.1,
            zeta: 10.0,
            eps_inner: 1e-4,
            eps_outer: 1e-4,
            max_inner: 1000,
            max_outer: 50,
            upsilon_slack: 0.0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if !(self.rho0.is_finite() && self.rho0 > 0.0) {
            return bad("rho0 must be positive");
        }
        if !(self.zeta.is_finite() && self.zeta > 1.0) {
            return bad("zeta must exceed 1");
        }
        if !(self.eps_inner > 0.0 && self.eps_outer > 0.0) {
            return bad("tolerances must be positive");
        }
        if self.max_inner < 1 || self.max_outer < 1 {
            return bad("iteration caps must be at least 1");
        }
        if self.upsilon_slack.is_nan() || self.upsilon_slack < 0.0 {
            return bad("upsilon_slack must be nonnegative");
        }
        Ok(())
    }
}

const POWER_MAX_ITERS: usize = 50_000;
const RESTART_SEED: u64 = 0x00C0_FFEE;

/// Largest eigenvalue of a symmetric PSD matrix by power iteration.
///
/// Runs from the all-ones vector and again from a seeded random start, since
/// the all-ones vector can be orthogonal to the leading eigenvector (e.g.
/// `[[2, -1], [-1, 2]]`). Each run stops once the eigen-residual
/// `||Av - lambda v||` falls below `tol * lambda`.
pub fn max_eigenvalue(a: &DMatrix<f64>, tol: f64) -> Result<f64> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::BadDimension {
            expected: n,
            got: a.ncols(),
        });
    }
    if n == 0 || a.amax() == 0.0 {
        return Ok(0.0);
    }
    let from_ones = power_iterate(a, DVector::from_element(n, 1.0), tol)?;
    let mut rng = ChaCha8Rng::seed_from_u64(RESTART_SEED);
    let start = DVector::from_fn(n, |_, _| rng.random::<f64>() - 0.5);
    let from_random = power_iterate(a, start, tol)?;
    Ok(from_ones.max(from_random))
}

fn power_iterate(a: &DMatrix<f64>, start: DVector<f64>, tol: f64) -> Result<f64> {
    let mut v = start;
    let norm = v.norm();
    if norm == 0.0 {
        return Ok(0.0);
    }
    v /= norm;
    let mut w = DVector::zeros(v.len());
    for _ in 0..POWER_MAX_ITERS {
        w.gemv(1.0, a, &v, 0.0);
        let lambda = v.dot(&w);
        let wn = w.norm();
        if wn == 0.0 {
            // start lies in the null space
            return Ok(0.0);
        }
        let residual = (&w - &v * lambda).norm();
        if residual <= tol * lambda.abs() {
            return Ok(lambda);
        }
        v.copy_from(&w);
        v /= wn;
    }
    Err(Error::EigenFailed(POWER_MAX_ITERS))
}

/// Equal weights `1/k` on the `k` assets with the largest expected return
/// (lowest index first on ties).
pub fn make_feasible_point(spec: &ProblemSpec) -> DVector<f64> {
    let n = spec.n();
    let k = spec.k.clamp(1, n);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| spec.mu[j].total_cmp(&spec.mu[i]).then(i.cmp(&j)));
    let mut x = DVector::zeros(n);
    for &i in &order[..k] {
        x[i] = 1.0 / k as f64;
    }
    x
}

/// `f(x) = x'Ax - tau mu'x`.
pub fn objective_f(spec: &ProblemSpec, x: &DVector<f64>) -> Result<f64> {
    spec.check_len(x)?;
    Ok(objective_unchecked(spec, x))
}

pub(crate) fn objective_unchecked(spec: &ProblemSpec, x: &DVector<f64>) -> f64 {
    (&spec.a * x).dot(x) - spec.tau * spec.mu.dot(x)
}

/// `q_rho(x, y) = f(x) + rho ||x - y||^2`.
pub fn penalty_q(spec: &ProblemSpec, rho: f64, x: &DVector<f64>, y: &DVector<f64>) -> Result<f64> {
    spec.check_len(x)?;
    spec.check_len(y)?;
    Ok(penalty_unchecked(spec, rho, x, y))
}

pub(crate) fn penalty_unchecked(
    spec: &ProblemSpec,
    rho: f64,
    x: &DVector<f64>,
    y: &DVector<f64>,
) -> f64 {
    objective_unchecked(spec, x) + rho * (x - y).norm_squared()
}

/// `e'x = 1`, `x >= 0` and `||x||_0 <= k`, all checked without tolerance
/// except `tol` on the budget equation.
pub fn is_feasible(x: &DVector<f64>, k: usize, tol: f64) -> bool {
    (x.sum() - 1.0).abs() <= tol
        && x.iter().all(|&v| v >= 0.0)
        && x.iter().filter(|&&v| v != 0.0).count() <= k
}
