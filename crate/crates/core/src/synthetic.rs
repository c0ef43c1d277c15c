//! Seeded factor-model instances for benchmarks and tests.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::model::{ProblemSpec, ReturnsMatrix};

/// `A = F F'/m + d I` with `F` an `n x m` standard normal loading,
/// `m = max(5, n / 20)` and `d = 0.01 trace(F F'/m) / n`; `mu ~ U[0, 0.1]`.
pub fn factor_model(n: usize, k: usize, tau: f64, seed: u64) -> Result<ProblemSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = (n / 20).max(5);
    let f = DMatrix::from_fn(n, m, |_, _| rng.sample::<f64, _>(StandardNormal));
    let mut a = &f * f.transpose() / m as f64;
    let d = 0.01 * a.trace() / n as f64;
    for i in 0..n {
        a[(i, i)] += d;
    }
    // exact symmetry regardless of summation order
    let a = (&a + a.transpose()) * 0.5;
    let mu = DVector::from_fn(n, |_, _| rng.random_range(0.0..0.1));
    ProblemSpec::new(a, mu, tau, k)
}

/// `periods x n` returns drawn from a one-factor model with asset drifts in
/// `[0, 0.02]`, for backtest demos.
pub fn factor_returns(periods: usize, n: usize, seed: u64) -> Result<ReturnsMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let beta = DVector::from_fn(n, |_, _| rng.random_range(0.5..1.5));
    let drift = DVector::from_fn(n, |_, _| rng.random_range(0.0..0.02));
    let mut values = DMatrix::zeros(periods, n);
    for t in 0..periods {
        let market: f64 = 0.04 * rng.sample::<f64, _>(StandardNormal);
        for i in 0..n {
            let idio: f64 = 0.05 * rng.sample::<f64, _>(StandardNormal);
            values[(t, i)] = drift[i] + beta[i] * market + idio;
        }
    }
    ReturnsMatrix::from_values(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_instance() {
        let a = factor_model(30, 5, 0.5, 7).unwrap();
        let b = factor_model(30, 5, 0.5, 7).unwrap();
        assert_eq!(a, b);
        let c = factor_model(30, 5, 0.5, 8).unwrap();
        assert_ne!(a.a, c.a);
    }

    #[test]
    fn generated_moments_are_valid() {
        let s = factor_model(60, 10, 0.5, 1).unwrap();
        assert!(s.mu.iter().all(|&m| (0.0..0.1).contains(&m)));
        assert!(s.validate().is_ok());
        let r = factor_returns(24, 8, 3).unwrap();
        assert_eq!(r.values().shape(), (24, 8));
    }
}
