//! Instance generators and independent oracles shared by the integration tests.
#![allow(dead_code)]

use ccmv_core::{padm::phi, ProblemSpec, Solution};
use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// `B B' / r` with `B` an `n x r` Gaussian, `r` in `1..=n+2`; rank deficient
/// whenever `r < n`.
pub fn random_psd(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let r = rng.random_range(1..=n + 2);
    let scale = rng.random_range(0.05..0.3);
    let b = DMatrix::from_fn(n, r, |_, _| scale * normal(rng));
    let a = &b * b.transpose() / r as f64;
    (&a + a.transpose()) * 0.5
}

/// Full-rank covariance-like matrix: a factor part plus a diagonal floor.
pub fn random_pd(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let mut a = random_psd(rng, n);
    for i in 0..n {
        a[(i, i)] += rng.random_range(0.001..0.01);
    }
    a
}

pub fn random_spec(rng: &mut ChaCha8Rng, n: usize, k: usize) -> ProblemSpec {
    let a = random_pd(rng, n);
    let mu = DVector::from_fn(n, |_, _| rng.random_range(-0.02..0.12));
    let tau = rng.random_range(0.2..1.5);
    ProblemSpec::new(a, mu, tau, k).expect("generated spec is valid")
}

/// x-step by assembling `[2(A + rho I)  e; e'  0] [x; beta] = [tau mu + 2 rho y; 1]`.
pub fn dense_x_step(spec: &ProblemSpec, rho: f64, y: &DVector<f64>) -> DVector<f64> {
    let n = spec.n();
    let mut kkt = DMatrix::zeros(n + 1, n + 1);
    let mut rhs = DVector::zeros(n + 1);
    for i in 0..n {
        for j in 0..n {
            kkt[(i, j)] = 2.0 * spec.a[(i, j)];
        }
        kkt[(i, i)] += 2.0 * rho;
        kkt[(i, n)] = 1.0;
        kkt[(n, i)] = 1.0;
        rhs[i] = spec.tau * spec.mu[i] + 2.0 * rho * y[i];
    }
    rhs[n] = 1.0;
    let sol = kkt.lu().solve(&rhs).expect("KKT system is nonsingular");
    sol.rows(0, n).into_owned()
}

/// `||x - y||^2` with the squared terms summed in ascending order, so equal
/// multisets of terms give bitwise equal sums.
pub fn sq_dist(x: &DVector<f64>, y: &DVector<f64>) -> f64 {
    let mut terms: Vec<f64> = x
        .iter()
        .zip(y.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .collect();
    terms.sort_by(f64::total_cmp);
    terms.iter().sum()
}

/// `min ||x - y||^2` over `{y >= 0, ||y||_0 <= k}` by clamping on every
/// support of size `min(k, n)`.
pub fn brute_force_y_distance(x: &DVector<f64>, k: usize) -> f64 {
    let n = x.len();
    (0..n)
        .combinations(k.min(n))
        .map(|s| {
            let y = DVector::from_fn(n, |i, _| if s.contains(&i) { x[i].max(0.0) } else { 0.0 });
            sq_dist(x, &y)
        })
        .fold(f64::INFINITY, f64::min)
}

/// `min ||x - y||_1` over `{e'y = 1, ||y||_0 <= k}` by enumerating supports of
/// every size up to `k` and solving each one-constraint l1 fit exactly: the
/// best fit on `S` moves the budget deficit through any single coordinate.
pub fn brute_force_l1_projection(x: &DVector<f64>, k: usize) -> f64 {
    let n = x.len();
    let mut best = f64::INFINITY;
    for size in 1..=k.min(n) {
        for s in (0..n).combinations(size) {
            let outside: f64 = (0..n).filter(|i| !s.contains(i)).map(|i| x[i].abs()).sum();
            let deficit = 1.0 - s.iter().map(|&i| x[i]).sum::<f64>();
            best = best.min(outside + deficit.abs());
        }
    }
    best
}

/// Exact minimizer value of `f(x) + rho ||x - y||_1` over the simplex by
/// enumerating, per coordinate, `x_i = 0`, `x_i = y_i`, `x_i > y_i` or
/// `x_i < y_i`, solving each linear KKT system and keeping feasible
/// candidates. `A` must be positive definite.
pub fn enumerate_l1_x_step(spec: &ProblemSpec, rho: f64, y: &DVector<f64>) -> f64 {
    let n = spec.n();
    let mut best = f64::INFINITY;
    for states in (0..n).map(|_| 0u8..4).multi_cartesian_product() {
        // 0: zero, 1: at y, 2: above y, 3: below y
        if states
            .iter()
            .zip(y.iter())
            .any(|(&s, &yi)| s == 1 && yi < 0.0)
        {
            continue;
        }
        let free: Vec<usize> = (0..n).filter(|&i| states[i] >= 2).collect();
        let mut x = DVector::zeros(n);
        for i in 0..n {
            if states[i] == 1 {
                x[i] = y[i];
            }
        }
        if !free.is_empty() {
            let f = free.len();
            let mut kkt = DMatrix::zeros(f + 1, f + 1);
            let mut rhs = DVector::zeros(f + 1);
            let fixed_sum: f64 = x.sum();
            for (a, &i) in free.iter().enumerate() {
                for (b, &j) in free.iter().enumerate() {
                    kkt[(a, b)] = 2.0 * spec.a[(i, j)];
                }
                kkt[(a, f)] = 1.0;
                kkt[(f, a)] = 1.0;
                let sign = if states[i] == 2 { 1.0 } else { -1.0 };
                let coupling: f64 = (0..n)
                    .filter(|j| !free.contains(j))
                    .map(|j| 2.0 * spec.a[(i, j)] * x[j])
                    .sum();
                rhs[a] = spec.tau * spec.mu[i] - rho * sign - coupling;
            }
            rhs[f] = 1.0 - fixed_sum;
            let Some(sol) = kkt.lu().solve(&rhs) else {
                continue;
            };
            for (a, &i) in free.iter().enumerate() {
                x[i] = sol[a];
            }
        }
        let tol = 1e-12;
        let ok = (x.sum() - 1.0).abs() < 1e-10
            && (0..n).all(|i| match states[i] {
                2 => x[i] >= y[i] - tol && x[i] >= -tol,
                3 => x[i] <= y[i] + tol && x[i] >= -tol,
                _ => true,
            });
        if ok {
            let x = x.map(|v| v.max(0.0));
            best = best.min(phi(spec, rho, &x, y));
        }
    }
    best
}

/// Exact zeros off the reported support, `|support| <= k`, nonnegative and
/// budget-feasible weights.
pub fn assert_hard_cardinality(sol: &Solution, k: usize) {
    assert!(
        sol.respects_cardinality(k),
        "cardinality violated: {:?}",
        sol.support
    );
    assert!(sol.weights.iter().all(|&w| w >= 0.0), "negative weight");
    assert!((sol.weights.sum() - 1.0).abs() <= 1e-8, "budget violated");
}

pub fn cardinality_ok(sol: &Solution, k: usize) -> bool {
    sol.respects_cardinality(k)
        && sol.weights.iter().all(|&w| w >= 0.0)
        && (sol.weights.sum() - 1.0).abs() <= 1e-8
}
