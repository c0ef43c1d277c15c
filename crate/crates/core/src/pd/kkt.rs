use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::model::ProblemSpec;
use crate::solution::KktCertificate;

/// Entries at or below this are treated as sitting on the bound `x_i = 0`.
pub const ACTIVE_TOL: f64 = 1e-10;

/// First-order certificate of `x` for the problem restricted to `support`.
///
/// The off-support multiplier `w` is free, so it absorbs the gradient there
/// and only indices in `support` are checked. `beta` is the least-squares fit
/// of `2(Ax)_i - tau mu_i + beta = 0` over the strictly positive entries; the
/// remaining support entries get `lambda_i = 2(Ax)_i - tau mu_i + beta`.
pub fn kkt_check(
    spec: &ProblemSpec,
    x: &DVector<f64>,
    support: &[usize],
) -> Result<KktCertificate> {
    spec.check_len(x)?;
    let n = spec.n();
    if support.is_empty() || support.iter().any(|&i| i >= n) {
        return Err(Error::BadSupport);
    }
    let mut l = support.to_vec();
    l.sort_unstable();
    l.dedup();

    let grad = (&spec.a * x) * 2.0 - &spec.mu * spec.tau;
    let positive: Vec<usize> = l.iter().copied().filter(|&i| x[i] > ACTIVE_TOL).collect();
    let beta = if positive.is_empty() {
        -l.iter().map(|&i| grad[i]).fold(f64::INFINITY, f64::min)
    } else {
        -positive.iter().map(|&i| grad[i]).sum::<f64>() / positive.len() as f64
    };

    let mut lambda = DVector::zeros(n);
    for &i in &l {
        if x[i] <= ACTIVE_TOL {
            lambda[i] = grad[i] + beta;
        }
    }
    let stationarity_residual = positive
        .iter()
        .map(|&i| (grad[i] + beta).abs())
        .fold(0.0, f64::max);
    let dual_feasibility_violation = l.iter().map(|&i| -lambda[i]).fold(0.0, f64::max);
    let complementarity_residual = lambda
        .iter()
        .zip(x.iter())
        .map(|(lam, xi)| (lam * xi).abs())
        .fold(0.0, f64::max);

    Ok(KktCertificate {
        beta,
        lambda,
        support: l,
        stationarity_residual,
        complementarity_residual,
        dual_feasibility_violation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dvector, DMatrix};

    fn toy() -> ProblemSpec {
        ProblemSpec::new(DMatrix::identity(3, 3), dvector![0.3, 0.2, 0.1], 1.0, 1).unwrap()
    }

    #[test]
    fn global_optimum_of_toy_certifies() {
        let cert = kkt_check(&toy(), &dvector![1.0, 0.0, 0.0], &[0]).unwrap();
        assert!((cert.beta + 1.7).abs() < 1e-15);
        assert!(cert.max_residual() <= 1e-10);
    }

    #[test]
    fn perturbed_point_is_detected() {
        let spec = ProblemSpec { k: 3, ..toy() };
        let opt = kkt_check(
            &spec,
            &dvector![0.3833333333333333, 0.3333333333333333, 0.2833333333333333],
            &[0, 1, 2],
        )
        .unwrap();
        // x_i = (mu_i - beta) / 2 with beta = -1.4 / 3 is the full-support optimum
        assert!(opt.stationarity_residual < 1e-14 && opt.dual_feasibility_violation == 0.0);
        let bad = kkt_check(&spec, &dvector![0.5, 0.3, 0.2], &[0, 1, 2]).unwrap();
        assert!(bad.stationarity_residual > 1e-3);
    }

    #[test]
    fn wrong_bound_multiplier_shows_as_dual_violation() {
        let spec = ProblemSpec { k: 2, ..toy() };
        // dropping the best asset leaves a negative multiplier on it
        let cert = kkt_check(&spec, &dvector![0.0, 1.0, 0.0], &[0, 1]).unwrap();
        assert!(cert.dual_feasibility_violation > 0.05);
    }

    #[test]
    fn empty_support_rejected() {
        assert!(matches!(
            kkt_check(&toy(), &dvector![1.0, 0.0, 0.0], &[]),
            Err(Error::BadSupport)
        ));
    }
}
