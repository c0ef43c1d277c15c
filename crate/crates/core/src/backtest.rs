//! In-sample statistics, rolling-horizon out-of-sample evaluation and the
//! relative gap used to compare solvers.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    estimate_moments, make_feasible_point, ProblemSpec, ReturnsMatrix, SolverConfig,
};
use crate::serde_helpers::dvec;
use crate::solution::{Solution, SolverKind, Status};
use crate::{ccmv_padm_solve, ccmv_pd_solve, oracle_solve};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InSampleStats {
    #[serde(rename = "return")]
    pub ret: f64,
    /// Variance `x'Ax`.
    pub risk: f64,
    /// `mu'x / sqrt(x'Ax)`.
    pub sharpe: f64,
}

/// Expected return, variance and Sharpe ratio of `x` under `spec`'s moments.
pub fn in_sample_stats(spec: &ProblemSpec, x: &DVector<f64>) -> Result<InSampleStats> {
    spec.check_len(x)?;
    let ret = spec.mu.dot(x);
    let risk = (&spec.a * x).dot(x).max(0.0);
    let sharpe = if ret == 0.0 {
        0.0
    } else if risk == 0.0 {
        return Err(Error::SharpeUndefined(ret));
    } else {
        ret / risk.sqrt()
    };
    Ok(InSampleStats { ret, risk, sharpe })
}

/// `|g - g_ref| / (|g_ref| + 1)`.
pub fn gap(g: f64, g_ref: f64) -> f64 {
    (g - g_ref).abs() / (g_ref.abs() + 1.0)
}

/// Solve one window with the configured solver.
pub fn solve_with(kind: SolverKind, spec: &ProblemSpec, cfg: &SolverConfig) -> Result<Solution> {
    match kind {
        SolverKind::Pd => ccmv_pd_solve(spec, cfg),
        SolverKind::Padm => ccmv_padm_solve(spec, cfg),
        SolverKind::Oracle => oracle_solve(spec),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestConfig {
    /// Estimation window length in periods.
    pub window: usize,
    pub solver_kind: SolverKind,
    pub solver_cfg: SolverConfig,
    pub tau: f64,
    pub k: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowRecord {
    /// Row index (0-based) of the realized return.
    pub realized_row: usize,
    #[serde(with = "dvec")]
    pub weights: DVector<f64>,
    pub realized_return: f64,
    /// `None` when the solver failed and the previous weights were carried forward.
    pub status: Option<Status>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InSampleSummary {
    #[serde(rename = "return")]
    pub ret: f64,
    pub risk: f64,
    /// `None` when the window has zero risk but nonzero return.
    pub sharpe: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestReport {
    pub tickers: Vec<String>,
    pub windows: Vec<WindowRecord>,
    pub oos_returns: Vec<f64>,
    pub mu_hat: f64,
    pub sigma_hat: f64,
    /// `None` when `sigma_hat` is zero.
    pub sharpe_hat: Option<f64>,
    /// Statistics of the last window's portfolio under that window's moments.
    pub in_sample: InSampleSummary,
    pub failed_windows: Vec<usize>,
}

impl BacktestReport {
    pub fn weights_by_window(&self) -> Vec<&DVector<f64>> {
        self.windows.iter().map(|w| &w.weights).collect()
    }
}

/// Mean and `n - 1` standard deviation by the two-pass formula.
pub fn mean_and_std(values: &[f64]) -> Result<(f64, f64)> {
    let n = values.len();
    if n < 2 {
        return Err(Error::SigmaUndefined(format!(
            "{n} out-of-sample return(s); need at least 2"
        )));
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    Ok((mean, var.sqrt()))
}

/// Rolling-horizon evaluation with the solver named in `cfg`.
pub fn rolling_horizon(returns: &ReturnsMatrix, cfg: &BacktestConfig) -> Result<BacktestReport> {
    let kind = cfg.solver_kind;
    let solver_cfg = cfg.solver_cfg.clone();
    rolling_horizon_with(returns, cfg.window, cfg.tau, cfg.k, move |spec| {
        solve_with(kind, spec, &solver_cfg)
    })
}

/// Rolling-horizon evaluation with an arbitrary window solver.
///
/// Rows are periods `r_1..r_T`. For `t = window..T-1` the moments are
/// estimated from `r_{t-window+1}..r_t`, the portfolio `x_t` is solved and
/// held over `r_{t+1}`. A failed window reuses the previous weights (the
/// equal-weight top-`k` point for the first window).
pub fn rolling_horizon_with<F>(
    returns: &ReturnsMatrix,
    window: usize,
    tau: f64,
    k: usize,
    solve: F,
) -> Result<BacktestReport>
where
    F: Fn(&ProblemSpec) -> Result<Solution> + Sync,
{
    let t_total = returns.n_periods();
    if window < 2 || window >= t_total {
        return Err(Error::InvalidConfig(format!(
            "window must satisfy 2 <= window < T = {t_total}, got {window}"
        )));
    }
    if t_total - window < 2 {
        return Err(Error::SigmaUndefined(format!(
            "window {window} leaves a single out-of-sample period"
        )));
    }

    let solved: Vec<Result<(ProblemSpec, Result<Solution>)>> = (window..t_total)
        .into_par_iter()
        .map(|t| {
            let est = estimate_moments(&returns.window(t - window, window)?)?;
            let spec = ProblemSpec::from_moments(est, tau, k)?;
            let sol = solve(&spec);
            Ok((spec, sol))
        })
        .collect();

    let mut windows = Vec::with_capacity(t_total - window);
    let mut failed = Vec::new();
    let mut previous: Option<DVector<f64>> = None;
    let mut last_spec = None;
    for (offset, item) in solved.into_iter().enumerate() {
        let t = window + offset;
        let (spec, sol) = item?;
        let (weights, status, error) = match sol {
            Ok(s) => (s.weights, Some(s.status), None),
            Err(e) => {
                log::warn!("window ending at row {} failed: {e}", t - 1);
                failed.push(offset);
                let w = previous
                    .clone()
                    .unwrap_or_else(|| make_feasible_point(&spec));
                (w, None, Some(e.to_string()))
            }
        };
        let realized_return = weights.dot(&returns.values().row(t).transpose());
        previous = Some(weights.clone());
        windows.push(WindowRecord {
            realized_row: t,
            weights,
            realized_return,
            status,
            error,
        });
        last_spec = Some(spec);
    }

    let oos_returns: Vec<f64> = windows.iter().map(|w| w.realized_return).collect();
    let (mu_hat, sigma_hat) = mean_and_std(&oos_returns)?;
    let sharpe_hat = (sigma_hat > 0.0).then(|| mu_hat / sigma_hat);

    let spec = last_spec.expect("at least two windows");
    let last_w = &windows.last().expect("at least two windows").weights;
    let in_sample = match in_sample_stats(&spec, last_w) {
        Ok(s) => InSampleSummary {
            ret: s.ret,
            risk: s.risk,
            sharpe: Some(s.sharpe),
        },
        Err(Error::SharpeUndefined(ret)) => InSampleSummary {
            ret,
            risk: 0.0,
            sharpe: None,
        },
        Err(e) => return Err(e),
    };

    Ok(BacktestReport {
        tickers: returns.tickers().to_vec(),
        windows,
        oos_returns,
        mu_hat,
        sigma_hat,
        sharpe_hat,
        in_sample,
        failed_windows: failed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector, DMatrix};

    #[test]
    fn in_sample_example() {
        let spec = ProblemSpec::new(DMatrix::identity(2, 2), dvector![0.2, 0.0], 1.0, 1).unwrap();
        let s = in_sample_stats(&spec, &dvector![1.0, 0.0]).unwrap();
        assert!((s.ret - 0.2).abs() < 1e-15);
        assert_eq!(s.risk, 1.0);
        assert!((s.sharpe - 0.2).abs() < 1e-15);
        let z = in_sample_stats(&spec, &dvector![0.0, 1.0]).unwrap();
        assert_eq!(z.sharpe, 0.0);
    }

    #[test]
    fn zero_risk_sharpe_is_undefined() {
        let spec = ProblemSpec {
            a: DMatrix::zeros(2, 2),
            mu: dvector![0.1, 0.0],
            tau: 1.0,
            k: 1,
        };
        assert!(matches!(
            in_sample_stats(&spec, &dvector![1.0, 0.0]),
            Err(Error::SharpeUndefined(_))
        ));
    }

    #[test]
    fn table_arithmetic_is_consistent() {
        // return 0.0840 and variance 0.0051 give a Sharpe ratio of about 1.176
        assert!((0.0840f64 / 0.0051f64.sqrt() - 1.1765).abs() < 5e-4);
    }

    #[test]
    fn gap_examples() {
        assert!((gap(0.0663, 0.0840) - 0.0163).abs() < 5e-5);
        assert!((gap(1.0755, 1.1765) - 0.0464).abs() < 5e-5);
        assert_eq!(gap(0.3, 0.3), 0.0);
    }

    fn constant_first_asset(spec: &ProblemSpec) -> Result<Solution> {
        let mut x = DVector::zeros(spec.n());
        x[0] = 1.0;
        crate::oracle::OracleResult {
            support: vec![0],
            objective: crate::model::objective_f(spec, &x)?,
            x,
            supports_examined: 0,
        }
        .into_solution(spec)
    }

    #[test]
    fn hand_computed_four_periods() {
        let r = ReturnsMatrix::from_values(dmatrix![
            0.02, 0.01;
            -0.01, 0.03;
            0.1, 0.0;
            -0.1, 0.0
        ])
        .unwrap();
        let rep = rolling_horizon_with(&r, 2, 0.5, 1, constant_first_asset).unwrap();
        assert_eq!(rep.oos_returns, vec![0.1, -0.1]);
        assert_eq!(rep.mu_hat, 0.0);
        assert!((rep.sigma_hat.powi(2) - 0.02).abs() < 1e-15);
        assert_eq!(rep.sharpe_hat, Some(0.0));
    }

    #[test]
    fn last_window_only_is_rejected() {
        let r = ReturnsMatrix::from_values(dmatrix![0.01; 0.02; 0.03]).unwrap();
        assert!(matches!(
            rolling_horizon_with(&r, 2, 0.5, 1, constant_first_asset),
            Err(Error::SigmaUndefined(_))
        ));
    }

    #[test]
    fn all_zero_returns_have_undefined_sharpe() {
        let r = ReturnsMatrix::from_values(DMatrix::zeros(6, 3)).unwrap();
        let cfg = BacktestConfig {
            window: 3,
            solver_kind: SolverKind::Pd,
            solver_cfg: SolverConfig::default(),
            tau: 0.5,
            k: 2,
        };
        let rep = rolling_horizon(&r, &cfg).unwrap();
        assert_eq!(rep.mu_hat, 0.0);
        assert_eq!(rep.sigma_hat, 0.0);
        assert_eq!(rep.sharpe_hat, None);
        assert!(rep.failed_windows.is_empty());
    }

    #[test]
    fn failing_solver_carries_weights_forward() {
        let r = ReturnsMatrix::from_values(dmatrix![
            0.02, 0.01;
            -0.01, 0.03;
            0.1, 0.0;
            -0.1, 0.0;
            0.05, 0.02
        ])
        .unwrap();
        let rep = rolling_horizon_with(&r, 2, 0.5, 1, |_| Err(Error::BadSupport)).unwrap();
        assert_eq!(rep.failed_windows, vec![0, 1, 2]);
        assert!(rep
            .windows
            .iter()
            .all(|w| w.status.is_none() && w.error.is_some()));
        let first = rep.windows[0].weights.clone();
        assert!(rep.windows.iter().all(|w| w.weights == first));
    }

    #[test]
    fn two_pass_std_matches_definition() {
        let v = [0.013, -0.021, 0.007, 0.044, -0.002];
        let (m, s) = mean_and_std(&v).unwrap();
        let mut acc = 0.0;
        for x in v {
            acc += (x - m) * (x - m);
        }
        assert!((s * s - acc / 4.0).abs() < 1e-12);
    }
}
