//! Cardinality-constrained mean-variance portfolio selection.
//!
//! Solves
//!
//! ```text
//!     minimize    x'Ax - tau mu'x
//!     subject to  e'x = 1,  x >= 0,  ||x||_0 <= k
//! ```
//!
//! with a penalty decomposition method whose block coordinate steps are both
//! closed form ([`ccmv_pd_solve`]), an l1-penalty alternating direction
//! baseline ([`ccmv_padm_solve`]), and an exhaustive global oracle for small
//! instances ([`oracle::brute_force_solve`]). The [`backtest`] module runs the
//! rolling-horizon out-of-sample evaluation.
//!
//! ```
//! use ccmv_core::{ccmv_pd_solve, ProblemSpec, SolverConfig};
//! use nalgebra::{dvector, DMatrix};
//!
//! let spec = ProblemSpec::new(DMatrix::identity(3, 3), dvector![0.3, 0.2, 0.1], 1.0, 1).unwrap();
//! let sol = ccmv_pd_solve(&spec, &SolverConfig::default()).unwrap();
//! assert_eq!(sol.support.len(), 1);
//! ```

pub mod backtest;
pub mod error;
pub mod io;
pub mod model;
pub mod oracle;
pub mod padm;
pub mod pd;
mod serde_helpers;
pub mod simplex;
pub mod solution;
pub mod synthetic;

pub use backtest::{gap, in_sample_stats, rolling_horizon, BacktestConfig, BacktestReport};
pub use error::{Error, Result};
pub use model::{
    estimate_moments, make_feasible_point, max_eigenvalue, objective_f, penalty_q, MomentEstimate,
    ProblemSpec, ReturnsMatrix, SolverConfig,
};
pub use oracle::{brute_force_solve, oracle_solve, restricted_qp_solve, OracleResult};
pub use padm::{ccmv_padm_solve, padm_x_step, padm_y_step};
pub use pd::{
    bcd_inner, build_factorization, ccmv_pd_solve, kkt_check, polish_support, x_step, y_step,
    PenaltyFactorization,
};
pub use solution::{KktCertificate, Solution, SolverKind, Status, TraceRecord};
