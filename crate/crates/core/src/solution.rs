//! Solver output shared by the PD, PADM and oracle solvers.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::serde_helpers::dvec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Pd,
    Padm,
    Oracle,
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolverKind::Pd => "pd",
            SolverKind::Padm => "padm",
            SolverKind::Oracle => "oracle",
        })
    }
}

impl FromStr for SolverKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "pd" => Ok(SolverKind::Pd),
            "padm" => Ok(SolverKind::Padm),
            "oracle" => Ok(SolverKind::Oracle),
            other => Err(format!(
                "unknown solver '{other}' (expected pd, padm or oracle)"
            )),
        }
    }
}

/// Termination status of an outer penalty loop.
///
/// `SafeguardReset(count)` is a converged run in which the warm start was
/// reset to the feasible point `count` times.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Status {
    Converged,
    MaxIterations,
    SafeguardReset(usize),
}

impl Status {
    /// True when the outer stopping rule was met.
    pub fn is_converged(&self) -> bool {
        !matches!(self, Status::MaxIterations)
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Status::Converged => f.write_str("Converged"),
            Status::MaxIterations => f.write_str("MaxIterations"),
            Status::SafeguardReset(c) => write!(f, "SafeguardReset({c})"),
        }
    }
}

impl From<Status> for String {
    fn from(s: Status) -> Self {
        s.to_string()
    }
}

impl TryFrom<String> for Status {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        match s.as_str() {
            "Converged" => Ok(Status::Converged),
            "MaxIterations" => Ok(Status::MaxIterations),
            other => other
                .strip_prefix("SafeguardReset(")
                .and_then(|r| r.strip_suffix(')'))
                .and_then(|c| c.parse().ok())
                .map(Status::SafeguardReset)
                .ok_or_else(|| format!("unknown status '{other}'")),
        }
    }
}

/// One outer iteration of a penalty method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub rho: f64,
    pub inner_iters: usize,
    /// Penalty value at the end of the inner loop.
    pub q: f64,
    /// `||x - y||_inf` for PD, `||x - y||_1` for PADM.
    pub infeas: f64,
    /// Whether the next inner loop was warm-started from the feasible point.
    #[serde(default)]
    pub reset: bool,
}

/// First-order certificate for a candidate portfolio restricted to a support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KktCertificate {
    /// Multiplier of the budget constraint `e'x = 1`.
    pub beta: f64,
    /// Nonnegativity multipliers; zero on strictly positive entries and off the support.
    #[serde(with = "dvec")]
    pub lambda: DVector<f64>,
    pub support: Vec<usize>,
    #[serde(rename = "stationarity")]
    pub stationarity_residual: f64,
    #[serde(rename = "complementarity")]
    pub complementarity_residual: f64,
    #[serde(rename = "dual_violation")]
    pub dual_feasibility_violation: f64,
}

impl KktCertificate {
    pub fn max_residual(&self) -> f64 {
        self.stationarity_residual
            .max(self.complementarity_residual)
            .max(self.dual_feasibility_violation)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub solver: SolverKind,
    #[serde(with = "dvec")]
    pub weights: DVector<f64>,
    /// Indices of the nonzero weights, ascending.
    pub support: Vec<usize>,
    pub objective: f64,
    pub kkt: KktCertificate,
    pub status: Status,
    pub trace: Vec<TraceRecord>,
    /// Bound used by the warm-start safeguard (PD only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upsilon: Option<f64>,
    /// Penalty actually used for the first outer iteration.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho0: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl Solution {
    /// Weights are exactly zero off `support` and `|support| <= k`.
    pub fn respects_cardinality(&self, k: usize) -> bool {
        self.support.len() <= k
            && self
                .weights
                .iter()
                .enumerate()
                .all(|(i, &w)| w == 0.0 || self.support.binary_search(&i).is_ok())
    }

    pub fn total_inner_iterations(&self) -> usize {
        self.trace.iter().map(|t| t.inner_iters).sum()
    }
}

pub(crate) fn support_of(x: &DVector<f64>) -> Vec<usize> {
    x.iter()
        .enumerate()
        .filter(|(_, &v)| v != 0.0)
        .map(|(i, _)| i)
        .collect()
}
