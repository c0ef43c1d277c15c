use std::path::Path;

use ccmv_core::io::{read_problem_json, read_returns_csv_file};
use ccmv_core::{estimate_moments, Error, ProblemSpec, Result};

use crate::args::InputArgs;

/// A problem plus display names for its assets.
pub struct Loaded {
    pub spec: ProblemSpec,
    pub tickers: Vec<String>,
}

fn require_file(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "{} does not exist",
            path.display()
        )))
    }
}

/// Reads `--spec` or `--returns` and applies `k` and the optional `tau` override.
pub fn load(input: &InputArgs, k: usize, tau: Option<f64>) -> Result<Loaded> {
    let (mut spec, tickers) = match (&input.spec, &input.returns) {
        (Some(path), _) => {
            require_file(path)?;
            let spec = read_problem_json(path)?;
            let tickers = (1..=spec.n()).map(|i| format!("A{i}")).collect();
            (spec, tickers)
        }
        (None, Some(path)) => {
            require_file(path)?;
            let table = read_returns_csv_file(path, "period")?;
            let tickers = table.returns.tickers().to_vec();
            let est = estimate_moments(&table.returns)?;
            let spec = ProblemSpec {
                a: est.a,
                mu: est.mu,
                tau: 0.5,
                k,
            };
            (spec, tickers)
        }
        (None, None) => unreachable!("clap requires one input"),
    };
    spec.k = k;
    if let Some(t) = tau {
        spec.tau = t;
    }
    spec.validate()?;
    Ok(Loaded { spec, tickers })
}
