//! Shipped default datasets: the eight regime priors, the six reference
//! portfolios and their regime utility matrix.
//!
//! The numeric prior masses are defaults chosen to match each belief's
//! description (which state is modal, which states share weight). They live in
//! `data/default_priors.csv` and can be replaced by any priors file.

use crate::decision::DecisionProblem;
use crate::error::{Error, Result};
use crate::io::{parse_priors, parse_utilities, parse_weights, PriorTable};
use crate::scenarios::PortfolioBook;

pub const DEFAULT_PRIORS_CSV: &str = include_str!("../data/default_priors.csv");
pub const PORTFOLIO_WEIGHTS_CSV: &str = include_str!("../data/portfolio_weights.csv");
pub const REGIME_UTILITIES_CSV: &str = include_str!("../data/regime_utilities.csv");

pub type PriorCatalog = PriorTable;

/// The eight named priors over (Expansion, Recovery, Stagnation, Recession).
pub fn default_catalog() -> PriorCatalog {
    let table = parse_priors(DEFAULT_PRIORS_CSV, "default_priors.csv")
        .expect("shipped prior catalog parses");
    validate_catalog(&table).expect("shipped prior catalog is valid");
    table
}

/// Catalog shape: eight priors, exactly one uniform.
pub fn validate_catalog(table: &PriorCatalog) -> Result<()> {
    if table.priors.len() != 8 {
        return Err(Error::InvalidInput(format!(
            "a prior catalog has 8 entries, found {}",
            table.priors.len()
        )));
    }
    let m = table.states.len() as f64;
    let uniform = table
        .priors
        .iter()
        .filter(|p| p.mass().iter().all(|q| (q - 1.0 / m).abs() < 1e-12))
        .count();
    if uniform != 1 {
        return Err(Error::InvalidInput(format!(
            "a prior catalog has exactly one uniform entry, found {uniform}"
        )));
    }
    Ok(())
}

/// Reference six-portfolio utility matrix over the four regimes.
pub fn reference_problem() -> DecisionProblem {
    parse_utilities(REGIME_UTILITIES_CSV, "regime_utilities.csv").expect("shipped utilities parse")
}

/// Reference portfolio weights over SPY, AGG, DBC, VNQ, EFA.
pub fn default_portfolios() -> PortfolioBook {
    parse_weights(PORTFOLIO_WEIGHTS_CSV, "portfolio_weights.csv").expect("shipped weights parse")
}
