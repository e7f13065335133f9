//! Stability analysis of Bayes-optimal acts in finite decision problems.
//!
//! Given a utility matrix and a reference prior, the library measures how far
//! the prior can move inside a coordinate-wise band before an optimal act
//! stops being optimal (robustness radius), how far it must move before a
//! suboptimal act becomes optimal (contamination need), and certifies acts
//! that can never be optimal with a dominating mixture of the other acts. On
//! top of these it builds cost-adjusted selection paths, the Γ-criteria over
//! the band, and a pipeline that turns return data into regime utilities.
//!
//! ```
//! use prior_stability::{
//!     contamination_need, robustness_radius, BisectionConfig, DecisionProblem, Prior,
//! };
//!
//! let problem = DecisionProblem::from_rows(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
//! let prior = Prior::new("p0", vec![0.7, 0.3]).unwrap();
//! let rob = robustness_radius(&problem, 0, &prior, &BisectionConfig::default()).unwrap();
//! assert!((rob.value().unwrap() - 0.2).abs() < 1e-6);
//! let con = contamination_need(&problem, 1, &prior).unwrap();
//! assert!((con.value().unwrap() - 0.2).abs() < 1e-9);
//! ```

pub mod catalog;
pub mod cli;
pub mod decision;
pub mod error;
pub mod io;
pub mod lp;
pub mod report;
pub mod scenarios;
pub mod selection;
pub mod stability;

pub use decision::{
    affine_transform, bayes_acts, expected_utility, BayesSet, DecisionProblem, Prior,
};
pub use error::{Error, Result};
pub use lp::{
    band_feasible_with_halfspaces, minimize_over_band, solve_lp, BandBox, Feasibility,
    LinearProgram, LpOutcome, LpStatus,
};
pub use selection::{
    envelope_path, gamma_aggregate, optimal_acts, rex_score, selection_path, stability_score,
    variance_cost, Branch, CostAssignment, GammaMode, ScoreLine, SelectionPath, StabilityScore,
};
pub use stability::{
    contamination_need, pairwise_margin, robustness_radius, stability_profile,
    strict_inadmissibility_certificate, worst_case_margin, BisectionConfig, DominanceCertificate,
    Need, Radius, StabilityProfile,
};
