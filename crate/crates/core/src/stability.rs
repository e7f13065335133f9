//! Stability of Bayes acts under band perturbations of the prior.
//!
//! For an act `a` and reference prior `π0` this module computes
//!
//! * the pairwise margin `R_{a,b}(ε) = min_{π ∈ B(π0,ε)} ⟨π, u_a − u_b⟩` and the
//!   worst-case margin `R(ε) = min_{b≠a} R_{a,b}(ε)`;
//! * the robustness radius `rob(a, π0) = sup{ε : R(ε) ≥ 0}` by bisection
//!   (`R` is non-increasing in `ε`), reported as [`Radius::NotBayes`] when `a`
//!   is not optimal at `π0`;
//! * the contamination need `con(a, π0)`, the smallest `ε` for which some prior
//!   in `B(π0, ε)` makes `a` optimal, from a single LP in `(π, ε)`;
//! * a strict-inadmissibility certificate: a mixture of the other acts that
//!   beats `a` in every state. It exists exactly when the contamination LP is
//!   infeasible.

use rayon::prelude::*;
use serde::Serialize;

use crate::decision::{bayes_acts, DecisionProblem, Prior};
use crate::error::{Error, Result};
use crate::lp::{minimize_over_band, solve_lp, BandBox, LinearProgram, LpOutcome};

/// A certificate must beat the act by more than this in every state.
pub const STRICTNESS_TOL: f64 = 1e-9;

/// Robustness radius. `NotBayes` stands for `rob = −∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "epsilon")]
pub enum Radius {
    NotBayes,
    Value(f64),
}

impl Radius {
    pub fn value(&self) -> Option<f64> {
        match self {
            Radius::Value(v) => Some(*v),
            Radius::NotBayes => None,
        }
    }
}

/// Contamination need. `Infeasible` stands for `con = +∞` and carries the
/// dominance certificate that proves it.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum Need {
    Value {
        epsilon: f64,
        /// A prior in `B(π0, epsilon)` under which the act is optimal.
        witness: Vec<f64>,
    },
    Infeasible(DominanceCertificate),
}

impl Need {
    pub fn value(&self) -> Option<f64> {
        match self {
            Need::Value { epsilon, .. } => Some(*epsilon),
            Need::Infeasible(_) => None,
        }
    }

    pub fn certificate(&self) -> Option<&DominanceCertificate> {
        match self {
            Need::Infeasible(c) => Some(c),
            Need::Value { .. } => None,
        }
    }
}

/// Mixture weights over competing acts that strictly beat `act` in every state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominanceCertificate {
    pub act: usize,
    /// `(competitor index, β_b)`, one entry per competitor, weights sum to 1.
    pub weights: Vec<(usize, f64)>,
    /// `Σ_b β_b u(b, θ_j) − u(a, θ_j)` per state.
    pub margins: Vec<f64>,
}

impl DominanceCertificate {
    pub fn min_margin(&self) -> f64 {
        self.margins.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Recompute the margins against `problem` and check strict domination.
    pub fn verify(&self, problem: &DecisionProblem) -> bool {
        let Ok(own) = problem.row(self.act) else {
            return false;
        };
        let total: f64 = self.weights.iter().map(|(_, w)| w).sum();
        if (total - 1.0).abs() > 1e-9 || self.weights.iter().any(|(_, w)| *w < -1e-12) {
            return false;
        }
        (0..problem.num_states()).all(|j| {
            let mix: f64 = self
                .weights
                .iter()
                .map(|&(b, w)| w * problem.utilities()[b][j])
                .sum();
            mix - own[j] > STRICTNESS_TOL
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BisectionConfig {
    tolerance: f64,
}

impl BisectionConfig {
    pub fn new(tolerance: f64) -> Result<Self> {
        if !(tolerance > 0.0 && tolerance < 1.0) {
            return Err(Error::InvalidInput(format!(
                "bisection tolerance {tolerance} outside (0, 1)"
            )));
        }
        Ok(Self { tolerance })
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }
}

impl Default for BisectionConfig {
    fn default() -> Self {
        Self { tolerance: 1e-6 }
    }
}

fn check_act(problem: &DecisionProblem, act: usize) -> Result<()> {
    problem.row(act).map(|_| ())
}

fn difference(problem: &DecisionProblem, a: usize, b: usize) -> Result<Vec<f64>> {
    let ua = problem.row(a)?;
    let ub = problem.row(b)?;
    Ok(ua.iter().zip(ub).map(|(x, y)| x - y).collect())
}

/// `R_{a,b}(ε)`: worst expected advantage of `a` over `b` within the band.
pub fn pairwise_margin(
    problem: &DecisionProblem,
    a: usize,
    b: usize,
    prior: &Prior,
    epsilon: f64,
) -> Result<f64> {
    if a == b {
        return Err(Error::InvalidInput(
            "pairwise margin needs two distinct acts".into(),
        ));
    }
    let band = BandBox::new(prior.mass(), epsilon)?;
    let d = difference(problem, a, b)?;
    Ok(minimize_over_band(&d, &band)?.0)
}

/// `R(ε) = min_{b≠a} R_{a,b}(ε)`.
pub fn worst_case_margin(
    problem: &DecisionProblem,
    a: usize,
    prior: &Prior,
    epsilon: f64,
) -> Result<f64> {
    if problem.num_acts() < 2 {
        return Err(Error::InvalidInput(
            "worst-case margin needs at least two acts".into(),
        ));
    }
    check_act(problem, a)?;
    if prior.len() != problem.num_states() {
        return Err(Error::Dimension(format!(
            "prior has {} states, problem has {}",
            prior.len(),
            problem.num_states()
        )));
    }
    let band = BandBox::new(prior.mass(), epsilon)?;
    let mut worst = f64::INFINITY;
    for b in (0..problem.num_acts()).filter(|&b| b != a) {
        let d = difference(problem, a, b)?;
        worst = worst.min(minimize_over_band(&d, &band)?.0);
    }
    Ok(worst)
}

/// Largest band radius (capped at 1) for which `a` stays optimal, by bisection.
pub fn robustness_radius(
    problem: &DecisionProblem,
    a: usize,
    prior: &Prior,
    config: &BisectionConfig,
) -> Result<Radius> {
    check_act(problem, a)?;
    if !bayes_acts(problem, prior)?.contains(a) {
        return Ok(Radius::NotBayes);
    }
    if problem.num_acts() == 1 || worst_case_margin(problem, a, prior, 1.0)? >= 0.0 {
        return Ok(Radius::Value(1.0));
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    while hi - lo > config.tolerance() {
        let mid = 0.5 * (lo + hi);
        if worst_case_margin(problem, a, prior, mid)? >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Radius::Value(lo))
}

/// Smallest band radius under which some prior makes `a` optimal.
pub fn contamination_need(problem: &DecisionProblem, a: usize, prior: &Prior) -> Result<Need> {
    check_act(problem, a)?;
    if bayes_acts(problem, prior)?.contains(a) {
        return Ok(Need::Value {
            epsilon: 0.0,
            witness: prior.mass().to_vec(),
        });
    }
    let m = problem.num_states();
    let pi0 = prior.mass();
    // Dominance rows ⟨π, u_a − u_b⟩ ≥ 0, scaled to unit max-norm. Rows that
    // vanish (duplicates of a) impose nothing.
    let dominance: Vec<Vec<f64>> = (0..problem.num_acts())
        .filter(|&b| b != a)
        .map(|b| difference(problem, a, b))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter_map(|d| {
            let scale = d.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
            (scale > 0.0).then(|| d.iter().map(|v| v / scale).collect())
        })
        .collect();

    // Columns: π_1..π_m, ε, upper slacks (m), lower surpluses (m), dominance surpluses.
    let eps = m;
    let up = m + 1;
    let down = up + m;
    let dom = down + m;
    let cols = dom + dominance.len();
    let mut objective = vec![0.0; cols];
    objective[eps] = 1.0;
    let mut lp = LinearProgram::new(objective);
    for j in 0..m {
        lp.set_bounds(j, 0.0, Some(1.0));
    }
    let mut row = vec![0.0; cols];
    row[..m].iter_mut().for_each(|v| *v = 1.0);
    lp.add_eq(row, 1.0);
    for j in 0..m {
        // π_j − ε + s = π0_j
        let mut row = vec![0.0; cols];
        row[j] = 1.0;
        row[eps] = -1.0;
        row[up + j] = 1.0;
        lp.add_eq(row, pi0[j]);
        // π_j + ε − s = π0_j
        let mut row = vec![0.0; cols];
        row[j] = 1.0;
        row[eps] = 1.0;
        row[down + j] = -1.0;
        lp.add_eq(row, pi0[j]);
    }
    for (k, d) in dominance.iter().enumerate() {
        let mut row = vec![0.0; cols];
        row[..m].copy_from_slice(d);
        row[dom + k] = -1.0;
        lp.add_eq(row, 0.0);
    }

    match solve_lp(&lp)? {
        LpOutcome::Optimal { point, .. } => Ok(Need::Value {
            epsilon: point[eps].clamp(0.0, 1.0),
            witness: point[..m].to_vec(),
        }),
        LpOutcome::Infeasible => match strict_inadmissibility_certificate(problem, a)? {
            Some(cert) => Ok(Need::Infeasible(cert)),
            None => Err(Error::Solver(format!(
                "contamination LP for act `{}` is infeasible but no dominating mixture exists",
                problem.acts()[a]
            ))),
        },
        LpOutcome::Unbounded => Err(Error::Solver(
            "contamination LP reported an unbounded objective".into(),
        )),
    }
}

/// Find the mixture of competitors that beats `a` by the widest uniform margin:
/// `max t  s.t.  Σ_b β_b (u_b − u_a)_j ≥ t ∀j,  β ≥ 0,  Σβ = 1`.
/// Returns a certificate only when that margin exceeds [`STRICTNESS_TOL`].
pub fn strict_inadmissibility_certificate(
    problem: &DecisionProblem,
    a: usize,
) -> Result<Option<DominanceCertificate>> {
    check_act(problem, a)?;
    let competitors: Vec<usize> = (0..problem.num_acts()).filter(|&b| b != a).collect();
    if competitors.is_empty() {
        return Ok(None);
    }
    let m = problem.num_states();
    let k = competitors.len();
    let diffs: Vec<Vec<f64>> = competitors
        .iter()
        .map(|&b| difference(problem, b, a))
        .collect::<Result<_>>()?;
    let spread = diffs
        .iter()
        .flatten()
        .fold(0.0_f64, |acc, v| acc.max(v.abs()));

    // Columns: β (k), t, surplus per state (m).
    let t = k;
    let cols = k + 1 + m;
    let mut objective = vec![0.0; cols];
    objective[t] = -1.0;
    let mut lp = LinearProgram::new(objective);
    lp.set_bounds(t, -(spread + 1.0), None);
    for j in 0..m {
        let mut row = vec![0.0; cols];
        for (i, d) in diffs.iter().enumerate() {
            row[i] = d[j];
        }
        row[t] = -1.0;
        row[k + 1 + j] = -1.0;
        lp.add_eq(row, 0.0);
    }
    let mut row = vec![0.0; cols];
    row[..k].iter_mut().for_each(|v| *v = 1.0);
    lp.add_eq(row, 1.0);

    let LpOutcome::Optimal { point, .. } = solve_lp(&lp)? else {
        return Err(Error::Solver(
            "certificate LP must have an optimum (its feasible set is compact)".into(),
        ));
    };
    if point[t] <= STRICTNESS_TOL {
        return Ok(None);
    }
    let total: f64 = point[..k].iter().sum();
    let weights: Vec<(usize, f64)> = competitors
        .iter()
        .zip(&point[..k])
        .map(|(&b, &w)| (b, w / total))
        .collect();
    let own = problem.row(a)?;
    let margins: Vec<f64> = (0..m)
        .map(|j| {
            weights
                .iter()
                .map(|&(b, w)| w * problem.utilities()[b][j])
                .sum::<f64>()
                - own[j]
        })
        .collect();
    let cert = DominanceCertificate {
        act: a,
        weights,
        margins,
    };
    Ok((cert.min_margin() > STRICTNESS_TOL).then_some(cert))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileRow {
    pub prior: String,
    pub act: String,
    pub prior_index: usize,
    pub act_index: usize,
    pub is_bayes: bool,
    pub expected_utility: f64,
    pub radius: Radius,
    pub need: Need,
}

/// Radius and need for every (act, prior) pair, ordered prior-major.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityProfile {
    pub acts: Vec<String>,
    pub priors: Vec<Prior>,
    pub rows: Vec<ProfileRow>,
}

impl StabilityProfile {
    pub fn rows_for_prior<'a>(
        &'a self,
        prior: &'a str,
    ) -> impl Iterator<Item = &'a ProfileRow> + 'a {
        self.rows.iter().filter(move |r| r.prior == prior)
    }

    pub fn prior(&self, name: &str) -> Result<&Prior> {
        self.priors
            .iter()
            .find(|p| p.name == name)
            .ok_or_else(|| Error::UnknownPrior(name.to_string()))
    }
}

pub fn stability_profile(
    problem: &DecisionProblem,
    priors: &[Prior],
    config: &BisectionConfig,
) -> Result<StabilityProfile> {
    let n = problem.num_acts();
    let pairs: Vec<(usize, usize)> = (0..priors.len())
        .flat_map(|p| (0..n).map(move |a| (p, a)))
        .collect();
    let rows = pairs
        .par_iter()
        .map(|&(p, a)| {
            let prior = &priors[p];
            let label = || format!("prior `{}`, act `{}`", prior.name, problem.acts()[a]);
            let bayes = bayes_acts(problem, prior).map_err(|e| e.context(label()))?;
            let radius =
                robustness_radius(problem, a, prior, config).map_err(|e| e.context(label()))?;
            let need = contamination_need(problem, a, prior).map_err(|e| e.context(label()))?;
            Ok(ProfileRow {
                prior: prior.name.clone(),
                act: problem.acts()[a].clone(),
                prior_index: p,
                act_index: a,
                is_bayes: bayes.contains(a),
                expected_utility: bayes.expected_utilities[a],
                radius,
                need,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StabilityProfile {
        acts: problem.acts().to_vec(),
        priors: priors.to_vec(),
        rows,
    })
}
