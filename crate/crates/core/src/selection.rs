//! Cost-adjusted stability scores and their λ-selection paths.
//!
//! Each act's score is affine in λ: `S(λ) = stability − λ·cost`, where the
//! stability term is the normalized radius (Bayes acts) or the negated
//! normalized need (other acts) and the cost term is the normalized selection
//! cost. The argmax over λ is therefore the upper envelope of a set of lines
//! and its breakpoints can be computed exactly.

use serde::Serialize;

use crate::decision::{bayes_acts, DecisionProblem, Prior};
use crate::error::{Error, Result};
use crate::lp::{minimize_over_band, BandBox};
use crate::stability::{Need, Radius, StabilityProfile};

/// Scores within this distance of the maximum are tied.
pub const SCORE_TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostAssignment {
    pub acts: Vec<String>,
    pub raw: Vec<f64>,
    /// `raw / max(raw)`, all zero when every cost is zero.
    pub normalized: Vec<f64>,
}

impl CostAssignment {
    pub fn new(acts: Vec<String>, raw: Vec<f64>) -> Result<Self> {
        if acts.len() != raw.len() {
            return Err(Error::Dimension(format!(
                "{} acts but {} costs",
                acts.len(),
                raw.len()
            )));
        }
        if let Some((a, c)) = acts
            .iter()
            .zip(&raw)
            .find(|(_, c)| !c.is_finite() || **c < 0.0)
        {
            return Err(Error::InvalidInput(format!(
                "cost of `{a}` must be finite and nonnegative, got {c}"
            )));
        }
        let max = raw.iter().copied().fold(0.0_f64, f64::max);
        let normalized = raw
            .iter()
            .map(|c| if max > 0.0 { c / max } else { 0.0 })
            .collect();
        Ok(Self {
            acts,
            raw,
            normalized,
        })
    }
}

/// Population variance of each utility row, normalized by the largest one.
pub fn variance_cost(problem: &DecisionProblem) -> CostAssignment {
    let raw = problem
        .utilities()
        .iter()
        .map(|row| {
            let m = row.len() as f64;
            let mean = row.iter().sum::<f64>() / m;
            row.iter().map(|u| (u - mean) * (u - mean)).sum::<f64>() / m
        })
        .collect();
    CostAssignment::new(problem.acts().to_vec(), raw).expect("variances are finite and nonnegative")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Branch {
    Bayes,
    NonBayes,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityScore {
    pub act: String,
    pub act_index: usize,
    pub lambda: f64,
    pub branch: Branch,
    /// `rob/max rob` or `−con/max con`; `None` for strictly inadmissible acts.
    pub stability_term: Option<f64>,
    pub cost_term: f64,
    /// Score value, `−∞` for strictly inadmissible acts.
    pub value: f64,
}

impl StabilityScore {
    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
    }
}

fn ratio(x: f64, denom: Option<f64>) -> f64 {
    match denom {
        Some(d) if d > 0.0 => x / d,
        _ => 0.0,
    }
}

/// Per-act `(branch, stability term)` for one prior of the profile.
fn stability_terms(
    profile: &StabilityProfile,
    prior: &str,
) -> Result<Vec<(usize, Branch, Option<f64>)>> {
    profile.prior(prior)?;
    let rows: Vec<_> = profile.rows_for_prior(prior).collect();
    let max_rob = rows
        .iter()
        .filter_map(|r| r.radius.value())
        .reduce(f64::max);
    let max_con = rows
        .iter()
        .filter(|r| !r.is_bayes)
        .filter_map(|r| r.need.value())
        .reduce(f64::max);
    Ok(rows
        .iter()
        .map(|r| match (r.radius, &r.need) {
            (Radius::Value(rob), _) => (r.act_index, Branch::Bayes, Some(ratio(rob, max_rob))),
            (Radius::NotBayes, Need::Value { epsilon, .. }) => (
                r.act_index,
                Branch::NonBayes,
                Some(-ratio(*epsilon, max_con)),
            ),
            (Radius::NotBayes, Need::Infeasible(_)) => (r.act_index, Branch::NonBayes, None),
        })
        .collect())
}

fn check_costs(profile: &StabilityProfile, costs: &CostAssignment) -> Result<()> {
    if costs.acts != profile.acts {
        return Err(Error::Inconsistent(
            "cost assignment acts do not match the profile acts".into(),
        ));
    }
    Ok(())
}

/// `S_{λ,π0}(a)` for every act, using the rows of `profile` for `prior`.
pub fn stability_score(
    profile: &StabilityProfile,
    costs: &CostAssignment,
    lambda: f64,
    prior: &str,
) -> Result<Vec<StabilityScore>> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidInput(format!("λ must be ≥ 0, got {lambda}")));
    }
    check_costs(profile, costs)?;
    Ok(stability_terms(profile, prior)?
        .into_iter()
        .map(|(a, branch, term)| {
            let cost_term = costs.normalized[a];
            StabilityScore {
                act: profile.acts[a].clone(),
                act_index: a,
                lambda,
                branch,
                stability_term: term,
                cost_term,
                value: term.map_or(f64::NEG_INFINITY, |s| s - lambda * cost_term),
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimalSet {
    pub acts: Vec<usize>,
    /// Lowest index among the tied acts.
    pub representative: usize,
}

pub fn optimal_acts(scores: &[StabilityScore]) -> Result<OptimalSet> {
    let best = scores
        .iter()
        .map(|s| s.value)
        .filter(|v| v.is_finite())
        .reduce(f64::max)
        .ok_or(Error::AllInadmissible)?;
    let mut acts: Vec<usize> = scores
        .iter()
        .filter(|s| s.value.is_finite() && s.value >= best - SCORE_TIE_TOL)
        .map(|s| s.act_index)
        .collect();
    acts.sort_unstable();
    Ok(OptimalSet {
        representative: acts[0],
        acts,
    })
}

/// One act's score as a function of λ: `intercept + slope·λ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreLine {
    pub act: String,
    pub act_index: usize,
    pub intercept: f64,
    pub slope: f64,
}

impl ScoreLine {
    pub fn at(&self, lambda: f64) -> f64 {
        self.intercept + self.slope * lambda
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridPoint {
    pub lambda: f64,
    pub acts: Vec<usize>,
    pub representative: usize,
}

/// Maximal λ-interval on which one act wins.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub act: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionPath {
    pub lambda_max: f64,
    pub grid_step: f64,
    pub lines: Vec<ScoreLine>,
    pub grid: Vec<GridPoint>,
    pub breakpoints: Vec<f64>,
    pub segments: Vec<Segment>,
}

impl SelectionPath {
    /// Winner on the analytic envelope at `lambda`.
    pub fn act_at(&self, lambda: f64) -> Option<usize> {
        self.segments
            .iter()
            .find(|s| lambda <= s.end)
            .or(self.segments.last())
            .map(|s| s.act)
    }
}

fn envelope_winner(lines: &[ScoreLine], lambda: f64) -> usize {
    let best = lines
        .iter()
        .map(|l| l.at(lambda))
        .fold(f64::NEG_INFINITY, f64::max);
    lines
        .iter()
        .filter(|l| l.at(lambda) >= best - SCORE_TIE_TOL)
        .map(|l| l.act_index)
        .min()
        .expect("at least one line")
}

fn lambda_grid(lambda_max: f64, step: f64) -> Vec<f64> {
    let count = (lambda_max / step + 1e-9).floor() as usize;
    let mut grid: Vec<f64> = (0..=count).map(|k| k as f64 * step).collect();
    if let Some(last) = grid.last_mut() {
        if (*last - lambda_max).abs() <= 1e-9 * step.max(1.0) {
            *last = lambda_max;
        } else if *last < lambda_max {
            grid.push(lambda_max);
        }
    }
    grid
}

/// Upper envelope of `lines` on `[0, lambda_max]`, evaluated on a grid and
/// exactly through pairwise intersections.
pub fn envelope_path(
    lines: Vec<ScoreLine>,
    lambda_max: f64,
    grid_step: f64,
) -> Result<SelectionPath> {
    if !(lambda_max > 0.0 && lambda_max.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "λ_max must be positive, got {lambda_max}"
        )));
    }
    if !(grid_step > 0.0 && grid_step.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "grid step must be positive, got {grid_step}"
        )));
    }
    if lines.is_empty() {
        return Err(Error::AllInadmissible);
    }

    let grid = lambda_grid(lambda_max, grid_step)
        .into_iter()
        .map(|lambda| {
            let best = lines
                .iter()
                .map(|l| l.at(lambda))
                .fold(f64::NEG_INFINITY, f64::max);
            let acts: Vec<usize> = lines
                .iter()
                .filter(|l| l.at(lambda) >= best - SCORE_TIE_TOL)
                .map(|l| l.act_index)
                .collect();
            GridPoint {
                lambda,
                representative: *acts.iter().min().expect("nonempty"),
                acts,
            }
        })
        .collect();

    // Candidate switch points: pairwise intersections strictly inside (0, λ_max).
    let mut candidates: Vec<f64> = Vec::new();
    for (i, p) in lines.iter().enumerate() {
        for q in &lines[i + 1..] {
            let ds = p.slope - q.slope;
            if ds == 0.0 {
                continue;
            }
            let x = (q.intercept - p.intercept) / ds;
            if x > 0.0 && x < lambda_max {
                candidates.push(x);
            }
        }
    }
    candidates.sort_by(f64::total_cmp);
    candidates.dedup_by(|a, b| (*a - *b).abs() <= 1e-12);

    let mut edges = Vec::with_capacity(candidates.len() + 2);
    edges.push(0.0);
    edges.extend(candidates);
    edges.push(lambda_max);

    let mut segments: Vec<Segment> = Vec::new();
    let mut breakpoints = Vec::new();
    for w in edges.windows(2) {
        let act = envelope_winner(&lines, 0.5 * (w[0] + w[1]));
        match segments.last_mut() {
            Some(seg) if seg.act == act => seg.end = w[1],
            Some(_) => {
                breakpoints.push(w[0]);
                segments.push(Segment {
                    start: w[0],
                    end: w[1],
                    act,
                });
            }
            None => segments.push(Segment {
                start: w[0],
                end: w[1],
                act,
            }),
        }
    }

    Ok(SelectionPath {
        lambda_max,
        grid_step,
        lines,
        grid,
        breakpoints,
        segments,
    })
}

/// Score lines of the finitely scored acts for one prior.
pub fn score_lines(
    profile: &StabilityProfile,
    costs: &CostAssignment,
    prior: &str,
) -> Result<Vec<ScoreLine>> {
    check_costs(profile, costs)?;
    Ok(stability_terms(profile, prior)?
        .into_iter()
        .filter_map(|(a, _, term)| {
            term.map(|s| ScoreLine {
                act: profile.acts[a].clone(),
                act_index: a,
                intercept: s,
                slope: -costs.normalized[a],
            })
        })
        .collect())
}

pub fn selection_path(
    profile: &StabilityProfile,
    costs: &CostAssignment,
    prior: &str,
    lambda_max: f64,
    grid_step: f64,
) -> Result<SelectionPath> {
    envelope_path(score_lines(profile, costs, prior)?, lambda_max, grid_step)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum GammaMode {
    Minimax,
    Maximax,
    /// `η·inf + (1−η)·sup`.
    Mix(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionValues {
    pub values: Vec<f64>,
    pub argmax: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaAggregate {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub criterion: CriterionValues,
}

fn argmax(values: &[f64]) -> usize {
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    values
        .iter()
        .position(|v| *v >= best - SCORE_TIE_TOL)
        .expect("nonempty")
}

/// Lower and upper expected utility over the band, combined per `mode`.
pub fn gamma_aggregate(
    problem: &DecisionProblem,
    band: &BandBox,
    mode: GammaMode,
) -> Result<GammaAggregate> {
    if band.dim() != problem.num_states() {
        return Err(Error::Dimension(format!(
            "band has {} states, problem has {}",
            band.dim(),
            problem.num_states()
        )));
    }
    let eta = match mode {
        GammaMode::Minimax => 1.0,
        GammaMode::Maximax => 0.0,
        GammaMode::Mix(eta) if (0.0..=1.0).contains(&eta) => eta,
        GammaMode::Mix(eta) => {
            return Err(Error::InvalidInput(format!("η = {eta} outside [0, 1]")))
        }
    };
    let mut lower = Vec::with_capacity(problem.num_acts());
    let mut upper = Vec::with_capacity(problem.num_acts());
    for row in problem.utilities() {
        lower.push(minimize_over_band(row, band)?.0);
        let neg: Vec<f64> = row.iter().map(|u| -u).collect();
        upper.push(-minimize_over_band(&neg, band)?.0);
    }
    let values: Vec<f64> = lower
        .iter()
        .zip(&upper)
        .map(|(lo, hi)| match mode {
            GammaMode::Minimax => *lo,
            GammaMode::Maximax => *hi,
            GammaMode::Mix(_) if lo == hi => *lo,
            GammaMode::Mix(_) => eta * lo + (1.0 - eta) * hi,
        })
        .collect();
    Ok(GammaAggregate {
        lower,
        upper,
        criterion: CriterionValues {
            argmax: argmax(&values),
            values,
        },
    })
}

/// `μ·E_π[u_a] + (1−μ)·min_θ u(a, θ)`.
pub fn rex_score(problem: &DecisionProblem, prior: &Prior, mu: f64) -> Result<CriterionValues> {
    if !(0.0..=1.0).contains(&mu) {
        return Err(Error::InvalidInput(format!("μ = {mu} outside [0, 1]")));
    }
    let expected = bayes_acts(problem, prior)?.expected_utilities;
    let values: Vec<f64> = problem
        .utilities()
        .iter()
        .zip(&expected)
        .map(|(row, e)| {
            let worst = row.iter().copied().fold(f64::INFINITY, f64::min);
            mu * e + (1.0 - mu) * worst
        })
        .collect();
    Ok(CriterionValues {
        argmax: argmax(&values),
        values,
    })
}
