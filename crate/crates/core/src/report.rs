//! Tidy long-format report rows and JSON documents.

use serde_json::{json, Map, Value};

use crate::error::Result;
use crate::io::fmt_sig9;
use crate::selection::{CriterionValues, GammaAggregate, SelectionPath, StabilityScore};
use crate::stability::{Need, Radius, StabilityProfile};

pub const NOT_BAYES: &str = "NOT_BAYES";
pub const INADMISSIBLE: &str = "INADMISSIBLE";

/// JSON schema for `stability.json`.
pub const STABILITY_SCHEMA: &str = include_str!("../schema/stability_report.schema.json");
/// JSON schema for `path.json`.
pub const PATH_SCHEMA: &str = include_str!("../schema/path_report.schema.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Measure {
    ExpectedUtility,
    IsBayes,
    Rob,
    Con,
    Score,
    Cost,
    GammaMin,
    GammaMax,
    GammaMix,
    Rex,
}

impl Measure {
    pub fn name(self) -> &'static str {
        match self {
            Measure::ExpectedUtility => "expected_utility",
            Measure::IsBayes => "is_bayes",
            Measure::Rob => "rob",
            Measure::Con => "con",
            Measure::Score => "score",
            Measure::Cost => "cost",
            Measure::GammaMin => "gamma_min",
            Measure::GammaMax => "gamma_max",
            Measure::GammaMix => "gamma_mix",
            Measure::Rex => "rex",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Number(f64),
    Sentinel(&'static str),
}

impl Cell {
    fn text(&self) -> String {
        match self {
            Cell::Number(v) => fmt_sig9(*v),
            Cell::Sentinel(s) => s.to_string(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Number(v) => number(*v),
            Cell::Sentinel(s) => Value::String(s.to_string()),
        }
    }
}

/// One measure for one (prior, act) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub prior: String,
    pub act: String,
    pub measure: Measure,
    pub value: Cell,
}

/// A JSON number rounded to 9 significant digits.
pub fn number(v: f64) -> Value {
    fmt_sig9(v)
        .parse::<f64>()
        .ok()
        .and_then(serde_json::Number::from_f64)
        .map_or(Value::Null, Value::Number)
}

fn radius_cell(r: &Radius) -> Cell {
    match r {
        Radius::Value(v) => Cell::Number(*v),
        Radius::NotBayes => Cell::Sentinel(NOT_BAYES),
    }
}

fn need_cell(n: &Need) -> Cell {
    match n {
        Need::Value { epsilon, .. } => Cell::Number(*epsilon),
        Need::Infeasible(_) => Cell::Sentinel(INADMISSIBLE),
    }
}

pub fn profile_rows(profile: &StabilityProfile) -> Vec<ReportRow> {
    let mut out = Vec::with_capacity(profile.rows.len() * 4);
    for r in &profile.rows {
        let row = |measure, value| ReportRow {
            prior: r.prior.clone(),
            act: r.act.clone(),
            measure,
            value,
        };
        out.push(row(
            Measure::ExpectedUtility,
            Cell::Number(r.expected_utility),
        ));
        out.push(row(
            Measure::IsBayes,
            Cell::Number(if r.is_bayes { 1.0 } else { 0.0 }),
        ));
        out.push(row(Measure::Rob, radius_cell(&r.radius)));
        out.push(row(Measure::Con, need_cell(&r.need)));
    }
    out
}

pub fn score_rows(prior: &str, scores: &[StabilityScore]) -> Vec<ReportRow> {
    scores
        .iter()
        .flat_map(|s| {
            let score = if s.value.is_finite() {
                Cell::Number(s.value)
            } else {
                Cell::Sentinel(INADMISSIBLE)
            };
            [
                ReportRow {
                    prior: prior.to_string(),
                    act: s.act.clone(),
                    measure: Measure::Score,
                    value: score,
                },
                ReportRow {
                    prior: prior.to_string(),
                    act: s.act.clone(),
                    measure: Measure::Cost,
                    value: Cell::Number(s.cost_term),
                },
            ]
        })
        .collect()
}

pub fn baseline_rows(
    prior: &str,
    acts: &[String],
    expected: &[f64],
    gamma: &GammaAggregate,
    mix: &CriterionValues,
    rex: &CriterionValues,
) -> Vec<ReportRow> {
    let mut out = Vec::new();
    for (i, act) in acts.iter().enumerate() {
        for (measure, v) in [
            (Measure::ExpectedUtility, expected[i]),
            (Measure::GammaMin, gamma.lower[i]),
            (Measure::GammaMax, gamma.upper[i]),
            (Measure::GammaMix, mix.values[i]),
            (Measure::Rex, rex.values[i]),
        ] {
            out.push(ReportRow {
                prior: prior.to_string(),
                act: act.clone(),
                measure,
                value: Cell::Number(v),
            });
        }
    }
    out
}

fn csv_bytes<I>(header: &[&str], records: I) -> Result<Vec<u8>>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::WriterBuilder::new()
        .quote_style(csv::QuoteStyle::NonNumeric)
        .from_writer(Vec::new());
    w.write_record(header).map_err(std::io::Error::from)?;
    for rec in records {
        w.write_record(&rec).map_err(std::io::Error::from)?;
    }
    Ok(w.into_inner().map_err(|e| e.into_error())?)
}

/// `prior,act,measure,value`; sentinels are quoted strings.
pub fn tidy_csv(rows: &[ReportRow]) -> Result<Vec<u8>> {
    csv_bytes(
        &["prior", "act", "measure", "value"],
        rows.iter().map(|r| {
            vec![
                r.prior.clone(),
                r.act.clone(),
                r.measure.name().to_string(),
                r.value.text(),
            ]
        }),
    )
}

pub fn table_csv(header: &[&str], rows: Vec<Vec<String>>) -> Result<Vec<u8>> {
    csv_bytes(header, rows)
}

pub fn profile_json(profile: &StabilityProfile, states: &[String], tolerance: f64) -> Value {
    let rows: Vec<Value> = profile
        .rows
        .iter()
        .map(|r| {
            let certificate = match r.need.certificate() {
                Some(c) => {
                    let weights: Map<String, Value> = c
                        .weights
                        .iter()
                        .map(|&(b, w)| (profile.acts[b].clone(), number(w)))
                        .collect();
                    json!({
                        "weights": weights,
                        "margins": c.margins.iter().map(|m| number(*m)).collect::<Vec<_>>(),
                    })
                }
                None => Value::Null,
            };
            json!({
                "prior": r.prior,
                "act": r.act,
                "expected_utility": number(r.expected_utility),
                "is_bayes": r.is_bayes,
                "rob": radius_cell(&r.radius).json(),
                "con": need_cell(&r.need).json(),
                "certificate": certificate,
            })
        })
        .collect();
    json!({
        "tolerance": tolerance,
        "acts": profile.acts,
        "states": states,
        "priors": profile.priors.iter().map(|p| json!({
            "name": p.name,
            "mass": p.mass().iter().map(|v| number(*v)).collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
        "rows": rows,
    })
}

pub fn path_json(prior: &str, acts: &[String], path: &SelectionPath) -> Value {
    json!({
        "prior": prior,
        "lambda_max": path.lambda_max,
        "grid_step": path.grid_step,
        "lines": path.lines.iter().map(|l| json!({
            "act": l.act,
            "intercept": number(l.intercept),
            "slope": number(l.slope),
        })).collect::<Vec<_>>(),
        "breakpoints": path.breakpoints.iter().map(|b| number(*b)).collect::<Vec<_>>(),
        "segments": path.segments.iter().map(|s| json!({
            "start": number(s.start),
            "end": number(s.end),
            "act": acts[s.act],
        })).collect::<Vec<_>>(),
        "grid": path.grid.iter().map(|g| json!({
            "lambda": number(g.lambda),
            "act": acts[g.representative],
            "tied": g.acts.iter().map(|&a| acts[a].clone()).collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
    })
}
