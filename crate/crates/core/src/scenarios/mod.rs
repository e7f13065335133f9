//! Decision problems built from return data.
//!
//! Monthly asset returns are combined into fixed-weight portfolios (the acts).
//! Months are clustered on `(market return, realized volatility)` into regimes
//! (the states), and each utility is the portfolio's mean return over the
//! months of a regime.

mod kmeans;

pub use kmeans::{kmeans_partition, KMeansConfig};

use std::collections::BTreeMap;

use serde::Serialize;

use crate::decision::DecisionProblem;
use crate::error::{Error, Result};

/// Monthly log-returns, one row per month.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnPanel {
    /// `YYYY-MM`, strictly increasing.
    pub months: Vec<String>,
    pub assets: Vec<String>,
    /// `returns[t][k]`: month `t`, asset `k`.
    pub returns: Vec<Vec<f64>>,
    /// Precomputed realized volatility per month, when supplied.
    pub market_vol: Option<Vec<f64>>,
}

impl ReturnPanel {
    pub fn new(
        months: Vec<String>,
        assets: Vec<String>,
        returns: Vec<Vec<f64>>,
        market_vol: Option<Vec<f64>>,
    ) -> Result<Self> {
        if months.len() != returns.len() {
            return Err(Error::Dimension(format!(
                "{} months but {} return rows",
                months.len(),
                returns.len()
            )));
        }
        if let Some(row) = returns.iter().find(|r| r.len() != assets.len()) {
            return Err(Error::Dimension(format!(
                "return row has {} entries for {} assets",
                row.len(),
                assets.len()
            )));
        }
        if let Some(vol) = &market_vol {
            if vol.len() != months.len() {
                return Err(Error::Dimension("volatility column length differs".into()));
            }
        }
        if let Some(w) = months.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput(format!(
                "months must be strictly increasing: {} then {}",
                w[0], w[1]
            )));
        }
        Ok(Self {
            months,
            assets,
            returns,
            market_vol,
        })
    }

    pub fn len(&self) -> usize {
        self.months.len()
    }

    pub fn is_empty(&self) -> bool {
        self.months.is_empty()
    }

    pub fn asset_index(&self, name: &str) -> Result<usize> {
        self.assets
            .iter()
            .position(|a| a == name)
            .ok_or_else(|| Error::Inconsistent(format!("asset `{name}` not in the return panel")))
    }
}

/// Daily returns of the market asset, used to derive monthly volatility.
#[derive(Debug, Clone, PartialEq)]
pub struct DailySeries {
    pub asset: String,
    /// `YYYY-MM-DD`.
    pub dates: Vec<String>,
    pub returns: Vec<f64>,
}

/// Fixed convex combinations of assets.
#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioBook {
    pub names: Vec<String>,
    pub assets: Vec<String>,
    pub weights: Vec<Vec<f64>>,
}

impl PortfolioBook {
    pub fn new(names: Vec<String>, assets: Vec<String>, weights: Vec<Vec<f64>>) -> Result<Self> {
        if names.len() != weights.len() || names.is_empty() {
            return Err(Error::Dimension(format!(
                "{} portfolios but {} weight rows",
                names.len(),
                weights.len()
            )));
        }
        for (name, w) in names.iter().zip(&weights) {
            if w.len() != assets.len() {
                return Err(Error::Dimension(format!(
                    "portfolio `{name}` has {} weights for {} assets",
                    w.len(),
                    assets.len()
                )));
            }
            if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
                return Err(Error::InvalidInput(format!(
                    "portfolio `{name}` has a negative weight"
                )));
            }
            let total: f64 = w.iter().sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidInput(format!(
                    "weights of `{name}` sum to {total}, not 1"
                )));
            }
        }
        Ok(Self {
            names,
            assets,
            weights,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Regime {
    Expansion,
    Recovery,
    Stagnation,
    Recession,
}

impl Regime {
    /// Column order of the regime utility matrix.
    pub const ALL: [Regime; 4] = [
        Regime::Expansion,
        Regime::Recovery,
        Regime::Stagnation,
        Regime::Recession,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Regime::Expansion => "Expansion",
            Regime::Recovery => "Recovery",
            Regime::Stagnation => "Stagnation",
            Regime::Recession => "Recession",
        }
    }
}

/// Clustered months. Centroids live in the clustering space (z-scores when
/// `scaling` is set).
#[derive(Debug, Clone, PartialEq)]
pub struct RegimeModel {
    pub k: usize,
    pub centroids: Vec<[f64; 2]>,
    /// Cluster of each month.
    pub assignment: Vec<usize>,
    /// Regime of each cluster, after [`label_regimes`].
    pub labels: Option<Vec<Regime>>,
    pub inertia: f64,
    /// Within-cluster sum of squares after each assignment step of the kept run.
    pub objective_trace: Vec<f64>,
    /// Column `(mean, sd)` used for z-scoring.
    pub scaling: Option<([f64; 2], [f64; 2])>,
}

impl RegimeModel {
    /// Month indices of each cluster.
    pub fn partition(&self) -> Vec<Vec<usize>> {
        let mut parts = vec![Vec::new(); self.k];
        for (t, &c) in self.assignment.iter().enumerate() {
            parts[c].push(t);
        }
        parts
    }

    /// State names and the cluster behind each state, in utility-column order.
    pub fn states(&self) -> Vec<(String, usize)> {
        match &self.labels {
            Some(labels) => Regime::ALL
                .iter()
                .filter_map(|r| {
                    labels
                        .iter()
                        .position(|l| l == r)
                        .map(|c| (r.name().to_string(), c))
                })
                .collect(),
            None => (0..self.k)
                .map(|c| (format!("regime_{}", c + 1), c))
                .collect(),
        }
    }

    pub fn label_of_cluster(&self, c: usize) -> String {
        match &self.labels {
            Some(labels) => labels[c].name().to_string(),
            None => format!("regime_{}", c + 1),
        }
    }
}

/// `r_t(a) = Σ_k w_{a,k} · r_t(asset k)`, a `T × n` matrix.
pub fn portfolio_returns(panel: &ReturnPanel, book: &PortfolioBook) -> Result<Vec<Vec<f64>>> {
    let columns: Vec<usize> = book
        .assets
        .iter()
        .map(|a| panel.asset_index(a))
        .collect::<Result<_>>()?;
    Ok(panel
        .returns
        .iter()
        .map(|row| {
            book.weights
                .iter()
                .map(|w| w.iter().zip(&columns).map(|(wk, &c)| wk * row[c]).sum())
                .collect()
        })
        .collect())
}

fn sample_sd(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Monthly `(market return, volatility)` features.
///
/// A precomputed volatility column in the panel is used as is; otherwise the
/// volatility of month `t` is the sample standard deviation of that month's
/// daily market returns.
pub fn monthly_features(
    panel: &ReturnPanel,
    market_asset: &str,
    daily: Option<&DailySeries>,
) -> Result<Vec<[f64; 2]>> {
    let m = panel.asset_index(market_asset)?;
    let vol: Vec<f64> = match (&panel.market_vol, daily) {
        (Some(vol), _) => vol.clone(),
        (None, Some(daily)) => {
            let mut by_month: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
            for (d, r) in daily.dates.iter().zip(&daily.returns) {
                by_month.entry(&d[..7.min(d.len())]).or_default().push(*r);
            }
            panel
                .months
                .iter()
                .map(|month| {
                    let obs = by_month.get(month.as_str()).map_or(&[][..], Vec::as_slice);
                    if obs.len() < 5 {
                        return Err(Error::SparseMonth {
                            month: month.clone(),
                            count: obs.len(),
                        });
                    }
                    Ok(sample_sd(obs))
                })
                .collect::<Result<_>>()?
        }
        (None, None) => {
            return Err(Error::InvalidInput(
                "volatility needs a market_vol column or daily market returns".into(),
            ))
        }
    };
    Ok(panel
        .returns
        .iter()
        .zip(vol)
        .map(|(row, v)| [row[m], v])
        .collect())
}

/// Name the four clusters of a k = 4 model.
///
/// With `g = ret_z − vol_z` per centroid, the largest `g` is Expansion and the
/// smallest is Recession; of the remaining two, the higher return is Recovery.
/// Ties go to the lower cluster index.
pub fn label_regimes(model: &RegimeModel) -> Result<RegimeModel> {
    if model.k != 4 || model.centroids.len() != 4 {
        return Err(Error::InvalidInput(format!(
            "regime labels need k = 4, got k = {}",
            model.k
        )));
    }
    let g: Vec<f64> = model.centroids.iter().map(|c| c[0] - c[1]).collect();
    let mut order: Vec<usize> = (0..4).collect();
    order.sort_by(|&a, &b| g[b].total_cmp(&g[a]).then(a.cmp(&b)));
    let mut labels = [Regime::Stagnation; 4];
    labels[order[0]] = Regime::Expansion;
    labels[order[3]] = Regime::Recession;
    let (x, y) = (order[1].min(order[2]), order[1].max(order[2]));
    let ret = |c: usize| model.centroids[c][0];
    let (rec, stag) = if ret(y) > ret(x) { (y, x) } else { (x, y) };
    labels[rec] = Regime::Recovery;
    labels[stag] = Regime::Stagnation;
    Ok(RegimeModel {
        labels: Some(labels.to_vec()),
        ..model.clone()
    })
}

/// Conditional mean return of each portfolio over the months of each regime.
pub fn utility_matrix(
    portfolio_names: &[String],
    portfolio_returns: &[Vec<f64>],
    model: &RegimeModel,
) -> Result<DecisionProblem> {
    if portfolio_returns.len() != model.assignment.len() {
        return Err(Error::Dimension(format!(
            "{} months of portfolio returns but {} assigned months",
            portfolio_returns.len(),
            model.assignment.len()
        )));
    }
    let parts = model.partition();
    let states = model.states();
    let mut columns = Vec::with_capacity(states.len());
    for (name, c) in &states {
        let months = &parts[*c];
        if months.is_empty() {
            return Err(Error::EmptyRegime(name.clone()));
        }
        let col: Vec<f64> = (0..portfolio_names.len())
            .map(|a| {
                months.iter().map(|&t| portfolio_returns[t][a]).sum::<f64>() / months.len() as f64
            })
            .collect();
        columns.push(col);
    }
    let utilities = (0..portfolio_names.len())
        .map(|a| columns.iter().map(|col| col[a]).collect())
        .collect();
    DecisionProblem::new(
        portfolio_names.to_vec(),
        states.into_iter().map(|(n, _)| n).collect(),
        utilities,
    )
}
