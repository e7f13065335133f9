//! Small dense linear-programming kernel.
//!
//! Two routes live here:
//!
//! * [`solve_lp`], a dense two-phase tableau simplex with Bland's pivot rule for
//!   problems of the form `min cᵀx  s.t.  Ax = b,  l ≤ x ≤ u`;
//! * [`minimize_over_band`], the closed-form greedy minimizer of a linear
//!   function over the intersection of a coordinate band with the probability
//!   simplex.
//!
//! The problems built by the stability analysis have a handful of variables
//! and constraints, so the tableau is dense and recomputes reduced costs from
//! scratch each iteration.

use crate::error::{Error, Result};

/// Equality constraints are accepted when violated by at most this much.
pub const FEASIBILITY_TOL: f64 = 1e-9;
/// Bounds are enforced to this precision in returned points.
pub const BOUND_TOL: f64 = 1e-12;

const PIVOT_TOL: f64 = 1e-11;
const COST_TOL: f64 = 1e-12;
const MAX_PIVOTS: usize = 50_000;

/// `min objectiveᵀx` subject to `eq_matrix · x = eq_rhs` and per-variable bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub eq_matrix: Vec<Vec<f64>>,
    pub eq_rhs: Vec<f64>,
    /// Finite lower bound per variable.
    pub lower: Vec<f64>,
    /// Upper bound per variable, `None` when unbounded above.
    pub upper: Vec<Option<f64>>,
}

impl LinearProgram {
    /// A program with the given objective, no constraints and `x ≥ 0`.
    pub fn new(objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self {
            objective,
            eq_matrix: Vec::new(),
            eq_rhs: Vec::new(),
            lower: vec![0.0; n],
            upper: vec![None; n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_eq(&mut self, row: Vec<f64>, rhs: f64) -> &mut Self {
        self.eq_matrix.push(row);
        self.eq_rhs.push(rhs);
        self
    }

    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: Option<f64>) -> &mut Self {
        self.lower[var] = lower;
        self.upper[var] = upper;
        self
    }

    fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(Error::Dimension(format!(
                "{} variables but {} lower / {} upper bounds",
                n,
                self.lower.len(),
                self.upper.len()
            )));
        }
        if self.eq_matrix.len() != self.eq_rhs.len() {
            return Err(Error::Dimension(format!(
                "{} constraint rows but {} right-hand sides",
                self.eq_matrix.len(),
                self.eq_rhs.len()
            )));
        }
        for (i, row) in self.eq_matrix.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Dimension(format!(
                    "constraint row {i} has {} coefficients, expected {n}",
                    row.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) || !self.eq_rhs[i].is_finite() {
                return Err(Error::InvalidInput(format!(
                    "constraint row {i} has non-finite data"
                )));
            }
        }
        if self.objective.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite objective".into()));
        }
        for j in 0..n {
            let lo = self.lower[j];
            if !lo.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "variable {j} needs a finite lower bound"
                )));
            }
            if let Some(hi) = self.upper[j] {
                if hi.is_nan() || hi < lo {
                    return Err(Error::InvalidInput(format!(
                        "variable {j} has bounds [{lo}, {hi}]"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { value: f64, point: Vec<f64> },
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn status(&self) -> LpStatus {
        match self {
            LpOutcome::Optimal { .. } => LpStatus::Optimal,
            LpOutcome::Infeasible => LpStatus::Infeasible,
            LpOutcome::Unbounded => LpStatus::Unbounded,
        }
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            LpOutcome::Optimal { value, .. } => Some(*value),
            _ => None,
        }
    }

    pub fn point(&self) -> Option<&[f64]> {
        match self {
            LpOutcome::Optimal { point, .. } => Some(point),
            _ => None,
        }
    }
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    cols: usize,
}

enum PhaseEnd {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn pivot(&mut self, r: usize, e: usize) {
        let p = self.rows[r][e];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        self.rhs[r] /= p;
        self.rows[r][e] = 1.0;
        let pivot_row = self.rows[r].clone();
        let pivot_rhs = self.rhs[r];
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            let f = self.rows[i][e];
            if f == 0.0 {
                continue;
            }
            for (v, pv) in self.rows[i].iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            self.rows[i][e] = 0.0;
            self.rhs[i] -= f * pivot_rhs;
            if self.rhs[i] < 0.0 && self.rhs[i] > -FEASIBILITY_TOL {
                self.rhs[i] = 0.0;
            }
        }
        self.basis[r] = e;
    }

    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut d = cost.to_vec();
        for (r, &b) in self.basis.iter().enumerate() {
            let cb = cost[b];
            if cb == 0.0 {
                continue;
            }
            for (dj, a) in d.iter_mut().zip(&self.rows[r]) {
                *dj -= cb * a;
            }
        }
        d
    }

    /// Primal simplex with Bland's rule over the columns flagged in `allowed`.
    fn optimize(&mut self, cost: &[f64], allowed: &[bool]) -> Result<PhaseEnd> {
        for _ in 0..MAX_PIVOTS {
            let reduced = self.reduced_costs(cost);
            let mut is_basic = vec![false; self.cols];
            for &b in &self.basis {
                is_basic[b] = true;
            }
            let entering =
                (0..self.cols).find(|&j| allowed[j] && !is_basic[j] && reduced[j] < -COST_TOL);
            let Some(e) = entering else {
                return Ok(PhaseEnd::Optimal);
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows.len() {
                let a = self.rows[r][e];
                if a <= PIVOT_TOL {
                    continue;
                }
                let ratio = self.rhs[r].max(0.0) / a;
                leave = match leave {
                    None => Some((r, ratio)),
                    Some((br, best)) => {
                        if ratio < best - 1e-15
                            || (ratio <= best + 1e-15 && self.basis[r] < self.basis[br])
                        {
                            Some((r, ratio))
                        } else {
                            Some((br, best))
                        }
                    }
                };
            }
            let Some((r, _)) = leave else {
                return Ok(PhaseEnd::Unbounded);
            };
            self.pivot(r, e);
        }
        Err(Error::Solver(format!(
            "simplex exceeded {MAX_PIVOTS} pivots"
        )))
    }
}

/// Solve a [`LinearProgram`] to a basic optimal solution.
///
/// Structural problems (shape mismatch, non-finite data, crossed bounds) are
/// reported as `Err`; infeasibility and unboundedness are ordinary outcomes.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpOutcome> {
    lp.validate()?;
    let n = lp.num_vars();

    // Substitute y = x − l so every variable is ≥ 0; finite upper bounds get
    // their own row y_j + s_j = u_j − l_j.
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    for (row, &b) in lp.eq_matrix.iter().zip(&lp.eq_rhs) {
        let shift: f64 = row.iter().zip(&lp.lower).map(|(a, l)| a * l).sum();
        rows.push(row.clone());
        rhs.push(b - shift);
    }
    let bounded: Vec<usize> = (0..n).filter(|&j| lp.upper[j].is_some()).collect();
    let n_slack = bounded.len();
    let n_struct = n + n_slack;
    for row in rows.iter_mut() {
        row.resize(n_struct, 0.0);
    }
    let n_eq = rows.len();
    for (k, &j) in bounded.iter().enumerate() {
        let mut row = vec![0.0; n_struct];
        row[j] = 1.0;
        row[n + k] = 1.0;
        rows.push(row);
        rhs.push(lp.upper[j].unwrap_or(0.0) - lp.lower[j]);
    }
    for (row, b) in rows.iter_mut().zip(rhs.iter_mut()).take(n_eq) {
        if *b < 0.0 {
            row.iter_mut().for_each(|v| *v = -*v);
            *b = -*b;
        }
    }

    // Artificial columns only for the equality rows; bound rows start with
    // their slack in the basis.
    let cols = n_struct + n_eq;
    let m = rows.len();
    let mut basis = Vec::with_capacity(m);
    for (i, row) in rows.iter_mut().enumerate() {
        row.resize(cols, 0.0);
        if i < n_eq {
            row[n_struct + i] = 1.0;
            basis.push(n_struct + i);
        } else {
            basis.push(n + (i - n_eq));
        }
    }
    let mut t = Tableau {
        rows,
        rhs,
        basis,
        cols,
    };

    let scale = t.rhs.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
    if n_eq > 0 {
        let mut phase1_cost = vec![0.0; cols];
        phase1_cost[n_struct..].iter_mut().for_each(|c| *c = 1.0);
        let allowed = vec![true; cols];
        t.optimize(&phase1_cost, &allowed)?;
        let residual: f64 = t
            .basis
            .iter()
            .zip(&t.rhs)
            .filter(|(&b, _)| b >= n_struct)
            .map(|(_, v)| v.abs())
            .sum();
        if residual > FEASIBILITY_TOL * scale {
            return Ok(LpOutcome::Infeasible);
        }
        // Drive remaining (zero-level) artificials out; drop redundant rows.
        let mut r = 0;
        while r < t.rows.len() {
            if t.basis[r] < n_struct {
                r += 1;
                continue;
            }
            let col = (0..n_struct)
                .filter(|&j| t.rows[r][j].abs() > 1e-9)
                .max_by(|&a, &b| {
                    t.rows[r][a]
                        .abs()
                        .partial_cmp(&t.rows[r][b].abs())
                        .unwrap_or(std::cmp::Ordering::Equal)
                        .then(b.cmp(&a))
                });
            match col {
                Some(j) => {
                    t.pivot(r, j);
                    r += 1;
                }
                None => {
                    t.rows.remove(r);
                    t.rhs.remove(r);
                    t.basis.remove(r);
                }
            }
        }
    }

    let mut cost = vec![0.0; cols];
    cost[..n].copy_from_slice(&lp.objective);
    let mut allowed = vec![true; cols];
    allowed[n_struct..].iter_mut().for_each(|a| *a = false);
    if let PhaseEnd::Unbounded = t.optimize(&cost, &allowed)? {
        return Ok(LpOutcome::Unbounded);
    }

    let mut y = vec![0.0; n_struct];
    for (&b, &v) in t.basis.iter().zip(&t.rhs) {
        if b < n_struct {
            y[b] = v;
        }
    }
    let point: Vec<f64> = (0..n)
        .map(|j| {
            let mut x = lp.lower[j] + y[j].max(0.0);
            if let Some(hi) = lp.upper[j] {
                x = x.min(hi);
            }
            x
        })
        .collect();
    let value = dot(&lp.objective, &point);
    Ok(LpOutcome::Optimal { value, point })
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |acc, (x, y)| acc + x * y)
}

/// The band `{π ∈ Δ : |π_j − center_j| ≤ radius}` around a reference prior.
#[derive(Debug, Clone, PartialEq)]
pub struct BandBox {
    center: Vec<f64>,
    radius: f64,
}

impl BandBox {
    pub fn new(center: &[f64], radius: f64) -> Result<Self> {
        if center.is_empty() {
            return Err(Error::Dimension("band center is empty".into()));
        }
        if !(0.0..=1.0).contains(&radius) {
            return Err(Error::InvalidInput(format!(
                "band radius {radius} outside [0, 1]"
            )));
        }
        if center.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidInput(
                "band center has negative or non-finite mass".into(),
            ));
        }
        let total: f64 = center.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!(
                "band center sums to {total}, not 1"
            )));
        }
        Ok(Self {
            center: center.to_vec(),
            radius,
        })
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn lower(&self) -> Vec<f64> {
        self.center
            .iter()
            .map(|c| (c - self.radius).max(0.0))
            .collect()
    }

    pub fn upper(&self) -> Vec<f64> {
        self.center
            .iter()
            .map(|c| (c + self.radius).min(1.0))
            .collect()
    }

    pub fn contains(&self, pi: &[f64], tol: f64) -> bool {
        pi.len() == self.dim()
            && (pi.iter().sum::<f64>() - 1.0).abs() <= tol
            && pi
                .iter()
                .zip(self.lower().iter().zip(self.upper()))
                .all(|(p, (lo, hi))| *p >= lo - tol && *p <= hi + tol)
    }
}

/// Exact minimum of `⟨π, direction⟩` over band ∩ simplex.
///
/// Every coordinate starts at its lower bound and the residual mass is poured
/// into coordinates in ascending order of `direction` (lowest index first on
/// ties) up to each coordinate's capacity.
pub fn minimize_over_band(direction: &[f64], band: &BandBox) -> Result<(f64, Vec<f64>)> {
    if direction.len() != band.dim() {
        return Err(Error::Dimension(format!(
            "direction has {} entries, band has {}",
            direction.len(),
            band.dim()
        )));
    }
    let lower = band.lower();
    let upper = band.upper();
    let mut point = lower.clone();
    let mut residual = 1.0 - lower.iter().sum::<f64>();
    let mut order: Vec<usize> = (0..direction.len()).collect();
    order.sort_by(|&a, &b| direction[a].total_cmp(&direction[b]).then(a.cmp(&b)));
    for j in order {
        if residual <= 0.0 {
            break;
        }
        let take = residual.min(upper[j] - lower[j]).max(0.0);
        point[j] += take;
        residual -= take;
    }
    Ok((dot(direction, &point), point))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Feasibility {
    pub feasible: bool,
    pub witness: Option<Vec<f64>>,
}

/// Decide whether band ∩ simplex ∩ {π : ⟨π, h⟩ ≥ 0 for every h} is nonempty.
pub fn band_feasible_with_halfspaces(
    band: &BandBox,
    halfspaces: &[Vec<f64>],
) -> Result<Feasibility> {
    let m = band.dim();
    if let Some(h) = halfspaces.iter().find(|h| h.len() != m) {
        return Err(Error::Dimension(format!(
            "halfspace normal has {} entries, band has {m}",
            h.len()
        )));
    }
    if halfspaces.iter().all(|h| dot(h, band.center()) >= 0.0) {
        return Ok(Feasibility {
            feasible: true,
            witness: Some(band.center().to_vec()),
        });
    }
    // Variables: π (m), then one surplus per halfspace.
    let k = halfspaces.len();
    let mut lp = LinearProgram::new(vec![0.0; m + k]);
    let lower = band.lower();
    let upper = band.upper();
    for j in 0..m {
        lp.set_bounds(j, lower[j], Some(upper[j]));
    }
    let mut simplex_row = vec![0.0; m + k];
    simplex_row[..m].iter_mut().for_each(|v| *v = 1.0);
    lp.add_eq(simplex_row, 1.0);
    for (i, h) in halfspaces.iter().enumerate() {
        let scale = h.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
        if scale == 0.0 {
            continue;
        }
        let mut row: Vec<f64> = h.iter().map(|v| v / scale).collect();
        row.resize(m + k, 0.0);
        row[m + i] = -1.0;
        lp.add_eq(row, 0.0);
    }
    Ok(match solve_lp(&lp)? {
        LpOutcome::Optimal { point, .. } => Feasibility {
            feasible: true,
            witness: Some(point[..m].to_vec()),
        },
        _ => Feasibility {
            feasible: false,
            witness: None,
        },
    })
}
