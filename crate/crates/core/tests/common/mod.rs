//! Independent oracles and random instance generators shared by the
//! integration tests.

#![allow(dead_code)]

use prior_stability::{DecisionProblem, LinearProgram, LpOutcome, Prior};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random prior with every coordinate bounded away from zero.
pub fn random_prior(rng: &mut ChaCha8Rng, m: usize) -> Prior {
    let raw: Vec<f64> = (0..m).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    Prior::new("p0", raw.iter().map(|x| x / total).collect()).unwrap()
}

/// Random `n × m` utility matrix in `[-1, 1]`. About a third of the problems
/// plant a dominated act (a mixture of two rows shifted down), and some
/// duplicate a row, so inadmissible acts and exact ties are both exercised.
pub fn random_problem(rng: &mut ChaCha8Rng, n: usize, m: usize) -> DecisionProblem {
    let mut rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..m).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    if n >= 3 {
        match rng.random_range(0..6) {
            0 | 1 => {
                let w: f64 = rng.random_range(0.2..0.8);
                let shift: f64 = rng.random_range(0.01..0.3);
                let (b, c) = (rows[0].clone(), rows[1].clone());
                rows[n - 1] = b
                    .iter()
                    .zip(&c)
                    .map(|(x, y)| w * x + (1.0 - w) * y - shift)
                    .collect();
            }
            2 => rows[n - 1] = rows[0].clone(),
            _ => {}
        }
    }
    DecisionProblem::from_rows(rows).unwrap()
}

pub fn band_bounds(center: &[f64], eps: f64) -> (Vec<f64>, Vec<f64>) {
    (
        center.iter().map(|c| (c - eps).max(0.0)).collect(),
        center.iter().map(|c| (c + eps).min(1.0)).collect(),
    )
}

/// `min ⟨d, π⟩` over band ∩ simplex, posed as a general LP for the simplex solver.
pub fn lp_band_min(direction: &[f64], center: &[f64], eps: f64) -> f64 {
    let (lo, hi) = band_bounds(center, eps);
    let mut lp = LinearProgram::new(direction.to_vec());
    lp.add_eq(vec![1.0; direction.len()], 1.0);
    for j in 0..direction.len() {
        lp.set_bounds(j, lo[j], Some(hi[j]));
    }
    match prior_stability::solve_lp(&lp).unwrap() {
        LpOutcome::Optimal { value, .. } => value,
        other => panic!("band LP not optimal: {other:?}"),
    }
}

/// `min ⟨d, π⟩` over band ∩ simplex by enumerating the vertices of the
/// polytope: every vertex fixes all but one coordinate at a bound.
pub fn vertex_band_min(direction: &[f64], center: &[f64], eps: f64) -> f64 {
    let m = direction.len();
    let (lo, hi) = band_bounds(center, eps);
    let mut best = f64::INFINITY;
    for free in 0..m {
        for mask in 0..(1u32 << (m - 1)) {
            let mut pi = vec![0.0; m];
            for (bit, j) in (0..m).filter(|&j| j != free).enumerate() {
                pi[j] = if mask >> bit & 1 == 1 { hi[j] } else { lo[j] };
            }
            let rest = 1.0 - pi.iter().sum::<f64>();
            if rest >= lo[free] - 1e-12 && rest <= hi[free] + 1e-12 {
                pi[free] = rest;
                best = best.min(direction.iter().zip(&pi).map(|(d, p)| d * p).sum());
            }
        }
    }
    best
}

fn diff(problem: &DecisionProblem, a: usize, b: usize) -> Vec<f64> {
    let u = problem.utilities();
    u[a].iter().zip(&u[b]).map(|(x, y)| x - y).collect()
}

/// Worst-case margin of `a` by vertex enumeration.
pub fn oracle_margin(problem: &DecisionProblem, a: usize, center: &[f64], eps: f64) -> f64 {
    (0..problem.num_acts())
        .filter(|&b| b != a)
        .map(|b| vertex_band_min(&diff(problem, a, b), center, eps))
        .fold(f64::INFINITY, f64::min)
}

/// Largest ε on a uniform grid of the given step for which `a` stays optimal
/// over the whole band.
pub fn grid_radius(problem: &DecisionProblem, a: usize, center: &[f64], step: f64) -> f64 {
    let steps = (1.0 / step).round() as usize;
    let mut last = 0.0;
    for i in 0..=steps {
        let eps = i as f64 * step;
        if oracle_margin(problem, a, center, eps) < 0.0 {
            break;
        }
        last = eps;
    }
    last
}

/// All points of the simplex with coordinates on a `1/steps` lattice.
pub fn simplex_grid(m: usize, steps: usize) -> Vec<Vec<f64>> {
    fn rec(m: usize, left: usize, steps: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if cur.len() == m - 1 {
            cur.push(left);
            out.push(cur.iter().map(|&k| k as f64 / steps as f64).collect());
            cur.pop();
            return;
        }
        for k in 0..=left {
            cur.push(k);
            rec(m, left - k, steps, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(m, steps, steps, &mut Vec::new(), &mut out);
    out
}

/// Expected utilities of every act under `pi`.
pub fn expected(problem: &DecisionProblem, pi: &[f64]) -> Vec<f64> {
    problem
        .utilities()
        .iter()
        .map(|row| row.iter().zip(pi).map(|(u, p)| u * p).sum())
        .collect()
}

/// Smallest sup-distance from `center` to a lattice prior that makes `a`
/// optimal (within `slack`), or `None` when no lattice prior does.
pub fn grid_need(
    problem: &DecisionProblem,
    a: usize,
    center: &[f64],
    grid: &[Vec<f64>],
    slack: f64,
) -> Option<f64> {
    grid.iter()
        .filter(|pi| {
            let e = expected(problem, pi);
            let best = e.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            e[a] >= best - slack
        })
        .map(|pi| {
            pi.iter()
                .zip(center)
                .map(|(p, c)| (p - c).abs())
                .fold(0.0, f64::max)
        })
        .reduce(f64::min)
}

/// Planted regime means of (market return, volatility).
pub const PLANTED: [(&str, f64, f64); 4] = [
    ("Expansion", 0.025, 0.010),
    ("Recovery", 0.015, 0.030),
    ("Stagnation", -0.005, 0.012),
    ("Recession", -0.035, 0.040),
];

/// A `months`-long monthly panel over SPY, AGG, DBC, VNQ, EFA with a
/// `market_vol` column, drawn from the four planted regimes in equal shares
/// and shuffled. Within-regime noise is 0.002 on returns and 0.001 on
/// volatility, far below the regime separation. Returns the CSV text and the
/// planted regime name of each month.
pub fn planted_panel(seed: u64, months: usize) -> (String, Vec<&'static str>) {
    use rand::seq::SliceRandom;
    use rand_distr::{Distribution, Normal};

    let mut rng = rng(seed);
    let mut regimes: Vec<usize> = (0..months).map(|t| t % 4).collect();
    regimes.shuffle(&mut rng);
    let ret_noise = Normal::new(0.0, 0.002).unwrap();
    let vol_noise = Normal::new(0.0, 0.001).unwrap();
    // Per-asset sensitivity to the market return and regime-independent drift.
    let assets = [
        ("SPY", 1.0, 0.0),
        ("AGG", -0.2, 0.003),
        ("DBC", 0.6, 0.001),
        ("VNQ", 1.2, -0.001),
        ("EFA", 0.9, 0.0005),
    ];

    let mut text = String::from("date,SPY,AGG,DBC,VNQ,EFA,market_vol\n");
    for (t, &r) in regimes.iter().enumerate() {
        let (_, mean_ret, mean_vol) = PLANTED[r];
        let market = mean_ret + ret_noise.sample(&mut rng);
        let year = 2010 + t / 12;
        let month = t % 12 + 1;
        text.push_str(&format!("{year}-{month:02}"));
        for (name, beta, drift) in assets {
            let value = if name == "SPY" {
                market
            } else {
                beta * market + drift + ret_noise.sample(&mut rng)
            };
            text.push_str(&format!(",{value}"));
        }
        let vol = (mean_vol + vol_noise.sample(&mut rng)).max(1e-4);
        text.push_str(&format!(",{vol}\n"));
    }
    (text, regimes.iter().map(|&r| PLANTED[r].0).collect())
}
