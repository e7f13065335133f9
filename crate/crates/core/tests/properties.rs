mod common;

use common::*;
use prior_stability::scenarios::{kmeans_partition, utility_matrix, KMeansConfig};
use prior_stability::{
    affine_transform, band_feasible_with_halfspaces, bayes_acts, contamination_need, envelope_path,
    gamma_aggregate, minimize_over_band, optimal_acts, robustness_radius, solve_lp,
    stability_profile, stability_score, variance_cost, BandBox, BisectionConfig, Branch, GammaMode,
    LinearProgram, LpOutcome, Need, Prior, Radius, ScoreLine,
};
use proptest::prelude::*;
use rand::Rng;

fn diff_rows(problem: &prior_stability::DecisionProblem, a: usize) -> Vec<Vec<f64>> {
    let u = problem.utilities();
    (0..problem.num_acts())
        .filter(|&b| b != a)
        .map(|b| u[a].iter().zip(&u[b]).map(|(x, y)| x - y).collect())
        .collect()
}

/// Solve a small dense square system by Gaussian elimination with partial pivoting.
fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let k = b.len();
    for col in 0..k {
        let piv = (col..k).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-9 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        let pivot = a[col].clone();
        for r in (0..k).filter(|&r| r != col) {
            let f = a[r][col] / pivot[col];
            for (x, p) in a[r][col..].iter_mut().zip(&pivot[col..]) {
                *x -= f * p;
            }
            b[r] -= f * b[col];
        }
    }
    Some((0..k).map(|i| b[i] / a[i][i]).collect())
}

fn full_row_rank(rows: &[Vec<f64>]) -> bool {
    let k = rows.len();
    let n = rows[0].len();
    (0u32..(1 << n))
        .filter(|c| c.count_ones() as usize == k)
        .any(|cols| {
            let picked: Vec<usize> = (0..n).filter(|j| cols >> j & 1 == 1).collect();
            let mat = rows
                .iter()
                .map(|r| picked.iter().map(|&j| r[j]).collect())
                .collect();
            solve_square(mat, vec![0.0; k]).is_some()
        })
}

/// Minimum of a box-bounded equality LP by enumerating basic solutions.
fn brute_force_lp(lp: &LinearProgram) -> Option<f64> {
    let n = lp.num_vars();
    let k = lp.eq_rhs.len();
    let mut best: Option<f64> = None;
    for basis in 0u32..(1 << n) {
        if basis.count_ones() as usize != k {
            continue;
        }
        let basic: Vec<usize> = (0..n).filter(|j| basis >> j & 1 == 1).collect();
        let nonbasic: Vec<usize> = (0..n).filter(|j| basis >> j & 1 == 0).collect();
        for at_upper in 0u32..(1 << nonbasic.len()) {
            let mut x = vec![0.0; n];
            for (bit, &j) in nonbasic.iter().enumerate() {
                x[j] = if at_upper >> bit & 1 == 1 {
                    lp.upper[j].unwrap()
                } else {
                    lp.lower[j]
                };
            }
            let rhs: Vec<f64> = (0..k)
                .map(|r| {
                    lp.eq_rhs[r]
                        - nonbasic
                            .iter()
                            .map(|&j| lp.eq_matrix[r][j] * x[j])
                            .sum::<f64>()
                })
                .collect();
            let mat: Vec<Vec<f64>> = (0..k)
                .map(|r| basic.iter().map(|&j| lp.eq_matrix[r][j]).collect())
                .collect();
            let Some(sol) = solve_square(mat, rhs) else {
                continue;
            };
            for (&j, v) in basic.iter().zip(&sol) {
                x[j] = *v;
            }
            if (0..n).all(|j| x[j] >= lp.lower[j] - 1e-9 && x[j] <= lp.upper[j].unwrap() + 1e-9) {
                let value: f64 = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
                best = Some(best.map_or(value, |b: f64| b.min(value)));
            }
        }
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn greedy_point_lies_in_band_and_simplex(seed in any::<u64>(), m in 2usize..=6, eps in 0.0f64..=1.0) {
        let mut rng = rng(seed);
        let center = random_prior(&mut rng, m);
        let d: Vec<f64> = (0..m).map(|_| rng.random_range(-3.0..3.0)).collect();
        let band = BandBox::new(center.mass(), eps).unwrap();
        let (value, point) = minimize_over_band(&d, &band).unwrap();
        prop_assert!((point.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(band.contains(&point, 1e-12));
        prop_assert!((value - vertex_band_min(&d, center.mass(), eps)).abs() <= 1e-9);
        let neg: Vec<f64> = d.iter().map(|x| -x).collect();
        let upper = -minimize_over_band(&neg, &band).unwrap().0;
        prop_assert!(upper >= value - 1e-12);
        prop_assert!((upper - -vertex_band_min(&neg, center.mass(), eps)).abs() <= 1e-9);
    }

    #[test]
    fn simplex_matches_basic_solution_enumeration(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let n = rng.random_range(2..=6);
        let k = rng.random_range(1..n.min(3) + 1);
        // Small integers make degenerate vertices (and cycling opportunities) common.
        let objective: Vec<f64> = (0..n).map(|_| rng.random_range(-3..=3) as f64).collect();
        let mut lp = LinearProgram::new(objective);
        for _ in 0..k {
            let row: Vec<f64> = (0..n).map(|_| rng.random_range(-2..=2) as f64).collect();
            let rhs = rng.random_range(-2..=2) as f64;
            lp.add_eq(row, rhs);
        }
        for j in 0..n {
            let lo = rng.random_range(-2..=0) as f64;
            let hi = lo + rng.random_range(0..=3) as f64;
            lp.set_bounds(j, lo, Some(hi));
        }
        prop_assume!(full_row_rank(&lp.eq_matrix));
        let oracle = brute_force_lp(&lp);
        match solve_lp(&lp).unwrap() {
            LpOutcome::Optimal { value, point } => {
                let oracle = oracle.expect("oracle finds a feasible vertex");
                prop_assert!((value - oracle).abs() <= 1e-7, "simplex {value} vs oracle {oracle}");
                for (row, rhs) in lp.eq_matrix.iter().zip(&lp.eq_rhs) {
                    let lhs: f64 = row.iter().zip(&point).map(|(a, x)| a * x).sum();
                    prop_assert!((lhs - rhs).abs() <= 1e-7);
                }
            }
            LpOutcome::Infeasible => prop_assert!(oracle.is_none()),
            LpOutcome::Unbounded => prop_assert!(false, "bounded box reported unbounded"),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn bisection_matches_fine_grid_scan(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let n = rng.random_range(2..=5);
        let m = rng.random_range(2..=5);
        let problem = random_problem(&mut rng, n, m);
        let prior = random_prior(&mut rng, m);
        let config = BisectionConfig::default();
        for a in bayes_acts(&problem, &prior).unwrap().optimal_acts {
            let rob = robustness_radius(&problem, a, &prior, &config).unwrap().value().unwrap();
            let scan = grid_radius(&problem, a, prior.mass(), 1e-4);
            prop_assert!((rob - scan).abs() <= 1e-6 + 1e-4, "act {a}: bisection {rob} vs scan {scan}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn contamination_lp_matches_feasibility_search(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let n = rng.random_range(2..=5);
        let m = rng.random_range(2..=5);
        let problem = random_problem(&mut rng, n, m);
        let prior = random_prior(&mut rng, m);
        for a in 0..n {
            let halfspaces = diff_rows(&problem, a);
            let feasible = |eps: f64| {
                band_feasible_with_halfspaces(&BandBox::new(prior.mass(), eps).unwrap(), &halfspaces)
                    .unwrap()
                    .feasible
            };
            match contamination_need(&problem, a, &prior).unwrap() {
                Need::Value { epsilon, witness } => {
                    prop_assert!(feasible(1.0));
                    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
                    if feasible(0.0) {
                        hi = 0.0;
                    }
                    while hi - lo > 1e-9 {
                        let mid = 0.5 * (lo + hi);
                        if feasible(mid) { hi = mid } else { lo = mid }
                    }
                    prop_assert!((epsilon - hi).abs() <= 1e-6, "act {a}: LP {epsilon} vs search {hi}");
                    // The witness sits in the reported band and makes `a` optimal.
                    let band = BandBox::new(prior.mass(), epsilon).unwrap();
                    prop_assert!(band.contains(&witness, 1e-9));
                    let e = expected(&problem, &witness);
                    let best = e.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    prop_assert!(e[a] >= best - 1e-9);
                }
                Need::Infeasible(cert) => {
                    prop_assert!(!feasible(1.0));
                    prop_assert!(cert.verify(&problem));
                    prop_assert!(cert.min_margin() > 0.0);
                    let total: f64 = cert.weights.iter().map(|(_, w)| w).sum();
                    prop_assert!((total - 1.0).abs() <= 1e-9);
                    // Strict domination in every state, recomputed from the rows.
                    for j in 0..m {
                        let mix: f64 = cert.weights.iter().map(|&(b, w)| w * problem.utilities()[b][j]).sum();
                        prop_assert!(mix > problem.utilities()[a][j]);
                    }
                }
            }
        }
    }

    #[test]
    fn affine_maps_keep_certificates(seed in any::<u64>(), scale in 0.001f64..=10.0, shift in -5.0f64..=5.0) {
        let mut rng = rng(seed);
        let n = rng.random_range(3..=5);
        let m = rng.random_range(2..=4);
        let problem = random_problem(&mut rng, n, m);
        let prior = random_prior(&mut rng, m);
        let moved = affine_transform(&problem, scale, shift).unwrap();
        for a in 0..n {
            let before = contamination_need(&problem, a, &prior).unwrap();
            let after = contamination_need(&moved, a, &prior).unwrap();
            prop_assert_eq!(before.certificate().is_some(), after.certificate().is_some());
        }
    }

    #[test]
    fn gamma_bounds_spread_with_epsilon(seed in any::<u64>(), e1 in 0.0f64..=1.0, e2 in 0.0f64..=1.0) {
        let mut rng = rng(seed);
        let n = rng.random_range(2..=5);
        let m = rng.random_range(2..=5);
        let problem = random_problem(&mut rng, n, m);
        let prior = random_prior(&mut rng, m);
        let (small, large) = (e1.min(e2), e1.max(e2));
        let g_small = gamma_aggregate(&problem, &BandBox::new(prior.mass(), small).unwrap(), GammaMode::Minimax).unwrap();
        let g_large = gamma_aggregate(&problem, &BandBox::new(prior.mass(), large).unwrap(), GammaMode::Minimax).unwrap();
        for a in 0..n {
            prop_assert!(g_large.lower[a] <= g_small.lower[a] + 1e-12);
            prop_assert!(g_large.upper[a] >= g_small.upper[a] - 1e-12);
        }
    }

    #[test]
    fn envelope_agrees_with_grid_argmax(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let n = rng.random_range(1..=6);
        let lines: Vec<ScoreLine> = (0..n)
            .map(|i| ScoreLine {
                act: format!("a{}", i + 1),
                act_index: i,
                intercept: rng.random_range(-1.0..1.0),
                slope: -rng.random_range(0.0..1.0),
            })
            .collect();
        let path = envelope_path(lines.clone(), 3.0, 0.01).unwrap();
        prop_assert!(path.breakpoints.windows(2).all(|w| w[0] < w[1]));
        for i in 0..=3000 {
            let lambda = i as f64 * 1e-3;
            if path.breakpoints.iter().any(|b| (b - lambda).abs() <= 1e-9) {
                continue;
            }
            let best = lines.iter().map(|l| l.at(lambda)).fold(f64::NEG_INFINITY, f64::max);
            let winner = path.act_at(lambda).unwrap();
            prop_assert!(lines[winner].at(lambda) >= best - 1e-9, "λ={lambda}: envelope picks {winner}");
        }
    }

    #[test]
    fn score_branches_and_extreme_lambdas(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let n = rng.random_range(2..=5);
        let m = rng.random_range(2..=4);
        let problem = random_problem(&mut rng, n, m);
        let prior = random_prior(&mut rng, m);
        let profile = stability_profile(&problem, std::slice::from_ref(&prior), &BisectionConfig::default()).unwrap();
        let costs = variance_cost(&problem);
        let bayes = bayes_acts(&problem, &prior).unwrap();

        let at_zero = stability_score(&profile, &costs, 0.0, "p0").unwrap();
        for s in &at_zero {
            prop_assert_eq!(s.branch == Branch::Bayes, bayes.contains(s.act_index));
        }
        let rob = |a: usize| profile.rows[a].radius.value().unwrap_or(f64::NEG_INFINITY);
        let max_rob = bayes.optimal_acts.iter().map(|&a| rob(a)).fold(f64::NEG_INFINITY, f64::max);
        let chosen = optimal_acts(&at_zero).unwrap();
        for &a in &chosen.acts {
            prop_assert!(bayes.contains(a) && rob(a) >= max_rob - 1e-12, "λ=0 picks act {a}");
        }

        // Far beyond every breakpoint the cheapest finite-score act wins.
        let lambda = 1e6;
        let far = stability_score(&profile, &costs, lambda, "p0").unwrap();
        let finite: Vec<_> = far.iter().filter(|s| s.is_finite()).collect();
        let min_cost = finite.iter().map(|s| s.cost_term).fold(f64::INFINITY, f64::min);
        let expect = finite
            .iter()
            .filter(|s| s.cost_term <= min_cost + 1e-15)
            .max_by(|x, y| {
                x.stability_term.unwrap().total_cmp(&y.stability_term.unwrap()).then(y.act_index.cmp(&x.act_index))
            })
            .unwrap()
            .act_index;
        let near_min = finite.iter().filter(|s| s.cost_term - min_cost > 0.0).map(|s| s.cost_term - min_cost).fold(f64::INFINITY, f64::min);
        // Only meaningful when the cost gap outweighs the stability spread at this λ.
        if near_min * lambda > 2.0 {
            prop_assert_eq!(optimal_acts(&far).unwrap().representative, expect);
        }
    }

    #[test]
    fn clustering_partitions_and_conditional_means(seed in any::<u64>(), k in 1usize..=5, t in 12usize..=60) {
        let mut rng = rng(seed);
        let features: Vec<[f64; 2]> = (0..t).map(|_| [rng.random_range(-0.05..0.05), rng.random_range(0.0..0.05)]).collect();
        let returns: Vec<Vec<f64>> = (0..t).map(|_| (0..3).map(|_| rng.random_range(-0.1..0.1)).collect()).collect();
        let config = KMeansConfig { k, seed, ..KMeansConfig::default() };
        let model = kmeans_partition(&features, &config).unwrap();
        prop_assert_eq!(&model, &kmeans_partition(&features, &config).unwrap());
        let parts = model.partition();
        prop_assert_eq!(parts.iter().map(Vec::len).sum::<usize>(), t);
        prop_assert!(parts.iter().all(|p| !p.is_empty()));
        prop_assert!(model.objective_trace.windows(2).all(|w| w[1] <= w[0] + 1e-12));

        let names: Vec<String> = (0..3).map(|i| format!("p{i}")).collect();
        let problem = utility_matrix(&names, &returns, &model).unwrap();
        for a in 0..3 {
            let weighted: f64 = model
                .states()
                .iter()
                .enumerate()
                .map(|(j, (_, c))| parts[*c].len() as f64 * problem.utilities()[a][j])
                .sum();
            let total: f64 = returns.iter().map(|r| r[a]).sum();
            prop_assert!((weighted - total).abs() <= 1e-9);
        }
    }
}

#[test]
fn vertex_prior_band_reaches_inward() {
    // π0 on a vertex: the band reaches into the simplex from one side only.
    let problem =
        prior_stability::DecisionProblem::from_rows(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
    let prior = Prior::degenerate("vertex", 2, 0).unwrap();
    let rob = robustness_radius(&problem, 0, &prior, &BisectionConfig::default()).unwrap();
    assert!((rob.value().unwrap() - 0.5).abs() <= 1e-6);
    assert_eq!(
        robustness_radius(&problem, 1, &prior, &BisectionConfig::default()).unwrap(),
        Radius::NotBayes
    );
    assert!(
        (contamination_need(&problem, 1, &prior)
            .unwrap()
            .value()
            .unwrap()
            - 0.5)
            .abs()
            <= 1e-9
    );
}
