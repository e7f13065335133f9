//! Finite decision problems, priors and Bayes acts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::dot;

/// Acts within this distance of the best expected utility are tied.
pub const TIE_TOL: f64 = 1e-12;

/// Priors must sum to one within this tolerance before renormalization.
pub const PRIOR_SUM_TOL: f64 = 1e-9;

/// A finite decision problem: acts × states utility matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionProblem {
    acts: Vec<String>,
    states: Vec<String>,
    utilities: Vec<Vec<f64>>,
}

impl DecisionProblem {
    pub fn new(acts: Vec<String>, states: Vec<String>, utilities: Vec<Vec<f64>>) -> Result<Self> {
        if acts.is_empty() || states.is_empty() {
            return Err(Error::InvalidInput(
                "a decision problem needs at least one act and one state".into(),
            ));
        }
        if utilities.len() != acts.len() {
            return Err(Error::Dimension(format!(
                "{} acts but {} utility rows",
                acts.len(),
                utilities.len()
            )));
        }
        for (act, row) in acts.iter().zip(&utilities) {
            if row.len() != states.len() {
                return Err(Error::Dimension(format!(
                    "act `{act}` has {} utilities, expected {}",
                    row.len(),
                    states.len()
                )));
            }
            if row.iter().any(|u| !u.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "act `{act}` has a non-finite utility"
                )));
            }
        }
        Ok(Self {
            acts,
            states,
            utilities,
        })
    }

    /// Build a problem with generated labels `a1..an` and `s1..sm`.
    pub fn from_rows(utilities: Vec<Vec<f64>>) -> Result<Self> {
        let n = utilities.len();
        let m = utilities.first().map_or(0, Vec::len);
        let acts = (1..=n).map(|i| format!("a{i}")).collect();
        let states = (1..=m).map(|j| format!("s{j}")).collect();
        Self::new(acts, states, utilities)
    }

    pub fn acts(&self) -> &[String] {
        &self.acts
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn num_acts(&self) -> usize {
        self.acts.len()
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn utilities(&self) -> &[Vec<f64>] {
        &self.utilities
    }

    /// Utility row `u_a` of an act.
    pub fn row(&self, act: usize) -> Result<&[f64]> {
        self.utilities
            .get(act)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::UnknownAct(format!("#{act}")))
    }

    pub fn act_index(&self, name: &str) -> Result<usize> {
        self.acts
            .iter()
            .position(|a| a == name)
            .ok_or_else(|| Error::UnknownAct(name.to_string()))
    }

    fn check_prior(&self, prior: &Prior) -> Result<()> {
        if prior.len() != self.num_states() {
            return Err(Error::Dimension(format!(
                "prior `{}` has {} states, problem has {}",
                prior.name,
                prior.len(),
                self.num_states()
            )));
        }
        Ok(())
    }
}

/// A named point of the probability simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prior {
    pub name: String,
    mass: Vec<f64>,
}

impl Prior {
    /// Validates nonnegativity and Σ = 1 ± 1e-9, then divides by the sum so
    /// the stored masses add up to one.
    pub fn new(name: impl Into<String>, mass: Vec<f64>) -> Result<Self> {
        let name = name.into();
        if mass.is_empty() {
            return Err(Error::InvalidInput(format!("prior `{name}` is empty")));
        }
        if mass.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidInput(format!(
                "prior `{name}` has a negative or non-finite mass"
            )));
        }
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > PRIOR_SUM_TOL {
            return Err(Error::InvalidInput(format!(
                "prior `{name}` sums to {total}, not 1"
            )));
        }
        let mass = mass.into_iter().map(|p| p / total).collect();
        Ok(Self { name, mass })
    }

    pub fn uniform(name: impl Into<String>, m: usize) -> Result<Self> {
        Self::new(name, vec![1.0 / m as f64; m])
    }

    /// Point mass on state `j`.
    pub fn degenerate(name: impl Into<String>, m: usize, j: usize) -> Result<Self> {
        let mut mass = vec![0.0; m];
        *mass
            .get_mut(j)
            .ok_or_else(|| Error::InvalidInput(format!("state {j} out of range")))? = 1.0;
        Self::new(name, mass)
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BayesSet {
    /// Indices of the acts attaining the maximal expected utility.
    pub optimal_acts: Vec<usize>,
    pub expected_utilities: Vec<f64>,
}

impl BayesSet {
    pub fn contains(&self, act: usize) -> bool {
        self.optimal_acts.contains(&act)
    }
}

/// `E_π[u_a] = Σ_j π_j · u(a, θ_j)`.
pub fn expected_utility(problem: &DecisionProblem, act: usize, prior: &Prior) -> Result<f64> {
    problem.check_prior(prior)?;
    Ok(dot(prior.mass(), problem.row(act)?))
}

pub fn bayes_acts(problem: &DecisionProblem, prior: &Prior) -> Result<BayesSet> {
    problem.check_prior(prior)?;
    let expected_utilities: Vec<f64> = problem
        .utilities()
        .iter()
        .map(|row| dot(prior.mass(), row))
        .collect();
    let best = expected_utilities
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let optimal_acts = expected_utilities
        .iter()
        .enumerate()
        .filter(|(_, e)| **e >= best - TIE_TOL)
        .map(|(i, _)| i)
        .collect();
    Ok(BayesSet {
        optimal_acts,
        expected_utilities,
    })
}

/// Map every utility to `scale · u + shift`.
pub fn affine_transform(
    problem: &DecisionProblem,
    scale: f64,
    shift: f64,
) -> Result<DecisionProblem> {
    if !(scale > 0.0 && scale.is_finite()) || !shift.is_finite() {
        return Err(Error::InvalidInput(format!(
            "affine transform needs scale > 0 and finite shift, got scale={scale}, shift={shift}"
        )));
    }
    let utilities = problem
        .utilities()
        .iter()
        .map(|row| row.iter().map(|u| scale * u + shift).collect())
        .collect();
    DecisionProblem::new(problem.acts.clone(), problem.states.clone(), utilities)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn reference() -> DecisionProblem {
        crate::catalog::reference_problem()
    }

    #[test]
    fn reference_expected_utilities() {
        let p = reference();
        let uniform = Prior::uniform("uniform", 4).unwrap();
        let e3 = expected_utility(&p, 2, &uniform).unwrap();
        assert!((e3 - 0.0065).abs() <= 1e-12);
        let boom = Prior::degenerate("exp", 4, 0).unwrap();
        assert_eq!(expected_utility(&p, 0, &boom).unwrap(), 0.021);
        assert!(matches!(
            expected_utility(&p, 6, &uniform),
            Err(Error::UnknownAct(_))
        ));
    }

    #[test]
    fn reference_uniform_bayes_set() {
        let p = reference();
        let uniform = Prior::uniform("uniform", 4).unwrap();
        let set = bayes_acts(&p, &uniform).unwrap();
        assert_eq!(set.optimal_acts, vec![2]);
        let expected = [0.0050, 0.00525, 0.0065, -0.00025, 0.00075, 0.00575];
        for (e, x) in set.expected_utilities.iter().zip(expected) {
            assert!((e - x).abs() < 1e-12, "{e} vs {x}");
        }
        let doubled = affine_transform(&p, 2.0, 0.0).unwrap();
        assert_eq!(
            bayes_acts(&doubled, &uniform).unwrap().optimal_acts,
            vec![2]
        );
    }

    #[test]
    fn single_act_and_ties() {
        let p = DecisionProblem::from_rows(vec![vec![0.3, -1.0]]).unwrap();
        let prior = Prior::new("p", vec![0.4, 0.6]).unwrap();
        assert_eq!(bayes_acts(&p, &prior).unwrap().optimal_acts, vec![0]);

        let p = DecisionProblem::from_rows(vec![vec![0.3, 0.1], vec![0.3, 0.1], vec![0.0, 0.0]])
            .unwrap();
        assert_eq!(bayes_acts(&p, &prior).unwrap().optimal_acts, vec![0, 1]);
    }

    #[test]
    fn transforms() {
        let p = reference();
        assert_eq!(affine_transform(&p, 1.0, 0.0).unwrap(), p);
        let shifted = affine_transform(&p, 1.0, 5.0).unwrap();
        let uniform = Prior::uniform("uniform", 4).unwrap();
        let a = bayes_acts(&p, &uniform).unwrap();
        let b = bayes_acts(&shifted, &uniform).unwrap();
        assert_eq!(a.optimal_acts, b.optimal_acts);
        for (x, y) in a.expected_utilities.iter().zip(&b.expected_utilities) {
            assert!((y - x - 5.0).abs() < 1e-12);
        }
        assert!(affine_transform(&p, 0.0, 1.0).is_err());
        assert!(affine_transform(&p, -2.0, 1.0).is_err());
    }

    #[test]
    fn prior_validation_and_renormalization() {
        assert!(Prior::new("bad", vec![0.5, 0.6]).is_err());
        assert!(Prior::new("neg", vec![1.5, -0.5]).is_err());
        let p = Prior::new("ok", vec![0.5, 0.5 + 5e-10]).unwrap();
        assert!((p.mass().iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn shape_errors() {
        assert!(matches!(
            DecisionProblem::new(vec!["a".into()], vec!["s".into()], vec![vec![1.0, 2.0]]),
            Err(Error::Dimension(_))
        ));
        let p = reference();
        let prior = Prior::uniform("u", 3).unwrap();
        assert!(matches!(bayes_acts(&p, &prior), Err(Error::Dimension(_))));
    }

    fn problem_strategy() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>)> {
        (1usize..6, 1usize..6).prop_flat_map(|(n, m)| {
            (
                prop::collection::vec(prop::collection::vec(-1.0f64..1.0, m), n),
                prop::collection::vec(0.01f64..1.0, m),
            )
        })
    }

    fn normalized(w: &[f64]) -> Vec<f64> {
        let s: f64 = w.iter().sum();
        w.iter().map(|x| x / s).collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(500))]

        #[test]
        fn argmax_invariant_under_affine_maps(
            (rows, w) in problem_strategy(),
            scale in 0.01f64..10.0,
            shift in -5.0f64..5.0,
        ) {
            let p = DecisionProblem::from_rows(rows).unwrap();
            let prior = Prior::new("p", normalized(&w)).unwrap();
            let before = bayes_acts(&p, &prior).unwrap();
            let after = bayes_acts(&affine_transform(&p, scale, shift).unwrap(), &prior).unwrap();
            prop_assert_eq!(before.optimal_acts, after.optimal_acts);
        }

        #[test]
        fn degenerate_prior_picks_column_argmax((rows, _w) in problem_strategy(), pick in 0usize..6) {
            let p = DecisionProblem::from_rows(rows).unwrap();
            let j = pick % p.num_states();
            let prior = Prior::degenerate("d", p.num_states(), j).unwrap();
            let best = p.utilities().iter().map(|r| r[j]).fold(f64::NEG_INFINITY, f64::max);
            let expect: Vec<usize> = (0..p.num_acts())
                .filter(|&i| p.utilities()[i][j] >= best - TIE_TOL)
                .collect();
            prop_assert_eq!(bayes_acts(&p, &prior).unwrap().optimal_acts, expect);
        }

        #[test]
        fn expected_utility_is_linear_in_prior(
            (rows, w1) in problem_strategy(),
            seed in prop::collection::vec(0.01f64..1.0, 6),
            alpha in 0.0f64..1.0,
        ) {
            let p = DecisionProblem::from_rows(rows).unwrap();
            let m = p.num_states();
            let p1 = normalized(&w1);
            let p2 = normalized(&seed[..m]);
            let mix: Vec<f64> = p1.iter().zip(&p2).map(|(a, b)| alpha * a + (1.0 - alpha) * b).collect();
            let pr1 = Prior::new("1", p1).unwrap();
            let pr2 = Prior::new("2", p2).unwrap();
            let prm = Prior::new("m", mix).unwrap();
            for a in 0..p.num_acts() {
                let lhs = expected_utility(&p, a, &prm).unwrap();
                let rhs = alpha * expected_utility(&p, a, &pr1).unwrap()
                    + (1.0 - alpha) * expected_utility(&p, a, &pr2).unwrap();
                prop_assert!((lhs - rhs).abs() <= 1e-12);
            }
        }
    }
}
