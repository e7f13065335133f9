//! Command-line front end.
//!
//! Exit codes: 0 success, 2 input error, 3 consistency error between inputs,
//! 4 internal solver error.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::catalog::default_catalog;
use crate::decision::{bayes_acts, DecisionProblem, Prior};
use crate::error::{Error, Result};
use crate::io::{
    self, fmt_sig9, parse_costs, parse_daily, parse_monthly, parse_priors, parse_utilities,
    parse_weights, read_file, write_atomic, PriorTable,
};
use crate::lp::BandBox;
use crate::report::{self, table_csv, tidy_csv};
use crate::scenarios::{
    kmeans_partition, label_regimes, monthly_features, portfolio_returns, utility_matrix,
    KMeansConfig,
};
use crate::selection::{
    gamma_aggregate, rex_score, selection_path, stability_score, variance_cost, CostAssignment,
    GammaMode,
};
use crate::stability::{stability_profile, BisectionConfig};

#[derive(Debug, Parser)]
#[command(
    name = "prior-stability",
    version,
    about = "Stability of Bayes acts under prior perturbations"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CostMode {
    File,
    Variance,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Robustness radius and contamination need for every act under every prior.
    Analyze {
        #[arg(long)]
        utilities: PathBuf,
        /// Priors CSV; defaults to the shipped eight-prior catalog.
        #[arg(long)]
        priors: Option<PathBuf>,
        /// Bisection tolerance for the robustness radius.
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Cost-adjusted selection path over λ for one prior.
    Path {
        #[arg(long)]
        utilities: PathBuf,
        #[arg(long)]
        priors: Option<PathBuf>,
        #[arg(long, default_value = "uniform")]
        prior: String,
        #[arg(long, value_enum, default_value_t = CostMode::Variance)]
        cost_mode: CostMode,
        /// `act,cost` CSV, required with `--cost-mode file`.
        #[arg(long)]
        costs: Option<PathBuf>,
        #[arg(long, default_value_t = 3.0, allow_negative_numbers = true)]
        lambda_max: f64,
        #[arg(long, default_value_t = 0.01, allow_negative_numbers = true)]
        grid: f64,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Build the regime utility matrix from return data.
    Scenarios {
        #[arg(long)]
        monthly: PathBuf,
        #[arg(long)]
        weights: PathBuf,
        /// Daily market returns, used when the monthly file has no market_vol column.
        #[arg(long)]
        daily: Option<PathBuf>,
        #[arg(long, default_value = "SPY")]
        market: String,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 4)]
        k: usize,
        /// Cluster raw features instead of z-scores.
        #[arg(long)]
        raw_features: bool,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Γ-minimax / Γ-maximax / η-mix and the rex criterion.
    Baselines {
        #[arg(long)]
        utilities: PathBuf,
        #[arg(long)]
        priors: Option<PathBuf>,
        #[arg(long, default_value = "uniform")]
        prior: String,
        #[arg(long, default_value_t = 0.1, allow_negative_numbers = true)]
        epsilon: f64,
        #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
        eta: f64,
        #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
        mu: f64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

fn label(path: &Path) -> String {
    path.file_name().map_or_else(
        || path.display().to_string(),
        |f| f.to_string_lossy().into_owned(),
    )
}

fn load_problem(path: &Path) -> Result<DecisionProblem> {
    parse_utilities(&read_file(path)?, &label(path))
}

fn load_priors(path: Option<&Path>, problem: &DecisionProblem) -> Result<PriorTable> {
    let table = match path {
        Some(p) => parse_priors(&read_file(p)?, &label(p))?,
        None => default_catalog(),
    };
    if table.states.len() != problem.num_states() {
        return Err(Error::Inconsistent(format!(
            "priors have {} states, utilities have {}",
            table.states.len(),
            problem.num_states()
        )));
    }
    table.check_states(problem)?;
    Ok(table)
}

fn select_prior(table: &PriorTable, name: &str) -> Result<Prior> {
    table
        .get(name)
        .cloned()
        .map_err(|_| Error::InvalidInput(format!("no prior named `{name}` in the priors file")))
}

fn load_costs(
    mode: CostMode,
    path: Option<&Path>,
    problem: &DecisionProblem,
) -> Result<CostAssignment> {
    match mode {
        CostMode::Variance => Ok(variance_cost(problem)),
        CostMode::File => {
            let path = path.ok_or_else(|| {
                Error::InvalidInput("--cost-mode file needs --costs <FILE>".into())
            })?;
            let entries = parse_costs(&read_file(path)?, &label(path))?;
            if entries.len() != problem.num_acts() {
                return Err(Error::Inconsistent(format!(
                    "costs file has {} acts, utilities have {}",
                    entries.len(),
                    problem.num_acts()
                )));
            }
            let raw = problem
                .acts()
                .iter()
                .map(|a| {
                    entries
                        .iter()
                        .find(|(n, _)| n == a)
                        .map(|(_, c)| *c)
                        .ok_or_else(|| Error::Inconsistent(format!("no cost for act `{a}`")))
                })
                .collect::<Result<Vec<_>>>()?;
            CostAssignment::new(problem.acts().to_vec(), raw)
        }
    }
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(std::io::Error::from)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn analyze(utilities: &Path, priors: Option<&Path>, tol: f64, out: &Path) -> Result<()> {
    let config = BisectionConfig::new(tol)?;
    let problem = load_problem(utilities)?;
    let table = load_priors(priors, &problem)?;
    let profile = stability_profile(&problem, &table.priors, &config)?;

    write_atomic(
        &out.join("stability.csv"),
        &tidy_csv(&report::profile_rows(&profile))?,
    )?;
    write_json(
        &out.join("stability.json"),
        &report::profile_json(&profile, problem.states(), tol),
    )?;

    for prior in &table.priors {
        let bayes: Vec<&str> = profile
            .rows_for_prior(&prior.name)
            .filter(|r| r.is_bayes)
            .map(|r| r.act.as_str())
            .collect();
        println!("{:<24} Bayes acts: {}", prior.name, bayes.join(", "));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn path(
    utilities: &Path,
    priors: Option<&Path>,
    prior: &str,
    cost_mode: CostMode,
    costs: Option<&Path>,
    lambda_max: f64,
    grid: f64,
    tol: f64,
    out: &Path,
) -> Result<()> {
    if !(lambda_max > 0.0 && lambda_max.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "--lambda-max must be positive, got {lambda_max}"
        )));
    }
    if !(grid > 0.0 && grid.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "--grid must be positive, got {grid}"
        )));
    }
    let config = BisectionConfig::new(tol)?;
    let problem = load_problem(utilities)?;
    let table = load_priors(priors, &problem)?;
    let selected = select_prior(&table, prior)?;
    let costs = load_costs(cost_mode, costs, &problem)?;
    let profile = stability_profile(&problem, std::slice::from_ref(&selected), &config)?;
    let path = selection_path(&profile, &costs, &selected.name, lambda_max, grid)?;
    let acts = problem.acts();

    let grid_rows = path
        .grid
        .iter()
        .map(|g| {
            let score = path
                .lines
                .iter()
                .find(|l| l.act_index == g.representative)
                .map_or(f64::NEG_INFINITY, |l| l.at(g.lambda));
            vec![
                selected.name.clone(),
                fmt_sig9(g.lambda),
                acts[g.representative].clone(),
                fmt_sig9(score),
            ]
        })
        .collect();
    write_atomic(
        &out.join("path_grid.csv"),
        &table_csv(&["prior", "lambda", "act", "score"], grid_rows)?,
    )?;
    let bp_rows = path
        .breakpoints
        .iter()
        .zip(path.segments.windows(2))
        .map(|(b, w)| {
            vec![
                selected.name.clone(),
                fmt_sig9(*b),
                acts[w[0].act].clone(),
                acts[w[1].act].clone(),
            ]
        })
        .collect();
    write_atomic(
        &out.join("path_breakpoints.csv"),
        &table_csv(&["prior", "lambda", "from_act", "to_act"], bp_rows)?,
    )?;
    let line_rows = path
        .lines
        .iter()
        .map(|l| {
            vec![
                selected.name.clone(),
                l.act.clone(),
                fmt_sig9(l.intercept),
                fmt_sig9(l.slope),
            ]
        })
        .collect();
    write_atomic(
        &out.join("path_lines.csv"),
        &table_csv(&["prior", "act", "intercept", "slope"], line_rows)?,
    )?;
    let scores = stability_score(&profile, &costs, 0.0, &selected.name)?;
    write_atomic(
        &out.join("path_scores.csv"),
        &tidy_csv(&report::score_rows(&selected.name, &scores))?,
    )?;
    write_json(
        &out.join("path.json"),
        &report::path_json(&selected.name, acts, &path),
    )?;

    for seg in &path.segments {
        println!(
            "λ ∈ [{}, {}]: {}",
            fmt_sig9(seg.start),
            fmt_sig9(seg.end),
            acts[seg.act]
        );
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn scenarios(
    monthly: &Path,
    weights: &Path,
    daily: Option<&Path>,
    market: &str,
    seed: u64,
    k: usize,
    standardize: bool,
    out: &Path,
) -> Result<()> {
    let panel = parse_monthly(&read_file(monthly)?, &label(monthly))?;
    let book = parse_weights(&read_file(weights)?, &label(weights))?;
    let daily = daily
        .map(|p| parse_daily(&read_file(p)?, &label(p)))
        .transpose()?;
    if let Some(d) = &daily {
        if d.asset != market {
            return Err(Error::Inconsistent(format!(
                "daily file holds `{}`, market asset is `{market}`",
                d.asset
            )));
        }
    }
    let features = monthly_features(&panel, market, daily.as_ref())?;
    let returns = portfolio_returns(&panel, &book)?;
    let config = KMeansConfig {
        k,
        seed,
        standardize,
        ..KMeansConfig::default()
    };
    let mut model = kmeans_partition(&features, &config)?;
    if k == 4 {
        model = label_regimes(&model)?;
    }
    let problem = utility_matrix(&book.names, &returns, &model)?;

    let regime_rows = panel
        .months
        .iter()
        .zip(&model.assignment)
        .map(|(m, &c)| vec![m.clone(), (c + 1).to_string(), model.label_of_cluster(c)])
        .collect::<Vec<_>>();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["month", "cluster", "label"])
        .map_err(std::io::Error::from)?;
    for r in regime_rows {
        w.write_record(&r).map_err(std::io::Error::from)?;
    }
    let regimes = w.into_inner().map_err(|e| e.into_error())?;
    write_atomic(&out.join("regimes.csv"), &regimes)?;
    write_atomic(
        &out.join("utilities.csv"),
        io::utilities_csv(&problem).as_bytes(),
    )?;

    for (j, state) in problem.states().iter().enumerate() {
        let count = model.partition()[model.states()[j].1].len();
        println!("{state:<12} {count:>4} months");
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn baselines(
    utilities: &Path,
    priors: Option<&Path>,
    prior: &str,
    epsilon: f64,
    eta: f64,
    mu: f64,
    out: &Path,
) -> Result<()> {
    for (name, v) in [("--epsilon", epsilon), ("--eta", eta), ("--mu", mu)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::InvalidInput(format!("{name} = {v} outside [0, 1]")));
        }
    }
    let problem = load_problem(utilities)?;
    let table = load_priors(priors, &problem)?;
    let selected = select_prior(&table, prior)?;
    let band = BandBox::new(selected.mass(), epsilon)?;
    let gamma = gamma_aggregate(&problem, &band, GammaMode::Minimax)?;
    let maximax = gamma_aggregate(&problem, &band, GammaMode::Maximax)?;
    let mix = gamma_aggregate(&problem, &band, GammaMode::Mix(eta))?;
    let rex = rex_score(&problem, &selected, mu)?;
    let expected = bayes_acts(&problem, &selected)?;

    let rows = report::baseline_rows(
        &selected.name,
        problem.acts(),
        &expected.expected_utilities,
        &gamma,
        &mix.criterion,
        &rex,
    );
    write_atomic(&out.join("baselines.csv"), &tidy_csv(&rows)?)?;
    let acts = problem.acts();
    let argmax_rows = vec![
        ("expected_utility", expected.optimal_acts[0]),
        ("gamma_min", gamma.criterion.argmax),
        ("gamma_max", maximax.criterion.argmax),
        ("gamma_mix", mix.criterion.argmax),
        ("rex", rex.argmax),
    ];
    let records = argmax_rows
        .iter()
        .map(|(c, a)| vec![selected.name.clone(), c.to_string(), acts[*a].clone()])
        .collect();
    write_atomic(
        &out.join("baselines_argmax.csv"),
        &table_csv(&["prior", "criterion", "act"], records)?,
    )?;
    for (c, a) in argmax_rows {
        println!("{c:<18} {}", acts[a]);
    }
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Analyze {
            utilities,
            priors,
            tol,
            out,
        } => analyze(&utilities, priors.as_deref(), tol, &out),
        Command::Path {
            utilities,
            priors,
            prior,
            cost_mode,
            costs,
            lambda_max,
            grid,
            tol,
            out,
        } => path(
            &utilities,
            priors.as_deref(),
            &prior,
            cost_mode,
            costs.as_deref(),
            lambda_max,
            grid,
            tol,
            &out,
        ),
        Command::Scenarios {
            monthly,
            weights,
            daily,
            market,
            seed,
            k,
            raw_features,
            out,
        } => scenarios(
            &monthly,
            &weights,
            daily.as_deref(),
            &market,
            seed,
            k,
            !raw_features,
            &out,
        ),
        Command::Baselines {
            utilities,
            priors,
            prior,
            epsilon,
            eta,
            mu,
            out,
        } => baselines(
            &utilities,
            priors.as_deref(),
            &prior,
            epsilon,
            eta,
            mu,
            &out,
        ),
    }
}

/// Parse `args`, run, and return the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
