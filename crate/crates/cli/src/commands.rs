//! One function per mode. Each returns the tables to write; work items run on
//! the rayon pool and results are collected in parameter order.

use ensemble_core::oracle::{check_closed_forms, uniform_grid, Check};
use ensemble_core::rng::derive_seed;
use ensemble_core::simulator::run_online;
use ensemble_core::theory::{
    detect_steady_state, find_min_error, integrate, GeometryParams, OrderState, RuleConfig,
    SolverConfig, Trajectory, STEADY_SLOPE, STEADY_WINDOW,
};
use ensemble_core::{EnsembleSpec, LearningRule, SimConfig};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, Mode};
use crate::error::CliError;
use crate::output::{num, opt, Table};

/// Cosine values whose admissible combinations form the oracle grid.
pub const ORACLE_GRID: [f64; 4] = [0.0, 0.3, 0.7, 0.95];

pub struct Outcome {
    pub tables: Vec<Table>,
    /// Summary printed to stderr.
    pub notes: Vec<String>,
    /// Set when a validation check failed (exit code 1).
    pub failure: Option<String>,
}

impl Outcome {
    fn tables(tables: Vec<Table>, notes: Vec<String>) -> Self {
        Self {
            tables,
            notes,
            failure: None,
        }
    }
}

const TRAJECTORY_HEADER: [&str; 5] = ["t", "R_J", "R_BkJ_mean", "l", "eps_g_theory"];

/// Seeds of the individual simulation runs.
pub fn run_seeds(cfg: &ExperimentConfig) -> Vec<u64> {
    match cfg.mode {
        Mode::Simulate | Mode::Compare => (0..cfg.seeds).map(|i| cfg.seed + i).collect(),
        _ => Vec::new(),
    }
}

pub fn theory_trajectory(
    rule: LearningRule,
    eta: f64,
    k: usize,
    q: f64,
    r_b: f64,
    solver: &SolverConfig,
) -> Result<Trajectory, CliError> {
    let geom = GeometryParams::uniform(k, r_b, q)?;
    let rule = RuleConfig::new(rule, eta)?;
    Ok(integrate(&geom, &rule, solver, &OrderState::initial(k))?)
}

fn solver(cfg: &ExperimentConfig) -> SolverConfig {
    SolverConfig {
        dt: cfg.dt,
        t_max: cfg.tmax,
        sample_every: cfg.measure_every,
    }
}

fn sim_config(cfg: &ExperimentConfig, seed: u64) -> Result<SimConfig, CliError> {
    Ok(SimConfig {
        n: cfg.n,
        spec: EnsembleSpec::new(cfg.k0(), cfg.r_b, cfg.q0(), derive_seed(seed, 1))?,
        rule: RuleConfig::new(cfg.rule, cfg.eta0())?,
        schedule: cfg.schedule,
        t_max: cfg.tmax,
        measure_every: cfg.measure_every,
        test_inputs: cfg.test_inputs,
        seed,
    })
}

fn simulate_all(cfg: &ExperimentConfig) -> Result<Vec<(u64, Trajectory)>, CliError> {
    run_seeds(cfg)
        .into_par_iter()
        .map(|seed| Ok((seed, run_online(&sim_config(cfg, seed)?)?)))
        .collect()
}

pub fn theory(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let traj = theory_trajectory(
        cfg.rule,
        cfg.eta0(),
        cfg.k0(),
        cfg.q0(),
        cfg.r_b,
        &solver(cfg),
    )?;
    let mut table = Table::new("theory", &TRAJECTORY_HEADER);
    for s in &traj.samples {
        table.push(vec![
            num(s.t),
            num(s.r_j),
            num(s.r_bkj_mean),
            num(s.l),
            num(s.eps_g),
        ]);
    }
    let last = traj.last().ok_or(ensemble_core::Error::EmptyTrajectory)?;
    let note = format!("eps_g(t={}) = {}", last.t, last.eps_g);
    Ok(Outcome::tables(vec![table], vec![note]))
}

pub fn simulate(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let mut table = Table::new(
        "simulate",
        &[
            "seed",
            "t",
            "R_J",
            "R_BkJ_mean",
            "l",
            "eps_g_sim",
            "eps_g_empirical",
        ],
    );
    for (seed, traj) in simulate_all(cfg)? {
        for s in &traj.samples {
            table.push(vec![
                seed.to_string(),
                num(s.t),
                num(s.r_j),
                num(s.r_bkj_mean),
                num(s.l),
                num(s.eps_g),
                opt(s.eps_empirical),
            ]);
        }
    }
    Ok(Outcome::tables(vec![table], Vec::new()))
}

fn mean_and_stderr(values: &[f64]) -> (f64, Option<f64>) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, None);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, Some((var / n).sqrt()))
}

pub fn compare(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let theory = theory_trajectory(
        cfg.rule,
        cfg.eta0(),
        cfg.k0(),
        cfg.q0(),
        cfg.r_b,
        &solver(cfg),
    )?;
    let runs = simulate_all(cfg)?;
    let mut header = TRAJECTORY_HEADER.to_vec();
    header.extend(["eps_g_sim", "eps_g_empirical", "stderr"]);
    let mut table = Table::new("compare", &header);
    let mut worst = 0.0f64;
    for (i, s) in runs[0].1.samples.iter().enumerate() {
        let th = theory
            .at(s.t)
            .ok_or(ensemble_core::Error::EmptyTrajectory)?;
        let sim: Vec<f64> = runs.iter().map(|(_, r)| r.samples[i].eps_g).collect();
        let (sim_mean, stderr) = mean_and_stderr(&sim);
        let empirical = s.eps_empirical.map(|_| {
            let values: Vec<f64> = runs
                .iter()
                .filter_map(|(_, r)| r.samples[i].eps_empirical)
                .collect();
            mean_and_stderr(&values).0
        });
        worst = worst.max((sim_mean - th.eps_g).abs());
        table.push(vec![
            num(s.t),
            num(th.r_j),
            num(th.r_bkj_mean),
            num(th.l),
            num(th.eps_g),
            num(sim_mean),
            opt(empirical),
            opt(stderr),
        ]);
    }
    let note = format!("max |eps_g_theory - eps_g_sim| = {worst}");
    Ok(Outcome::tables(vec![table], vec![note]))
}

/// Minimum and steady-state error of one theory trajectory.
pub struct PointSummary {
    pub eps_min: f64,
    pub t_min: f64,
    pub steady: Option<(f64, f64)>,
}

pub fn summarize(traj: &Trajectory) -> Result<PointSummary, CliError> {
    let (t_min, eps_min) = find_min_error(traj)?;
    let steady = detect_steady_state(traj, STEADY_SLOPE, STEADY_WINDOW).map(|s| (s.t, s.eps_g));
    Ok(PointSummary {
        eps_min,
        t_min,
        steady,
    })
}

/// `(eta, K, q)`.
type SweepPoint = (f64, usize, f64);

fn sweep_points(cfg: &ExperimentConfig) -> Vec<SweepPoint> {
    let mut points = Vec::new();
    for &eta in &cfg.eta {
        for &k in &cfg.k {
            for &q in &cfg.q {
                points.push((eta, k, q));
            }
        }
    }
    points
}

fn sweep_summaries(cfg: &ExperimentConfig) -> Result<Vec<(SweepPoint, PointSummary)>, CliError> {
    let solver = solver(cfg);
    sweep_points(cfg)
        .into_par_iter()
        .map(|(eta, k, q)| {
            let traj = theory_trajectory(cfg.rule, eta, k, q, cfg.r_b, &solver)?;
            Ok(((eta, k, q), summarize(&traj)?))
        })
        .collect()
}

pub fn sweep(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let mut table = Table::new(
        "sweep",
        &[
            "rule",
            "eta",
            "K",
            "q",
            "R_B",
            "eps_min",
            "t_min",
            "eps_steady",
            "t_steady",
        ],
    );
    for ((eta, k, q), s) in sweep_summaries(cfg)? {
        table.push(vec![
            cfg.rule.to_string(),
            num(eta),
            k.to_string(),
            num(q),
            num(cfg.r_b),
            num(s.eps_min),
            num(s.t_min),
            opt(s.steady.map(|v| v.1)),
            opt(s.steady.map(|v| v.0)),
        ]);
    }
    Ok(Outcome::tables(vec![table], Vec::new()))
}

pub fn min_error(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let mut table = Table::new(
        "min-error",
        &[
            "rule", "eta", "K", "q", "R_B", "eps_min", "t_min", "interior",
        ],
    );
    for ((eta, k, q), s) in sweep_summaries(cfg)? {
        let interior = s.t_min > 0.0 && s.t_min < cfg.tmax;
        table.push(vec![
            cfg.rule.to_string(),
            num(eta),
            k.to_string(),
            num(q),
            num(cfg.r_b),
            num(s.eps_min),
            num(s.t_min),
            interior.to_string(),
        ]);
    }
    Ok(Outcome::tables(vec![table], Vec::new()))
}

pub fn validate(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let grid = uniform_grid(&ORACLE_GRID)?;
    let rules = [
        RuleConfig::hebbian(cfg.eta0())?,
        RuleConfig::perceptron(cfg.eta0())?,
    ];
    let checks: Vec<Vec<Check>> = grid
        .par_iter()
        .enumerate()
        .map(|(i, point)| {
            check_closed_forms(
                &rules,
                &point.cov,
                cfg.samples,
                derive_seed(cfg.seed, i as u64),
            )
        })
        .collect::<Result<_, _>>()?;
    let mut table = Table::new(
        "validate",
        &[
            "rule",
            "average",
            "covariance",
            "closed_form",
            "estimate",
            "stderr",
            "z",
            "pass",
        ],
    );
    let mut failed = 0;
    let mut total = 0;
    for (point, point_checks) in grid.iter().zip(&checks) {
        let cov = point
            .cov
            .matrix()
            .iter()
            .map(|row| row.iter().map(|x| num(*x)).collect::<Vec<_>>().join(" "))
            .collect::<Vec<_>>()
            .join("; ");
        for c in point_checks {
            let pass = c.passes(4.0);
            total += 1;
            failed += usize::from(!pass);
            table.push(vec![
                c.rule.to_string(),
                c.average.name().to_string(),
                cov.clone(),
                num(c.closed_form),
                num(c.estimate.estimate),
                num(c.estimate.standard_error),
                num(c.z_score()),
                pass.to_string(),
            ]);
        }
    }
    let note = format!(
        "{} of {total} checks within 4 standard errors",
        total - failed
    );
    let failure =
        (failed > 0).then(|| format!("{failed} of {total} averages outside 4 standard errors"));
    Ok(Outcome {
        tables: vec![table],
        notes: vec![note],
        failure,
    })
}
