//! Data behind the published curve families. Conditions not being varied are
//! `K = 10`, `q = 0.49`, `R_B = 0.7` and, for perceptron curves over `K` or
//! `q`, `eta = 0.2`.

use clap::ValueEnum;
use ensemble_core::theory::{
    gen_error, hebbian_closed_form, steady_state_rj, steady_state_rj_limit, SolverConfig,
};
use ensemble_core::LearningRule;
use rayon::prelude::*;

use crate::commands::{summarize, theory_trajectory};
use crate::config::{ExperimentConfig, DEFAULT_ETAS};
use crate::error::CliError;
use crate::output::{num, Table};

const K: usize = 10;
const Q: f64 = 0.49;
const R_B: f64 = 0.7;
const PERCEPTRON_ETA: f64 = 0.2;
const HEBBIAN_TMAX: f64 = 50.0;
const PERCEPTRON_TMAX: f64 = 200.0;
const SAMPLE_EVERY: f64 = 0.1;

pub const CURVE_K: [usize; 6] = [1, 2, 3, 5, 10, 20];
pub const CURVE_Q: [f64; 5] = [0.49, 0.6, 0.7, 0.8, 0.9];
pub const STEADY_K: [usize; 8] = [1, 2, 5, 10, 20, 100, 1000, 100_000];

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FigureTag {
    #[value(name = "H-t-eta")]
    HebbianTimeEta,
    #[value(name = "H-q-K")]
    HebbianSteadyQK,
    #[value(name = "P-t-eta")]
    PerceptronTimeEta,
    #[value(name = "P-t-K")]
    PerceptronTimeK,
    #[value(name = "P-t-q")]
    PerceptronTimeQ,
    #[value(name = "egmin-K-eta")]
    MinErrorK,
    #[value(name = "egmin-q-eta")]
    MinErrorQ,
    #[value(name = "all")]
    All,
}

impl FigureTag {
    pub const FIGURES: [FigureTag; 7] = [
        FigureTag::HebbianTimeEta,
        FigureTag::HebbianSteadyQK,
        FigureTag::PerceptronTimeEta,
        FigureTag::PerceptronTimeK,
        FigureTag::PerceptronTimeQ,
        FigureTag::MinErrorK,
        FigureTag::MinErrorQ,
    ];

    pub fn name(self) -> String {
        self.to_possible_value()
            .expect("no skipped variants")
            .get_name()
            .to_string()
    }
}

impl std::str::FromStr for FigureTag {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        <FigureTag as ValueEnum>::from_str(s, false)
            .map_err(|_| CliError::Config(format!("unknown figure tag `{s}`")))
    }
}

/// `0.49` followed by `lo, lo + step, ..., 1.0` in hundredths.
fn q_axis(lo: u32, step: u32) -> Vec<f64> {
    let mut qs = vec![0.49];
    qs.extend((lo..=100).step_by(step as usize).map(|c| c as f64 / 100.0));
    qs
}

pub fn steady_q_axis() -> Vec<f64> {
    (49..=100).map(|c| c as f64 / 100.0).collect()
}

pub fn min_error_q_axis() -> Vec<f64> {
    q_axis(55, 5)
}

pub fn min_error_k_axis() -> Vec<usize> {
    (1..=20).collect()
}

fn solver(cfg: &ExperimentConfig, t_max: f64) -> SolverConfig {
    SolverConfig {
        dt: cfg.dt,
        t_max,
        sample_every: SAMPLE_EVERY,
    }
}

/// Perceptron `eps_g(t)` curves, one per `(label, eta, K, q)`.
fn perceptron_curves<L: Sync + Copy>(
    cfg: &ExperimentConfig,
    name: &str,
    column: &'static str,
    curves: Vec<(L, f64, usize, f64)>,
    label: impl Fn(L) -> String,
) -> Result<Table, CliError> {
    let solver = solver(cfg, PERCEPTRON_TMAX);
    let trajectories = curves
        .par_iter()
        .map(|&(_, eta, k, q)| theory_trajectory(LearningRule::Perceptron, eta, k, q, R_B, &solver))
        .collect::<Result<Vec<_>, _>>()?;
    let mut table = Table::new(name, &[column, "t", "eps_g"]);
    for ((l, ..), traj) in curves.iter().zip(&trajectories) {
        for s in &traj.samples {
            table.push(vec![label(*l), num(s.t), num(s.eps_g)]);
        }
    }
    Ok(table)
}

fn min_error_table(
    cfg: &ExperimentConfig,
    name: &str,
    column: &'static str,
    points: Vec<(String, f64, usize, f64)>,
) -> Result<Table, CliError> {
    let solver = solver(cfg, PERCEPTRON_TMAX);
    let summaries = points
        .par_iter()
        .map(|(_, eta, k, q)| {
            summarize(&theory_trajectory(
                LearningRule::Perceptron,
                *eta,
                *k,
                *q,
                R_B,
                &solver,
            )?)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut table = Table::new(name, &["eta", column, "eps_min", "t_min"]);
    for ((label, eta, ..), s) in points.iter().zip(&summaries) {
        table.push(vec![num(*eta), label.clone(), num(s.eps_min), num(s.t_min)]);
    }
    Ok(table)
}

fn one(cfg: &ExperimentConfig, tag: FigureTag) -> Result<Table, CliError> {
    let name = tag.name();
    match tag {
        FigureTag::HebbianTimeEta => {
            let mut table = Table::new(name, &["eta", "t", "eps_g"]);
            let steps = (HEBBIAN_TMAX / SAMPLE_EVERY).round() as usize;
            for eta in DEFAULT_ETAS {
                for i in 0..=steps {
                    let t = i as f64 * SAMPLE_EVERY;
                    let r_j = hebbian_closed_form(t, K, Q, R_B, eta)?.cos_j;
                    table.push(vec![num(eta), num(t), num(gen_error(r_j)?)]);
                }
            }
            Ok(table)
        }
        FigureTag::HebbianSteadyQK => {
            let mut table = Table::new(name, &["K", "q", "eps_steady"]);
            for k in STEADY_K {
                for q in steady_q_axis() {
                    let eps = gen_error(steady_state_rj(k, q, R_B)?)?;
                    table.push(vec![k.to_string(), num(q), num(eps)]);
                }
            }
            for q in steady_q_axis() {
                let eps = gen_error(steady_state_rj_limit(q, R_B)?)?;
                table.push(vec!["inf".into(), num(q), num(eps)]);
            }
            Ok(table)
        }
        FigureTag::PerceptronTimeEta => {
            let curves = DEFAULT_ETAS.iter().map(|&eta| (eta, eta, K, Q)).collect();
            perceptron_curves(cfg, &name, "eta", curves, num)
        }
        FigureTag::PerceptronTimeK => {
            let curves = CURVE_K.iter().map(|&k| (k, PERCEPTRON_ETA, k, Q)).collect();
            perceptron_curves(cfg, &name, "K", curves, |k| k.to_string())
        }
        FigureTag::PerceptronTimeQ => {
            let curves = CURVE_Q.iter().map(|&q| (q, PERCEPTRON_ETA, K, q)).collect();
            perceptron_curves(cfg, &name, "q", curves, num)
        }
        FigureTag::MinErrorK => {
            let points = DEFAULT_ETAS
                .iter()
                .flat_map(|&eta| {
                    min_error_k_axis()
                        .into_iter()
                        .map(move |k| (k.to_string(), eta, k, Q))
                })
                .collect();
            min_error_table(cfg, &name, "K", points)
        }
        FigureTag::MinErrorQ => {
            let points = DEFAULT_ETAS
                .iter()
                .flat_map(|&eta| {
                    min_error_q_axis()
                        .into_iter()
                        .map(move |q| (num(q), eta, K, q))
                })
                .collect();
            min_error_table(cfg, &name, "q", points)
        }
        FigureTag::All => unreachable!("expanded by the caller"),
    }
}

/// Tables for `tag`, or for every figure when `tag` is `all`.
pub fn figure(cfg: &ExperimentConfig, tag: FigureTag) -> Result<Vec<Table>, CliError> {
    if tag == FigureTag::All {
        if cfg.out.is_none() {
            return Err(CliError::Config("figure all needs --out".into()));
        }
        FigureTag::FIGURES.iter().map(|&t| one(cfg, t)).collect()
    } else {
        Ok(vec![one(cfg, tag)?])
    }
}

/// Human-readable grid description recorded in the manifest.
pub fn grid_notes(tag: FigureTag) -> Vec<String> {
    let etas = format!("eta in {DEFAULT_ETAS:?} (default set)");
    let describe = |t: FigureTag| -> String {
        match t {
            FigureTag::HebbianTimeEta => format!("H-t-eta: {etas}, K={K}, q={Q}, R_B={R_B}, t in [0, {HEBBIAN_TMAX}]"),
            FigureTag::HebbianSteadyQK => format!("H-q-K: K in {STEADY_K:?} and inf, q in 0.49..1.00 step 0.01, R_B={R_B}"),
            FigureTag::PerceptronTimeEta => format!("P-t-eta: {etas}, K={K}, q={Q}, R_B={R_B}, t in [0, {PERCEPTRON_TMAX}]"),
            FigureTag::PerceptronTimeK => format!("P-t-K: K in {CURVE_K:?}, eta={PERCEPTRON_ETA}, q={Q}, R_B={R_B}, t in [0, {PERCEPTRON_TMAX}]"),
            FigureTag::PerceptronTimeQ => format!("P-t-q: q in {CURVE_Q:?}, eta={PERCEPTRON_ETA}, K={K}, R_B={R_B}, t in [0, {PERCEPTRON_TMAX}]"),
            FigureTag::MinErrorK => format!("egmin-K-eta: {etas}, K in 1..=20, q={Q}, R_B={R_B}, minimum over t in [0, {PERCEPTRON_TMAX}]"),
            FigureTag::MinErrorQ => format!("egmin-q-eta: {etas}, q in {:?}, K={K}, R_B={R_B}, minimum over t in [0, {PERCEPTRON_TMAX}]", min_error_q_axis()),
            FigureTag::All => unreachable!(),
        }
    };
    if tag == FigureTag::All {
        FigureTag::FIGURES.iter().map(|&t| describe(t)).collect()
    } else {
        vec![describe(tag)]
    }
}
