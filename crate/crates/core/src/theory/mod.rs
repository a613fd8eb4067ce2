//! Macroscopic theory in the thermodynamic limit.
//!
//! The state is `(r_J, r_BkJ[k], l)` with `r_J = R_J * l` and
//! `r_BkJ = R_BkJ * l`. Time is `t = m / N`.

mod analysis;
mod averages;
mod hebbian;
mod ode;

use serde::{Deserialize, Serialize};

use crate::ensemble::OverlapReport;
use crate::{Error, Result};

pub use analysis::{detect_steady_state, find_min_error, SteadyState, STEADY_SLOPE, STEADY_WINDOW};
pub use averages::{
    clamp_cosine, gen_error, hebbian_averages, perceptron_averages, SampleAverages,
    COSINE_TOLERANCE,
};
pub use hebbian::{
    hebbian_closed_form, hebbian_closed_form_general, hebbian_rj, steady_state_rj,
    steady_state_rj_limit, HebbianSolution,
};
pub use ode::{integrate, integrate_observed, ode_rhs, Derivatives};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LearningRule {
    Hebbian,
    Perceptron,
}

impl LearningRule {
    pub fn name(self) -> &'static str {
        match self {
            LearningRule::Hebbian => "hebbian",
            LearningRule::Perceptron => "perceptron",
        }
    }
}

impl std::fmt::Display for LearningRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for LearningRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hebbian" | "hebb" => Ok(LearningRule::Hebbian),
            "perceptron" => Ok(LearningRule::Perceptron),
            other => Err(Error::Config(format!("unknown learning rule `{other}`"))),
        }
    }
}

/// Learning rule plus constant learning rate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuleConfig {
    pub rule: LearningRule,
    pub eta: f64,
}

impl RuleConfig {
    /// `eta = 0` is accepted (no learning).
    pub fn new(rule: LearningRule, eta: f64) -> Result<Self> {
        if !(eta.is_finite() && eta >= 0.0) {
            return Err(Error::Domain(format!(
                "learning rate eta = {eta} must be finite and >= 0"
            )));
        }
        Ok(Self { rule, eta })
    }

    pub fn hebbian(eta: f64) -> Result<Self> {
        Self::new(LearningRule::Hebbian, eta)
    }

    pub fn perceptron(eta: f64) -> Result<Self> {
        Self::new(LearningRule::Perceptron, eta)
    }
}

/// Direction cosines of the ensemble: `R_Bk` and the `q_kk'` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct GeometryParams {
    r_bk: Vec<f64>,
    q: Vec<Vec<f64>>,
    q_row_mean: Vec<f64>,
}

impl GeometryParams {
    pub fn new(r_bk: Vec<f64>, q: Vec<Vec<f64>>) -> Result<Self> {
        let k = r_bk.len();
        if k == 0 {
            return Err(Error::Domain("K must be at least 1".into()));
        }
        if q.len() != k || q.iter().any(|row| row.len() != k) {
            return Err(Error::Domain(format!("q must be a {k}x{k} matrix")));
        }
        let in_range = |x: f64| x.is_finite() && (-1.0..=1.0).contains(&x);
        if !r_bk.iter().all(|&x| in_range(x)) {
            return Err(Error::Domain("R_Bk entries must lie in [-1, 1]".into()));
        }
        for (i, row) in q.iter().enumerate() {
            if row[i] != 1.0 {
                return Err(Error::Domain(format!("q[{i}][{i}] must be 1")));
            }
            for (j, &x) in row.iter().enumerate() {
                if !in_range(x) || x != q[j][i] {
                    return Err(Error::Domain(format!(
                        "q must be symmetric with entries in [-1, 1] (at {i},{j})"
                    )));
                }
            }
        }
        let q_row_mean = q
            .iter()
            .map(|row| row.iter().sum::<f64>() / k as f64)
            .collect();
        Ok(Self {
            r_bk,
            q,
            q_row_mean,
        })
    }

    /// `R_Bk = r_b` for every teacher and `q_kk' = q` for `k != k'`.
    pub fn uniform(k: usize, r_b: f64, q: f64) -> Result<Self> {
        let matrix = (0..k)
            .map(|i| (0..k).map(|j| if i == j { 1.0 } else { q }).collect())
            .collect();
        Self::new(vec![r_b; k], matrix)
    }

    /// Geometry measured on a concrete finite-N ensemble.
    pub fn from_overlaps(report: &OverlapReport) -> Result<Self> {
        Self::new(report.r_bk.clone(), report.q.clone())
    }

    pub fn k(&self) -> usize {
        self.r_bk.len()
    }

    pub fn r_bk(&self) -> &[f64] {
        &self.r_bk
    }

    pub fn q(&self) -> &[Vec<f64>] {
        &self.q
    }

    /// `(1/K) sum_k' q_kk'` for row `k`.
    pub fn mean_q_row(&self, k: usize) -> f64 {
        self.q_row_mean[k]
    }
}

/// Macroscopic state evolved by the ODEs.
#[derive(Clone, Debug, PartialEq)]
pub struct OrderState {
    pub r_j: f64,
    pub r_bkj: Vec<f64>,
    pub l: f64,
}

impl OrderState {
    /// Student orthogonal to every teacher with unit length.
    pub fn initial(k: usize) -> Self {
        Self {
            r_j: 0.0,
            r_bkj: vec![0.0; k],
            l: 1.0,
        }
    }

    pub fn from_overlaps(report: &OverlapReport) -> Self {
        Self {
            r_j: report.r_j * report.l,
            r_bkj: report.r_bkj.iter().map(|r| r * report.l).collect(),
            l: report.l,
        }
    }

    /// `R_J = r_J / l`, clamped to `[-1, 1]` within [`COSINE_TOLERANCE`].
    pub fn cos_j(&self) -> Result<f64> {
        clamp_cosine(self.r_j / self.l, "R_J")
    }

    pub fn cos_bkj(&self, k: usize) -> Result<f64> {
        clamp_cosine(self.r_bkj[k] / self.l, "R_BkJ")
    }
}

/// Fixed-step RK4 settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub dt: f64,
    pub t_max: f64,
    /// Interval between recorded samples.
    pub sample_every: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_max: 50.0,
            sample_every: 0.1,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::Domain(format!("dt = {} must be > 0", self.dt)));
        }
        if !(self.t_max.is_finite() && self.t_max >= 0.0) {
            return Err(Error::Domain(format!(
                "t_max = {} must be >= 0",
                self.t_max
            )));
        }
        if !(self.sample_every.is_finite() && self.sample_every > 0.0) {
            return Err(Error::Domain(format!(
                "sample interval {} must be > 0",
                self.sample_every
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub r_j: f64,
    pub r_bkj_mean: f64,
    pub l: f64,
    /// `arccos(R_J) / pi`.
    pub eps_g: f64,
    /// Fraction of disagreements on fresh test inputs (simulation only).
    pub eps_empirical: Option<f64>,
}

/// Time series of macroscopic observables, `t` strictly increasing.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn last(&self) -> Option<&TrajectorySample> {
        self.samples.last()
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.t)
    }

    pub fn eps_g(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.eps_g)
    }

    /// Sample whose time is closest to `t`.
    pub fn at(&self, t: f64) -> Option<&TrajectorySample> {
        self.samples
            .iter()
            .min_by(|a, b| (a.t - t).abs().total_cmp(&(b.t - t).abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_geometry_layout() {
        let g = GeometryParams::uniform(3, 0.7, 0.49).unwrap();
        assert_eq!(g.k(), 3);
        assert_eq!(g.r_bk(), &[0.7, 0.7, 0.7]);
        assert_eq!(g.q()[0], vec![1.0, 0.49, 0.49]);
        assert!((g.mean_q_row(1) - (1.0 + 2.0 * 0.49) / 3.0).abs() < 1e-15);
    }

    #[test]
    fn geometry_validation() {
        assert!(GeometryParams::uniform(0, 0.7, 0.49).is_err());
        assert!(GeometryParams::uniform(2, 1.5, 0.49).is_err());
        assert!(GeometryParams::new(vec![0.5, 0.5], vec![vec![1.0, 0.2], vec![0.3, 1.0]]).is_err());
        assert!(GeometryParams::new(vec![0.5, 0.5], vec![vec![0.9, 0.2], vec![0.2, 1.0]]).is_err());
    }

    #[test]
    fn rule_parsing() {
        assert_eq!(
            "Hebbian".parse::<LearningRule>().unwrap(),
            LearningRule::Hebbian
        );
        assert_eq!(
            "perceptron".parse::<LearningRule>().unwrap(),
            LearningRule::Perceptron
        );
        assert!("adatron".parse::<LearningRule>().is_err());
        assert!(RuleConfig::hebbian(-1.0).is_err());
        assert!(RuleConfig::hebbian(f64::NAN).is_err());
    }
}
