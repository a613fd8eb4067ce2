//! Monte Carlo check of the closed-form sample averages.
//!
//! Potentials are sampled directly from their joint Gaussian law, `L z` with
//! `L` the lower-triangular factor of the covariance and `z` standard normal,
//! and the learning-rule integrands are averaged. Sampling and estimation do
//! not touch the theory module; [`closed_form`] only looks up the value an
//! estimate is compared against.
//!
//! Layouts: the 3x3 form orders the potentials `(y, v_k, u)`; the 4x4 form
//! orders them `(y, v_k, v_k', u)`, where `k'` is the presenting teacher in
//! `<f_k' v_k>`.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::rng::{derive_seed, stream};
use crate::theory::{hebbian_averages, perceptron_averages, LearningRule, RuleConfig};
use crate::{Error, Result};

const CHUNK: usize = 1 << 16;
const PIVOT_TOLERANCE: f64 = 1e-12;
const ORACLE_STREAM: u64 = 11;

#[derive(Clone, Debug, PartialEq)]
pub struct PotentialCovariance {
    matrix: Vec<Vec<f64>>,
}

impl PotentialCovariance {
    pub fn new(matrix: Vec<Vec<f64>>) -> Result<Self> {
        let dim = matrix.len();
        if dim != 3 && dim != 4 {
            return Err(Error::Config(format!(
                "covariance must be 3x3 or 4x4, got {dim} rows"
            )));
        }
        for (i, row) in matrix.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::Config(format!("row {i} has {} entries", row.len())));
            }
            if row[i] != 1.0 {
                return Err(Error::Config(format!("diagonal entry {i} must be 1")));
            }
            for (m, &c) in row.iter().enumerate() {
                if !(c.is_finite() && (-1.0..=1.0).contains(&c)) || c != matrix[m][i] {
                    return Err(Error::Config(format!(
                        "covariance must be symmetric with entries in [-1, 1] (at {i},{m})"
                    )));
                }
            }
        }
        Ok(Self { matrix })
    }

    /// Covariance of `(y, v_k, u)`.
    pub fn triple(r_bk: f64, r_j: f64, r_bkj: f64) -> Result<Self> {
        Self::new(vec![
            vec![1.0, r_bk, r_j],
            vec![r_bk, 1.0, r_bkj],
            vec![r_j, r_bkj, 1.0],
        ])
    }

    /// Covariance of `(y, v_k, v_k', u)`.
    pub fn with_second_teacher(
        r_bk: f64,
        r_bk2: f64,
        q: f64,
        r_j: f64,
        r_bkj: f64,
        r_bk2j: f64,
    ) -> Result<Self> {
        Self::new(vec![
            vec![1.0, r_bk, r_bk2, r_j],
            vec![r_bk, 1.0, q, r_bkj],
            vec![r_bk2, q, 1.0, r_bk2j],
            vec![r_j, r_bkj, r_bk2j, 1.0],
        ])
    }

    pub fn dim(&self) -> usize {
        self.matrix.len()
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.matrix
    }

    fn student(&self) -> usize {
        self.dim() - 1
    }

    /// Index of the teacher presenting the example in `<f_k' v_k>`.
    fn presenter(&self) -> usize {
        if self.dim() == 4 {
            2
        } else {
            1
        }
    }

    /// Lower-triangular `L` with `L L^T = matrix`. Zero pivots are accepted
    /// (semi-definite matrices) as long as the remaining column vanishes.
    pub fn cholesky(&self) -> Result<Vec<Vec<f64>>> {
        let dim = self.dim();
        let a = &self.matrix;
        let mut l = vec![vec![0.0; dim]; dim];
        for j in 0..dim {
            let pivot = a[j][j] - (0..j).map(|p| l[j][p] * l[j][p]).sum::<f64>();
            if pivot < -PIVOT_TOLERANCE {
                return Err(Error::NotPositiveSemiDefinite {
                    minor: j + 1,
                    pivot,
                });
            }
            let diag = pivot.max(0.0).sqrt();
            l[j][j] = diag;
            for i in (j + 1)..dim {
                let residual = a[i][j] - (0..j).map(|p| l[i][p] * l[j][p]).sum::<f64>();
                if diag > PIVOT_TOLERANCE.sqrt() {
                    l[i][j] = residual / diag;
                } else if residual.abs() > 1e-9 {
                    return Err(Error::NotPositiveSemiDefinite {
                        minor: j + 1,
                        pivot,
                    });
                }
            }
        }
        Ok(l)
    }
}

fn fill_sample<R: Rng>(rng: &mut R, factor: &[Vec<f64>], z: &mut [f64], out: &mut [f64]) {
    for zi in z.iter_mut() {
        *zi = rng.sample(StandardNormal);
    }
    for (i, row) in factor.iter().enumerate() {
        out[i] = row[..=i].iter().zip(&z[..=i]).map(|(a, b)| a * b).sum();
    }
}

/// Draws `n` potential vectors. Each chunk of samples has its own stream, so
/// the result does not depend on thread scheduling.
pub fn sample_potentials(cov: &PotentialCovariance, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let factor = cov.cholesky()?;
    let dim = cov.dim();
    let chunks = n.div_ceil(CHUNK);
    let parts: Vec<Vec<Vec<f64>>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream(derive_seed(seed, c as u64), ORACLE_STREAM);
            let mut z = vec![0.0; dim];
            (0..CHUNK.min(n - c * CHUNK))
                .map(|_| {
                    let mut out = vec![0.0; dim];
                    fill_sample(&mut rng, &factor, &mut z, &mut out);
                    out
                })
                .collect()
        })
        .collect();
    Ok(parts.into_iter().flatten().collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Average {
    /// `<f_k' v_k>`
    Fv,
    /// `<f_k y>`
    Fy,
    /// `<f_k u>`
    Fu,
    /// `<f_k^2>`
    Ff,
}

impl Average {
    pub const ALL: [Average; 4] = [Average::Fv, Average::Fy, Average::Fu, Average::Ff];

    pub fn name(self) -> &'static str {
        match self {
            Average::Fv => "fv",
            Average::Fy => "fy",
            Average::Fu => "fu",
            Average::Ff => "ff",
        }
    }

    fn index(self) -> usize {
        match self {
            Average::Fv => 0,
            Average::Fy => 1,
            Average::Fu => 2,
            Average::Ff => 3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub estimate: f64,
    pub standard_error: f64,
}

#[inline]
fn sgn(z: f64) -> f64 {
    if z >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

#[inline]
fn update(rule: &RuleConfig, v: f64, u: f64) -> f64 {
    match rule.rule {
        LearningRule::Hebbian => rule.eta * sgn(v),
        LearningRule::Perceptron => {
            if -(u * v) >= 0.0 {
                rule.eta * sgn(v)
            } else {
                0.0
            }
        }
    }
}

/// MC estimates of all four averages from one set of `n` samples.
pub fn estimate_all(
    rule: &RuleConfig,
    cov: &PotentialCovariance,
    n: usize,
    seed: u64,
) -> Result<[Estimate; 4]> {
    Ok(estimate_rules(std::slice::from_ref(rule), cov, n, seed)?[0])
}

/// [`estimate_all`] for several rules, evaluated on the same samples.
pub fn estimate_rules(
    rules: &[RuleConfig],
    cov: &PotentialCovariance,
    n: usize,
    seed: u64,
) -> Result<Vec<[Estimate; 4]>> {
    if n < 2 {
        return Err(Error::Config("at least 2 samples are required".into()));
    }
    let factor = cov.cholesky()?;
    let dim = cov.dim();
    let (student, presenter) = (cov.student(), cov.presenter());
    let chunks = n.div_ceil(CHUNK);
    let partials: Vec<Vec<[(f64, f64); 4]>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream(derive_seed(seed, c as u64), ORACLE_STREAM);
            let mut z = vec![0.0; dim];
            let mut p = vec![0.0; dim];
            let mut acc = vec![[(0.0, 0.0); 4]; rules.len()];
            for _ in 0..CHUNK.min(n - c * CHUNK) {
                fill_sample(&mut rng, &factor, &mut z, &mut p);
                let (y, v, u) = (p[0], p[1], p[student]);
                for (rule, acc) in rules.iter().zip(acc.iter_mut()) {
                    let f = update(rule, v, u);
                    let values = [update(rule, p[presenter], u) * v, f * y, f * u, f * f];
                    for (a, x) in acc.iter_mut().zip(values) {
                        a.0 += x;
                        a.1 += x * x;
                    }
                }
            }
            acc
        })
        .collect();

    let count = n as f64;
    Ok((0..rules.len())
        .map(|r| {
            let mut sums = [(0.0, 0.0); 4];
            for part in &partials {
                for (s, p) in sums.iter_mut().zip(&part[r]) {
                    s.0 += p.0;
                    s.1 += p.1;
                }
            }
            sums.map(|(s1, s2)| {
                let mean = s1 / count;
                let var = ((s2 - count * mean * mean) / (count - 1.0)).max(0.0);
                Estimate {
                    estimate: mean,
                    standard_error: (var / count).sqrt(),
                }
            })
        })
        .collect())
}

/// MC estimate of one average with its standard error.
///
/// With a 3x3 covariance, `Fv` is the `k' = k` term; `k' != k` needs the
/// 4x4 form.
pub fn estimate_average(
    which: Average,
    rule: &RuleConfig,
    cov: &PotentialCovariance,
    n: usize,
    seed: u64,
) -> Result<Estimate> {
    Ok(estimate_all(rule, cov, n, seed)?[which.index()])
}

/// Closed-form value of `which` at the cosines stored in `cov`.
pub fn closed_form(which: Average, rule: &RuleConfig, cov: &PotentialCovariance) -> Result<f64> {
    let m = cov.matrix();
    let (student, presenter) = (cov.student(), cov.presenter());
    let q = m[1][presenter];
    let (r_bk, r_j, r_bkj) = (m[0][1], m[0][student], m[1][student]);
    let avg = match rule.rule {
        LearningRule::Hebbian => hebbian_averages(q, r_bk, r_bkj, rule.eta)?,
        LearningRule::Perceptron => perceptron_averages(q, r_bk, r_j, r_bkj, rule.eta)?,
    };
    Ok(match which {
        Average::Fv => avg.fv,
        Average::Fy => avg.fy,
        Average::Fu => avg.fu,
        Average::Ff => avg.ff,
    })
}

/// One covariance of a validation grid with the cosines it was built from.
/// `q` is `None` for the 3x3 form, where `fv` is the `k' = k` term.
#[derive(Clone, Debug, PartialEq)]
pub struct GridPoint {
    pub r_b: f64,
    pub q: Option<f64>,
    pub r_j: f64,
    pub r_bkj: f64,
    pub cov: PotentialCovariance,
}

/// All positive semi-definite uniform-case covariances over `values`:
/// 3x3 forms for every `(R_B, R_J, R_BkJ)` and 4x4 forms for every
/// `(R_B, q, R_J, R_BkJ)` with `R_Bk' = R_Bk` and `R_Bk'J = R_BkJ`.
pub fn uniform_grid(values: &[f64]) -> Result<Vec<GridPoint>> {
    let mut points = Vec::new();
    for &r_b in values {
        for &r_j in values {
            for &r_bkj in values {
                let cov = PotentialCovariance::triple(r_b, r_j, r_bkj)?;
                if cov.cholesky().is_ok() {
                    points.push(GridPoint {
                        r_b,
                        q: None,
                        r_j,
                        r_bkj,
                        cov,
                    });
                }
                for &q in values {
                    let cov =
                        PotentialCovariance::with_second_teacher(r_b, r_b, q, r_j, r_bkj, r_bkj)?;
                    if cov.cholesky().is_ok() {
                        points.push(GridPoint {
                            r_b,
                            q: Some(q),
                            r_j,
                            r_bkj,
                            cov,
                        });
                    }
                }
            }
        }
    }
    Ok(points)
}

/// Closed form against MC estimate for one average.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Check {
    pub rule: LearningRule,
    pub average: Average,
    pub closed_form: f64,
    pub estimate: Estimate,
}

impl Check {
    pub fn z_score(&self) -> f64 {
        let diff = (self.estimate.estimate - self.closed_form).abs();
        if self.estimate.standard_error > 0.0 {
            diff / self.estimate.standard_error
        } else if diff <= 1e-12 {
            0.0
        } else {
            f64::INFINITY
        }
    }

    /// `|estimate - closed form| <= sigmas * standard_error`, with a 1e-12
    /// allowance for integrands that are constant.
    pub fn passes(&self, sigmas: f64) -> bool {
        (self.estimate.estimate - self.closed_form).abs()
            <= sigmas * self.estimate.standard_error + 1e-12
    }
}

/// Checks all four averages for every rule at one covariance.
pub fn check_closed_forms(
    rules: &[RuleConfig],
    cov: &PotentialCovariance,
    n: usize,
    seed: u64,
) -> Result<Vec<Check>> {
    let estimates = estimate_rules(rules, cov, n, seed)?;
    let mut checks = Vec::with_capacity(4 * rules.len());
    for (rule, est) in rules.iter().zip(estimates) {
        for (average, estimate) in Average::ALL.into_iter().zip(est) {
            checks.push(Check {
                rule: rule.rule,
                average,
                closed_form: closed_form(average, rule, cov)?,
                estimate,
            });
        }
    }
    Ok(checks)
}
