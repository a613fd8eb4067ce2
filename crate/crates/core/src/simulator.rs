//! Finite-N Monte Carlo realization of on-line learning.
//!
//! One run draws `A`, the ensemble `B_k` and `J^0`, then performs
//! `ceil(t_max * N)` updates `J <- J + f x` with a fresh input `x` per step
//! (components `N(0, 1/N)`). The presenting teacher is chosen round-robin or
//! uniformly at random.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::{
    dot, generate_ensemble, generate_student, generate_true_teacher, measure_overlaps,
    EnsembleSpec, WeightVector,
};
use crate::rng::{derive_seed, stream, streams};
use crate::theory::{gen_error, LearningRule, RuleConfig, Trajectory, TrajectorySample};
use crate::{Error, Result};

/// Test inputs are scored in chunks of this size, each with its own stream.
const TEST_CHUNK: usize = 1024;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Schedule {
    /// Teacher `m mod K` presents example `m`.
    RoundRobin,
    /// Teacher drawn uniformly at random for every example.
    Random,
}

impl std::str::FromStr for Schedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "round-robin" | "roundrobin" | "turn" => Ok(Schedule::RoundRobin),
            "random" => Ok(Schedule::Random),
            other => Err(Error::Config(format!("unknown schedule `{other}`"))),
        }
    }
}

impl std::fmt::Display for Schedule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Schedule::RoundRobin => "round-robin",
            Schedule::Random => "random",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n: usize,
    pub spec: EnsembleSpec,
    pub rule: RuleConfig,
    pub schedule: Schedule,
    pub t_max: f64,
    /// Interval in normalized time between measurements.
    pub measure_every: f64,
    /// Fresh inputs per empirical-error measurement; 0 disables it.
    pub test_inputs: usize,
    /// Seeds the true teacher, student, training inputs and test inputs.
    /// The ensemble uses `spec.seed`.
    pub seed: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidDimension("N must be at least 1".into()));
        }
        self.spec.validate()?;
        RuleConfig::new(self.rule.rule, self.rule.eta)?;
        if !(self.t_max.is_finite() && self.t_max >= 0.0) {
            return Err(Error::Domain(format!(
                "t_max = {} must be >= 0",
                self.t_max
            )));
        }
        if !(self.measure_every.is_finite() && self.measure_every > 0.0) {
            return Err(Error::Domain(format!(
                "measure_every = {} must be > 0",
                self.measure_every
            )));
        }
        let steps = (self.t_max * self.n as f64).ceil();
        if steps >= u64::MAX as f64 {
            return Err(Error::Domain("t_max * N overflows the step counter".into()));
        }
        Ok(())
    }

    pub fn total_steps(&self) -> u64 {
        (self.t_max * self.n as f64 - 1e-9).ceil().max(0.0) as u64
    }

    fn measure_stride(&self) -> u64 {
        ((self.measure_every * self.n as f64).round() as u64).max(1)
    }
}

#[inline]
fn sgn(z: f64) -> f64 {
    if z >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Update amount `f` for teacher potential `v` and student potential `h = J . x`.
#[inline]
fn update_amount(rule: &RuleConfig, v: f64, h: f64) -> f64 {
    match rule.rule {
        LearningRule::Hebbian => rule.eta * sgn(v),
        // Theta(-u v) with Theta(0) = 1; sign(u) = sign(h) since l > 0.
        LearningRule::Perceptron => {
            if -(h * v) >= 0.0 {
                rule.eta * sgn(v)
            } else {
                0.0
            }
        }
    }
}

/// Applies one update in place and returns `f`.
fn apply_update(j: &mut [f64], x: &[f64], b: &[f64], rule: &RuleConfig) -> f64 {
    let f = update_amount(rule, dot(b, x), dot(j, x));
    if f != 0.0 {
        for (ji, xi) in j.iter_mut().zip(x) {
            *ji += f * xi;
        }
    }
    f
}

/// `J' = J + f x`, with `f = eta sgn(v)` (Hebbian) or
/// `f = eta Theta(-u v) sgn(v)` (perceptron), `v = B_k . x`, `u l = J . x`.
pub fn update_step(
    j: &WeightVector,
    x: &WeightVector,
    b_k: &WeightVector,
    rule: &RuleConfig,
) -> Result<WeightVector> {
    j.dot(x)?;
    b_k.dot(x)?;
    let mut next = j.clone();
    apply_update(next.as_mut_slice(), x.as_slice(), b_k.as_slice(), rule);
    Ok(next)
}

fn fill_input<R: Rng>(rng: &mut R, x: &mut [f64], scale: f64) {
    for xi in x.iter_mut() {
        let z: f64 = rng.sample(StandardNormal);
        *xi = z * scale;
    }
}

/// Fraction of `count` fresh inputs on which `sgn(J . x) != sgn(A . x)`.
/// Deterministic in `seed` regardless of thread count.
fn empirical_error(a: &[f64], j: &[f64], count: usize, seed: u64) -> f64 {
    let chunks = count.div_ceil(TEST_CHUNK);
    let disagreements: usize = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream(derive_seed(seed, c as u64), streams::TEST_INPUTS);
            let mut x = vec![0.0; a.len()];
            let size = TEST_CHUNK.min(count - c * TEST_CHUNK);
            (0..size)
                .filter(|_| {
                    // Scale is irrelevant for the signs.
                    fill_input(&mut rng, &mut x, 1.0);
                    sgn(dot(a, &x)) != sgn(dot(j, &x))
                })
                .count()
        })
        .sum();
    disagreements as f64 / count as f64
}

struct Weights {
    a: WeightVector,
    teachers: Vec<WeightVector>,
    student: WeightVector,
}

fn draw_weights(cfg: &SimConfig) -> Result<Weights> {
    let a = generate_true_teacher(cfg.n, cfg.seed)?;
    let teachers = generate_ensemble(&a, &cfg.spec)?;
    let student = generate_student(cfg.n, cfg.seed)?;
    Ok(Weights {
        a,
        teachers,
        student,
    })
}

/// Runs one learning trajectory.
///
/// Measurements are taken at `m = 0`, every `round(measure_every * N)`
/// updates and after the last update, recording `t = m / N`, the exact
/// cosines, `l`, the analytic `eps_g = arccos(R_J) / pi` and, if
/// `test_inputs > 0`, the empirical disagreement rate.
pub fn run_online(cfg: &SimConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let Weights {
        a,
        teachers,
        mut student,
    } = draw_weights(cfg)?;
    let n = cfg.n;
    let k = teachers.len();
    let total = cfg.total_steps();
    let stride = cfg.measure_stride();
    let scale = 1.0 / (n as f64).sqrt();

    let mut inputs = stream(cfg.seed, streams::TRAINING_INPUTS);
    let mut schedule = stream(cfg.seed, streams::TEACHER_SCHEDULE);
    let test_seed = derive_seed(cfg.seed, streams::TEST_INPUTS);
    let mut x = vec![0.0; n];
    let mut samples = Vec::with_capacity((total / stride) as usize + 2);
    let mut measurement = 0u64;

    let mut measure = |m: u64, student: &WeightVector| -> Result<()> {
        let t = m as f64 / n as f64;
        if student.as_slice().iter().any(|c| !c.is_finite()) {
            return Err(Error::Diverged { t });
        }
        let report = measure_overlaps(&a, &teachers, student)?;
        let eps_empirical = (cfg.test_inputs > 0).then(|| {
            empirical_error(
                a.as_slice(),
                student.as_slice(),
                cfg.test_inputs,
                derive_seed(test_seed, measurement),
            )
        });
        measurement += 1;
        samples.push(TrajectorySample {
            t,
            r_j: report.r_j,
            r_bkj_mean: report.mean_r_bkj(),
            l: report.l,
            eps_g: gen_error(report.r_j)?,
            eps_empirical,
        });
        Ok(())
    };

    measure(0, &student)?;
    for m in 0..total {
        let teacher = match cfg.schedule {
            Schedule::RoundRobin => (m % k as u64) as usize,
            Schedule::Random => schedule.random_range(0..k),
        };
        fill_input(&mut inputs, &mut x, scale);
        apply_update(
            student.as_mut_slice(),
            &x,
            teachers[teacher].as_slice(),
            &cfg.rule,
        );
        let done = m + 1;
        if done % stride == 0 || done == total {
            measure(done, &student)?;
        }
    }
    Ok(Trajectory { samples })
}

/// Sample moments of `(y, v_k, u)` over fresh inputs.
#[derive(Clone, Debug, PartialEq)]
pub struct PotentialStats {
    pub means: [f64; 3],
    /// Sample covariance (denominator `samples - 1`).
    pub covariance: [[f64; 3]; 3],
    /// Exact covariance implied by the weights:
    /// `E[y v_k] = A . B_k / N`, `E[y u] = A . J / (N l)`, ...
    pub expected: [[f64; 3]; 3],
}

/// Potential statistics for explicit frozen weights, `y = A . x`,
/// `v = B . x`, `u = J . x / l`.
pub fn potential_statistics_for(
    a: &WeightVector,
    b: &WeightVector,
    j: &WeightVector,
    samples: usize,
    seed: u64,
) -> Result<PotentialStats> {
    if samples < 2 {
        return Err(Error::Config(
            "potential statistics need at least 2 samples".into(),
        ));
    }
    a.dot(b)?;
    a.dot(j)?;
    let n = a.dim();
    let l = j.length();
    if l == 0.0 {
        return Err(Error::DegenerateGeometry("student has zero length".into()));
    }
    let scale = 1.0 / (n as f64).sqrt();
    let vectors = [a.as_slice(), b.as_slice(), j.as_slice()];
    let norms = [1.0, 1.0, 1.0 / l];

    // Per chunk: sums of p_i and p_i p_j.
    let chunks = samples.div_ceil(TEST_CHUNK);
    let partials: Vec<([f64; 3], [[f64; 3]; 3])> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream(derive_seed(seed, c as u64), streams::POTENTIAL_INPUTS);
            let mut x = vec![0.0; n];
            let mut s1 = [0.0; 3];
            let mut s2 = [[0.0; 3]; 3];
            for _ in 0..TEST_CHUNK.min(samples - c * TEST_CHUNK) {
                fill_input(&mut rng, &mut x, scale);
                let p: [f64; 3] = std::array::from_fn(|i| dot(vectors[i], &x) * norms[i]);
                for i in 0..3 {
                    s1[i] += p[i];
                    for m in 0..3 {
                        s2[i][m] += p[i] * p[m];
                    }
                }
            }
            (s1, s2)
        })
        .collect();

    let mut s1 = [0.0; 3];
    let mut s2 = [[0.0; 3]; 3];
    for (p1, p2) in &partials {
        for i in 0..3 {
            s1[i] += p1[i];
            for m in 0..3 {
                s2[i][m] += p2[i][m];
            }
        }
    }
    let count = samples as f64;
    let means = s1.map(|s| s / count);
    let covariance = std::array::from_fn(|i| {
        std::array::from_fn(|m| (s2[i][m] - count * means[i] * means[m]) / (count - 1.0))
    });
    let expected = std::array::from_fn(|i| {
        std::array::from_fn(|m| dot(vectors[i], vectors[m]) * norms[i] * norms[m] / n as f64)
    });
    Ok(PotentialStats {
        means,
        covariance,
        expected,
    })
}

/// Potential statistics of the weights `run_online(cfg)` would start from,
/// using the first teacher.
pub fn potential_statistics(cfg: &SimConfig, samples: usize) -> Result<PotentialStats> {
    cfg.validate()?;
    let w = draw_weights(cfg)?;
    potential_statistics_for(
        &w.a,
        &w.teachers[0],
        &w.student,
        samples,
        derive_seed(cfg.seed, streams::POTENTIAL_INPUTS),
    )
}
