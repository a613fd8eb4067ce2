//! True teacher, ensemble teachers and initial student.
//!
//! Teachers are built from the true teacher `A` by flipping the sign of a
//! random subset of its components. Flips are drawn per component from two
//! layers that are XOR-combined: a flip shared by every teacher (probability
//! `shared`) and a flip private to each teacher (probability `independent`).
//! With `s = 1 - 2 * shared` and `p = 1 - 2 * independent` the expected
//! overlaps are `B_k . A / N = s * p` and `B_k . B_k' / N = p^2`, so choosing
//! `p = sqrt(q)` and `s = R_B / sqrt(q)` hits both targets.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::rng::{derive_seed, stream, streams};
use crate::{Error, Result};

/// Slack allowed when checking `q >= R_B^2` so that e.g. `q = 0.49`,
/// `R_B = 0.7` is accepted despite rounding.
const FEASIBILITY_SLACK: f64 = 1e-12;

/// An N-dimensional weight vector (true teacher, ensemble teacher or student).
#[derive(Clone, Debug, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(components: Vec<f64>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidDimension("N must be at least 1".into()));
        }
        if let Some(i) = components.iter().position(|c| !c.is_finite()) {
            return Err(Error::Domain(format!("component {i} is not finite")));
        }
        Ok(Self(components))
    }

    /// Draws `n` independent standard-normal components.
    pub fn standard_normal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDimension("N must be at least 1".into()));
        }
        Ok(Self((0..n).map(|_| rng.sample(StandardNormal)).collect()))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn dot(&self, other: &WeightVector) -> Result<f64> {
        self.check_dim(other)?;
        Ok(dot(&self.0, &other.0))
    }

    pub fn norm(&self) -> f64 {
        dot(&self.0, &self.0).sqrt()
    }

    /// `||w|| / sqrt(N)`; equals the student length `l` for `w = J`.
    pub fn length(&self) -> f64 {
        self.norm() / (self.dim() as f64).sqrt()
    }

    /// Direction cosine, clamped to `[-1, 1]`.
    pub fn cosine(&self, other: &WeightVector) -> Result<f64> {
        self.check_dim(other)?;
        let (na, nb) = (self.norm(), other.norm());
        if na == 0.0 || nb == 0.0 {
            return Err(Error::DegenerateGeometry(
                "direction cosine of a zero vector".into(),
            ));
        }
        Ok((dot(&self.0, &other.0) / (na * nb)).clamp(-1.0, 1.0))
    }

    fn check_dim(&self, other: &WeightVector) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }
}

impl std::ops::Neg for WeightVector {
    type Output = WeightVector;

    fn neg(mut self) -> WeightVector {
        self.0.iter_mut().for_each(|c| *c = -*c);
        self
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    // Four accumulators let the compiler vectorize without fast-math.
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let i = 4 * c;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut tail = 0.0;
    for i in 4 * chunks..a.len() {
        tail += a[i] * b[i];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Teacher geometry for the uniform case: every teacher has cosine `r_b`
/// with the true teacher and cosine `q` with every other teacher.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub k: usize,
    pub r_b: f64,
    pub q: f64,
    pub seed: u64,
}

/// Per-component flip probabilities of the two-layer construction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlipProbabilities {
    pub independent: f64,
    pub shared: f64,
}

impl EnsembleSpec {
    pub fn new(k: usize, r_b: f64, q: f64, seed: u64) -> Result<Self> {
        let spec = Self { k, r_b, q, seed };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Domain("K must be at least 1".into()));
        }
        if !(self.r_b > 0.0 && self.r_b <= 1.0) {
            return Err(Error::Domain(format!("R_B = {} not in (0, 1]", self.r_b)));
        }
        if !(self.q.is_finite() && self.q <= 1.0) {
            return Err(Error::Domain(format!("q = {} not in [R_B^2, 1]", self.q)));
        }
        if self.q < self.r_b * self.r_b - FEASIBILITY_SLACK {
            return Err(Error::InfeasibleGeometry(format!(
                "q = {} is below R_B^2 = {}; sign-flip teachers require q >= R_B^2",
                self.q,
                self.r_b * self.r_b
            )));
        }
        Ok(())
    }

    pub fn flip_probabilities(&self) -> Result<FlipProbabilities> {
        self.validate()?;
        let root_q = self.q.sqrt();
        Ok(FlipProbabilities {
            independent: ((1.0 - root_q) / 2.0).clamp(0.0, 0.5),
            shared: ((1.0 - self.r_b / root_q) / 2.0).clamp(0.0, 0.5),
        })
    }
}

/// Direction cosines among the true teacher, the ensemble and the student.
#[derive(Clone, Debug, PartialEq)]
pub struct OverlapReport {
    pub r_bk: Vec<f64>,
    pub q: Vec<Vec<f64>>,
    pub r_j: f64,
    pub r_bkj: Vec<f64>,
    pub l: f64,
}

impl OverlapReport {
    pub fn mean_r_bkj(&self) -> f64 {
        self.r_bkj.iter().sum::<f64>() / self.r_bkj.len() as f64
    }
}

pub fn generate_true_teacher(n: usize, seed: u64) -> Result<WeightVector> {
    WeightVector::standard_normal(n, &mut stream(seed, streams::TRUE_TEACHER))
}

/// Initial student `J^0`, drawn like the true teacher but from its own stream.
pub fn generate_student(n: usize, seed: u64) -> Result<WeightVector> {
    WeightVector::standard_normal(n, &mut stream(seed, streams::STUDENT))
}

/// Builds `spec.k` teachers from `a` by sign flips.
///
/// Draw order: for each component `i`, one uniform for the shared flip, then
/// one uniform per teacher `k = 0..K`. Uniforms are drawn even when the
/// corresponding probability is zero.
pub fn generate_ensemble(a: &WeightVector, spec: &EnsembleSpec) -> Result<Vec<WeightVector>> {
    let flips = spec.flip_probabilities()?;
    let mut rng = stream(spec.seed, streams::ENSEMBLE);
    let n = a.dim();
    let mut teachers = vec![vec![0.0; n]; spec.k];
    for (i, &ai) in a.as_slice().iter().enumerate() {
        let shared = rng.random::<f64>() < flips.shared;
        for teacher in teachers.iter_mut() {
            let own = rng.random::<f64>() < flips.independent;
            teacher[i] = if shared ^ own { -ai } else { ai };
        }
    }
    teachers.into_iter().map(WeightVector::new).collect()
}

pub fn measure_overlaps(
    a: &WeightVector,
    bs: &[WeightVector],
    j: &WeightVector,
) -> Result<OverlapReport> {
    let n = a.dim();
    for w in bs.iter().chain(std::iter::once(j)) {
        if w.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: w.dim(),
            });
        }
    }
    let r_bk = bs.iter().map(|b| b.cosine(a)).collect::<Result<Vec<_>>>()?;
    let k = bs.len();
    let mut q = vec![vec![1.0; k]; k];
    for i in 0..k {
        for m in (i + 1)..k {
            let c = bs[i].cosine(&bs[m])?;
            q[i][m] = c;
            q[m][i] = c;
        }
    }
    let r_j = a.cosine(j)?;
    let r_bkj = bs.iter().map(|b| b.cosine(j)).collect::<Result<Vec<_>>>()?;
    Ok(OverlapReport {
        r_bk,
        q,
        r_j,
        r_bkj,
        l: j.length(),
    })
}

/// Mean cosine between pairs `S`, `T` generated independently with cosine
/// `r0` to a common `P` (no shared flips). The large-N value is `r0^2`.
pub fn verify_independent_overlap(n: usize, r0: f64, trials: usize, seed: u64) -> Result<f64> {
    if !(r0 > 0.0 && r0 <= 1.0) {
        return Err(Error::Domain(format!("R0 = {r0} not in (0, 1]")));
    }
    if trials == 0 {
        return Err(Error::Domain("trials must be at least 1".into()));
    }
    let mut total = 0.0;
    for trial in 0..trials as u64 {
        let trial_seed = derive_seed(seed, trial);
        let p = generate_true_teacher(n, trial_seed)?;
        let spec = EnsembleSpec::new(2, r0, r0 * r0, trial_seed)?;
        let pair = generate_ensemble(&p, &spec)?;
        total += pair[0].cosine(&pair[1])?;
    }
    Ok(total / trials as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn true_teacher_is_deterministic() {
        let a = generate_true_teacher(4, 11).unwrap();
        let b = generate_true_teacher(4, 11).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, generate_true_teacher(4, 12).unwrap());
    }

    #[test]
    fn zero_dimension_is_rejected() {
        assert!(matches!(
            generate_true_teacher(0, 1),
            Err(Error::InvalidDimension(_))
        ));
    }

    #[test]
    fn true_teacher_moments() {
        let a = generate_true_teacher(100_000, 5).unwrap();
        let n = a.dim() as f64;
        let mean = a.as_slice().iter().sum::<f64>() / n;
        let var = a.as_slice().iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        assert!((0.98..=1.02).contains(&var), "variance {var}");
        assert!((0.99..=1.01).contains(&a.length()), "length {}", a.length());
    }

    #[test]
    fn flip_probabilities_match_closed_form() {
        // Frozen from pi_i = (1 - sqrt q)/2, pi_c = (1 - R_B/sqrt q)/2.
        let f = EnsembleSpec::new(10, 0.7, 0.49, 0)
            .unwrap()
            .flip_probabilities()
            .unwrap();
        assert_abs_diff_eq!(f.independent, 0.15, epsilon = 1e-12);
        assert_abs_diff_eq!(f.shared, 0.0, epsilon = 1e-12);
        let f = EnsembleSpec::new(10, 0.7, 0.58, 0)
            .unwrap()
            .flip_probabilities()
            .unwrap();
        assert_abs_diff_eq!(f.independent, 0.11921134470680461, epsilon = 1e-12);
        assert_abs_diff_eq!(f.shared, 0.04042748499097104, epsilon = 1e-12);
    }

    #[test]
    fn spec_validation() {
        assert!(EnsembleSpec::new(3, 0.7, 0.3, 0)
            .unwrap_err()
            .is_infeasible());
        assert!(matches!(
            EnsembleSpec::new(0, 0.7, 0.5, 0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            EnsembleSpec::new(3, 0.0, 0.5, 0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            EnsembleSpec::new(3, 0.7, 1.1, 0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            EnsembleSpec::new(3, 1.2, 1.0, 0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn perfect_teachers_equal_truth() {
        let a = generate_true_teacher(500, 1).unwrap();
        let bs = generate_ensemble(&a, &EnsembleSpec::new(4, 1.0, 1.0, 9).unwrap()).unwrap();
        assert!(bs.iter().all(|b| *b == a));
    }

    #[test]
    fn teachers_are_sign_flips() {
        let a = generate_true_teacher(2000, 3).unwrap();
        let bs = generate_ensemble(&a, &EnsembleSpec::new(5, 0.7, 0.58, 4).unwrap()).unwrap();
        for b in &bs {
            for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
                assert!(x == y || *x == -*y);
            }
        }
    }

    #[test]
    fn measured_overlaps_hit_targets() {
        let n = 100_000;
        let tol = 3.0 / (n as f64).sqrt();
        let a = generate_true_teacher(n, 21).unwrap();
        let j = generate_student(n, 21).unwrap();
        for &(r_b, q) in &[(0.7, 0.49), (0.7, 0.58), (0.5, 0.8)] {
            let bs = generate_ensemble(&a, &EnsembleSpec::new(4, r_b, q, 22).unwrap()).unwrap();
            let rep = measure_overlaps(&a, &bs, &j).unwrap();
            for k in 0..4 {
                assert!((rep.r_bk[k] - r_b).abs() < tol, "R_B {}", rep.r_bk[k]);
                for m in 0..4 {
                    if k != m {
                        assert!((rep.q[k][m] - q).abs() < tol, "q {}", rep.q[k][m]);
                    }
                }
            }
            assert!(rep.r_j.abs() < 0.01);
        }
    }

    #[test]
    fn self_and_antiparallel_overlaps() {
        let a = generate_true_teacher(64, 2).unwrap();
        let rep = measure_overlaps(&a, std::slice::from_ref(&a), &a).unwrap();
        assert_abs_diff_eq!(rep.r_bk[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rep.r_j, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rep.r_bkj[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rep.l, a.length(), epsilon = 1e-12);

        let rep = measure_overlaps(&a, std::slice::from_ref(&a), &(-a.clone())).unwrap();
        assert_abs_diff_eq!(rep.r_j, -1.0, epsilon = 1e-12);
    }

    #[test]
    fn overlap_errors() {
        let a = generate_true_teacher(8, 2).unwrap();
        let short = generate_true_teacher(7, 2).unwrap();
        assert!(matches!(
            measure_overlaps(&a, std::slice::from_ref(&a), &short),
            Err(Error::DimensionMismatch { .. })
        ));
        let zero = WeightVector::new(vec![0.0; 8]).unwrap();
        assert!(matches!(
            measure_overlaps(&a, std::slice::from_ref(&a), &zero),
            Err(Error::DegenerateGeometry(_))
        ));
    }

    #[test]
    fn non_finite_components_rejected() {
        assert!(WeightVector::new(vec![1.0, f64::NAN]).is_err());
        assert!(WeightVector::new(vec![]).is_err());
    }

    #[test]
    fn independent_overlap_unit_cosine() {
        let q0 = verify_independent_overlap(1000, 1.0, 3, 0).unwrap();
        assert_abs_diff_eq!(q0, 1.0, epsilon = 1e-12);
    }
}
