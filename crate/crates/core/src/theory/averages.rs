//! Generalization error and the Gaussian sample averages that drive the ODEs.
//!
//! `y`, `v_k`, `u` are zero-mean unit-variance Gaussians with
//! `cov(y, v_k) = R_Bk`, `cov(y, u) = R_J`, `cov(v_k, u) = R_BkJ` and
//! `cov(v_k, v_k') = q_kk'`. In `fv = <f_k' v_k>` the update is driven by
//! teacher `k'` while `v_k` is the potential of teacher `k`.

use std::f64::consts::PI;

use crate::{Error, Result};

/// Cosines may leave `[-1, 1]` by at most this much before it is an error.
pub const COSINE_TOLERANCE: f64 = 1e-9;

/// `1 / sqrt(2 pi)`.
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

pub fn clamp_cosine(x: f64, name: &str) -> Result<f64> {
    if !x.is_finite() || x.abs() > 1.0 + COSINE_TOLERANCE {
        return Err(Error::Domain(format!("{name} = {x} outside [-1, 1]")));
    }
    Ok(x.clamp(-1.0, 1.0))
}

/// Generalization error `arccos(R_J) / pi`.
///
/// On `(0, 1]` this is `arctan(sqrt(1 - R_J^2) / R_J) / pi`; the arccos form
/// is continuous through `R_J = 0` and covers negative overlaps.
pub fn gen_error(r_j: f64) -> Result<f64> {
    Ok(clamp_cosine(r_j, "R_J")?.acos() / PI)
}

/// The four averages `<f_k' v_k>`, `<f_k y>`, `<f_k u>`, `<f_k^2>`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampleAverages {
    pub fv: f64,
    pub fy: f64,
    pub fu: f64,
    pub ff: f64,
}

fn check_eta(eta: f64) -> Result<()> {
    if !(eta.is_finite() && eta >= 0.0) {
        return Err(Error::Domain(format!(
            "eta = {eta} must be finite and >= 0"
        )));
    }
    Ok(())
}

/// Hebbian rule `f = eta * sgn(v)`.
pub fn hebbian_averages(q_kk: f64, r_bk: f64, r_bkj: f64, eta: f64) -> Result<SampleAverages> {
    check_eta(eta)?;
    let q_kk = clamp_cosine(q_kk, "q_kk'")?;
    let r_bk = clamp_cosine(r_bk, "R_Bk")?;
    let r_bkj = clamp_cosine(r_bkj, "R_BkJ")?;
    let scale = 2.0 * eta * INV_SQRT_2PI;
    Ok(SampleAverages {
        fv: scale * q_kk,
        fy: scale * r_bk,
        fu: scale * r_bkj,
        ff: eta * eta,
    })
}

/// Perceptron rule `f = eta * Theta(-u v) * sgn(v)`.
///
/// `<f_k^2> = eta^2 * arccos(R_BkJ) / pi`, the probability that student and
/// teacher disagree; equal to the arctan form for `R_BkJ > 0` and `eta^2 / 2`
/// at `R_BkJ = 0`.
pub fn perceptron_averages(
    q_kk: f64,
    r_bk: f64,
    r_j: f64,
    r_bkj: f64,
    eta: f64,
) -> Result<SampleAverages> {
    check_eta(eta)?;
    let q_kk = clamp_cosine(q_kk, "q_kk'")?;
    let r_bk = clamp_cosine(r_bk, "R_Bk")?;
    let r_j = clamp_cosine(r_j, "R_J")?;
    let r_bkj = clamp_cosine(r_bkj, "R_BkJ")?;
    let scale = eta * INV_SQRT_2PI;
    Ok(SampleAverages {
        fv: scale * (q_kk - r_bkj),
        fy: scale * (r_bk - r_j),
        fu: scale * (r_bkj - 1.0),
        ff: eta * eta * r_bkj.acos() / PI,
    })
}
