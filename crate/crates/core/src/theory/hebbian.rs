//! Closed-form Hebbian solution and steady states.

use std::f64::consts::PI;

use super::GeometryParams;
use crate::{Error, Result};

/// Hebbian order parameters at time `t` for the uniform geometry.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HebbianSolution {
    pub r_bkj: f64,
    pub r_j: f64,
    pub l: f64,
    /// `R_J`, evaluated from the direct closed form rather than `r_j / l`.
    pub cos_j: f64,
}

fn check_common(t: f64, eta: f64) -> Result<()> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::Domain(format!("t = {t} must be finite and >= 0")));
    }
    if !(eta.is_finite() && eta >= 0.0) {
        return Err(Error::Domain(format!(
            "eta = {eta} must be finite and >= 0"
        )));
    }
    Ok(())
}

fn check_uniform(k: usize, q: f64, r_b: f64) -> Result<()> {
    if k == 0 {
        return Err(Error::Domain("K must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::Domain(format!("q = {q} not in [0, 1]")));
    }
    if !(r_b > 0.0 && r_b <= 1.0) {
        return Err(Error::Domain(format!("R_B = {r_b} not in (0, 1]")));
    }
    Ok(())
}

/// `((K - 1) q + 1) / K`, the mean teacher-teacher overlap including self.
fn mean_overlap(k: usize, q: f64) -> f64 {
    ((k as f64 - 1.0) * q + 1.0) / k as f64
}

/// Solution of the Hebbian ODEs from `r_J = r_BkJ = 0`, `l = 1` for an
/// arbitrary geometry. Returns `(r_BkJ[k], r_J, l)`.
pub fn hebbian_closed_form_general(
    t: f64,
    geom: &GeometryParams,
    eta: f64,
) -> Result<(Vec<f64>, f64, f64)> {
    check_common(t, eta)?;
    let k = geom.k() as f64;
    let rate = eta * (2.0 / PI).sqrt();
    let rows: Vec<f64> = (0..geom.k()).map(|m| geom.mean_q_row(m)).collect();
    let r_bkj = rows.iter().map(|row| rate * row * t).collect();
    let r_j = rate * geom.r_bk().iter().sum::<f64>() / k * t;
    let mean_row = rows.iter().sum::<f64>() / k;
    let l2 = eta * eta * ((2.0 / PI) * mean_row * t * t + t) + 1.0;
    Ok((r_bkj, r_j, l2.sqrt()))
}

/// `R_J(t) = R_B / sqrt(((K-1) q + 1) / K + (pi / 2) (1 / (eta^2 t^2) + 1 / t))`,
/// with `R_J(0) = 0`.
pub fn hebbian_rj(t: f64, k: usize, q: f64, r_b: f64, eta: f64) -> Result<f64> {
    check_common(t, eta)?;
    check_uniform(k, q, r_b)?;
    if t == 0.0 || eta == 0.0 {
        return Ok(0.0);
    }
    let denom = mean_overlap(k, q) + PI / 2.0 * (1.0 / (eta * eta * t * t) + 1.0 / t);
    Ok(r_b / denom.sqrt())
}

pub fn hebbian_closed_form(
    t: f64,
    k: usize,
    q: f64,
    r_b: f64,
    eta: f64,
) -> Result<HebbianSolution> {
    check_common(t, eta)?;
    check_uniform(k, q, r_b)?;
    let rate = eta * (2.0 / PI).sqrt();
    let mean_q = mean_overlap(k, q);
    Ok(HebbianSolution {
        r_bkj: rate * mean_q * t,
        r_j: rate * r_b * t,
        l: (eta * eta * ((2.0 / PI) * mean_q * t * t + t) + 1.0).sqrt(),
        cos_j: hebbian_rj(t, k, q, r_b, eta)?,
    })
}

/// `t -> infinity` limit of the Hebbian `R_J`: `R_B / sqrt(q + (1 - q) / K)`.
pub fn steady_state_rj(k: usize, q: f64, r_b: f64) -> Result<f64> {
    check_uniform(k, q, r_b)?;
    let value = r_b / (q + (1.0 - q) / k as f64).sqrt();
    if value > 1.0 + 1e-12 {
        return Err(Error::InfeasibleGeometry(format!(
            "steady R_J = {value} exceeds 1 for K = {k}, q = {q}, R_B = {r_b}"
        )));
    }
    Ok(value.min(1.0))
}

/// `K -> infinity` limit of [`steady_state_rj`]: `R_B / sqrt(q)`.
pub fn steady_state_rj_limit(q: f64, r_b: f64) -> Result<f64> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::Domain(format!("q = {q} not in (0, 1]")));
    }
    check_uniform(1, q, r_b)?;
    let value = r_b / q.sqrt();
    if value > 1.0 + 1e-12 {
        return Err(Error::InfeasibleGeometry(format!(
            "limit R_J = {value} exceeds 1 (q < R_B^2)"
        )));
    }
    Ok(value.min(1.0))
}
