use super::averages::{gen_error, hebbian_averages, perceptron_averages};
use super::{
    GeometryParams, LearningRule, OrderState, RuleConfig, SolverConfig, Trajectory,
    TrajectorySample,
};
use crate::{Error, Result};

/// Time derivatives of the order parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Derivatives {
    pub d_r_bkj: Vec<f64>,
    pub d_r_j: f64,
    pub d_l: f64,
}

/// Right-hand side of the order-parameter ODEs.
///
/// ```text
/// dr_BkJ/dt = (1/K) sum_k' <f_k' v_k>
/// dr_J/dt   = (1/K) sum_k  <f_k y>
/// dl/dt     = (1/K) sum_k (<f_k u> + <f_k^2> / (2 l))
/// ```
///
/// The averages are evaluated at the cosines `R_J = r_J / l` and
/// `R_BkJ = r_BkJ / l` of the current state.
pub fn ode_rhs(
    state: &OrderState,
    geom: &GeometryParams,
    rule: &RuleConfig,
) -> Result<Derivatives> {
    let k = geom.k();
    if state.r_bkj.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            found: state.r_bkj.len(),
        });
    }
    if state.l <= 0.0 || !state.l.is_finite() {
        return Err(Error::DegenerateState(format!(
            "student length l = {}",
            state.l
        )));
    }
    let cos_j = state.cos_j()?;
    let cos_bkj = (0..k)
        .map(|i| state.cos_bkj(i))
        .collect::<Result<Vec<_>>>()?;
    let inv_k = 1.0 / k as f64;
    let eta = rule.eta;

    let mut d_r_bkj = vec![0.0; k];
    let mut d_r_j = 0.0;
    let mut d_l = 0.0;
    for m in 0..k {
        let r_bk = geom.r_bk()[m];
        // <f_k' v_k> is affine in q_kk', so the average over presenters k'
        // equals the value at the row mean of q.
        let (fv_mean, own) = match rule.rule {
            LearningRule::Hebbian => (
                hebbian_averages(geom.mean_q_row(m), r_bk, cos_bkj[m], eta)?.fv,
                hebbian_averages(1.0, r_bk, cos_bkj[m], eta)?,
            ),
            LearningRule::Perceptron => (
                perceptron_averages(geom.mean_q_row(m), r_bk, cos_j, cos_bkj[m], eta)?.fv,
                perceptron_averages(1.0, r_bk, cos_j, cos_bkj[m], eta)?,
            ),
        };
        d_r_bkj[m] = fv_mean;
        d_r_j += own.fy * inv_k;
        d_l += (own.fu + own.ff / (2.0 * state.l)) * inv_k;
    }
    Ok(Derivatives {
        d_r_bkj,
        d_r_j,
        d_l,
    })
}

// Flat layout used by the stepper: [r_J, l, r_B1J, ..., r_BKJ].
fn unpack(y: &[f64]) -> OrderState {
    OrderState {
        r_j: y[0],
        l: y[1],
        r_bkj: y[2..].to_vec(),
    }
}

fn rhs_flat(y: &[f64], geom: &GeometryParams, rule: &RuleConfig, out: &mut [f64]) -> Result<()> {
    let d = ode_rhs(&unpack(y), geom, rule)?;
    out[0] = d.d_r_j;
    out[1] = d.d_l;
    out[2..].copy_from_slice(&d.d_r_bkj);
    Ok(())
}

fn sample(y: &[f64], t: f64) -> Result<TrajectorySample> {
    let state = unpack(y);
    let r_j = state.cos_j()?;
    let k = state.r_bkj.len();
    let mut mean = 0.0;
    for m in 0..k {
        mean += state.cos_bkj(m)?;
    }
    Ok(TrajectorySample {
        t,
        r_j,
        r_bkj_mean: mean / k as f64,
        l: state.l,
        eps_g: gen_error(r_j)?,
        eps_empirical: None,
    })
}

/// Integrates the ODEs with the classical fixed-step RK4 scheme.
///
/// The step is `t_max / ceil(t_max / dt)`, so the last step lands exactly on
/// `t_max`. Samples are recorded at `t = 0`, every `sample_every` (rounded to
/// a whole number of steps) and at `t_max`.
pub fn integrate(
    geom: &GeometryParams,
    rule: &RuleConfig,
    solver: &SolverConfig,
    init: &OrderState,
) -> Result<Trajectory> {
    integrate_observed(geom, rule, solver, init, |_, _| {})
}

/// Like [`integrate`], also handing the full state at every recorded sample
/// to `observer`.
pub fn integrate_observed(
    geom: &GeometryParams,
    rule: &RuleConfig,
    solver: &SolverConfig,
    init: &OrderState,
    mut observer: impl FnMut(f64, &OrderState),
) -> Result<Trajectory> {
    solver.validate()?;
    if init.r_bkj.len() != geom.k() {
        return Err(Error::DimensionMismatch {
            expected: geom.k(),
            found: init.r_bkj.len(),
        });
    }
    if init.l.is_nan() || init.l <= 0.0 {
        return Err(Error::DegenerateState(format!(
            "initial length l = {}",
            init.l
        )));
    }

    let steps = (solver.t_max / solver.dt - 1e-9).ceil().max(0.0) as usize;
    let h = if steps == 0 {
        0.0
    } else {
        solver.t_max / steps as f64
    };
    let stride = if steps == 0 {
        1
    } else {
        ((solver.sample_every / h).round() as usize).max(1)
    };

    let dim = 2 + geom.k();
    let mut y = Vec::with_capacity(dim);
    y.extend([init.r_j, init.l]);
    y.extend_from_slice(&init.r_bkj);

    let mut k1 = vec![0.0; dim];
    let mut k2 = vec![0.0; dim];
    let mut k3 = vec![0.0; dim];
    let mut k4 = vec![0.0; dim];
    let mut tmp = vec![0.0; dim];

    let mut samples = Vec::with_capacity(steps / stride + 2);
    samples.push(sample(&y, 0.0)?);
    observer(0.0, &unpack(&y));

    for step in 1..=steps {
        let t_prev = (step - 1) as f64 * h;
        let t = step as f64 * h;
        let diverged = |_: Error| Error::Diverged { t: t_prev };

        rhs_flat(&y, geom, rule, &mut k1).map_err(diverged)?;
        for i in 0..dim {
            tmp[i] = y[i] + 0.5 * h * k1[i];
        }
        rhs_flat(&tmp, geom, rule, &mut k2).map_err(diverged)?;
        for i in 0..dim {
            tmp[i] = y[i] + 0.5 * h * k2[i];
        }
        rhs_flat(&tmp, geom, rule, &mut k3).map_err(diverged)?;
        for i in 0..dim {
            tmp[i] = y[i] + h * k3[i];
        }
        rhs_flat(&tmp, geom, rule, &mut k4).map_err(diverged)?;
        for i in 0..dim {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }

        if y.iter().any(|v| !v.is_finite()) || y[1] <= 0.0 {
            return Err(Error::Diverged { t });
        }
        if step % stride == 0 || step == steps {
            samples.push(sample(&y, t).map_err(|_| Error::Diverged { t })?);
            observer(t, &unpack(&y));
        }
    }
    Ok(Trajectory { samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::theory::hebbian_closed_form;
    use approx::assert_abs_diff_eq;

    fn uniform() -> GeometryParams {
        GeometryParams::uniform(10, 0.7, 0.49).unwrap()
    }

    #[test]
    fn hebbian_rj_rate_is_constant() {
        let rule = RuleConfig::hebbian(1.3).unwrap();
        let expected = 1.3 * 2.0 * 0.7 / (2.0 * std::f64::consts::PI).sqrt();
        for state in [
            OrderState::initial(10),
            OrderState {
                r_j: 0.4,
                r_bkj: vec![0.3; 10],
                l: 1.7,
            },
        ] {
            let d = ode_rhs(&state, &uniform(), &rule).unwrap();
            assert_abs_diff_eq!(d.d_r_j, expected, epsilon = 1e-14);
        }
    }

    #[test]
    fn row_mean_shortcut_matches_pairwise_sum() {
        let geom = GeometryParams::new(
            vec![0.7, 0.6, 0.8],
            vec![
                vec![1.0, 0.5, 0.6],
                vec![0.5, 1.0, 0.7],
                vec![0.6, 0.7, 1.0],
            ],
        )
        .unwrap();
        let state = OrderState {
            r_j: 0.3,
            r_bkj: vec![0.2, 0.4, 0.1],
            l: 1.3,
        };
        for rule in [
            RuleConfig::hebbian(0.9).unwrap(),
            RuleConfig::perceptron(0.9).unwrap(),
        ] {
            let d = ode_rhs(&state, &geom, &rule).unwrap();
            for m in 0..3 {
                let cos_bkj = state.r_bkj[m] / state.l;
                let pairwise: f64 = (0..3)
                    .map(|p| {
                        let q = geom.q()[m][p];
                        match rule.rule {
                            LearningRule::Hebbian => {
                                hebbian_averages(q, 0.0, cos_bkj, rule.eta).unwrap().fv
                            }
                            LearningRule::Perceptron => {
                                perceptron_averages(q, 0.0, 0.0, cos_bkj, rule.eta)
                                    .unwrap()
                                    .fv
                            }
                        }
                    })
                    .sum::<f64>()
                    / 3.0;
                assert_abs_diff_eq!(d.d_r_bkj[m], pairwise, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn zero_learning_rate_freezes_state() {
        for rule in [
            RuleConfig::hebbian(0.0).unwrap(),
            RuleConfig::perceptron(0.0).unwrap(),
        ] {
            let state = OrderState {
                r_j: 0.2,
                r_bkj: vec![0.1; 10],
                l: 1.1,
            };
            let d = ode_rhs(&state, &uniform(), &rule).unwrap();
            assert_eq!(d.d_r_j, 0.0);
            assert_eq!(d.d_l, 0.0);
            assert!(d.d_r_bkj.iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn perceptron_fixed_point_at_full_agreement() {
        let geom = GeometryParams::uniform(1, 0.7, 1.0).unwrap();
        let state = OrderState {
            r_j: 0.7 * 2.0,
            r_bkj: vec![2.0],
            l: 2.0,
        };
        let d = ode_rhs(&state, &geom, &RuleConfig::perceptron(0.5).unwrap()).unwrap();
        assert_abs_diff_eq!(d.d_r_j, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d.d_l, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d.d_r_bkj[0], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn degenerate_length_rejected() {
        let state = OrderState {
            r_j: 0.0,
            r_bkj: vec![0.0; 10],
            l: 0.0,
        };
        let err = ode_rhs(&state, &uniform(), &RuleConfig::hebbian(1.0).unwrap()).unwrap_err();
        assert!(matches!(err, Error::DegenerateState(_)));
    }

    #[test]
    fn zero_horizon_returns_initial_state() {
        let solver = SolverConfig {
            t_max: 0.0,
            ..Default::default()
        };
        let traj = integrate(
            &uniform(),
            &RuleConfig::hebbian(1.0).unwrap(),
            &solver,
            &OrderState::initial(10),
        )
        .unwrap();
        assert_eq!(traj.len(), 1);
        assert_eq!(traj.samples[0].t, 0.0);
        assert_eq!(traj.samples[0].eps_g, 0.5);
        assert_eq!(traj.samples[0].l, 1.0);
    }

    #[test]
    fn sampling_grid() {
        let solver = SolverConfig {
            dt: 0.01,
            t_max: 1.05,
            sample_every: 0.5,
        };
        let traj = integrate(
            &uniform(),
            &RuleConfig::hebbian(1.0).unwrap(),
            &solver,
            &OrderState::initial(10),
        )
        .unwrap();
        let t: Vec<f64> = traj.times().collect();
        assert_eq!(t.len(), 4);
        assert!(t.windows(2).all(|w| w[1] > w[0]));
        assert_abs_diff_eq!(*t.last().unwrap(), 1.05, epsilon = 1e-12);
    }

    #[test]
    fn hebbian_integration_tracks_closed_form() {
        let rule = RuleConfig::hebbian(1.0).unwrap();
        let solver = SolverConfig {
            dt: 1e-3,
            t_max: 10.0,
            sample_every: 0.5,
        };
        let traj = integrate(&uniform(), &rule, &solver, &OrderState::initial(10)).unwrap();
        for s in &traj.samples {
            let exact = hebbian_closed_form(s.t, 10, 0.49, 0.7, 1.0).unwrap();
            assert_abs_diff_eq!(s.r_j, exact.cos_j, epsilon = 1e-9);
            assert_abs_diff_eq!(s.l, exact.l, epsilon = 1e-9);
        }
    }

    #[test]
    fn uniform_symmetry_is_preserved() {
        let geom = uniform();
        for rule in [
            RuleConfig::hebbian(0.7).unwrap(),
            RuleConfig::perceptron(0.2).unwrap(),
        ] {
            let solver = SolverConfig {
                dt: 1e-2,
                t_max: 30.0,
                sample_every: 0.5,
            };
            let mut max_spread = 0.0f64;
            integrate_observed(
                &geom,
                &rule,
                &solver,
                &OrderState::initial(10),
                |_, state| {
                    let hi = state.r_bkj.iter().cloned().fold(f64::MIN, f64::max);
                    let lo = state.r_bkj.iter().cloned().fold(f64::MAX, f64::min);
                    max_spread = max_spread.max(hi - lo);
                },
            )
            .unwrap();
            assert!(max_spread < 1e-12, "spread {max_spread}");
        }
    }
}
