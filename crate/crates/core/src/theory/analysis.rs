use super::Trajectory;
use crate::{Error, Result};

/// Slope threshold `|d eps_g / dt|` for declaring a steady state.
pub const STEADY_SLOPE: f64 = 1e-7;
/// Time window over which the slope must stay below [`STEADY_SLOPE`].
pub const STEADY_WINDOW: f64 = 1.0;

/// Grid minimum of `eps_g` as `(t_min, eps_min)`; ties go to the earliest time.
pub fn find_min_error(traj: &Trajectory) -> Result<(f64, f64)> {
    let first = traj.samples.first().ok_or(Error::EmptyTrajectory)?;
    let mut best = (first.t, first.eps_g);
    for s in &traj.samples[1..] {
        if s.eps_g < best.1 {
            best = (s.t, s.eps_g);
        }
    }
    Ok(best)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SteadyState {
    pub t: f64,
    pub eps_g: f64,
}

/// First time at which `|d eps_g / dt|` (finite differences between samples)
/// has stayed below `slope` for a full `window`. Returns the sample at the end
/// of that window, or `None` if the trajectory never settles.
pub fn detect_steady_state(traj: &Trajectory, slope: f64, window: f64) -> Option<SteadyState> {
    let s = &traj.samples;
    let mut start: Option<usize> = None;
    for i in 1..s.len() {
        let rate = (s[i].eps_g - s[i - 1].eps_g) / (s[i].t - s[i - 1].t);
        if rate.abs() < slope {
            let from = *start.get_or_insert(i - 1);
            if s[i].t - s[from].t >= window - 1e-12 {
                return Some(SteadyState {
                    t: s[i].t,
                    eps_g: s[i].eps_g,
                });
            }
        } else {
            start = None;
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::theory::TrajectorySample;

    fn traj(points: &[(f64, f64)]) -> Trajectory {
        Trajectory {
            samples: points
                .iter()
                .map(|&(t, eps_g)| TrajectorySample {
                    t,
                    r_j: 0.0,
                    r_bkj_mean: 0.0,
                    l: 1.0,
                    eps_g,
                    eps_empirical: None,
                })
                .collect(),
        }
    }

    #[test]
    fn empty_trajectory_is_an_error() {
        assert_eq!(
            find_min_error(&Trajectory::default()),
            Err(Error::EmptyTrajectory)
        );
    }

    #[test]
    fn constant_trajectory_picks_first_sample() {
        let t = traj(&[(0.0, 0.3), (1.0, 0.3), (2.0, 0.3)]);
        assert_eq!(find_min_error(&t).unwrap(), (0.0, 0.3));
    }

    #[test]
    fn interior_minimum() {
        let t = traj(&[(0.0, 0.5), (1.0, 0.2), (2.0, 0.1), (3.0, 0.25)]);
        assert_eq!(find_min_error(&t).unwrap(), (2.0, 0.1));
    }

    #[test]
    fn steady_detection() {
        let t = traj(&[
            (0.0, 0.5),
            (0.5, 0.3),
            (1.0, 0.2),
            (1.5, 0.2),
            (2.0, 0.2),
            (2.5, 0.2),
        ]);
        let s = detect_steady_state(&t, STEADY_SLOPE, STEADY_WINDOW).unwrap();
        assert_eq!(s.t, 2.0);
        assert_eq!(s.eps_g, 0.2);
        let moving = traj(&[(0.0, 0.5), (1.0, 0.4), (2.0, 0.3)]);
        assert!(detect_steady_state(&moving, STEADY_SLOPE, STEADY_WINDOW).is_none());
    }
}
