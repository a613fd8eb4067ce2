//! On-line learning of a nonlinear perceptron student from an ensemble of
//! imperfect teachers that sit around a fixed true teacher.
//!
//! The crate has four parts:
//!
//! - [`ensemble`]: generation of the true teacher, the ensemble teachers
//!   (sign-flipped copies of the true teacher with prescribed overlaps) and
//!   the initial student, plus direction-cosine measurement.
//! - [`theory`]: the macroscopic description in the thermodynamic limit.
//!   Generalization error, Gaussian sample averages for Hebbian and
//!   perceptron learning, the order-parameter ODEs and their RK4 integration,
//!   Hebbian closed forms and steady states.
//! - [`simulator`]: finite-N Monte Carlo realization of the same process.
//! - [`oracle`]: direct sampling of correlated Gaussian potentials, used to
//!   check the closed-form sample averages independently of the theory code.

pub mod ensemble;
mod error;
pub mod oracle;
pub mod rng;
pub mod simulator;
pub mod theory;

pub use crate::ensemble::{EnsembleSpec, OverlapReport, WeightVector};
pub use crate::error::{Error, Result};
pub use crate::simulator::{Schedule, SimConfig};
pub use crate::theory::{
    GeometryParams, LearningRule, OrderState, RuleConfig, SolverConfig, Trajectory,
    TrajectorySample,
};
