//! Discrete-time solvers for the SDE families with local-time terms.

mod barlow;
mod coeff;
mod envelope;
mod solvers;
mod tanaka;

pub use barlow::{barlow_phi, barlow_residual, barlow_sigma, barlow_solve};
pub use coeff::{sgn, Coefficient, CoefficientProperties, CoefficientSpec};
pub use envelope::{lipschitz_envelope, min_max_solutions, Envelope, EnvelopeKind, EnvelopeLadder, MinMaxResult};
pub use solvers::{
    euler_maruyama, local_time_drift_solver, local_time_drift_solver_with, reflected_euler, skew_walk,
    skew_walk_terminal_smoothed,
};
pub use tanaka::{mn_transform, perturbed_tanaka_solver};

use serde::{Deserialize, Serialize};

use crate::local_time::LocalTimeCurve;
use crate::paths::SamplePath;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Euler,
    ReflectedEuler,
    ScaleTransform,
    SkewWalk,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Euler => "euler",
            Scheme::ReflectedEuler => "reflected_euler",
            Scheme::ScaleTransform => "scale_transform",
            Scheme::SkewWalk => "skew_walk",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Scheme::Euler, Scheme::ReflectedEuler, Scheme::ScaleTransform, Scheme::SkewWalk]
            .into_iter()
            .find(|x| x.name() == s)
    }
}

/// State path of a solver, with the local time it tallied when the scheme
/// produces one. The driving increments are kept on the state path.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionPath {
    pub state: SamplePath,
    pub local_time: Option<LocalTimeCurve>,
}

impl SolutionPath {
    pub fn terminal(&self) -> f64 {
        self.state.terminal()
    }
}
