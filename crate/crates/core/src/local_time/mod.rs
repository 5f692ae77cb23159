//! Local-time estimators and the diagnostics built on them.

mod balayage;
mod checks;
mod domination;
mod estimators;

pub use balayage::{balayage_integral, balayage_transform, gamma_indices, truncation_process};
pub use checks::{
    occupation_formula_check, right_left_gap, support_check, tanaka_level_field, LevelGrid, OccupationCheck,
};
pub use domination::{
    domination_diagnostic, domination_diagnostic_masked, excursion_comparison, rn_liminf, DominationMode,
    DominationReport,
};
pub use estimators::{estimate, lt_occupation, lt_reflected, lt_tanaka, lt_upcrossing, TanakaSide, OVERSHOOT_KAPPA};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::paths::TimeGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorTag {
    Occupation,
    Upcrossing,
    TanakaRight,
    TanakaLeft,
    TanakaSymmetric,
    /// Push tallied by a reflecting scheme, not an estimator of a given path.
    SchemeTally,
}

impl EstimatorTag {
    pub const ALL: [EstimatorTag; 5] = [
        EstimatorTag::Occupation,
        EstimatorTag::Upcrossing,
        EstimatorTag::TanakaRight,
        EstimatorTag::TanakaLeft,
        EstimatorTag::TanakaSymmetric,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            EstimatorTag::Occupation => "occupation",
            EstimatorTag::Upcrossing => "upcrossing",
            EstimatorTag::TanakaRight => "tanaka_right",
            EstimatorTag::TanakaLeft => "tanaka_left",
            EstimatorTag::TanakaSymmetric => "tanaka_symmetric",
            EstimatorTag::SchemeTally => "scheme_tally",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.name() == s)
    }
}

/// Cumulative local-time estimate `t ↦ L̂_t^a` on the path's grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalTimeCurve {
    pub grid: TimeGrid,
    pub level: f64,
    pub values: Vec<f64>,
    pub tag: EstimatorTag,
}

impl LocalTimeCurve {
    pub fn terminal(&self) -> f64 {
        *self.values.last().expect("curve has N+1 values")
    }

    pub fn at(&self, k: usize) -> f64 {
        self.values[k]
    }

    /// Increment over grid indices `[a, b]`.
    pub fn increment(&self, a: usize, b: usize) -> f64 {
        self.values[b] - self.values[a]
    }
}

/// Local-time estimate at level 0 used where the right local time `L^0` is meant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocalTimeSource {
    Estimator(EstimatorTag),
    /// `lt_reflected`: right Tanaka residual at a small positive offset.
    OffsetRight,
}

impl LocalTimeSource {
    pub fn curve(&self, path: &crate::paths::SamplePath, cfg: &EstimatorConfig) -> Result<LocalTimeCurve> {
        match self {
            LocalTimeSource::Estimator(tag) => estimate(path, 0.0, *tag, cfg),
            LocalTimeSource::OffsetRight => Ok(lt_reflected(path, cfg)),
        }
    }
}

/// Bandwidth ε, either relative to the grid (`c·√dt`) or absolute.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Bandwidth {
    Relative(f64),
    Absolute(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub bandwidth: Bandwidth,
    /// Widen the upcrossing band by the expected discrete-monitoring overshoot
    /// at both edges. Off gives the raw `2ε·count`.
    pub upcrossing_overshoot: bool,
    /// Offset `h = c·σ̂·√dt` used by `lt_reflected`.
    pub reflect_offset_c: f64,
    /// Equal windows for domination diagnostics.
    pub windows: usize,
    /// Violation tolerance in units of ε.
    pub violation_c: f64,
    /// Grid points averaged by `rn_liminf`.
    pub rn_points: usize,
    /// Estimator used by the domination diagnostics.
    pub domination_estimator: LocalTimeSource,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            bandwidth: Bandwidth::Relative(1.0),
            upcrossing_overshoot: true,
            reflect_offset_c: 2.0,
            windows: 32,
            violation_c: 3.0,
            rn_points: 8,
            domination_estimator: LocalTimeSource::OffsetRight,
        }
    }
}

impl EstimatorConfig {
    pub fn with_bandwidth(mut self, b: Bandwidth) -> Self {
        self.bandwidth = b;
        self
    }

    pub fn raw_upcrossings(mut self) -> Self {
        self.upcrossing_overshoot = false;
        self
    }

    pub fn epsilon(&self, grid: &TimeGrid) -> Result<f64> {
        let eps = match self.bandwidth {
            Bandwidth::Relative(c) => c * grid.sqrt_dt(),
            Bandwidth::Absolute(e) => e,
        };
        if eps.is_finite() && eps > 0.0 {
            Ok(eps)
        } else {
            Err(Error::param("bandwidth", format!("epsilon must be positive, got {eps}")))
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.bandwidth {
            Bandwidth::Relative(c) | Bandwidth::Absolute(c) if !(c.is_finite() && c > 0.0) => {
                return Err(Error::param("bandwidth", format!("must be positive, got {c}")));
            }
            _ => {}
        }
        if self.windows == 0 {
            return Err(Error::param("windows", "must be at least 1"));
        }
        if !(self.violation_c >= 0.0) {
            return Err(Error::param("violation_c", "must be nonnegative"));
        }
        if self.rn_points == 0 {
            return Err(Error::param("rn_points", "must be at least 1"));
        }
        if !(self.reflect_offset_c >= 0.0) {
            return Err(Error::param("reflect_offset_c", "must be nonnegative"));
        }
        Ok(())
    }
}
