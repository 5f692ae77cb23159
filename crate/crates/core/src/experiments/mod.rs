//! Named, seed-reproducible experiments with pass/fail reports.
//!
//! Pathwise-uniqueness claims are probed by perturbation continuity (offset
//! δ → 0) and by law agreement across schemes: two exact solutions on one
//! grid coincide trivially, so neither is a proof of uniqueness.

mod acceptance;
mod comparison;
mod identities;
mod report;
mod solutions;

pub use acceptance::{run_acceptance, run_criterion, AcceptanceOptions, CriterionResult, CRITERIA};
pub use report::{Aggregate, Bound, Check, ExperimentReport, ResidualSummary};

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::local_time::EstimatorConfig;
use crate::paths::{SeedSpec, TimeGrid};

pub const DEFAULT_SEED: u64 = 20_240_917;
pub const DEFAULT_PATHS: usize = 4096;
pub const DEFAULT_LOG2_STEPS: u32 = 12;
/// Environment variable capping worker threads.
pub const THREADS_ENV: &str = "SEMILT_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentName {
    LtCalibration,
    OccupationFormula,
    GenTanaka,
    GenSkorokhod,
    ComparisonMain,
    ComparisonExcursion,
    ComparisonNorms,
    SupInfClosure,
    AbsReflection,
    Barlow,
    SkewLaw,
    TanakaNonuniqueness,
    PerturbedTanakaUniqueness,
    CorrelatedDrivers,
    ReflectedSde,
    OccupationZero,
    DriftComparison,
    MinmaxGap,
}

impl ExperimentName {
    pub const ALL: [ExperimentName; 18] = [
        Self::LtCalibration,
        Self::OccupationFormula,
        Self::GenTanaka,
        Self::GenSkorokhod,
        Self::ComparisonMain,
        Self::ComparisonExcursion,
        Self::ComparisonNorms,
        Self::SupInfClosure,
        Self::AbsReflection,
        Self::Barlow,
        Self::SkewLaw,
        Self::TanakaNonuniqueness,
        Self::PerturbedTanakaUniqueness,
        Self::CorrelatedDrivers,
        Self::ReflectedSde,
        Self::OccupationZero,
        Self::DriftComparison,
        Self::MinmaxGap,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::LtCalibration => "lt_calibration",
            Self::OccupationFormula => "occupation_formula",
            Self::GenTanaka => "gen_tanaka",
            Self::GenSkorokhod => "gen_skorokhod",
            Self::ComparisonMain => "comparison_main",
            Self::ComparisonExcursion => "comparison_excursion",
            Self::ComparisonNorms => "comparison_norms",
            Self::SupInfClosure => "sup_inf_closure",
            Self::AbsReflection => "abs_reflection",
            Self::Barlow => "barlow",
            Self::SkewLaw => "skew_law",
            Self::TanakaNonuniqueness => "tanaka_nonuniqueness",
            Self::PerturbedTanakaUniqueness => "perturbed_tanaka_uniqueness",
            Self::CorrelatedDrivers => "correlated_drivers",
            Self::ReflectedSde => "reflected_sde",
            Self::OccupationZero => "occupation_zero",
            Self::DriftComparison => "drift_comparison",
            Self::MinmaxGap => "minmax_gap",
        }
    }

    /// The result each experiment exercises.
    pub fn anchor(&self) -> &'static str {
        match self {
            Self::LtCalibration => {
                "local time of Brownian motion: E L_1 = E|B_1| for occupation, upcrossing and Tanaka estimators"
            }
            Self::OccupationFormula => "occupation times formula",
            Self::GenTanaka => "generalized Tanaka formula via the balayage formula",
            Self::GenSkorokhod => "generalized Skorokhod equation",
            Self::ComparisonMain => "comparison theorem: dL(X) absolutely continuous w.r.t. dL(Y), density in [0,1]",
            Self::ComparisonExcursion => {
                "comparison of local times under equal zero sets and excursion-maximum domination"
            }
            Self::ComparisonNorms => "local times of ordered norms of a vector semimartingale",
            Self::SupInfClosure => "sup and inf of two reflected solutions are solutions",
            Self::AbsReflection => "|X| solves the reflected equation when sigma and b are odd",
            Self::Barlow => "Barlow equation: phi(X) = B + L(phi(X))/2 is pathwise unique",
            Self::SkewLaw => "skew Brownian motion X = B + beta L(X), |beta| <= 1",
            Self::TanakaNonuniqueness => "Tanaka equation dX = sgn(X)dB: no pathwise uniqueness",
            Self::PerturbedTanakaUniqueness => "perturbed Tanaka equation dX = sgn(X)dM + dN: pathwise uniqueness",
            Self::CorrelatedDrivers => "correlated drivers: M = W/2, N = (W + eta V)/2 orthogonal",
            Self::ReflectedSde => "reflected equation dY = sigma dB + b dt + dL(Y)/2, Y >= 0",
            Self::OccupationZero => "no time spent at 0 when sigma(0) = 0 and b(0) != 0",
            Self::DriftComparison => "drift comparison: b1 < b2 implies X1 <= X2",
            Self::MinmaxGap => "minimal and maximal solutions from Lipschitz drift envelopes",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|n| n.name() == s).ok_or_else(|| Error::UnknownExperiment(s.to_string()))
    }

    /// Experiment-specific parameters and their defaults.
    pub fn params(&self) -> &'static [(&'static str, &'static str)] {
        match self {
            Self::LtCalibration => &[("level", "0")],
            Self::OccupationFormula => &[("bump_width", "0.1")],
            Self::GenTanaka => &[("z", "0.2,inf")],
            Self::GenSkorokhod => &[("phi", "one,affine")],
            Self::ComparisonMain => &[("scale", "0.5"), ("mode", "global")],
            Self::ComparisonExcursion => &[("damp", "0.7")],
            Self::ComparisonNorms => &[],
            Self::SupInfClosure => &[("sigma", "linear(1, 0.25)"), ("drift", "constant(-0.5)"), ("x0_high", "0.5")],
            Self::AbsReflection => &[("x0", "0.3")],
            Self::Barlow => &[("a", "1"), ("b", "2"), ("delta", "0.01")],
            Self::SkewLaw => &[("beta", "-0.5,0,0.5,1")],
            Self::TanakaNonuniqueness => &[("delta", "0.01,0.001,0.0001")],
            Self::PerturbedTanakaUniqueness => &[("delta", "0.01,0.001,0.0001"), ("lambda", "1"), ("eta", "2")],
            Self::CorrelatedDrivers => &[("eta", "2")],
            Self::ReflectedSde => &[("sigma", "constant(1)"), ("drift", "constant(0)")],
            Self::OccupationZero => &[("sigma", "sqrt_cap(1, 1, 0)"), ("drift", "constant(1)")],
            Self::DriftComparison => {
                &[("sigma", "sqrt_cap(1, 1, 0)"), ("drift", "sqrt_cap(1, 0.5, 1)"), ("gap", "0.25")]
            }
            Self::MinmaxGap => &[("sigma", "sqrt_cap(1, 1, 0)"), ("drift", "sqrt_cap(1, 0.5, 1)"), ("n_levels", "16")],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub name: ExperimentName,
    pub grid: TimeGrid,
    pub paths: usize,
    pub seed: u64,
    /// Multiplies every tolerance; values above 1 loosen.
    pub tol_scale: f64,
    /// Overrides of `name.params()`; other keys are rejected.
    pub params: BTreeMap<String, String>,
}

impl ExperimentSpec {
    pub fn new(name: ExperimentName) -> Self {
        Self {
            name,
            grid: TimeGrid::dyadic(1.0, DEFAULT_LOG2_STEPS).expect("default grid"),
            paths: DEFAULT_PATHS,
            seed: DEFAULT_SEED,
            tol_scale: 1.0,
            params: BTreeMap::new(),
        }
    }

    pub fn with_param(mut self, key: &str, value: impl Into<String>) -> Result<Self> {
        self.set_param(key, value)?;
        Ok(self)
    }

    pub fn set_param(&mut self, key: &str, value: impl Into<String>) -> Result<()> {
        if !self.name.params().iter().any(|(k, _)| *k == key) {
            return Err(Error::param(key, format!("not a parameter of {}", self.name.name())));
        }
        self.params.insert(key.to_string(), value.into());
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.paths == 0 {
            return Err(Error::param("paths", "must be at least 1"));
        }
        if !(self.tol_scale.is_finite() && self.tol_scale > 0.0) {
            return Err(Error::param("tol_scale", format!("must be positive, got {}", self.tol_scale)));
        }
        for k in self.params.keys() {
            if !self.name.params().iter().any(|(p, _)| p == k) {
                return Err(Error::param(k, format!("not a parameter of {}", self.name.name())));
            }
        }
        Ok(())
    }

    pub fn param(&self, key: &str) -> &str {
        if let Some(v) = self.params.get(key) {
            return v;
        }
        self.name
            .params()
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, d)| *d)
            .unwrap_or_else(|| panic!("{} has no parameter {key}", self.name.name()))
    }

    pub(crate) fn f64_param(&self, key: &str) -> Result<f64> {
        parse_f64(key, self.param(key))
    }

    pub(crate) fn f64_list(&self, key: &str) -> Result<Vec<f64>> {
        let v: Vec<f64> = self.param(key).split(',').map(|s| parse_f64(key, s.trim())).collect::<Result<_>>()?;
        if v.is_empty() {
            return Err(Error::param(key, "empty list"));
        }
        Ok(v)
    }

    pub(crate) fn coefficient(&self, key: &str) -> Result<crate::sde::Coefficient> {
        crate::sde::Coefficient::parse(self.param(key)).map_err(|e| Error::param(key, e.to_string()))
    }

    /// Everything needed to rerun, as strings.
    pub fn config_echo(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        m.insert("experiment".into(), self.name.name().into());
        m.insert("horizon".into(), format!("{}", self.grid.horizon()));
        m.insert("steps".into(), format!("{}", self.grid.steps()));
        m.insert("paths".into(), format!("{}", self.paths));
        m.insert("seed".into(), format!("{}", self.seed));
        m.insert("tol_scale".into(), format!("{}", self.tol_scale));
        for (k, _) in self.name.params() {
            m.insert(format!("param.{k}"), self.param(k).to_string());
        }
        m
    }

    /// Inverse of `config_echo`.
    pub fn from_echo(echo: &BTreeMap<String, String>) -> Result<Self> {
        let get = |k: &str| echo.get(k).ok_or_else(|| Error::param(k, "missing from config"));
        let name = ExperimentName::parse(get("experiment")?)?;
        let horizon = parse_f64("horizon", get("horizon")?)?;
        let steps = get("steps")?.parse::<usize>().map_err(|e| Error::param("steps", e.to_string()))?;
        let mut spec = Self::new(name);
        spec.grid = TimeGrid::new(horizon, steps)?;
        spec.paths =
            get("paths")?.parse().map_err(|e: std::num::ParseIntError| Error::param("paths", e.to_string()))?;
        spec.seed = get("seed")?.parse().map_err(|e: std::num::ParseIntError| Error::param("seed", e.to_string()))?;
        spec.tol_scale = parse_f64("tol_scale", get("tol_scale")?)?;
        for (k, v) in echo {
            match k.strip_prefix("param.") {
                Some(p) => spec.set_param(p, v.clone())?,
                None if ["experiment", "horizon", "steps", "paths", "seed", "tol_scale"].contains(&k.as_str()) => {}
                None => return Err(Error::param(k, "unknown config key")),
            }
        }
        spec.validate()?;
        Ok(spec)
    }
}

fn parse_f64(key: &str, s: &str) -> Result<f64> {
    let v: f64 = s.trim().parse().map_err(|_| Error::param(key, format!("`{s}` is not a number")))?;
    if v.is_nan() {
        return Err(Error::param(key, "NaN"));
    }
    Ok(v)
}

/// Per-run context handed to each experiment.
pub(crate) struct Ctx<'a> {
    pub spec: &'a ExperimentSpec,
    pub cfg: EstimatorConfig,
}

impl Ctx<'_> {
    pub fn grid(&self) -> TimeGrid {
        self.spec.grid
    }

    pub fn tol(&self) -> f64 {
        self.spec.tol_scale
    }

    /// `3·dt^{1/4}`, the per-path band for estimator-mediated identities.
    pub fn band(&self) -> f64 {
        3.0 * self.grid().dt().powf(0.25)
    }

    /// Seed of path `i` in sub-run `block`.
    pub fn seed(&self, block: usize, i: usize) -> SeedSpec {
        SeedSpec::new(self.spec.seed, ((block as u64) << 32) | i as u64)
    }

    /// Maps `f` over path indices in parallel; results come back in index
    /// order, so every reduction downstream is independent of threading.
    pub fn per_path<T: Send>(&self, block: usize, f: impl Fn(SeedSpec) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
        (0..self.spec.paths).into_par_iter().map(|i| f(self.seed(block, i))).collect()
    }
}

/// Accumulates checks and aggregates for one report.
#[derive(Default)]
pub(crate) struct ReportBuilder {
    pub checks: Vec<Check>,
    pub aggregates: BTreeMap<String, Aggregate>,
    pub notes: Vec<String>,
    pub residuals: Vec<f64>,
    pub residual_label: String,
}

impl ReportBuilder {
    pub fn new(label: &str) -> Self {
        Self { residual_label: label.to_string(), ..Default::default() }
    }

    pub fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn aggregate(&mut self, key: impl Into<String>, xs: &[f64]) -> Aggregate {
        let a = Aggregate::of(xs);
        self.aggregates.insert(key.into(), a);
        a
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    fn finish(self, spec: &ExperimentSpec) -> ExperimentReport {
        let pass = !self.checks.is_empty() && self.checks.iter().all(|c| c.pass);
        ExperimentReport {
            experiment: spec.name.name().to_string(),
            anchor: spec.name.anchor().to_string(),
            config: spec.config_echo(),
            seed: spec.seed,
            residual_label: self.residual_label,
            residual_summary: ResidualSummary::of(&self.residuals),
            aggregates: self.aggregates,
            checks: self.checks,
            notes: self.notes,
            pass,
            residuals: self.residuals,
        }
    }
}

/// Worker threads from `SEMILT_THREADS`, `None` when unset.
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::param(THREADS_ENV, format!("`{s}` is not a positive integer"))),
        },
    }
}

/// Runs with the thread cap from `SEMILT_THREADS`.
pub fn run(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    run_with_threads(spec, threads_from_env()?)
}

/// Runs on a dedicated pool of `threads` workers (all cores when `None`).
/// The report does not depend on the thread count.
pub fn run_with_threads(spec: &ExperimentSpec, threads: Option<usize>) -> Result<ExperimentReport> {
    spec.validate()?;
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        b = b.num_threads(n);
    }
    let pool = b.build().map_err(|e| Error::Numerical(format!("thread pool: {e}")))?;
    pool.install(|| {
        let ctx = Ctx { spec, cfg: EstimatorConfig::default() };
        let builder = match spec.name {
            ExperimentName::LtCalibration => identities::lt_calibration(&ctx),
            ExperimentName::OccupationFormula => identities::occupation_formula(&ctx),
            ExperimentName::GenTanaka => identities::gen_tanaka(&ctx),
            ExperimentName::GenSkorokhod => identities::gen_skorokhod(&ctx),
            ExperimentName::ComparisonMain => comparison::comparison_main(&ctx),
            ExperimentName::ComparisonExcursion => comparison::comparison_excursion(&ctx),
            ExperimentName::ComparisonNorms => comparison::comparison_norms(&ctx),
            ExperimentName::SupInfClosure => solutions::sup_inf_closure(&ctx),
            ExperimentName::AbsReflection => solutions::abs_reflection(&ctx),
            ExperimentName::Barlow => solutions::barlow(&ctx),
            ExperimentName::SkewLaw => solutions::skew_law(&ctx),
            ExperimentName::TanakaNonuniqueness => solutions::tanaka_nonuniqueness(&ctx),
            ExperimentName::PerturbedTanakaUniqueness => solutions::perturbed_tanaka_uniqueness(&ctx),
            ExperimentName::CorrelatedDrivers => solutions::correlated_drivers(&ctx),
            ExperimentName::ReflectedSde => solutions::reflected_sde(&ctx),
            ExperimentName::OccupationZero => solutions::occupation_zero(&ctx),
            ExperimentName::DriftComparison => solutions::drift_comparison(&ctx),
            ExperimentName::MinmaxGap => solutions::minmax_gap(&ctx),
        }?;
        Ok(builder.finish(spec))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_round_trips() {
        for n in ExperimentName::ALL {
            assert_eq!(ExperimentName::parse(n.name()).unwrap(), n);
            assert!(!n.anchor().is_empty());
        }
        assert!(matches!(ExperimentName::parse("nope"), Err(Error::UnknownExperiment(_))));
    }

    #[test]
    fn params_fail_closed() {
        let s = ExperimentSpec::new(ExperimentName::SkewLaw);
        assert!(s.clone().with_param("beta", "0.5").is_ok());
        assert!(s.clone().with_param("z", "inf").is_err());
        let mut bad = s.clone();
        bad.params.insert("zz".into(), "1".into());
        assert!(bad.validate().is_err());
    }

    #[test]
    fn echo_round_trips() {
        for n in ExperimentName::ALL {
            let mut s = ExperimentSpec::new(n);
            s.seed = 99;
            s.paths = 17;
            s.tol_scale = 1.5;
            let e = s.config_echo();
            let back = ExperimentSpec::from_echo(&e).unwrap();
            assert_eq!(back.config_echo(), e);
        }
    }

    #[test]
    fn list_params() {
        let s = ExperimentSpec::new(ExperimentName::GenTanaka);
        assert_eq!(s.f64_list("z").unwrap(), vec![0.2, f64::INFINITY]);
        assert!(s.with_param("z", "abc").unwrap().f64_list("z").is_err());
    }
}
