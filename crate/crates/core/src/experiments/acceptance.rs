use serde::Serialize;

use super::{run_with_threads, ExperimentName, ExperimentReport, ExperimentSpec};
use crate::error::Result;
use crate::paths::TimeGrid;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub title: &'static str,
    pub pass: bool,
    pub detail: String,
}

/// Scale of an acceptance run; the defaults are T = 1, dt = 2⁻¹², 4096 paths.
#[derive(Debug, Clone, PartialEq)]
pub struct AcceptanceOptions {
    pub grid: TimeGrid,
    pub paths: usize,
    pub seed: u64,
    pub tol_scale: f64,
    pub threads: Option<usize>,
}

impl Default for AcceptanceOptions {
    fn default() -> Self {
        Self {
            grid: TimeGrid::dyadic(1.0, super::DEFAULT_LOG2_STEPS).expect("default grid"),
            paths: super::DEFAULT_PATHS,
            seed: super::DEFAULT_SEED,
            tol_scale: 1.0,
            threads: None,
        }
    }
}

pub const CRITERIA: [(u8, &str); 12] = [
    (1, "local-time calibration"),
    (2, "occupation formula"),
    (3, "generalized Tanaka"),
    (4, "generalized Skorokhod"),
    (5, "comparison theorem"),
    (6, "excursion comparison"),
    (7, "skew law"),
    (8, "reflected SDE"),
    (9, "Barlow identity"),
    (10, "uniqueness discrimination"),
    (11, "correlated drivers"),
    (12, "determinism"),
];

impl AcceptanceOptions {
    fn spec(&self, name: ExperimentName, params: &[(&str, &str)]) -> Result<ExperimentSpec> {
        let mut s = ExperimentSpec::new(name);
        s.grid = self.grid;
        s.paths = self.paths;
        s.seed = self.seed;
        s.tol_scale = self.tol_scale;
        for (k, v) in params {
            s.set_param(k, *v)?;
        }
        Ok(s)
    }

    fn run(&self, name: ExperimentName, params: &[(&str, &str)]) -> Result<ExperimentReport> {
        run_with_threads(&self.spec(name, params)?, self.threads)
    }
}

fn summarize(reports: &[ExperimentReport]) -> (bool, String) {
    let pass = reports.iter().all(|r| r.pass);
    let parts: Vec<String> = reports
        .iter()
        .flat_map(|r| {
            r.checks.iter().map(move |c| {
                format!(
                    "{}{}={:.4}{}",
                    if reports.len() > 1 { format!("{}.", r.experiment) } else { String::new() },
                    c.name,
                    c.value,
                    if c.pass { "" } else { " (FAIL)" }
                )
            })
        })
        .collect();
    (pass, parts.join(", "))
}

/// Runs one acceptance criterion.
pub fn run_criterion(id: u8, opts: &AcceptanceOptions) -> Result<CriterionResult> {
    use ExperimentName as E;
    let title = CRITERIA.iter().find(|c| c.0 == id).map(|c| c.1).unwrap_or("unknown");
    let reports = match id {
        1 => vec![opts.run(E::LtCalibration, &[])?],
        2 => vec![opts.run(E::OccupationFormula, &[])?],
        3 => vec![opts.run(E::GenTanaka, &[("z", "0.2,inf")])?],
        4 => vec![opts.run(E::GenSkorokhod, &[("phi", "one")])?],
        5 => vec![opts.run(E::ComparisonMain, &[("scale", "0.5")])?],
        6 => vec![opts.run(E::ComparisonExcursion, &[("damp", "0.7")])?],
        7 => vec![opts.run(E::SkewLaw, &[("beta", "-0.5,0,0.5,1")])?],
        8 => vec![opts.run(E::ReflectedSde, &[])?],
        9 => vec![opts.run(E::Barlow, &[])?],
        10 => vec![
            opts.run(E::PerturbedTanakaUniqueness, &[("lambda", "1"), ("delta", "0.01,0.001,0.0001")])?,
            opts.run(E::TanakaNonuniqueness, &[("delta", "0.01,0.001,0.0001")])?,
        ],
        11 => vec![opts.run(E::CorrelatedDrivers, &[("eta", "2")])?],
        12 => return determinism(opts),
        _ => return Err(crate::error::Error::param("criterion", format!("{id} is not in 1..=12"))),
    };
    let (pass, detail) = summarize(&reports);
    Ok(CriterionResult { id, title, pass, detail })
}

fn determinism(opts: &AcceptanceOptions) -> Result<CriterionResult> {
    let (mut rerun, mut shards) = (true, true);
    let mut names = Vec::new();
    for (name, params) in
        [(ExperimentName::SkewLaw, &[("beta", "0.5")][..]), (ExperimentName::ComparisonNorms, &[][..])]
    {
        let spec = opts.spec(name, params)?;
        let a = run_with_threads(&spec, opts.threads)?;
        let b = run_with_threads(&spec, opts.threads)?;
        let one = run_with_threads(&spec, Some(1))?;
        let four = run_with_threads(&spec, Some(4))?;
        rerun &= a.to_json() == b.to_json() && a.residual_csv() == b.residual_csv();
        shards &= a.to_json() == one.to_json()
            && one.to_json() == four.to_json()
            && one.residual_csv() == four.residual_csv();
        names.push(name.name());
    }
    Ok(CriterionResult {
        id: 12,
        title: "determinism",
        pass: rerun && shards,
        detail: format!("{}: rerun byte-identical={rerun}, 1 vs 4 threads identical={shards}", names.join(", ")),
    })
}

/// Runs criteria 1–12 in order, calling `each` as results arrive.
pub fn run_acceptance(
    opts: &AcceptanceOptions,
    mut each: impl FnMut(&CriterionResult),
) -> Result<Vec<CriterionResult>> {
    let mut out = Vec::with_capacity(CRITERIA.len());
    for (id, _) in CRITERIA {
        let r = run_criterion(id, opts)?;
        each(&r);
        out.push(r);
    }
    Ok(out)
}
