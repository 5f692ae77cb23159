//! Path families for `simulate` and `localtime`, and the shared CSV layout.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use semilt::local_time::{estimate, lt_reflected, EstimatorConfig, EstimatorTag, LocalTimeCurve};
use semilt::measure::{ScaleFunction, SignedMeasure};
use semilt::paths::{sample_brownian, sample_brownian_channel, SamplePath, SeedSpec, TimeGrid};
use semilt::sde::{
    barlow_solve, euler_maruyama, local_time_drift_solver_with, perturbed_tanaka_solver, reflected_euler, skew_walk,
    Coefficient, CoefficientSpec,
};

/// Family name, accepted parameters with defaults.
pub const FAMILIES: [(&str, &[(&str, &str)]); 7] = [
    ("brownian", &[]),
    ("euler", &[("sigma", "constant(1)"), ("drift", "constant(0)"), ("x0", "0")]),
    ("reflected", &[("sigma", "constant(1)"), ("drift", "constant(0)"), ("x0", "0")]),
    ("skew_walk", &[("beta", "0")]),
    ("local_time_drift", &[("measure", "atom(0, 0.5)"), ("sigma", "constant(1)"), ("x0", "0")]),
    ("barlow", &[("a", "1"), ("b", "2"), ("x0", "0")]),
    ("perturbed_tanaka", &[("lambda", "1"), ("x0", "0")]),
];

pub const ESTIMATORS: [&str; 6] =
    ["occupation", "upcrossing", "tanaka_right", "tanaka_left", "tanaka_symmetric", "reflected"];

fn family_params(family: &str) -> Result<&'static [(&'static str, &'static str)], String> {
    FAMILIES
        .iter()
        .find(|f| f.0 == family)
        .map(|f| f.1)
        .ok_or_else(|| format!("unknown family `{family}`; one of {}", FAMILIES.map(|f| f.0).join(", ")))
}

/// Looks up parameters for `family`, rejecting keys it does not take.
/// `extra` names keys consumed by the caller.
pub struct FamilyParams<'a> {
    family: &'a str,
    given: &'a BTreeMap<String, String>,
    defaults: &'static [(&'static str, &'static str)],
}

impl<'a> FamilyParams<'a> {
    pub fn new(family: &'a str, given: &'a BTreeMap<String, String>, extra: &[&str]) -> Result<Self, String> {
        let defaults = family_params(family)?;
        for k in given.keys() {
            if !defaults.iter().any(|(d, _)| d == k) && !extra.contains(&k.as_str()) {
                return Err(format!("`{k}` is not a parameter of {family}"));
            }
        }
        Ok(Self { family, given, defaults })
    }

    fn get(&self, key: &str) -> &str {
        self.given
            .get(key)
            .map(String::as_str)
            .or_else(|| self.defaults.iter().find(|(k, _)| *k == key).map(|(_, v)| *v))
            .expect("parameter declared for family")
    }

    fn f64(&self, key: &str) -> Result<f64, String> {
        let v = self.get(key);
        v.trim()
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| format!("{key}: `{v}` is not a finite number"))
    }

    fn coefficient(&self, key: &str) -> Result<Coefficient, String> {
        Coefficient::parse(self.get(key)).map_err(|e| format!("{key}: {e}"))
    }
}

/// Path generator for one family, with literals parsed once.
pub enum Family {
    Brownian,
    Euler(CoefficientSpec, f64),
    Reflected(CoefficientSpec, f64),
    SkewWalk(f64),
    LocalTimeDrift(ScaleFunction, Coefficient, f64),
    Barlow(f64, f64, f64),
    PerturbedTanaka(f64, f64),
}

impl Family {
    pub fn build(p: &FamilyParams) -> Result<Self, String> {
        let coeffs = || -> Result<CoefficientSpec, String> {
            Ok(CoefficientSpec::new(p.coefficient("sigma")?, p.coefficient("drift")?))
        };
        Ok(match p.family {
            "brownian" => Family::Brownian,
            "euler" => Family::Euler(coeffs()?, p.f64("x0")?),
            "reflected" => Family::Reflected(coeffs()?, p.f64("x0")?),
            "skew_walk" => Family::SkewWalk(p.f64("beta")?),
            "local_time_drift" => {
                let m = SignedMeasure::parse(p.get("measure")).map_err(|e| format!("measure: {e}"))?;
                let scale = ScaleFunction::new(&m).map_err(|e| format!("measure: {e}"))?;
                Family::LocalTimeDrift(scale, p.coefficient("sigma")?, p.f64("x0")?)
            }
            "barlow" => Family::Barlow(p.f64("a")?, p.f64("b")?, p.f64("x0")?),
            "perturbed_tanaka" => Family::PerturbedTanaka(p.f64("lambda")?, p.f64("x0")?),
            f => return Err(format!("unknown family `{f}`")),
        })
    }

    pub fn sample(&self, grid: TimeGrid, seed: SeedSpec) -> semilt::Result<SamplePath> {
        let b = || sample_brownian(grid, seed);
        Ok(match self {
            Family::Brownian => b()?,
            Family::Euler(c, x0) => euler_maruyama(c, &b()?, *x0)?.state,
            Family::Reflected(c, x0) => reflected_euler(c, &b()?, *x0)?.state,
            Family::SkewWalk(beta) => skew_walk(*beta, grid, seed)?.state,
            Family::LocalTimeDrift(s, sigma, x0) => local_time_drift_solver_with(s, sigma, &b()?, *x0)?.state,
            Family::Barlow(a, bb, x0) => barlow_solve(*a, *bb, &b()?, *x0)?.state,
            Family::PerturbedTanaka(lambda, x0) => {
                let n = sample_brownian_channel(grid, seed, 1)?.scale(*lambda)?;
                perturbed_tanaka_solver(&Coefficient::sign(), &b()?, &n, *x0)?.state
            }
        })
    }
}

pub fn local_time(path: &SamplePath, estimator: &str, level: f64) -> Result<LocalTimeCurve, String> {
    let cfg = EstimatorConfig::default();
    if estimator == "reflected" {
        if level != 0.0 {
            return Err("the reflected estimator works at level 0 only".into());
        }
        return Ok(lt_reflected(path, &cfg));
    }
    let tag = EstimatorTag::parse(estimator)
        .ok_or_else(|| format!("unknown estimator `{estimator}`; one of {}", ESTIMATORS.join(", ")))?;
    estimate(path, level, tag, &cfg).map_err(|e| e.to_string())
}

/// Header `time_index,time,path_0,…`, one row per grid index, 17 significant digits.
pub fn columns_csv(grid: &TimeGrid, columns: &[Vec<f64>]) -> String {
    let mut s = String::from("time_index,time");
    for i in 0..columns.len() {
        let _ = write!(s, ",path_{i}");
    }
    s.push('\n');
    for k in 0..grid.len() {
        let _ = write!(s, "{k},{:.16e}", grid.time(k));
        for c in columns {
            let _ = write!(s, ",{:.16e}", c[k]);
        }
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_family_builds_and_samples() {
        let g = TimeGrid::new(1.0, 64).unwrap();
        let none = BTreeMap::new();
        for (f, _) in FAMILIES {
            let fam = Family::build(&FamilyParams::new(f, &none, &[]).unwrap()).unwrap();
            let p = fam.sample(g, SeedSpec::new(1, 0)).unwrap();
            assert_eq!(p.values().len(), 65, "{f}");
        }
    }

    #[test]
    fn foreign_parameters_are_rejected() {
        let mut given = BTreeMap::new();
        given.insert("beta".to_string(), "0.5".to_string());
        assert!(FamilyParams::new("euler", &given, &[]).is_err());
        assert!(FamilyParams::new("skew_walk", &given, &[]).is_ok());
        assert!(FamilyParams::new("nope", &BTreeMap::new(), &[]).is_err());
    }

    #[test]
    fn csv_layout() {
        let g = TimeGrid::new(1.0, 2).unwrap();
        let s = columns_csv(&g, &[vec![0.0, 0.5, 1.0]]);
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "time_index,time,path_0");
        assert_eq!(lines[2], "1,5.0000000000000000e-1,5.0000000000000000e-1");
    }

    #[test]
    fn estimators_resolve() {
        let g = TimeGrid::new(1.0, 64).unwrap();
        let p = sample_brownian(g, SeedSpec::new(2, 0)).unwrap();
        for e in ESTIMATORS {
            assert!(local_time(&p, e, 0.0).is_ok(), "{e}");
        }
        assert!(local_time(&p, "reflected", 0.5).is_err());
        assert!(local_time(&p, "guess", 0.0).is_err());
    }
}
