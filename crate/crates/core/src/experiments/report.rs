use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::stats::{quantile_sorted, Summary};

/// A declared bound. Effective limits are scaled by `tol_scale` so that
/// loosening the scale can only turn a failure into a pass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Bound {
    AtMost {
        limit: f64,
    },
    AtLeast {
        limit: f64,
    },
    Within {
        lo: f64,
        hi: f64,
    },
    /// A boolean property; `value` is 1 or 0.
    Holds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: Bound,
    /// Bound after applying `tol_scale`.
    pub effective: Bound,
    pub pass: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, value: f64, bound: Bound, tol_scale: f64) -> Self {
        let effective = match bound {
            Bound::AtMost { limit } => {
                Bound::AtMost { limit: if limit >= 0.0 { limit * tol_scale } else { limit / tol_scale } }
            }
            Bound::AtLeast { limit } => {
                Bound::AtLeast { limit: if limit >= 0.0 { limit / tol_scale } else { limit * tol_scale } }
            }
            Bound::Within { lo, hi } => {
                let (c, h) = (0.5 * (lo + hi), 0.5 * (hi - lo) * tol_scale);
                Bound::Within { lo: c - h, hi: c + h }
            }
            Bound::Holds => Bound::Holds,
        };
        let pass = Self::evaluate(value, effective);
        Check { name: name.into(), value, bound, effective, pass }
    }

    pub fn at_most(name: impl Into<String>, value: f64, limit: f64, tol_scale: f64) -> Self {
        Self::new(name, value, Bound::AtMost { limit }, tol_scale)
    }

    pub fn at_least(name: impl Into<String>, value: f64, limit: f64, tol_scale: f64) -> Self {
        Self::new(name, value, Bound::AtLeast { limit }, tol_scale)
    }

    pub fn within(name: impl Into<String>, value: f64, lo: f64, hi: f64, tol_scale: f64) -> Self {
        Self::new(name, value, Bound::Within { lo, hi }, tol_scale)
    }

    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Self::new(name, if ok { 1.0 } else { 0.0 }, Bound::Holds, 1.0)
    }

    fn evaluate(value: f64, b: Bound) -> bool {
        match b {
            Bound::AtMost { limit } => value <= limit,
            Bound::AtLeast { limit } => value >= limit,
            Bound::Within { lo, hi } => lo <= value && value <= hi,
            Bound::Holds => value == 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualSummary {
    pub median: f64,
    pub p95: f64,
    pub max: f64,
}

impl ResidualSummary {
    pub fn of(xs: &[f64]) -> Self {
        let mut v = xs.to_vec();
        v.sort_by(f64::total_cmp);
        if v.is_empty() {
            return ResidualSummary { median: f64::NAN, p95: f64::NAN, max: f64::NAN };
        }
        ResidualSummary { median: quantile_sorted(&v, 0.5), p95: quantile_sorted(&v, 0.95), max: v[v.len() - 1] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

impl From<Summary> for Aggregate {
    fn from(s: Summary) -> Self {
        Aggregate { mean: s.mean, stderr: s.stderr(), n: s.n }
    }
}

impl Aggregate {
    pub fn of(xs: &[f64]) -> Self {
        Summary::of(xs).into()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub anchor: String,
    /// Every setting needed to rerun, as strings (`seed`, `paths`, grid, params).
    pub config: BTreeMap<String, String>,
    pub seed: u64,
    /// Meaning of the per-path residual column.
    pub residual_label: String,
    pub residual_summary: ResidualSummary,
    pub aggregates: BTreeMap<String, Aggregate>,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
    pub pass: bool,
    #[serde(skip)]
    pub residuals: Vec<f64>,
}

impl ExperimentReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// `path_index,residual` with 17 significant digits.
    pub fn residual_csv(&self) -> String {
        let mut s = format!("path_index,{}\n", self.residual_label);
        for (i, r) in self.residuals.iter().enumerate() {
            let _ = writeln!(s, "{i},{r:.16e}");
        }
        s
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn residual_summary_quantiles() {
        let xs: Vec<f64> = (0..=100).map(f64::from).collect();
        let s = ResidualSummary::of(&xs);
        assert_eq!((s.median, s.p95, s.max), (50.0, 95.0, 100.0));
        assert!(ResidualSummary::of(&[]).median.is_nan());
    }

    #[test]
    fn holds_ignores_scale() {
        assert!(Check::holds("x", true).pass);
        assert!(!Check::holds("x", false).pass);
    }

    proptest! {
        #[test]
        fn loosening_never_fails_a_pass(v in -10.0f64..10.0, a in -5.0f64..5.0, w in 0.0f64..5.0, s in 1.0f64..4.0, t in 1.0f64..4.0) {
            let (lo, hi) = (s, s * t);
            for (b1, b2) in [
                (Check::at_most("m", v, a, lo), Check::at_most("m", v, a, hi)),
                (Check::at_least("l", v, a, lo), Check::at_least("l", v, a, hi)),
                (Check::within("w", v, a, a + w, lo), Check::within("w", v, a, a + w, hi)),
            ] {
                prop_assert!(!b1.pass || b2.pass);
            }
        }
    }
}
