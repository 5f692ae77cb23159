use serde::{Deserialize, Serialize};

use super::{lt_tanaka, EstimatorConfig, LocalTimeCurve, TanakaSide};
use crate::error::{Error, Result};
use crate::paths::SamplePath;

/// `L̂^{a+}_T − L̂^{a−}_T` from the two Tanaka residuals.
pub fn right_left_gap(path: &SamplePath, level: f64, cfg: &EstimatorConfig) -> f64 {
    lt_tanaka(path, level, TanakaSide::Right, cfg).terminal() - lt_tanaka(path, level, TanakaSide::Left, cfg).terminal()
}

/// Uniform grid of levels `lo, lo+Δa, …, hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelGrid {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl LevelGrid {
    pub fn new(lo: f64, hi: f64, count: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && hi > lo) || count < 2 {
            return Err(Error::param("levels", format!("need lo < hi and count ≥ 2, got [{lo}, {hi}] x {count}")));
        }
        Ok(Self { lo, hi, count })
    }

    /// Levels spanning the path range padded by one spacing on each side.
    pub fn covering(path: &SamplePath, spacing: f64) -> Result<Self> {
        let (mn, mx) = path.values().iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        let lo = mn - spacing;
        let count = ((mx + spacing - lo) / spacing).ceil() as usize + 1;
        Self::new(lo, lo + spacing * (count - 1) as f64, count)
    }

    pub fn spacing(&self) -> f64 {
        (self.hi - self.lo) / (self.count - 1) as f64
    }

    pub fn level(&self, i: usize) -> f64 {
        self.lo + i as f64 * self.spacing()
    }
}

/// Terminal symmetric Tanaka local time at every level of `levels`, in
/// `O(N + levels)` via difference arrays over the level index.
pub fn tanaka_level_field(path: &SamplePath, levels: &LevelGrid) -> Vec<f64> {
    let v = path.values();
    let n = levels.count;
    let da = levels.spacing();
    // first level index strictly above x (levels a_i < x are those with i < idx)
    let above = |x: f64| -> usize {
        let r = ((x - levels.lo) / da).ceil();
        if r <= 0.0 {
            0
        } else {
            (r as usize).min(n)
        }
    };
    // Σ_k 1{X_k > a} ΔX_k and Σ_k 1{X_k < a} ΔX_k as functions of a
    let mut gt = vec![0.0; n + 1];
    let mut lt = vec![0.0; n + 1];
    for k in 0..v.len() - 1 {
        let dx = v[k + 1] - v[k];
        // levels a_i < X_k: i in [0, above(X_k)) but exclude a_i == X_k
        let mut i_gt = above(v[k]);
        while i_gt > 0 && levels.level(i_gt - 1) >= v[k] {
            i_gt -= 1;
        }
        gt[0] += dx;
        gt[i_gt] -= dx;
        // levels a_i > X_k
        let mut i_lt = above(v[k]);
        while i_lt < n && levels.level(i_lt) <= v[k] {
            i_lt += 1;
        }
        lt[i_lt] += dx;
    }
    let (x0, xt) = (v[0], v[v.len() - 1]);
    let mut out = Vec::with_capacity(n);
    let (mut sg, mut sl) = (0.0, 0.0);
    for i in 0..n {
        sg += gt[i];
        sl += lt[i];
        let a = levels.level(i);
        let right = 2.0 * ((xt - a).max(0.0) - (x0 - a).max(0.0) - sg);
        let left = 2.0 * ((a - xt).max(0.0) - (a - x0).max(0.0) + sl);
        out.push(0.5 * (right + left));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OccupationCheck {
    /// `Σ f(X_k)(ΔX_k)²`
    pub lhs: f64,
    /// `Σ_a f(a) L̂_T^a Δa`
    pub rhs: f64,
    /// `|lhs − rhs| / max(lhs, 1)`
    pub residual: f64,
    /// False when the level grid misses part of the path range.
    pub covers_range: bool,
}

/// Both sides of the occupation times formula at the horizon.
pub fn occupation_formula_check(path: &SamplePath, f: impl Fn(f64) -> f64, levels: &LevelGrid) -> OccupationCheck {
    let v = path.values();
    let lhs: f64 = v.windows(2).map(|w| f(w[0]) * (w[1] - w[0]) * (w[1] - w[0])).sum();
    let field = tanaka_level_field(path, levels);
    let da = levels.spacing();
    let rhs: f64 = field.iter().enumerate().map(|(i, l)| f(levels.level(i)) * l * da).sum();
    let covers_range = v.iter().all(|&x| x >= levels.lo && x <= levels.hi);
    OccupationCheck { lhs, rhs, residual: (lhs - rhs).abs() / lhs.max(1.0), covers_range }
}

/// Total |increment| of `curve` accrued over steps where both endpoints lie
/// more than `2ε` from the level.
pub fn support_check(curve: &LocalTimeCurve, path: &SamplePath, cfg: &EstimatorConfig) -> Result<f64> {
    curve.grid.ensure_same(path.grid(), "support_check")?;
    let eps = cfg.epsilon(path.grid())?;
    let v = path.values();
    let a = curve.level;
    Ok((0..v.len() - 1)
        .filter(|&k| (v[k] - a).abs() > 2.0 * eps && (v[k + 1] - a).abs() > 2.0 * eps)
        .map(|k| (curve.values[k + 1] - curve.values[k]).abs())
        .sum())
}
