use serde::{Deserialize, Serialize};

use super::{EstimatorConfig, LocalTimeCurve};
use crate::error::Result;
use crate::paths::{excursion_decompose, last_zero_index, zero_points, zero_tolerance, SamplePath};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DominationMode {
    /// Hypotheses must hold on the whole path.
    Global,
    /// Verdict only on paths where `0 ≤ X ≤ Y` throughout (the set A).
    Localized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominationReport {
    /// `(ΔL̂_X, ΔL̂_Y)` per window.
    pub increments: Vec<(f64, f64)>,
    /// `ΔL̂_X / ΔL̂_Y` in active windows, `None` elsewhere. Raw, not clipped.
    pub theta: Vec<Option<f64>>,
    /// `ΣΔL̂_X / ΣΔL̂_Y` over active windows.
    pub pooled_theta: Option<f64>,
    pub zero_set_inclusion: bool,
    pub positive_part_domination: bool,
    /// `Some(on_A)` in localized mode.
    pub on_set_a: Option<bool>,
    /// Zero-set equality and per-excursion max domination (excursion comparison only).
    pub excursion_hypotheses: Option<bool>,
    pub active_windows: usize,
    /// Windows with `ΔL̂_X > ΔL̂_Y + tolerance`.
    pub violations: usize,
    pub tolerance: f64,
}

impl DominationReport {
    pub fn hypotheses_hold(&self) -> bool {
        self.zero_set_inclusion
            && self.positive_part_domination
            && self.on_set_a.unwrap_or(true)
            && self.excursion_hypotheses.unwrap_or(true)
    }

    /// `None` when the hypotheses fail and the verdict is suppressed.
    pub fn dominated(&self) -> Option<bool> {
        self.hypotheses_hold().then_some(self.violations == 0)
    }

    pub fn window_count(&self) -> usize {
        self.increments.len()
    }
}

fn window_bounds(n_steps: usize, windows: usize) -> Vec<(usize, usize)> {
    let w = windows.min(n_steps).max(1);
    (0..w).map(|i| (i * n_steps / w, (i + 1) * n_steps / w)).collect()
}

/// Increments, per-window θ, pooled θ, active windows, violations.
type Windowed = (Vec<(f64, f64)>, Vec<Option<f64>>, Option<f64>, usize, usize);

fn compare_curves(lx: &LocalTimeCurve, ly: &LocalTimeCurve, cfg: &EstimatorConfig, tolerance: f64) -> Windowed {
    let scale = lx.terminal().abs().max(ly.terminal().abs()).max(1.0);
    let active = 10.0 * f64::EPSILON * scale;
    let mut inc = Vec::new();
    let mut theta = Vec::new();
    let (mut sx, mut sy, mut n_active, mut viol) = (0.0, 0.0, 0usize, 0usize);
    for (a, b) in window_bounds(lx.grid.steps(), cfg.windows) {
        let (dx, dy) = (lx.increment(a, b), ly.increment(a, b));
        inc.push((dx, dy));
        if dy > active {
            theta.push(Some(dx / dy));
            sx += dx;
            sy += dy;
            n_active += 1;
        } else {
            theta.push(None);
        }
        if dx > dy + tolerance {
            viol += 1;
        }
    }
    let pooled = (n_active > 0).then(|| sx / sy);
    (inc, theta, pooled, n_active, viol)
}

fn positive_part_dominated(x: &SamplePath, y: &SamplePath) -> bool {
    let scale = x.max_abs().max(y.max_abs()).max(1.0);
    x.values().iter().zip(y.values()).all(|(a, b)| a.max(0.0) <= b.max(0.0) + 1e-12 * scale)
}

/// Windowed comparison of `L̂^0(X)` and `L̂^0(Y)` after checking
/// `Z(X) ⊆ Z(Y)` and `X⁺ ≤ Y⁺`, with zero sets from the grid zero rule.
pub fn domination_diagnostic(
    x: &SamplePath,
    y: &SamplePath,
    mode: DominationMode,
    cfg: &EstimatorConfig,
) -> Result<DominationReport> {
    x.grid().ensure_same(y.grid(), "domination_diagnostic")?;
    let zx = zero_points(x, 0.0);
    let zy = zero_points(y, 0.0);
    domination_diagnostic_masked(x, y, &zx, &zy, mode, cfg)
}

/// As `domination_diagnostic`, with caller-supplied zero masks (for
/// processes whose zero set is better read off an underlying vector path).
pub fn domination_diagnostic_masked(
    x: &SamplePath,
    y: &SamplePath,
    zx: &[bool],
    zy: &[bool],
    mode: DominationMode,
    cfg: &EstimatorConfig,
) -> Result<DominationReport> {
    x.grid().ensure_same(y.grid(), "domination_diagnostic")?;
    cfg.validate()?;
    let eps = cfg.epsilon(x.grid())?;
    let zero_set_inclusion = zx.iter().zip(zy).all(|(&a, &b)| !a || b);
    let positive_part_domination = positive_part_dominated(x, y);
    let on_set_a = match mode {
        DominationMode::Global => None,
        DominationMode::Localized => Some(x.values().iter().zip(y.values()).all(|(&a, &b)| 0.0 <= a && a <= b)),
    };
    let lx = cfg.domination_estimator.curve(x, cfg)?;
    let ly = cfg.domination_estimator.curve(y, cfg)?;
    let tolerance = cfg.violation_c * eps;
    let (increments, theta, pooled_theta, active_windows, violations) = compare_curves(&lx, &ly, cfg, tolerance);
    Ok(DominationReport {
        increments,
        theta,
        pooled_theta,
        zero_set_inclusion,
        positive_part_domination,
        on_set_a,
        excursion_hypotheses: None,
        active_windows,
        violations,
        tolerance,
    })
}

/// θ at γ_t: mean of `X_j / Y_j` over the first `rn_points` grid points after
/// γ_t (zero set of Y) where `|Y_j|` exceeds the zero tolerance.
pub fn rn_liminf(x: &SamplePath, y: &SamplePath, t_index: usize, cfg: &EstimatorConfig) -> Result<Option<f64>> {
    x.grid().ensure_same(y.grid(), "rn_liminf")?;
    let Some(g) = last_zero_index(y, t_index) else {
        return Ok(None);
    };
    let tol = zero_tolerance(y, 0.0);
    let (xv, yv) = (x.values(), y.values());
    let ratios: Vec<f64> =
        (g + 1..yv.len()).filter(|&j| yv[j].abs() > tol[j]).take(cfg.rn_points).map(|j| xv[j] / yv[j]).collect();
    if ratios.is_empty() {
        return Ok(None);
    }
    Ok(Some(ratios.iter().sum::<f64>() / ratios.len() as f64))
}

/// Checks `Z(X) = Z(Y)` and `M_n^X(t) ≤ M_n^Y(t)` for every excursion and
/// time, then windows the local-time increments as `domination_diagnostic`.
pub fn excursion_comparison(x: &SamplePath, y: &SamplePath, cfg: &EstimatorConfig) -> Result<DominationReport> {
    x.grid().ensure_same(y.grid(), "excursion_comparison")?;
    let zx = zero_points(x, 0.0);
    let zy = zero_points(y, 0.0);
    let same_zeros = zx == zy;
    let mut max_ok = same_zeros;
    if same_zeros {
        let ex = excursion_decompose(y, 0.0);
        let (xv, yv) = (x.values(), y.values());
        'outer: for e in &ex.intervals {
            let (mut mx, mut my) = (0.0f64, 0.0f64);
            for j in e.first..=e.last {
                mx = mx.max(xv[j].max(0.0));
                my = my.max(yv[j].max(0.0));
                if mx > my {
                    max_ok = false;
                    break 'outer;
                }
            }
        }
    }
    let mut r = domination_diagnostic_masked(x, y, &zx, &zy, DominationMode::Global, cfg)?;
    // the excursion hypotheses replace X⁺ ≤ Y⁺
    r.positive_part_domination = true;
    r.excursion_hypotheses = Some(max_ok);
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::{sample_brownian, SeedSpec, TimeGrid};

    fn abs_brownian(i: u64) -> SamplePath {
        sample_brownian(TimeGrid::dyadic(1.0, 12).unwrap(), SeedSpec::new(31, i)).unwrap().map(f64::abs).unwrap()
    }

    #[test]
    fn half_of_abs_brownian() {
        let cfg = EstimatorConfig::default();
        let (mut sx, mut sy) = (0.0, 0.0);
        for i in 0..64 {
            let y = abs_brownian(i);
            let x = y.scale(0.5).unwrap();
            let r = domination_diagnostic(&x, &y, DominationMode::Global, &cfg).unwrap();
            assert!(r.hypotheses_hold());
            for (dx, dy) in &r.increments {
                sx += dx;
                sy += dy;
            }
            let rn = rn_liminf(&x, &y, x.grid().steps() / 2, &cfg).unwrap().unwrap();
            assert!((rn - 0.5).abs() < 1e-12);
        }
        let theta = sx / sy;
        assert!((0.45..=0.55).contains(&theta), "{theta}");
    }

    #[test]
    fn identical_paths() {
        let cfg = EstimatorConfig::default();
        let y = abs_brownian(0);
        let r = domination_diagnostic(&y, &y, DominationMode::Localized, &cfg).unwrap();
        assert_eq!(r.dominated(), Some(true));
        assert!(r.theta.iter().flatten().all(|t| *t == 1.0));
        assert_eq!(rn_liminf(&y, &y, 2000, &cfg).unwrap(), Some(1.0));
        let e = excursion_comparison(&y, &y, &cfg).unwrap();
        assert_eq!(e.dominated(), Some(true));
    }

    #[test]
    fn shifted_zeros_raise_flag() {
        let cfg = EstimatorConfig::default();
        let y = abs_brownian(1).shift(0.05).unwrap();
        let x = abs_brownian(1);
        let r = domination_diagnostic(&x, &y, DominationMode::Global, &cfg).unwrap();
        assert!(!r.zero_set_inclusion);
        assert_eq!(r.dominated(), None);
    }

    #[test]
    fn localized_mode_requires_order() {
        let cfg = EstimatorConfig::default();
        let y = abs_brownian(2);
        let x = y.scale(1.5).unwrap();
        let r = domination_diagnostic(&x, &y, DominationMode::Localized, &cfg).unwrap();
        assert_eq!(r.on_set_a, Some(false));
        assert_eq!(r.dominated(), None);
    }

    #[test]
    fn rn_with_slowly_varying_factor() {
        let cfg = EstimatorConfig::default();
        let y = abs_brownian(3);
        let xi = SamplePath::from_fn(*y.grid(), |t| 0.4 + 0.2 * t).unwrap();
        let x = xi.zip_with(&y, |a, b| a * b).unwrap();
        let t = y.grid().steps();
        let g = last_zero_index(&y, t).unwrap();
        let rn = rn_liminf(&x, &y, t, &cfg).unwrap().unwrap();
        assert!((rn - xi.value(g)).abs() < 0.01, "{rn} vs {}", xi.value(g));
    }

    #[test]
    fn rn_missing_without_zero() {
        let g = TimeGrid::new(1.0, 16).unwrap();
        let y = SamplePath::from_fn(g, |t| 1.0 + t).unwrap();
        assert_eq!(rn_liminf(&y, &y, 16, &EstimatorConfig::default()).unwrap(), None);
    }

    #[test]
    fn damped_excursions() {
        let cfg = EstimatorConfig::default();
        let y = abs_brownian(4);
        let x = y.scale(0.7).unwrap();
        let r = excursion_comparison(&x, &y, &cfg).unwrap();
        assert_eq!(r.excursion_hypotheses, Some(true));
        assert!(r.increments.iter().all(|(dx, dy)| dx <= &(dy + r.tolerance)));
    }
}
