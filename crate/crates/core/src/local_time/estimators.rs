use super::{EstimatorConfig, EstimatorTag, LocalTimeCurve};
use crate::error::Result;
use crate::paths::SamplePath;

/// Expected overshoot of a Brownian path over a level monitored on a grid, in
/// units of `σ√dt`: `−ζ(1/2)/√(2π)`.
pub const OVERSHOOT_KAPPA: f64 = 0.582_597_157_939_010_7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TanakaSide {
    Right,
    Left,
    Symmetric,
}

fn centered(path: &SamplePath, level: f64) -> Vec<f64> {
    path.values().iter().map(|v| v - level).collect()
}

fn curve(path: &SamplePath, level: f64, values: Vec<f64>, tag: EstimatorTag) -> LocalTimeCurve {
    LocalTimeCurve { grid: *path.grid(), level, values, tag }
}

/// `L̂_t^a = (1/2ε) Σ_{k<t} 1{|X_k − a| < ε} (ΔX_k)²`.
pub fn lt_occupation(path: &SamplePath, level: f64, cfg: &EstimatorConfig) -> Result<LocalTimeCurve> {
    let eps = cfg.epsilon(path.grid())?;
    let d = centered(path, level);
    let mut out = Vec::with_capacity(d.len());
    let mut acc = 0.0;
    out.push(0.0);
    for k in 0..d.len() - 1 {
        if d[k].abs() < eps {
            let dx = d[k + 1] - d[k];
            acc += dx * dx;
        }
        out.push(acc / (2.0 * eps));
    }
    Ok(curve(path, level, out, EstimatorTag::Occupation))
}

/// Upcrossings of the band `[a, a+ε]` times `2ε'`, where `ε' = ε` for the raw
/// count and `ε + 2κσ̂√dt` with overshoot correction (σ̂² = ⟨X⟩_T / T).
pub fn lt_upcrossing(path: &SamplePath, level: f64, cfg: &EstimatorConfig) -> Result<LocalTimeCurve> {
    let grid = path.grid();
    let eps = cfg.epsilon(grid)?;
    let d = centered(path, level);
    let width = if cfg.upcrossing_overshoot {
        let qv: f64 = d.windows(2).map(|w| (w[1] - w[0]) * (w[1] - w[0])).sum();
        let sigma = (qv / grid.horizon()).sqrt();
        eps + 2.0 * OVERSHOOT_KAPPA * sigma * grid.sqrt_dt()
    } else {
        eps
    };
    let mut out = Vec::with_capacity(d.len());
    let mut armed = d[0] <= 0.0;
    let mut count = 0u64;
    out.push(0.0);
    for &x in &d[1..] {
        if armed && x >= eps {
            count += 1;
            armed = false;
        } else if x <= 0.0 {
            armed = true;
        }
        out.push(2.0 * width * count as f64);
    }
    Ok(curve(path, level, out, EstimatorTag::Upcrossing))
}

/// Tanaka residual curves with left-point (predictable) indicators:
/// right `2[(X_t−a)⁺ − (X_0−a)⁺ − Σ 1{X_k>a}ΔX_k]`,
/// left `2[(X_t−a)⁻ − (X_0−a)⁻ + Σ 1{X_k<a}ΔX_k]` with `x⁻ = max(−x, 0)`,
/// symmetric the average of the two.
pub fn lt_tanaka(path: &SamplePath, level: f64, side: TanakaSide, _cfg: &EstimatorConfig) -> LocalTimeCurve {
    let d = centered(path, level);
    let pos = |x: f64| x.max(0.0);
    let neg = |x: f64| (-x).max(0.0);
    let mut right = Vec::with_capacity(d.len());
    let mut left = Vec::with_capacity(d.len());
    let (mut ir, mut il) = (0.0, 0.0);
    right.push(0.0);
    left.push(0.0);
    for k in 0..d.len() - 1 {
        let dx = d[k + 1] - d[k];
        if d[k] > 0.0 {
            ir += dx;
        } else if d[k] < 0.0 {
            il += dx;
        }
        right.push(2.0 * (pos(d[k + 1]) - pos(d[0]) - ir));
        left.push(2.0 * (neg(d[k + 1]) - neg(d[0]) + il));
    }
    match side {
        TanakaSide::Right => curve(path, level, right, EstimatorTag::TanakaRight),
        TanakaSide::Left => curve(path, level, left, EstimatorTag::TanakaLeft),
        TanakaSide::Symmetric => {
            let sym = right.iter().zip(&left).map(|(r, l)| 0.5 * (r + l)).collect();
            curve(path, level, sym, EstimatorTag::TanakaSymmetric)
        }
    }
}

/// Right local time at 0 of a nonnegative process, estimated by the right
/// Tanaka residual at the small offset level `h = c·σ̂·√dt`.
///
/// At level 0 itself a reflected scheme sits exactly on the level after every
/// push, and the left-point indicator then misses the whole push.
pub fn lt_reflected(path: &SamplePath, cfg: &EstimatorConfig) -> LocalTimeCurve {
    let grid = path.grid();
    let qv: f64 = path.values().windows(2).map(|w| (w[1] - w[0]) * (w[1] - w[0])).sum();
    let sigma = (qv / grid.horizon()).sqrt();
    let h = cfg.reflect_offset_c * sigma * grid.sqrt_dt();
    let mut c = lt_tanaka(path, h, TanakaSide::Right, cfg);
    c.level = 0.0;
    c
}

/// Dispatch by tag.
pub fn estimate(path: &SamplePath, level: f64, tag: EstimatorTag, cfg: &EstimatorConfig) -> Result<LocalTimeCurve> {
    match tag {
        EstimatorTag::Occupation => lt_occupation(path, level, cfg),
        EstimatorTag::Upcrossing => lt_upcrossing(path, level, cfg),
        EstimatorTag::TanakaRight => Ok(lt_tanaka(path, level, TanakaSide::Right, cfg)),
        EstimatorTag::TanakaLeft => Ok(lt_tanaka(path, level, TanakaSide::Left, cfg)),
        EstimatorTag::TanakaSymmetric => Ok(lt_tanaka(path, level, TanakaSide::Symmetric, cfg)),
        EstimatorTag::SchemeTally => {
            Err(crate::error::Error::param("estimator", "scheme_tally is produced by solvers only"))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::local_time::Bandwidth;
    use crate::paths::{sample_brownian, SeedSpec, TimeGrid};
    use crate::stats::Summary;
    use proptest::prelude::*;

    fn path(values: &[f64]) -> SamplePath {
        SamplePath::new(TimeGrid::new(1.0, values.len() - 1).unwrap(), values.to_vec()).unwrap()
    }

    fn brownian(i: u64) -> SamplePath {
        sample_brownian(TimeGrid::dyadic(1.0, 12).unwrap(), SeedSpec::new(2024, i)).unwrap()
    }

    const MEAN_ABS_NORMAL: f64 = 0.797_884_560_802_865_4;

    #[test]
    fn kappa_matches_zeta() {
        // ζ(1/2) = −1.4603545088095868
        let k = 1.460_354_508_809_586_8 / (2.0 * std::f64::consts::PI).sqrt();
        assert!((k - OVERSHOOT_KAPPA).abs() < 1e-15);
    }

    #[test]
    fn constant_path_has_no_local_time() {
        let p = SamplePath::constant(TimeGrid::new(1.0, 64).unwrap(), 0.0).unwrap();
        let cfg = EstimatorConfig::default();
        assert_eq!(lt_occupation(&p, 0.0, &cfg).unwrap().terminal(), 0.0);
    }

    #[test]
    fn rejects_nonpositive_bandwidth() {
        let p = path(&[0.0, 1.0]);
        let cfg = EstimatorConfig::default().with_bandwidth(Bandwidth::Absolute(0.0));
        assert!(lt_occupation(&p, 0.0, &cfg).is_err());
        assert!(lt_upcrossing(&p, 0.0, &cfg).is_err());
    }

    #[test]
    fn raw_upcrossing_counts() {
        let eps = 0.1;
        let cfg = EstimatorConfig::default().with_bandwidth(Bandwidth::Absolute(eps)).raw_upcrossings();
        let rise = SamplePath::from_fn(TimeGrid::new(1.0, 20).unwrap(), |t| 2.0 * eps * t).unwrap();
        assert!((lt_upcrossing(&rise, 0.0, &cfg).unwrap().terminal() - 2.0 * eps).abs() < 1e-15);
        let saw = path(&[0.0, 0.15, -0.05, 0.2, 0.0, 0.3, 0.05]);
        let c = lt_upcrossing(&saw, 0.0, &cfg).unwrap();
        assert!((c.terminal() - 6.0 * eps).abs() < 1e-15);
        assert!(c.values.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn tanaka_vanishes_above_level() {
        let p = path(&[1.0, 1.5, 1.2, 2.0, 1.1]);
        let c = lt_tanaka(&p, 0.0, TanakaSide::Right, &EstimatorConfig::default());
        assert!(c.values.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn tanaka_vanishes_for_fine_bv_paths() {
        let mut last = f64::INFINITY;
        for n in [64, 1024, 16384] {
            let g = TimeGrid::new(1.0, n).unwrap();
            let p = SamplePath::from_fn(g, |t| (6.0 * t).sin() - 0.3).unwrap();
            let r = lt_tanaka(&p, 0.0, TanakaSide::Symmetric, &EstimatorConfig::default()).terminal().abs();
            assert!(r < last);
            last = r;
        }
        assert!(last < 1e-3);
    }

    #[test]
    fn brownian_calibration_all_estimators() {
        let cfg = EstimatorConfig::default();
        let mut s = [Summary::default(); 3];
        for i in 0..512 {
            let b = brownian(i);
            s[0].push(lt_occupation(&b, 0.0, &cfg).unwrap().terminal());
            s[1].push(lt_upcrossing(&b, 0.0, &cfg).unwrap().terminal());
            s[2].push(lt_tanaka(&b, 0.0, TanakaSide::Symmetric, &cfg).terminal());
        }
        for (name, s) in ["occupation", "upcrossing", "tanaka"].iter().zip(s) {
            assert!((s.mean - MEAN_ABS_NORMAL).abs() <= 3.0 * s.stderr() + 0.03, "{name}: {} ± {}", s.mean, s.stderr());
        }
    }

    #[test]
    fn tanaka_agrees_with_occupation_on_matched_seeds() {
        let cfg = EstimatorConfig::default();
        let diffs: Vec<f64> = (0..256)
            .map(|i| {
                let b = brownian(i);
                lt_tanaka(&b, 0.0, TanakaSide::Symmetric, &cfg).terminal()
                    - lt_occupation(&b, 0.0, &cfg).unwrap().terminal()
            })
            .collect();
        let s = Summary::of(&diffs);
        let band = 3.0 * TimeGrid::dyadic(1.0, 12).unwrap().dt().powf(0.25);
        assert!(s.mean.abs() <= 3.0 * s.stderr() + band, "{}", s.mean);
        assert!(crate::stats::median(&diffs.iter().map(|d| d.abs()).collect::<Vec<_>>()) <= band);
    }

    #[test]
    fn occupation_scaling_with_scaled_bandwidth() {
        let b = brownian(0);
        let eps = b.grid().sqrt_dt();
        let one = lt_occupation(&b, 0.0, &EstimatorConfig::default().with_bandwidth(Bandwidth::Absolute(eps))).unwrap();
        let two = lt_occupation(
            &b.scale(2.0).unwrap(),
            0.0,
            &EstimatorConfig::default().with_bandwidth(Bandwidth::Absolute(2.0 * eps)),
        )
        .unwrap();
        assert!((two.terminal() - 2.0 * one.terminal()).abs() <= 1e-12 * two.terminal().max(1.0));
    }

    #[test]
    fn reflected_estimator_on_abs_brownian() {
        let cfg = EstimatorConfig::default();
        let s = Summary::of(
            &(0..512).map(|i| lt_reflected(&brownian(i).map(f64::abs).unwrap(), &cfg).terminal()).collect::<Vec<_>>(),
        );
        // right local time of |B| at 0 is twice the symmetric local time of B
        assert!((s.mean - 2.0 * MEAN_ABS_NORMAL).abs() <= 3.0 * s.stderr() + 0.06, "{}", s.mean);
    }

    proptest! {
        #[test]
        fn curves_start_at_zero_and_occupation_upcrossing_monotone(
            vals in prop::collection::vec(-1.0f64..1.0, 2..60),
            level in -0.5f64..0.5,
        ) {
            let p = path(&vals);
            let cfg = EstimatorConfig::default();
            for tag in EstimatorTag::ALL {
                let c = estimate(&p, level, tag, &cfg).unwrap();
                prop_assert_eq!(c.values[0], 0.0);
                prop_assert_eq!(c.values.len(), vals.len());
                if matches!(tag, EstimatorTag::Occupation | EstimatorTag::Upcrossing) {
                    prop_assert!(c.values.windows(2).all(|w| w[1] >= w[0]));
                }
            }
        }

        #[test]
        fn shift_invariance_is_exact(vals in prop::collection::vec(-1.0f64..1.0, 2..60), a in -0.5f64..0.5) {
            let p = path(&vals);
            let shifted = p.map(|v| v - a).unwrap();
            let cfg = EstimatorConfig::default();
            for tag in EstimatorTag::ALL {
                let lhs = estimate(&p, a, tag, &cfg).unwrap();
                let rhs = estimate(&shifted, 0.0, tag, &cfg).unwrap();
                prop_assert_eq!(&lhs.values, &rhs.values, "{:?}", tag);
            }
        }

        #[test]
        fn tanaka_scaling(vals in prop::collection::vec(-1.0f64..1.0, 2..60), c in 0.1f64..10.0) {
            let p = path(&vals);
            let cfg = EstimatorConfig::default();
            let base = lt_tanaka(&p, 0.0, TanakaSide::Symmetric, &cfg);
            let scaled = lt_tanaka(&p.scale(c).unwrap(), 0.0, TanakaSide::Symmetric, &cfg);
            for (a, b) in base.values.iter().zip(&scaled.values) {
                prop_assert!((c * a - b).abs() <= 1e-12 * (1.0 + b.abs()) * vals.len() as f64);
            }
        }
    }
}
