use serde::{Deserialize, Serialize};

use super::SamplePath;

/// Zero tolerance at each grid point: `√dt · max_{j≤k} |X_j − level|`.
///
/// The tolerance scales with the path so that the detected zero set of `c·X`
/// equals that of `X` for every `c > 0`.
pub fn zero_tolerance(path: &SamplePath, level: f64) -> Vec<f64> {
    let s = path.grid().sqrt_dt();
    let mut run = 0.0f64;
    path.values()
        .iter()
        .map(|v| {
            run = run.max((v - level).abs());
            s * run
        })
        .collect()
}

/// Discretized zero set: point k is a zero when `|X_k − level| < z_tol_k`,
/// when it sits exactly on the level, or when the path changes sign strictly
/// between k and k+1 (the crossing is attributed to the earlier point).
pub fn zero_points(path: &SamplePath, level: f64) -> Vec<bool> {
    let tol = zero_tolerance(path, level);
    let v = path.values();
    let n = v.len();
    (0..n)
        .map(|k| {
            let d = v[k] - level;
            d == 0.0 || d.abs() < tol[k] || (k + 1 < n && d * (v[k + 1] - level) < 0.0)
        })
        .collect()
}

/// Index form of `last_zero_before`; `None` when the path has no zero up to `t_index`.
pub fn last_zero_index(path: &SamplePath, t_index: usize) -> Option<usize> {
    let t_index = t_index.min(path.grid().steps());
    let v = path.values();
    let tol = zero_tolerance(path, 0.0);
    (0..=t_index).rev().find(|&k| v[k] == 0.0 || v[k].abs() < tol[k] || (k < t_index && v[k] * v[k + 1] < 0.0))
}

/// γ_t: last grid time at or before `t_index` where the path touches or
/// crosses zero, 0 when there is none. Resolution is ±dt.
pub fn last_zero_before(path: &SamplePath, t_index: usize) -> f64 {
    last_zero_index(path, t_index).map_or(0.0, |k| path.grid().time(k))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Excursion {
    /// Last zero point before the excursion (0 if the path starts away from the level).
    pub g: usize,
    /// First zero point after the excursion (N if it runs to the horizon).
    pub d: usize,
    /// First and last grid points strictly inside the excursion.
    pub first: usize,
    pub last: usize,
    /// Maximum of `(X − level)^+` strictly inside the excursion.
    pub max_positive: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcursionList {
    pub level: f64,
    pub intervals: Vec<Excursion>,
}

impl ExcursionList {
    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// Running maximum `M_n(t)` of excursion `n` up to grid index `t`.
    pub fn running_max(&self, path: &SamplePath, n: usize, t: usize) -> f64 {
        let e = &self.intervals[n];
        if t < e.first {
            return 0.0;
        }
        path.values()[e.first..=e.last.min(t)].iter().fold(0.0, |m, v| f64::max(m, (v - self.level).max(0.0)))
    }
}

/// Maximal runs of non-zero points, with the maximum of the positive part on each.
pub fn excursion_decompose(path: &SamplePath, level: f64) -> ExcursionList {
    let zeros = zero_points(path, level);
    let v = path.values();
    let n = v.len();
    let mut intervals = Vec::new();
    let mut k = 0;
    while k < n {
        if zeros[k] {
            k += 1;
            continue;
        }
        let start = k;
        let mut m = 0.0f64;
        while k < n && !zeros[k] {
            m = m.max((v[k] - level).max(0.0));
            k += 1;
        }
        let g = start.saturating_sub(1);
        let d = k.min(n - 1);
        intervals.push(Excursion { g, d, first: start, last: k - 1, max_positive: m });
    }
    ExcursionList { level, intervals }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::{sample_brownian, SeedSpec, TimeGrid};
    use proptest::prelude::*;

    fn path(values: &[f64]) -> SamplePath {
        SamplePath::new(TimeGrid::new(1.0, values.len() - 1).unwrap(), values.to_vec()).unwrap()
    }

    #[test]
    fn gamma_conventions() {
        let p = path(&[1.0, 1.2, 1.5, 1.1]);
        assert_eq!(last_zero_before(&p, 3), 0.0);
        let p = path(&[1.0, 0.5, -0.5, 0.0]);
        assert_eq!(last_zero_before(&p, 3), 1.0);
        // 1, -1, 1: crossings in steps 0 and 1, the later one at t = 0.5
        let p = path(&[1.0, -1.0, 1.0]);
        assert_eq!(last_zero_before(&p, 2), 0.5);
        assert_eq!(last_zero_before(&p, 1), 0.0);
    }

    #[test]
    fn sawtooth_excursions() {
        let p = path(&[0.0, 1.0, 0.0, 2.0, 0.0]);
        let ex = excursion_decompose(&p, 0.0);
        assert_eq!(ex.len(), 2);
        assert_eq!((ex.intervals[0].g, ex.intervals[0].d), (0, 2));
        assert_eq!((ex.intervals[1].g, ex.intervals[1].d), (2, 4));
        assert_eq!(ex.intervals[0].max_positive, 1.0);
        assert_eq!(ex.intervals[1].max_positive, 2.0);
    }

    #[test]
    fn positive_and_zero_paths() {
        let p = path(&[1.0, 2.0, 1.5, 3.0]);
        let ex = excursion_decompose(&p, 0.0);
        assert_eq!(ex.len(), 1);
        assert_eq!((ex.intervals[0].g, ex.intervals[0].d), (0, 3));
        assert_eq!(ex.intervals[0].max_positive, 3.0);
        assert_eq!(ex.running_max(&p, 0, 2), 2.0);
        assert!(excursion_decompose(&path(&[0.0; 6]), 0.0).is_empty());
    }

    #[test]
    fn zero_set_is_scale_invariant() {
        let g = TimeGrid::dyadic(1.0, 10).unwrap();
        let b = sample_brownian(g, SeedSpec::new(8, 1)).unwrap().map(f64::abs).unwrap();
        let half = b.scale(0.5).unwrap();
        assert_eq!(zero_points(&b, 0.0), zero_points(&half, 0.0));
    }

    proptest! {
        #[test]
        fn excursions_partition_the_grid(vals in prop::collection::vec(-2.0f64..2.0, 2..80), level in -1.0f64..1.0) {
            let p = path(&vals);
            let zeros = zero_points(&p, level);
            let ex = excursion_decompose(&p, level);
            let mut covered = vec![0u32; vals.len()];
            for (i, e) in ex.intervals.iter().enumerate() {
                if i > 0 {
                    prop_assert!(ex.intervals[i - 1].d <= e.g);
                }
                prop_assert!(e.g <= e.first && e.first <= e.last && e.last <= e.d);
                for c in &mut covered[e.first..=e.last] {
                    *c += 1;
                }
            }
            for k in 0..vals.len() {
                prop_assert_eq!(covered[k], u32::from(!zeros[k]), "point {}", k);
            }
        }
    }
}
