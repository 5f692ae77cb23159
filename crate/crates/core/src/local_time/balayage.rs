use crate::error::{Error, Result};
use crate::paths::{zero_tolerance, SamplePath};

use super::LocalTimeCurve;

/// Index of γ_t for every grid index t (0 when the path has not yet been at 0).
///
/// Same zero rule as `last_zero_before`, computed in one forward pass.
pub fn gamma_indices(path: &SamplePath) -> Vec<usize> {
    let v = path.values();
    let tol = zero_tolerance(path, 0.0);
    let mut last = 0usize;
    (0..v.len())
        .map(|t| {
            if t > 0 && v[t - 1] * v[t] < 0.0 {
                last = t - 1;
            }
            if v[t] == 0.0 || v[t].abs() < tol[t] {
                last = t;
            }
            last
        })
        .collect()
}

fn check_k(path: &SamplePath, k: &[f64]) -> Result<()> {
    if k.len() != path.grid().len() {
        return Err(Error::GridMismatch(format!("k has {} values, grid needs {}", k.len(), path.grid().len())));
    }
    if let Some(i) = k.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite { step: i, detail: "k must be bounded".into() });
    }
    Ok(())
}

/// `t ↦ k_{γ_t} X_t`.
pub fn balayage_transform(path: &SamplePath, k: &[f64]) -> Result<SamplePath> {
    check_k(path, k)?;
    let g = gamma_indices(path);
    SamplePath::new(*path.grid(), path.values().iter().zip(&g).map(|(x, &j)| k[j] * x).collect())
}

/// Stochastic-integral side `k_0 X_0 + Σ_{j<t} k_{γ_j} ΔX_j`.
pub fn balayage_integral(path: &SamplePath, k: &[f64]) -> Result<SamplePath> {
    check_k(path, k)?;
    let g = gamma_indices(path);
    let v = path.values();
    let mut acc = k[0] * v[0];
    let mut out = Vec::with_capacity(v.len());
    out.push(acc);
    for j in 0..v.len() - 1 {
        acc += k[g[j]] * (v[j + 1] - v[j]);
        out.push(acc);
    }
    SamplePath::new(*path.grid(), out)
}

/// `k_t = 1{L̂_t ≤ z}`; `z = ∞` gives `k ≡ 1`.
pub fn truncation_process(curve: &LocalTimeCurve, z: f64) -> Vec<f64> {
    curve.values.iter().map(|&l| if l <= z { 1.0 } else { 0.0 }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::local_time::{lt_tanaka, EstimatorConfig, TanakaSide};
    use crate::paths::{last_zero_index, sample_brownian, SeedSpec, TimeGrid};
    use crate::stats::Summary;

    fn brownian(i: u64) -> SamplePath {
        sample_brownian(TimeGrid::dyadic(1.0, 12).unwrap(), SeedSpec::new(5150, i)).unwrap()
    }

    #[test]
    fn gamma_matches_last_zero_before() {
        let b = brownian(0);
        let g = gamma_indices(&b);
        for t in (0..b.grid().len()).step_by(97) {
            assert_eq!(g[t], last_zero_index(&b, t).unwrap_or(0), "t={t}");
        }
    }

    #[test]
    fn unit_k_is_identity() {
        let b = brownian(1);
        let ones = vec![1.0; b.grid().len()];
        assert_eq!(balayage_transform(&b, &ones).unwrap(), SamplePath::new(*b.grid(), b.values().to_vec()).unwrap());
        let integral = balayage_integral(&b, &ones).unwrap();
        for (a, c) in integral.values().iter().zip(b.values()) {
            assert!((a - c).abs() < 1e-12);
        }
    }

    #[test]
    fn truncated_transform_matches_integral_form() {
        let cfg = EstimatorConfig::default();
        let b = brownian(2);
        let l = lt_tanaka(&b, 0.0, TanakaSide::Symmetric, &cfg);
        let k = truncation_process(&l, 0.2);
        let lhs = balayage_transform(&b, &k).unwrap();
        let rhs = balayage_integral(&b, &k).unwrap();
        let band = 3.0 * b.grid().dt().powf(0.25);
        assert!(lhs.sup_norm_distance(&rhs).unwrap() <= band);
    }

    #[test]
    fn local_time_of_transform_is_truncated() {
        let cfg = EstimatorConfig::default();
        let z = 0.3;
        let errs: Vec<f64> = (0..256)
            .map(|i| {
                let b = brownian(i);
                let l = lt_tanaka(&b, 0.0, TanakaSide::Symmetric, &cfg);
                let k = truncation_process(&l, z);
                let y = balayage_transform(&b, &k).unwrap();
                lt_tanaka(&y, 0.0, TanakaSide::Symmetric, &cfg).terminal() - l.terminal().min(z)
            })
            .collect();
        let s = Summary::of(&errs);
        assert!(s.mean.abs() <= 3.0 * s.stderr() + 0.03, "{} ± {}", s.mean, s.stderr());
    }

    #[test]
    fn rejects_bad_k() {
        let b = brownian(0);
        assert!(balayage_transform(&b, &[1.0]).is_err());
        let mut k = vec![1.0; b.grid().len()];
        k[3] = f64::INFINITY;
        assert!(balayage_integral(&b, &k).is_err());
    }
}
