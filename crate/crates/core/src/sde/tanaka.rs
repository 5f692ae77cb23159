use super::{Coefficient, SolutionPath};
use crate::error::{Error, Result};
use crate::paths::SamplePath;

/// `X_{k+1} = X_k + σ(X_k)ΔM_k + ΔN_k`.
pub fn perturbed_tanaka_solver(sigma: &Coefficient, m: &SamplePath, n: &SamplePath, x0: f64) -> Result<SolutionPath> {
    m.grid().ensure_same(n.grid(), "perturbed_tanaka_solver")?;
    let grid = *m.grid();
    let (dm, dn) = (m.increments(), n.increments());
    let mut v = Vec::with_capacity(grid.len());
    let mut x = x0;
    v.push(x);
    for k in 0..dm.len() {
        x += sigma.eval(x) * dm[k] + dn[k];
        if !x.is_finite() {
            return Err(Error::NonFinite { step: k + 1, detail: format!("state = {x}") });
        }
        v.push(x);
    }
    Ok(SolutionPath { state: SamplePath::with_drivers(grid, v, vec![dm, dn])?, local_time: None })
}

/// `M = W/2`, `N = (W + ηV)/2`.
pub fn mn_transform(w: &SamplePath, v: &SamplePath, eta: f64) -> Result<(SamplePath, SamplePath)> {
    w.grid().ensure_same(v.grid(), "mn_transform")?;
    if !eta.is_finite() {
        return Err(Error::param("eta", "must be finite"));
    }
    let m = w.scale(0.5)?;
    let n = w.zip_with(v, |a, b| 0.5 * (a + eta * b))?;
    Ok((m, n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::{
        cross_variation, quadratic_variation, sample_brownian_channel, sample_correlated_pair, PairMode, SeedSpec,
        TimeGrid,
    };
    use crate::stats::Summary;

    fn grid() -> TimeGrid {
        TimeGrid::dyadic(1.0, 10).unwrap()
    }

    #[test]
    fn constant_sigma_is_exact() {
        let seed = SeedSpec::new(3, 1);
        let m = sample_brownian_channel(grid(), seed, 0).unwrap();
        let n = sample_brownian_channel(grid(), seed, 1).unwrap();
        let x = perturbed_tanaka_solver(&Coefficient::constant(2.0), &m, &n, 0.3).unwrap();
        for k in 0..grid().len() {
            let expect = 0.3 + 2.0 * m.value(k) + n.value(k);
            assert!((x.state.value(k) - expect).abs() <= 1e-12 * (1.0 + expect.abs()));
        }
    }

    #[test]
    fn unperturbed_tanaka_pairs_mirror() {
        let m = sample_brownian_channel(grid(), SeedSpec::new(4, 0), 0).unwrap();
        let zero = SamplePath::constant(grid(), 0.0).unwrap();
        let x = perturbed_tanaka_solver(&Coefficient::sign(), &m, &zero, 1e-3).unwrap();
        let y = perturbed_tanaka_solver(&Coefficient::sign(), &m, &zero, -1e-3).unwrap();
        // sgn(0) = −1 breaks exact symmetry only on the zero lattice point
        for (a, b) in x.state.values().iter().zip(y.state.values()) {
            assert!((a + b).abs() < 1e-12);
        }
    }

    #[test]
    fn brackets_after_transform() {
        let (mut mn, mut nn) = (Summary::default(), Summary::default());
        for i in 0..512 {
            let d = sample_correlated_pair(grid(), SeedSpec::new(5, i), PairMode::BracketMinusTOverEta(2.0)).unwrap();
            let (m, n) = mn_transform(d.channel(0), d.channel(1), 2.0).unwrap();
            mn.push(cross_variation(&m, &n).unwrap().terminal());
            nn.push(quadratic_variation(&n).terminal());
        }
        assert!(mn.mean.abs() <= 3.0 * mn.stderr(), "{}", mn.mean);
        assert!((nn.mean - 0.75).abs() <= 0.05 * 0.75, "{}", nn.mean);
    }

    #[test]
    fn independent_mode_is_not_orthogonal() {
        let mut mn = Summary::default();
        for i in 0..512 {
            let d = sample_correlated_pair(grid(), SeedSpec::new(6, i), PairMode::Independent).unwrap();
            let (m, n) = mn_transform(d.channel(0), d.channel(1), 1.0).unwrap();
            mn.push(cross_variation(&m, &n).unwrap().terminal());
        }
        assert!((mn.mean - 0.25).abs() <= 3.0 * mn.stderr() + 0.01, "{}", mn.mean);
    }

    #[test]
    fn zero_inputs() {
        let z = SamplePath::constant(grid(), 0.0).unwrap();
        let (m, n) = mn_transform(&z, &z, 3.0).unwrap();
        assert!(m.values().iter().chain(n.values()).all(|v| *v == 0.0));
    }
}
