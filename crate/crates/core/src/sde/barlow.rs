use super::{euler_maruyama, Coefficient, CoefficientSpec, SolutionPath};
use crate::error::{Error, Result};
use crate::local_time::{lt_reflected, EstimatorConfig};
use crate::paths::SamplePath;

fn check(a: f64, b: f64) -> Result<()> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::param("a", format!("must be positive, got {a}")));
    }
    if !(b > 0.0 && b.is_finite()) {
        return Err(Error::param("b", format!("must be positive, got {b}")));
    }
    Ok(())
}

/// `σ(x) = a·1{x>0} − b·1{x≤0}`.
pub fn barlow_sigma(a: f64, b: f64) -> Result<Coefficient> {
    check(a, b)?;
    Ok(Coefficient::Step { at: 0.0, left: -b, right: a })
}

/// Euler solution of `dX = (a·1{X>0} − b·1{X≤0})dB`.
pub fn barlow_solve(a: f64, b: f64, driver: &SamplePath, x0: f64) -> Result<SolutionPath> {
    let spec = CoefficientSpec::new(barlow_sigma(a, b)?, Coefficient::constant(0.0));
    euler_maruyama(&spec, driver, x0)
}

/// `φ(X) = X⁺/a + X⁻/b` with `x⁻ = max(−x, 0)`.
pub fn barlow_phi(x: &SamplePath, a: f64, b: f64) -> Result<SamplePath> {
    check(a, b)?;
    x.map(|v| v.max(0.0) / a + (-v).max(0.0) / b)
}

/// `sup_t |φ_t − φ_0 − ½L̂_t^0(φ) − B_t|` with the right local time of the
/// nonnegative path φ from `lt_reflected`.
pub fn barlow_residual(phi: &SamplePath, driver: &SamplePath, cfg: &EstimatorConfig) -> Result<f64> {
    phi.grid().ensure_same(driver.grid(), "barlow_residual")?;
    let l = lt_reflected(phi, cfg);
    let (p, b) = (phi.values(), driver.values());
    Ok((0..p.len()).fold(0.0f64, |m, k| m.max((p[k] - p[0] - 0.5 * l.values[k] - (b[k] - b[0])).abs())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::{sample_brownian, SeedSpec, TimeGrid};
    use crate::stats::median;

    #[test]
    fn unit_parameters_give_absolute_value() {
        let g = TimeGrid::dyadic(1.0, 10).unwrap();
        let b = sample_brownian(g, SeedSpec::new(1, 0)).unwrap();
        let x = barlow_solve(1.0, 1.0, &b, 0.0).unwrap();
        let phi = barlow_phi(&x.state, 1.0, 1.0).unwrap();
        for (p, v) in phi.values().iter().zip(x.state.values()) {
            assert_eq!(*p, v.abs());
        }
        assert!(barlow_solve(0.0, 1.0, &b, 0.0).is_err());
        assert!(barlow_phi(&b, 1.0, -1.0).is_err());
    }

    #[test]
    fn phi_is_reflected_driver() {
        let g = TimeGrid::dyadic(1.0, 12).unwrap();
        let cfg = EstimatorConfig::default();
        let band = 3.0 * g.dt().powf(0.25);
        let r: Vec<f64> = (0..128)
            .map(|i| {
                let b = sample_brownian(g, SeedSpec::new(2, i)).unwrap();
                let x = barlow_solve(1.0, 2.0, &b, 0.0).unwrap();
                barlow_residual(&barlow_phi(&x.state, 1.0, 2.0).unwrap(), &b, &cfg).unwrap()
            })
            .collect();
        assert!(median(&r) <= band, "median {}", median(&r));
    }
}
