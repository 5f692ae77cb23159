use rand::RngExt;

use super::{Coefficient, CoefficientSpec, SolutionPath};
use crate::error::{Error, Result};
use crate::local_time::{EstimatorTag, LocalTimeCurve};
use crate::measure::{ScaleFunction, SignedMeasure};
use crate::paths::{SamplePath, SeedSpec, TimeGrid};

fn driver_increments(driver: &SamplePath) -> Vec<f64> {
    driver.increments()
}

fn finite(x: f64, step: usize, what: &str) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::NonFinite { step, detail: format!("{what} = {x}") })
    }
}

/// `X_{k+1} = X_k + σ(X_k)ΔB_k + b(X_k)dt`.
pub fn euler_maruyama(coeff: &CoefficientSpec, driver: &SamplePath, x0: f64) -> Result<SolutionPath> {
    let grid = *driver.grid();
    let dt = grid.dt();
    let db = driver_increments(driver);
    let mut v = Vec::with_capacity(grid.len());
    let mut x = finite(x0, 0, "x0")?;
    v.push(x);
    for (k, d) in db.iter().enumerate() {
        let s = finite(coeff.sigma.eval(x), k, "sigma")?;
        let b = finite(coeff.drift.eval(x), k, "drift")?;
        x = finite(x + s * d + b * dt, k + 1, "state")?;
        v.push(x);
    }
    Ok(SolutionPath { state: SamplePath::with_drivers(grid, v, vec![db])?, local_time: None })
}

/// Projected Euler scheme for `dY = σ(Y)dB + b(Y)dt + ½dL^0(Y)`, `Y ≥ 0`.
/// The tally adds `2·max(−Ỹ, 0)` at each projection.
pub fn reflected_euler(coeff: &CoefficientSpec, driver: &SamplePath, x0: f64) -> Result<SolutionPath> {
    if !(x0 >= 0.0) {
        return Err(Error::param("x0", format!("reflected start must be nonnegative, got {x0}")));
    }
    let grid = *driver.grid();
    let dt = grid.dt();
    let db = driver_increments(driver);
    let mut v = Vec::with_capacity(grid.len());
    let mut lt = Vec::with_capacity(grid.len());
    let (mut y, mut l) = (x0, 0.0);
    v.push(y);
    lt.push(l);
    for (k, d) in db.iter().enumerate() {
        let s = finite(coeff.sigma.eval(y), k, "sigma")?;
        let b = finite(coeff.drift.eval(y), k, "drift")?;
        let free = finite(y + s * d + b * dt, k + 1, "state")?;
        if free < 0.0 {
            l += -2.0 * free;
            y = 0.0;
        } else {
            y = free;
        }
        v.push(y);
        lt.push(l);
    }
    let curve = LocalTimeCurve { grid, level: 0.0, values: lt, tag: EstimatorTag::SchemeTally };
    Ok(SolutionPath { state: SamplePath::with_drivers(grid, v, vec![db])?, local_time: Some(curve) })
}

/// Solves `X = X_0 + ∫σ(X)dB + ∫L^a(X)ν(da)` through `Y = F_ν(X)`, which
/// satisfies `dY = f_ν(X)σ(X)dB`; returns `X = F_ν^{-1}(Y)`.
pub fn local_time_drift_solver(
    measure: &SignedMeasure,
    sigma: &Coefficient,
    driver: &SamplePath,
    x0: f64,
) -> Result<SolutionPath> {
    let scale = ScaleFunction::new(measure)?;
    local_time_drift_solver_with(&scale, sigma, driver, x0)
}

/// As `local_time_drift_solver` with a prebuilt scale function.
pub fn local_time_drift_solver_with(
    scale: &ScaleFunction,
    sigma: &Coefficient,
    driver: &SamplePath,
    x0: f64,
) -> Result<SolutionPath> {
    let grid = *driver.grid();
    let db = driver_increments(driver);
    let mut v = Vec::with_capacity(grid.len());
    let mut x = finite(x0, 0, "x0")?;
    let mut y = scale.eval(x);
    v.push(x);
    for (k, d) in db.iter().enumerate() {
        let g = scale.derivative(x) * sigma.eval(x);
        y = finite(y + g * d, k + 1, "transformed state")?;
        x = scale.inverse(y).map_err(|e| Error::Numerical(format!("step {}: {e}", k + 1)))?;
        v.push(x);
    }
    Ok(SolutionPath { state: SamplePath::with_drivers(grid, v, vec![db])?, local_time: None })
}

/// Lattice walk with steps ±√dt; from the exact lattice zero it steps up
/// with probability (1+β)/2.
pub fn skew_walk(beta: f64, grid: TimeGrid, seed: SeedSpec) -> Result<SolutionPath> {
    if !(beta.abs() <= 1.0) {
        return Err(Error::param("beta", format!("|beta| = {} > 1 has no solution", beta.abs())));
    }
    let mut rng = seed.rng(0);
    let s = grid.sqrt_dt();
    let p_up = 0.5 * (1.0 + beta);
    let mut pos: i64 = 0;
    let mut v = Vec::with_capacity(grid.len());
    v.push(0.0);
    for _ in 0..grid.steps() {
        let u: f64 = rng.random();
        let up = if pos == 0 { u < p_up } else { u < 0.5 };
        pos += if up { 1 } else { -1 };
        v.push(pos as f64 * s);
    }
    Ok(SolutionPath { state: SamplePath::new(grid, v)?, local_time: None })
}

/// Terminal value of [`skew_walk`] spread uniformly over its lattice cell,
/// `X_T + U(−√dt, √dt)`, so that samples can be compared with a continuous
/// law by KS. For β = 1 the reflected value is returned.
pub fn skew_walk_terminal_smoothed(beta: f64, grid: TimeGrid, seed: SeedSpec) -> Result<f64> {
    let x = skew_walk(beta, grid, seed)?.terminal();
    let s = grid.sqrt_dt();
    let y = x + seed.rng(1).random_range(-s..s);
    Ok(if beta == 1.0 { y.abs() } else { y })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::sample_brownian;
    use crate::stats::{
        half_normal_cdf, ks_critical_one_sample, ks_critical_two_sample, ks_one_sample, ks_two_sample, Summary,
    };

    fn grid() -> TimeGrid {
        TimeGrid::dyadic(1.0, 10).unwrap()
    }

    fn bm(i: u64) -> SamplePath {
        sample_brownian(grid(), SeedSpec::new(404, i)).unwrap()
    }

    #[test]
    fn euler_trivial_cases() {
        let b = bm(0);
        let drift = CoefficientSpec::new(Coefficient::constant(0.0), Coefficient::constant(1.0));
        let x = euler_maruyama(&drift, &b, 0.5).unwrap();
        assert!((x.terminal() - 1.5).abs() < 1e-12);
        let x = euler_maruyama(&CoefficientSpec::brownian(), &b, 0.5).unwrap();
        for (a, c) in x.state.values().iter().zip(b.values()) {
            assert!((a - (0.5 + c)).abs() < 1e-12);
        }
    }

    #[test]
    fn euler_martingale_mean() {
        let spec = CoefficientSpec::new(Coefficient::Linear { intercept: 0.0, slope: 1.0 }, Coefficient::constant(0.0));
        let s =
            Summary::of(&(0..2048).map(|i| euler_maruyama(&spec, &bm(i), 1.0).unwrap().terminal()).collect::<Vec<_>>());
        assert!((s.mean - 1.0).abs() <= 3.0 * s.stderr());
    }

    #[test]
    fn euler_flags_non_finite() {
        let spec = CoefficientSpec::new(
            Coefficient::custom("blowup", |x| if x > 0.1 { f64::NAN } else { 1.0 }),
            Coefficient::constant(0.0),
        );
        let err = (0..64).find_map(|i| euler_maruyama(&spec, &bm(i), 0.0).err()).unwrap();
        assert!(matches!(err, Error::NonFinite { .. }));
    }

    #[test]
    fn reflected_law_and_tally() {
        let spec = CoefficientSpec::brownian();
        let mut ys = Vec::new();
        let mut rel = Summary::default();
        for i in 0..4096 {
            let b = bm(i);
            let y = reflected_euler(&spec, &b, 0.0).unwrap();
            assert!(y.state.values().iter().all(|v| *v >= 0.0));
            let k = b.values().iter().fold(0.0f64, |m, v| m.max(-v));
            let half = 0.5 * y.local_time.as_ref().unwrap().terminal();
            // on a grid the projection reproduces the discrete Skorokhod map exactly
            assert!((half - k).abs() <= 1e-12 * (1.0 + k));
            rel.push(half - k);
            ys.push(y.terminal());
        }
        let d = ks_one_sample(&ys, half_normal_cdf);
        assert!(d < ks_critical_one_sample(ys.len()), "ks {d}");
    }

    #[test]
    fn reflected_rejects_negative_start_and_skips_rising_driver() {
        let g = grid();
        let rising = SamplePath::from_fn(g, |t| t).unwrap();
        assert!(reflected_euler(&CoefficientSpec::brownian(), &rising, -0.1).is_err());
        let y = reflected_euler(&CoefficientSpec::brownian(), &rising, 0.0).unwrap();
        assert_eq!(y.local_time.unwrap().terminal(), 0.0);
        for (a, c) in y.state.values().iter().zip(rising.values()) {
            assert!((a - c).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_measure_matches_euler_bitwise() {
        let b = bm(3);
        let sigma = Coefficient::SqrtCap { cap: 1.0, scale: 0.5, shift: 0.5 };
        let a = local_time_drift_solver(&SignedMeasure::zero(), &sigma, &b, 0.2).unwrap();
        let e = euler_maruyama(&CoefficientSpec::new(sigma, Coefficient::constant(0.0)), &b, 0.2).unwrap();
        assert_eq!(a.state.values(), e.state.values());
    }

    #[test]
    fn skew_laws() {
        let g = grid();
        for beta in [-0.5, 0.0, 0.5] {
            let m = SignedMeasure::atom(0.0, beta).unwrap();
            let scale = ScaleFunction::new(&m).unwrap();
            let (mut ltd, mut walk) = (Vec::new(), Vec::new());
            for i in 0..4096 {
                ltd.push(
                    local_time_drift_solver_with(&scale, &Coefficient::constant(1.0), &bm(i), 0.0).unwrap().terminal(),
                );
                walk.push(skew_walk_terminal_smoothed(beta, g, SeedSpec::new(505, i)).unwrap());
            }
            let p: Vec<f64> = ltd.iter().map(|x| if *x > 0.0 { 1.0 } else { 0.0 }).collect();
            let s = Summary::of(&p);
            assert!((s.mean - 0.5 * (1.0 + beta)).abs() <= 3.0 * s.stderr(), "beta {beta}: {}", s.mean);
            let d = ks_two_sample(&ltd, &walk);
            assert!(d < ks_critical_two_sample(4096, 4096), "beta {beta}: ks {d}");
        }
    }

    #[test]
    fn skew_walk_edges() {
        let g = grid();
        assert!(skew_walk(1.5, g, SeedSpec::new(0, 0)).is_err());
        let w = skew_walk(1.0, g, SeedSpec::new(0, 0)).unwrap();
        assert!(w.state.values().iter().all(|v| *v >= 0.0));
        assert_eq!(w, skew_walk(1.0, g, SeedSpec::new(0, 0)).unwrap());
        let ys: Vec<f64> =
            (0..4096).map(|i| skew_walk_terminal_smoothed(1.0, g, SeedSpec::new(9, i)).unwrap()).collect();
        let d = ks_one_sample(&ys, half_normal_cdf);
        assert!(d < ks_critical_one_sample(ys.len()), "{d}");
    }
}
