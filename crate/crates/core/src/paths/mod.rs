//! Time grids, Brownian drivers, variation processes and the zero set.

mod grid;
mod seed;
mod zeros;

pub use grid::TimeGrid;
pub use seed::SeedSpec;
pub use zeros::{
    excursion_decompose, last_zero_before, last_zero_index, zero_points, zero_tolerance, Excursion, ExcursionList,
};

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Values of a process on a uniform grid, optionally with the driver
/// increments that produced it (one vector of length N per channel).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePath {
    grid: TimeGrid,
    values: Vec<f64>,
    driver_increments: Vec<Vec<f64>>,
}

impl SamplePath {
    pub fn new(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        Self::with_drivers(grid, values, Vec::new())
    }

    pub fn with_drivers(grid: TimeGrid, values: Vec<f64>, driver_increments: Vec<Vec<f64>>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!("path has {} values, grid needs {}", values.len(), grid.len())));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { step: k, detail: format!("path value {}", values[k]) });
        }
        for (c, inc) in driver_increments.iter().enumerate() {
            if inc.len() != grid.steps() {
                return Err(Error::GridMismatch(format!(
                    "driver channel {c} has {} increments, grid needs {}",
                    inc.len(),
                    grid.steps()
                )));
            }
        }
        Ok(Self { grid, values, driver_increments })
    }

    /// Path built from increments, starting at `x0`.
    pub fn from_increments(grid: TimeGrid, x0: f64, increments: &[f64]) -> Result<Self> {
        if increments.len() != grid.steps() {
            return Err(Error::GridMismatch(format!("{} increments for {} steps", increments.len(), grid.steps())));
        }
        let mut values = Vec::with_capacity(grid.len());
        let mut x = x0;
        values.push(x);
        for d in increments {
            x += d;
            values.push(x);
        }
        Self::new(grid, values)
    }

    pub fn constant(grid: TimeGrid, c: f64) -> Result<Self> {
        Self::new(grid, vec![c; grid.len()])
    }

    pub fn from_fn(grid: TimeGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.times().into_iter().map(f).collect())
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn value(&self, k: usize) -> f64 {
        self.values[k]
    }

    pub fn terminal(&self) -> f64 {
        self.values[self.grid.steps()]
    }

    pub fn initial(&self) -> f64 {
        self.values[0]
    }

    pub fn driver_increments(&self) -> &[Vec<f64>] {
        &self.driver_increments
    }

    pub fn increments(&self) -> Vec<f64> {
        self.values.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Driver channel `c` rebuilt from its increments, starting at 0.
    pub fn driver(&self, c: usize) -> Option<SamplePath> {
        let inc = self.driver_increments.get(c)?;
        SamplePath::from_increments(self.grid, 0.0, inc).ok()
    }

    /// Pointwise map; drops driver increments since they no longer describe the result.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<SamplePath> {
        SamplePath::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn scale(&self, c: f64) -> Result<SamplePath> {
        self.map(|v| c * v)
    }

    pub fn shift(&self, a: f64) -> Result<SamplePath> {
        self.map(|v| v + a)
    }

    pub fn zip_with(&self, other: &SamplePath, f: impl Fn(f64, f64) -> f64) -> Result<SamplePath> {
        self.grid.ensure_same(&other.grid, "zip_with")?;
        SamplePath::new(self.grid, self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect())
    }

    pub fn sup_norm_distance(&self, other: &SamplePath) -> Result<f64> {
        self.grid.ensure_same(&other.grid, "sup_norm_distance")?;
        Ok(self.values.iter().zip(&other.values).fold(0.0, |m, (a, b)| f64::max(m, (a - b).abs())))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| f64::max(m, v.abs()))
    }
}

/// Declared covariation rule for a pair of driver channels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CrossStructure {
    Zero,
    /// ⟨X, Y⟩_t = c·t
    Linear(f64),
}

impl CrossStructure {
    pub fn rate(&self) -> f64 {
        match self {
            CrossStructure::Zero => 0.0,
            CrossStructure::Linear(c) => *c,
        }
    }
}

/// How the two channels of `sample_correlated_pair` are coupled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PairMode {
    Independent,
    /// ⟨W, V⟩_t = −t/η
    BracketMinusTOverEta(f64),
}

/// Brownian channels on one grid with declared pairwise covariation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriverSet {
    channels: Vec<SamplePath>,
    cross: Vec<((usize, usize), CrossStructure)>,
}

impl DriverSet {
    pub fn new(channels: Vec<SamplePath>, cross: Vec<((usize, usize), CrossStructure)>) -> Result<Self> {
        let Some(first) = channels.first() else {
            return Err(Error::param("channels", "driver set needs at least one channel"));
        };
        for c in &channels[1..] {
            first.grid().ensure_same(c.grid(), "driver channels")?;
        }
        for ((i, j), _) in &cross {
            if *i >= channels.len() || *j >= channels.len() {
                return Err(Error::param("cross", format!("pair ({i}, {j}) out of range")));
            }
        }
        Ok(Self { channels, cross })
    }

    pub fn channels(&self) -> &[SamplePath] {
        &self.channels
    }

    pub fn channel(&self, i: usize) -> &SamplePath {
        &self.channels[i]
    }

    pub fn grid(&self) -> &TimeGrid {
        self.channels[0].grid()
    }

    /// Declared rule for the pair, `Zero` when undeclared.
    pub fn cross_structure(&self, i: usize, j: usize) -> CrossStructure {
        self.cross
            .iter()
            .find(|((a, b), _)| (*a, *b) == (i, j) || (*a, *b) == (j, i))
            .map(|(_, s)| *s)
            .unwrap_or(CrossStructure::Zero)
    }
}

/// Standard normal increments with variance `dt`, from channel `channel` of `seed`.
pub fn gaussian_increments(grid: &TimeGrid, seed: SeedSpec, channel: u64) -> Vec<f64> {
    let mut rng = seed.rng(channel);
    let s = grid.sqrt_dt();
    (0..grid.steps())
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            s * z
        })
        .collect()
}

/// Standard Brownian motion started at 0; channel 0 of `seed`.
pub fn sample_brownian(grid: TimeGrid, seed: SeedSpec) -> Result<SamplePath> {
    sample_brownian_channel(grid, seed, 0)
}

pub fn sample_brownian_channel(grid: TimeGrid, seed: SeedSpec, channel: u64) -> Result<SamplePath> {
    let inc = gaussian_increments(&grid, seed, channel);
    let path = SamplePath::from_increments(grid, 0.0, &inc)?;
    SamplePath::with_drivers(grid, path.into_values(), vec![inc])
}

/// Two Brownian channels `(W, V)`. In bracket mode `V = ρW + √(1−ρ²)B'` with ρ = −1/η.
pub fn sample_correlated_pair(grid: TimeGrid, seed: SeedSpec, mode: PairMode) -> Result<DriverSet> {
    let rho = match mode {
        PairMode::Independent => 0.0,
        PairMode::BracketMinusTOverEta(eta) => {
            if eta == 0.0 || !eta.is_finite() {
                return Err(Error::param("eta", "must be finite and nonzero"));
            }
            if eta.abs() < 1.0 {
                return Err(Error::param(
                    "eta",
                    format!("|eta| = {} < 1 gives correlation {} outside [-1, 1]", eta.abs(), -1.0 / eta),
                ));
            }
            -1.0 / eta
        }
    };
    let w_inc = gaussian_increments(&grid, seed, 0);
    let b_inc = gaussian_increments(&grid, seed, 1);
    let c = (1.0 - rho * rho).max(0.0).sqrt();
    let v_inc: Vec<f64> = w_inc.iter().zip(&b_inc).map(|(w, b)| rho * w + c * b).collect();
    let w = SamplePath::from_increments(grid, 0.0, &w_inc)?;
    let v = SamplePath::from_increments(grid, 0.0, &v_inc)?;
    let w = SamplePath::with_drivers(grid, w.into_values(), vec![w_inc])?;
    let v = SamplePath::with_drivers(grid, v.into_values(), vec![v_inc])?;
    let cross = match mode {
        PairMode::Independent => CrossStructure::Zero,
        PairMode::BracketMinusTOverEta(_) => CrossStructure::Linear(rho),
    };
    DriverSet::new(vec![w, v], vec![((0, 1), cross)])
}

/// Cumulative sum of squared increments.
pub fn quadratic_variation(path: &SamplePath) -> SamplePath {
    let v = path.values();
    let mut out = Vec::with_capacity(v.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in v.windows(2) {
        let d = w[1] - w[0];
        acc += d * d;
        out.push(acc);
    }
    SamplePath { grid: *path.grid(), values: out, driver_increments: Vec::new() }
}

/// Cumulative sum of increment products.
pub fn cross_variation(x: &SamplePath, y: &SamplePath) -> Result<SamplePath> {
    x.grid().ensure_same(y.grid(), "cross_variation")?;
    let (a, b) = (x.values(), y.values());
    let mut out = Vec::with_capacity(a.len());
    let mut acc = 0.0;
    out.push(0.0);
    for k in 0..a.len() - 1 {
        acc += (a[k + 1] - a[k]) * (b[k + 1] - b[k]);
        out.push(acc);
    }
    Ok(SamplePath { grid: *x.grid(), values: out, driver_increments: Vec::new() })
}
