use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform time grid on `[0, horizon]` with `steps` intervals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    horizon: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidGrid(format!("horizon must be positive, got {horizon}")));
        }
        if steps == 0 {
            return Err(Error::InvalidGrid("steps must be at least 1".into()));
        }
        // N+1 values per path must be addressable
        if steps.checked_add(1).and_then(|n| n.checked_mul(8)).is_none() {
            return Err(Error::InvalidGrid(format!("{steps} steps do not fit in memory")));
        }
        Ok(Self { horizon, steps })
    }

    /// Grid with `2^-log2_steps` spacing on `[0, 1]` style horizons.
    pub fn dyadic(horizon: f64, log2_steps: u32) -> Result<Self> {
        Self::new(horizon, 1usize << log2_steps)
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn sqrt_dt(&self) -> f64 {
        self.dt().sqrt()
    }

    pub fn time(&self, index: usize) -> f64 {
        if index == self.steps {
            self.horizon
        } else {
            index as f64 * self.dt()
        }
    }

    /// Largest grid index whose time does not exceed `t`.
    pub fn index_at(&self, t: f64) -> usize {
        if t >= self.horizon {
            return self.steps;
        }
        ((t / self.dt()).floor().max(0.0) as usize).min(self.steps)
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps).map(|k| self.time(k)).collect()
    }

    pub(crate) fn ensure_same(&self, other: &TimeGrid, what: &str) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{what}: ({}, {}) vs ({}, {})",
                self.horizon, self.steps, other.horizon, other.steps
            )))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_grids() {
        assert!(TimeGrid::new(0.0, 10).is_err());
        assert!(TimeGrid::new(-1.0, 10).is_err());
        assert!(TimeGrid::new(f64::NAN, 10).is_err());
        assert!(TimeGrid::new(1.0, 0).is_err());
    }

    #[test]
    fn spacing_is_exact_for_dyadic_grids() {
        let g = TimeGrid::dyadic(1.0, 12).unwrap();
        assert_eq!(g.dt(), 1.0 / 4096.0);
        assert_eq!(g.time(4096), 1.0);
        assert_eq!(g.index_at(0.5), 2048);
        assert_eq!(g.len(), 4097);
    }
}
