//! The measure ν and the scale functions f_ν, F_ν that remove a local-time drift.

mod literal;
mod quad;
mod scale;

pub use quad::{adaptive_simpson, gauss_legendre8};
pub use scale::{f_nu, F_nu, F_nu_inverse, ScaleFunction};

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Named density families for the continuous part of ν.
#[derive(Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityFamily {
    Constant {
        value: f64,
    },
    Linear {
        intercept: f64,
        slope: f64,
    },
    Gaussian {
        amplitude: f64,
        center: f64,
        width: f64,
    },
    /// Piecewise linear through `(x, value)` knots with strictly increasing x.
    Table {
        knots: Vec<(f64, f64)>,
    },
    #[serde(skip)]
    Custom {
        name: String,
        f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
}

impl fmt::Debug for DensityFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant { value } => write!(f, "Constant({value})"),
            Self::Linear { intercept, slope } => write!(f, "Linear({intercept}, {slope})"),
            Self::Gaussian { amplitude, center, width } => write!(f, "Gaussian({amplitude}, {center}, {width})"),
            Self::Table { knots } => write!(f, "Table({knots:?})"),
            Self::Custom { name, .. } => write!(f, "Custom({name})"),
        }
    }
}

impl PartialEq for DensityFamily {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Self::Custom { name: a, f: fa }, Self::Custom { name: b, f: fb }) => a == b && Arc::ptr_eq(fa, fb),
            (Self::Custom { .. }, _) | (_, Self::Custom { .. }) => false,
            _ => format!("{self:?}") == format!("{other:?}"),
        }
    }
}

impl DensityFamily {
    fn eval(&self, x: f64) -> f64 {
        match self {
            Self::Constant { value } => *value,
            Self::Linear { intercept, slope } => intercept + slope * x,
            Self::Gaussian { amplitude, center, width } => {
                let z = (x - center) / width;
                amplitude * (-0.5 * z * z).exp()
            }
            Self::Table { knots } => {
                let i = knots.partition_point(|(k, _)| *k <= x);
                if i == 0 || i == knots.len() {
                    return if i == knots.len() && knots.last().is_some_and(|(k, _)| *k == x) {
                        knots[knots.len() - 1].1
                    } else {
                        0.0
                    };
                }
                let (x0, y0) = knots[i - 1];
                let (x1, y1) = knots[i];
                y0 + (y1 - y0) * (x - x0) / (x1 - x0)
            }
            Self::Custom { f, .. } => f(x),
        }
    }

    /// Points where the family is not smooth.
    fn kinks(&self) -> Vec<f64> {
        match self {
            Self::Table { knots } => knots.iter().map(|(x, _)| *x).collect(),
            _ => Vec::new(),
        }
    }
}

/// Continuous part of ν: a family restricted to the compact support `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Density {
    pub family: DensityFamily,
    pub lo: f64,
    pub hi: f64,
}

impl Density {
    pub fn new(family: DensityFamily, lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidMeasure(format!("density support [{lo}, {hi}] must be a finite interval")));
        }
        if let DensityFamily::Table { knots } = &family {
            if knots.len() < 2 || knots.windows(2).any(|w| !(w[0].0 < w[1].0)) {
                return Err(Error::InvalidMeasure("table knots must be strictly increasing, at least two".into()));
            }
        }
        if let DensityFamily::Gaussian { width, .. } = &family {
            if !(*width > 0.0) {
                return Err(Error::InvalidMeasure("gaussian width must be positive".into()));
            }
        }
        let d = Self { family, lo, hi };
        // bounded on the support, checked on a sample
        for i in 0..=256 {
            let x = lo + (hi - lo) * i as f64 / 256.0;
            if !d.eval(x).is_finite() {
                return Err(Error::InvalidMeasure(format!("density not finite at {x}")));
            }
        }
        Ok(d)
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x < self.lo || x > self.hi {
            0.0
        } else {
            self.family.eval(x)
        }
    }

    /// Breakpoints in `[lo, hi]`, including both ends.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b = vec![self.lo, self.hi];
        b.extend(self.family.kinks().into_iter().filter(|x| *x > self.lo && *x < self.hi));
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }
}

/// ν = Σ w_i δ_{a_i} + density, with `|w_i| < 1` and strictly increasing `a_i`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SignedMeasure {
    atoms: Vec<(f64, f64)>,
    density: Option<Density>,
}

impl SignedMeasure {
    pub fn new(atoms: Vec<(f64, f64)>, density: Option<Density>) -> Result<Self> {
        for &(a, w) in &atoms {
            if !a.is_finite() || !w.is_finite() {
                return Err(Error::InvalidMeasure(format!("atom ({a}, {w}) is not finite")));
            }
            if w.abs() >= 1.0 {
                return Err(Error::InvalidMeasure(format!("atom at {a} has |weight| = {} ≥ 1", w.abs())));
            }
        }
        if atoms.windows(2).any(|p| !(p[0].0 < p[1].0)) {
            return Err(Error::InvalidMeasure("atom locations must be strictly increasing".into()));
        }
        Ok(Self { atoms, density })
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn atom(location: f64, weight: f64) -> Result<Self> {
        Self::new(vec![(location, weight)], None)
    }

    pub fn continuous(density: Density) -> Result<Self> {
        Self::new(Vec::new(), Some(density))
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn density(&self) -> Option<&Density> {
        self.density.as_ref()
    }

    pub fn is_zero(&self) -> bool {
        self.atoms.iter().all(|(_, w)| *w == 0.0) && self.density.is_none()
    }

    pub fn is_pure_atomic(&self) -> bool {
        self.density.is_none()
    }

    pub fn density_at(&self, x: f64) -> f64 {
        self.density.as_ref().map_or(0.0, |d| d.eval(x))
    }

    /// Signed continuous mass `ν^c(0, y]`, with `ν^c(0, y] = −ν^c(y, 0]` for `y < 0`.
    pub fn continuous_mass(&self, y: f64) -> Result<f64> {
        let Some(d) = &self.density else {
            return Ok(0.0);
        };
        let (a, b, sign) = if y >= 0.0 { (0.0, y, 1.0) } else { (y, 0.0, -1.0) };
        let (lo, hi) = (a.max(d.lo), b.min(d.hi));
        if lo >= hi {
            return Ok(0.0);
        }
        let mut pts = vec![lo, hi];
        pts.extend(d.breakpoints().into_iter().filter(|x| *x > lo && *x < hi));
        pts.sort_by(f64::total_cmp);
        let f = |x: f64| d.eval(x);
        let mut s = 0.0;
        for w in pts.windows(2) {
            s += adaptive_simpson(&f, w[0], w[1], 1e-13)?;
        }
        Ok(sign * s)
    }

    /// Total variation of the continuous part.
    pub fn continuous_total_variation(&self) -> Result<f64> {
        let Some(d) = &self.density else {
            return Ok(0.0);
        };
        let f = |x: f64| d.eval(x).abs();
        let b = d.breakpoints();
        b.windows(2).map(|w| adaptive_simpson(&f, w[0], w[1], 1e-12)).sum()
    }

    /// Guaranteed bounds `m ≤ f_ν ≤ M` from total variation.
    pub fn f_bounds(&self) -> Result<(f64, f64)> {
        let tv = self.continuous_total_variation()?;
        let mut lo = (-2.0 * tv).exp();
        let mut hi = (2.0 * tv).exp();
        for (_, w) in &self.atoms {
            let r = (1.0 - w.abs()) / (1.0 + w.abs());
            lo *= r;
            hi /= r;
        }
        Ok((lo, hi))
    }
}

/// Density `b/σ²` on `[lo, hi]`, set to 0 where `σ = 0`.
pub fn drift_to_measure(
    sigma: impl Fn(f64) -> f64 + Send + Sync + 'static,
    b: impl Fn(f64) -> f64 + Send + Sync + 'static,
    support_box: (f64, f64),
) -> Result<SignedMeasure> {
    let (lo, hi) = support_box;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::param("support_box", format!("[{lo}, {hi}] must be a finite interval")));
    }
    let f = move |x: f64| {
        let s = sigma(x);
        if s == 0.0 {
            0.0
        } else {
            b(x) / (s * s)
        }
    };
    // integrability check on the box before wrapping
    let mass = adaptive_simpson(&|x: f64| f(x).abs(), lo, hi, 1e-10)
        .map_err(|e| Error::InvalidMeasure(format!("b/σ² not integrable on [{lo}, {hi}]: {e}")))?;
    if mass == 0.0 {
        return Ok(SignedMeasure::zero());
    }
    SignedMeasure::continuous(Density::new(DensityFamily::Custom { name: "b/sigma^2".into(), f: Arc::new(f) }, lo, hi)?)
}
