use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sign with the convention `sgn(0) = −1`.
#[inline]
pub fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Named coefficient families, addressable from config files.
#[derive(Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coefficient {
    Constant {
        value: f64,
    },
    /// `intercept + slope·x`
    Linear {
        intercept: f64,
        slope: f64,
    },
    /// `scale·sgn(x)` with `sgn(0) = −1`
    Sign {
        scale: f64,
    },
    /// `shift + scale·min(|x|^{1/2}, cap)`
    SqrtCap {
        cap: f64,
        scale: f64,
        shift: f64,
    },
    /// `left` for `x ≤ at`, `right` for `x > at`
    Step {
        at: f64,
        left: f64,
        right: f64,
    },
    /// Piecewise linear through knots, constant beyond the end knots.
    Table {
        knots: Vec<(f64, f64)>,
    },
    #[serde(skip)]
    Custom {
        name: String,
        f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.describe())
    }
}

impl PartialEq for Coefficient {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Self::Custom { name: a, f: fa }, Self::Custom { name: b, f: fb }) => a == b && Arc::ptr_eq(fa, fb),
            (Self::Custom { .. }, _) | (_, Self::Custom { .. }) => false,
            _ => self.describe() == other.describe(),
        }
    }
}

impl Coefficient {
    pub fn constant(value: f64) -> Self {
        Self::Constant { value }
    }

    pub fn sign() -> Self {
        Self::Sign { scale: 1.0 }
    }

    pub fn sqrt_cap(cap: f64) -> Self {
        Self::SqrtCap { cap, scale: 1.0, shift: 0.0 }
    }

    pub fn indicator_positive() -> Self {
        Self::Step { at: 0.0, left: 0.0, right: 1.0 }
    }

    pub fn custom(name: &str, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::Custom { name: name.to_string(), f: Arc::new(f) }
    }

    pub fn table(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.is_empty() || knots.windows(2).any(|w| !(w[0].0 < w[1].0)) {
            return Err(Error::param("knots", "table knots must be nonempty and strictly increasing"));
        }
        if knots.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(Error::param("knots", "table knots must be finite"));
        }
        Ok(Self::Table { knots })
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Self::Constant { value } => *value,
            Self::Linear { intercept, slope } => intercept + slope * x,
            Self::Sign { scale } => scale * sgn(x),
            Self::SqrtCap { cap, scale, shift } => shift + scale * x.abs().sqrt().min(*cap),
            Self::Step { at, left, right } => {
                if x > *at {
                    *right
                } else {
                    *left
                }
            }
            Self::Table { knots } => {
                let i = knots.partition_point(|(k, _)| *k <= x);
                if i == 0 {
                    knots[0].1
                } else if i == knots.len() {
                    knots[i - 1].1
                } else {
                    let (x0, y0) = knots[i - 1];
                    let (x1, y1) = knots[i];
                    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
                }
            }
            Self::Custom { f, .. } => f(x),
        }
    }

    /// Literal form used in reports and config files.
    pub fn describe(&self) -> String {
        match self {
            Self::Constant { value } => format!("constant({value})"),
            Self::Linear { intercept, slope } => format!("linear({intercept}, {slope})"),
            Self::Sign { scale } => format!("sign({scale})"),
            Self::SqrtCap { cap, scale, shift } => format!("sqrt_cap({cap}, {scale}, {shift})"),
            Self::Step { at, left, right } => format!("step({at}, {left}, {right})"),
            Self::Table { knots } => {
                let k: Vec<String> = knots.iter().map(|(x, y)| format!("{x}:{y}")).collect();
                format!("table({})", k.join(", "))
            }
            Self::Custom { name, .. } => format!("custom({name})"),
        }
    }

    /// Parses the `describe` form. Custom coefficients cannot be parsed.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::param("coefficient", format!("cannot parse `{s}`"));
        let open = s.find('(').ok_or_else(bad)?;
        if !s.ends_with(')') {
            return Err(bad());
        }
        let name = s[..open].trim();
        let body = &s[open + 1..s.len() - 1];
        if name == "table" {
            let knots = body
                .split(',')
                .map(|p| {
                    let (x, y) = p.split_once(':').ok_or_else(bad)?;
                    Ok((x.trim().parse::<f64>().map_err(|_| bad())?, y.trim().parse::<f64>().map_err(|_| bad())?))
                })
                .collect::<Result<Vec<_>>>()?;
            return Self::table(knots);
        }
        let args: Vec<f64> = if body.trim().is_empty() {
            Vec::new()
        } else {
            body.split(',').map(|a| a.trim().parse::<f64>().map_err(|_| bad())).collect::<Result<_>>()?
        };
        if args.iter().any(|a| !a.is_finite()) {
            return Err(bad());
        }
        let c = match (name, args.as_slice()) {
            ("constant", [v]) => Self::Constant { value: *v },
            ("linear", [a, b]) => Self::Linear { intercept: *a, slope: *b },
            ("sign", []) => Self::Sign { scale: 1.0 },
            ("sign", [s]) => Self::Sign { scale: *s },
            ("sqrt_cap", [c]) => Self::SqrtCap { cap: *c, scale: 1.0, shift: 0.0 },
            ("sqrt_cap", [c, s, h]) => Self::SqrtCap { cap: *c, scale: *s, shift: *h },
            ("step", [at, l, r]) => Self::Step { at: *at, left: *l, right: *r },
            _ => return Err(bad()),
        };
        Ok(c)
    }
}

/// Declared metadata about a coefficient, spot-checked rather than assumed.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CoefficientProperties {
    pub bound: Option<f64>,
    pub odd: bool,
    pub lipschitz: Option<f64>,
}

/// σ and b of `dX = σ(X)dB + b(X)dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSpec {
    pub sigma: Coefficient,
    pub drift: Coefficient,
    pub sigma_props: CoefficientProperties,
    pub drift_props: CoefficientProperties,
}

impl CoefficientSpec {
    pub fn new(sigma: Coefficient, drift: Coefficient) -> Self {
        Self {
            sigma,
            drift,
            sigma_props: CoefficientProperties::default(),
            drift_props: CoefficientProperties::default(),
        }
    }

    pub fn brownian() -> Self {
        Self::new(Coefficient::constant(1.0), Coefficient::constant(0.0))
    }

    /// Evaluates declared properties on `samples` points of `[lo, hi]`;
    /// returns a description of each one that fails.
    pub fn spot_check(&self, lo: f64, hi: f64, samples: usize) -> Vec<String> {
        let mut bad = Vec::new();
        let xs: Vec<f64> =
            (0..samples.max(2)).map(|i| lo + (hi - lo) * i as f64 / (samples.max(2) - 1) as f64).collect();
        for (name, c, p) in [("sigma", &self.sigma, &self.sigma_props), ("drift", &self.drift, &self.drift_props)] {
            if let Some(m) = p.bound {
                if let Some(x) = xs.iter().find(|&&x| c.eval(x).abs() > m) {
                    bad.push(format!("{name} exceeds declared bound {m} at {x}"));
                }
            }
            if p.odd {
                if let Some(x) =
                    xs.iter().find(|&&x| x != 0.0 && (c.eval(-x) + c.eval(x)).abs() > 1e-12 * (1.0 + c.eval(x).abs()))
                {
                    bad.push(format!("{name} is not odd at {x}"));
                }
            }
            if let Some(l) = p.lipschitz {
                if let Some(w) =
                    xs.windows(2).find(|w| (c.eval(w[1]) - c.eval(w[0])).abs() > l * (w[1] - w[0]) * (1.0 + 1e-12))
                {
                    bad.push(format!("{name} exceeds Lipschitz constant {l} on [{}, {}]", w[0], w[1]));
                }
            }
        }
        bad
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn families() {
        assert_eq!(sgn(0.0), -1.0);
        assert_eq!(Coefficient::sign().eval(0.0), -1.0);
        assert_eq!(Coefficient::sign().eval(1e-300), 1.0);
        assert_eq!(Coefficient::sqrt_cap(1.0).eval(0.25), 0.5);
        assert_eq!(Coefficient::sqrt_cap(1.0).eval(-4.0), 1.0);
        let s = Coefficient::Step { at: 0.0, left: -2.0, right: 1.0 };
        assert_eq!((s.eval(0.0), s.eval(0.1)), (-2.0, 1.0));
        let t = Coefficient::table(vec![(0.0, 0.0), (1.0, 2.0)]).unwrap();
        assert_eq!((t.eval(-1.0), t.eval(0.5), t.eval(3.0)), (0.0, 1.0, 2.0));
        assert!(Coefficient::table(vec![(1.0, 0.0), (0.0, 1.0)]).is_err());
    }

    #[test]
    fn literal_round_trip() {
        let cs = [
            Coefficient::constant(0.5),
            Coefficient::Linear { intercept: 1.0, slope: -0.25 },
            Coefficient::Sign { scale: 2.0 },
            Coefficient::SqrtCap { cap: 1.0, scale: 0.5, shift: 1.0 },
            Coefficient::Step { at: 0.0, left: -1.0, right: 3.0 },
            Coefficient::table(vec![(-1.0, 0.5), (2.0, 1.5)]).unwrap(),
        ];
        for c in cs {
            assert_eq!(Coefficient::parse(&c.describe()).unwrap(), c);
        }
        assert!(Coefficient::parse("wiggle(1)").is_err());
        assert!(Coefficient::parse("constant(nan)").is_err());
        assert!(Coefficient::parse("custom(x)").is_err());
    }

    #[test]
    fn spot_checks() {
        let mut spec = CoefficientSpec::new(Coefficient::sign(), Coefficient::Linear { intercept: 0.0, slope: 2.0 });
        spec.sigma_props.bound = Some(1.0);
        spec.drift_props.odd = true;
        spec.drift_props.lipschitz = Some(2.0);
        assert!(spec.spot_check(-3.0, 3.0, 101).is_empty());
        spec.drift_props.lipschitz = Some(1.0);
        spec.sigma_props.bound = Some(0.5);
        assert_eq!(spec.spot_check(-3.0, 3.0, 100).len(), 2);
    }
}
