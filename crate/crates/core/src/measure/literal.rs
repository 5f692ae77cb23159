//! Text form of a signed measure for config files:
//! `atom(0, 0.5); gaussian(1, 0, 0.25) on [-1, 1]`, or `zero`.

use super::{Density, DensityFamily, SignedMeasure};
use crate::error::{Error, Result};

fn bad(s: &str, why: &str) -> Error {
    Error::InvalidMeasure(format!("cannot parse `{s}`: {why}"))
}

fn call(s: &str) -> Result<(&str, &str)> {
    let open = s.find('(').ok_or_else(|| bad(s, "expected name(args)"))?;
    if !s.ends_with(')') {
        return Err(bad(s, "missing `)`"));
    }
    Ok((s[..open].trim(), &s[open + 1..s.len() - 1]))
}

fn numbers(s: &str, body: &str) -> Result<Vec<f64>> {
    body.split(',')
        .map(|a| match a.trim().parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(bad(s, &format!("`{}` is not a finite number", a.trim()))),
        })
        .collect()
}

fn density(s: &str) -> Result<Density> {
    let (head, support) = s.rsplit_once(" on ").ok_or_else(|| bad(s, "density needs `on [lo, hi]`"))?;
    let support = support.trim();
    let inner = support
        .strip_prefix('[')
        .and_then(|x| x.strip_suffix(']'))
        .ok_or_else(|| bad(s, "support must be `[lo, hi]`"))?;
    let (lo, hi) = match numbers(s, inner)?.as_slice() {
        [lo, hi] => (*lo, *hi),
        _ => return Err(bad(s, "support needs two numbers")),
    };
    let (name, body) = call(head.trim())?;
    let family = if name == "table" {
        let knots = body
            .split(',')
            .map(|p| {
                let (x, y) = p.split_once(':').ok_or_else(|| bad(s, "table knots are `x:y`"))?;
                let v = numbers(s, &format!("{x},{y}"))?;
                Ok((v[0], v[1]))
            })
            .collect::<Result<Vec<_>>>()?;
        DensityFamily::Table { knots }
    } else {
        match (name, numbers(s, body)?.as_slice()) {
            ("constant", [v]) => DensityFamily::Constant { value: *v },
            ("linear", [a, b]) => DensityFamily::Linear { intercept: *a, slope: *b },
            ("gaussian", [a, c, w]) => DensityFamily::Gaussian { amplitude: *a, center: *c, width: *w },
            _ => return Err(bad(s, "unknown density family or wrong arity")),
        }
    };
    Density::new(family, lo, hi)
}

impl SignedMeasure {
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() || s == "zero" {
            return Ok(Self::zero());
        }
        let mut atoms = Vec::new();
        let mut dens = None;
        for term in s.split(';').map(str::trim) {
            if term.starts_with("atom(") {
                let (_, body) = call(term)?;
                match numbers(term, body)?.as_slice() {
                    [a, w] => atoms.push((*a, *w)),
                    _ => return Err(bad(term, "atom needs (location, weight)")),
                }
            } else if dens.is_none() {
                dens = Some(density(term)?);
            } else {
                return Err(bad(s, "at most one density term"));
            }
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self::new(atoms, dens)
    }

    /// Inverse of [`SignedMeasure::parse`]; custom densities print as `custom(name)`.
    pub fn describe(&self) -> String {
        let mut parts: Vec<String> = self.atoms.iter().map(|(a, w)| format!("atom({a}, {w})")).collect();
        if let Some(d) = &self.density {
            let f = match &d.family {
                DensityFamily::Constant { value } => format!("constant({value})"),
                DensityFamily::Linear { intercept, slope } => format!("linear({intercept}, {slope})"),
                DensityFamily::Gaussian { amplitude, center, width } => {
                    format!("gaussian({amplitude}, {center}, {width})")
                }
                DensityFamily::Table { knots } => {
                    format!("table({})", knots.iter().map(|(x, y)| format!("{x}:{y}")).collect::<Vec<_>>().join(", "))
                }
                DensityFamily::Custom { name, .. } => format!("custom({name})"),
            };
            parts.push(format!("{f} on [{}, {}]", d.lo, d.hi));
        }
        if parts.is_empty() {
            "zero".into()
        } else {
            parts.join("; ")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        for s in [
            "zero",
            "atom(0, 0.5)",
            "atom(-1, -0.25); atom(2, 0.75)",
            "gaussian(1, 0, 0.25) on [-1, 1]",
            "atom(0, 0.3); table(-1:0, 0:2, 1:0) on [-1, 1]",
            "linear(0.5, -1) on [0, 2]",
        ] {
            let m = SignedMeasure::parse(s).unwrap();
            assert_eq!(m.describe(), s);
            assert_eq!(SignedMeasure::parse(&m.describe()).unwrap(), m);
        }
    }

    #[test]
    fn rejects_bad_literals() {
        for s in [
            "atom(0)",
            "atom(0, 1)",
            "gaussian(1, 0, 0.25)",
            "wobble(1) on [0, 1]",
            "constant(1) on [1, 0]",
            "constant(1) on [0, 1]; constant(2) on [0, 1]",
        ] {
            assert!(SignedMeasure::parse(s).is_err(), "{s}");
        }
    }

    #[test]
    fn unsorted_atoms_are_ordered() {
        let m = SignedMeasure::parse("atom(1, 0.1); atom(-1, 0.2)").unwrap();
        assert_eq!(m.atoms(), &[(-1.0, 0.2), (1.0, 0.1)]);
    }
}
