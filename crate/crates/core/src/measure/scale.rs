use serde::{Deserialize, Serialize};

use super::quad::{adaptive_simpson, gauss_legendre8};
use super::SignedMeasure;
use crate::error::{Error, Result};

/// Sub-intervals per unit of density support length, at least this many per segment.
const NODES_PER_SEGMENT: usize = 4096;

fn atom_ratio(w: f64) -> f64 {
    (1.0 - w) / (1.0 + w)
}

/// `f_ν(y) = exp(−2ν^c(0, y]) ∏_{z ≤ y} (1 − ν{z}) / (1 + ν{z})`, evaluated directly.
pub fn f_nu(measure: &SignedMeasure, y: f64) -> Result<f64> {
    let p: f64 = measure.atoms().iter().filter(|(z, _)| *z <= y).map(|(_, w)| atom_ratio(*w)).product();
    Ok((-2.0 * measure.continuous_mass(y)?).exp() * p)
}

/// `F_ν(x) = ∫_0^x f_ν`. Builds a `ScaleFunction`; build one directly for repeated use.
#[allow(non_snake_case)]
pub fn F_nu(measure: &SignedMeasure, x: f64) -> Result<f64> {
    Ok(ScaleFunction::new(measure)?.eval(x))
}

#[allow(non_snake_case)]
pub fn F_nu_inverse(measure: &SignedMeasure, v: f64) -> Result<f64> {
    ScaleFunction::new(measure)?.inverse(v)
}

/// Tabulated `F_ν` with `f_ν` as its derivative.
///
/// Nodes sit at 0, at every atom and on a fine subdivision of the density
/// support. Between nodes `F` is linear where the density vanishes and a
/// cubic Hermite interpolant of the quadrature values elsewhere. Pure-atom
/// measures are exactly piecewise linear.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleFunction {
    nodes: Vec<f64>,
    big_f: Vec<f64>,
    slope_left: Vec<f64>,
    slope_right: Vec<f64>,
    hermite: Vec<bool>,
    bounds: (f64, f64),
}

impl ScaleFunction {
    pub fn new(measure: &SignedMeasure) -> Result<Self> {
        let mut nodes: Vec<f64> = vec![0.0];
        nodes.extend(measure.atoms().iter().map(|(a, _)| *a));
        let density = measure.density();
        if let Some(d) = density {
            let mut br = d.breakpoints();
            br.extend(nodes.iter().copied().filter(|x| *x > d.lo && *x < d.hi));
            br.sort_by(f64::total_cmp);
            br.dedup();
            let h = (d.hi - d.lo) / NODES_PER_SEGMENT as f64;
            for w in br.windows(2) {
                let k = ((w[1] - w[0]) / h).ceil().max(1.0) as usize;
                for i in 0..=k {
                    nodes.push(if i == k { w[1] } else { w[0] + (w[1] - w[0]) * i as f64 / k as f64 });
                }
            }
        }
        nodes.sort_by(f64::total_cmp);
        nodes.dedup();
        let n = nodes.len();
        let zero = nodes.iter().position(|x| *x == 0.0).expect("0 is a node");

        // continuous mass G(x_j) = ν^c(0, x_j], accumulated outward from 0
        let mut g = vec![0.0; n];
        let dens = |x: f64| density.map_or(0.0, |d| d.eval(x));
        let in_support = |a: f64, b: f64| density.is_some_and(|d| b > d.lo && a < d.hi);
        for j in zero..n - 1 {
            let m = if in_support(nodes[j], nodes[j + 1]) {
                adaptive_simpson(&dens, nodes[j], nodes[j + 1], 1e-15)?
            } else {
                0.0
            };
            g[j + 1] = g[j] + m;
        }
        for j in (1..=zero).rev() {
            let m = if in_support(nodes[j - 1], nodes[j]) {
                adaptive_simpson(&dens, nodes[j - 1], nodes[j], 1e-15)?
            } else {
                0.0
            };
            g[j - 1] = g[j] - m;
        }

        let atoms = measure.atoms();
        let mut slope_left = Vec::with_capacity(n);
        let mut slope_right = Vec::with_capacity(n);
        for (j, &x) in nodes.iter().enumerate() {
            let before: f64 = atoms.iter().filter(|(z, _)| *z < x).map(|(_, w)| atom_ratio(*w)).product();
            let at: f64 = atoms.iter().filter(|(z, _)| *z == x).map(|(_, w)| atom_ratio(*w)).product();
            let e = (-2.0 * g[j]).exp();
            slope_left.push(e * before);
            slope_right.push(e * before * at);
        }

        let hermite: Vec<bool> = (0..n.saturating_sub(1)).map(|j| in_support(nodes[j], nodes[j + 1])).collect();
        let piece = |j: usize| -> Result<f64> {
            let (a, b) = (nodes[j], nodes[j + 1]);
            if !hermite[j] {
                return Ok(slope_right[j] * (b - a));
            }
            let s0 = slope_right[j];
            let f = |y: f64| s0 * (-2.0 * gauss_legendre8(&dens, a, y)).exp();
            adaptive_simpson(&f, a, b, 1e-14 * (b - a).max(f64::MIN_POSITIVE))
        };
        let mut big_f = vec![0.0; n];
        for j in zero..n - 1 {
            big_f[j + 1] = big_f[j] + piece(j)?;
        }
        for j in (1..=zero).rev() {
            big_f[j - 1] = big_f[j] - piece(j - 1)?;
        }
        if big_f.windows(2).any(|w| !(w[1] > w[0])) || slope_right.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::Numerical("scale function is not strictly increasing".into()));
        }
        let lo = slope_left.iter().chain(&slope_right).copied().fold(f64::INFINITY, f64::min);
        let hi = slope_left.iter().chain(&slope_right).copied().fold(0.0, f64::max);
        Ok(Self { nodes, big_f, slope_left, slope_right, hermite, bounds: (lo, hi) })
    }

    pub fn identity() -> Self {
        Self::new(&SignedMeasure::zero()).expect("zero measure")
    }

    /// `(m, M)` with `m ≤ f_ν ≤ M` at the nodes.
    pub fn bounds(&self) -> (f64, f64) {
        self.bounds
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Interval index j with `nodes[j] ≤ x < nodes[j+1]`; None outside the table.
    fn locate(&self, x: f64) -> Option<usize> {
        let n = self.nodes.len();
        if n < 2 || x < self.nodes[0] || x >= self.nodes[n - 1] {
            return None;
        }
        Some(self.nodes.partition_point(|t| *t <= x) - 1)
    }

    fn hermite_parts(&self, j: usize, x: f64) -> (f64, f64) {
        let (x0, x1) = (self.nodes[j], self.nodes[j + 1]);
        let h = x1 - x0;
        let t = (x - x0) / h;
        let (f0, f1) = (self.big_f[j], self.big_f[j + 1]);
        let (s0, s1) = (self.slope_right[j], self.slope_left[j + 1]);
        let t2 = t * t;
        let t3 = t2 * t;
        let val = (2.0 * t3 - 3.0 * t2 + 1.0) * f0
            + (t3 - 2.0 * t2 + t) * h * s0
            + (-2.0 * t3 + 3.0 * t2) * f1
            + (t3 - t2) * h * s1;
        let der = (6.0 * t2 - 6.0 * t) * (f0 - f1) / h + (3.0 * t2 - 4.0 * t + 1.0) * s0 + (3.0 * t2 - 2.0 * t) * s1;
        (val, der)
    }

    /// `F_ν(x)`.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.nodes.len();
        match self.locate(x) {
            None if x < self.nodes[0] => self.big_f[0] + self.slope_left[0] * (x - self.nodes[0]),
            None => self.big_f[n - 1] + self.slope_right[n - 1] * (x - self.nodes[n - 1]),
            Some(j) if self.hermite[j] => self.hermite_parts(j, x).0,
            Some(j) => self.big_f[j] + self.slope_right[j] * (x - self.nodes[j]),
        }
    }

    /// `f_ν(x)`, right-continuous at atoms.
    pub fn derivative(&self, x: f64) -> f64 {
        let n = self.nodes.len();
        match self.locate(x) {
            None if x < self.nodes[0] => self.slope_left[0],
            None => self.slope_right[n - 1],
            Some(j) if x == self.nodes[j] => self.slope_right[j],
            Some(j) if self.hermite[j] => self.hermite_parts(j, x).1,
            Some(j) => self.slope_right[j],
        }
    }

    /// `F_ν^{-1}(v)`.
    pub fn inverse(&self, v: f64) -> Result<f64> {
        if !v.is_finite() {
            return Err(Error::Numerical(format!("cannot invert F at {v}")));
        }
        let n = self.nodes.len();
        if v < self.big_f[0] {
            return Ok(self.nodes[0] + (v - self.big_f[0]) / self.slope_left[0]);
        }
        if v >= self.big_f[n - 1] {
            return Ok(self.nodes[n - 1] + (v - self.big_f[n - 1]) / self.slope_right[n - 1]);
        }
        let j = self.big_f.partition_point(|f| *f <= v) - 1;
        if !self.hermite[j] {
            return Ok(self.nodes[j] + (v - self.big_f[j]) / self.slope_right[j]);
        }
        let (mut lo, mut hi) = (self.nodes[j], self.nodes[j + 1]);
        let mut x = lo + (v - self.big_f[j]) / (self.big_f[j + 1] - self.big_f[j]) * (hi - lo);
        for _ in 0..100 {
            let (fx, dfx) = self.hermite_parts(j, x);
            let r = fx - v;
            if r.abs() <= 1e-15 * v.abs().max(1.0) {
                return Ok(x);
            }
            if r > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let newton = x - r / dfx;
            x = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
            if hi - lo <= f64::EPSILON * x.abs().max(f64::MIN_POSITIVE) {
                return Ok(x);
            }
        }
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{Density, DensityFamily};
    use proptest::prelude::*;

    fn skew(beta: f64) -> SignedMeasure {
        SignedMeasure::atom(0.0, beta).unwrap()
    }

    fn block(c: f64) -> SignedMeasure {
        SignedMeasure::continuous(Density::new(DensityFamily::Constant { value: c }, 0.0, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn zero_measure_is_identity() {
        let s = ScaleFunction::new(&SignedMeasure::zero()).unwrap();
        for x in [-3.5, -1e-9, 0.0, 0.7, 12.0] {
            assert_eq!(s.eval(x), x);
            assert_eq!(s.inverse(x).unwrap(), x);
            assert_eq!(s.derivative(x), 1.0);
            assert_eq!(f_nu(&SignedMeasure::zero(), x).unwrap(), 1.0);
        }
    }

    #[test]
    fn single_atom() {
        let m = skew(0.5);
        assert_eq!(f_nu(&m, -0.1).unwrap(), 1.0);
        assert!((f_nu(&m, 0.0).unwrap() - 1.0 / 3.0).abs() < 1e-16);
        assert!((f_nu(&m, 2.0).unwrap() - 1.0 / 3.0).abs() < 1e-16);
        let s = ScaleFunction::new(&m).unwrap();
        assert_eq!(s.eval(-2.0), -2.0);
        assert!((s.eval(3.0) - 1.0).abs() < 1e-15);
        assert!((s.inverse(1.0).unwrap() - 3.0).abs() < 1e-15);
        assert_eq!(s.inverse(-2.0).unwrap(), -2.0);
        // jump ratio at the atom
        assert!((s.derivative(0.0) / s.derivative(-1e-12) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn continuous_block() {
        let c = 0.4;
        let m = block(c);
        for y in [-1.0f64, 0.0, 0.3, 1.0, 2.5] {
            let expect = if y < 0.0 { 1.0 } else { (-2.0 * c * y.min(1.0)).exp() };
            assert!((f_nu(&m, y).unwrap() - expect).abs() < 1e-13, "y={y}");
        }
        let s = ScaleFunction::new(&m).unwrap();
        for x in [0.2f64, 0.77, 1.0, 3.0] {
            // ∫_0^x e^{−2c min(y,1)} dy
            let xm = x.min(1.0);
            let expect = (1.0 - (-2.0 * c * xm).exp()) / (2.0 * c) + (x - xm) * (-2.0 * c).exp();
            assert!((s.eval(x) - expect).abs() < 1e-12, "x={x}: {} vs {expect}", s.eval(x));
            assert!((s.derivative(x) - f_nu(&m, x).unwrap()).abs() < 1e-9);
        }
        assert_eq!(s.eval(0.0), 0.0);
    }

    #[test]
    fn skew_slope_ratio() {
        for beta in [-0.7, -0.2, 0.3, 0.9] {
            let s = ScaleFunction::new(&skew(beta)).unwrap();
            let ratio = (s.eval(2.0) / 2.0) / (s.eval(-2.0) / -2.0);
            assert!((ratio - (1.0 - beta) / (1.0 + beta)).abs() < 1e-14);
        }
    }

    #[test]
    fn bounds_and_lipschitz() {
        let d = Density::new(DensityFamily::Gaussian { amplitude: 0.8, center: 0.5, width: 0.4 }, -1.0, 2.0).unwrap();
        let m = SignedMeasure::new(vec![(-0.5, -0.3), (1.2, 0.6)], Some(d)).unwrap();
        let s = ScaleFunction::new(&m).unwrap();
        let (lo, hi) = m.f_bounds().unwrap();
        let (nlo, nhi) = s.bounds();
        assert!(lo <= nlo && nhi <= hi);
        let xs: Vec<f64> = (0..400).map(|i| -3.0 + 6.0 * i as f64 / 399.0).collect();
        for w in xs.windows(2) {
            let df = s.eval(w[1]) - s.eval(w[0]);
            assert!(df > 0.0 && df <= hi * (w[1] - w[0]) * (1.0 + 1e-12));
            let (v0, v1) = (s.eval(w[0]), s.eval(w[1]));
            let dx = s.inverse(v1).unwrap() - s.inverse(v0).unwrap();
            assert!(dx <= (v1 - v0) / lo * (1.0 + 1e-9));
        }
    }

    #[test]
    fn free_functions_match_table() {
        let m = block(0.25);
        assert!((F_nu(&m, 0.6).unwrap() - ScaleFunction::new(&m).unwrap().eval(0.6)).abs() < 1e-15);
        let v = F_nu(&m, 0.6).unwrap();
        assert!((F_nu_inverse(&m, v).unwrap() - 0.6).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn round_trip(beta in -0.95f64..0.95, c in -0.8f64..0.8, seed in 0u64..1000) {
            let d = Density::new(DensityFamily::Linear { intercept: c, slope: 0.1 }, -2.0, 3.0).unwrap();
            let m = SignedMeasure::new(vec![(0.5, beta)], Some(d)).unwrap();
            let s = ScaleFunction::new(&m).unwrap();
            let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
            for _ in 0..1000 {
                let x: f64 = rand::RngExt::random_range(&mut rng, -10.0..10.0);
                let v = s.eval(x);
                let back = s.inverse(v).unwrap();
                prop_assert!((back - x).abs() <= 1e-10 * (1.0 + x.abs()), "x={} back={}", x, back);
                prop_assert!((s.eval(back) - v).abs() <= 1e-12 * v.abs().max(1e-300) + 1e-15);
            }
        }
    }
}
