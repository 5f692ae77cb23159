use serde::{Deserialize, Serialize};

use super::{euler_maruyama, Coefficient, CoefficientSpec, SolutionPath};
use crate::error::{Error, Result};
use crate::paths::SamplePath;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvelopeKind {
    /// `b_n(x) = inf_y b(y) + n|x − y|`, below b
    Lower,
    /// `b^n(x) = sup_y b(y) − n|x − y|`, above b
    Upper,
}

/// n-Lipschitz envelope of b tabulated on a box and linearly interpolated.
/// Outside the box the value at the nearest end is used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    nodes: Vec<f64>,
    values: Vec<f64>,
    pub n: f64,
    pub kind: EnvelopeKind,
}

impl Envelope {
    pub fn eval(&self, x: f64) -> f64 {
        let last = self.nodes.len() - 1;
        if x <= self.nodes[0] {
            return self.values[0];
        }
        if x >= self.nodes[last] {
            return self.values[last];
        }
        let i = self.nodes.partition_point(|v| *v <= x) - 1;
        let w = (x - self.nodes[i]) / (self.nodes[i + 1] - self.nodes[i]);
        self.values[i] + w * (self.values[i + 1] - self.values[i])
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn into_coefficient(self, name: &str) -> Coefficient {
        Coefficient::custom(name, move |x| self.eval(x))
    }
}

const MAX_DEPTH: u32 = 40;

/// Bisects `[l, r]` while the midpoint of b departs from the chord by more
/// than `tol`, so cusps are resolved below the envelope's kink scale.
fn refine(b: &Coefficient, (l, bl): (f64, f64), (r, br): (f64, f64), tol: f64, depth: u32, out: &mut Vec<(f64, f64)>) {
    let m = 0.5 * (l + r);
    let bm = b.eval(m);
    if depth < MAX_DEPTH && !((bm - 0.5 * (bl + br)).abs() <= tol) && m > l && m < r {
        refine(b, (l, bl), (m, bm), tol, depth + 1, out);
        out.push((m, bm));
        refine(b, (m, bm), (r, br), tol, depth + 1, out);
    }
}

/// Inf- (or sup-) convolution of `b` with `n|·|` over `eval_box`, computed
/// exactly on an adaptively refined grid by a forward and a backward pass.
pub fn lipschitz_envelope(b: &Coefficient, n: f64, eval_box: (f64, f64), kind: EnvelopeKind) -> Result<Envelope> {
    let (lo, hi) = eval_box;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::param("eval_box", format!("[{lo}, {hi}] must be a finite interval")));
    }
    if !(n.is_finite() && n > 0.0) {
        return Err(Error::param("n", format!("must be positive, got {n}")));
    }
    let h = (hi - lo) / 4096.0;
    let count = ((hi - lo) / h).ceil() as usize + 1;
    let h = (hi - lo) / (count - 1) as f64;
    let base: Vec<(f64, f64)> = (0..count)
        .map(|i| {
            let x = if i == count - 1 { hi } else { lo + i as f64 * h };
            (x, b.eval(x))
        })
        .collect();
    if let Some((x, _)) = base.iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::param("b", format!("not bounded on the box at {x}")));
    }
    let (mn, mx) = base.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, c), (_, v)| (a.min(*v), c.max(*v)));
    let tol = 1e-4 * (1.0 + (mx - mn)) / n;
    let mut pts = Vec::with_capacity(count);
    for w in base.windows(2) {
        pts.push(w[0]);
        refine(b, w[0], w[1], tol, 0, &mut pts);
    }
    pts.push(base[count - 1]);
    if let Some((x, _)) = pts.iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::param("b", format!("not bounded on the box at {x}")));
    }
    let sign = match kind {
        EnvelopeKind::Lower => 1.0,
        EnvelopeKind::Upper => -1.0,
    };
    let nodes: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let mut g: Vec<f64> = pts.iter().map(|p| sign * p.1).collect();
    for i in 1..g.len() {
        g[i] = g[i].min(g[i - 1] + n * (nodes[i] - nodes[i - 1]));
    }
    for i in (0..g.len() - 1).rev() {
        g[i] = g[i].min(g[i + 1] + n * (nodes[i + 1] - nodes[i]));
    }
    for v in &mut g {
        *v *= sign;
    }
    Ok(Envelope { nodes, values: g, n, kind })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinMaxResult {
    /// Solution with the lower envelope `b_n`, n = `n_levels`.
    pub lower: SolutionPath,
    /// Solution with the upper envelope `b^n`, n = `n_levels`.
    pub upper: SolutionPath,
    /// `‖X̄^n − X̲^n‖_∞` for n = 1..=n_levels.
    pub gaps: Vec<f64>,
    /// Fraction of grid points where the lower iterates fail to increase in n
    /// or the upper iterates fail to decrease, by more than dt.
    pub monotonicity_violation: f64,
}

/// Lower and upper envelopes of one drift for n = 1..=n_levels, built once
/// and reused across driver paths.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeLadder {
    lower: Vec<Coefficient>,
    upper: Vec<Coefficient>,
}

impl EnvelopeLadder {
    pub fn new(b: &Coefficient, n_levels: usize, eval_box: (f64, f64)) -> Result<Self> {
        if n_levels == 0 {
            return Err(Error::param("n_levels", "must be at least 1"));
        }
        let mut lower = Vec::with_capacity(n_levels);
        let mut upper = Vec::with_capacity(n_levels);
        for n in 1..=n_levels {
            lower.push(
                lipschitz_envelope(b, n as f64, eval_box, EnvelopeKind::Lower)?.into_coefficient("lower_envelope"),
            );
            upper.push(
                lipschitz_envelope(b, n as f64, eval_box, EnvelopeKind::Upper)?.into_coefficient("upper_envelope"),
            );
        }
        Ok(Self { lower, upper })
    }

    pub fn levels(&self) -> usize {
        self.lower.len()
    }

    pub fn solve(&self, sigma: &Coefficient, driver: &SamplePath, x0: f64) -> Result<MinMaxResult> {
        let mut gaps = Vec::with_capacity(self.levels());
        let mut prev: Option<(SolutionPath, SolutionPath)> = None;
        let (mut bad, mut total) = (0usize, 0usize);
        // Euler with non-Lipschitz σ reorders nearly coincident paths by far
        // less than one drift step b·dt
        let tol = driver.grid().dt();
        for (lo, hi) in self.lower.iter().zip(&self.upper) {
            let lower = euler_maruyama(&CoefficientSpec::new(sigma.clone(), lo.clone()), driver, x0)?;
            let upper = euler_maruyama(&CoefficientSpec::new(sigma.clone(), hi.clone()), driver, x0)?;
            gaps.push(lower.state.sup_norm_distance(&upper.state)?);
            if let Some((pl, pu)) = &prev {
                for k in 0..lower.state.values().len() {
                    total += 2;
                    if lower.state.value(k) < pl.state.value(k) - tol {
                        bad += 1;
                    }
                    if upper.state.value(k) > pu.state.value(k) + tol {
                        bad += 1;
                    }
                }
            }
            prev = Some((lower, upper));
        }
        let (lower, upper) = prev.expect("at least one level");
        let monotonicity_violation = if total == 0 { 0.0 } else { bad as f64 / total as f64 };
        Ok(MinMaxResult { lower, upper, gaps, monotonicity_violation })
    }
}

/// Euler solutions with the lower and upper n-Lipschitz envelopes of the
/// drift for n = 1..=n_levels on one driver.
pub fn min_max_solutions(
    coeff: &CoefficientSpec,
    driver: &SamplePath,
    x0: f64,
    n_levels: usize,
    eval_box: (f64, f64),
) -> Result<MinMaxResult> {
    EnvelopeLadder::new(&coeff.drift, n_levels, eval_box)?.solve(&coeff.sigma, driver, x0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::{sample_brownian, SeedSpec, TimeGrid};

    fn cell(e: &Envelope) -> f64 {
        e.nodes().windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    fn step() -> Coefficient {
        Coefficient::Step { at: 0.0, left: 0.0, right: 1.0 }
    }

    #[test]
    fn constant_is_fixed() {
        let e = lipschitz_envelope(&Coefficient::constant(0.7), 3.0, (-2.0, 2.0), EnvelopeKind::Lower).unwrap();
        for x in [-3.0, -1.0, 0.0, 0.33, 2.5] {
            assert!((e.eval(x) - 0.7).abs() < 1e-15);
        }
    }

    #[test]
    fn step_becomes_ramp() {
        for n in [1.0, 4.0, 20.0] {
            let e = lipschitz_envelope(&step(), n, (-2.0, 2.0), EnvelopeKind::Lower).unwrap();
            for i in 0..200 {
                let x = -2.0 + 4.0 * i as f64 / 199.0;
                let expect = (n * x).clamp(0.0, 1.0);
                assert!((e.eval(x) - expect).abs() <= 2.0 * n * cell(&e), "n={n} x={x}: {}", e.eval(x));
            }
        }
    }

    #[test]
    fn envelopes_are_monotone_in_n_and_bracket_b() {
        let b = Coefficient::custom("wiggle", |x: f64| (3.0 * x).sin() + 0.5 * x.abs().sqrt());
        let xs: Vec<f64> = (0..1000).map(|i| -3.0 + 6.0 * i as f64 / 999.0).collect();
        let mut prev_lo: Option<Envelope> = None;
        let mut prev_hi: Option<Envelope> = None;
        for n in [1.0, 2.0, 4.0, 8.0, 16.0] {
            let lo = lipschitz_envelope(&b, n, (-3.0, 3.0), EnvelopeKind::Lower).unwrap();
            let hi = lipschitz_envelope(&b, n, (-3.0, 3.0), EnvelopeKind::Upper).unwrap();
            for &x in &xs {
                let tol = n * cell(&lo).max(cell(&hi));
                assert!(lo.eval(x) <= b.eval(x) + tol);
                assert!(hi.eval(x) >= b.eval(x) - tol);
                if let (Some(pl), Some(ph)) = (&prev_lo, &prev_hi) {
                    // grids differ between n, so allow one interpolation cell
                    assert!(pl.eval(x) <= lo.eval(x) + tol);
                    assert!(ph.eval(x) >= hi.eval(x) - tol);
                }
            }
            for w in xs.windows(2) {
                assert!((lo.eval(w[1]) - lo.eval(w[0])).abs() <= n * (w[1] - w[0]) * (1.0 + 1e-9));
            }
            prev_lo = Some(lo);
            prev_hi = Some(hi);
        }
    }

    #[test]
    fn cusp_is_resolved() {
        // sup_y 1 + ½√|y| − n|y| is attained at |y| = 1/(16n²) with value 1 + 1/(16n)
        let b = Coefficient::SqrtCap { cap: 1.0, scale: 0.5, shift: 1.0 };
        for n in [4.0, 16.0, 64.0] {
            let hi = lipschitz_envelope(&b, n, (-16.0, 16.0), EnvelopeKind::Upper).unwrap();
            let lo = lipschitz_envelope(&b, n, (-16.0, 16.0), EnvelopeKind::Lower).unwrap();
            let want = 1.0 / (16.0 * n);
            assert!(((hi.eval(0.0) - 1.0) / want - 1.0).abs() < 0.01, "n={n}: {}", hi.eval(0.0));
            assert!((lo.eval(0.0) - 1.0).abs() < 1e-12);
            assert!(hi.nodes().len() < 20_000, "{}", hi.nodes().len());
        }
    }

    #[test]
    fn rejects_unbounded() {
        let b = Coefficient::custom("pole", |x: f64| if x == 0.0 { f64::NEG_INFINITY } else { 0.0 });
        assert!(lipschitz_envelope(&b, 1.0, (-1.0, 1.0), EnvelopeKind::Lower).is_err());
    }

    #[test]
    fn lipschitz_drift_has_no_gap() {
        let g = TimeGrid::dyadic(1.0, 10).unwrap();
        let b = sample_brownian(g, SeedSpec::new(12, 0)).unwrap();
        let spec = CoefficientSpec::new(Coefficient::sqrt_cap(1.0), Coefficient::Linear { intercept: 1.0, slope: 0.5 });
        let r = min_max_solutions(&spec, &b, 0.0, 4, (-10.0, 10.0)).unwrap();
        assert!(r.gaps.iter().all(|g| *g < 1e-6), "{:?}", r.gaps);
    }

    #[test]
    fn gap_shrinks_for_non_lipschitz_drift() {
        let g = TimeGrid::dyadic(1.0, 10).unwrap();
        let b = sample_brownian(g, SeedSpec::new(13, 0)).unwrap();
        let spec =
            CoefficientSpec::new(Coefficient::sqrt_cap(1.0), Coefficient::SqrtCap { cap: 1.0, scale: 0.5, shift: 1.0 });
        let r = min_max_solutions(&spec, &b, 0.0, 16, (-10.0, 10.0)).unwrap();
        assert!(r.gaps[15] < r.gaps[0], "{:?}", r.gaps);
        assert!(r.monotonicity_violation <= 0.01, "{}", r.monotonicity_violation);
    }
}
