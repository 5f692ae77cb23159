//! Quadrature helpers.

use crate::error::{Error, Result};

const GL8_X: [f64; 4] =
    [0.183_434_642_495_649_8, 0.525_532_409_916_329, 0.796_666_477_413_626_7, 0.960_289_856_497_536_2];
const GL8_W: [f64; 4] =
    [0.362_683_783_378_362, 0.313_706_645_877_887_3, 0.222_381_034_453_374_5, 0.101_228_536_290_376_3];

/// 8-point Gauss–Legendre rule on `[a, b]`.
pub fn gauss_legendre8(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut s = 0.0;
    for i in 0..4 {
        let dx = h * GL8_X[i];
        s += GL8_W[i] * (f(c - dx) + f(c + dx));
    }
    s * h
}

/// Adaptive Simpson with absolute tolerance `tol`. Fails on non-finite
/// values or when the recursion depth is exhausted.
pub fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let r = step(f, a, b, fa, fm, fb, whole, tol, tol, 56)?;
    if r.is_finite() {
        Ok(r)
    } else {
        Err(Error::Numerical(format!("quadrature on [{a}, {b}] is not finite")))
    }
}

#[allow(clippy::too_many_arguments)]
fn step(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    top_tol: f64,
    depth: u32,
) -> Result<f64> {
    if !(fa.is_finite() && fm.is_finite() && fb.is_finite()) {
        return Err(Error::Numerical(format!("integrand not finite near [{a}, {b}]")));
    }
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        // a jump discontinuity leaves a tiny interval with a small error;
        // a singularity does not
        if delta.abs() <= top_tol {
            return Ok(left + right);
        }
        return Err(Error::Numerical(format!("quadrature did not converge near [{a}, {b}]")));
    }
    Ok(step(f, a, m, fa, flm, fm, left, 0.5 * tol, top_tol, depth - 1)?
        + step(f, m, b, fm, frm, fb, right, 0.5 * tol, top_tol, depth - 1)?)
}
