use super::{Check, Ctx, ReportBuilder};
use crate::error::{Error, Result};
use crate::local_time::{
    lt_occupation, lt_tanaka, lt_upcrossing, occupation_formula_check, truncation_process, LevelGrid, TanakaSide,
};
use crate::paths::sample_brownian;
use crate::sde::sgn;

const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;

pub(crate) fn lt_calibration(ctx: &Ctx) -> Result<ReportBuilder> {
    let level = ctx.spec.f64_param("level")?;
    if !level.is_finite() {
        return Err(Error::param("level", "must be finite"));
    }
    let rows = ctx.per_path(0, |seed| {
        let b = sample_brownian(ctx.grid(), seed)?;
        let occ = lt_occupation(&b, level, &ctx.cfg)?.terminal();
        let up = lt_upcrossing(&b, level, &ctx.cfg)?.terminal();
        let tan = lt_tanaka(&b, level, TanakaSide::Symmetric, &ctx.cfg).terminal();
        Ok([occ, up, tan])
    })?;
    // E L_T^a(B) = E|B_T − a| − |a|
    let t = ctx.grid().horizon();
    let target = if level == 0.0 { SQRT_2_OVER_PI * t.sqrt() } else { expected_abs_shifted(level, t) - level.abs() };
    let mut r = ReportBuilder::new("estimator_spread");
    r.residuals = rows
        .iter()
        .map(|v| v.iter().cloned().fold(f64::MIN, f64::max) - v.iter().cloned().fold(f64::MAX, f64::min))
        .collect();
    for (j, name) in ["occupation", "upcrossing", "tanaka_symmetric"].iter().enumerate() {
        let xs: Vec<f64> = rows.iter().map(|v| v[j]).collect();
        let a = r.aggregate(format!("mean_{name}"), &xs);
        let tol = 3.0 * a.stderr + 0.03;
        r.check(Check::within(format!("{name}_mean_vs_expected"), a.mean, target - tol, target + tol, ctx.tol()));
    }
    r.note(format!("expected value {target:.6}"));
    Ok(r)
}

/// `E|Z√t − a|` for standard normal Z.
fn expected_abs_shifted(a: f64, t: f64) -> f64 {
    let s = t.sqrt();
    let u = a / s;
    let phi = (-0.5 * u * u).exp() / (2.0 * std::f64::consts::PI).sqrt();
    s * (2.0 * phi + u * (2.0 * crate::stats::normal_cdf(u) - 1.0))
}

pub(crate) fn occupation_formula(ctx: &Ctx) -> Result<ReportBuilder> {
    let w = ctx.spec.f64_param("bump_width")?;
    if !(w > 0.0 && w.is_finite()) {
        return Err(Error::param("bump_width", "must be positive"));
    }
    let rows = ctx.per_path(0, |seed| {
        let b = sample_brownian(ctx.grid(), seed)?;
        let levels = LevelGrid::covering(&b, ctx.grid().sqrt_dt() / 4.0)?;
        let one = occupation_formula_check(&b, |_| 1.0, &levels);
        let bump = occupation_formula_check(&b, |x| (-0.5 * x * x / (w * w)).exp(), &levels);
        Ok((one.residual, bump.residual, one.covers_range && bump.covers_range, one.lhs))
    })?;
    let mut r = ReportBuilder::new("relative_residual_f_one");
    r.residuals = rows.iter().map(|x| x.0).collect();
    let one = r.aggregate("relative_residual_f_one", &r.residuals.clone());
    let bump = r.aggregate("relative_residual_gaussian_bump", &rows.iter().map(|x| x.1).collect::<Vec<_>>());
    r.aggregate("quadratic_variation", &rows.iter().map(|x| x.3).collect::<Vec<_>>());
    r.check(Check::at_most("mean_residual_f_one", one.mean, 0.05, ctx.tol()));
    r.check(Check::at_most("mean_residual_gaussian_bump", bump.mean, 0.05, ctx.tol()));
    r.check(Check::holds("level_grid_covers_range", rows.iter().all(|x| x.2)));
    Ok(r)
}

pub(crate) fn gen_tanaka(ctx: &Ctx) -> Result<ReportBuilder> {
    let zs = ctx.spec.f64_list("z")?;
    if zs.iter().any(|z| !(*z > 0.0)) {
        return Err(Error::param("z", "levels must be positive"));
    }
    let mut r = ReportBuilder::new(&format!("sup_residual_over_path_scale_z{}", zs[0]));
    for (block, &z) in zs.iter().enumerate() {
        let rows = ctx.per_path(block, |seed| {
            let x = sample_brownian(ctx.grid(), seed)?;
            let l = lt_occupation(&x, 0.0, &ctx.cfg)?;
            let k = truncation_process(&l, z);
            let v = x.values();
            let pos = |a: f64| a.max(0.0);
            let mut integral = 0.0;
            let mut worst = 0.0f64;
            let mut rhs = 0.0;
            for t in 0..v.len() {
                if t > 0 && v[t - 1] > 0.0 {
                    integral += k[t - 1] * (v[t] - v[t - 1]);
                }
                rhs = k[t] * pos(v[t]) - pos(v[0]) - integral;
                let lhs = 0.5 * z.min(l.values[t]);
                worst = worst.max((lhs - rhs).abs());
            }
            let scale = x.max_abs().max(1.0);
            let classical = if z.is_infinite() {
                let c = 0.5 * lt_tanaka(&x, 0.0, TanakaSide::Right, &ctx.cfg).terminal();
                Some((rhs - c).abs() / scale)
            } else {
                None
            };
            Ok((worst / scale, classical))
        })?;
        let res: Vec<f64> = rows.iter().map(|x| x.0).collect();
        let med = crate::stats::median(&res);
        r.aggregate(format!("residual_z{z}"), &res);
        r.check(Check::at_most(format!("median_residual_z{z}"), med, ctx.band(), ctx.tol()));
        if z.is_infinite() {
            let tele = rows.iter().filter_map(|x| x.1).fold(0.0f64, f64::max);
            r.check(Check::at_most("classical_tanaka_telescoping_max", tele, 1e-12, ctx.tol()));
        }
        if block == 0 {
            r.residuals = res;
        }
    }
    r.note("local time from the occupation estimator; indicator 1{X_s > 0} on the left grid point");
    Ok(r)
}

type Real = fn(f64) -> f64;

pub(crate) fn gen_skorokhod(ctx: &Ctx) -> Result<ReportBuilder> {
    let kinds: Vec<String> = ctx.spec.param("phi").split(',').map(|s| s.trim().to_string()).collect();
    let mut r = ReportBuilder::new("abs_diff_terminal_phi_first");
    for (block, kind) in kinds.iter().enumerate() {
        // Φ and its primitive
        let (phi, big_phi): (Real, Real) = match kind.as_str() {
            "one" => (|_| 1.0, |l| l),
            "affine" => (|z| 1.0 + z, |l| l + 0.5 * l * l),
            other => return Err(Error::param("phi", format!("`{other}` is not one of one, affine"))),
        };
        let rows = ctx.per_path(block, |seed| {
            let x = sample_brownian(ctx.grid(), seed)?;
            let l = lt_occupation(&x, 0.0, &ctx.cfg)?;
            let v = x.values();
            let (mut s, mut running_min) = (0.0f64, 0.0f64);
            for j in 0..v.len() - 1 {
                s += sgn(v[j]) * phi(l.values[j]) * (v[j + 1] - v[j]);
                running_min = running_min.min(s);
            }
            Ok((big_phi(l.terminal()), -running_min))
        })?;
        let lhs: Vec<f64> = rows.iter().map(|x| x.0).collect();
        let rhs: Vec<f64> = rows.iter().map(|x| x.1).collect();
        let a = r.aggregate(format!("lhs_{kind}"), &lhs);
        let b = r.aggregate(format!("rhs_{kind}"), &rhs);
        let rel = (a.mean - b.mean).abs() / b.mean.abs().max(f64::MIN_POSITIVE);
        r.check(Check::at_most(format!("relative_mean_gap_{kind}"), rel, 0.05, ctx.tol()));
        if block == 0 {
            r.residuals = rows.iter().map(|x| (x.0 - x.1).abs()).collect();
        }
    }
    r.note("lhs: integral of Phi up to the occupation-estimated local time; rhs: minus the running minimum of the discrete integral of sgn(X) Phi(L) dX");
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shifted_absolute_mean() {
        assert!((expected_abs_shifted(0.0, 1.0) - SQRT_2_OVER_PI).abs() < 1e-15);
        // E|Z − a| → |a| for large a
        assert!((expected_abs_shifted(8.0, 1.0) - 8.0).abs() < 1e-12);
    }
}
