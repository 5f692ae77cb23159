use super::{Check, Ctx, ReportBuilder};
use crate::error::{Error, Result};
use crate::local_time::{
    domination_diagnostic, domination_diagnostic_masked, excursion_comparison, rn_liminf, DominationMode,
    DominationReport,
};
use crate::paths::{excursion_decompose, sample_brownian, sample_brownian_channel, zero_points, SamplePath};
use crate::stats::median;

struct Tally {
    hypotheses: usize,
    violations: usize,
    windows: usize,
    thetas: Vec<f64>,
}

impl Tally {
    fn of(reports: &[&DominationReport]) -> Self {
        Tally {
            hypotheses: reports.iter().filter(|r| r.hypotheses_hold()).count(),
            violations: reports.iter().map(|r| r.violations).sum(),
            windows: reports.iter().map(|r| r.window_count()).sum(),
            thetas: reports.iter().filter_map(|r| r.pooled_theta).collect(),
        }
    }

    fn violation_rate(&self) -> f64 {
        self.violations as f64 / self.windows.max(1) as f64
    }
}

pub(crate) fn comparison_main(ctx: &Ctx) -> Result<ReportBuilder> {
    let c = ctx.spec.f64_param("scale")?;
    if !(c > 0.0 && c <= 1.0) {
        return Err(Error::param("scale", "must lie in (0, 1]"));
    }
    let mode = match ctx.spec.param("mode") {
        "global" => DominationMode::Global,
        "localized" => DominationMode::Localized,
        m => return Err(Error::param("mode", format!("`{m}` is not global or localized"))),
    };
    let steps = ctx.grid().steps();
    let rows = ctx.per_path(0, |seed| {
        let y = sample_brownian(ctx.grid(), seed)?.map(f64::abs)?;
        let x = y.scale(c)?;
        let rep = domination_diagnostic(&x, &y, mode, &ctx.cfg)?;
        // at t = T the last zero can be the final grid point, leaving no ratio
        let rn = rn_liminf(&x, &y, steps / 2, &ctx.cfg)?;
        Ok((rep, rn))
    })?;
    let reps: Vec<&DominationReport> = rows.iter().map(|x| &x.0).collect();
    let t = Tally::of(&reps);
    let rns: Vec<f64> = rows.iter().filter_map(|x| x.1).collect();
    let mut r = ReportBuilder::new("abs_pooled_theta_minus_scale");
    r.residuals = rows.iter().map(|x| x.0.pooled_theta.map_or(f64::NAN, |th| (th - c).abs())).collect();
    let th = r.aggregate("pooled_theta", &t.thetas);
    let rn = r.aggregate("rn_liminf", &rns);
    r.check(Check::holds("hypotheses_hold_on_every_path", t.hypotheses == rows.len()));
    r.check(Check::at_most("window_violation_rate", t.violation_rate(), 0.01, ctx.tol()));
    r.check(Check::within("mean_theta", th.mean, c - 0.05, c + 0.05, ctx.tol()));
    r.check(Check::within("mean_rn_liminf", rn.mean, c - 0.05, c + 0.05, ctx.tol()));
    r.aggregate("rn_defined", &rows.iter().map(|x| if x.1.is_some() { 1.0 } else { 0.0 }).collect::<Vec<_>>());
    r.note(format!("X = {c}|B|, Y = |B|; local times from the offset right Tanaka estimator"));
    r.note("rn_liminf evaluated at t = T/2; paths without a ratio after the last zero are reported as missing");
    Ok(r)
}

/// Multiplies each excursion of `y` away from 0 (and the zero points) by
/// `factor(n)` for the n-th excursion.
fn damp_excursions(y: &SamplePath, factor: impl Fn(usize) -> f64) -> Result<SamplePath> {
    let ex = excursion_decompose(y, 0.0);
    let mut v: Vec<f64> = y.values().to_vec();
    let mut owner = vec![None; v.len()];
    for (n, e) in ex.intervals.iter().enumerate() {
        for o in &mut owner[e.first..=e.last] {
            *o = Some(n);
        }
    }
    // zero points take the factor of the excursion that follows them
    let mut next = ex.intervals.len().saturating_sub(1);
    for k in (0..v.len()).rev() {
        match owner[k] {
            Some(n) => next = n,
            None => owner[k] = Some(next),
        }
    }
    for (x, o) in v.iter_mut().zip(&owner) {
        *x *= factor(o.unwrap_or(0));
    }
    SamplePath::new(*y.grid(), v)
}

pub(crate) fn comparison_excursion(ctx: &Ctx) -> Result<ReportBuilder> {
    let damp = ctx.spec.f64_param("damp")?;
    if !(damp > 0.0 && damp <= 1.0) {
        return Err(Error::param("damp", "must lie in (0, 1]"));
    }
    let rows = ctx.per_path(0, |seed| {
        let y = sample_brownian(ctx.grid(), seed)?.map(f64::abs)?;
        let x = damp_excursions(&y, |_| damp)?;
        excursion_comparison(&x, &y, &ctx.cfg)
    })?;
    let reps: Vec<&DominationReport> = rows.iter().collect();
    let t = Tally::of(&reps);
    let mut r = ReportBuilder::new("violations");
    r.residuals = rows.iter().map(|x| x.violations as f64).collect();
    r.aggregate("pooled_theta", &t.thetas);
    r.check(Check::holds("hypotheses_hold_on_every_path", t.hypotheses == rows.len()));
    r.check(Check::at_most("window_violation_rate", t.violation_rate(), 0.01, ctx.tol()));
    r.note(format!("Y = |B|, X = each excursion of Y scaled by {damp}"));
    Ok(r)
}

pub(crate) fn comparison_norms(ctx: &Ctx) -> Result<ReportBuilder> {
    let rows = ctx.per_path(0, |seed| {
        let b1 = sample_brownian_channel(ctx.grid(), seed, 0)?;
        let b2 = sample_brownian_channel(ctx.grid(), seed, 1)?;
        let n1 = b1.zip_with(&b2, |a, b| a.abs().max(b.abs()))?;
        let n2 = b1.zip_with(&b2, |a, b| a.abs() + b.abs())?;
        // both norms vanish exactly when the vector does
        let z: Vec<bool> = zero_points(&b1, 0.0).iter().zip(zero_points(&b2, 0.0)).map(|(a, b)| *a && b).collect();
        let rep = domination_diagnostic_masked(&n1, &n2, &z, &z, DominationMode::Global, &ctx.cfg)?;
        let lx: f64 = rep.increments.iter().map(|p| p.0).sum();
        let ly: f64 = rep.increments.iter().map(|p| p.1).sum();
        Ok((rep, lx, ly))
    })?;
    let reps: Vec<&DominationReport> = rows.iter().map(|x| &x.0).collect();
    let t = Tally::of(&reps);
    let mut r = ReportBuilder::new("local_time_max_norm");
    r.residuals = rows.iter().map(|x| x.1).collect();
    r.aggregate("local_time_max_norm", &r.residuals.clone());
    let l2 = rows.iter().map(|x| x.2).collect::<Vec<_>>();
    r.aggregate("local_time_sum_norm", &l2);
    r.check(Check::holds("hypotheses_hold_on_every_path", t.hypotheses == rows.len()));
    r.check(Check::at_most("window_violation_rate", t.violation_rate(), 0.01, ctx.tol()));
    r.note(format!(
        "planar Brownian motion does not hit 0; median local times {:.3e} (max norm) and {:.3e} (sum norm) are resolution effects",
        median(&r.residuals),
        median(&l2)
    ));
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::TimeGrid;

    #[test]
    fn damping_scales_excursions() {
        // dt = 2⁻¹⁰ keeps the zero tolerance √dt·max|y| below every nonzero value
        let g = TimeGrid::new(1.0 / 128.0, 8).unwrap();
        let y = SamplePath::new(g, vec![0.0, 1.0, 2.0, 0.0, 3.0, 1.0, 0.0, 2.0, 1.0]).unwrap();
        let x = damp_excursions(&y, |n| if n % 2 == 0 { 0.5 } else { 1.0 }).unwrap();
        assert_eq!(x.values(), &[0.0, 0.5, 1.0, 0.0, 3.0, 1.0, 0.0, 1.0, 0.5]);
    }
}
