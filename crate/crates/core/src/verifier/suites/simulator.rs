use statrs::distribution::{ContinuousCDF, Normal};

use super::{exact, mc_provenance, mean_se, Ctx};
use crate::diffusion::{simulate, simulate_coupled, EndpointBatch, Scheme, SimConfig};
use crate::error::Result;
use crate::estimators::Estimate;
use crate::geometry::{hyperbolic, radial_cdf, Geometry};
use crate::verifier::report::{InequalityReport, Method, Relation};

/// Kolmogorov–Smirnov critical value factor at level 0.001.
const KS_CRIT_001: f64 = 1.95;
/// Band for the ratio of successive KS distances when `dt` halves.
pub const KS_RATIO_BAND: (f64, f64) = (0.35, 0.65);
/// Grid step of the tabulated exact radial distribution.
const CDF_STEP: f64 = 0.002;

fn mc(values: &[f64]) -> Estimate {
    let (m, se) = mean_se(values);
    Estimate {
        value: m,
        stderr: se,
        n: values.len(),
        method: Method::Mc,
    }
}

/// Two-sided KS distance between the sample and a CDF.
pub fn ks_distance(mut sample: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    sample.sort_by(f64::total_cmp);
    let n = sample.len() as f64;
    sample
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Linear interpolation in a table on `0, h, 2h, ...`.
fn interpolate(table: &[f64], h: f64, r: f64) -> f64 {
    let u = r / h;
    let i = u.floor() as usize;
    if i + 1 >= table.len() {
        return *table.last().unwrap_or(&1.0);
    }
    let w = u - i as f64;
    table[i] * (1.0 - w) + table[i + 1] * w
}

/// Endpoint law checks against exact moments and distributions.
pub(super) fn simulator(ctx: &Ctx) -> Result<Vec<InequalityReport>> {
    match ctx.g() {
        g @ Geometry::Euclidean(_) => euclidean(ctx, g),
        Geometry::Hyperbolic3 => hyperbolic(ctx),
        Geometry::Heisenberg => heisenberg(ctx),
    }
}

fn coordinate(batch: &EndpointBatch, k: usize, f: impl Fn(f64) -> f64) -> Vec<f64> {
    batch.endpoints().map(|e| f(e[k])).collect()
}

fn ks_row(ctx: &Ctx, what: &str, sample: Vec<f64>, cdf: impl Fn(f64) -> f64, cfg: &SimConfig) -> InequalityReport {
    let n = sample.len();
    let ks = ks_distance(sample, cdf);
    let crit = KS_CRIT_001 / (n as f64).sqrt();
    ctx.row(
        "simulator-distribution",
        what,
        format!("KS distance ≤ {KS_CRIT_001}/√n (level 0.001)"),
        Relation::Le,
        exact(ks),
        exact(crit),
        0.0,
        mc_provenance(cfg),
    )
}

fn euclidean(ctx: &Ctx, g: Geometry) -> Result<Vec<InequalityReport>> {
    let t = ctx.t(1.0);
    let n = ctx.n(1_000_000);
    let o = g.origin();
    let cfg = ctx.sim(t, n, 0);
    let batch = simulate(g, &o, t, &cfg)?;
    let mut rows = Vec::new();
    let row = |what: &str, e: Estimate, v: f64| {
        ctx.row("simulator-moments", what, format!("t={t}"), Relation::Eq, e, exact(v), 0.0, mc_provenance(&cfg))
    };
    rows.push(row("E[x1]", mc(&coordinate(&batch, 0, |x| x)), 0.0));
    let x2 = mc(&coordinate(&batch, 0, |x| x * x));
    rows.push(row("E[x1^2]", x2, t));
    rows.push(
        ctx.row("simulator-moments", "E[x1^2]", format!("t={t}, claimed 1.05t control"), Relation::Eq, x2, exact(1.05 * t), 0.0, mc_provenance(&cfg))
            .as_control()
            .with_note("inflated variance; must FAIL"),
    );
    let normal = Normal::new(0.0, t.sqrt()).expect("positive variance");
    rows.push(ks_row(ctx, "x1", coordinate(&batch, 0, |x| x), |x| normal.cdf(x), &cfg));
    Ok(rows)
}

fn heisenberg(ctx: &Ctx) -> Result<Vec<InequalityReport>> {
    let g = Geometry::Heisenberg;
    let t = ctx.t(1.0);
    let n = ctx.n(1_000_000);
    let cfg = ctx.sim(t, n, 0);
    let (steps, _) = cfg.steps_for(t);
    let batch = simulate(g, &g.origin(), t, &cfg)?;
    let mut rows = Vec::new();
    let row = |what: &str, e: Estimate, v: f64, allowance: f64| {
        ctx.row("simulator-moments", what, format!("t={t}, {steps} steps"), Relation::Eq, e, exact(v), allowance, mc_provenance(&cfg))
    };
    let x2 = mc(&coordinate(&batch, 0, |x| x * x));
    rows.push(row("E[X^2]", x2, t, 0.0));
    rows.push(row("E[Y^2]", mc(&coordinate(&batch, 1, |y| y * y)), t, 0.0));
    rows.push(row("E[Z]", mc(&coordinate(&batch, 2, |z| z)), 0.0, 0.0));
    // The midpoint area rule gives E[Z²] = (t²/4)(1 − 1/N) exactly.
    let z_bias = t * t / (4.0 * steps as f64);
    rows.push(
        row("E[Z^2]", mc(&coordinate(&batch, 2, |z| z * z)), t * t / 4.0, z_bias)
            .with_note(format!("known discretization bias t²/4N = {z_bias:.3e} as allowance")),
    );
    rows.push(
        ctx.row(
            "simulator-symmetry",
            "sign(Z)",
            format!("t={t}: E[sign Z] = 0"),
            Relation::Eq,
            mc(&coordinate(&batch, 2, f64::signum)),
            exact(0.0),
            0.0,
            mc_provenance(&cfg),
        ),
    );
    let normal = Normal::new(0.0, t.sqrt()).expect("positive variance");
    rows.push(ks_row(ctx, "X", coordinate(&batch, 0, |x| x), |x| normal.cdf(x), &cfg));
    rows.push(ks_row(ctx, "Y", coordinate(&batch, 1, |x| x), |x| normal.cdf(x), &cfg));
    rows.push(
        ctx.row("simulator-moments", "E[X^2]", format!("t={t}, claimed 1.05t control"), Relation::Eq, x2, exact(1.05 * t), 0.0, mc_provenance(&cfg))
            .as_control()
            .with_note("inflated variance; must FAIL"),
    );
    Ok(rows)
}

fn hyperbolic(ctx: &Ctx) -> Result<Vec<InequalityReport>> {
    let g = Geometry::Hyperbolic3;
    let t = ctx.t(1.0);
    let n = ctx.n(1_000_000);
    let o = g.origin();
    let fine = ctx.cfg.dt.unwrap_or(t / 8.0);
    let cfg = SimConfig::new(fine, n, ctx.seed_for(0), Scheme::Euler)?;
    let levels = simulate_coupled(g, &o, t, &cfg, 3)?;

    let r_max = t + 12.0 * t.sqrt() + 2.0;
    let grid: Vec<f64> = (0..=(r_max / CDF_STEP).ceil() as usize).map(|i| i as f64 * CDF_STEP).collect();
    let table = radial_cdf(g, t, &grid)?;
    let cdf = |r: f64| interpolate(&table, CDF_STEP, r);
    let ks: Vec<f64> = levels
        .iter()
        .map(|b| ks_distance(b.endpoints().map(|e| hyperbolic::distance(&o, e)).collect(), cdf))
        .collect();
    let dts: Vec<f64> = levels.iter().map(|b| b.step).collect();
    let mut rows = Vec::new();
    let noise = 0.87 / (n as f64).sqrt();
    for k in 0..2 {
        let ratio = ks[k] / ks[k + 1];
        let instance = format!(
            "KS(dt={:.4})/KS(dt={:.4}) = {:.5e}/{:.5e}, t={t}",
            dts[k], dts[k + 1], ks[k], ks[k + 1]
        );
        let note = format!("sampling KS scale 0.87/√n = {noise:.2e}");
        rows.push(
            ctx.row("simulator-ks-halving", "d(o,X)", instance.clone(), Relation::Ge, exact(ratio), exact(KS_RATIO_BAND.0), 0.0, mc_provenance(&levels[k].config))
                .with_x(dts[k])
                .with_note(note.clone()),
        );
        rows.push(
            ctx.row("simulator-ks-halving", "d(o,X)", instance, Relation::Le, exact(ratio), exact(KS_RATIO_BAND.1), 0.0, mc_provenance(&levels[k].config))
                .with_x(dts[k])
                .with_note(note),
        );
    }
    // Control: KS does not vanish at the coarsest step.
    rows.push(
        ctx.row(
            "simulator-ks-halving",
            "d(o,X)",
            format!("KS at dt={:.4} within the sampling critical value, control", dts[2]),
            Relation::Le,
            exact(ks[2]),
            exact(KS_CRIT_001 / (n as f64).sqrt()),
            0.0,
            mc_provenance(&levels[2].config),
        )
        .as_control()
        .with_note("coarse steps are visibly biased; must FAIL"),
    );

    // Weak order on a smooth bounded functional, from paired differences.
    let f = |p: &[f64]| 1.0 / (1.0 + p[0] * p[0] + p[1] * p[1]);
    let diff = |a: usize, b: usize| -> Vec<f64> {
        levels[a].endpoints().zip(levels[b].endpoints()).map(|(p, q)| f(p) - f(q)).collect()
    };
    let d1 = mc(&diff(1, 0));
    let d2 = mc(&diff(2, 1));
    let ratio = d2.value / d1.value;
    let ratio_se = ratio.abs() * ((d1.stderr / d1.value).powi(2) + (d2.stderr / d2.value).powi(2)).sqrt();
    rows.push(
        ctx.row(
            "simulator-weak-order",
            "1/(1+x1^2+x2^2)",
            format!("(E_4h−E_2h)/(E_2h−E_h) ≥ 1.5, h={:.4}, t={t}", dts[0]),
            Relation::Ge,
            Estimate {
                value: ratio,
                stderr: ratio_se,
                n,
                method: Method::Mc,
            },
            exact(1.5),
            0.0,
            mc_provenance(&cfg),
        )
        .with_note(format!("E_2h−E_h = {:.4e} ± {:.1e}; first-order weak convergence gives ratio 2", d1.value, d1.stderr)),
    );
    Ok(rows)
}
