use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::{exact, mc_provenance, Ctx};
use crate::diffusion::{exit_time_probe, locality_probe, reflection_exit_probability, ProbabilityEstimate, SimConfig};
use crate::error::{Error, Result};
use crate::estimators::Estimate;
use crate::geometry::{Geometry, Point};
use crate::verifier::report::{InequalityReport, Method, Relation};

const DELTA: f64 = 1.0;
const S_GRID: [f64; 4] = [0.1, 0.25, 0.5, 1.0];
const EXIT_T: f64 = 0.25;
const EXIT_RADII: [f64; 3] = [0.5, 1.0, 1.5];

fn est(p: ProbabilityEstimate) -> Estimate {
    Estimate {
        value: p.value,
        stderr: p.stderr,
        n: p.n,
        method: Method::Mc,
    }
}

fn other_points(g: Geometry) -> Vec<Point> {
    match g {
        Geometry::Euclidean(n) => vec![Point::new(vec![3.0; n]), Point::new((0..n).map(|i| -1.5 + i as f64).collect())],
        Geometry::Hyperbolic3 => vec![Point::new(vec![2.0, -1.0, 0.1]), Point::new(vec![0.0, 0.0, 20.0])],
        Geometry::Heisenberg => vec![Point::new(vec![2.0, -1.0, 5.0]), Point::new(vec![0.0, 0.0, -3.0])],
    }
}

/// Uniform locality `P_x(d(x, X_s) ≤ δ)` near 1 for small `s`, uniformly in
/// `x`, and ball exit probabilities against the reflection principle.
pub(super) fn locality(ctx: &Ctx) -> Result<Vec<InequalityReport>> {
    let g = ctx.g();
    let o = ctx.o();
    let n = ctx.n(20_000);
    let s_grid = ctx.t_grid(&S_GRID);
    let mut rows = Vec::new();
    let probe = |x: &Point, s: f64, stream: u64| -> Result<(Estimate, SimConfig)> {
        let cfg = ctx.sim(s, n, stream);
        Ok((est(locality_probe(g, x, DELTA, s, &cfg)?), cfg))
    };

    let zero = locality_probe(g, &o, DELTA, 0.0, &ctx.sim(1.0, n, 0))?;
    rows.push(ctx.row(
        "locality",
        "-",
        format!("x={o}, δ={DELTA}, s=0"),
        Relation::Eq,
        exact(zero.value),
        exact(1.0),
        0.0,
        crate::verifier::report::Provenance::exact(Method::Exact),
    ));

    let mut at_o = Vec::new();
    for (k, &s) in s_grid.iter().enumerate() {
        at_o.push(probe(&o, s, k as u64)?);
    }
    if let Geometry::Euclidean(dim) = g {
        let chi = ChiSquared::new(dim as f64).map_err(|e| Error::invalid(e.to_string()))?;
        for (&s, (e, cfg)) in s_grid.iter().zip(&at_o) {
            let truth = chi.cdf(DELTA * DELTA / s);
            rows.push(
                ctx.row(
                    "locality",
                    "-",
                    format!("x={o}, δ={DELTA}, s={s} against P(χ²_{dim} ≤ δ²/s)"),
                    Relation::Eq,
                    *e,
                    exact(truth),
                    0.0,
                    mc_provenance(cfg),
                )
                .with_x(s),
            );
        }
    }
    for k in 1..at_o.len() {
        let (a, _) = at_o[k - 1];
        let (b, cfg) = at_o[k];
        rows.push(
            ctx.row(
                "locality-monotone",
                "-",
                format!("x={o}, δ={DELTA}: P at s={} ≥ P at s={}", s_grid[k - 1], s_grid[k]),
                Relation::Ge,
                a,
                b,
                0.0,
                mc_provenance(&cfg),
            )
            .with_x(s_grid[k]),
        );
    }
    if at_o.len() > 1 {
        let (a, _) = at_o[0];
        let (b, cfg) = at_o[at_o.len() - 1];
        rows.push(
            ctx.row(
                "locality-monotone",
                "-",
                format!(
                    "x={o}, δ={DELTA}: P at s={} ≥ P at s={}, reversed control",
                    s_grid[s_grid.len() - 1],
                    s_grid[0]
                ),
                Relation::Ge,
                b,
                a,
                0.0,
                mc_provenance(&cfg),
            )
            .as_control()
            .with_note("reversed time order; must FAIL"),
        );
    }

    let s0 = s_grid[0];
    for (j, x) in other_points(g).iter().enumerate() {
        let x = Point::new(g.translate(&o, x));
        let (e, cfg) = probe(&x, s0, 100 + j as u64)?;
        rows.push(
            ctx.row(
                "locality-uniform",
                "-",
                format!("P at x={x} equals P at o={o}, δ={DELTA}, s={s0}"),
                Relation::Eq,
                e,
                at_o[0].0,
                0.0,
                mc_provenance(&cfg),
            )
            .with_note("isometry invariance; a finite sample of x is evidence, not a proof of uniformity"),
        );
    }

    let cfg = ctx.sim_stepped(EXIT_T, n, 200, 1024);
    let mut exits = Vec::new();
    for &r in &EXIT_RADII {
        exits.push(est(exit_time_probe(g, &o, r, EXIT_T, &cfg)?));
    }
    for k in 1..exits.len() {
        rows.push(ctx.row(
            "exit-monotone",
            "-",
            format!("P(τ_r ≤ {EXIT_T}) at r={} ≥ at r={} (same paths)", EXIT_RADII[k - 1], EXIT_RADII[k]),
            Relation::Ge,
            exits[k - 1],
            exits[k],
            0.0,
            mc_provenance(&cfg),
        ));
    }
    if let Geometry::Euclidean(1) = g {
        for (&r, e) in EXIT_RADII.iter().zip(&exits) {
            rows.push(
                ctx.row(
                    "exit-reflection",
                    "-",
                    format!("P(τ_r ≤ {EXIT_T}) at r={r} ≤ reflection series"),
                    Relation::Le,
                    *e,
                    exact(reflection_exit_probability(r, EXIT_T)),
                    0.0,
                    mc_provenance(&cfg),
                )
                .with_x(r)
                .with_note("skeleton detection underestimates exits"),
            );
        }
    }
    Ok(rows)
}
