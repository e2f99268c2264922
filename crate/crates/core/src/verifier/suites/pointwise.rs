use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{certify, norm_any, provenance_of, Ctx};
use crate::error::Result;
use crate::estimators::Estimate;
use crate::geometry::{hyperbolic, FunctionClass, Geometry, Point};
use crate::verifier::report::{InequalityReport, Relation};

const D_MAX: f64 = 4.0;
const D_STEPS: usize = 40;
const HEISENBERG_POINTS: usize = 50;

/// Offsets from the origin at which the bound is checked, with a label.
fn offsets(ctx: &Ctx) -> Vec<(Vec<f64>, String)> {
    let g = ctx.g();
    let ds = (0..=D_STEPS).map(|i| D_MAX * i as f64 / D_STEPS as f64);
    match g {
        Geometry::Euclidean(n) => ds
            .flat_map(|d| {
                let signs: &[f64] = if d == 0.0 { &[1.0] } else { &[1.0, -1.0] };
                signs.iter().map(move |s| {
                    let mut w = vec![0.0; n];
                    w[0] = s * d;
                    (w, format!("{}e1", s * d))
                })
            })
            .collect(),
        Geometry::Hyperbolic3 => ds
            .flat_map(|d| {
                let thetas: &[(f64, &str)] = if d == 0.0 {
                    &[(0.0, "0")]
                } else {
                    &[(0.0, "0"), (std::f64::consts::FRAC_PI_2, "π/2"), (std::f64::consts::PI, "π")]
                };
                thetas.iter().map(move |&(th, name)| (hyperbolic::point_at(d, th).to_vec(), format!("r={d}, θ={name}")))
            })
            .collect(),
        Geometry::Heisenberg => {
            let mut out = vec![(vec![0.0; 3], "identity".to_string())];
            for k in 1..10 {
                let a = 0.3 * k as f64;
                out.push((vec![a, 0.0, 0.0], format!("axis x={a}")));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed_for(7));
            while out.len() < HEISENBERG_POINTS {
                let w: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
                out.push((w, "random".to_string()));
            }
            out
        }
    }
}

/// `|f(x)| ≤ ‖f‖_{Lᵖ(μ_T^o)} exp(c·d(x, o)²)` with the Riemannian constant
/// `c = K(p−1)/(2(1−e^{−KT}))` (`(p−1)/2T` when `K = 0`) or, on the
/// Heisenberg group, `c = (p/(p−1))(1 + 2κ/ρ₂ + 2ρ₁⁻t)/(4t)` at `t = T` and `t = T/2`.
pub(super) fn pointwise_bound(ctx: &Ctx) -> Result<Vec<InequalityReport>> {
    let g = ctx.g();
    let p = ctx.p_strict(2.0)?;
    let big_t = ctx.big_t(1.0);
    let o = ctx.o();
    let defaults: &[&str] = match g {
        Geometry::Euclidean(_) => &["x1"],
        Geometry::Hyperbolic3 => &["halfspace", "poisson"],
        Geometry::Heisenberg => &["x"],
    };
    let exponents: Vec<(f64, String)> = match (g.ricci_lower_bound(), g.cd_params()) {
        (Some(0.0), _) => vec![((p - 1.0) / (2.0 * big_t), format!("K=0, T={big_t}"))],
        (Some(k), _) => vec![(k * (p - 1.0) / (2.0 * -(-k * big_t).exp_m1()), format!("K={k}, T={big_t}"))],
        (None, Some(cd)) => [big_t, big_t / 2.0]
            .iter()
            .map(|&t| (cd.pointwise_exponent(p, t), format!("CD t={t}, T={big_t}")))
            .collect(),
        (None, None) => unreachable!("every geometry carries a curvature bound"),
    };
    let points: Vec<(Vec<f64>, f64, String)> = offsets(ctx)
        .into_iter()
        .map(|(w, label)| {
            let x = g.translate(&o, &w);
            let d = g.distance(&o, &x)?;
            Ok((x, d, label))
        })
        .collect::<Result<_>>()?;

    let n = ctx.n(100_000);
    let mut rows = Vec::new();
    for (j, f) in ctx.functions(defaults)?.iter().enumerate() {
        certify(g, f, &[FunctionClass::Harmonic, FunctionClass::Subharmonic])?;
        let (norm, cfg) = norm_any(ctx, f, &o, big_t, p, n, 16 * j as u64)?;
        for (e, (c, label)) in exponents.iter().enumerate() {
            // Controls go on the tightest point of the first exponent only.
            let mut tightest: Option<(f64, InequalityReport)> = None;
            for (x, d, point_label) in &points {
                let factor = (c * d * d).exp();
                let lhs = Estimate::deterministic(f.eval(x).abs(), crate::verifier::report::Method::Exact);
                let rhs = Estimate {
                    value: norm.value * factor,
                    stderr: norm.stderr * factor,
                    ..norm
                };
                let prov = provenance_of(&[&lhs, &rhs], cfg.as_ref());
                let instance = format!("o={o}, p={p}, {label}, x={} ({point_label}), d={d:.6}", Point::new(x.clone()));
                let row = ctx.row("pointwise-bound", &f.id, instance, Relation::Le, lhs, rhs, 0.0, prov).with_x(*d);
                if e == 0 && lhs.value > 0.0 {
                    let ratio = rhs.value / lhs.value;
                    if tightest.as_ref().is_none_or(|(r, _)| ratio < *r) {
                        tightest = Some((ratio, row.clone()));
                    }
                }
                rows.push(row);
            }
            if let Some((_, base)) = tightest {
                let lhs = Estimate::deterministic(base.lhs, crate::verifier::report::Method::Exact);
                let rhs = Estimate {
                    value: 0.2 * base.rhs,
                    stderr: 0.2 * base.rhs_stderr,
                    ..norm
                };
                rows.push(
                    ctx.row(
                        "pointwise-bound",
                        &f.id,
                        format!("{}, rhs×0.2 control", base.instance),
                        Relation::Le,
                        lhs,
                        rhs,
                        0.0,
                        base.provenance.clone(),
                    )
                    .with_x(base.x.unwrap_or(0.0))
                    .as_control()
                    .with_note("shrunk right side at the tightest grid point; must FAIL"),
                );
            }
        }
    }
    Ok(rows)
}
