use super::{certify, exact, heat_op_any, mc_provenance, mean_se, provenance_of, Ctx};
use crate::diffusion::{simulate, simulate_coupled};
use crate::error::Result;
use crate::estimators::heat_op_from_batch;
use crate::gamma::{heat_semigroup, Convention};
use crate::geometry::{catalog_functions, function_by_id, FunctionClass, Geometry, Point, TestFunction};
use crate::verifier::report::{InequalityReport, Relation};

const T_GRID: [f64; 3] = [0.25, 0.5, 1.0];

fn default_x(g: Geometry) -> Point {
    match g {
        Geometry::Euclidean(n) => Point::new((0..n).map(|i| [0.5, -0.3, 0.2][i % 3]).collect()),
        Geometry::Hyperbolic3 => g.origin(),
        Geometry::Heisenberg => Point::new(vec![1.0, 0.0, 0.0]),
    }
}

/// `e^{tL}f = f` for certified harmonic `f`.
pub(super) fn harmonic_fixed_point(ctx: &Ctx) -> Result<Vec<InequalityReport>> {
    let g = ctx.g();
    let x = ctx.cfg.o.clone().unwrap_or_else(|| default_x(g));
    let n = ctx.n(100_000);
    let fns: Vec<TestFunction> = match (&ctx.cfg.functions, g) {
        (Some(_), _) => ctx.functions(&[])?,
        (None, Geometry::Euclidean(_)) => catalog_functions(g)
            .into_iter()
            .filter(|f| f.class == FunctionClass::Harmonic)
            .collect(),
        (None, Geometry::Hyperbolic3) => ctx.functions(&["halfspace", "poisson", "x1"])?,
        (None, Geometry::Heisenberg) => ctx.functions(&["z", "xy", "x^2-y^2"])?,
    };
    for f in &fns {
        certify(g, f, &[FunctionClass::Harmonic])?;
    }
    let times = ctx.t_grid(if g == Geometry::Heisenberg { &[1.0] } else { &T_GRID });
    let control_id = match g {
        Geometry::Heisenberg => "x^2",
        _ => "x1^2",
    };
    let control = function_by_id(g, control_id)?;
    let mut rows = Vec::new();
    let instance = |t: f64| format!("x={x}, t={t}");

    for (k, &t) in times.iter().enumerate() {
        let stream = 64 * k as u64;
        match g {
            Geometry::Euclidean(_) => {
                for (j, f) in fns.iter().enumerate() {
                    let (e, cfg) = heat_op_any(ctx, f, &x, t, n, stream + j as u64)?;
                    let fx = exact(f.eval(&x));
                    rows.push(
                        ctx.row(
                            "harmonic-fixed-point",
                            &f.id,
                            instance(t),
                            Relation::Eq,
                            e,
                            fx,
                            0.0,
                            provenance_of(&[&e], cfg.as_ref()),
                        )
                        .with_x(t),
                    );
                }
                if k + 1 == times.len() {
                    let (e, cfg) = heat_op_any(ctx, &control, &x, t, n, stream + 63)?;
                    rows.push(
                        ctx.row(
                            "harmonic-fixed-point",
                            &control.id,
                            format!("{}, subharmonic control", instance(t)),
                            Relation::Eq,
                            e,
                            exact(control.eval(&x)),
                            0.0,
                            provenance_of(&[&e], cfg.as_ref()),
                        )
                        .as_control()
                        .with_note("subharmonic function claimed fixed; must FAIL"),
                    );
                }
            }
            Geometry::Hyperbolic3 => {
                // Three coupled step sizes dt, 2dt, 4dt bound the Euler bias.
                let cfg = ctx.sim(t, n, stream);
                let levels = simulate_coupled(g, &x, t, &cfg, 3)?;
                for f in fns.iter().chain(std::iter::once(&control).filter(|_| k + 1 == times.len())) {
                    let is_control = std::ptr::eq(f, &control);
                    let e = heat_op_from_batch(f, &levels[0])?;
                    let diff = |a: usize, b: usize| -> Vec<f64> {
                        levels[a]
                            .endpoints()
                            .zip(levels[b].endpoints())
                            .map(|(p, q)| f.eval(p) - f.eval(q))
                            .collect()
                    };
                    let (d1, se1) = mean_se(&diff(1, 0));
                    let (d2, _) = mean_se(&diff(2, 1));
                    let allowance = d1.abs() + 3.0 * se1;
                    let ratio = d2 / d1;
                    let row = ctx
                        .row(
                            "harmonic-fixed-point",
                            &f.id,
                            instance(t),
                            Relation::Eq,
                            e,
                            exact(f.eval(&x)),
                            allowance,
                            mc_provenance(&levels[0].config),
                        )
                        .with_x(t)
                        .with_note(format!(
                            "dt bias allowance |E_2h−E_h| + 3se = {allowance:.3e}; Richardson ratio (E_4h−E_2h)/(E_2h−E_h) = {ratio:.3}"
                        ));
                    rows.push(if is_control {
                        row.as_control().with_note("subharmonic function claimed fixed; must FAIL")
                    } else {
                        row
                    });
                }
            }
            Geometry::Heisenberg => {
                let cfg = ctx.sim(t, n, stream);
                let batch = simulate(g, &x, t, &cfg)?;
                for f in &fns {
                    let e = heat_op_from_batch(f, &batch)?;
                    rows.push(
                        ctx.row(
                            "harmonic-fixed-point",
                            &f.id,
                            instance(t),
                            Relation::Eq,
                            e,
                            exact(f.eval(&x)),
                            0.0,
                            mc_provenance(&cfg),
                        )
                        .with_x(t),
                    );
                }
                if k + 1 == times.len() {
                    let e = heat_op_from_batch(&control, &batch)?;
                    rows.push(
                        ctx.row(
                            "harmonic-fixed-point",
                            &control.id,
                            format!("{}, subharmonic control", instance(t)),
                            Relation::Eq,
                            e,
                            exact(control.eval(&x)),
                            0.0,
                            mc_provenance(&cfg),
                        )
                        .as_control()
                        .with_note("subharmonic function claimed fixed; must FAIL"),
                    );
                }
            }
        }
    }
    Ok(rows)
}

/// `e^{tL}f ≥ f` for certified subharmonic `f`, non-decreasing in `t`.
pub(super) fn subharmonic_growth(ctx: &Ctx) -> Result<Vec<InequalityReport>> {
    let g = ctx.g();
    let x = ctx.o();
    let n = ctx.n(100_000);
    let defaults: &[&str] = match g {
        Geometry::Euclidean(_) => &["x1^2", "|x|^2"],
        Geometry::Hyperbolic3 => &["x1^2"],
        Geometry::Heisenberg => &["x^2", "x^2+y^2"],
    };
    let fns = ctx.functions(defaults)?;
    for f in &fns {
        certify(g, f, &[FunctionClass::Subharmonic, FunctionClass::Harmonic])?;
    }
    let times = ctx.t_grid(&T_GRID);
    let mut rows = Vec::new();
    let mut control = None;
    for (j, f) in fns.iter().enumerate() {
        let fx = exact(f.eval(&x));
        let mut prev: Option<(crate::estimators::Estimate, Option<crate::diffusion::SimConfig>, f64)> = None;
        for (k, &t) in times.iter().enumerate() {
            let (e, cfg) = heat_op_any(ctx, f, &x, t, n, 64 * j as u64 + k as u64)?;
            let prov = provenance_of(&[&e], cfg.as_ref());
            rows.push(
                ctx.row("subharmonic-growth", &f.id, format!("x={x}, t={t}"), Relation::Ge, e, fx, 0.0, prov.clone())
                    .with_x(t),
            );
            if let Some(poly) = &f.polynomial {
                // Polynomials have a terminating heat series: an exact oracle.
                let exact_value = heat_semigroup(&poly.to_f64(), &t, Convention::Half).eval(&x);
                rows.push(
                    ctx.row(
                        "heat-operator-polynomial",
                        &f.id,
                        format!("x={x}, t={t}, exact Σ tᵏLᵏf/k!"),
                        Relation::Eq,
                        e,
                        exact(exact_value),
                        0.0,
                        prov.clone(),
                    )
                    .with_x(t),
                );
            }
            if let Some((pe, pcfg, pt)) = prev {
                let prov = provenance_of(&[&e, &pe], cfg.as_ref().or(pcfg.as_ref()));
                rows.push(
                    ctx.row(
                        "subharmonic-monotone",
                        &f.id,
                        format!("x={x}, e^{{tL}}f at t={t} ≥ at t={pt}"),
                        Relation::Ge,
                        e,
                        pe,
                        0.0,
                        prov,
                    )
                    .with_x(t),
                );
            }
            if control.is_none() && k + 1 == times.len() && f.class == FunctionClass::Subharmonic {
                let neg = |e: crate::estimators::Estimate| crate::estimators::Estimate { value: -e.value, ..e };
                control = Some(
                    ctx.row(
                        "subharmonic-growth",
                        &format!("-({})", f.id),
                        format!("x={x}, t={t}, sign-flipped control"),
                        Relation::Ge,
                        neg(e),
                        neg(fx),
                        0.0,
                        prov,
                    )
                    .as_control()
                    .with_note("superharmonic −f claimed to grow; must FAIL"),
                );
            }
            prev = Some((e, cfg, t));
        }
    }
    rows.extend(control);
    Ok(rows)
}
