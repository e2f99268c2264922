use super::{exact, provenance_of, require_class, smoothed_any, norm_any, Ctx};
use crate::error::{Error, Result};
use crate::geometry::{FunctionClass, Geometry};
use crate::verifier::report::{InequalityReport, Relation};

fn ordered_times(ctx: &Ctx, t: f64, big_t: f64) -> Result<()> {
    if !(t < big_t) {
        return Err(Error::Config(format!(
            "experiment `{}`, field `times`: need t < T, got t={t}, T={big_t}",
            ctx.cfg.suite
        )));
    }
    Ok(())
}

/// `‖e^{tL}f‖_{Lᵖ(μ_{T−t}^o)} ≤ ‖f‖_{Lᵖ(μ_T^o)}`.
pub(super) fn semigroup_contraction(ctx: &Ctx) -> Result<Vec<InequalityReport>> {
    let g = ctx.g();
    let big_t = ctx.big_t(1.0);
    let t = ctx.t(0.5);
    let p = ctx.p(2.0);
    ordered_times(ctx, t, big_t)?;
    let o = ctx.o();
    let defaults: &[&str] = match g {
        Geometry::Euclidean(_) => &["exp(1*x1)", "x1", "ball(1)"],
        Geometry::Hyperbolic3 => &["poisson", "ball(1)"],
        Geometry::Heisenberg => &["x^2", "xy"],
    };
    let n_outer = ctx.n(10_000);
    let n_inner = ctx.n(10_000);
    let n_norm = ctx.n(100_000);
    let instance = |p: f64, t: f64| format!("o={o}, T={big_t}, t={t}, p={p}");
    let mut rows = Vec::new();

    for (k, f) in ctx.functions(defaults)?.iter().enumerate() {
        let stream = 16 * k as u64;
        let (lhs, lcfg) = smoothed_any(ctx, f, &o, big_t - t, t, p, n_outer, n_inner, stream)?;
        let (rhs, rcfg) = norm_any(ctx, f, &o, big_t, p, n_norm, stream + 2)?;
        let prov = provenance_of(&[&lhs.estimate, &rhs], lcfg.as_ref().or(rcfg.as_ref()));
        let mut row = ctx.row(
            "semigroup-contraction",
            &f.id,
            instance(p, t),
            Relation::Le,
            lhs.estimate,
            rhs,
            lhs.bias_bound,
            prov,
        );
        if lhs.bias_bound > 0.0 {
            row = row.with_note(format!(
                "nested MC: outer n={n_outer}, inner n={n_inner}; inner-noise bias bound {:.3e} added as allowance",
                lhs.bias_bound
            ));
        }
        rows.push(row);

        if k == 0 {
            // t = 0: the operator is the identity and both sides are one number.
            let (lhs0, cfg0) = smoothed_any(ctx, f, &o, big_t, 0.0, p, n_norm, n_inner, stream + 2)?;
            let prov = provenance_of(&[&lhs0.estimate, &rhs], cfg0.as_ref().or(rcfg.as_ref()));
            rows.push(ctx.row(
                "semigroup-contraction",
                &f.id,
                instance(p, 0.0),
                Relation::Eq,
                lhs0.estimate,
                rhs,
                0.0,
                prov,
            ));
        }
    }

    // Control: for p = 1 and f ≥ 0 the contraction is an equality, so a 5%
    // smaller right side must be violated.
    let control_id = match g {
        Geometry::Euclidean(_) => "x1^2",
        Geometry::Hyperbolic3 => "poisson",
        Geometry::Heisenberg => "x^2",
    };
    let f = crate::geometry::function_by_id(g, control_id)?;
    let (lhs, lcfg) = smoothed_any(ctx, &f, &o, big_t - t, t, 1.0, n_outer, n_inner, 1000)?;
    let (rhs, rcfg) = norm_any(ctx, &f, &o, big_t, 1.0, n_norm, 1002)?;
    let mut shrunk = rhs;
    shrunk.value *= 0.95;
    shrunk.stderr *= 0.95;
    let prov = provenance_of(&[&lhs.estimate, &rhs], lcfg.as_ref().or(rcfg.as_ref()));
    rows.push(
        ctx.row(
            "semigroup-contraction",
            &f.id,
            format!("{}, rhs×0.95 control", instance(1.0, t)),
            Relation::Le,
            lhs.estimate,
            shrunk,
            lhs.bias_bound,
            prov,
        )
        .as_control()
        .with_note("equality case p=1, f≥0 with shrunk right side; must FAIL"),
    );
    Ok(rows)
}

/// `‖f‖_{Lᵖ(μ_s^o)} ≤ ‖f‖_{Lᵖ(μ_t^o)} ≤ ‖f‖_{Lᵖ(μ_T^o)}` for harmonic or
/// non-negative subharmonic `f`.
pub(super) fn norm_monotonicity(ctx: &Ctx) -> Result<Vec<InequalityReport>> {
    let g = ctx.g();
    let s = ctx.s(0.25);
    let t = ctx.t(0.5);
    let big_t = ctx.big_t(1.0);
    if !(s <= t && t <= big_t) {
        return Err(Error::Config(format!(
            "experiment `{}`, field `times`: need s ≤ t ≤ T",
            ctx.cfg.suite
        )));
    }
    let p = ctx.p(2.0);
    let o = ctx.o();
    let defaults: &[&str] = match g {
        Geometry::Euclidean(_) => &["x1", "const(1)"],
        Geometry::Hyperbolic3 => &["poisson", "const(1)"],
        Geometry::Heisenberg => &["xy", "x^2"],
    };
    let n = ctx.n(100_000);
    let mut rows = Vec::new();
    let mut control = None;
    for (k, f) in ctx.functions(defaults)?.iter().enumerate() {
        require_class(f, &[FunctionClass::Harmonic, FunctionClass::Subharmonic])?;
        let stream = 16 * k as u64;
        let times = [s, t, big_t];
        let mut norms = Vec::with_capacity(3);
        for (j, &tj) in times.iter().enumerate() {
            norms.push(norm_any(ctx, f, &o, tj, p, n, stream + j as u64)?);
        }
        for j in 0..2 {
            let (a, ca) = norms[j];
            let (b, cb) = norms[j + 1];
            rows.push(
                ctx.row(
                    "norm-monotonicity",
                    &f.id,
                    format!("o={o}, p={p}, ‖f‖ at {} ≤ at {}", times[j], times[j + 1]),
                    Relation::Le,
                    a,
                    b,
                    0.0,
                    provenance_of(&[&a, &b], ca.as_ref().or(cb.as_ref())),
                )
                .with_x(times[j + 1]),
            );
        }
        let constant = f.id.starts_with("const(");
        if control.is_none() && !constant {
            let (a, ca) = norms[2];
            let (b, cb) = norms[0];
            control = Some(
                ctx.row(
                    "norm-monotonicity",
                    &f.id,
                    format!("o={o}, p={p}, reversed: ‖f‖ at {big_t} ≤ at {s}"),
                    Relation::Le,
                    a,
                    b,
                    0.0,
                    provenance_of(&[&a, &b], ca.as_ref().or(cb.as_ref())),
                )
                .as_control()
                .with_note("reversed time order; must FAIL"),
            );
        }
    }
    rows.extend(control);
    Ok(rows)
}

/// The exponent `q = 1 + (p−1)(1−e^{−KT})/(1−e^{−Kt})`, with the `K → 0`
/// limit `1 + (p−1)T/t`.
pub fn hypercontractive_exponent(p: f64, k: f64, big_t: f64, t: f64) -> f64 {
    if k == 0.0 {
        1.0 + (p - 1.0) * big_t / t
    } else {
        1.0 + (p - 1.0) * (-k * big_t).exp_m1() / (-k * t).exp_m1()
    }
}

/// `‖e^{(T−t)L}f‖_{L^q(μ_t^o)} ≤ ‖f‖_{Lᵖ(μ_T^o)}`.
pub(super) fn hypercontractivity(ctx: &Ctx) -> Result<Vec<InequalityReport>> {
    let g = ctx.g();
    let k = g.ricci_lower_bound().expect("exact-kernel geometries have a Ricci bound");
    let big_t = ctx.big_t(1.0);
    let t = ctx.t(0.5);
    if !(t > 0.0) {
        return Err(Error::Config(format!(
            "experiment `{}`, field `times.t`: need t > 0",
            ctx.cfg.suite
        )));
    }
    ordered_times(ctx, t, big_t)?;
    let p = ctx.p_strict(2.0)?;
    let q = hypercontractive_exponent(p, k, big_t, t);
    let o = ctx.o();
    let defaults: &[&str] = match g {
        Geometry::Euclidean(_) => &["exp(1*x1)", "ball(1)"],
        _ => &["ball(1)", "poisson"],
    };
    let n = ctx.n(10_000);
    let instance = |q: f64| format!("o={o}, T={big_t}, t={t}, p={p}, q={q}, K={k}");
    let mut rows = Vec::new();
    if k == 0.0 {
        let limit = hypercontractive_exponent(p, 1e-12, big_t, t);
        rows.push(ctx.row(
            "hypercontractivity-exponent",
            "-",
            format!("q at K=1e-12 against 1+(p−1)T/t, T={big_t}, t={t}, p={p}"),
            Relation::Eq,
            exact(limit),
            exact(q),
            0.0,
            crate::verifier::report::Provenance::exact(crate::verifier::report::Method::Exact),
        ));
    }
    for (j, f) in ctx.functions(defaults)?.iter().enumerate() {
        let stream = 16 * j as u64;
        let (lhs, lcfg) = smoothed_any(ctx, f, &o, t, big_t - t, q, n, n, stream)?;
        let (rhs, rcfg) = norm_any(ctx, f, &o, big_t, p, n, stream + 2)?;
        let prov = provenance_of(&[&lhs.estimate, &rhs], lcfg.as_ref().or(rcfg.as_ref()));
        rows.push(ctx.row(
            "hypercontractivity",
            &f.id,
            instance(q),
            Relation::Le,
            lhs.estimate,
            rhs,
            lhs.bias_bound,
            prov.clone(),
        ));
        if matches!(f.reduction, crate::geometry::Reduction::Axis { profile: crate::geometry::Profile::Exp { .. }, .. }) {
            // The exponential family is extremal: any larger q breaks it.
            let q_up = 1.05 * q;
            let (lhs, lcfg) = smoothed_any(ctx, f, &o, t, big_t - t, q_up, n, n, stream + 4)?;
            let prov = provenance_of(&[&lhs.estimate, &rhs], lcfg.as_ref().or(rcfg.as_ref()));
            rows.push(
                ctx.row(
                    "hypercontractivity",
                    &f.id,
                    format!("{}, q×1.05 control", instance(q_up)),
                    Relation::Le,
                    lhs.estimate,
                    rhs,
                    lhs.bias_bound,
                    prov,
                )
                .as_control()
                .with_note("inflated exponent on the extremal family; must FAIL"),
            );
        }
    }
    Ok(rows)
}
