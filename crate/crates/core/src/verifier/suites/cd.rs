use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{exact, Ctx};
use crate::error::Result;
use crate::gamma::{apply_field, check_cd, CdMargin, CdParams, Convention, ExactPoly, VectorField};
use crate::geometry::{catalog_functions, Geometry};
use crate::verifier::report::{InequalityReport, Method, Provenance, Relation, Verdict};

pub const NUS: [f64; 3] = [0.1, 1.0, 10.0];
const RANDOM_POLYS: usize = 500;
const POINTS_PER_POLY: usize = 20;
const BRACKET_POLYS: usize = 200;
const MAX_DEGREE: u32 = 3;
const COEFF_BOUND: i64 = 3;

/// Lattice `{−2, −1, 0, 1, 2}³`.
pub fn lattice() -> Vec<[f64; 3]> {
    let v = [-2.0, -1.0, 0.0, 1.0, 2.0];
    let mut out = Vec::with_capacity(125);
    for &a in &v {
        for &b in &v {
            for &c in &v {
                out.push([a, b, c]);
            }
        }
    }
    out
}

/// Worst CD margin of every catalog polynomial on the lattice.
pub fn catalog_margins(params: &CdParams) -> Result<Vec<(String, CdMargin)>> {
    let pts = lattice();
    catalog_functions(Geometry::Heisenberg)
        .into_iter()
        .filter_map(|f| f.polynomial.clone().map(|p| (f.id, p)))
        .map(|(id, p)| Ok((id, check_cd(&p, params, &pts, &NUS, Convention::Unit)?)))
        .collect()
}

fn cd_row(ctx: &Ctx, claim: &str, function: &str, instance: String, m: &CdMargin) -> InequalityReport {
    ctx.row(
        claim,
        function,
        format!(
            "{instance}; witness {:?}, ν={}; Γ₂+νΓ₂ᶻ={:.6e}, rhs={:.6e}",
            m.witness_point, m.witness_nu, m.lhs, m.rhs
        ),
        Relation::Ge,
        exact(m.worst_margin),
        exact(0.0),
        0.0,
        Provenance::exact(Method::Exact),
    )
}

/// Bracket identities and the curvature-dimension inequality
/// `CD(0, ½, 1, 2)` for `L = Y₁² + Y₂²`.
pub(super) fn cd_check(ctx: &Ctx) -> Result<Vec<InequalityReport>> {
    let params = CdParams::HEISENBERG;
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let mut rows = Vec::new();

    let (y1, y2, z) = (VectorField::y1(), VectorField::y2(), VectorField::z());
    let mut bad = 0usize;
    for _ in 0..BRACKET_POLYS {
        let f = ExactPoly::random(&mut rng, MAX_DEGREE + 1, COEFF_BOUND);
        let comm = |a: &VectorField<_>, b: &VectorField<_>| &apply_field(a, &apply_field(b, &f)) - &apply_field(b, &apply_field(a, &f));
        let ok = (&comm(&y1, &y2) - &apply_field(&z, &f)).is_zero()
            && comm(&y1, &z).is_zero()
            && comm(&y2, &z).is_zero();
        if !ok {
            bad += 1;
        }
    }
    rows.push(
        ctx.row(
            "bracket-identity",
            "random",
            format!("[Y₁,Y₂]=Z, [Y₁,Z]=[Y₂,Z]=0 on {BRACKET_POLYS} random polynomials (exact rational arithmetic)"),
            Relation::Eq,
            exact(bad as f64),
            exact(0.0),
            0.0,
            Provenance::exact(Method::Exact),
        )
        .with_verdict(if bad == 0 { Verdict::PassExact } else { Verdict::Fail }),
    );

    for (id, m) in catalog_margins(&params)? {
        rows.push(cd_row(ctx, "cd-inequality", &id, format!("lattice {{−2..2}}³ × ν∈{NUS:?}"), &m));
    }

    let n_polys = ctx.n(RANDOM_POLYS);
    let mut worst: Option<CdMargin> = None;
    for _ in 0..n_polys {
        let f = ExactPoly::random(&mut rng, MAX_DEGREE, COEFF_BOUND);
        let pts: Vec<[f64; 3]> = (0..POINTS_PER_POLY)
            .map(|_| [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)])
            .collect();
        let m = check_cd(&f, &params, &pts, &NUS, Convention::Unit)?;
        if worst.as_ref().is_none_or(|w| m.worst_margin < w.worst_margin) {
            worst = Some(m);
        }
    }
    let worst = worst.expect("at least one polynomial");
    rows.push(cd_row(
        ctx,
        "cd-inequality",
        "random",
        format!("{n_polys} random polynomials of degree ≤ {MAX_DEGREE} × {POINTS_PER_POLY} points × ν∈{NUS:?}"),
        &worst,
    ));

    let zpoly = ExactPoly::z();
    let w = check_cd(&zpoly, &params, &[[0.0; 3]], &[1.0], Convention::Unit)?;
    rows.push(
        ctx.row(
            "cd-witness",
            "z",
            "margin at the identity, ν=1".into(),
            Relation::Eq,
            exact(w.worst_margin),
            exact(0.0),
            0.0,
            Provenance::exact(Method::Exact),
        )
        .with_verdict(if w.worst_margin.abs() <= 1e-12 { Verdict::PassExact } else { Verdict::Fail }),
    );

    let inflated = CdParams::new(params.rho1, params.rho2 * 1.05, params.kappa, params.d)?;
    let c = check_cd(&zpoly, &inflated, &lattice(), &NUS, Convention::Unit)?;
    rows.push(
        cd_row(ctx, "cd-inequality", "z", "ρ₂×1.05 control on the lattice".into(), &c)
            .as_control()
            .with_note("inflated ρ₂; must FAIL"),
    );
    Ok(rows)
}
