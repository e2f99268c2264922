use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Ctx;
use crate::error::Result;
use crate::geometry::{hyperbolic, Geometry};
use crate::verifier::report::{InequalityReport, Method, Provenance, Relation, Verdict};

const POINT_PAIRS: usize = 2000;
const RADIUS: f64 = 2.0;
const T_FRACTIONS: [f64; 3] = [0.25, 0.5, 0.75];
const BIG_TS: [f64; 2] = [1.0, 2.0];
/// Relative slack, as `ln(1 + 1e−9)`.
const LOG_TOL: f64 = 1e-9;

fn random_point(g: Geometry, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let r = RADIUS * rng.random::<f64>().cbrt();
    let cos_th: f64 = rng.random_range(-1.0..1.0);
    let th = cos_th.acos();
    let phi = rng.random_range(0.0..std::f64::consts::TAU);
    match g {
        Geometry::Hyperbolic3 => {
            let [x, _, y] = hyperbolic::point_at(r, th);
            vec![x * phi.cos(), x * phi.sin(), y]
        }
        _ => vec![r * th.sin() * phi.cos(), r * th.sin() * phi.sin(), r * th.cos()],
    }
}

struct Tally {
    tuples: usize,
    violations: usize,
    worst: Option<(f64, f64, String)>,
}

/// Li–Yau with explicit constants:
/// `μ_t(x,y) ≤ μ_T(z,y)(T/t)^D exp(d(x,z)²/(T−t) + DK(T−t)/4)`, `D = 3`,
/// checked in log space over random tuples with `y` the origin.
pub(super) fn harnack_liyau(ctx: &Ctx) -> Result<Vec<InequalityReport>> {
    let g = ctx.g();
    let k = g.ricci_lower_bound().expect("exact-kernel geometries have a Ricci bound");
    let dim = g.dim() as f64;
    let y = g.origin();
    let pairs = ctx.n(POINT_PAIRS);
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let mut pts: Vec<(Vec<f64>, Vec<f64>)> = (0..pairs)
        .map(|_| (random_point(g, &mut rng), random_point(g, &mut rng)))
        .collect();
    // Coincident points.
    for i in 0..pairs.min(50) {
        let x = pts[i].0.clone();
        pts.push((x.clone(), x));
    }
    let mut fractions = T_FRACTIONS.to_vec();
    fractions.push(0.999);

    let run = |d_const: f64| -> Result<Tally> {
        let mut tally = Tally {
            tuples: 0,
            violations: 0,
            worst: None,
        };
        for &big_t in &BIG_TS {
            for &frac in &fractions {
                let t = frac * big_t;
                for (x, z) in &pts {
                    let lhs = g.log_heat_kernel(t, x, &y)?;
                    let dxz = g.distance(x, z)?;
                    let rhs = g.log_heat_kernel(big_t, z, &y)?
                        + d_const * (big_t / t).ln()
                        + dxz * dxz / (big_t - t)
                        + d_const * k * (big_t - t) / 4.0;
                    tally.tuples += 1;
                    let excess = lhs - rhs;
                    if excess > LOG_TOL {
                        tally.violations += 1;
                    }
                    if tally.worst.as_ref().is_none_or(|(l, r, _)| excess > l - r) {
                        tally.worst = Some((lhs, rhs, format!("t={t}, T={big_t}, d(x,z)={dxz:.4}")));
                    }
                }
            }
        }
        Ok(tally)
    };

    let mut rows = Vec::new();
    for (d_const, control) in [(dim, false), (0.0, true)] {
        let tally = run(d_const)?;
        let (lhs, rhs, at) = tally.worst.expect("non-empty grid");
        let verdict = match (tally.violations, control) {
            (0, _) => Verdict::PassExact,
            _ => Verdict::Fail,
        };
        let row = InequalityReport::new(
            "harnack-liyau",
            &ctx.gname(),
            "heat-kernel",
            format!(
                "D={d_const}, K={k}, {} tuples (y=origin, |x|,|z| ≤ {RADIUS}); worst at {at}; {} violations beyond 1e-9 relative",
                tally.tuples, tally.violations
            ),
            Relation::Le,
            lhs,
            rhs,
            0.0,
            0.0,
            ctx.tolerance(),
            Provenance {
                seed: Some(ctx.seed),
                n: tally.tuples,
                dt: None,
                method: Method::Exact,
            },
        )
        .with_verdict(verdict)
        .with_note("log-space comparison: lhs = ln μ_t(x,y), rhs = ln of the right side");
        rows.push(if control {
            row.as_control().with_note("dimension constant set to 0; must FAIL")
        } else {
            row
        });
    }
    Ok(rows)
}
