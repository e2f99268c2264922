//! Deterministic integrals against the exact heat kernels of `ℝⁿ` and `H³`.
//!
//! Everything reduces to one-dimensional integrals in geodesic polar
//! coordinates: `∫ f(d(o,y)) μ_t(o,y) dV(y) = ∫₀^∞ f(r) μ_t(r) A(r) dr`, plus
//! sphere averages for integrands that are radial about another point.

use std::f64::consts::PI;

use super::{hyperbolic, ln_gamma_half, Geometry};
use crate::error::{Error, Result};
use crate::quadrature::{integrate, integrate_to_infinity, integrate_with_breaks, Quadrature, Tolerance};

/// Tolerance for the inner (sphere-average) integrals.
const INNER_TOL: Tolerance = Tolerance::new(1e-300, 1e-12);

fn check_exact(g: Geometry) -> Result<()> {
    if g.has_exact_kernel() {
        Ok(())
    } else {
        Err(Error::UnsupportedOracle(g.to_string()))
    }
}

/// `∫₀^∞ f(r) μ_t(r) A(r) dr`: the expectation of `f(d(o, X_t))`.
pub fn radial_quadrature<F: Fn(f64) -> f64>(g: Geometry, integrand: F, t: f64) -> Result<f64> {
    Ok(radial_quadrature_with(g, integrand, t, &[], Tolerance::fine())?.value)
}

/// As [`radial_quadrature`], with known discontinuities of `f` and an explicit tolerance.
pub fn radial_quadrature_with<F: Fn(f64) -> f64>(
    g: Geometry,
    integrand: F,
    t: f64,
    breaks: &[f64],
    tol: Tolerance,
) -> Result<Quadrature> {
    check_exact(g)?;
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::invalid(format!("radial quadrature needs t > 0, got {t}")));
    }
    let weight = |r: f64| -> f64 {
        if r == 0.0 && g != Geometry::Euclidean(1) {
            return 0.0;
        }
        let lk = g.log_radial_kernel(t, r).unwrap_or(f64::NEG_INFINITY);
        let la = g.log_sphere_area(r).unwrap_or(f64::NEG_INFINITY);
        (lk + la).exp()
    };
    let width = t.sqrt() * ((g.dim() as f64).sqrt() + 9.0)
        + if g == Geometry::Hyperbolic3 { 2.0 * t } else { 0.0 };
    integrate_to_infinity(
        |r| {
            let w = weight(r);
            if w == 0.0 {
                0.0
            } else {
                integrand(r) * w
            }
        },
        0.0,
        width,
        breaks,
        tol,
    )
}

/// `P(d(o, X_t) ≤ r)` at each of the increasing radii `rs`, by cumulative
/// quadrature of `μ_t(r)A(r)` between consecutive radii.
pub fn radial_cdf(g: Geometry, t: f64, rs: &[f64]) -> Result<Vec<f64>> {
    check_exact(g)?;
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::invalid(format!("radial cdf needs t > 0, got {t}")));
    }
    if rs.windows(2).any(|w| !(w[0] <= w[1])) || rs.first().is_some_and(|&r| !(r >= 0.0)) {
        return Err(Error::invalid("radii must be non-negative and increasing"));
    }
    let density = |r: f64| -> f64 {
        if r == 0.0 && g != Geometry::Euclidean(1) {
            return 0.0;
        }
        let lk = g.log_radial_kernel(t, r).unwrap_or(f64::NEG_INFINITY);
        let la = g.log_sphere_area(r).unwrap_or(f64::NEG_INFINITY);
        (lk + la).exp()
    };
    let tol = Tolerance::new(1e-15, 1e-12);
    let mut acc = 0.0;
    let mut prev = 0.0;
    let mut out = Vec::with_capacity(rs.len());
    for &r in rs {
        if r > prev {
            acc += integrate(density, prev, r, tol)?.value;
        }
        prev = r;
        out.push(acc.min(1.0));
    }
    Ok(out)
}

/// Mean of `h(d(c, ·))` over the geodesic sphere `S(x, r)`, where `ρ = d(x, c)`.
///
/// `breaks` lists distances at which `h` jumps or kinks.
pub fn sphere_mean_of_distance<H: Fn(f64) -> f64>(
    g: Geometry,
    rho: f64,
    r: f64,
    h: H,
    breaks: &[f64],
) -> Result<f64> {
    check_exact(g)?;
    if rho == 0.0 {
        return Ok(h(r));
    }
    if r == 0.0 {
        return Ok(h(rho));
    }
    let lo = (rho - r).abs();
    let hi = rho + r;
    let mut pts = vec![lo];
    pts.extend(breaks.iter().copied().filter(|&b| b > lo && b < hi));
    pts.push(hi);
    match g {
        Geometry::Euclidean(1) => Ok(0.5 * (h(rho + r) + h((rho - r).abs()))),
        Geometry::Euclidean(3) => {
            // u = cos θ is uniform; d dd = −ρ r du.
            let q = integrate_with_breaks(|d| h(d) * d, &pts, INNER_TOL)?;
            Ok(q.value / (2.0 * rho * r))
        }
        Geometry::Euclidean(n) => {
            // Weight sin^{n−2} θ on [0, π], normalized.
            let k = (n - 2) as i32;
            let norm = PI.sqrt() * (ln_gamma_half(n - 1) - ln_gamma_half(n)).exp();
            let mut tpts = vec![0.0];
            for &b in breaks {
                let c = (rho * rho + r * r - b * b) / (2.0 * rho * r);
                if c > -1.0 && c < 1.0 {
                    tpts.push(c.acos());
                }
            }
            tpts.push(PI);
            tpts.sort_by(f64::total_cmp);
            let q = integrate_with_breaks(
                |th: f64| {
                    let d2 = (rho * rho + r * r - 2.0 * rho * r * th.cos()).max(0.0);
                    h(d2.sqrt()) * th.sin().powi(k)
                },
                &tpts,
                INNER_TOL,
            )?;
            Ok(q.value / norm)
        }
        Geometry::Hyperbolic3 => {
            // cosh d = cosh ρ cosh r − sinh ρ sinh r cos θ.
            let ls = hyperbolic::ln_sinh(rho) + hyperbolic::ln_sinh(r) + std::f64::consts::LN_2;
            let q = integrate_with_breaks(
                |d| h(d) * (hyperbolic::ln_sinh(d) - ls).exp(),
                &pts,
                INNER_TOL,
            )?;
            Ok(q.value)
        }
        Geometry::Heisenberg => unreachable!(),
    }
}

/// `H³`: mean over `S(o, r)` of `h(b(·) − b(o))`, where `b` is a Busemann-type
/// log-height. The increment `v` has density `e^{−v}/(2 sinh r)` on `[−r, r]`.
pub fn sphere_mean_of_height<H: Fn(f64) -> f64>(r: f64, h: H) -> Result<f64> {
    if r == 0.0 {
        return Ok(h(0.0));
    }
    let ls = hyperbolic::ln_sinh(r) + std::f64::consts::LN_2;
    let q = integrate(|v| h(v) * (-v - ls).exp(), -r, r, INNER_TOL)?;
    Ok(q.value)
}
