//! The Heisenberg group in exponential coordinates `(x, y, z)` with product
//! `(x,y,z)·(x′,y′,z′) = (x+x′, y+y′, z+z′+½(xy′−yx′))` and horizontal frame
//! `Y₁ = ∂x − (y/2)∂z`, `Y₂ = ∂y + (x/2)∂z`.
//!
//! The Carnot–Carathéodory distance from the identity to `(x, y, z)` with
//! `r = |(x, y)| > 0` and `z ≠ 0` is attained by a circular arc whose chord is
//! `(x, y)` and which encloses signed area `z`. Writing `2φ` for the angle the
//! arc subtends, `|z|/r² = (2φ − sin 2φ)/(8 sin²φ)` and `d = rφ/sin φ`. The
//! left side is increasing in `φ ∈ (0, π)`, so one root solve suffices.

use std::f64::consts::PI;

use crate::error::{Error, Result};

pub type Element = [f64; 3];

pub const IDENTITY: Element = [0.0, 0.0, 0.0];

pub fn multiply(a: &[f64], b: &[f64]) -> Element {
    [
        a[0] + b[0],
        a[1] + b[1],
        a[2] + b[2] + 0.5 * (a[0] * b[1] - a[1] * b[0]),
    ]
}

pub fn inverse(a: &[f64]) -> Element {
    [-a[0], -a[1], -a[2]]
}

/// Anisotropic dilation `δ_λ(x, y, z) = (λx, λy, λ²z)`.
pub fn dilate(lambda: f64, a: &[f64]) -> Element {
    [lambda * a[0], lambda * a[1], lambda * lambda * a[2]]
}

/// `d_H(a, b) = ‖a⁻¹b‖`.
pub fn distance(a: &[f64], b: &[f64]) -> Result<f64> {
    norm(&multiply(&inverse(a), b))
}

/// `2φ − sin 2φ`, by series for small `φ` to avoid cancellation.
fn area_numerator(phi: f64) -> f64 {
    if phi < 0.2 {
        let u = 2.0 * phi;
        let u2 = u * u;
        // u³/3! − u⁵/5! + u⁷/7! − ...
        let mut term = u * u2 / 6.0;
        let mut sum = term;
        let mut k = 3.0;
        for _ in 0..10 {
            term *= -u2 / ((2.0 * k - 2.0) * (2.0 * k - 1.0));
            sum += term;
            k += 1.0;
        }
        sum
    } else {
        2.0 * phi - (2.0 * phi).sin()
    }
}

/// `μ(φ) = (2φ − sin 2φ)/(8 sin²φ)`.
fn area_ratio(phi: f64) -> f64 {
    let s = phi.sin();
    area_numerator(phi) / (8.0 * s * s)
}

fn area_ratio_derivative(phi: f64) -> f64 {
    let s = phi.sin();
    0.5 - area_numerator(phi) * phi.cos() / (4.0 * s * s * s)
}

/// Carnot–Carathéodory norm `d_H(0, g)`.
pub fn norm(g: &[f64]) -> Result<f64> {
    let r = g[0].hypot(g[1]);
    let w = g[2].abs();
    if w == 0.0 {
        return Ok(r);
    }
    if r == 0.0 {
        return Ok((4.0 * PI * w).sqrt());
    }
    let target = w / (r * r);
    let phi = solve_arc_angle(target)?;
    if phi < PI / 2.0 {
        Ok(r * phi / phi.sin())
    } else {
        // Equivalent form that avoids dividing by a small sin φ.
        Ok(phi * (8.0 * w / area_numerator(phi)).sqrt())
    }
}

/// Solves `μ(φ) = target` on `(0, π)` by Newton's method inside a shrinking
/// bracket, falling back to bisection whenever a Newton step leaves it.
fn solve_arc_angle(target: f64) -> Result<f64> {
    if !target.is_finite() {
        return Err(Error::numeric("arc-angle target is not finite", f64::INFINITY));
    }
    let mut lo = 0.0;
    let mut hi = PI;
    // μ(φ) ≈ φ/6 near 0 and ≈ π/(4(π−φ)²) near π.
    let mut phi = if target < 0.5 {
        (6.0 * target).min(PI / 2.0)
    } else {
        (PI - (PI / (4.0 * target)).sqrt()).max(PI / 2.0)
    };
    for _ in 0..200 {
        let f = area_ratio(phi) - target;
        if f == 0.0 {
            return Ok(phi);
        }
        if f > 0.0 {
            hi = phi;
        } else {
            lo = phi;
        }
        let df = area_ratio_derivative(phi);
        let mut next = phi - f / df;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - phi).abs() <= 4.0 * f64::EPSILON * phi.max(1e-300) || hi - lo <= f64::EPSILON * hi {
            phi = next;
            break;
        }
        phi = next;
    }
    let residual = (area_ratio(phi) - target).abs() / target;
    // Near π the angle itself is only resolved to a few ulps.
    let attainable = area_ratio_derivative(phi).abs() * 8.0 * f64::EPSILON * PI / target;
    if residual > 1e-9f64.max(attainable) {
        return Err(Error::numeric(
            format!("geodesic root finder did not converge for |z|/r² = {target:e}"),
            residual,
        ));
    }
    Ok(phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn group_law_examples() {
        let a = [0.3, -1.2, 0.8];
        assert_eq!(multiply(&a, &inverse(&a)), IDENTITY);
        assert_eq!(multiply(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]), [1.0, 1.0, 0.5]);
        assert_eq!(dilate(2.0, &a), [0.6, -2.4, 3.2]);
    }

    #[test]
    fn horizontal_plane_distance_is_euclidean() {
        assert_relative_eq!(norm(&[3.0, 4.0, 0.0]).unwrap(), 5.0);
        assert_relative_eq!(distance(&[1.0, 1.0, 0.0], &[1.0, 1.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn vertical_axis_distance() {
        assert_relative_eq!(norm(&[0.0, 0.0, 1.0]).unwrap(), (4.0 * PI).sqrt(), epsilon = 1e-14);
        // Continuity as the chord shrinks.
        let near = norm(&[1e-7, 0.0, 1.0]).unwrap();
        assert_relative_eq!(near, (4.0 * PI).sqrt(), epsilon = 1e-6);
    }

    #[test]
    fn semicircle_case() {
        // φ = π/2: chord r, radius r/2, area π r²/8, length π r/2.
        let r = 2.0;
        let z = PI * r * r / 8.0;
        assert_relative_eq!(norm(&[r, 0.0, z]).unwrap(), PI * r / 2.0, epsilon = 1e-13);
    }

    #[test]
    fn continuity_as_z_vanishes() {
        let d = norm(&[1.0, 0.0, 1e-12]).unwrap();
        assert_relative_eq!(d, 1.0, epsilon = 1e-11);
    }

    #[test]
    fn dilation_homogeneity() {
        for g in [[0.3, -0.5, 0.9], [1.0, 2.0, -3.0], [0.0, 0.1, 4.0]] {
            let d = norm(&g).unwrap();
            let d2 = norm(&dilate(2.0, &g)).unwrap();
            assert_relative_eq!(d2, 2.0 * d, max_relative = 1e-12);
        }
    }

    #[test]
    fn area_ratio_series_matches_direct_form() {
        let phi: f64 = 0.2;
        let direct = 2.0 * phi - (2.0 * phi).sin();
        assert_relative_eq!(area_numerator(phi - 1e-15), direct, max_relative = 1e-12);
    }
}
