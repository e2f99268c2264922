//! Hyperbolic 3-space in the upper half-space chart `(x₁, x₂, y)`, `y > 0`,
//! with metric `(dx₁² + dx₂² + dy²)/y²` and sectional curvature −1.

use std::f64::consts::{LN_2, PI};

/// `d = 2 asinh(√(Δ²/4yy′))`, equivalent to `arccosh(1 + Δ²/2yy′)` but
/// accurate for nearby points.
pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    let dx1 = a[0] - b[0];
    let dx2 = a[1] - b[1];
    let dy = a[2] - b[2];
    let sq = dx1 * dx1 + dx2 * dx2 + dy * dy;
    2.0 * (sq / (4.0 * a[2] * b[2])).sqrt().asinh()
}

/// `ln sinh r` without overflow for large `r`.
pub fn ln_sinh(r: f64) -> f64 {
    if r < 1.0 {
        r.sinh().ln()
    } else {
        r + (-(-2.0 * r).exp()).ln_1p() - LN_2
    }
}

/// `ln(r / sinh r)`, with the removable singularity at zero.
pub fn ln_r_over_sinh(r: f64) -> f64 {
    if r < 1e-4 {
        -r * r / 6.0
    } else {
        r.ln() - ln_sinh(r)
    }
}

/// `ln μ_t(r) = −(3/2) ln(2πt) + ln(r/sinh r) − t/2 − r²/2t`.
///
/// The closed form for `∂ₜ = Δ` is `(4πt)^{−3/2} (r/sinh r) e^{−t − r²/4t}`;
/// this is that kernel at time `t/2`.
pub fn log_heat_kernel(t: f64, r: f64) -> f64 {
    -1.5 * (2.0 * PI * t).ln() + ln_r_over_sinh(r) - t / 2.0 - r * r / (2.0 * t)
}

/// `ln(y / (|x − ξ|² + y²))`: a Busemann-type height towards the boundary
/// point `ξ`, or `ln y` for the point at infinity.
pub fn log_height(p: &[f64], boundary: Option<[f64; 2]>) -> f64 {
    match boundary {
        None => p[2].ln(),
        Some(xi) => {
            let dx1 = p[0] - xi[0];
            let dx2 = p[1] - xi[1];
            p[2].ln() - (dx1 * dx1 + dx2 * dx2 + p[2] * p[2]).ln()
        }
    }
}

/// Point at distance `r` from `(0, 0, 1)` along the geodesic leaving at
/// angle `θ` from the upward vertical, inside the `x₁y`-plane.
pub fn point_at(r: f64, theta: f64) -> [f64; 3] {
    // Vertical geodesic through (0,0,1), rotated about (0,0,1) by the inversion-free formula.
    let denom = r.cosh() - r.sinh() * theta.cos();
    let y = 1.0 / denom;
    let x = r.sinh() * theta.sin() / denom;
    [x, 0.0, y]
}
