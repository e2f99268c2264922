//! Model geometries: Euclidean space `ℝⁿ`, hyperbolic 3-space `H³` in the
//! upper half-space chart, and the Heisenberg group `H¹` in exponential
//! coordinates.
//!
//! All heat kernels follow the `½Δ` convention: the Euclidean kernel is
//! `(2πt)^{−n/2} e^{−d²/2t}` and closed forms written for `∂ₜ = Δ` are
//! evaluated at `t/2`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gamma::CdParams;

pub mod catalog;
pub mod heisenberg;
pub mod hyperbolic;
pub mod radial;

pub use catalog::{
    catalog_functions, function_by_id, verify_harmonicity, Certificate, FunctionClass, Growth, Profile,
    Reduction, TestFunction,
};
pub use radial::{radial_cdf, radial_quadrature};

/// A point in the geometry's chart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        Point(coords)
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Deref for Point {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for Point {
    fn from(v: Vec<f64>) -> Self {
        Point(v)
    }
}

impl<const N: usize> From<[f64; N]> for Point {
    fn from(v: [f64; N]) -> Self {
        Point(v.to_vec())
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|c| format!("{c}")).collect();
        write!(f, "({})", parts.join(","))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Geometry {
    Euclidean(usize),
    Hyperbolic3,
    Heisenberg,
}

impl Geometry {
    /// Number of chart coordinates.
    pub fn dim(self) -> usize {
        match self {
            Geometry::Euclidean(n) => n,
            Geometry::Hyperbolic3 | Geometry::Heisenberg => 3,
        }
    }

    /// Number of driving Brownian motions.
    pub fn noise_dim(self) -> usize {
        match self {
            Geometry::Euclidean(n) => n,
            Geometry::Hyperbolic3 => 3,
            Geometry::Heisenberg => 2,
        }
    }

    /// `K` in `Ric ≥ −K`, for the Riemannian geometries.
    pub fn ricci_lower_bound(self) -> Option<f64> {
        match self {
            Geometry::Euclidean(_) => Some(0.0),
            Geometry::Hyperbolic3 => Some(2.0),
            Geometry::Heisenberg => None,
        }
    }

    /// Generalized curvature-dimension parameters, for the sub-Riemannian geometry.
    pub fn cd_params(self) -> Option<CdParams> {
        match self {
            Geometry::Heisenberg => Some(CdParams::HEISENBERG),
            _ => None,
        }
    }

    pub fn has_exact_kernel(self) -> bool {
        !matches!(self, Geometry::Heisenberg)
    }

    pub fn origin(self) -> Point {
        match self {
            Geometry::Hyperbolic3 => Point::new(vec![0.0, 0.0, 1.0]),
            g => Point::new(vec![0.0; g.dim()]),
        }
    }

    pub fn validate(self, p: &[f64]) -> Result<()> {
        if p.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: p.len(),
            });
        }
        if p.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid(format!("non-finite coordinate in point for {self}")));
        }
        if self == Geometry::Hyperbolic3 && p[2] <= 0.0 {
            return Err(Error::invalid(format!(
                "hyperbolic3 point needs y > 0, got y = {}",
                p[2]
            )));
        }
        Ok(())
    }

    /// Image of `w` under the isometry that carries the origin to `base`
    /// (translation on `ℝⁿ`, `q ↦ (b₁ + b₃q₁, b₂ + b₃q₂, b₃q₃)` on `H³`, left
    /// multiplication on the Heisenberg group). The diffusion law commutes
    /// with it, so a batch from the origin serves every start point.
    pub fn translate(self, base: &[f64], w: &[f64]) -> Vec<f64> {
        match self {
            Geometry::Euclidean(_) => base.iter().zip(w).map(|(b, x)| b + x).collect(),
            Geometry::Hyperbolic3 => vec![base[0] + base[2] * w[0], base[1] + base[2] * w[1], base[2] * w[2]],
            Geometry::Heisenberg => heisenberg::multiply(base, w).to_vec(),
        }
    }

    /// Riemannian distance, or the Carnot–Carathéodory distance on the Heisenberg group.
    pub fn distance(self, a: &[f64], b: &[f64]) -> Result<f64> {
        self.validate(a)?;
        self.validate(b)?;
        Ok(match self {
            Geometry::Euclidean(_) => euclidean_distance(a, b),
            Geometry::Hyperbolic3 => hyperbolic::distance(a, b),
            Geometry::Heisenberg => heisenberg::distance(a, b)?,
        })
    }

    /// `ln μ_t(a, b)` against the Riemannian volume.
    pub fn log_heat_kernel(self, t: f64, a: &[f64], b: &[f64]) -> Result<f64> {
        let r = self.distance(a, b)?;
        self.log_radial_kernel(t, r)
    }

    /// Heat kernel density `μ_t(a, b)` for generator `½Δ`.
    pub fn heat_kernel_density(self, t: f64, a: &[f64], b: &[f64]) -> Result<f64> {
        Ok(self.log_heat_kernel(t, a, b)?.exp())
    }

    /// `ln μ_t` as a function of the distance `r`.
    pub fn log_radial_kernel(self, t: f64, r: f64) -> Result<f64> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::invalid(format!("heat kernel needs t > 0, got {t}")));
        }
        if !(r >= 0.0) {
            return Err(Error::invalid(format!("distance must be non-negative, got {r}")));
        }
        match self {
            Geometry::Euclidean(n) => {
                Ok(-(n as f64) / 2.0 * (2.0 * std::f64::consts::PI * t).ln() - r * r / (2.0 * t))
            }
            Geometry::Hyperbolic3 => Ok(hyperbolic::log_heat_kernel(t, r)),
            Geometry::Heisenberg => Err(Error::UnsupportedOracle(self.to_string())),
        }
    }

    /// `ln A(r)`, the log of the area of the geodesic sphere of radius `r`.
    pub fn log_sphere_area(self, r: f64) -> Result<f64> {
        match self {
            Geometry::Euclidean(n) => {
                let n = n as f64;
                if n == 1.0 {
                    return Ok(std::f64::consts::LN_2);
                }
                Ok(std::f64::consts::LN_2 + n / 2.0 * std::f64::consts::PI.ln()
                    - ln_gamma_half(n as usize)
                    + (n - 1.0) * r.ln())
            }
            Geometry::Hyperbolic3 => {
                Ok((4.0 * std::f64::consts::PI).ln() + 2.0 * hyperbolic::ln_sinh(r))
            }
            Geometry::Heisenberg => Err(Error::UnsupportedOracle(self.to_string())),
        }
    }
}

fn euclidean_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// `ln Γ(n/2)` for a positive integer `n`.
pub(crate) fn ln_gamma_half(n: usize) -> f64 {
    assert!(n > 0);
    let (mut acc, mut x) = if n.is_multiple_of(2) {
        (0.0, 1.0)
    } else {
        (0.5 * std::f64::consts::PI.ln(), 0.5)
    };
    while x < n as f64 / 2.0 {
        acc += x.ln();
        x += 1.0;
    }
    acc
}

impl fmt::Display for Geometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Geometry::Euclidean(n) => write!(f, "euclidean:{n}"),
            Geometry::Hyperbolic3 => f.write_str("hyperbolic3"),
            Geometry::Heisenberg => f.write_str("heisenberg"),
        }
    }
}

impl FromStr for Geometry {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hyperbolic3" => Ok(Geometry::Hyperbolic3),
            "heisenberg" => Ok(Geometry::Heisenberg),
            _ => {
                let n = s
                    .strip_prefix("euclidean:")
                    .and_then(|n| n.parse::<usize>().ok())
                    .filter(|&n| n >= 1)
                    .ok_or_else(|| {
                        Error::Config(format!(
                            "unknown geometry `{s}` (expected euclidean:N, hyperbolic3 or heisenberg)"
                        ))
                    })?;
                Ok(Geometry::Euclidean(n))
            }
        }
    }
}

impl TryFrom<String> for Geometry {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Geometry> for String {
    fn from(g: Geometry) -> String {
        g.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::{E, PI};

    #[test]
    fn geometry_ids_round_trip() {
        for g in [Geometry::Euclidean(1), Geometry::Euclidean(7), Geometry::Hyperbolic3, Geometry::Heisenberg] {
            assert_eq!(g.to_string().parse::<Geometry>().unwrap(), g);
        }
        assert!("euclidean:0".parse::<Geometry>().is_err());
        assert!("sphere".parse::<Geometry>().is_err());
    }

    #[test]
    fn hyperbolic_distance_along_vertical() {
        let d = Geometry::Hyperbolic3.distance(&[0.0, 0.0, 1.0], &[0.0, 0.0, E]).unwrap();
        assert_relative_eq!(d, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn translate_is_an_isometry_sending_origin_to_base() {
        let cases: [(Geometry, [f64; 3], [f64; 3], [f64; 3]); 2] = [
            (Geometry::Hyperbolic3, [0.5, -1.0, 2.0], [0.1, 0.2, 0.7], [-0.3, 1.1, 1.9]),
            (Geometry::Heisenberg, [0.5, -1.0, 2.0], [0.1, 0.2, 0.7], [-0.3, 1.1, 1.9]),
        ];
        for (g, base, a, b) in cases {
            assert_eq!(g.translate(&base, &g.origin()), base.to_vec());
            let d0 = g.distance(&a, &b).unwrap();
            let d1 = g.distance(&g.translate(&base, &a), &g.translate(&base, &b)).unwrap();
            assert_relative_eq!(d0, d1, epsilon = 1e-12);
        }
        assert_eq!(Geometry::Euclidean(2).translate(&[1.0, 2.0], &[0.5, 0.5]), vec![1.5, 2.5]);
    }

    #[test]
    fn invalid_points_are_rejected() {
        assert!(Geometry::Hyperbolic3.distance(&[0.0, 0.0, 0.0], &[0.0, 0.0, 1.0]).is_err());
        assert!(Geometry::Euclidean(2).distance(&[0.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn kernel_peaks() {
        let v = Geometry::Euclidean(1).heat_kernel_density(1.0, &[0.0], &[0.0]).unwrap();
        assert_relative_eq!(v, 0.398_942_280_401_432_7, epsilon = 1e-15);
        let v = Geometry::Hyperbolic3
            .heat_kernel_density(1.0, &[0.0, 0.0, 1.0], &[0.0, 0.0, 1.0])
            .unwrap();
        assert_relative_eq!(v, (2.0 * PI).powf(-1.5) * (-0.5f64).exp(), epsilon = 1e-15);
        assert!((v - 0.03851).abs() < 1e-5);
    }

    #[test]
    fn kernel_errors() {
        assert!(matches!(
            Geometry::Heisenberg.heat_kernel_density(1.0, &[0.0; 3], &[0.0; 3]),
            Err(Error::UnsupportedOracle(_))
        ));
        assert!(matches!(
            Geometry::Euclidean(1).heat_kernel_density(0.0, &[0.0], &[0.0]),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn kernels_are_symmetric() {
        let a = [0.3, -0.2, 0.7];
        let b = [1.1, 0.4, 2.5];
        for g in [Geometry::Euclidean(3), Geometry::Hyperbolic3] {
            let ab = g.heat_kernel_density(0.7, &a, &b).unwrap();
            let ba = g.heat_kernel_density(0.7, &b, &a).unwrap();
            assert_eq!(ab, ba);
        }
    }

    #[test]
    fn gamma_half_values() {
        assert_relative_eq!(ln_gamma_half(1).exp(), PI.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(ln_gamma_half(2).exp(), 1.0, epsilon = 1e-15);
        assert_relative_eq!(ln_gamma_half(5).exp(), 0.75 * PI.sqrt(), epsilon = 1e-14);
        assert_relative_eq!(ln_gamma_half(6).exp(), 2.0, epsilon = 1e-14);
    }
}
