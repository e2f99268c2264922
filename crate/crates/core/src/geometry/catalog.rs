//! Test functions with known harmonic or subharmonic class, and their
//! certification.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{heisenberg, hyperbolic, Geometry, Point};
use crate::error::{Error, Result};
use crate::gamma::{l_op, Convention, ExactPoly};

/// Finite-difference step for chart Laplacians.
pub const FD_STEP: f64 = 1e-4;
/// Relative residual accepted from finite differences.
pub const FD_TOL: f64 = 1e-5;
/// Residual accepted from symbolic evaluation.
pub const SYMBOLIC_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FunctionClass {
    Harmonic,
    Subharmonic,
    Generic,
}

impl fmt::Display for FunctionClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FunctionClass::Harmonic => "harmonic",
            FunctionClass::Subharmonic => "subharmonic",
            FunctionClass::Generic => "generic",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Growth {
    Bounded,
    Polynomial,
    Exponential,
}

impl fmt::Display for Growth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Growth::Bounded => "bounded",
            Growth::Polynomial => "polynomial",
            Growth::Exponential => "exponential",
        })
    }
}

/// A scalar profile `h` in a reduced representation `f = h ∘ s`.
#[derive(Clone)]
pub enum Profile {
    Identity,
    Power(i32),
    /// `e^{rate·s}`
    Exp { rate: f64 },
    /// `1` for `s ≤ radius`, else `0`.
    Indicator { radius: f64 },
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl Profile {
    pub fn eval(&self, s: f64) -> f64 {
        match self {
            Profile::Identity => s,
            Profile::Power(k) => s.powi(*k),
            Profile::Exp { rate } => (rate * s).exp(),
            Profile::Indicator { radius } => {
                if s <= *radius {
                    1.0
                } else {
                    0.0
                }
            }
            Profile::Custom(h) => h(s),
        }
    }

    /// Points where the profile jumps.
    pub fn breaks(&self) -> Vec<f64> {
        match self {
            Profile::Indicator { radius } => vec![*radius],
            _ => Vec::new(),
        }
    }
}

impl fmt::Debug for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Profile::Identity => f.write_str("Identity"),
            Profile::Power(k) => write!(f, "Power({k})"),
            Profile::Exp { rate } => write!(f, "Exp({rate})"),
            Profile::Indicator { radius } => write!(f, "Indicator({radius})"),
            Profile::Custom(_) => f.write_str("Custom"),
        }
    }
}

/// How a test function collapses to a one-dimensional integrand under an
/// exact heat kernel.
#[derive(Debug, Clone)]
pub enum Reduction {
    None,
    /// `f(p) = h(d(center, p))`.
    Radial { center: Point, profile: Profile },
    /// `ℝⁿ`: `f(p) = h(p[axis])`.
    Axis { axis: usize, profile: Profile },
    /// `H³`: `f(p) = h(b(p))` with `b` the log-height towards a boundary
    /// point (`None` is the point at infinity).
    Horospherical {
        boundary: Option<[f64; 2]>,
        profile: Profile,
    },
}

type Evaluator = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct TestFunction {
    pub id: String,
    pub class: FunctionClass,
    pub growth: Growth,
    eval: Evaluator,
    pub reduction: Reduction,
    /// Exact polynomial form in Heisenberg coordinates, when available.
    pub polynomial: Option<ExactPoly>,
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestFunction")
            .field("id", &self.id)
            .field("class", &self.class)
            .field("growth", &self.growth)
            .field("reduction", &self.reduction)
            .finish()
    }
}

impl TestFunction {
    pub fn new(
        id: impl Into<String>,
        class: FunctionClass,
        growth: Growth,
        eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        TestFunction {
            id: id.into(),
            class,
            growth,
            eval: Arc::new(eval),
            reduction: Reduction::None,
            polynomial: None,
        }
    }

    pub fn with_reduction(mut self, reduction: Reduction) -> Self {
        self.reduction = reduction;
        self
    }

    /// A Heisenberg polynomial; evaluation goes through the exact form.
    pub fn from_polynomial(id: impl Into<String>, class: FunctionClass, poly: ExactPoly) -> Self {
        let float = poly.to_f64();
        let growth = if poly.degree().unwrap_or(0) == 0 {
            Growth::Bounded
        } else {
            Growth::Polynomial
        };
        let mut f = TestFunction::new(id, class, growth, move |p| float.eval(p));
        f.polynomial = Some(poly);
        f
    }

    #[inline]
    pub fn eval(&self, p: &[f64]) -> f64 {
        (self.eval)(p)
    }

    pub fn constant(c: f64) -> Self {
        TestFunction::new(format!("const({c})"), FunctionClass::Harmonic, Growth::Bounded, move |_| c)
            .with_reduction(Reduction::Radial {
                center: Point::new(Vec::new()),
                profile: Profile::Custom(Arc::new(move |_| c)),
            })
    }

    /// `ℝⁿ`: `e^{a·x_axis}`.
    pub fn exp_linear(axis: usize, a: f64) -> Self {
        TestFunction::new(format!("exp({a}*x{})", axis + 1), FunctionClass::Generic, Growth::Exponential, move |p| {
            (a * p[axis]).exp()
        })
        .with_reduction(Reduction::Axis {
            axis,
            profile: Profile::Exp { rate: a },
        })
    }

    /// `ℝⁿ`: the coordinate `x_axis`.
    pub fn coordinate(axis: usize) -> Self {
        TestFunction::new(format!("x{}", axis + 1), FunctionClass::Harmonic, Growth::Polynomial, move |p| p[axis])
            .with_reduction(Reduction::Axis {
                axis,
                profile: Profile::Identity,
            })
    }

    /// Indicator of the closed ball `B(center, radius)`.
    pub fn ball_indicator(g: Geometry, center: Point, radius: f64) -> Self {
        let c = center.clone();
        TestFunction::new(
            format!("1[d(.,{center})<={radius}]"),
            FunctionClass::Generic,
            Growth::Bounded,
            move |p| {
                if g.distance(&c, p).map(|d| d <= radius).unwrap_or(false) {
                    1.0
                } else {
                    0.0
                }
            },
        )
        .with_reduction(Reduction::Radial {
            center,
            profile: Profile::Indicator { radius },
        })
    }

    /// `H³`: the Poisson kernel `(y/(|x−ξ|² + y²))²` for the boundary point `ξ`.
    pub fn poisson_kernel(xi: [f64; 2]) -> Self {
        let id = if xi == [0.0, 0.0] {
            "poisson".to_string()
        } else {
            format!("poisson({},{})", xi[0], xi[1])
        };
        TestFunction::new(id, FunctionClass::Harmonic, Growth::Exponential, move |p| {
            (2.0 * hyperbolic::log_height(p, Some(xi))).exp()
        })
        .with_reduction(Reduction::Horospherical {
            boundary: Some(xi),
            profile: Profile::Exp { rate: 2.0 },
        })
    }
}

/// Named test functions for a geometry.
pub fn catalog_functions(g: Geometry) -> Vec<TestFunction> {
    use FunctionClass::*;
    match g {
        Geometry::Euclidean(n) => {
            let mut out: Vec<TestFunction> = (0..n).map(TestFunction::coordinate).collect();
            if n >= 2 {
                out.push(TestFunction::new("x1*x2", Harmonic, Growth::Polynomial, |p| p[0] * p[1]));
                out.push(TestFunction::new("x1^2-x2^2", Harmonic, Growth::Polynomial, |p| {
                    p[0] * p[0] - p[1] * p[1]
                }));
            }
            out.push(
                TestFunction::new("x1^2", Subharmonic, Growth::Polynomial, |p| p[0] * p[0]).with_reduction(
                    Reduction::Axis {
                        axis: 0,
                        profile: Profile::Power(2),
                    },
                ),
            );
            out.push(
                TestFunction::new("|x|^2", Subharmonic, Growth::Polynomial, |p| p.iter().map(|c| c * c).sum())
                    .with_reduction(Reduction::Radial {
                        center: g.origin(),
                        profile: Profile::Power(2),
                    }),
            );
            out
        }
        Geometry::Hyperbolic3 => vec![
            TestFunction::new("x1", Harmonic, Growth::Exponential, |p| p[0]),
            TestFunction::poisson_kernel([0.0, 0.0]),
            // Harmonic measure of the boundary half-plane `ξ₁ < ½`.
            TestFunction::new("halfspace", Harmonic, Growth::Bounded, |p| {
                let u = p[0] - 0.5;
                0.5 * (1.0 - u / u.hypot(p[2]))
            }),
            TestFunction::new("x1^2", Subharmonic, Growth::Exponential, |p| p[0] * p[0]),
        ],
        Geometry::Heisenberg => {
            let x = ExactPoly::x();
            let y = ExactPoly::y();
            let z = ExactPoly::z();
            let xx = &x * &x;
            let yy = &y * &y;
            vec![
                TestFunction::from_polynomial("x", Harmonic, x.clone()),
                TestFunction::from_polynomial("y", Harmonic, y.clone()),
                TestFunction::from_polynomial("z", Harmonic, z),
                TestFunction::from_polynomial("xy", Harmonic, &x * &y),
                TestFunction::from_polynomial("x^2-y^2", Harmonic, &xx - &yy),
                TestFunction::from_polynomial("x^2", Subharmonic, xx.clone()),
                TestFunction::from_polynomial("x^2+y^2", Subharmonic, &xx + &yy),
            ]
        }
    }
}

/// Looks up a catalog function, or one of the parametric families
/// `const(c)`, `exp(a*xk)`, `ball(r)` (about the geometry's origin).
pub fn function_by_id(g: Geometry, id: &str) -> Result<TestFunction> {
    if let Some(f) = catalog_functions(g).into_iter().find(|f| f.id == id) {
        return Ok(f);
    }
    let bad = || Error::Config(format!("unknown function `{id}` for {g}"));
    if let Some(c) = id.strip_prefix("const(").and_then(|s| s.strip_suffix(')')) {
        return Ok(TestFunction::constant(c.parse().map_err(|_| bad())?));
    }
    if let Some(rad) = id.strip_prefix("ball(").and_then(|s| s.strip_suffix(')')) {
        let rad: f64 = rad.parse().map_err(|_| bad())?;
        return Ok(TestFunction::ball_indicator(g, g.origin(), rad));
    }
    if let (Geometry::Euclidean(n), Some(body)) = (g, id.strip_prefix("exp(").and_then(|s| s.strip_suffix(')'))) {
        let (a, var) = body.split_once("*x").ok_or_else(bad)?;
        let a: f64 = a.parse().map_err(|_| bad())?;
        let k: usize = var.parse().map_err(|_| bad())?;
        if k == 0 || k > n {
            return Err(bad());
        }
        return Ok(TestFunction::exp_linear(k - 1, a));
    }
    Err(bad())
}

/// Result of certifying a function's class on a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub class: FunctionClass,
    /// Harmonic: max `|Lf|/max(1, |f|)`. Subharmonic: min `Lf`.
    pub residual: f64,
    pub symbolic: bool,
}

/// `Lf(p)` by second-order central differences of the chart generator.
pub fn generator_fd(g: Geometry, f: &TestFunction, p: &[f64], h: f64) -> f64 {
    let f0 = f.eval(p);
    let second = |q_plus: &[f64], q_minus: &[f64]| (f.eval(q_plus) - 2.0 * f0 + f.eval(q_minus)) / (h * h);
    match g {
        Geometry::Euclidean(n) => {
            let mut lap = 0.0;
            for i in 0..n {
                let mut a = p.to_vec();
                let mut b = p.to_vec();
                a[i] += h;
                b[i] -= h;
                lap += second(&a, &b);
            }
            0.5 * lap
        }
        Geometry::Hyperbolic3 => {
            let mut lap = 0.0;
            for i in 0..3 {
                let mut a = p.to_vec();
                let mut b = p.to_vec();
                a[i] += h;
                b[i] -= h;
                lap += second(&a, &b);
            }
            let mut a = p.to_vec();
            let mut b = p.to_vec();
            a[2] += h;
            b[2] -= h;
            let dy = (f.eval(&a) - f.eval(&b)) / (2.0 * h);
            0.5 * (p[2] * p[2] * lap - p[2] * dy)
        }
        Geometry::Heisenberg => {
            // Y_k² f(p) = d²/ds² f(p·exp(sY_k)).
            let mut lap = 0.0;
            for dir in [[h, 0.0, 0.0], [0.0, h, 0.0]] {
                let a = heisenberg::multiply(p, &dir);
                let b = heisenberg::multiply(p, &heisenberg::inverse(&dir));
                lap += second(&a, &b);
            }
            0.5 * lap
        }
    }
}

/// Certifies the class of `f` on `sample`: exactly for Heisenberg
/// polynomials, by finite differences otherwise.
pub fn verify_harmonicity(g: Geometry, f: &TestFunction, sample: &[Point]) -> Result<Certificate> {
    verify_harmonicity_with_step(g, f, sample, FD_STEP)
}

pub fn verify_harmonicity_with_step(
    g: Geometry,
    f: &TestFunction,
    sample: &[Point],
    h: f64,
) -> Result<Certificate> {
    if sample.is_empty() {
        return Err(Error::invalid("harmonicity check needs a non-empty sample"));
    }
    for p in sample {
        g.validate(p)?;
    }
    let symbolic = g == Geometry::Heisenberg && f.polynomial.is_some();
    let lf: Vec<f64> = if symbolic {
        let lpoly = l_op(f.polynomial.as_ref().expect("checked"), Convention::Half).to_f64();
        sample.iter().map(|p| lpoly.eval(p)).collect()
    } else {
        sample.iter().map(|p| generator_fd(g, f, p, h)).collect()
    };
    let tol = if symbolic { SYMBOLIC_TOL } else { FD_TOL };
    let fail = |residual| Error::Classification {
        function: f.id.clone(),
        class: f.class.to_string(),
        residual,
    };
    match f.class {
        FunctionClass::Harmonic => {
            let residual = sample
                .iter()
                .zip(&lf)
                .map(|(p, l)| l.abs() / f.eval(p).abs().max(1.0))
                .fold(0.0, f64::max);
            if residual > tol {
                return Err(fail(residual));
            }
            Ok(Certificate {
                class: f.class,
                residual,
                symbolic,
            })
        }
        FunctionClass::Subharmonic => {
            let residual = lf.iter().copied().fold(f64::INFINITY, f64::min);
            if residual < -tol {
                return Err(fail(residual));
            }
            Ok(Certificate {
                class: f.class,
                residual,
                symbolic,
            })
        }
        FunctionClass::Generic => Err(Error::invalid(format!(
            "`{}` is generic; there is no class to certify",
            f.id
        ))),
    }
}

/// Lattice sample in a box around the geometry's origin, used to certify
/// catalog functions before a suite relies on them.
pub fn certification_sample(g: Geometry) -> Vec<Point> {
    let vals = [-1.5, -0.5, 0.25, 1.0];
    let mut out = Vec::new();
    match g {
        Geometry::Euclidean(n) => {
            for (i, &a) in vals.iter().enumerate() {
                for &b in &vals {
                    let mut p = vec![0.3 * i as f64 - 0.2; n];
                    p[0] = a;
                    if n > 1 {
                        p[1] = b;
                    }
                    out.push(Point::new(p));
                }
            }
        }
        Geometry::Hyperbolic3 => {
            for &a in &vals {
                for &b in &vals {
                    for &y in &[0.5, 1.0, 2.0] {
                        out.push(Point::new(vec![a, b, y]));
                    }
                }
            }
        }
        Geometry::Heisenberg => {
            for &a in &vals {
                for &b in &vals {
                    for &c in &vals {
                        out.push(Point::new(vec![a, b, c]));
                    }
                }
            }
        }
    }
    out
}
