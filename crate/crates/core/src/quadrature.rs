//! Adaptive Gauss–Kronrod (7/15) quadrature.
//!
//! Used for all deterministic integrals against exact heat kernels. Intervals
//! are bisected in order of largest error estimate until the summed estimate
//! drops below `max(abs_tol, rel_tol·|I|)`.

#![allow(clippy::excessive_precision)]

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

const MAX_INTERVALS: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Tolerance {
    pub const fn new(abs: f64, rel: f64) -> Self {
        Tolerance { abs, rel }
    }

    /// Defaults used for kernel integrals: `1e−13` absolute, `1e−12` relative.
    pub const fn fine() -> Self {
        Tolerance::new(1e-13, 1e-12)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let s = f(center - dx) + f(center + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    let value = kron * half;
    let error = ((kron - gauss) * half).abs();
    Segment { a, b, value, error }
}

/// `∫_a^b f` over a finite interval.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<Quadrature> {
    integrate_with_breaks(f, &[a, b], tol)
}

/// `∫ f` over `[points[0], points[last]]`, with the interior points as known
/// kinks or discontinuities of the integrand.
pub fn integrate_with_breaks<F: Fn(f64) -> f64>(
    f: F,
    points: &[f64],
    tol: Tolerance,
) -> Result<Quadrature> {
    if points.len() < 2 {
        return Err(Error::invalid("quadrature needs at least two endpoints"));
    }
    if points.iter().any(|p| !p.is_finite()) {
        return Err(Error::invalid("quadrature endpoints must be finite"));
    }
    let mut heap = BinaryHeap::new();
    for w in points.windows(2) {
        if w[1] > w[0] {
            heap.push(kronrod(&f, w[0], w[1]));
        }
    }
    let mut evaluations = 15 * heap.len();
    loop {
        let (value, error) = heap
            .iter()
            .fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.error));
        if !value.is_finite() {
            return Err(Error::numeric("integrand produced a non-finite value", error));
        }
        let target = tol.abs.max(tol.rel * value.abs());
        if error <= target {
            return Ok(Quadrature {
                value,
                error,
                evaluations,
            });
        }
        let worst = match heap.pop() {
            Some(s) => s,
            None => {
                return Ok(Quadrature {
                    value: 0.0,
                    error: 0.0,
                    evaluations,
                })
            }
        };
        let mid = 0.5 * (worst.a + worst.b);
        // Interval exhausted in double precision: the remaining error is roundoff.
        if heap.len() >= MAX_INTERVALS || !(mid > worst.a && mid < worst.b) {
            heap.push(worst);
            let (value, error) = heap
                .iter()
                .fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.error));
            if error <= 1e3 * target {
                return Ok(Quadrature {
                    value,
                    error,
                    evaluations,
                });
            }
            return Err(Error::numeric(
                format!("adaptive quadrature did not reach tolerance {target:e}"),
                error,
            ));
        }
        heap.push(kronrod(&f, worst.a, mid));
        heap.push(kronrod(&f, mid, worst.b));
        evaluations += 30;
    }
}

/// `∫_a^∞ f` for an integrand with Gaussian-type decay.
///
/// Integrates `[a, a + w]`, then doubling windows, until a window contributes
/// less than `1e−3·tol` relative to the running total (and at most 1e−300).
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    initial_width: f64,
    breaks: &[f64],
    tol: Tolerance,
) -> Result<Quadrature> {
    if !(initial_width > 0.0) {
        return Err(Error::invalid("initial window width must be positive"));
    }
    let mut lo = a;
    let mut width = initial_width;
    let mut total = Quadrature {
        value: 0.0,
        error: 0.0,
        evaluations: 0,
    };
    for _ in 0..64 {
        let hi = lo + width;
        let mut pts = vec![lo];
        pts.extend(breaks.iter().copied().filter(|&b| b > lo && b < hi));
        pts.push(hi);
        let piece = integrate_with_breaks(&f, &pts, tol)?;
        total.value += piece.value;
        total.error += piece.error;
        total.evaluations += piece.evaluations;
        let negligible = piece.value.abs() <= 1e-3 * tol.rel * total.value.abs()
            || piece.value.abs() <= 1e-300;
        if negligible && lo > a {
            return Ok(total);
        }
        lo = hi;
        width *= 2.0;
    }
    Err(Error::numeric("tail of the integral never became negligible", total.error))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomial_is_exact() {
        let q = integrate(|x| x.powi(5) - 3.0 * x * x, -1.0, 2.0, Tolerance::fine()).unwrap();
        let exact = (64.0 - 1.0) / 6.0 - (8.0 + 1.0);
        assert!((q.value - exact).abs() < 1e-13);
    }

    #[test]
    fn gaussian_to_infinity() {
        let q = integrate_to_infinity(|x| (-x * x / 2.0).exp(), 0.0, 1.0, &[], Tolerance::fine())
            .unwrap();
        assert!((q.value - (PI / 2.0).sqrt()).abs() < 1e-13);
    }

    #[test]
    fn breakpoint_handles_a_jump() {
        let q = integrate_with_breaks(
            |x| if x < 0.3 { 1.0 } else { 0.0 },
            &[0.0, 0.3, 1.0],
            Tolerance::fine(),
        )
        .unwrap();
        assert!((q.value - 0.3).abs() < 1e-15);
        // Without the breakpoint the bisection still converges, more slowly.
        let q = integrate(|x| if x < 0.3 { 1.0 } else { 0.0 }, 0.0, 1.0, Tolerance::new(1e-10, 0.0))
            .unwrap();
        assert!((q.value - 0.3).abs() < 1e-9);
    }

    #[test]
    fn non_finite_integrand_is_an_error() {
        assert!(integrate(|x| 1.0 / x, -1.0, 1.0, Tolerance::fine()).is_err());
    }
}
