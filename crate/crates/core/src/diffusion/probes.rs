//! Probability probes for uniform locality and ball exit times.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::{map_paths, simulate, Scheme, SimConfig};
use crate::error::{Error, Result};
use crate::geometry::{Geometry, Point};

/// Binomial proportion with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityEstimate {
    pub value: f64,
    pub stderr: f64,
    pub n: usize,
    /// Set when the event is detected on the discrete skeleton only, which
    /// underestimates exits.
    pub skeleton_only: bool,
}

impl ProbabilityEstimate {
    fn from_count(hits: usize, n: usize, skeleton_only: bool) -> Self {
        let p = hits as f64 / n as f64;
        ProbabilityEstimate {
            value: p,
            stderr: (p * (1.0 - p) / n as f64).sqrt(),
            n,
            skeleton_only,
        }
    }

    fn certain(n: usize) -> Self {
        ProbabilityEstimate {
            value: 1.0,
            stderr: 0.0,
            n,
            skeleton_only: false,
        }
    }
}

/// `P_x(d(x, X_s) ≤ δ)`.
pub fn locality_probe(g: Geometry, x: &Point, delta: f64, s: f64, cfg: &SimConfig) -> Result<ProbabilityEstimate> {
    if !(delta > 0.0) {
        return Err(Error::invalid(format!("delta must be positive, got {delta}")));
    }
    if !(s >= 0.0) {
        return Err(Error::invalid(format!("s must be ≥ 0, got {s}")));
    }
    if s == 0.0 {
        g.validate(x)?;
        return Ok(ProbabilityEstimate::certain(cfg.n_paths));
    }
    let batch = simulate(g, x, s, cfg)?;
    let mut hits = 0;
    for e in batch.endpoints() {
        if g.distance(x, e)? <= delta {
            hits += 1;
        }
    }
    Ok(ProbabilityEstimate::from_count(hits, batch.len(), false))
}

/// `P_x(τ_{B(x,r)} ≤ t)`, detected on the time skeleton. On `ℝⁿ` an exact
/// endpoint config is replaced by a skeleton of `max(1024, t/dt)` steps.
pub fn exit_time_probe(g: Geometry, x: &Point, r: f64, t: f64, cfg: &SimConfig) -> Result<ProbabilityEstimate> {
    if !(r > 0.0) {
        return Err(Error::invalid(format!("radius must be positive, got {r}")));
    }
    let mut cfg = *cfg;
    if cfg.scheme == Scheme::Exact {
        cfg.scheme = Scheme::Euler;
        cfg.dt = cfg.dt.min(t / 1024.0).max(f64::MIN_POSITIVE);
    }
    let exited = map_paths(
        g,
        x,
        t,
        &cfg,
        || false,
        |out: &mut bool, p: &[f64]| {
            // Distances cannot fail here: points come from a valid path.
            if g.distance(x, p).map(|d| d >= r).unwrap_or(true) {
                *out = true;
            }
            !*out
        },
        |out, _| out,
    )?;
    let hits = exited.iter().filter(|&&e| e).count();
    Ok(ProbabilityEstimate::from_count(hits, exited.len(), true))
}

/// `P(sup_{s≤t} |B_s| ≥ r)` for standard Brownian motion on `ℝ¹`, by the
/// reflection-principle series.
pub fn reflection_exit_probability(r: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let phi = Normal::new(0.0, 1.0).expect("standard normal");
    let a = r / t.sqrt();
    // P(stay in (−r, r)) = Σ_k (−1)^k [Φ((2k+1)a) − Φ((2k−1)a)].
    let mut stay = 0.0;
    for k in -50i32..=50 {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let hi = (2 * k + 1) as f64 * a;
        let lo = (2 * k - 1) as f64 * a;
        stay += sign * (phi.cdf(hi) - phi.cdf(lo));
    }
    (1.0 - stay).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_time_locality_is_certain() {
        let g = Geometry::Hyperbolic3;
        let est = locality_probe(g, &g.origin(), 0.1, 0.0, &SimConfig::default_for(g, 1.0, 10, 0)).unwrap();
        assert_eq!(est.value, 1.0);
        assert_eq!(est.stderr, 0.0);
    }

    #[test]
    fn euclidean_locality_matches_gaussian_cdf() {
        let g = Geometry::Euclidean(1);
        let cfg = SimConfig::default_for(g, 0.25, 50_000, 17);
        let est = locality_probe(g, &Point::from([0.3]), 1.0, 0.25, &cfg).unwrap();
        let n = Normal::new(0.0, 1.0).unwrap();
        let exact = 2.0 * n.cdf(2.0) - 1.0;
        assert!((est.value - exact).abs() <= 3.0 * est.stderr, "{} vs {exact}", est.value);
    }

    #[test]
    fn reflection_series_limits() {
        assert_eq!(reflection_exit_probability(1.0, 0.0), 0.0);
        assert!(reflection_exit_probability(1.0, 1e-3) < 1e-12);
        assert!(reflection_exit_probability(1.0, 100.0) > 0.99);
        // Bounded above by twice the one-sided reflection probability, and
        // below by the endpoint probability.
        let n = Normal::new(0.0, 1.0).unwrap();
        let p = reflection_exit_probability(1.0, 0.25);
        assert!(p <= 4.0 * (1.0 - n.cdf(2.0)) + 1e-15);
        assert!(p >= 2.0 * (1.0 - n.cdf(2.0)));
    }

    #[test]
    fn skeleton_exit_is_below_continuous_exit() {
        let g = Geometry::Euclidean(1);
        let cfg = SimConfig::new(0.25 / 256.0, 20_000, 4, Scheme::Euler).unwrap();
        let est = exit_time_probe(g, &Point::from([0.0]), 1.0, 0.25, &cfg).unwrap();
        assert!(est.skeleton_only);
        let exact = reflection_exit_probability(1.0, 0.25);
        assert!(est.value <= exact + 3.0 * est.stderr, "{} vs {exact}", est.value);
        assert!(est.value > 0.5 * exact);
    }

    #[test]
    fn exit_probability_decreases_with_radius() {
        let g = Geometry::Heisenberg;
        let cfg = SimConfig::new(1.0 / 128.0, 2_000, 8, Scheme::Euler).unwrap();
        let mut last = 1.0;
        for r in [0.5, 1.0, 1.5, 2.0] {
            let p = exit_time_probe(g, &g.origin(), r, 0.5, &cfg).unwrap().value;
            assert!(p <= last);
            last = p;
        }
    }
}
