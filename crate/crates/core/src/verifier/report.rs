//! Report rows and the verdict policy shared by every suite.

use serde::{Deserialize, Serialize};

/// Relative slack for claims checked with exact arithmetic or quadrature.
pub const EXACT_REL_TOL: f64 = 1e-9;
/// Absolute slack added to the 3σ band of statistical claims.
pub const STAT_ABS_TOL: f64 = 1e-9;
/// Width of the statistical band, in combined standard errors.
pub const SIGMA_BAND: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING-KEBAB-CASE")]
pub enum Verdict {
    Pass,
    PassExact,
    Inconclusive,
    Fail,
}

impl Verdict {
    pub fn is_fail(self) -> bool {
        self == Verdict::Fail
    }

    pub fn is_pass(self) -> bool {
        matches!(self, Verdict::Pass | Verdict::PassExact)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::PassExact => "PASS-exact",
            Verdict::Inconclusive => "INCONCLUSIVE",
            Verdict::Fail => "FAIL",
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which way the claimed inequality points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    /// lhs ≤ rhs
    Le,
    /// lhs ≥ rhs
    Ge,
    /// lhs = rhs
    Eq,
}

/// Whether a row states the claim itself or a deliberately broken control.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Expectation {
    Holds,
    /// A perturbed claim that must FAIL; a pass means the check is vacuous.
    Violated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Exact,
    Quadrature,
    Mc,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Quadrature => "quadrature",
            Method::Mc => "mc",
        }
    }

    /// Combines two methods, keeping the least exact.
    pub fn weakest(self, other: Method) -> Method {
        use Method::*;
        match (self, other) {
            (Mc, _) | (_, Mc) => Mc,
            (Quadrature, _) | (_, Quadrature) => Quadrature,
            _ => Exact,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: Option<u64>,
    pub n: usize,
    pub dt: Option<f64>,
    pub method: Method,
}

impl Provenance {
    pub fn exact(method: Method) -> Self {
        Provenance {
            seed: None,
            n: 0,
            dt: None,
            method,
        }
    }

    pub fn mc(seed: u64, n: usize, dt: Option<f64>) -> Self {
        Provenance {
            seed: Some(seed),
            n,
            dt,
            method: Method::Mc,
        }
    }
}

/// One verified inequality instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    /// Stable identifier of the claim being checked, e.g. `semigroup-contraction`.
    pub claim: String,
    pub geometry: String,
    pub function: String,
    /// Free-form description of the instance (times, exponents, points).
    pub instance: String,
    /// Abscissa for plot data (distance, time, ...), when meaningful.
    pub x: Option<f64>,
    pub relation: Relation,
    pub lhs: f64,
    pub rhs: f64,
    pub lhs_stderr: f64,
    pub rhs_stderr: f64,
    /// Extra allowance (discretization bias, inner-estimate bias) on top of the policy.
    pub allowance: f64,
    pub margin: f64,
    pub verdict: Verdict,
    pub expectation: Expectation,
    pub provenance: Provenance,
    pub note: Option<String>,
}

impl InequalityReport {
    /// Builds a row and applies the verdict policy.
    ///
    /// `margin` is `rhs − lhs` for `Le`, `lhs − rhs` for `Ge` and `−|lhs − rhs|`
    /// for `Eq`. Statistical rows (non-zero stderr or `Method::Mc`) pass when
    /// `margin ≥ −(3σ + allowance + 1e−9)`; exact rows use a relative `1e−9`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        claim: &str,
        geometry: &str,
        function: &str,
        instance: String,
        relation: Relation,
        lhs: f64,
        rhs: f64,
        lhs_stderr: f64,
        rhs_stderr: f64,
        allowance: f64,
        provenance: Provenance,
    ) -> Self {
        let margin = match relation {
            Relation::Le => rhs - lhs,
            Relation::Ge => lhs - rhs,
            Relation::Eq => -(lhs - rhs).abs(),
        };
        let verdict = judge(margin, lhs, rhs, lhs_stderr, rhs_stderr, allowance, provenance.method);
        InequalityReport {
            claim: claim.to_string(),
            geometry: geometry.to_string(),
            function: function.to_string(),
            instance,
            x: None,
            relation,
            lhs,
            rhs,
            lhs_stderr,
            rhs_stderr,
            allowance,
            margin,
            verdict,
            expectation: Expectation::Holds,
            provenance,
            note: None,
        }
    }

    pub fn with_x(mut self, x: f64) -> Self {
        self.x = Some(x);
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    /// Overrides the policy verdict, for rows judged by their own rule
    /// (absolute tolerances, violation counts, fit stability).
    pub fn with_verdict(mut self, verdict: Verdict) -> Self {
        self.verdict = verdict;
        self
    }

    pub fn as_control(mut self) -> Self {
        self.expectation = Expectation::Violated;
        self
    }

    pub fn combined_stderr(&self) -> f64 {
        self.lhs_stderr.hypot(self.rhs_stderr)
    }

    /// True when the row behaved as expected: claims did not FAIL, controls did.
    pub fn as_expected(&self) -> bool {
        match self.expectation {
            Expectation::Holds => !self.verdict.is_fail(),
            Expectation::Violated => self.verdict.is_fail(),
        }
    }
}

fn judge(
    margin: f64,
    lhs: f64,
    rhs: f64,
    lhs_stderr: f64,
    rhs_stderr: f64,
    allowance: f64,
    method: Method,
) -> Verdict {
    if !margin.is_finite() || !lhs_stderr.is_finite() || !rhs_stderr.is_finite() {
        return Verdict::Inconclusive;
    }
    let sigma = lhs_stderr.hypot(rhs_stderr);
    if method != Method::Mc && sigma == 0.0 {
        let scale = lhs.abs().max(rhs.abs()).max(1.0);
        let slack = EXACT_REL_TOL * scale + allowance;
        if margin >= -slack {
            Verdict::PassExact
        } else {
            Verdict::Fail
        }
    } else {
        let band = SIGMA_BAND * sigma + allowance + STAT_ABS_TOL;
        if margin >= -band {
            // A band wider than the compared magnitudes resolves nothing.
            if sigma > lhs.abs().max(rhs.abs()).max(1.0) && margin < 0.0 {
                Verdict::Inconclusive
            } else {
                Verdict::Pass
            }
        } else {
            Verdict::Fail
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(rel: Relation, lhs: f64, rhs: f64, se: f64, method: Method) -> InequalityReport {
        let prov = Provenance {
            seed: None,
            n: 0,
            dt: None,
            method,
        };
        InequalityReport::new("c", "g", "f", String::new(), rel, lhs, rhs, se, 0.0, 0.0, prov)
    }

    #[test]
    fn exact_rows_use_relative_tolerance() {
        assert_eq!(row(Relation::Le, 1.0, 1.0, 0.0, Method::Exact).verdict, Verdict::PassExact);
        assert_eq!(
            row(Relation::Le, 1e6 + 1e-4, 1e6, 0.0, Method::Quadrature).verdict,
            Verdict::PassExact
        );
        assert_eq!(row(Relation::Le, 1.0 + 1e-6, 1.0, 0.0, Method::Exact).verdict, Verdict::Fail);
    }

    #[test]
    fn statistical_rows_fail_only_outside_three_sigma() {
        assert_eq!(row(Relation::Le, 1.29, 1.0, 0.1, Method::Mc).verdict, Verdict::Pass);
        assert_eq!(row(Relation::Le, 1.31, 1.0, 0.1, Method::Mc).verdict, Verdict::Fail);
        assert_eq!(row(Relation::Eq, 0.75, 1.0, 0.1, Method::Mc).verdict, Verdict::Pass);
        assert_eq!(row(Relation::Ge, 0.65, 1.0, 0.1, Method::Mc).verdict, Verdict::Fail);
    }

    #[test]
    fn fail_requires_margin_beyond_band() {
        for &(l, r, s) in &[(2.0, 1.0, 0.5), (1.0, 0.0, 0.2), (3.0, 2.9, 0.01)] {
            let rep = row(Relation::Le, l, r, s, Method::Mc);
            if rep.verdict == Verdict::Fail {
                assert!(rep.margin < -(3.0 * rep.combined_stderr() + STAT_ABS_TOL));
            }
        }
    }

    #[test]
    fn zero_valued_truths_resolve_and_wide_bands_do_not() {
        assert_eq!(row(Relation::Eq, 7e-6, 0.0, 1e-3, Method::Mc).verdict, Verdict::Pass);
        assert_eq!(row(Relation::Le, 3.0, 1.0, 5.0, Method::Mc).verdict, Verdict::Inconclusive);
        assert_eq!(row(Relation::Le, f64::NAN, 1.0, 0.0, Method::Mc).verdict, Verdict::Inconclusive);
    }

    #[test]
    fn controls_expect_failure() {
        let r = row(Relation::Le, 2.0, 1.0, 0.0, Method::Exact).as_control();
        assert!(r.as_expected());
        let r = row(Relation::Le, 0.5, 1.0, 0.0, Method::Exact).as_control();
        assert!(!r.as_expected());
    }
}
