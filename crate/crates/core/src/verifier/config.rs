//! Experiment configuration files.
//!
//! A file holds one experiment object, an array of them, or
//! `{"experiments": [...]}`. Every field except `suite` is optional and
//! falls back to the suite's defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Geometry, Point};

/// Suites for which `t = 0` is a meaningful (degenerate) instance.
const ZERO_T_SUITES: [&str; 3] = ["semigroup-contraction", "norm-monotonicity", "locality"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Times {
    pub s: Option<f64>,
    pub t: Option<f64>,
    #[serde(rename = "T")]
    pub big_t: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub suite: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<Geometry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub functions: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub o: Option<Point>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<Times>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_paths: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    /// Extra absolute allowance added to every row of the suite.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

impl ExperimentConfig {
    pub fn for_suite(suite: &str) -> Self {
        ExperimentConfig {
            suite: suite.to_string(),
            geometry: None,
            functions: None,
            o: None,
            times: None,
            p: None,
            n_paths: None,
            seed: None,
            dt: None,
            tolerance: None,
        }
    }

    pub fn with_geometry(mut self, g: Geometry) -> Self {
        self.geometry = Some(g);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn with_paths(mut self, n: usize) -> Self {
        self.n_paths = Some(n);
        self
    }

    pub fn with_functions(mut self, ids: &[&str]) -> Self {
        self.functions = Some(ids.iter().map(|s| s.to_string()).collect());
        self
    }

    pub fn with_times(mut self, s: Option<f64>, t: Option<f64>, big_t: Option<f64>) -> Self {
        self.times = Some(Times { s, t, big_t });
        self
    }

    pub fn with_p(mut self, p: f64) -> Self {
        self.p = Some(p);
        self
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = Some(dt);
        self
    }

    pub fn with_o(mut self, o: Point) -> Self {
        self.o = Some(o);
        self
    }

    /// Field-level checks that do not depend on the suite.
    pub fn validate(&self) -> Result<()> {
        let field = |name: &str, msg: String| Error::Config(format!("experiment `{}`, field `{name}`: {msg}", self.suite));
        if let Some(g) = self.geometry {
            if let Some(o) = &self.o {
                g.validate(o).map_err(|e| field("o", e.to_string()))?;
            }
        }
        if let Some(p) = self.p {
            if !(p >= 1.0) || !p.is_finite() {
                return Err(field("p", format!("must satisfy 1 ≤ p < ∞, got {p}")));
            }
        }
        if let Some(n) = self.n_paths {
            if n == 0 {
                return Err(field("n_paths", "must be at least 1".into()));
            }
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0) || !dt.is_finite() {
                return Err(field("dt", format!("must be positive, got {dt}")));
            }
        }
        if let Some(tol) = self.tolerance {
            if !(tol >= 0.0) || !tol.is_finite() {
                return Err(field("tolerance", format!("must be ≥ 0, got {tol}")));
            }
        }
        if let Some(times) = &self.times {
            for (name, v) in [("times.s", times.s), ("times.t", times.t), ("times.T", times.big_t)] {
                if let Some(v) = v {
                    if !(v >= 0.0) || !v.is_finite() {
                        return Err(field(name, format!("must be ≥ 0, got {v}")));
                    }
                }
            }
            let ordered = |a: Option<f64>, b: Option<f64>| match (a, b) {
                (Some(a), Some(b)) => a <= b,
                _ => true,
            };
            if !ordered(times.s, times.t) || !ordered(times.t, times.big_t) || !ordered(times.s, times.big_t) {
                return Err(field("times", "need 0 ≤ s ≤ t ≤ T".into()));
            }
            if times.big_t == Some(0.0) {
                return Err(field("times.T", "need T > 0".into()));
            }
            if times.t == Some(0.0) && !ZERO_T_SUITES.contains(&self.suite.as_str()) {
                return Err(field("times.t", "need t > 0".into()));
            }
        }
        Ok(())
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Wrapped {
    experiments: Vec<ExperimentConfig>,
}

/// Parses a config document, reporting the line and column of syntax or
/// schema errors.
pub fn parse_config(text: &str) -> Result<Vec<ExperimentConfig>> {
    // Pick the shape first so schema errors come from the right type.
    let value: serde_json::Value = serde_json::from_str(text)
        .map_err(|e| Error::Config(format!("line {}, column {}: {e}", e.line(), e.column())))?;
    let located = |e: serde_json::Error| {
        if e.line() > 0 {
            let msg = e.to_string();
            let msg = msg.rsplit_once(" at line ").map_or(msg.as_str(), |(m, _)| m);
            return Error::Config(format!("line {}, column {}: {msg}", e.line(), e.column()));
        }
        match locate_field(text, &e.to_string()) {
            (Some(l), col) => Error::Config(format!("line {l}, column {col}: {e}")),
            (None, _) => Error::Config(e.to_string()),
        }
    };
    let list = if value.is_array() {
        serde_json::from_str::<Vec<ExperimentConfig>>(text).map_err(located)?
    } else if value.get("experiments").is_some() && value.get("suite").is_none() {
        serde_json::from_str::<Wrapped>(text).map_err(located)?.experiments
    } else {
        vec![serde_json::from_str::<ExperimentConfig>(text).map_err(located)?]
    };
    if list.is_empty() {
        return Err(Error::Config("no experiments in config".into()));
    }
    for e in &list {
        e.validate()?;
    }
    Ok(list)
}

/// serde_json reports positions of syntax errors but only a message for
/// some schema errors; recover the line of the offending field when the
/// message names one.
fn locate_field(text: &str, msg: &str) -> (Option<usize>, usize) {
    let name = msg.split('`').nth(1);
    if let Some(name) = name {
        let needle = format!("\"{name}\"");
        for (i, line) in text.lines().enumerate() {
            if let Some(c) = line.find(&needle) {
                return (Some(i + 1), c + 1);
            }
        }
    }
    (None, 0)
}

pub fn load_config(path: &Path) -> Result<Vec<ExperimentConfig>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| match e {
        Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_single_and_wrapped_forms() {
        let one = r#"{"suite": "harmonic-fixed-point", "geometry": "heisenberg", "o": [1, 0, 0],
                      "times": {"t": 1.0}, "n_paths": 1000, "seed": 3, "functions": ["z"]}"#;
        let cfg = parse_config(one).unwrap();
        assert_eq!(cfg.len(), 1);
        assert_eq!(cfg[0].geometry, Some(Geometry::Heisenberg));
        assert_eq!(cfg[0].times.unwrap().t, Some(1.0));

        let many = r#"{"experiments": [{"suite": "cd-check"}, {"suite": "finite-sweep", "seed": 7}]}"#;
        assert_eq!(parse_config(many).unwrap().len(), 2);
        let arr = r#"[{"suite": "cd-check"}]"#;
        assert_eq!(parse_config(arr).unwrap().len(), 1);
    }

    #[test]
    fn errors_carry_line_and_field() {
        let bad = "{\n  \"suite\": \"cd-check\",\n  \"n_pahts\": 5\n}";
        let msg = parse_config(bad).unwrap_err().to_string();
        assert!(msg.contains("line 3"), "{msg}");
        assert!(msg.contains("n_pahts"), "{msg}");

        let syntax = "{\n  \"suite\": \"cd-check\",,\n}";
        let msg = parse_config(syntax).unwrap_err().to_string();
        assert!(msg.contains("line 2"), "{msg}");

        let times = r#"{"suite": "norm-monotonicity", "times": {"s": 1.0, "t": 0.5}}"#;
        let msg = parse_config(times).unwrap_err().to_string();
        assert!(msg.contains("times"), "{msg}");

        let p = r#"{"suite": "pointwise-bound", "p": 0.5}"#;
        assert!(parse_config(p).unwrap_err().to_string().contains("`p`"));

        let o = r#"{"suite": "pointwise-bound", "geometry": "hyperbolic3", "o": [0, 0, -1]}"#;
        assert!(parse_config(o).unwrap_err().to_string().contains("`o`"));
    }
}
