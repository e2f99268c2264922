//! The inequality suites. Each suite turns one experiment config into
//! report rows for one geometry; statistical suites also emit at least one
//! deliberately perturbed control row that is expected to FAIL.

use crate::diffusion::{Scheme, SimConfig};
use crate::error::{Error, Result};
use crate::estimators::Estimate;
use crate::geometry::{function_by_id, Geometry, Point, TestFunction};
use crate::verifier::config::ExperimentConfig;
use crate::verifier::report::{InequalityReport, Provenance, Relation};
use crate::verifier::SuiteReport;

mod cd;
mod finite;
mod forms;
mod harnack;
mod harmonic;
mod locality;
mod norms;
mod pointwise;
mod simulator;

pub use cd::{catalog_margins, lattice, NUS};
pub use forms::{fit_gaussian_form, GaussianFormFit};
pub use norms::hypercontractive_exponent;
pub use simulator::{ks_distance, KS_RATIO_BAND};

/// Worst CD margin of each catalog polynomial for the Heisenberg parameters.
pub fn cd_table() -> Result<Vec<(String, crate::gamma::CdMargin)>> {
    catalog_margins(&crate::gamma::CdParams::HEISENBERG)
}

/// Seed used when the config gives none.
pub const DEFAULT_SEED: u64 = 1;

type SuiteFn = fn(&Ctx) -> Result<Vec<InequalityReport>>;

struct SuiteSpec {
    name: &'static str,
    /// Run when the config names no geometry. Empty for geometry-free suites.
    defaults: &'static [Geometry],
    accepts: fn(Geometry) -> bool,
    run: SuiteFn,
}

fn any(_: Geometry) -> bool {
    true
}

fn none(_: Geometry) -> bool {
    false
}

fn exact_kernel(g: Geometry) -> bool {
    g.has_exact_kernel()
}

fn heisenberg_only(g: Geometry) -> bool {
    g == Geometry::Heisenberg
}

const ALL3: &[Geometry] = &[Geometry::Euclidean(1), Geometry::Hyperbolic3, Geometry::Heisenberg];

const SUITES: &[SuiteSpec] = &[
    SuiteSpec {
        name: "finite-sweep",
        defaults: &[],
        accepts: none,
        run: finite::finite_sweep,
    },
    SuiteSpec {
        name: "semigroup-contraction",
        defaults: ALL3,
        accepts: any,
        run: norms::semigroup_contraction,
    },
    SuiteSpec {
        name: "harmonic-fixed-point",
        defaults: &[Geometry::Euclidean(3), Geometry::Hyperbolic3, Geometry::Heisenberg],
        accepts: any,
        run: harmonic::harmonic_fixed_point,
    },
    SuiteSpec {
        name: "subharmonic-growth",
        defaults: ALL3,
        accepts: any,
        run: harmonic::subharmonic_growth,
    },
    SuiteSpec {
        name: "norm-monotonicity",
        defaults: ALL3,
        accepts: any,
        run: norms::norm_monotonicity,
    },
    SuiteSpec {
        name: "hypercontractivity",
        defaults: &[Geometry::Euclidean(1), Geometry::Hyperbolic3],
        accepts: exact_kernel,
        run: norms::hypercontractivity,
    },
    SuiteSpec {
        name: "pointwise-bound",
        defaults: ALL3,
        accepts: any,
        run: pointwise::pointwise_bound,
    },
    SuiteSpec {
        name: "harnack-liyau",
        defaults: &[Geometry::Euclidean(3), Geometry::Hyperbolic3],
        accepts: exact_kernel,
        run: harnack::harnack_liyau,
    },
    SuiteSpec {
        name: "kernel-forms",
        defaults: ALL3,
        accepts: any,
        run: forms::kernel_forms,
    },
    SuiteSpec {
        name: "cd-check",
        defaults: &[Geometry::Heisenberg],
        accepts: heisenberg_only,
        run: cd::cd_check,
    },
    SuiteSpec {
        name: "locality",
        defaults: ALL3,
        accepts: any,
        run: locality::locality,
    },
    SuiteSpec {
        name: "simulator",
        defaults: &[Geometry::Euclidean(1), Geometry::Hyperbolic3, Geometry::Heisenberg],
        accepts: any,
        run: simulator::simulator,
    },
];

pub fn suite_names() -> Vec<&'static str> {
    SUITES.iter().map(|s| s.name).collect()
}

/// Runs one experiment: every default geometry of the suite, or the one the
/// config names. Rows are sorted stably by claim id.
pub fn run_suite(cfg: &ExperimentConfig) -> Result<Vec<SuiteReport>> {
    cfg.validate()?;
    let spec = SUITES.iter().find(|s| s.name == cfg.suite).ok_or_else(|| {
        Error::Config(format!(
            "experiment `{}`, field `suite`: unknown suite (known: {})",
            cfg.suite,
            suite_names().join(", ")
        ))
    })?;
    let geometries: Vec<Option<Geometry>> = match cfg.geometry {
        Some(g) if (spec.accepts)(g) => vec![Some(g)],
        Some(g) => {
            return Err(Error::Config(format!(
                "experiment `{}`, field `geometry`: suite does not support {g}",
                cfg.suite
            )))
        }
        None if spec.defaults.is_empty() => vec![None],
        None => spec.defaults.iter().copied().map(Some).collect(),
    };
    geometries
        .into_iter()
        .map(|g| {
            if let (Some(g), Some(o)) = (g, &cfg.o) {
                g.validate(o)
                    .map_err(|e| Error::Config(format!("experiment `{}`, field `o`: {e}", cfg.suite)))?;
            }
            let ctx = Ctx {
                cfg,
                g,
                seed: cfg.seed.unwrap_or(DEFAULT_SEED),
            };
            let mut rows = (spec.run)(&ctx).map_err(|e| e.in_claim(spec.name))?;
            rows.sort_by(|a, b| a.claim.cmp(&b.claim));
            Ok(SuiteReport {
                suite: spec.name.to_string(),
                geometry: g.map(|g| g.to_string()),
                config: cfg.clone(),
                rows,
            })
        })
        .collect()
}

/// Resolved view of a config for one geometry.
pub(crate) struct Ctx<'a> {
    pub cfg: &'a ExperimentConfig,
    g: Option<Geometry>,
    pub seed: u64,
}

impl Ctx<'_> {
    pub fn g(&self) -> Geometry {
        self.g.expect("geometric suite run without a geometry")
    }

    pub fn gname(&self) -> String {
        self.g.map_or_else(|| "finite".to_string(), |g| g.to_string())
    }

    pub fn n(&self, default: usize) -> usize {
        self.cfg.n_paths.unwrap_or(default)
    }

    /// Independent seed for the `stream`-th simulation of a suite.
    pub fn seed_for(&self, stream: u64) -> u64 {
        self.seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15)
    }

    /// Simulation settings at horizon `t`. A configured `dt` replaces the
    /// geometry default for stepping schemes; exact sampling ignores it.
    pub fn sim(&self, t: f64, n: usize, stream: u64) -> SimConfig {
        let mut c = SimConfig::default_for(self.g(), t, n, self.seed_for(stream));
        if let (Some(dt), Scheme::Euler) = (self.cfg.dt, c.scheme) {
            c.dt = dt;
        }
        c
    }

    /// Stepping settings even where exact sampling exists, for path functionals.
    pub fn sim_stepped(&self, t: f64, n: usize, stream: u64, default_steps: usize) -> SimConfig {
        let mut c = self.sim(t, n, stream);
        if c.scheme == Scheme::Exact {
            c.scheme = Scheme::Euler;
            c.dt = t / default_steps as f64;
        }
        c
    }

    pub fn functions(&self, defaults: &[&str]) -> Result<Vec<TestFunction>> {
        let g = self.g();
        let found: Result<Vec<TestFunction>> = match &self.cfg.functions {
            Some(ids) => ids.iter().map(|id| function_by_id(g, id)).collect(),
            None => defaults.iter().map(|id| function_by_id(g, id)).collect(),
        };
        found.map_err(|e| match e {
            Error::InvalidInput(m) => Error::Config(format!("experiment `{}`, field `functions`: {m}", self.cfg.suite)),
            other => other,
        })
    }

    pub fn o(&self) -> Point {
        self.cfg.o.clone().unwrap_or_else(|| self.g().origin())
    }

    pub fn s(&self, default: f64) -> f64 {
        self.cfg.times.and_then(|t| t.s).unwrap_or(default)
    }

    pub fn t(&self, default: f64) -> f64 {
        self.cfg.times.and_then(|t| t.t).unwrap_or(default)
    }

    pub fn big_t(&self, default: f64) -> f64 {
        self.cfg.times.and_then(|t| t.big_t).unwrap_or(default)
    }

    /// A time grid: the configured `t` alone, or `default`.
    pub fn t_grid(&self, default: &[f64]) -> Vec<f64> {
        match self.cfg.times.and_then(|t| t.t) {
            Some(t) => vec![t],
            None => default.to_vec(),
        }
    }

    pub fn p(&self, default: f64) -> f64 {
        self.cfg.p.unwrap_or(default)
    }

    /// `p` for suites whose claims need `1 < p < ∞`.
    pub fn p_strict(&self, default: f64) -> Result<f64> {
        let p = self.p(default);
        if p <= 1.0 {
            return Err(Error::Config(format!(
                "experiment `{}`, field `p`: this suite needs p > 1, got {p}",
                self.cfg.suite
            )));
        }
        Ok(p)
    }

    pub fn tolerance(&self) -> f64 {
        self.cfg.tolerance.unwrap_or(0.0)
    }

    /// A report row comparing two estimates under the verdict policy.
    #[allow(clippy::too_many_arguments)]
    pub fn row(
        &self,
        claim: &str,
        function: &str,
        instance: String,
        relation: Relation,
        lhs: Estimate,
        rhs: Estimate,
        allowance: f64,
        provenance: Provenance,
    ) -> InequalityReport {
        InequalityReport::new(
            claim,
            &self.gname(),
            function,
            instance,
            relation,
            lhs.value,
            rhs.value,
            lhs.stderr,
            rhs.stderr,
            allowance + self.tolerance(),
            provenance,
        )
    }
}

/// Provenance of a row whose statistical side came from `cfg`.
pub(crate) fn mc_provenance(cfg: &SimConfig) -> Provenance {
    Provenance::mc(cfg.seed, cfg.n_paths, Some(cfg.dt))
}

/// Provenance for a row mixing estimates; `cfg` is used when any side is Monte Carlo.
pub(crate) fn provenance_of(estimates: &[&Estimate], cfg: Option<&SimConfig>) -> Provenance {
    let method = estimates
        .iter()
        .map(|e| e.method)
        .reduce(|a, b| a.weakest(b))
        .unwrap_or(crate::verifier::report::Method::Exact);
    match (method, cfg) {
        (crate::verifier::report::Method::Mc, Some(c)) => mc_provenance(c),
        (m, _) => Provenance::exact(m),
    }
}

/// An exact value as an estimate.
pub(crate) fn exact(v: f64) -> Estimate {
    Estimate::deterministic(v, crate::verifier::report::Method::Exact)
}

fn unsupported(e: &Error) -> bool {
    matches!(e, Error::UnsupportedOracle(_) | Error::UnsupportedReduction { .. })
}

/// `‖f‖_{Lᵖ(μ_t^o)}`: exact kernel quadrature when `f` reduces, otherwise
/// Monte Carlo with `n` paths on seed stream `stream`.
pub(crate) fn norm_any(
    ctx: &Ctx,
    f: &TestFunction,
    o: &Point,
    t: f64,
    p: f64,
    n: usize,
    stream: u64,
) -> Result<(Estimate, Option<SimConfig>)> {
    use crate::estimators::{lp_norm_mc, lp_norm_quadrature};
    let g = ctx.g();
    if t == 0.0 {
        return Ok((exact(f.eval(o).abs()), None));
    }
    if g.has_exact_kernel() {
        match lp_norm_quadrature(g, f, o, t, p) {
            Ok(e) => return Ok((e, None)),
            Err(e) if unsupported(&e) => {}
            Err(e) => return Err(e),
        }
    }
    let cfg = ctx.sim(t, n, stream);
    Ok((lp_norm_mc(g, f, o, t, p, &cfg)?, Some(cfg)))
}

/// `‖e^{sL}f‖_{Lᵖ(μ_t^o)}` by nested quadrature where possible, else nested
/// Monte Carlo with `n_outer` and `n_inner` paths.
#[allow(clippy::too_many_arguments)]
pub(crate) fn smoothed_any(
    ctx: &Ctx,
    f: &TestFunction,
    o: &Point,
    outer_t: f64,
    inner_s: f64,
    p: f64,
    n_outer: usize,
    n_inner: usize,
    stream: u64,
) -> Result<(crate::estimators::NestedEstimate, Option<SimConfig>)> {
    use crate::estimators::{smoothed_lp_norm, NestedEvaluation};
    let g = ctx.g();
    if g.has_exact_kernel() {
        match smoothed_lp_norm(g, f, o, outer_t, inner_s, p, &NestedEvaluation::Quadrature) {
            Ok(e) => return Ok((e, None)),
            Err(e) if unsupported(&e) => {}
            Err(e) => return Err(e),
        }
    }
    let outer = ctx.sim(outer_t, n_outer, stream);
    let inner = ctx.sim(inner_s, n_inner, stream.wrapping_add(1 << 32));
    let est = smoothed_lp_norm(g, f, o, outer_t, inner_s, p, &NestedEvaluation::Mc { outer, inner })?;
    Ok((est, Some(outer)))
}

/// `(e^{tL}f)(x)`: exact oracle or quadrature where possible, else Monte Carlo.
pub(crate) fn heat_op_any(
    ctx: &Ctx,
    f: &TestFunction,
    x: &Point,
    t: f64,
    n: usize,
    stream: u64,
) -> Result<(Estimate, Option<SimConfig>)> {
    use crate::estimators::{heat_op_mc, heat_op_quadrature};
    let g = ctx.g();
    if g.has_exact_kernel() {
        match heat_op_quadrature(g, f, x, t) {
            Ok(e) => return Ok((e, None)),
            Err(e) if unsupported(&e) => {}
            Err(e) => return Err(e),
        }
    }
    let cfg = ctx.sim(t, n, stream);
    Ok((heat_op_mc(g, f, x, t, &cfg)?, Some(cfg)))
}

/// Rejects functions that are neither harmonic nor subharmonic.
pub(crate) fn require_class(f: &TestFunction, allowed: &[crate::geometry::FunctionClass]) -> Result<()> {
    if allowed.contains(&f.class) {
        return Ok(());
    }
    let names: Vec<String> = allowed.iter().map(|c| c.to_string()).collect();
    Err(Error::invalid(format!(
        "function `{}` is {}; this suite needs a {} function",
        f.id,
        f.class,
        names.join(" or ")
    )))
}

/// Sample mean and its standard error.
pub(crate) fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (m, 0.0);
    }
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

/// Certifies `f` in one of the `allowed` classes on the geometry's sample.
pub(crate) fn certify(g: Geometry, f: &TestFunction, allowed: &[crate::geometry::FunctionClass]) -> Result<()> {
    require_class(f, allowed)?;
    crate::geometry::verify_harmonicity(g, f, &crate::geometry::catalog::certification_sample(g))?;
    Ok(())
}
