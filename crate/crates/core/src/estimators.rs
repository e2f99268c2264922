//! `Lᵖ` norms and heat operators under heat kernel measures, by Monte Carlo
//! on endpoint batches and by quadrature against exact kernels.

use std::cell::RefCell;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diffusion::{simulate, EndpointBatch, SimConfig};
use crate::error::{Error, Result};
use crate::geometry::radial::{radial_quadrature_with, sphere_mean_of_distance, sphere_mean_of_height};
use crate::geometry::{hyperbolic, Geometry, Point, Profile, Reduction, TestFunction};
use crate::quadrature::{integrate_to_infinity, Tolerance};
use crate::verifier::report::Method;

/// Tolerance for single-level quadratures.
const QUAD_TOL: Tolerance = Tolerance::new(1e-13, 1e-12);
/// Tolerance for the outer level of nested quadratures.
const NESTED_TOL: Tolerance = Tolerance::new(1e-12, 1e-10);
/// Outer points per parallel work unit in nested Monte Carlo.
const OUTER_CHUNK: usize = 256;

/// A value with its standard error. `stderr` is zero for deterministic methods.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    pub n: usize,
    pub method: Method,
}

pub type LpEstimate = Estimate;
pub type HeatOpEstimate = Estimate;

impl Estimate {
    pub fn deterministic(value: f64, method: Method) -> Self {
        Estimate {
            value,
            stderr: 0.0,
            n: 0,
            method,
        }
    }
}

/// How heat-kernel integrals are evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Evaluation {
    /// Closed forms or quadrature against the exact kernel.
    Quadrature,
    Mc(SimConfig),
}

/// Which functional of `f` is integrated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Moment {
    Value,
    AbsPow(f64),
}

impl Moment {
    #[inline]
    fn apply(self, v: f64) -> f64 {
        match self {
            Moment::Value => v,
            Moment::AbsPow(p) => v.abs().powf(p),
        }
    }
}

fn check_p(p: f64) -> Result<()> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::invalid(format!(
            "heat-kernel Lp norms need 1 ≤ p < ∞, got {p}"
        )));
    }
    Ok(())
}

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::invalid(format!("time must be ≥ 0, got {t}")));
    }
    Ok(())
}

fn overflow(f: &TestFunction) -> Error {
    Error::Overflow {
        function: f.id.clone(),
        growth: f.growth.to_string(),
    }
}

/// Sequential mean and unbiased variance.
fn mean_var(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 {
        v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (m, var)
}

/// Delta-method propagation from the `p`-th moment `m` to `m^{1/p}`.
fn moment_to_norm(m: f64, se_m: f64, p: f64) -> (f64, f64) {
    let value = m.powf(1.0 / p);
    let se = if m > 0.0 { m.powf(1.0 / p - 1.0) * se_m / p } else { 0.0 };
    (value, se)
}

/// `((1/n)Σ|f(Xᵢ)|ᵖ)^{1/p}` with a delta-method standard error.
pub fn lp_norm_from_batch(f: &TestFunction, batch: &EndpointBatch, p: f64) -> Result<Estimate> {
    check_p(p)?;
    let vals: Vec<f64> = batch.coords().par_chunks_exact(batch.dim()).map(|e| Moment::AbsPow(p).apply(f.eval(e))).collect();
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(overflow(f));
    }
    let (m, var) = mean_var(&vals);
    let n = vals.len();
    let (value, stderr) = moment_to_norm(m, (var / n as f64).sqrt(), p);
    Ok(Estimate {
        value,
        stderr,
        n,
        method: Method::Mc,
    })
}

/// `‖f‖_{Lᵖ(μ_T^o)}` from a fresh endpoint batch.
pub fn lp_norm_mc(g: Geometry, f: &TestFunction, o: &Point, t: f64, p: f64, cfg: &SimConfig) -> Result<Estimate> {
    check_p(p)?;
    let batch = simulate(g, o, t, cfg)?;
    lp_norm_from_batch(f, &batch, p)
}

/// Sample mean of `f` over the batch.
pub fn heat_op_from_batch(f: &TestFunction, batch: &EndpointBatch) -> Result<Estimate> {
    let vals: Vec<f64> = batch.coords().par_chunks_exact(batch.dim()).map(|e| f.eval(e)).collect();
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(overflow(f));
    }
    let (m, var) = mean_var(&vals);
    Ok(Estimate {
        value: m,
        stderr: (var / vals.len() as f64).sqrt(),
        n: vals.len(),
        method: Method::Mc,
    })
}

/// `(e^{tL}f)(x)` by endpoint averaging; `t = 0` returns `f(x)` exactly.
pub fn heat_op_mc(g: Geometry, f: &TestFunction, x: &Point, t: f64, cfg: &SimConfig) -> Result<Estimate> {
    check_time(t)?;
    g.validate(x)?;
    if t == 0.0 {
        return Ok(Estimate::deterministic(f.eval(x), Method::Exact));
    }
    heat_op_from_batch(f, &simulate(g, x, t, cfg)?)
}

/// Collects the first error raised inside a quadrature integrand.
struct ErrorSlot(RefCell<Option<Error>>);

impl ErrorSlot {
    fn new() -> Self {
        ErrorSlot(RefCell::new(None))
    }

    fn unwrap(&self, r: Result<f64>) -> f64 {
        r.unwrap_or_else(|e| {
            self.0.borrow_mut().get_or_insert(e);
            f64::NAN
        })
    }

    fn finish<T>(self, r: Result<T>) -> Result<T> {
        match self.0.into_inner() {
            Some(e) => Err(e),
            None => r,
        }
    }
}

/// `E F(m + √t Z)` for standard normal `Z`, with `F` possibly jumping at `breaks`.
fn gaussian_expectation<F: Fn(f64) -> f64>(big_f: F, m: f64, t: f64, breaks: &[f64], tol: Tolerance) -> Result<f64> {
    let c = 1.0 / (2.0 * std::f64::consts::PI * t).sqrt();
    let mut br: Vec<f64> = breaks.iter().map(|b| (b - m).abs()).filter(|&u| u > 0.0).collect();
    br.sort_by(f64::total_cmp);
    let q = integrate_to_infinity(
        |u| {
            let w = c * (-u * u / (2.0 * t)).exp();
            if w == 0.0 {
                0.0
            } else {
                (big_f(m + u) + big_f(m - u)) * w
            }
        },
        0.0,
        10.0 * t.sqrt(),
        &br,
        tol,
    )?;
    Ok(q.value)
}

/// `E[e^{k·b(X_t)}] / e^{k·b(x)}` on `H³`: the log-height increment is `B − t`.
fn horospherical_exp_factor(k: f64, t: f64) -> f64 {
    (k * k * t / 2.0 - k * t).exp()
}

fn unsupported(g: Geometry, f: &TestFunction) -> Error {
    Error::UnsupportedReduction {
        function: f.id.clone(),
        geometry: g.to_string(),
    }
}

/// `∫ Φ(f(y)) μ_t(x, y) dV(y)` through the function's reduction. With
/// `closed_forms`, exponential profiles use their Gaussian moment formulas.
pub fn kernel_expectation(
    g: Geometry,
    f: &TestFunction,
    x: &Point,
    t: f64,
    moment: Moment,
    closed_forms: bool,
) -> Result<(f64, Method)> {
    check_time(t)?;
    g.validate(x)?;
    if let Moment::AbsPow(p) = moment {
        check_p(p)?;
    }
    if t == 0.0 {
        return Ok((moment.apply(f.eval(x)), Method::Exact));
    }
    if !g.has_exact_kernel() {
        return Err(Error::UnsupportedOracle(g.to_string()));
    }
    let scale = match moment {
        Moment::Value => 1.0,
        Moment::AbsPow(p) => p,
    };
    let slot = ErrorSlot::new();
    let value = match &f.reduction {
        Reduction::Axis { axis, profile } if matches!(g, Geometry::Euclidean(n) if *axis < n) => {
            let m = x[*axis];
            if let (true, Profile::Exp { rate }) = (closed_forms, profile) {
                let k = scale * rate;
                return Ok(((k * m + k * k * t / 2.0).exp(), Method::Exact));
            }
            gaussian_expectation(|s| moment.apply(profile.eval(s)), m, t, &profile.breaks(), QUAD_TOL)
        }
        Reduction::Radial { center, profile } => {
            let rho = if center.dim() == 0 { 0.0 } else { g.distance(x, center)? };
            let breaks = profile.breaks();
            let h = |d: f64| moment.apply(profile.eval(d));
            if rho == 0.0 {
                radial_quadrature_with(g, h, t, &breaks, QUAD_TOL).map(|q| q.value)
            } else {
                let mut outer: Vec<f64> = breaks.iter().flat_map(|&b| [(rho - b).abs(), rho + b]).collect();
                outer.sort_by(f64::total_cmp);
                let q = radial_quadrature_with(
                    g,
                    |r| slot.unwrap(sphere_mean_of_distance(g, rho, r, h, &breaks)),
                    t,
                    &outer,
                    NESTED_TOL,
                );
                slot_value(&slot, q)
            }
        }
        Reduction::Horospherical { boundary, profile } if g == Geometry::Hyperbolic3 => {
            let b0 = hyperbolic::log_height(x, *boundary);
            if let (true, Profile::Exp { rate }) = (closed_forms, profile) {
                let k = scale * rate;
                return Ok(((k * b0).exp() * horospherical_exp_factor(k, t), Method::Exact));
            }
            let q = radial_quadrature_with(
                g,
                |r| slot.unwrap(sphere_mean_of_height(r, |v| moment.apply(profile.eval(b0 + v)))),
                t,
                &[],
                NESTED_TOL,
            );
            slot_value(&slot, q)
        }
        _ => return Err(unsupported(g, f)),
    };
    let value = slot.finish(value)?;
    if !value.is_finite() {
        return Err(overflow(f));
    }
    Ok((value, Method::Quadrature))
}

fn slot_value(slot: &ErrorSlot, q: Result<crate::quadrature::Quadrature>) -> Result<f64> {
    if let Some(e) = slot.0.borrow_mut().take() {
        return Err(e);
    }
    q.map(|q| q.value)
}

/// `‖f‖_{Lᵖ(μ_T^o)}` by quadrature (or closed form) against the exact kernel.
pub fn lp_norm_quadrature(g: Geometry, f: &TestFunction, o: &Point, t: f64, p: f64) -> Result<Estimate> {
    check_p(p)?;
    let (m, method) = kernel_expectation(g, f, o, t, Moment::AbsPow(p), true)?;
    Ok(Estimate::deterministic(m.powf(1.0 / p), method))
}

/// `(e^{tL}f)(x)` by quadrature (or closed form) against the exact kernel.
pub fn heat_op_quadrature(g: Geometry, f: &TestFunction, x: &Point, t: f64) -> Result<Estimate> {
    let (v, method) = kernel_expectation(g, f, x, t, Moment::Value, true)?;
    Ok(Estimate::deterministic(v, method))
}

pub fn heat_op(g: Geometry, f: &TestFunction, x: &Point, t: f64, eval: &Evaluation) -> Result<Estimate> {
    match eval {
        Evaluation::Quadrature => heat_op_quadrature(g, f, x, t),
        Evaluation::Mc(cfg) => heat_op_mc(g, f, x, t, cfg),
    }
}

pub fn lp_norm(g: Geometry, f: &TestFunction, o: &Point, t: f64, p: f64, eval: &Evaluation) -> Result<Estimate> {
    match eval {
        Evaluation::Quadrature => lp_norm_quadrature(g, f, o, t, p),
        Evaluation::Mc(cfg) => lp_norm_mc(g, f, o, t, p, cfg),
    }
}

/// How a smoothed norm `‖e^{sL}f‖_{Lᵖ(μ_T^o)}` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NestedEvaluation {
    Quadrature,
    /// Outer endpoints from `o` at time `T`; the inner operator averages over
    /// one shared batch from the origin, carried to each outer point by the
    /// geometry's isometries.
    Mc { outer: SimConfig, inner: SimConfig },
}

/// A smoothed norm together with a first-order bound on the upward bias
/// that inner Monte Carlo noise adds through Jensen's inequality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NestedEstimate {
    pub estimate: Estimate,
    pub bias_bound: f64,
}

/// `‖e^{sL}f‖_{Lᵖ(μ_T^o)}`.
pub fn smoothed_lp_norm(
    g: Geometry,
    f: &TestFunction,
    o: &Point,
    outer_t: f64,
    inner_s: f64,
    p: f64,
    eval: &NestedEvaluation,
) -> Result<NestedEstimate> {
    check_p(p)?;
    check_time(outer_t)?;
    check_time(inner_s)?;
    g.validate(o)?;
    let plain = |estimate| NestedEstimate {
        estimate,
        bias_bound: 0.0,
    };
    match eval {
        NestedEvaluation::Quadrature => {
            if inner_s == 0.0 {
                return Ok(plain(lp_norm_quadrature(g, f, o, outer_t, p)?));
            }
            if outer_t == 0.0 {
                let e = heat_op_quadrature(g, f, o, inner_s)?;
                return Ok(plain(Estimate::deterministic(e.value.abs(), e.method)));
            }
            Ok(plain(smoothed_lp_norm_quadrature(g, f, o, outer_t, inner_s, p)?))
        }
        NestedEvaluation::Mc { outer, inner } => {
            if inner_s == 0.0 {
                return Ok(plain(lp_norm_mc(g, f, o, outer_t, p, outer)?));
            }
            smoothed_lp_norm_mc(g, f, o, outer_t, inner_s, p, outer, inner)
        }
    }
}

fn smoothed_lp_norm_quadrature(g: Geometry, f: &TestFunction, o: &Point, big_t: f64, s: f64, p: f64) -> Result<Estimate> {
    if !g.has_exact_kernel() {
        return Err(Error::UnsupportedOracle(g.to_string()));
    }
    let slot = ErrorSlot::new();
    let value = match &f.reduction {
        Reduction::Axis { axis, profile } if matches!(g, Geometry::Euclidean(n) if *axis < n) => {
            let m = o[*axis];
            if let Profile::Exp { rate: a } = profile {
                // e^{sL}e^{ax} = e^{ax + a²s/2}, then the Gaussian MGF at pa.
                let v = (a * a * s / 2.0 + a * m + p * a * a * big_t / 2.0).exp();
                return Ok(Estimate::deterministic(v, Method::Exact));
            }
            let breaks = profile.breaks();
            let inner = |u: f64| slot.unwrap(gaussian_expectation(|w| profile.eval(w), u, s, &breaks, QUAD_TOL));
            let moment = gaussian_expectation(|u| inner(u).abs().powf(p), m, big_t, &[], NESTED_TOL);
            slot_value(&slot, moment.map(|v| crate::quadrature::Quadrature { value: v, error: 0.0, evaluations: 0 }))
        }
        Reduction::Horospherical { boundary, profile: Profile::Exp { rate: k } } if g == Geometry::Hyperbolic3 => {
            let b0 = hyperbolic::log_height(o, *boundary);
            let v = horospherical_exp_factor(*k, s) * (k * b0).exp() * horospherical_exp_factor(p * k, big_t).powf(1.0 / p);
            return Ok(Estimate::deterministic(v, Method::Exact));
        }
        Reduction::Radial { center, profile } => {
            let centered = center.dim() == 0 || g.distance(o, center)? == 0.0;
            if !centered {
                return Err(unsupported(g, f));
            }
            let breaks = profile.breaks();
            // e^{sL}f at distance ρ from the center, by the sphere-mean reduction.
            let smoothed = |rho: f64| -> Result<f64> {
                let inner_slot = ErrorSlot::new();
                let mut outer: Vec<f64> = breaks.iter().flat_map(|&b| [(rho - b).abs(), rho + b]).collect();
                outer.sort_by(f64::total_cmp);
                let q = radial_quadrature_with(
                    g,
                    |r| inner_slot.unwrap(sphere_mean_of_distance(g, rho, r, |d| profile.eval(d), &breaks)),
                    s,
                    &outer,
                    NESTED_TOL,
                );
                slot_value(&inner_slot, q)
            };
            let q = radial_quadrature_with(g, |rho| slot.unwrap(smoothed(rho)).abs().powf(p), big_t, &[], NESTED_TOL);
            slot_value(&slot, q)
        }
        _ => return Err(unsupported(g, f)),
    };
    let m = slot.finish(value)?;
    if !m.is_finite() {
        return Err(overflow(f));
    }
    Ok(Estimate::deterministic(m.powf(1.0 / p), Method::Quadrature))
}

#[allow(clippy::too_many_arguments)]
fn smoothed_lp_norm_mc(
    g: Geometry,
    f: &TestFunction,
    o: &Point,
    big_t: f64,
    s: f64,
    p: f64,
    outer_cfg: &SimConfig,
    inner_cfg: &SimConfig,
) -> Result<NestedEstimate> {
    let outer = simulate(g, o, big_t, outer_cfg)?;
    let inner = simulate(g, &g.origin(), s, inner_cfg)?;
    let d = g.dim();
    let n_in = inner.len();
    let n_out = outer.len();

    // Pass 1: inner means and variances at every outer point.
    let stats: Vec<(f64, f64)> = outer
        .coords()
        .par_chunks_exact(d)
        .map(|y| {
            let vals: Vec<f64> = inner.endpoints().map(|w| f.eval(&g.translate(y, w))).collect();
            mean_var(&vals)
        })
        .collect();
    if stats.iter().any(|(m, v)| !m.is_finite() || !v.is_finite()) {
        return Err(overflow(f));
    }
    let phi: Vec<f64> = stats.iter().map(|(m, _)| m.abs().powf(p)).collect();
    let (m, var_outer) = mean_var(&phi);

    // Pass 2: sensitivity of the moment to each shared inner path,
    // G_j = mean_y φ'(ê(y))·(f(y·w_j) − ê(y)), summed in fixed chunk order.
    let dphi: Vec<f64> = stats.iter().map(|(e, _)| p * e.abs().powf(p - 1.0) * e.signum()).collect();
    let partial: Vec<Vec<f64>> = (0..n_out.div_ceil(OUTER_CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut acc = vec![0.0; n_in];
            for i in c * OUTER_CHUNK..((c + 1) * OUTER_CHUNK).min(n_out) {
                let y = outer.endpoint(i);
                let (e, _) = stats[i];
                for (a, w) in acc.iter_mut().zip(inner.endpoints()) {
                    *a += dphi[i] * (f.eval(&g.translate(y, w)) - e);
                }
            }
            acc
        })
        .collect();
    let mut sens = vec![0.0; n_in];
    for part in &partial {
        for (s, v) in sens.iter_mut().zip(part) {
            *s += v;
        }
    }
    sens.iter_mut().for_each(|s| *s /= n_out as f64);
    let (_, var_inner) = mean_var(&sens);
    let se_m = (var_outer / n_out as f64 + var_inner / n_in as f64).sqrt();

    // Second-order Jensen inflation: E|ê|ᵖ − |e|ᵖ ≈ ½p(p−1)|e|^{p−2}·Var(ê).
    let bias_m = if p > 1.0 {
        stats
            .iter()
            .map(|(e, v)| 0.5 * p * (p - 1.0) * e.abs().max(1e-12).powf(p - 2.0) * v / n_in as f64)
            .sum::<f64>()
            / n_out as f64
    } else {
        0.0
    };
    let (value, stderr) = moment_to_norm(m, se_m, p);
    let bias_bound = if m > 0.0 { m.powf(1.0 / p - 1.0) * bias_m / p } else { 0.0 };
    Ok(NestedEstimate {
        estimate: Estimate {
            value,
            stderr,
            n: n_out,
            method: Method::Mc,
        },
        bias_bound,
    })
}
