//! Seeded samplers for the diffusion generated by `½Δ` on `ℝⁿ` and `H³`
//! and by `½(Y₁² + Y₂²)` on the Heisenberg group.
//!
//! Every path draws from its own ChaCha stream keyed by `(seed, path index)`,
//! and successive draws within the stream follow the step index, so a batch
//! is bitwise reproducible for any thread count.

mod cache;
mod probes;

pub use cache::{cache_key, load_or_simulate, read_cache, write_cache, CACHE_MAGIC, CACHE_VERSION};
pub use probes::{exit_time_probe, locality_probe, reflection_exit_probability, ProbabilityEstimate};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Geometry, Point};
use crate::verifier::report::Provenance;

/// Paths per parallel work unit. Results never depend on this value.
const CHUNK: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Exact Gaussian endpoint; `ℝⁿ` only.
    Exact,
    /// Fixed-step scheme (exact Gaussian increments per step).
    Euler,
}

impl Scheme {
    fn code(self) -> u8 {
        match self {
            Scheme::Exact => 0,
            Scheme::Euler => 1,
        }
    }

    fn from_code(c: u8) -> Option<Self> {
        match c {
            0 => Some(Scheme::Exact),
            1 => Some(Scheme::Euler),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dt: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub scheme: Scheme,
}

impl SimConfig {
    pub fn new(dt: f64, n_paths: usize, seed: u64, scheme: Scheme) -> Result<Self> {
        let cfg = SimConfig {
            dt,
            n_paths,
            seed,
            scheme,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Per-geometry defaults for horizon `t`: exact on `ℝⁿ`, `dt = t/2048`
    /// on `H³` and `dt = t/1024` on the Heisenberg group.
    pub fn default_for(g: Geometry, t: f64, n_paths: usize, seed: u64) -> Self {
        let t = if t > 0.0 { t } else { 1.0 };
        let (dt, scheme) = match g {
            Geometry::Euclidean(_) => (t, Scheme::Exact),
            Geometry::Hyperbolic3 => (t / 2048.0, Scheme::Euler),
            Geometry::Heisenberg => (t / 1024.0, Scheme::Euler),
        };
        SimConfig {
            dt,
            n_paths,
            seed,
            scheme,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_paths(mut self, n_paths: usize) -> Self {
        self.n_paths = n_paths;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::invalid(format!("dt must be positive, got {}", self.dt)));
        }
        if self.n_paths == 0 {
            return Err(Error::invalid("n_paths must be at least 1"));
        }
        Ok(())
    }

    /// Number of steps and the step actually used for horizon `t`.
    pub fn steps_for(&self, t: f64) -> (usize, f64) {
        if t == 0.0 || self.scheme == Scheme::Exact {
            return (1, t);
        }
        let n = (t / self.dt * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        (n, t / n as f64)
    }
}

/// Endpoints `X_t` of `n` independent paths from `start`.
#[derive(Debug, Clone, PartialEq)]
pub struct EndpointBatch {
    pub geometry: Geometry,
    pub start: Point,
    pub horizon: f64,
    pub config: SimConfig,
    /// Step actually used (`t / steps`), or `t` for exact sampling.
    pub step: f64,
    coords: Vec<f64>,
}

impl EndpointBatch {
    pub fn from_coords(
        geometry: Geometry,
        start: Point,
        horizon: f64,
        config: SimConfig,
        step: f64,
        coords: Vec<f64>,
    ) -> Result<Self> {
        let dim = geometry.dim();
        if coords.len() != dim * config.n_paths {
            return Err(Error::DimensionMismatch {
                expected: dim * config.n_paths,
                got: coords.len(),
            });
        }
        Ok(EndpointBatch {
            geometry,
            start,
            horizon,
            config,
            step,
            coords,
        })
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.geometry.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.geometry.dim()
    }

    pub fn endpoint(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.coords[i * d..(i + 1) * d]
    }

    pub fn endpoints(&self) -> std::slice::ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.dim())
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn provenance(&self) -> Provenance {
        let dt = match self.config.scheme {
            Scheme::Exact => None,
            Scheme::Euler => Some(self.step),
        };
        Provenance::mc(self.config.seed, self.len(), dt)
    }
}

/// The random stream of one path.
pub fn path_rng(seed: u64, path: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path as u64);
    rng
}

fn check_scheme(g: Geometry, scheme: Scheme) -> Result<()> {
    if scheme == Scheme::Exact && !matches!(g, Geometry::Euclidean(_)) {
        return Err(Error::invalid(format!(
            "exact endpoint sampling is only available on euclidean space, not {g}"
        )));
    }
    Ok(())
}

/// Internal path state. On `H³` the last slot carries `log y`.
fn initial_state(g: Geometry, x0: &[f64]) -> Vec<f64> {
    let mut s = x0.to_vec();
    if g == Geometry::Hyperbolic3 {
        s.push(x0[2].ln());
    }
    s
}

/// One step driven by Brownian increments `dw` over time `h`.
#[inline]
fn advance(g: Geometry, s: &mut [f64], dw: &[f64], h: f64) {
    match g {
        Geometry::Euclidean(_) => {
            for (c, w) in s.iter_mut().zip(dw) {
                *c += w;
            }
        }
        Geometry::Hyperbolic3 => {
            // log y is integrated exactly: d log Y = dB₃ − dt.
            let y = s[2];
            s[0] += y * dw[0];
            s[1] += y * dw[1];
            s[3] += dw[2] - h;
            s[2] = s[3].exp();
        }
        Geometry::Heisenberg => {
            // Midpoint rule for the area term; the increment cross terms cancel.
            s[2] += 0.5 * (s[0] * dw[1] - s[1] * dw[0]);
            s[0] += dw[0];
            s[1] += dw[1];
        }
    }
}

/// Runs one path on `levels` coupled grids with steps `h, 2h, 4h, ...`,
/// all driven by the same fine Brownian increments. `observe` sees the fine
/// skeleton after every step and may stop the path early by returning false.
fn drive_path(
    g: Geometry,
    x0: &[f64],
    n_steps: usize,
    h: f64,
    levels: usize,
    path: usize,
    rng: &mut ChaCha8Rng,
    observe: &mut dyn FnMut(&[f64]) -> bool,
) -> Result<Vec<Vec<f64>>> {
    let nd = g.noise_dim();
    let sd = h.sqrt();
    let mut states: Vec<Vec<f64>> = (0..levels).map(|_| initial_state(g, x0)).collect();
    let mut pending = vec![vec![0.0; nd]; levels];
    let mut dw = vec![0.0; nd];
    for step in 0..n_steps {
        for w in dw.iter_mut() {
            let z: f64 = StandardNormal.sample(rng);
            *w = sd * z;
        }
        advance(g, &mut states[0], &dw, h);
        if !states[0].iter().all(|c| c.is_finite()) {
            return Err(Error::NonFinitePath { path, step });
        }
        for k in 1..levels {
            for (p, w) in pending[k].iter_mut().zip(&dw) {
                *p += w;
            }
            let span = 1usize << k;
            if (step + 1) % span == 0 {
                let (state, acc) = (&mut states[k], &mut pending[k]);
                advance(g, state, acc, h * span as f64);
                acc.iter_mut().for_each(|p| *p = 0.0);
                if !state.iter().all(|c| c.is_finite()) {
                    return Err(Error::NonFinitePath { path, step });
                }
            }
        }
        if !observe(&states[0][..g.dim()]) {
            break;
        }
    }
    Ok(states
        .into_iter()
        .map(|mut s| {
            s.truncate(g.dim());
            s
        })
        .collect())
}

fn prepare(g: Geometry, x0: &[f64], t: f64, cfg: &SimConfig) -> Result<()> {
    cfg.validate()?;
    g.validate(x0)?;
    check_scheme(g, cfg.scheme)?;
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::invalid(format!("horizon must be ≥ 0, got {t}")));
    }
    Ok(())
}

/// Samples `cfg.n_paths` endpoints of the diffusion started at `x0`.
pub fn simulate(g: Geometry, x0: &Point, t: f64, cfg: &SimConfig) -> Result<EndpointBatch> {
    Ok(simulate_coupled(g, x0, t, cfg, 1)?.remove(0))
}

/// Samples endpoints on `levels` coupled time grids (`dt`, `2dt`, `4dt`, ...)
/// sharing the same Brownian increments, for Richardson-type bias estimates.
/// The fine step count is rounded up to a multiple of `2^{levels−1}`.
pub fn simulate_coupled(
    g: Geometry,
    x0: &Point,
    t: f64,
    cfg: &SimConfig,
    levels: usize,
) -> Result<Vec<EndpointBatch>> {
    prepare(g, x0, t, cfg)?;
    if levels == 0 {
        return Err(Error::invalid("at least one level is required"));
    }
    if levels > 1 && cfg.scheme == Scheme::Exact {
        return Err(Error::invalid("coupled levels need a stepping scheme"));
    }
    let dim = g.dim();
    if t == 0.0 {
        let coords: Vec<f64> = x0.iter().copied().cycle().take(dim * cfg.n_paths).collect();
        let b = EndpointBatch::from_coords(g, x0.clone(), 0.0, *cfg, 0.0, coords)?;
        return Ok(vec![b; levels]);
    }
    let (mut n_steps, _) = cfg.steps_for(t);
    let span = 1usize << (levels - 1);
    n_steps = n_steps.div_ceil(span) * span;
    let h = t / n_steps as f64;
    let n_chunks = cfg.n_paths.div_ceil(CHUNK);
    let chunks: Vec<Vec<Vec<f64>>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(cfg.n_paths);
            let mut out = vec![Vec::with_capacity((hi - lo) * dim); levels];
            for path in lo..hi {
                let mut rng = path_rng(cfg.seed, path);
                let ends = drive_path(g, x0, n_steps, h, levels, path, &mut rng, &mut |_| true)?;
                for (o, e) in out.iter_mut().zip(ends) {
                    o.extend_from_slice(&e);
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    (0..levels)
        .map(|k| {
            let coords: Vec<f64> = chunks.iter().flat_map(|c| c[k].iter().copied()).collect();
            let mut level_cfg = *cfg;
            let step = h * (1usize << k) as f64;
            if cfg.scheme == Scheme::Euler {
                level_cfg.dt = step;
            }
            EndpointBatch::from_coords(g, x0.clone(), t, level_cfg, step, coords)
        })
        .collect()
}

/// Runs paths with per-path state `S` updated from the fine skeleton by
/// `observe` (returning false stops the path) and turned into one value per
/// path by `finish`, in path order.
pub(crate) fn map_paths<S, T, I, O, F>(
    g: Geometry,
    x0: &Point,
    t: f64,
    cfg: &SimConfig,
    init: I,
    observe: O,
    finish: F,
) -> Result<Vec<T>>
where
    T: Send,
    I: Fn() -> S + Sync,
    O: Fn(&mut S, &[f64]) -> bool + Sync,
    F: Fn(S, &[f64]) -> T + Sync,
{
    prepare(g, x0, t, cfg)?;
    let (n_steps, h) = cfg.steps_for(t);
    let n_chunks = cfg.n_paths.div_ceil(CHUNK);
    let chunks: Vec<Vec<T>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(cfg.n_paths);
            (lo..hi)
                .map(|path| {
                    let mut state = init();
                    if t == 0.0 {
                        observe(&mut state, x0);
                        return Ok(finish(state, x0));
                    }
                    let mut rng = path_rng(cfg.seed, path);
                    let end = drive_path(g, x0, n_steps, h, 1, path, &mut rng, &mut |p| observe(&mut state, p))?
                        .remove(0);
                    Ok(finish(state, &end))
                })
                .collect::<Result<Vec<T>>>()
        })
        .collect::<Result<_>>()?;
    Ok(chunks.into_iter().flatten().collect())
}
