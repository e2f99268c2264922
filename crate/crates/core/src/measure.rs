//! Exact Markov kernels on finite spaces.
//!
//! A kernel `μˣ` is a row-stochastic matrix; it pushes a finite measure `ν₁`
//! on its rows forward to `ν₂ = Σₓ μˣ ν₁({x})` on its columns and acts on
//! functions of the columns by averaging, `(Af)(x) = Σ_y f(y) μˣ({y})`.
//! `A` contracts `Lᵖ(ν₂)` into `Lᵖ(ν₁)` for every `p ∈ [1, ∞]`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::verifier::report::{InequalityReport, Method, Provenance, Relation};

/// Row-sum tolerance for stochastic matrices and slack for the contraction check.
pub const STOCHASTIC_TOL: f64 = 1e-12;

/// Exponents used by the random contraction sweep.
pub const SWEEP_EXPONENTS: [f64; 6] = [1.0, 1.5, 2.0, 3.0, 10.0, f64::INFINITY];

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMeasure {
    weights: Vec<f64>,
}

impl FiniteMeasure {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::invalid("measure on an empty space"));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::invalid("measure weights must be finite and non-negative"));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::invalid("measure has zero total mass"));
        }
        Ok(FiniteMeasure { weights })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteFunction {
    values: Vec<f64>,
}

impl FiniteFunction {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("function values must be finite"));
        }
        Ok(FiniteFunction { values })
    }

    pub fn constant(len: usize, c: f64) -> Self {
        FiniteFunction {
            values: vec![c; len],
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn abs(&self) -> FiniteFunction {
        FiniteFunction {
            values: self.values.iter().map(|v| v.abs()).collect(),
        }
    }

    pub fn abs_pow(&self, p: f64) -> FiniteFunction {
        FiniteFunction {
            values: self.values.iter().map(|v| v.abs().powf(p)).collect(),
        }
    }
}

/// Row-stochastic matrix, row-major. Entry `(x, y)` is `μˣ({y})`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteKernel {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

impl FiniteKernel {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n_rows = rows.len();
        if n_rows == 0 {
            return Err(Error::invalid("kernel with no rows"));
        }
        let cols = rows[0].len();
        if cols == 0 {
            return Err(Error::invalid("kernel with no columns"));
        }
        let mut entries = Vec::with_capacity(n_rows * cols);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    got: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::invalid(format!("row {i} has a negative or non-finite entry")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > STOCHASTIC_TOL {
                return Err(Error::invalid(format!("row {i} sums to {sum}, not 1")));
            }
            entries.extend(row);
        }
        Ok(FiniteKernel {
            rows: n_rows,
            cols,
            entries,
        })
    }

    pub fn identity(n: usize) -> Self {
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            entries[i * n + i] = 1.0;
        }
        FiniteKernel {
            rows: n,
            cols: n,
            entries,
        }
    }

    /// Every row equal to `row`.
    pub fn constant(n_rows: usize, row: &[f64]) -> Result<Self> {
        FiniteKernel::new(vec![row.to_vec(); n_rows])
    }

    pub fn n_rows(&self) -> usize {
        self.rows
    }

    pub fn n_cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.entries[x * self.cols..(x + 1) * self.cols]
    }

    /// Uniform(0,1) entries, rows normalized.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> Self {
        let mut entries = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let row: Vec<f64> = (0..cols).map(|_| rng.random::<f64>()).collect();
            let s: f64 = row.iter().sum();
            entries.extend(row.into_iter().map(|v| v / s));
        }
        FiniteKernel {
            rows,
            cols,
            entries,
        }
    }
}

impl FiniteMeasure {
    /// Uniform(0,1) weights normalized to total mass one.
    pub fn random_probability<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Self {
        let w: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let s: f64 = w.iter().sum();
        FiniteMeasure {
            weights: w.into_iter().map(|v| v / s).collect(),
        }
    }
}

/// `ν₂({y}) = Σₓ μˣ({y}) ν₁({x})`.
pub fn pushforward(kernel: &FiniteKernel, nu1: &FiniteMeasure) -> Result<FiniteMeasure> {
    if kernel.n_rows() != nu1.len() {
        return Err(Error::DimensionMismatch {
            expected: kernel.n_rows(),
            got: nu1.len(),
        });
    }
    let mut out = vec![0.0; kernel.n_cols()];
    for (x, &w) in nu1.weights().iter().enumerate() {
        for (o, k) in out.iter_mut().zip(kernel.row(x)) {
            *o += k * w;
        }
    }
    FiniteMeasure::new(out)
}

/// `(Af)(x) = Σ_y f(y) μˣ({y})`.
pub fn apply_kernel(kernel: &FiniteKernel, f: &FiniteFunction) -> Result<FiniteFunction> {
    if kernel.n_cols() != f.len() {
        return Err(Error::DimensionMismatch {
            expected: kernel.n_cols(),
            got: f.len(),
        });
    }
    let values = (0..kernel.n_rows())
        .map(|x| {
            kernel
                .row(x)
                .iter()
                .zip(f.values())
                .map(|(k, v)| k * v)
                .sum()
        })
        .collect();
    Ok(FiniteFunction { values })
}

/// `Lᵖ(ν)` norm; `p = ∞` takes the sup over points of positive mass.
pub fn lp_norm(f: &FiniteFunction, nu: &FiniteMeasure, p: f64) -> Result<f64> {
    if f.len() != nu.len() {
        return Err(Error::DimensionMismatch {
            expected: nu.len(),
            got: f.len(),
        });
    }
    if p.is_nan() || p < 1.0 {
        return Err(Error::invalid(format!("exponent p = {p} is below 1")));
    }
    let pairs = f.values().iter().zip(nu.weights());
    if p.is_infinite() {
        return Ok(pairs
            .filter(|(_, &w)| w > 0.0)
            .map(|(v, _)| v.abs())
            .fold(0.0, f64::max));
    }
    let s: f64 = pairs.map(|(v, w)| v.abs().powf(p) * w).sum();
    Ok(s.powf(1.0 / p))
}

/// `∫ f dν`.
pub fn integrate(f: &FiniteFunction, nu: &FiniteMeasure) -> Result<f64> {
    if f.len() != nu.len() {
        return Err(Error::DimensionMismatch {
            expected: nu.len(),
            got: f.len(),
        });
    }
    Ok(f.values().iter().zip(nu.weights()).map(|(v, w)| v * w).sum())
}

/// `(k1∘k2)ˣ({z}) = Σ_y k1ˣ({y}) k2ʸ({z})`.
pub fn compose_kernels(k1: &FiniteKernel, k2: &FiniteKernel) -> Result<FiniteKernel> {
    if k1.n_cols() != k2.n_rows() {
        return Err(Error::DimensionMismatch {
            expected: k1.n_cols(),
            got: k2.n_rows(),
        });
    }
    let mut entries = vec![0.0; k1.n_rows() * k2.n_cols()];
    for x in 0..k1.n_rows() {
        let out = &mut entries[x * k2.n_cols()..(x + 1) * k2.n_cols()];
        for (y, &w) in k1.row(x).iter().enumerate() {
            for (o, k) in out.iter_mut().zip(k2.row(y)) {
                *o += w * k;
            }
        }
    }
    Ok(FiniteKernel {
        rows: k1.n_rows(),
        cols: k2.n_cols(),
        entries,
    })
}

/// Checks `‖Af‖_{Lᵖ(ν₁)} ≤ ‖f‖_{Lᵖ(ν₂)}` with `ν₂` the pushforward of `ν₁`.
pub fn check_contraction(
    kernel: &FiniteKernel,
    nu1: &FiniteMeasure,
    f: &FiniteFunction,
    p: f64,
) -> Result<InequalityReport> {
    let nu2 = pushforward(kernel, nu1)?;
    let af = apply_kernel(kernel, f)?;
    let lhs = lp_norm(&af, nu1, p)?;
    let rhs = lp_norm(f, &nu2, p)?;
    let mut report = InequalityReport::new(
        "finite-contraction",
        "finite",
        "f",
        format!("n={}x{}, p={p}", kernel.n_rows(), kernel.n_cols()),
        Relation::Le,
        lhs,
        rhs,
        0.0,
        0.0,
        0.0,
        Provenance::exact(Method::Exact),
    );
    // Absolute slack, not the relative policy.
    report.verdict = if lhs <= rhs + STOCHASTIC_TOL {
        crate::verifier::report::Verdict::PassExact
    } else {
        crate::verifier::report::Verdict::Fail
    };
    Ok(report)
}

/// One random instance of the contraction sweep.
#[derive(Debug, Clone)]
pub struct SweepInstance {
    pub kernel: FiniteKernel,
    pub nu1: FiniteMeasure,
    pub f: FiniteFunction,
}

impl SweepInstance {
    /// Sizes in `2..=max_size`, uniform entries normalized, `f` uniform in `[-1, 1]`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, max_size: usize) -> Self {
        let rows = rng.random_range(2..=max_size);
        let cols = rng.random_range(2..=max_size);
        let kernel = FiniteKernel::random(rng, rows, cols);
        let nu1 = FiniteMeasure::random_probability(rng, rows);
        let f = FiniteFunction {
            values: (0..cols).map(|_| rng.random_range(-1.0..=1.0)).collect(),
        };
        SweepInstance { kernel, nu1, f }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two_state() -> FiniteKernel {
        FiniteKernel::new(vec![vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap()
    }

    #[test]
    fn pushforward_examples() {
        let nu = FiniteMeasure::new(vec![0.3, 0.7]).unwrap();
        assert_eq!(pushforward(&FiniteKernel::identity(2), &nu).unwrap(), nu);

        let nu = FiniteMeasure::new(vec![0.5, 0.5]).unwrap();
        let nu2 = pushforward(&two_state(), &nu).unwrap();
        assert_abs_diff_eq!(nu2.weights()[0], 0.55, epsilon = 1e-15);
        assert_abs_diff_eq!(nu2.weights()[1], 0.45, epsilon = 1e-15);

        let k = FiniteKernel::constant(3, &[0.5, 0.5]).unwrap();
        let nu = FiniteMeasure::new(vec![0.2, 0.5, 0.3]).unwrap();
        let nu2 = pushforward(&k, &nu).unwrap();
        assert_abs_diff_eq!(nu2.weights()[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(nu2.weights()[1], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn apply_kernel_examples() {
        let f = FiniteFunction::new(vec![1.0, -1.0]).unwrap();
        assert_eq!(apply_kernel(&FiniteKernel::identity(2), &f).unwrap(), f);
        let af = apply_kernel(&two_state(), &f).unwrap();
        assert_abs_diff_eq!(af.values()[0], 0.8, epsilon = 1e-15);
        assert_abs_diff_eq!(af.values()[1], -0.6, epsilon = 1e-15);
        let c = FiniteFunction::constant(2, 3.5);
        let ac = apply_kernel(&two_state(), &c).unwrap();
        assert!(ac.values().iter().all(|v| (v - 3.5).abs() < 1e-15));
    }

    #[test]
    fn lp_norm_examples() {
        let f = FiniteFunction::new(vec![1.0, -1.0]).unwrap();
        let nu = FiniteMeasure::new(vec![0.55, 0.45]).unwrap();
        assert_abs_diff_eq!(lp_norm(&f, &nu, 2.0).unwrap(), 1.0, epsilon = 1e-15);

        let zero = FiniteFunction::constant(2, 0.0);
        for p in SWEEP_EXPONENTS {
            assert_eq!(lp_norm(&zero, &nu, p).unwrap(), 0.0);
        }

        let f = FiniteFunction::new(vec![3.0, 5.0]).unwrap();
        let nu = FiniteMeasure::new(vec![1.0, 0.0]).unwrap();
        assert_eq!(lp_norm(&f, &nu, f64::INFINITY).unwrap(), 3.0);
    }

    #[test]
    fn lp_norm_rejects_small_exponent() {
        let f = FiniteFunction::constant(2, 1.0);
        let nu = FiniteMeasure::new(vec![0.5, 0.5]).unwrap();
        assert!(matches!(lp_norm(&f, &nu, 0.5), Err(Error::InvalidInput(_))));
        assert!(matches!(lp_norm(&f, &nu, f64::NAN), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn dimension_mismatches_are_rejected() {
        let nu = FiniteMeasure::new(vec![1.0, 1.0, 1.0]).unwrap();
        assert!(matches!(
            pushforward(&two_state(), &nu),
            Err(Error::DimensionMismatch { .. })
        ));
        let f = FiniteFunction::constant(3, 1.0);
        assert!(apply_kernel(&two_state(), &f).is_err());
        assert!(lp_norm(&FiniteFunction::constant(2, 1.0), &nu, 2.0).is_err());
        let k3 = FiniteKernel::identity(3);
        assert!(compose_kernels(&two_state(), &k3).is_err());
    }

    #[test]
    fn kernel_validation() {
        assert!(FiniteKernel::new(vec![vec![0.5, 0.6]]).is_err());
        assert!(FiniteKernel::new(vec![vec![1.5, -0.5]]).is_err());
        assert!(FiniteKernel::new(vec![vec![0.5, 0.5], vec![1.0]]).is_err());
        assert!(FiniteMeasure::new(vec![0.0, 0.0]).is_err());
        assert!(FiniteMeasure::new(vec![-1.0, 2.0]).is_err());
        assert!(FiniteFunction::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn contraction_examples() {
        let nu = FiniteMeasure::new(vec![0.5, 0.5]).unwrap();
        let f = FiniteFunction::new(vec![1.0, -1.0]).unwrap();
        let r = check_contraction(&two_state(), &nu, &f, 2.0).unwrap();
        assert_abs_diff_eq!(r.lhs, 0.5f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(r.rhs, 1.0, epsilon = 1e-15);
        assert!(r.verdict.is_pass());

        let r = check_contraction(&FiniteKernel::identity(2), &nu, &f, 3.0).unwrap();
        assert_eq!(r.lhs, r.rhs);
        assert!(r.verdict.is_pass());
    }

    #[test]
    fn compose_with_identity_is_unchanged() {
        let k = two_state();
        assert_eq!(compose_kernels(&k, &FiniteKernel::identity(2)).unwrap(), k);
        assert_eq!(compose_kernels(&FiniteKernel::identity(2), &k).unwrap(), k);
    }

    #[test]
    fn composition_matches_iterated_operators() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let (a, b, c) = (
                rng.random_range(1..8),
                rng.random_range(1..8),
                rng.random_range(1..8),
            );
            let k1 = FiniteKernel::random(&mut rng, a, b);
            let k2 = FiniteKernel::random(&mut rng, b, c);
            let k12 = compose_kernels(&k1, &k2).unwrap();
            for x in 0..a {
                assert!((k12.row(x).iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
            let nu = FiniteMeasure::random_probability(&mut rng, a);
            let lhs = pushforward(&k12, &nu).unwrap();
            let rhs = pushforward(&k2, &pushforward(&k1, &nu).unwrap()).unwrap();
            for (l, r) in lhs.weights().iter().zip(rhs.weights()) {
                assert!((l - r).abs() < 1e-13);
            }
            let f = FiniteFunction::new((0..c).map(|_| rng.random_range(-2.0..2.0)).collect())
                .unwrap();
            let lhs = apply_kernel(&k12, &f).unwrap();
            let rhs = apply_kernel(&k1, &apply_kernel(&k2, &f).unwrap()).unwrap();
            for (l, r) in lhs.values().iter().zip(rhs.values()) {
                assert!((l - r).abs() < 1e-13);
            }
        }
    }
}
