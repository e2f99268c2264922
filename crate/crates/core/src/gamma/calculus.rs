use serde::{Deserialize, Serialize};

use super::polynomial::{Coefficient, Polynomial};
use crate::error::{Error, Result};

/// Slack for the curvature-dimension margin.
pub const CD_TOL: f64 = 1e-9;

/// `a∂x + b∂y + c∂z` with polynomial coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField<C: Coefficient> {
    pub a: Polynomial<C>,
    pub b: Polynomial<C>,
    pub c: Polynomial<C>,
}

impl<C: Coefficient> VectorField<C> {
    /// `Y₁ = ∂x − (y/2)∂z`.
    pub fn y1() -> Self {
        VectorField {
            a: Polynomial::constant(C::one()),
            b: Polynomial::zero(),
            c: Polynomial::monomial([0, 1, 0], C::from_ratio(-1, 2)),
        }
    }

    /// `Y₂ = ∂y + (x/2)∂z`.
    pub fn y2() -> Self {
        VectorField {
            a: Polynomial::zero(),
            b: Polynomial::constant(C::one()),
            c: Polynomial::monomial([1, 0, 0], C::from_ratio(1, 2)),
        }
    }

    /// The vertical field `Z = ∂z`.
    pub fn z() -> Self {
        VectorField {
            a: Polynomial::zero(),
            b: Polynomial::zero(),
            c: Polynomial::constant(C::one()),
        }
    }
}

pub fn apply_field<C: Coefficient>(v: &VectorField<C>, f: &Polynomial<C>) -> Polynomial<C> {
    let fx = &v.a * &f.derivative(0);
    let fy = &v.b * &f.derivative(1);
    let fz = &v.c * &f.derivative(2);
    &(&fx + &fy) + &fz
}

/// Normalization of the sub-Laplacian: `L = c·(Y₁² + Y₂²)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Convention {
    /// `c = 1`, the normalization the curvature-dimension constants are quoted in.
    Unit,
    /// `c = ½`, the generator of the diffusion.
    Half,
}

impl Convention {
    fn factor<C: Coefficient>(self) -> C {
        match self {
            Convention::Unit => C::one(),
            Convention::Half => C::from_ratio(1, 2),
        }
    }

    pub fn as_f64(self) -> f64 {
        match self {
            Convention::Unit => 1.0,
            Convention::Half => 0.5,
        }
    }
}

pub fn l_op<C: Coefficient>(f: &Polynomial<C>, conv: Convention) -> Polynomial<C> {
    let y1 = VectorField::y1();
    let y2 = VectorField::y2();
    let s = &apply_field(&y1, &apply_field(&y1, f)) + &apply_field(&y2, &apply_field(&y2, f));
    s.scale(&conv.factor())
}

/// `e^{tL}f = Σₖ tᵏLᵏf/k!` for a polynomial `f`. `L` lowers the weighted
/// degree (`x`, `y` of weight 1, `z` of weight 2) by two, so the series
/// terminates and the result is exact.
pub fn heat_semigroup<C: Coefficient>(f: &Polynomial<C>, t: &C, conv: Convention) -> Polynomial<C> {
    let mut out = f.clone();
    let mut term = f.clone();
    let mut k = 1i64;
    loop {
        term = l_op(&term, conv).scale(&(t.clone() * C::from_ratio(1, k)));
        if term.is_zero() {
            return out;
        }
        out = &out + &term;
        k += 1;
    }
}

/// `Γ(f, g) = (Y₁f)(Y₁g) + (Y₂f)(Y₂g)`.
pub fn gamma<C: Coefficient>(f: &Polynomial<C>, g: &Polynomial<C>) -> Polynomial<C> {
    let y1 = VectorField::y1();
    let y2 = VectorField::y2();
    &(&apply_field(&y1, f) * &apply_field(&y1, g)) + &(&apply_field(&y2, f) * &apply_field(&y2, g))
}

/// `Γᶻ(f, g) = (Zf)(Zg)`.
pub fn gamma_z<C: Coefficient>(f: &Polynomial<C>, g: &Polynomial<C>) -> Polynomial<C> {
    let z = VectorField::z();
    &apply_field(&z, f) * &apply_field(&z, g)
}

/// `Γ₂(f, f) = ½(LΓ(f, f) − 2Γ(f, Lf))`.
pub fn gamma2<C: Coefficient>(f: &Polynomial<C>, conv: Convention) -> Polynomial<C> {
    let lf = l_op(f, conv);
    let a = l_op(&gamma(f, f), conv);
    let b = gamma(f, &lf).scale(&C::from_ratio(2, 1));
    (&a - &b).scale(&C::from_ratio(1, 2))
}

/// `Γ₂ᶻ(f, f) = ½(LΓᶻ(f, f) − 2Γᶻ(f, Lf))`.
pub fn gamma2_z<C: Coefficient>(f: &Polynomial<C>, conv: Convention) -> Polynomial<C> {
    let lf = l_op(f, conv);
    let a = l_op(&gamma_z(f, f), conv);
    let b = gamma_z(f, &lf).scale(&C::from_ratio(2, 1));
    (&a - &b).scale(&C::from_ratio(1, 2))
}

/// Parameters of the generalized curvature-dimension inequality
/// `CD(ρ₁, ρ₂, κ, d)`; `d` may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CdParams {
    pub rho1: f64,
    pub rho2: f64,
    pub kappa: f64,
    pub d: f64,
}

impl CdParams {
    /// The Heisenberg group: `CD(0, ½, 1, 2)` for `L = Y₁² + Y₂²`.
    pub const HEISENBERG: CdParams = CdParams {
        rho1: 0.0,
        rho2: 0.5,
        kappa: 1.0,
        d: 2.0,
    };

    pub fn new(rho1: f64, rho2: f64, kappa: f64, d: f64) -> Result<Self> {
        if !(rho2 > 0.0) || !(kappa >= 0.0) || !(d >= 1.0) || !rho1.is_finite() {
            return Err(Error::invalid(format!(
                "CD parameters need ρ₂ > 0, κ ≥ 0, d ≥ 1 (got ρ₁={rho1}, ρ₂={rho2}, κ={kappa}, d={d})"
            )));
        }
        Ok(CdParams {
            rho1,
            rho2,
            kappa,
            d,
        })
    }

    /// `ρ₁⁻ = max(−ρ₁, 0)`.
    pub fn rho1_minus(&self) -> f64 {
        (-self.rho1).max(0.0)
    }

    /// Coefficient of `d²(x, o)` in the pointwise bound for harmonic functions:
    /// `(p/(p−1)) (1 + 2κ/ρ₂ + 2ρ₁⁻ t)/(4t)`.
    pub fn pointwise_exponent(&self, p: f64, t: f64) -> f64 {
        p / (p - 1.0) * (1.0 + 2.0 * self.kappa / self.rho2 + 2.0 * self.rho1_minus() * t) / (4.0 * t)
    }
}

/// Worst curvature-dimension margin over a sample of points and `ν` values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdMargin {
    pub worst_margin: f64,
    pub witness_point: [f64; 3],
    pub witness_nu: f64,
    /// `Γ₂ + νΓ₂ᶻ` at the witness.
    pub lhs: f64,
    /// `(1/d)(Lf)² + (ρ₁ − κ/ν)Γ + ρ₂Γᶻ` at the witness.
    pub rhs: f64,
    pub pass: bool,
}

/// The five polynomials entering the CD inequality, computed once per `f`.
struct CdForms {
    g2: Polynomial<f64>,
    g2z: Polynomial<f64>,
    lf: Polynomial<f64>,
    g: Polynomial<f64>,
    gz: Polynomial<f64>,
}

impl CdForms {
    fn new<C: Coefficient>(f: &Polynomial<C>, conv: Convention) -> Self {
        CdForms {
            g2: gamma2(f, conv).to_f64(),
            g2z: gamma2_z(f, conv).to_f64(),
            lf: l_op(f, conv).to_f64(),
            g: gamma(f, f).to_f64(),
            gz: gamma_z(f, f).to_f64(),
        }
    }

    fn sides(&self, params: &CdParams, p: &[f64], nu: f64) -> (f64, f64) {
        let lf = self.lf.eval(p);
        let inv_d = if params.d.is_infinite() { 0.0 } else { 1.0 / params.d };
        let lhs = self.g2.eval(p) + nu * self.g2z.eval(p);
        let rhs = inv_d * lf * lf + (params.rho1 - params.kappa / nu) * self.g.eval(p)
            + params.rho2 * self.gz.eval(p);
        (lhs, rhs)
    }
}

/// Minimum over `points × nus` of
/// `Γ₂ + νΓ₂ᶻ − (1/d)(Lf)² − (ρ₁ − κ/ν)Γ − ρ₂Γᶻ`; the forms are built
/// exactly and only evaluated in floating point.
pub fn check_cd<C: Coefficient>(
    f: &Polynomial<C>,
    params: &CdParams,
    points: &[[f64; 3]],
    nus: &[f64],
    conv: Convention,
) -> Result<CdMargin> {
    if points.is_empty() || nus.is_empty() {
        return Err(Error::invalid("CD check needs at least one point and one ν"));
    }
    if let Some(nu) = nus.iter().find(|&&nu| !(nu > 0.0)) {
        return Err(Error::invalid(format!("ν must be positive, got {nu}")));
    }
    let forms = CdForms::new(f, conv);
    let mut best: Option<CdMargin> = None;
    for p in points {
        for &nu in nus {
            let (lhs, rhs) = forms.sides(params, p, nu);
            let margin = lhs - rhs;
            if best.as_ref().is_none_or(|b| margin < b.worst_margin) {
                best = Some(CdMargin {
                    worst_margin: margin,
                    witness_point: *p,
                    witness_nu: nu,
                    lhs,
                    rhs,
                    pass: margin >= -CD_TOL,
                });
            }
        }
    }
    Ok(best.expect("non-empty sample"))
}
