//! Exact Γ-calculus for left-invariant vector fields on the Heisenberg group.

mod calculus;
mod polynomial;

pub use calculus::{
    apply_field, check_cd, gamma, gamma2, gamma2_z, gamma_z, heat_semigroup, l_op, CdMargin, CdParams,
    Convention, VectorField,
};
pub use polynomial::{Coefficient, Monomial, Polynomial};

/// Exact rational coefficients.
pub type Rational = num_rational::Rational64;

/// Polynomial with exact rational coefficients.
pub type ExactPoly = Polynomial<Rational>;
