use std::collections::BTreeMap;
use std::fmt::{self, Debug};
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;

/// Scalar ring for polynomial coefficients.
pub trait Coefficient:
    Clone
    + PartialEq
    + Debug
    + fmt::Display
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
{
    fn from_ratio(num: i64, den: i64) -> Self;
    fn to_f64(&self) -> f64;
}

impl Coefficient for f64 {
    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }
    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Coefficient for num_rational::Rational64 {
    fn from_ratio(num: i64, den: i64) -> Self {
        num_rational::Rational64::new(num, den)
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

/// Exponents of `(x, y, z)`.
pub type Monomial = [u32; 3];

/// Multivariate polynomial in `(x, y, z)` in canonical form: zero
/// coefficients are never stored.
#[derive(Clone, PartialEq)]
pub struct Polynomial<C> {
    terms: BTreeMap<Monomial, C>,
}

impl<C: Coefficient> Polynomial<C> {
    pub fn zero() -> Self {
        Polynomial {
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(c: C) -> Self {
        Self::monomial([0, 0, 0], c)
    }

    pub fn monomial(exps: Monomial, c: C) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(exps, c);
        }
        Polynomial { terms }
    }

    /// The coordinate function `x`, `y` or `z` for `var = 0, 1, 2`.
    pub fn var(var: usize) -> Self {
        let mut e = [0; 3];
        e[var] = 1;
        Self::monomial(e, C::one())
    }

    pub fn x() -> Self {
        Self::var(0)
    }
    pub fn y() -> Self {
        Self::var(1)
    }
    pub fn z() -> Self {
        Self::var(2)
    }

    pub fn from_terms<I: IntoIterator<Item = (Monomial, C)>>(terms: I) -> Self {
        let mut p = Self::zero();
        for (e, c) in terms {
            p.add_term(e, c);
        }
        p
    }

    fn add_term(&mut self, e: Monomial, c: C) {
        if c.is_zero() {
            return;
        }
        let sum = match self.terms.remove(&e) {
            Some(old) => old + c,
            None => c,
        };
        if !sum.is_zero() {
            self.terms.insert(e, sum);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &C)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(|e| e[0] + e[1] + e[2]).max()
    }

    pub fn scale(&self, c: &C) -> Self {
        Self::from_terms(self.terms.iter().map(|(e, v)| (*e, v.clone() * c.clone())))
    }

    /// `∂/∂x_var`.
    pub fn derivative(&self, var: usize) -> Self {
        Self::from_terms(self.terms.iter().filter(|(e, _)| e[var] > 0).map(|(e, c)| {
            let mut ne = *e;
            ne[var] -= 1;
            (ne, c.clone() * C::from_ratio(e[var] as i64, 1))
        }))
    }

    pub fn eval(&self, p: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| c.to_f64() * p[0].powi(e[0] as i32) * p[1].powi(e[1] as i32) * p[2].powi(e[2] as i32))
            .sum()
    }

    pub fn to_f64(&self) -> Polynomial<f64> {
        Polynomial::from_terms(self.terms.iter().map(|(e, c)| (*e, c.to_f64())))
    }

    /// Random polynomial of total degree ≤ `max_degree` with integer
    /// coefficients in `[−bound, bound]`, each monomial present with
    /// probability ½.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, max_degree: u32, bound: i64) -> Self {
        let mut p = Self::zero();
        for i in 0..=max_degree {
            for j in 0..=(max_degree - i) {
                for k in 0..=(max_degree - i - j) {
                    if rng.random_bool(0.5) {
                        let c = rng.random_range(-bound..=bound);
                        p.add_term([i, j, k], C::from_ratio(c, 1));
                    }
                }
            }
        }
        p
    }
}

impl<C: Coefficient> Add for &Polynomial<C> {
    type Output = Polynomial<C>;
    fn add(self, rhs: Self) -> Polynomial<C> {
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(*e, c.clone());
        }
        out
    }
}

impl<C: Coefficient> Sub for &Polynomial<C> {
    type Output = Polynomial<C>;
    fn sub(self, rhs: Self) -> Polynomial<C> {
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(*e, -c.clone());
        }
        out
    }
}

impl<C: Coefficient> Mul for &Polynomial<C> {
    type Output = Polynomial<C>;
    fn mul(self, rhs: Self) -> Polynomial<C> {
        let mut out = Polynomial::zero();
        for (e1, c1) in &self.terms {
            for (e2, c2) in &rhs.terms {
                out.add_term(
                    [e1[0] + e2[0], e1[1] + e2[1], e1[2] + e2[2]],
                    c1.clone() * c2.clone(),
                );
            }
        }
        out
    }
}

impl<C: Coefficient> Neg for &Polynomial<C> {
    type Output = Polynomial<C>;
    fn neg(self) -> Polynomial<C> {
        Polynomial::from_terms(self.terms.iter().map(|(e, c)| (*e, -c.clone())))
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl<C: Coefficient> $tr for Polynomial<C> {
            type Output = Polynomial<C>;
            fn $m(self, rhs: Self) -> Polynomial<C> {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl<C: Coefficient> Debug for Polynomial<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl<C: Coefficient> fmt::Display for Polynomial<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        let names = ["x", "y", "z"];
        let mut first = true;
        for (e, c) in self.terms.iter().rev() {
            if !first {
                f.write_str(" + ")?;
            }
            first = false;
            let mut factors = Vec::new();
            let is_const = e.iter().all(|&k| k == 0);
            if !c.is_one() || is_const {
                factors.push(format!("{c}"));
            }
            for (v, &k) in names.iter().zip(e) {
                match k {
                    0 => {}
                    1 => factors.push(v.to_string()),
                    _ => factors.push(format!("{v}^{k}")),
                }
            }
            f.write_str(&factors.join("*"))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gamma::{ExactPoly, Rational};

    #[test]
    fn canonical_form_drops_zeros() {
        let x = ExactPoly::x();
        let p = &x - &x;
        assert!(p.is_zero());
        assert_eq!(p.degree(), None);
        assert_eq!(p, ExactPoly::zero());
    }

    #[test]
    fn derivative_and_eval() {
        // p = 3x²y − z/2
        let p = ExactPoly::from_terms([
            ([2, 1, 0], Rational::from_integer(3)),
            ([0, 0, 1], Rational::new(-1, 2)),
        ]);
        assert_eq!(p.derivative(0), ExactPoly::monomial([1, 1, 0], Rational::from_integer(6)));
        assert_eq!(p.derivative(2), ExactPoly::constant(Rational::new(-1, 2)));
        assert_eq!(p.eval(&[1.0, 2.0, 4.0]), 6.0 - 2.0);
        assert_eq!(p.degree(), Some(3));
    }

    #[test]
    fn product_rule_holds_exactly() {
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(3);
        for _ in 0..50 {
            let f = ExactPoly::random(&mut rng, 3, 4);
            let g = ExactPoly::random(&mut rng, 3, 4);
            for v in 0..3 {
                let lhs = (&f * &g).derivative(v);
                let rhs = &(&f.derivative(v) * &g) + &(&f * &g.derivative(v));
                assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn display_is_readable() {
        let p = ExactPoly::from_terms([([1, 1, 0], Rational::one()), ([0, 0, 0], Rational::new(1, 2))]);
        assert_eq!(p.to_string(), "x*y + 1/2");
    }
}
