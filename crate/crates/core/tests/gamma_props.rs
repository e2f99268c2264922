use heatgauge::gamma::{
    apply_field, check_cd, gamma, gamma2, gamma2_z, gamma_z, heat_semigroup, l_op, CdParams, Convention, ExactPoly,
    Rational, VectorField,
};
use heatgauge::verifier::suites::{lattice, NUS};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn poly(seed: u64, degree: u32) -> ExactPoly {
    ExactPoly::random(&mut ChaCha8Rng::seed_from_u64(seed), degree, 3)
}

fn unit_points() -> impl Strategy<Value = [f64; 3]> {
    (-2.0f64..2.0, -2.0f64..2.0, -2.0f64..2.0).prop_map(|(x, y, z)| [x, y, z])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn bracket_of_horizontal_fields_is_vertical(seed in any::<u64>()) {
        let f = poly(seed, 4);
        let (y1, y2, z) = (VectorField::y1(), VectorField::y2(), VectorField::z());
        let bracket = &apply_field(&y1, &apply_field(&y2, &f)) - &apply_field(&y2, &apply_field(&y1, &f));
        prop_assert_eq!(bracket, apply_field(&z, &f));
        // Z is central.
        prop_assert_eq!(apply_field(&z, &apply_field(&y1, &f)), apply_field(&y1, &apply_field(&z, &f)));
        prop_assert_eq!(apply_field(&z, &apply_field(&y2, &f)), apply_field(&y2, &apply_field(&z, &f)));
    }

    #[test]
    fn carre_du_champ_is_the_defect_of_leibniz(seed in any::<u64>()) {
        let f = poly(seed, 3);
        let g = poly(seed.wrapping_add(1), 3);
        let conv = Convention::Unit;
        let lhs = l_op(&(&f * &g), conv);
        let rhs = &(&(&f * &l_op(&g, conv)) + &(&g * &l_op(&f, conv))) + &gamma(&f, &g).scale(&Rational::from_integer(2));
        prop_assert_eq!(lhs, rhs);
        prop_assert_eq!(gamma(&f, &g), gamma(&g, &f));
        prop_assert_eq!(gamma_z(&f, &g), gamma_z(&g, &f));
    }

    #[test]
    fn curvature_dimension_holds_for_random_polynomials(seed in any::<u64>(), p in unit_points()) {
        let f = poly(seed, 3);
        let m = check_cd(&f, &CdParams::HEISENBERG, &[p], &NUS, Convention::Unit).unwrap();
        prop_assert!(m.worst_margin >= -1e-9, "margin {}", m.worst_margin);
    }

    #[test]
    fn gamma_forms_are_nonnegative(seed in any::<u64>(), p in unit_points()) {
        let f = poly(seed, 3);
        prop_assert!(gamma(&f, &f).eval(&p) >= 0.0);
        prop_assert!(gamma_z(&f, &f).eval(&p) >= 0.0);
        // Γ₂ᶻ(f) = Γ(Zf) is a sum of squares as well.
        let zf = apply_field(&VectorField::z(), &f);
        prop_assert_eq!(gamma2_z(&f, Convention::Unit), gamma(&zf, &zf));
    }

    #[test]
    fn heat_semigroup_is_a_semigroup(seed in any::<u64>()) {
        let f = poly(seed, 4);
        let s = Rational::new(1, 5);
        let t = Rational::new(2, 3);
        for conv in [Convention::Unit, Convention::Half] {
            let composed = heat_semigroup(&heat_semigroup(&f, &s, conv), &t, conv);
            prop_assert_eq!(&composed, &heat_semigroup(&f, &(s + t), conv));
            prop_assert_eq!(heat_semigroup(&f, &Rational::from_integer(0), conv), f.clone());
            // Commutes with its generator.
            prop_assert_eq!(l_op(&heat_semigroup(&f, &t, conv), conv), heat_semigroup(&l_op(&f, conv), &t, conv));
        }
    }
}

#[test]
fn heat_semigroup_fixes_harmonic_polynomials() {
    let (x, y, z) = (ExactPoly::x(), ExactPoly::y(), ExactPoly::z());
    let t = Rational::new(7, 3);
    for f in [x.clone(), z.clone(), &x * &y, &(&x * &x) - &(&y * &y)] {
        assert!(l_op(&f, Convention::Half).is_zero());
        assert_eq!(heat_semigroup(&f, &t, Convention::Half), f);
    }
    // E[X_t²] = t and E[Z_t²] = t²/4 under ½(Y₁² + Y₂²), from the identity.
    let ex2 = heat_semigroup(&(&x * &x), &t, Convention::Half);
    assert_eq!(ex2.eval(&[0.0; 3]), 7.0 / 3.0);
    let ez2 = heat_semigroup(&(&z * &z), &t, Convention::Half);
    assert!((ez2.eval(&[0.0; 3]) - (7.0f64 / 3.0).powi(2) / 4.0).abs() < 1e-14);
}

#[test]
fn vertical_coordinate_is_the_curvature_witness() {
    let z = ExactPoly::z();
    let conv = Convention::Unit;
    assert_eq!(gamma2(&z, conv), ExactPoly::constant(Rational::new(1, 2)));
    assert_eq!(gamma2_z(&z, conv), ExactPoly::zero());
    assert_eq!(gamma(&z, &z).eval(&[0.0; 3]), 0.0);
    let m = check_cd(&z, &CdParams::HEISENBERG, &[[0.0; 3]], &[1.0], conv).unwrap();
    assert!(m.worst_margin.abs() <= 1e-12);
    let tighter = CdParams::new(0.0, 0.5 * 1.05, 1.0, 2.0).unwrap();
    let m = check_cd(&z, &tighter, &[[0.0; 3]], &[1.0], conv).unwrap();
    assert!(!m.pass);
}

#[test]
fn catalog_polynomials_satisfy_curvature_dimension_on_the_lattice() {
    for (id, m) in heatgauge::verifier::suites::cd_table().unwrap() {
        assert!(m.worst_margin >= -1e-9, "{id}: {}", m.worst_margin);
    }
    assert_eq!(lattice().len(), 125);
}

#[test]
fn cd_parameters_are_validated() {
    assert!(CdParams::new(0.0, 0.0, 1.0, 2.0).is_err());
    assert!(CdParams::new(0.0, 0.5, -1.0, 2.0).is_err());
    assert!(CdParams::new(0.0, 0.5, 1.0, 0.5).is_err());
    assert!(check_cd(&ExactPoly::x(), &CdParams::HEISENBERG, &[], &[1.0], Convention::Unit).is_err());
    assert!(check_cd(&ExactPoly::x(), &CdParams::HEISENBERG, &[[0.0; 3]], &[0.0], Convention::Unit).is_err());
}

#[test]
fn pointwise_exponent_has_multiplier_five() {
    let c = CdParams::HEISENBERG;
    // (p/(p−1))·(1 + 2κ/ρ₂)/(4t) with p = 2, t = 1.
    assert!((c.pointwise_exponent(2.0, 1.0) - 2.0 * 5.0 / 4.0).abs() < 1e-15);
}
