use heatgauge::measure::{
    apply_kernel, check_contraction, compose_kernels, integrate, lp_norm, pushforward, FiniteFunction, FiniteKernel,
    FiniteMeasure, SweepInstance, SWEEP_EXPONENTS,
};
use num_rational::BigRational;
use num_traits::{FromPrimitive, Signed, ToPrimitive, Zero};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn instance(seed: u64) -> SweepInstance {
    SweepInstance::random(&mut ChaCha8Rng::seed_from_u64(seed), 8)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn averaging_operators_contract(seed in any::<u64>()) {
        let s = instance(seed);
        for &p in &SWEEP_EXPONENTS {
            let rep = check_contraction(&s.kernel, &s.nu1, &s.f, p).unwrap();
            prop_assert!(rep.verdict.is_pass(), "p={p}: {} > {}", rep.lhs, rep.rhs);
        }
    }

    #[test]
    fn pushforward_conserves_mass(seed in any::<u64>()) {
        let s = instance(seed);
        let nu2 = pushforward(&s.kernel, &s.nu1).unwrap();
        prop_assert!((nu2.total() - s.nu1.total()).abs() <= 1e-12);
        let one = FiniteFunction::constant(s.kernel.n_cols(), 1.0);
        let a1 = apply_kernel(&s.kernel, &one).unwrap();
        prop_assert!(a1.values().iter().all(|v| (v - 1.0).abs() <= 1e-12));
    }

    #[test]
    fn duality_between_kernel_and_pushforward(seed in any::<u64>()) {
        let s = instance(seed);
        let nu2 = pushforward(&s.kernel, &s.nu1).unwrap();
        let af = apply_kernel(&s.kernel, &s.f).unwrap();
        let lhs = integrate(&af, &s.nu1).unwrap();
        let rhs = integrate(&s.f, &nu2).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12);
    }

    #[test]
    fn jensen_holds_pointwise(seed in any::<u64>(), p in 1.0f64..6.0) {
        let s = instance(seed);
        let af = apply_kernel(&s.kernel, &s.f).unwrap();
        let a_fp = apply_kernel(&s.kernel, &s.f.abs_pow(p)).unwrap();
        for (l, r) in af.values().iter().zip(a_fp.values()) {
            prop_assert!(l.abs().powf(p) <= r + 1e-12);
        }
    }

    #[test]
    fn composition_contracts_through_intermediate_measure(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k1 = FiniteKernel::random(&mut rng, 4, 5);
        let k2 = FiniteKernel::random(&mut rng, 5, 3);
        let nu1 = FiniteMeasure::random_probability(&mut rng, 4);
        let f = FiniteFunction::new(vec![0.3, -1.0, 2.0]).unwrap();
        let k12 = compose_kernels(&k1, &k2).unwrap();
        let nu2 = pushforward(&k1, &nu1).unwrap();
        for &p in &SWEEP_EXPONENTS {
            let direct = check_contraction(&k12, &nu1, &f, p).unwrap();
            let second = check_contraction(&k2, &nu2, &f, p).unwrap();
            prop_assert!((direct.rhs - second.rhs).abs() <= 1e-12 * direct.rhs.max(1.0));
            prop_assert!(direct.lhs <= second.lhs + 1e-12);
        }
    }
}

/// Integer weights normalized exactly; the f64 copy is the rounded oracle input.
fn rational_instance(seed: u64) -> (Vec<Vec<BigRational>>, Vec<BigRational>, Vec<BigRational>) {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = rng.random_range(2..=5);
    let cols = rng.random_range(2..=5);
    let normalize = |w: Vec<i64>| {
        let total: i64 = w.iter().sum();
        w.into_iter().map(|x| BigRational::from_i64(x).unwrap() / BigRational::from_i64(total).unwrap()).collect::<Vec<_>>()
    };
    let kernel = (0..rows)
        .map(|_| {
            let mut w: Vec<i64> = (0..cols).map(|_| rng.random_range(0..=9)).collect();
            w[0] += 1;
            normalize(w)
        })
        .collect::<Vec<_>>();
    let nu1 = normalize((0..rows).map(|_| rng.random_range(1..=9)).collect());
    let f = (0..cols).map(|_| BigRational::from_i64(rng.random_range(-9..=9)).unwrap() / BigRational::from_i64(4).unwrap()).collect();
    (kernel, nu1, f)
}

fn to_f64(v: &[BigRational]) -> Vec<f64> {
    v.iter().map(|r| r.to_f64().unwrap()).collect()
}

/// `∫|g|ᵖ dν` exactly for integer `p`.
fn exact_power_sum(g: &[BigRational], nu: &[BigRational], p: i32) -> BigRational {
    g.iter().zip(nu).map(|(x, w)| x.abs().pow(p) * w).fold(BigRational::zero(), |a, b| a + b)
}

#[test]
fn norms_match_exact_rational_oracle() {
    for seed in 0..50 {
        let (kr, nur, fr) = rational_instance(seed);
        let cols = fr.len();
        let af_r: Vec<BigRational> = kr
            .iter()
            .map(|row| row.iter().zip(&fr).map(|(k, f)| k * f).fold(BigRational::zero(), |a, b| a + b))
            .collect();
        let nu2_r: Vec<BigRational> = (0..cols)
            .map(|j| kr.iter().zip(&nur).map(|(row, w)| &row[j] * w).fold(BigRational::zero(), |a, b| a + b))
            .collect();

        let kernel = FiniteKernel::new(kr.iter().map(|r| to_f64(r)).collect()).unwrap();
        let nu1 = FiniteMeasure::new(to_f64(&nur)).unwrap();
        let f = FiniteFunction::new(to_f64(&fr)).unwrap();
        let af = apply_kernel(&kernel, &f).unwrap();
        let nu2 = pushforward(&kernel, &nu1).unwrap();

        for p in [1, 2, 3, 10] {
            let pf = p as f64;
            for (g, g_r, nu, nu_r) in [(&af, &af_r, &nu1, &nur), (&f, &fr, &nu2, &nu2_r)] {
                let oracle = exact_power_sum(g_r, nu_r, p).to_f64().unwrap().powf(1.0 / pf);
                let got = lp_norm(g, nu, pf).unwrap();
                assert!((got - oracle).abs() <= 1e-12 * oracle.max(1.0), "seed {seed}, p={p}: {got} vs {oracle}");
            }
            let lhs = exact_power_sum(&af_r, &nur, p);
            let rhs = exact_power_sum(&fr, &nu2_r, p);
            assert!(lhs <= rhs, "exact contraction fails at seed {seed}, p={p}");
        }
        // Sup over the support of each measure.
        let sup = |g: &[BigRational], nu: &[BigRational]| {
            g.iter().zip(nu).filter(|(_, w)| !w.is_zero()).map(|(x, _)| x.abs()).max().unwrap()
        };
        let lhs = sup(&af_r, &nur);
        let rhs = sup(&fr, &nu2_r);
        assert!(lhs <= rhs);
        let got = lp_norm(&af, &nu1, f64::INFINITY).unwrap();
        assert!((got - lhs.to_f64().unwrap()).abs() <= 1e-12);
    }
}

#[test]
fn identity_kernel_is_an_isometry() {
    let nu = FiniteMeasure::new(vec![0.25, 0.5, 0.25]).unwrap();
    let f = FiniteFunction::new(vec![1.0, -2.0, 4.0]).unwrap();
    for &p in &SWEEP_EXPONENTS {
        let rep = check_contraction(&FiniteKernel::identity(3), &nu, &f, p).unwrap();
        assert!((rep.lhs - rep.rhs).abs() <= 1e-15);
    }
}

#[test]
fn malformed_inputs_are_rejected() {
    assert!(FiniteKernel::new(vec![vec![0.5, 0.4]]).is_err());
    assert!(FiniteKernel::new(vec![vec![1.5, -0.5]]).is_err());
    assert!(FiniteMeasure::new(vec![1.0, -0.1]).is_err());
    assert!(FiniteFunction::new(vec![f64::NAN]).is_err());
    let nu = FiniteMeasure::new(vec![1.0]).unwrap();
    let f = FiniteFunction::new(vec![1.0, 2.0]).unwrap();
    assert!(lp_norm(&f, &nu, 2.0).is_err());
    let f = FiniteFunction::new(vec![1.0]).unwrap();
    assert!(lp_norm(&f, &nu, 0.5).is_err());
}
