use approx::assert_relative_eq;
use heatgauge::diffusion::{
    exit_time_probe, load_or_simulate, locality_probe, reflection_exit_probability, simulate, simulate_coupled, Scheme,
    SimConfig,
};
use heatgauge::estimators::{
    heat_op, heat_op_from_batch, lp_norm, lp_norm_from_batch, smoothed_lp_norm, Evaluation, NestedEvaluation,
};
use heatgauge::geometry::{function_by_id, TestFunction};
use heatgauge::verifier::suites::{fit_gaussian_form, hypercontractive_exponent, ks_distance};
use heatgauge::verifier::Method;
use heatgauge::{Geometry, Point};
use statrs::distribution::{ContinuousCDF, Normal};

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

#[test]
fn batches_do_not_depend_on_thread_count() {
    for g in [Geometry::Euclidean(2), Geometry::Hyperbolic3, Geometry::Heisenberg] {
        let cfg = SimConfig::default_for(g, 0.5, 3000, 11).with_paths(3000);
        let a = in_pool(1, || simulate(g, &g.origin(), 0.5, &cfg).unwrap());
        let b = in_pool(3, || simulate(g, &g.origin(), 0.5, &cfg).unwrap());
        assert_eq!(a.coords(), b.coords(), "{g}");
        let c = simulate(g, &g.origin(), 0.5, &cfg.with_seed(12)).unwrap();
        assert_ne!(a.coords(), c.coords());
    }
}

#[test]
fn euclidean_moments_match_closed_forms() {
    let g = Geometry::Euclidean(3);
    let t = 0.8;
    let cfg = SimConfig::default_for(g, t, 200_000, 3);
    let batch = simulate(g, &g.origin(), t, &cfg).unwrap();
    let x1 = function_by_id(g, "x1").unwrap();
    let r2 = function_by_id(g, "|x|^2").unwrap();
    let m1 = heat_op_from_batch(&x1, &batch).unwrap();
    let m2 = heat_op_from_batch(&r2, &batch).unwrap();
    assert!(m1.value.abs() <= 4.0 * m1.stderr);
    assert!((m2.value - 3.0 * t).abs() <= 4.0 * m2.stderr);
    assert_eq!(m1.method, Method::Mc);
}

#[test]
fn heisenberg_moments_match_polynomial_oracle() {
    let g = Geometry::Heisenberg;
    let t = 1.0;
    let cfg = SimConfig::default_for(g, t, 100_000, 5);
    let batch = simulate(g, &g.origin(), t, &cfg).unwrap();
    let xx = heat_op_from_batch(&function_by_id(g, "x^2").unwrap(), &batch).unwrap();
    assert!((xx.value - t).abs() <= 4.0 * xx.stderr);
    let zz = TestFunction::new("z^2", heatgauge::geometry::FunctionClass::Generic, heatgauge::geometry::Growth::Polynomial, |p| {
        p[2] * p[2]
    });
    let e = heat_op_from_batch(&zz, &batch).unwrap();
    // Discretization bias of the Lévy area second moment is t²/(4N) with N = 1024 steps.
    assert!((e.value - t * t / 4.0).abs() <= 4.0 * e.stderr + t * t / 4096.0);
}

#[test]
fn euclidean_quadrature_norms_are_closed_forms() {
    let g = Geometry::Euclidean(1);
    let x1 = function_by_id(g, "x1").unwrap();
    for t in [0.25, 1.0, 4.0] {
        let e = lp_norm(g, &x1, &g.origin(), t, 2.0, &Evaluation::Quadrature).unwrap();
        assert_relative_eq!(e.value, t.sqrt(), max_relative = 1e-10);
        assert_eq!(e.stderr, 0.0);
        let h = heat_op(g, &x1, &Point::new(vec![0.7]), t, &Evaluation::Quadrature).unwrap();
        assert_relative_eq!(h.value, 0.7, max_relative = 1e-10);
    }
    // ‖e^{ax}‖_{Lᵖ(μ_T)} = e^{a²pT/2}.
    let f = function_by_id(g, "exp(1*x1)").unwrap();
    let e = lp_norm(g, &f, &g.origin(), 1.0, 3.0, &Evaluation::Quadrature).unwrap();
    assert_relative_eq!(e.value, 1.5f64.exp(), max_relative = 1e-12);
    // L¹ norm of |x| under N(0, t) is √(2t/π).
    let e = lp_norm(g, &x1, &g.origin(), 2.0, 1.0, &Evaluation::Quadrature).unwrap();
    assert_relative_eq!(e.value, (4.0 / std::f64::consts::PI).sqrt(), max_relative = 1e-9);
}

#[test]
fn hyperbolic_poisson_norm_and_heat_operator() {
    let g = Geometry::Hyperbolic3;
    let f = function_by_id(g, "poisson").unwrap();
    let e = lp_norm(g, &f, &g.origin(), 1.0, 2.0, &Evaluation::Quadrature).unwrap();
    assert_relative_eq!(e.value, 2.0f64.exp(), max_relative = 1e-9);
    let x = Point::new(vec![0.4, -0.2, 0.7]);
    let h = heat_op(g, &f, &x, 0.5, &Evaluation::Quadrature).unwrap();
    assert_relative_eq!(h.value, f.eval(x.coords()), max_relative = 1e-9);
    let cfg = SimConfig::default_for(g, 1.0, 50_000, 9);
    let mc = lp_norm(g, &f, &g.origin(), 1.0, 2.0, &Evaluation::Mc(cfg)).unwrap();
    assert!((mc.value - e.value).abs() <= 4.0 * mc.stderr + 0.05 * e.value);
}

#[test]
fn monte_carlo_agrees_with_quadrature_on_ball_indicator() {
    let g = Geometry::Hyperbolic3;
    let f = function_by_id(g, "ball(1)").unwrap();
    let q = lp_norm(g, &f, &g.origin(), 0.5, 2.0, &Evaluation::Quadrature).unwrap();
    let batch = simulate(g, &g.origin(), 0.5, &SimConfig::default_for(g, 0.5, 40_000, 2)).unwrap();
    let mc = lp_norm_from_batch(&f, &batch, 2.0).unwrap();
    assert!((mc.value - q.value).abs() <= 4.0 * mc.stderr + 2e-3, "{} vs {}", mc.value, q.value);
}

#[test]
fn smoothed_norm_is_exact_for_exponentials() {
    let g = Geometry::Euclidean(1);
    let f = function_by_id(g, "exp(1*x1)").unwrap();
    let o = g.origin();
    let q = smoothed_lp_norm(g, &f, &o, 0.5, 0.5, 2.0, &NestedEvaluation::Quadrature).unwrap();
    // e^{s/2} · e^{pT/2} with s = T = ½, p = 2.
    assert_relative_eq!(q.estimate.value, (0.25f64 + 0.5).exp(), max_relative = 1e-12);
    let outer = SimConfig::default_for(g, 0.5, 4000, 1);
    let inner = SimConfig::default_for(g, 0.5, 4000, 2);
    let mc = smoothed_lp_norm(g, &f, &o, 0.5, 0.5, 2.0, &NestedEvaluation::Mc { outer, inner }).unwrap();
    assert!(mc.bias_bound >= 0.0);
    assert!((mc.estimate.value - q.estimate.value).abs() <= 4.0 * mc.estimate.stderr + mc.bias_bound);
}

#[test]
fn estimators_reject_bad_inputs() {
    let g = Geometry::Euclidean(1);
    let f = function_by_id(g, "x1").unwrap();
    assert!(lp_norm(g, &f, &g.origin(), 1.0, 0.5, &Evaluation::Quadrature).is_err());
    assert!(lp_norm(g, &f, &g.origin(), -1.0, 2.0, &Evaluation::Quadrature).is_err());
    assert!(SimConfig::new(0.0, 10, 1, Scheme::Euler).is_err());
    assert!(SimConfig::new(0.1, 0, 1, Scheme::Euler).is_err());
    let h = Geometry::Heisenberg;
    let fh = function_by_id(h, "x").unwrap();
    assert!(lp_norm(h, &fh, &h.origin(), 1.0, 2.0, &Evaluation::Quadrature).is_err());
    assert!(function_by_id(g, "nope").is_err());
    assert!(function_by_id(g, "exp(1*x2)").is_err());
}

#[test]
fn locality_probe_matches_chi_square() {
    let g = Geometry::Euclidean(1);
    let cfg = SimConfig::default_for(g, 0.25, 100_000, 4);
    let p = locality_probe(g, &g.origin(), 1.0, 0.25, &cfg).unwrap();
    let exact = 2.0 * Normal::new(0.0, 1.0).unwrap().cdf(2.0) - 1.0;
    assert!((p.value - exact).abs() <= 4.0 * p.stderr);
    assert_eq!(locality_probe(g, &g.origin(), 1.0, 0.0, &cfg).unwrap().value, 1.0);
}

#[test]
fn exit_probe_is_bracketed_by_reflection_series() {
    let g = Geometry::Euclidean(1);
    let cfg = SimConfig::new(1.0 / 4096.0, 20_000, 8, Scheme::Euler).unwrap();
    let p = exit_time_probe(g, &g.origin(), 1.0, 0.5, &cfg).unwrap();
    let exact = reflection_exit_probability(1.0, 0.5);
    assert!(p.skeleton_only);
    // The skeleton misses crossings between steps, so it can only undercount.
    assert!(p.value <= exact + 4.0 * p.stderr);
    assert!(p.value >= exact - 0.03 - 4.0 * p.stderr);
    assert!(reflection_exit_probability(1.0, 0.1) < exact);
    assert_eq!(reflection_exit_probability(1.0, 0.0), 0.0);
}

#[test]
fn coupled_levels_share_noise() {
    let g = Geometry::Hyperbolic3;
    let cfg = SimConfig::new(1.0 / 64.0, 2000, 6, Scheme::Euler).unwrap();
    let levels = simulate_coupled(g, &g.origin(), 1.0, &cfg, 3).unwrap();
    assert_eq!(levels.len(), 3);
    let fine = simulate(g, &g.origin(), 1.0, &cfg).unwrap();
    assert_eq!(levels[0].coords(), fine.coords());
    let gap = |a: usize, b: usize| -> f64 {
        levels[a].endpoints().zip(levels[b].endpoints()).map(|(p, q)| g.distance(p, q).unwrap()).sum::<f64>()
            / 2000.0
    };
    let other = simulate(g, &g.origin(), 1.0, &cfg.with_seed(7)).unwrap();
    let independent = levels[0]
        .endpoints()
        .zip(other.endpoints())
        .map(|(p, q)| g.distance(p, q).unwrap())
        .sum::<f64>()
        / 2000.0;
    assert!(gap(0, 1) < 0.25 * independent, "{} vs {independent}", gap(0, 1));
    assert!(gap(0, 1) < gap(0, 2));
}

#[test]
fn cached_batches_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let g = Geometry::Heisenberg;
    let cfg = SimConfig::default_for(g, 0.5, 500, 21);
    let a = load_or_simulate(dir.path(), g, &g.origin(), 0.5, &cfg).unwrap();
    let b = load_or_simulate(dir.path(), g, &g.origin(), 0.5, &cfg).unwrap();
    assert_eq!(a, b);
}

#[test]
fn ks_distance_of_exact_sample_is_small() {
    let g = Geometry::Euclidean(1);
    let batch = simulate(g, &g.origin(), 1.0, &SimConfig::default_for(g, 1.0, 50_000, 13)).unwrap();
    let normal = Normal::new(0.0, 1.0).unwrap();
    let sample: Vec<f64> = batch.endpoints().map(|p| p[0]).collect();
    let d = ks_distance(sample.clone(), |x| normal.cdf(x));
    assert!(d < 1.63 / (50_000f64).sqrt(), "KS {d}");
    let shifted = ks_distance(sample, |x| normal.cdf(x - 0.1));
    assert!(shifted > 0.03);
}

#[test]
fn gaussian_form_fit_recovers_planted_parameters() {
    let beta = [0.3, -1.5, -0.5, 0.8];
    let mut samples = Vec::new();
    for t in [0.25f64, 0.5, 1.0, 2.0] {
        for k in 0..6 {
            let d = 0.5 * k as f64;
            let v = beta[0] + beta[1] * (1.0 + 0.5 / t).ln() + beta[2] * t - beta[3] * d * d / (2.0 * t);
            samples.push((t, d, v));
        }
    }
    let fit = fit_gaussian_form(&samples).unwrap();
    for (a, b) in fit.beta.iter().zip(&beta) {
        assert!((a - b).abs() < 1e-9);
    }
    assert!((fit.rate - 0.8).abs() < 1e-9);
    assert!((fit.nu + 3.0).abs() < 1e-9);
    assert!(fit.rms_residual < 1e-9);
}

#[test]
fn gaussian_form_fit_rejects_degenerate_designs() {
    assert!(fit_gaussian_form(&[(1.0, 0.5, -1.0)]).is_none());
    // One time only: the time columns are collinear with the intercept.
    let one_time: Vec<_> = (0..10).map(|k| (1.0, 0.1 * k as f64, -(k as f64))).collect();
    assert!(fit_gaussian_form(&one_time).is_none());
}

#[test]
fn hypercontractive_exponent_limits() {
    assert_eq!(hypercontractive_exponent(2.0, 0.0, 1.0, 0.5), 3.0);
    let near = hypercontractive_exponent(2.0, 1e-9, 1.0, 0.5);
    assert!((near - 3.0).abs() < 1e-6);
    // Positive curvature bound K shrinks the gain.
    assert!(hypercontractive_exponent(2.0, 2.0, 1.0, 0.5) < 3.0);
    assert!(hypercontractive_exponent(2.0, 2.0, 1.0, 0.5) > 2.0);
}
