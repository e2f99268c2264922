use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::Ctx;
use crate::error::Result;
use crate::measure::{
    apply_kernel, check_contraction, integrate, pushforward, FiniteFunction, SweepInstance, STOCHASTIC_TOL,
    SWEEP_EXPONENTS,
};
use crate::verifier::report::{InequalityReport, Method, Provenance, Relation, Verdict};

const MAX_SIZE: usize = 8;

/// Worst case over the sweep of a quantity that must vanish or stay below a bound.
struct Worst {
    index: usize,
    lhs: f64,
    rhs: f64,
    excess: f64,
    violations: usize,
}

impl Worst {
    fn new() -> Self {
        Worst {
            index: 0,
            lhs: 0.0,
            rhs: 0.0,
            excess: f64::NEG_INFINITY,
            violations: 0,
        }
    }

    /// Records `lhs − rhs` against the absolute slack.
    fn push(&mut self, index: usize, lhs: f64, rhs: f64, excess: f64) {
        if excess > STOCHASTIC_TOL || excess.is_nan() {
            self.violations += 1;
        }
        if excess > self.excess || excess.is_nan() {
            *self = Worst {
                index,
                lhs,
                rhs,
                excess,
                violations: self.violations,
            };
        }
    }

    fn verdict(&self) -> Verdict {
        if self.violations == 0 {
            Verdict::PassExact
        } else {
            Verdict::Fail
        }
    }
}

fn row(ctx: &Ctx, claim: &str, relation: Relation, w: &Worst, n: usize, what: &str) -> InequalityReport {
    InequalityReport::new(
        claim,
        &ctx.gname(),
        "f",
        format!(
            "{n} random instances, {what}; worst #{} ({} violations beyond {STOCHASTIC_TOL:e})",
            w.index, w.violations
        ),
        relation,
        w.lhs,
        w.rhs,
        0.0,
        0.0,
        0.0,
        Provenance {
            seed: Some(ctx.seed),
            n,
            dt: None,
            method: Method::Exact,
        },
    )
    .with_verdict(w.verdict())
}

/// Contraction, mass conservation, duality and the pointwise Jensen step
/// over random finite Markov kernels.
pub(super) fn finite_sweep(ctx: &Ctx) -> Result<Vec<InequalityReport>> {
    let n = ctx.n(1000);
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let instances: Vec<SweepInstance> = (0..n).map(|_| SweepInstance::random(&mut rng, MAX_SIZE)).collect();
    let mut rows = Vec::new();

    for &p in &SWEEP_EXPONENTS {
        let mut w = Worst::new();
        for (i, inst) in instances.iter().enumerate() {
            let r = check_contraction(&inst.kernel, &inst.nu1, &inst.f, p)?;
            w.push(i, r.lhs, r.rhs, r.lhs - r.rhs);
        }
        rows.push(row(ctx, "finite-contraction", Relation::Le, &w, n, &format!("p={p}")).with_x(p));
    }
    // Control: the right side shrunk by 5% must be violated somewhere.
    let mut w = Worst::new();
    for (i, inst) in instances.iter().enumerate() {
        let r = check_contraction(&inst.kernel, &inst.nu1, &inst.f, 2.0)?;
        let rhs = 0.95 * r.rhs;
        w.push(i, r.lhs, rhs, r.lhs - rhs);
    }
    rows.push(
        row(ctx, "finite-contraction", Relation::Le, &w, n, "p=2, rhs×0.95 control")
            .as_control()
            .with_note("perturbed claim; must FAIL"),
    );

    let mut mass = Worst::new();
    let mut duality = Worst::new();
    let mut jensen = Worst::new();
    for (i, inst) in instances.iter().enumerate() {
        let nu2 = pushforward(&inst.kernel, &inst.nu1)?;
        mass.push(i, nu2.total(), inst.nu1.total(), (nu2.total() - inst.nu1.total()).abs());

        let af = apply_kernel(&inst.kernel, &inst.f)?;
        let a = integrate(&af, &inst.nu1)?;
        let b = integrate(&inst.f, &nu2)?;
        duality.push(i, a, b, (a - b).abs());

        let abs_f = inst.f.abs();
        let a_abs = apply_kernel(&inst.kernel, &abs_f)?;
        for &p in SWEEP_EXPONENTS.iter().filter(|p| p.is_finite()) {
            let a_pow = apply_kernel(&inst.kernel, &abs_f.abs_pow(p))?;
            for (l, r) in a_abs.values().iter().zip(a_pow.values()) {
                let l = l.powf(p);
                jensen.push(i, l, *r, l - r);
            }
        }
        let ones = apply_kernel(&inst.kernel, &FiniteFunction::constant(inst.f.len(), 1.0))?;
        for v in ones.values() {
            mass.push(i, *v, 1.0, (v - 1.0).abs());
        }
    }
    rows.push(row(ctx, "finite-mass", Relation::Eq, &mass, n, "ν₂(total) = ν₁(total) and A1 = 1"));
    rows.push(row(ctx, "finite-duality", Relation::Eq, &duality, n, "∫Af dν₁ = ∫f dν₂"));
    rows.push(row(ctx, "finite-jensen", Relation::Le, &jensen, n, "(A|f|)ᵖ ≤ A|f|ᵖ pointwise"));
    Ok(rows)
}
