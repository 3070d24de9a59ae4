//! Randomized audits of declared flags and of Schur-convexity.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::PricingFunctional;
use crate::error::{Error, Result};
use crate::prob::{
    condition, derive_seed, random_permutation, rng_from_seed, sample_payoff, AtomSpace, DistributionSpec,
    Partition, Payoff,
};
use crate::quantile::convex_order_geq;

/// Relative tolerance of the flag audit.
pub const AUDIT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub description: String,
    pub payoffs: Vec<Payoff>,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FlagVerdict {
    /// Declared, no counterexample found.
    Confirmed,
    /// Declared, counterexample found.
    Mislabeled,
    /// Not declared, counterexample found.
    Falsified,
    /// Not declared, no counterexample found.
    NotFalsified,
}

#[derive(Debug, Clone, Serialize)]
pub struct FlagCheck {
    pub flag: &'static str,
    pub declared: bool,
    pub verdict: FlagVerdict,
    pub witness: Option<Witness>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FlagAudit {
    pub functional: String,
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub checks: Vec<FlagCheck>,
}

impl FlagAudit {
    /// No declared flag was falsified.
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.verdict != FlagVerdict::Mislabeled)
    }

    pub fn check(&self, flag: &str) -> Option<&FlagCheck> {
        self.checks.iter().find(|c| c.flag == flag)
    }
}

fn close(a: f64, b: f64) -> bool {
    if a.is_infinite() || b.is_infinite() {
        return a == b;
    }
    (a - b).abs() <= AUDIT_TOL * (1.0 + a.abs().max(b.abs()))
}

fn leq(a: f64, b: f64) -> bool {
    if b == f64::INFINITY {
        return true;
    }
    a <= b + AUDIT_TOL * (1.0 + a.abs().max(b.abs()))
}

const TRIAL_SPECS: [DistributionSpec; 4] = [
    DistributionSpec::Normal { mean: 0.0, sd: 1.5 },
    DistributionSpec::Uniform { low: -3.0, high: 3.0 },
    DistributionSpec::Integers { low: -3, high: 3 },
    DistributionSpec::TwoPoint { low: -1.0, high: 2.0 },
];

fn trial_payoff<R: Rng + ?Sized>(space: AtomSpace, rng: &mut R) -> Payoff {
    let spec = &TRIAL_SPECS[rng.random_range(0..TRIAL_SPECS.len())];
    sample_payoff(space, spec, rng)
}

fn witness(description: impl Into<String>, payoffs: Vec<Payoff>, lhs: f64, rhs: f64) -> Option<Witness> {
    Some(Witness {
        description: description.into(),
        payoffs,
        lhs,
        rhs,
    })
}

type Trial = fn(&PricingFunctional, AtomSpace, &mut rand_chacha::ChaCha8Rng) -> Result<Option<Witness>>;

fn convexity_trial(f: &PricingFunctional, space: AtomSpace, rng: &mut rand_chacha::ChaCha8Rng) -> Result<Option<Witness>> {
    let (x, y) = (trial_payoff(space, rng), trial_payoff(space, rng));
    let lambda: f64 = rng.random_range(0.0..=1.0);
    let lhs = f.eval(&x.mix(&y, lambda)?)?;
    let rhs = super::mul_ext(lambda, f.eval(&x)?) + super::mul_ext(1.0 - lambda, f.eval(&y)?);
    Ok(if leq(lhs, rhs) {
        None
    } else {
        witness(format!("π(λX+(1−λ)Y) > λπ(X)+(1−λ)π(Y) at λ={lambda}"), vec![x, y], lhs, rhs)
    })
}

fn homogeneity_trial(f: &PricingFunctional, space: AtomSpace, rng: &mut rand_chacha::ChaCha8Rng) -> Result<Option<Witness>> {
    let x = trial_payoff(space, rng);
    let s: f64 = if rng.random_bool(0.1) { 0.0 } else { rng.random_range(0.05..4.0) };
    let lhs = f.eval(&x.scale(s))?;
    let rhs = super::mul_ext(s, f.eval(&x)?);
    Ok(if close(lhs, rhs) {
        None
    } else {
        witness(format!("π(sX) ≠ sπ(X) at s={s}"), vec![x], lhs, rhs)
    })
}

fn sublinearity_trial(f: &PricingFunctional, space: AtomSpace, rng: &mut rand_chacha::ChaCha8Rng) -> Result<Option<Witness>> {
    match homogeneity_trial(f, space, rng)? {
        Some(w) => Ok(Some(w)),
        None => convexity_trial(f, space, rng),
    }
}

fn monotonicity_trial(f: &PricingFunctional, space: AtomSpace, rng: &mut rand_chacha::ChaCha8Rng) -> Result<Option<Witness>> {
    let x = trial_payoff(space, rng);
    let bump: Vec<f64> = (0..space.n())
        .map(|_| if rng.random_bool(0.5) { rng.random_range(0.0..3.0) } else { 0.0 })
        .collect();
    let y = x.add(&Payoff::new(bump)?)?;
    let (low, high) = (f.eval(&x)?, f.eval(&y)?);
    Ok(if leq(low, high) {
        None
    } else {
        witness("Y ≥ X but π(Y) < π(X)", vec![x, y], high, low)
    })
}

fn law_invariance_trial(f: &PricingFunctional, space: AtomSpace, rng: &mut rand_chacha::ChaCha8Rng) -> Result<Option<Witness>> {
    let x = trial_payoff(space, rng);
    let y = x.permuted(&random_permutation(space.n(), rng));
    let (a, b) = (f.eval(&x)?, f.eval(&y)?);
    Ok(if close(a, b) {
        None
    } else {
        witness("X ∼ Y but π(X) ≠ π(Y)", vec![x, y], a, b)
    })
}

fn cash_additivity_trial(f: &PricingFunctional, space: AtomSpace, rng: &mut rand_chacha::ChaCha8Rng) -> Result<Option<Witness>> {
    let x = trial_payoff(space, rng);
    let m: f64 = rng.random_range(-5.0..5.0);
    let lhs = f.eval(&x.shift(m))?;
    let rhs = f.eval(&x)? + m;
    Ok(if close(lhs, rhs) {
        None
    } else {
        witness(format!("π(X+m) ≠ π(X)+m at m={m}"), vec![x], lhs, rhs)
    })
}

fn comonotonicity_trial(f: &PricingFunctional, space: AtomSpace, rng: &mut rand_chacha::ChaCha8Rng) -> Result<Option<Witness>> {
    let perm = random_permutation(space.n(), rng);
    let x = Payoff::new(trial_payoff(space, rng).sorted())?.permuted(&perm);
    let y = Payoff::new(trial_payoff(space, rng).sorted())?.permuted(&perm);
    let lhs = f.eval(&x.add(&y)?)?;
    let rhs = f.eval(&x)? + f.eval(&y)?;
    Ok(if close(lhs, rhs) {
        None
    } else {
        witness("comonotone X,Y with π(X+Y) ≠ π(X)+π(Y)", vec![x, y], lhs, rhs)
    })
}

fn search(
    f: &PricingFunctional,
    space: AtomSpace,
    trials: usize,
    seed: u64,
    salt: u64,
    trial: Trial,
) -> Result<Option<Witness>> {
    (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_from_seed(derive_seed(seed ^ salt, i as u64));
            trial(f, space, &mut rng)
        })
        .find_map_first(|r| match r {
            Ok(None) => None,
            other => Some(other),
        })
        .transpose()
        .map(Option::flatten)
}

/// Randomized test of all six flags; declared and undeclared flags are both
/// searched so undeclared properties can be reported as falsified.
pub fn flag_audit(f: &PricingFunctional, space: AtomSpace, trials: usize, seed: u64) -> Result<FlagAudit> {
    let flags = f.flags();
    let plan: [(&'static str, bool, Trial); 6] = [
        ("convex", flags.convex, convexity_trial),
        ("sublinear", flags.sublinear, sublinearity_trial),
        ("monotone", flags.monotone, monotonicity_trial),
        ("law_invariant", flags.law_invariant, law_invariance_trial),
        ("cash_additive", flags.cash_additive, cash_additivity_trial),
        ("comonotonic", flags.comonotonic, comonotonicity_trial),
    ];
    let mut checks = Vec::with_capacity(plan.len());
    for (salt, (flag, declared, trial)) in plan.into_iter().enumerate() {
        let witness = search(f, space, trials, seed, salt as u64 + 1, trial)?;
        let verdict = match (declared, witness.is_some()) {
            (true, false) => FlagVerdict::Confirmed,
            (true, true) => FlagVerdict::Mislabeled,
            (false, true) => FlagVerdict::Falsified,
            (false, false) => FlagVerdict::NotFalsified,
        };
        checks.push(FlagCheck {
            flag,
            declared,
            verdict,
            witness,
        });
    }
    Ok(FlagAudit {
        functional: f.name().to_string(),
        n: space.n(),
        trials,
        seed,
        checks,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SchurReport {
    pub functional: String,
    pub n: usize,
    pub trials: usize,
    pub tol: f64,
    pub conditioning_violations: usize,
    pub order_violations: usize,
    /// Largest `|π(X) − π(E[X|G])|` observed.
    pub max_conditioning_gap: f64,
    /// First few violations.
    pub witnesses: Vec<Witness>,
}

impl SchurReport {
    pub fn passed(&self) -> bool {
        self.conditioning_violations == 0 && self.order_violations == 0
    }
}

const MAX_WITNESSES: usize = 5;

/// Checks `π(E[X|G]) ≤ π(X) + tol` for random partitions and
/// `π(X) ≥ π(Y) − tol` for random pairs with `X ⪰_cx Y`.
pub fn schur_convexity_report(
    f: &PricingFunctional,
    space: AtomSpace,
    trials: usize,
    seed: u64,
    tol: f64,
) -> Result<SchurReport> {
    let flags = f.flags();
    if !(flags.law_invariant && flags.convex) {
        return Err(Error::FlagViolation(format!(
            "{} must be declared law-invariant and convex",
            f.name()
        )));
    }
    struct Outcome {
        gap: f64,
        conditioning: Option<Witness>,
        order: Option<Witness>,
    }
    let outcomes: Vec<Outcome> = (0..trials)
        .into_par_iter()
        .map(|i| -> Result<Outcome> {
            let mut rng = rng_from_seed(derive_seed(seed, i as u64));
            let x = trial_payoff(space, &mut rng);
            let g = Partition::random(space.n(), &mut rng);
            let cx = condition(&x, &g)?;
            let (px, pc) = (f.eval(&x)?, f.eval(&cx)?);
            let gap = if px.is_finite() && pc.is_finite() { (px - pc).abs() } else { 0.0 };
            let conditioning = (pc > px + tol).then(|| Witness {
                description: "π(E[X|G]) > π(X)".into(),
                payoffs: vec![x.clone(), cx.clone()],
                lhs: pc,
                rhs: px,
            });
            // Y = rearranged coarsening of X, possibly mixed back towards X.
            let t: f64 = rng.random_range(0.0..=1.0);
            let y = cx.mix(&x, t)?.permuted(&random_permutation(space.n(), &mut rng));
            let order = if convex_order_geq(&x, &y, 1e-12)? {
                let py = f.eval(&y)?;
                (px < py - tol).then(|| Witness {
                    description: "X ⪰cx Y but π(X) < π(Y)".into(),
                    payoffs: vec![x, y],
                    lhs: px,
                    rhs: py,
                })
            } else {
                None
            };
            Ok(Outcome { gap, conditioning, order })
        })
        .collect::<Result<_>>()?;
    let mut report = SchurReport {
        functional: f.name().to_string(),
        n: space.n(),
        trials,
        tol,
        conditioning_violations: 0,
        order_violations: 0,
        max_conditioning_gap: 0.0,
        witnesses: Vec::new(),
    };
    for o in outcomes {
        report.max_conditioning_gap = report.max_conditioning_gap.max(o.gap);
        if let Some(w) = o.conditioning {
            report.conditioning_violations += 1;
            if report.witnesses.len() < MAX_WITNESSES {
                report.witnesses.push(w);
            }
        }
        if let Some(w) = o.order {
            report.order_violations += 1;
            if report.witnesses.len() < MAX_WITNESSES {
                report.witnesses.push(w);
            }
        }
    }
    Ok(report)
}
