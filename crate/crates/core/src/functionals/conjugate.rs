use rand::Rng;

use super::PricingFunctional;
use crate::error::{Error, Result};
use crate::prob::{expectation, rng_from_seed, sample_payoff, DistributionSpec, Payoff};
use crate::quantile::hl_product;

/// Lower bound on `π*(Y) = sup_X ∫ q_X q_Y − π(X)` over `X = 0` and `budget`
/// payoffs drawn from `sampler`. Never claimed tight.
pub fn conjugate_lower_bound(
    f: &PricingFunctional,
    y: &Payoff,
    sampler: &mut dyn FnMut(usize) -> Payoff,
    budget: usize,
) -> Result<f64> {
    if !f.flags().law_invariant {
        return Err(Error::FlagViolation(format!("{} is not declared law-invariant", f.name())));
    }
    let mut best = candidate(f, &y.space().zero(), y)?;
    for i in 0..budget {
        let x = sampler(i);
        best = best.max(candidate(f, &x, y)?);
    }
    Ok(best)
}

fn candidate(f: &PricingFunctional, x: &Payoff, y: &Payoff) -> Result<f64> {
    let price = f.eval(x)?;
    if price == f64::INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(hl_product(x, y)? - price)
}

/// [`conjugate_lower_bound`] with payoffs drawn from `spec` and rescaled by a
/// random factor in `[0, max_scale]`.
pub fn sampled_conjugate_lower_bound(
    f: &PricingFunctional,
    y: &Payoff,
    spec: &DistributionSpec,
    max_scale: f64,
    seed: u64,
    budget: usize,
) -> Result<f64> {
    let mut rng = rng_from_seed(seed);
    let space = y.space();
    let mut sampler = |_: usize| {
        let s = rng.random_range(0.0..=max_scale);
        sample_payoff(space, spec, &mut rng).scale(s)
    };
    conjugate_lower_bound(f, y, &mut sampler, budget)
}

/// Closed-form conjugates where known: expectation (`0` at `Y ≡ c`), expected
/// shortfall and bounded-density sets (`0` on the density set), worst case
/// (`0` on all densities). `+∞` elsewhere; `None` for other functionals.
pub fn closed_form_conjugate(f: &PricingFunctional, y: &Payoff) -> Option<f64> {
    const EPS: f64 = 1e-12;
    if let Some(c) = f.expectation_scale() {
        return Some(if y.values().iter().all(|&v| v == c) { 0.0 } else { f64::INFINITY });
    }
    let bound = f.kind_density_bound()?;
    let is_density = (expectation(y) - 1.0).abs() <= EPS
        && y.min() >= -EPS
        && y.max() <= bound + EPS * bound.max(1.0);
    Some(if is_density { 0.0 } else { f64::INFINITY })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(v: &[f64]) -> Payoff {
        Payoff::new(v.to_vec()).unwrap()
    }

    #[test]
    fn expectation_conjugate_at_unit_density() {
        let f = PricingFunctional::expectation(1.0).unwrap();
        let y = p(&[1.0, 1.0]);
        let spec = DistributionSpec::Normal { mean: 0.0, sd: 3.0 };
        let bound = sampled_conjugate_lower_bound(&f, &y, &spec, 10.0, 4, 500).unwrap();
        assert!(bound.abs() < 1e-12);
        assert_eq!(closed_form_conjugate(&f, &y), Some(0.0));
    }

    #[test]
    fn expectation_conjugate_grows_off_the_domain() {
        let f = PricingFunctional::expectation(1.0).unwrap();
        let y = p(&[0.0, 2.0]);
        let direction = y.shift(-1.0);
        let mut previous = f64::NEG_INFINITY;
        for t in [1.0, 10.0, 100.0, 1000.0] {
            let mut sampler = |i: usize| direction.scale(t * (i + 1) as f64 / 10.0);
            let b = conjugate_lower_bound(&f, &y, &mut sampler, 10).unwrap();
            // hl(t(Y−1), Y) − t E[Y−1] = t
            assert!((b - t).abs() < 1e-9 * t.max(1.0));
            assert!(b > previous);
            previous = b;
        }
        assert_eq!(closed_form_conjugate(&f, &y), Some(f64::INFINITY));
    }

    #[test]
    fn expected_shortfall_conjugate_vanishes_on_spectrum() {
        let beta = 0.75;
        let f = PricingFunctional::expected_shortfall(beta).unwrap();
        // n = 8: density 4 on the top two atoms
        let y = p(&[0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 4.0, 4.0]);
        assert_eq!(closed_form_conjugate(&f, &y), Some(0.0));
        let spec = DistributionSpec::Uniform { low: -5.0, high: 5.0 };
        let b = sampled_conjugate_lower_bound(&f, &y, &spec, 3.0, 8, 2000).unwrap();
        assert!(b <= 1e-12);
        assert!(b >= -1e-12, "X = 0 attains 0");
    }

    #[test]
    fn requires_law_invariance() {
        let f = PricingFunctional::custom("first atom", Default::default(), |x| x.values()[0]);
        let y = p(&[1.0]);
        let mut s = |_: usize| p(&[1.0]);
        assert!(matches!(conjugate_lower_bound(&f, &y, &mut s, 1), Err(Error::FlagViolation(_))));
    }
}
