use serde::Serialize;

use super::PricingFunctional;
use crate::error::{Error, Result};
use crate::prob::Payoff;

/// Grid estimate of `π^∞(X) = sup_{λ>0} π(λX)/λ`.
#[derive(Debug, Clone, Serialize)]
pub struct RecessionReport {
    /// Largest difference quotient `(π(λX) − π(0))/λ` on the grid; a lower
    /// bound on the supremum (`+∞` if some `π(λX)` is infinite).
    pub value: f64,
    /// Set when the last two grid quotients differ by more than the tolerance.
    pub stale: bool,
    pub pi_zero: f64,
    pub lambdas: Vec<f64>,
    /// Raw quotients `π(λX)/λ` at each grid point.
    pub quotients: Vec<f64>,
    /// A quotient dropped along the grid, which a convex `π` cannot produce.
    pub monotonicity_violation: bool,
}

/// Geometric grid `1, r, r², …, lambda_max` of `grid_size` points.
///
/// For convex `π` with `π(0) ≤ 0`, both `λ ↦ π(λX)/λ` and
/// `λ ↦ (π(λX) − π(0))/λ` are nondecreasing with the same limit; the report
/// value is the max of the latter, which is exact on the grid for
/// functionals affine along the ray.
pub fn recession(
    f: &PricingFunctional,
    x: &Payoff,
    lambda_max: f64,
    grid_size: usize,
    tol: f64,
) -> Result<RecessionReport> {
    if !f.flags().convex {
        return Err(Error::FlagViolation(format!("{} is not declared convex", f.name())));
    }
    if !(lambda_max >= 1.0 && lambda_max.is_finite()) {
        return Err(Error::InvalidParameter(format!("lambda_max must be ≥ 1, got {lambda_max}")));
    }
    if grid_size < 2 {
        return Err(Error::InvalidParameter("recession grid needs at least 2 points".into()));
    }
    let pi_zero = f.eval(&x.space().zero())?;
    if !(pi_zero <= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "recession requires π(0) ≤ 0, got π(0) = {pi_zero}"
        )));
    }
    let ratio = lambda_max.powf(1.0 / (grid_size - 1) as f64);
    let mut lambdas = Vec::with_capacity(grid_size);
    let mut quotients = Vec::with_capacity(grid_size);
    let mut diffs = Vec::with_capacity(grid_size);
    let mut lambda = 1.0;
    for i in 0..grid_size {
        if i == grid_size - 1 {
            lambda = lambda_max;
        }
        let v = f.eval(&x.scale(lambda))?;
        lambdas.push(lambda);
        quotients.push(v / lambda);
        diffs.push((v - pi_zero) / lambda);
        lambda *= ratio;
    }
    let value = diffs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scale = |a: f64| tol * a.abs().max(1.0);
    let last = diffs[grid_size - 1];
    let prev = diffs[grid_size - 2];
    let stale = if last.is_infinite() {
        true
    } else {
        (last - prev).abs() > scale(last)
    };
    let monotonicity_violation = quotients
        .windows(2)
        .any(|w| w[1].is_finite() && w[1] < w[0] - scale(w[0]));
    Ok(RecessionReport {
        value,
        stale,
        pi_zero,
        lambdas,
        quotients,
        monotonicity_violation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(v: &[f64]) -> Payoff {
        Payoff::new(v.to_vec()).unwrap()
    }

    #[test]
    fn sublinear_grid_is_flat() {
        let f = PricingFunctional::expected_shortfall(0.4).unwrap();
        let x = p(&[1.0, -2.0, 0.5, 3.0]);
        let r = recession(&f, &x, 1e3, 10, 1e-9).unwrap();
        let base = f.eval(&x).unwrap();
        for q in &r.quotients {
            assert!((q - base).abs() < 1e-12);
        }
        assert!(!r.stale);
        assert!((r.value - base).abs() < 1e-12);
    }

    #[test]
    fn floor_gauge_recession_is_minus_min() {
        let f = PricingFunctional::floor_gauge();
        let x = p(&[-1.0, 1.0]);
        let r = recession(&f, &x, 1e6, 25, 1e-9).unwrap();
        assert_eq!(f.eval(&x).unwrap(), 0.0);
        assert!((r.value - 1.0).abs() <= 1e-12);
        // raw quotients increase as 1 − 1/λ
        assert!(r.quotients.windows(2).all(|w| w[1] >= w[0]));
        assert!((r.quotients[0] - 0.0).abs() < 1e-15);
        assert!(!r.monotonicity_violation);
    }

    #[test]
    fn entropic_recession_tends_to_max() {
        let f = PricingFunctional::entropic(2.0).unwrap();
        let x = p(&[0.0, 1.0]);
        let r = recession(&f, &x, 1e8, 30, 1e-9).unwrap();
        assert!((r.value - 1.0).abs() < 1e-8, "{}", r.value);
        // (1/θλ) log((1 + e^{θλ})/2) at λ=1
        let exact = ((1.0 + 2f64.exp()) / 2.0).ln() / 2.0;
        assert!((r.quotients[0] - exact).abs() < 1e-12);
    }

    #[test]
    fn preconditions() {
        let x = p(&[1.0, 2.0]);
        let nonconvex = PricingFunctional::choquet(super::super::Distortion::power(2.0).unwrap()).unwrap();
        assert!(matches!(recession(&nonconvex, &x, 10.0, 5, 1e-9), Err(Error::FlagViolation(_))));
        let positive_at_zero = PricingFunctional::custom(
            "shifted",
            super::super::Flags { convex: true, ..Default::default() },
            |x| 1.0 + crate::prob::expectation(x),
        );
        assert!(recession(&positive_at_zero, &x, 10.0, 5, 1e-9).is_err());
        let f = PricingFunctional::worst_case();
        assert!(recession(&f, &x, 0.5, 5, 1e-9).is_err());
        assert!(recession(&f, &x, 10.0, 1, 1e-9).is_err());
    }
}
