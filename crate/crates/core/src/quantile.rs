//! Quantile functions, Hardy–Littlewood products and the convex order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{expectation, Payoff};

/// Lower (left-continuous) quantile function of a payoff on equal atoms:
/// the step function taking `sorted_values[i]` on `(i/n, (i+1)/n]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct QuantileFn {
    sorted_values: Vec<f64>,
}

impl QuantileFn {
    pub fn sorted_values(&self) -> &[f64] {
        &self.sorted_values
    }

    pub fn n(&self) -> usize {
        self.sorted_values.len()
    }

    /// `q(alpha)` for `alpha` in `(0, 1)`: the entry at 1-based index `ceil(alpha n)`.
    pub fn at(&self, alpha: f64) -> Result<f64> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "quantile level must lie in (0,1), got {alpha}"
            )));
        }
        let n = self.n();
        let k = ((alpha * n as f64).ceil() as usize).clamp(1, n);
        Ok(self.sorted_values[k - 1])
    }

    /// `∫_level^1 q(α) dα`, exact for the step function.
    pub fn upper_tail_integral(&self, level: f64) -> f64 {
        let n = self.n() as f64;
        self.sorted_values
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let lo = (i as f64 / n).max(level);
                let hi = (i + 1) as f64 / n;
                if hi > lo {
                    v * (hi - lo)
                } else {
                    0.0
                }
            })
            .sum()
    }
}

pub fn quantile(x: &Payoff) -> QuantileFn {
    QuantileFn {
        sorted_values: x.sorted(),
    }
}

/// `∫₀¹ q_X(α) q_Y(α) dα`, the maximal correlation over rearrangements.
pub fn hl_product(x: &Payoff, y: &Payoff) -> Result<f64> {
    x.ensure_same_space(y)?;
    let (xs, ys) = (x.sorted(), y.sorted());
    Ok(sorted_product(&xs, &ys))
}

pub(crate) fn sorted_product(xs: &[f64], ys: &[f64]) -> f64 {
    xs.iter().zip(ys).map(|(a, b)| a * b).sum::<f64>() / xs.len() as f64
}

/// Largest atom count accepted by [`max_correlation_oracle`].
pub const MAX_ORACLE_ATOMS: usize = 8;

/// Brute force `max_σ (1/n) Σ X[i] Y[σ(i)]` over all `n!` permutations.
pub fn max_correlation_oracle(x: &Payoff, y: &Payoff) -> Result<f64> {
    x.ensure_same_space(y)?;
    let n = x.n();
    if n > MAX_ORACLE_ATOMS {
        return Err(Error::TooLarge(n));
    }
    let (xv, yv) = (x.values(), y.values());
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = f64::NEG_INFINITY;
    let mut eval = |perm: &[usize]| {
        let s = (0..n).map(|i| xv[i] * yv[perm[i]]).sum::<f64>() / n as f64;
        if s > best {
            best = s;
        }
    };
    // Heap's algorithm, iterative.
    let mut c = vec![0usize; n];
    eval(&perm);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            eval(&perm);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    Ok(best)
}

/// Jointly sorted copies of `x` and `y`; the pair is comonotone and attains
/// [`hl_product`].
pub fn comonotone_rearrangement(x: &Payoff, y: &Payoff) -> Result<(Payoff, Payoff)> {
    x.ensure_same_space(y)?;
    Ok((Payoff::from_vec(x.sorted()), Payoff::from_vec(y.sorted())))
}

/// `X ⪰_cx Y` via equal means and upper-tail partial-sum dominance of the
/// sorted values, with `tol` applied to both tests.
pub fn convex_order_geq(x: &Payoff, y: &Payoff, tol: f64) -> Result<bool> {
    x.ensure_same_space(y)?;
    if (expectation(x) - expectation(y)).abs() > tol {
        return Ok(false);
    }
    let (xs, ys) = (x.sorted(), y.sorted());
    let (mut sx, mut sy) = (0.0, 0.0);
    for (a, b) in xs.iter().rev().zip(ys.iter().rev()) {
        sx += a;
        sy += b;
        if sx < sy - tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Independent check of `X ⪰_cx Y` through the call family
/// `E[(X − t)⁺] ≥ E[(Y − t)⁺]` at every support point `t`, plus equal means.
pub fn convex_order_oracle(x: &Payoff, y: &Payoff) -> Result<bool> {
    x.ensure_same_space(y)?;
    if expectation(x) != expectation(y) {
        return Ok(false);
    }
    let call = |p: &Payoff, t: f64| p.values().iter().map(|v| (v - t).max(0.0)).sum::<f64>();
    Ok(x
        .values()
        .iter()
        .chain(y.values())
        .all(|&t| call(x, t) >= call(y, t)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::{condition, rng_from_seed, sample_payoff, same_law, DistributionSpec, Partition};
    use proptest::prelude::*;

    fn p(v: &[f64]) -> Payoff {
        Payoff::new(v.to_vec()).unwrap()
    }

    #[test]
    fn quantile_examples() {
        assert_eq!(quantile(&p(&[3.0, 1.0, 2.0])).sorted_values(), &[1.0, 2.0, 3.0]);
        assert_eq!(quantile(&p(&[7.0, 7.0])).sorted_values(), &[7.0, 7.0]);
        let q = quantile(&p(&[3.0, 1.0, 2.0]));
        assert_eq!(q.at(0.1).unwrap(), 1.0);
        assert_eq!(q.at(1.0 / 3.0).unwrap(), 1.0);
        assert_eq!(q.at(0.34).unwrap(), 2.0);
        assert_eq!(q.at(0.99).unwrap(), 3.0);
        assert!(q.at(0.0).is_err());
        assert!(q.at(1.0).is_err());
    }

    #[test]
    fn hl_product_examples() {
        assert_eq!(hl_product(&p(&[1.0, 2.0]), &p(&[1.0, 2.0])).unwrap(), 2.5);
        assert_eq!(hl_product(&p(&[0.0, 1.0]), &p(&[1.0, 0.0])).unwrap(), 0.5);
        assert_eq!(hl_product(&p(&[3.0, 3.0]), &p(&[1.0, 5.0])).unwrap(), 9.0);
        assert!(hl_product(&p(&[1.0]), &p(&[1.0, 2.0])).is_err());
    }

    #[test]
    fn oracle_examples() {
        assert_eq!(max_correlation_oracle(&p(&[1.0, 2.0]), &p(&[1.0, 2.0])).unwrap(), 2.5);
        assert_eq!(max_correlation_oracle(&p(&[0.0, 1.0]), &p(&[1.0, 0.0])).unwrap(), 0.5);
        assert_eq!(max_correlation_oracle(&p(&[3.0]), &p(&[-2.0])).unwrap(), -6.0);
        assert_eq!(
            max_correlation_oracle(&p(&[2.0, 2.0, 2.0]), &p(&[1.0, 4.0, -2.0])).unwrap(),
            2.0
        );
        let nine = Payoff::constant(crate::prob::AtomSpace::new(9).unwrap(), 1.0);
        assert!(matches!(max_correlation_oracle(&nine, &nine), Err(Error::TooLarge(9))));
    }

    #[test]
    fn rearrangement_examples() {
        let (x, y) = (p(&[3.0, 1.0, 2.0]), p(&[0.0, 5.0, -1.0]));
        let (a, b) = comonotone_rearrangement(&x, &y).unwrap();
        assert!(crate::prob::is_comonotone(&a, &b).unwrap());
        assert_eq!(expectation(&a), expectation(&x));
        assert_eq!(expectation(&b), expectation(&y));
        let prod = a.zip_with(&b, |u, v| u * v);
        assert_eq!(expectation(&prod), hl_product(&x, &y).unwrap());
    }

    #[test]
    fn convex_order_examples() {
        assert!(convex_order_geq(&p(&[0.0, 2.0]), &p(&[1.0, 1.0]), 0.0).unwrap());
        assert!(!convex_order_geq(&p(&[1.0, 1.0]), &p(&[0.0, 2.0]), 0.0).unwrap());
        let x = p(&[0.3, -1.0, 2.0]);
        assert!(convex_order_geq(&x, &x, 0.0).unwrap());
        assert!(convex_order_oracle(&p(&[0.0, 2.0]), &p(&[1.0, 1.0])).unwrap());
        assert!(!convex_order_oracle(&p(&[0.0, 2.0]), &p(&[0.0, 1.0])).unwrap());
    }

    /// Convex piecewise-linear test functions with kinks at {0,1,2}.
    #[test]
    fn convex_order_example_by_convex_test_functions() {
        let x = p(&[0.0, 2.0]);
        let y = p(&[1.0, 1.0]);
        let e = |p: &Payoff, f: &dyn Fn(f64) -> f64| {
            p.values().iter().map(|&v| f(v)).sum::<f64>() / p.n() as f64
        };
        for k in [0.0, 1.0, 2.0] {
            for s in [-1.0, 1.0] {
                let f = move |t: f64| (s * (t - k)).max(0.0);
                assert!(e(&x, &f) >= e(&y, &f));
            }
        }
        let f = |t: f64| (t - 1.0f64).abs();
        assert_eq!(e(&p(&[1.0, 1.0]), &f), 0.0);
        assert_eq!(e(&p(&[0.0, 2.0]), &f), 1.0);
    }

    #[test]
    fn conditioning_decreases_convex_order() {
        let mut rng = rng_from_seed(11);
        let spec = DistributionSpec::Normal { mean: 0.0, sd: 2.0 };
        for n in 1..12 {
            let space = crate::prob::AtomSpace::new(n).unwrap();
            for _ in 0..50 {
                let x = sample_payoff(space, &spec, &mut rng);
                let g = Partition::random(n, &mut rng);
                let y = condition(&x, &g).unwrap();
                assert!(convex_order_geq(&x, &y, 1e-12).unwrap());
            }
        }
    }

    fn small_int_payoffs(max_n: usize) -> impl Strategy<Value = (Payoff, Payoff)> {
        (1..=max_n).prop_flat_map(|n| {
            (
                prop::collection::vec(-20i32..=20, n),
                prop::collection::vec(-20i32..=20, n),
            )
                .prop_map(|(a, b)| {
                    (
                        Payoff::new(a.into_iter().map(f64::from).collect()).unwrap(),
                        Payoff::new(b.into_iter().map(f64::from).collect()).unwrap(),
                    )
                })
        })
    }

    proptest! {
        #[test]
        fn hl_matches_brute_force((x, y) in small_int_payoffs(7)) {
            prop_assert_eq!(hl_product(&x, &y).unwrap(), max_correlation_oracle(&x, &y).unwrap());
        }

        #[test]
        fn rearrangement_inequality((x, y) in small_int_payoffs(10)) {
            let direct = expectation(&x.zip_with(&y, |a, b| a * b));
            prop_assert!(hl_product(&x, &y).unwrap() >= direct);
        }

        #[test]
        fn hl_symmetry_homogeneity_and_shift((x, y) in small_int_payoffs(10), c in -5i32..5, s in 0u32..4) {
            let h = hl_product(&x, &y).unwrap();
            prop_assert_eq!(h, hl_product(&y, &x).unwrap());
            let s = f64::from(s);
            prop_assert!((hl_product(&x.scale(s), &y).unwrap() - s * h).abs() <= 1e-9 * (1.0 + h.abs()));
            let c = f64::from(c);
            let shifted = hl_product(&x.shift(c), &y).unwrap();
            prop_assert!((shifted - (h + c * expectation(&y))).abs() <= 1e-9);
        }

        #[test]
        fn quantile_reflection((x, y) in small_int_payoffs(10)) {
            let n = x.n();
            let qx = quantile(&x);
            let qn = quantile(&x.neg());
            for i in 0..n {
                prop_assert_eq!(qn.sorted_values()[i], -qx.sorted_values()[n - 1 - i]);
            }
            let qy = quantile(&y);
            let lhs: f64 = (0..n).map(|i| qn.sorted_values()[i] * qy.sorted_values()[i]).sum::<f64>() / n as f64;
            let rhs: f64 = -(0..n).map(|i| qx.sorted_values()[n - 1 - i] * qy.sorted_values()[i]).sum::<f64>() / n as f64;
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn convex_order_antisymmetry((x, y) in small_int_payoffs(5)) {
            if convex_order_geq(&x, &y, 0.0).unwrap() && convex_order_geq(&y, &x, 0.0).unwrap() {
                prop_assert!(same_law(&x, &y).unwrap());
            }
        }

        #[test]
        fn convex_order_monotone_in_tol((x, y) in small_int_payoffs(6), t in 0.0f64..2.0) {
            if convex_order_geq(&x, &y, t).unwrap() {
                prop_assert!(convex_order_geq(&x, &y, t + 0.5).unwrap());
            }
        }
    }
}
