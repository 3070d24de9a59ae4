use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::Payoff;
use crate::quantile::{hl_product, sorted_product};

/// The set `𝒟` in `π(X) = sup_{Y∈𝒟} ∫ q_X q_Y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum RepresentationSet {
    Finite(Vec<Payoff>),
    /// All densities `0 ≤ Y ≤ bound` with `E[Y] = 1`; requires `bound ≥ 1`.
    BoundedDensity { bound: f64 },
}

impl RepresentationSet {
    pub(crate) fn validate(&self) -> Result<()> {
        match self {
            Self::Finite(ys) if ys.is_empty() => Err(Error::EmptyRepresentation),
            Self::Finite(ys) => {
                let space = ys[0].space();
                ys.iter().try_for_each(|y| space.ensure_same(&y.space()))
            }
            Self::BoundedDensity { bound } if !(*bound >= 1.0) => Err(Error::InvalidParameter(format!(
                "density bound must be ≥ 1, got {bound}"
            ))),
            Self::BoundedDensity { .. } => Ok(()),
        }
    }

    pub(crate) fn label(&self) -> String {
        match self {
            Self::Finite(ys) => format!("{} densities", ys.len()),
            Self::BoundedDensity { bound } => format!("densities ≤ {bound}"),
        }
    }
}

/// Finite sets take the max Hardy–Littlewood product; bounded densities use
/// the greedy density that loads `bound` on the largest atoms.
pub fn representation_eval(set: &RepresentationSet, x: &Payoff) -> Result<f64> {
    set.validate()?;
    match set {
        RepresentationSet::Finite(ys) => {
            let mut best = f64::NEG_INFINITY;
            for y in ys {
                best = best.max(hl_product(x, y)?);
            }
            Ok(best)
        }
        RepresentationSet::BoundedDensity { bound } => {
            let xs = x.sorted();
            Ok(sorted_product(&xs, &greedy_density(xs.len(), *bound)))
        }
    }
}

/// Sorted (ascending) density with mass `bound` on the top atoms, remainder on
/// the next one, zero elsewhere. Sums to `n`.
pub(crate) fn greedy_density(n: usize, bound: f64) -> Vec<f64> {
    let mut density = vec![0.0; n];
    let mut remaining = n as f64;
    for slot in density.iter_mut().rev() {
        if remaining <= 0.0 {
            break;
        }
        let take = bound.min(remaining);
        *slot = take;
        remaining -= take;
    }
    density
}
