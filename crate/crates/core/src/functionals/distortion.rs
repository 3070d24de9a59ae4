use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::Payoff;

/// Number of interior grid points used to validate a distortion.
pub const VALIDATION_GRID: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistortionShape {
    Linear,
    Concave,
    Convex,
    Neither,
}

/// Distortion `g: [0,1] → [0,1]`, nondecreasing with `g(0) = 0`, `g(1) = 1`.
/// The induced capacity on equal atoms is `c(A) = g(|A| / n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Distortion {
    Identity,
    /// `g(u) = u^exponent`.
    Power { exponent: f64 },
    /// `g(u) = min(u / (1 − beta), 1)`: the expected-shortfall distortion.
    Tail { beta: f64 },
    /// Piecewise-linear interpolation through `(u, g(u))` points.
    Tabulated { points: Vec<(f64, f64)> },
}

impl Distortion {
    pub fn power(exponent: f64) -> Result<Self> {
        let d = Self::Power { exponent };
        d.validate()?;
        Ok(d)
    }

    pub fn tail(beta: f64) -> Result<Self> {
        let d = Self::Tail { beta };
        d.validate()?;
        Ok(d)
    }

    pub fn tabulated(points: Vec<(f64, f64)>) -> Result<Self> {
        let d = Self::Tabulated { points };
        d.validate()?;
        Ok(d)
    }

    pub fn eval(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        match self {
            Self::Identity => u,
            Self::Power { exponent } => {
                if u == 0.0 {
                    0.0
                } else {
                    u.powf(*exponent)
                }
            }
            Self::Tail { beta } => (u / (1.0 - beta)).min(1.0),
            Self::Tabulated { points } => {
                let k = points.partition_point(|&(x, _)| x < u);
                if k == 0 {
                    return points[0].1;
                }
                if k == points.len() {
                    return points[k - 1].1;
                }
                let ((x0, y0), (x1, y1)) = (points[k - 1], points[k]);
                if x1 == x0 {
                    y1
                } else {
                    y0 + (y1 - y0) * (u - x0) / (x1 - x0)
                }
            }
        }
    }

    pub fn shape(&self) -> DistortionShape {
        match self {
            Self::Identity => DistortionShape::Linear,
            Self::Power { exponent } if *exponent == 1.0 => DistortionShape::Linear,
            Self::Power { exponent } if *exponent < 1.0 => DistortionShape::Concave,
            Self::Power { .. } => DistortionShape::Convex,
            Self::Tail { beta } if *beta == 0.0 => DistortionShape::Linear,
            Self::Tail { .. } => DistortionShape::Concave,
            Self::Tabulated { points } => {
                let slopes: Vec<f64> = points
                    .windows(2)
                    .filter(|w| w[1].0 > w[0].0)
                    .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
                    .collect();
                let eps = 1e-12;
                let noninc = slopes.windows(2).all(|s| s[1] <= s[0] + eps);
                let nondec = slopes.windows(2).all(|s| s[1] >= s[0] - eps);
                match (noninc, nondec) {
                    (true, true) => DistortionShape::Linear,
                    (true, false) => DistortionShape::Concave,
                    (false, true) => DistortionShape::Convex,
                    (false, false) => DistortionShape::Neither,
                }
            }
        }
    }

    pub fn is_concave(&self) -> bool {
        matches!(self.shape(), DistortionShape::Linear | DistortionShape::Concave)
    }

    /// Endpoint and monotonicity checks on a grid of [`VALIDATION_GRID`] points.
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Power { exponent } if !(*exponent > 0.0 && exponent.is_finite()) => {
                return Err(Error::InvalidParameter(format!(
                    "power distortion needs a positive exponent, got {exponent}"
                )))
            }
            Self::Tail { beta } if !(0.0..1.0).contains(beta) => {
                return Err(Error::InvalidParameter(format!(
                    "tail distortion needs beta in [0,1), got {beta}"
                )))
            }
            Self::Tabulated { points } => {
                if points.len() < 2 {
                    return Err(Error::InvalidParameter(
                        "tabulated distortion needs at least two points".into(),
                    ));
                }
                if points.windows(2).any(|w| w[1].0 < w[0].0) {
                    return Err(Error::InvalidParameter(
                        "tabulated distortion abscissae must be sorted".into(),
                    ));
                }
                if points[0].0 != 0.0 || points[points.len() - 1].0 != 1.0 {
                    return Err(Error::InvalidParameter(
                        "tabulated distortion must span [0,1]".into(),
                    ));
                }
            }
            _ => {}
        }
        if self.eval(0.0) != 0.0 || self.eval(1.0) != 1.0 {
            return Err(Error::InvalidParameter(format!(
                "distortion endpoints must be g(0)=0 and g(1)=1, got {} and {}",
                self.eval(0.0),
                self.eval(1.0)
            )));
        }
        let mut prev = 0.0;
        for i in 1..=VALIDATION_GRID {
            let g = self.eval(i as f64 / VALIDATION_GRID as f64);
            if !(g >= prev) || g > 1.0 {
                return Err(Error::InvalidParameter(format!(
                    "distortion not monotone into [0,1] near u = {}",
                    i as f64 / VALIDATION_GRID as f64
                )));
            }
            prev = g;
        }
        Ok(())
    }
}

/// Discrete Choquet integral `Σᵢ x₍ᵢ₎ (g(i/n) − g((i−1)/n))` with values
/// sorted descending.
pub fn choquet_eval(g: &Distortion, x: &Payoff) -> f64 {
    let mut desc = x.sorted();
    desc.reverse();
    let n = desc.len() as f64;
    let mut prev = 0.0;
    let mut total = 0.0;
    for (i, v) in desc.iter().enumerate() {
        let gi = g.eval((i + 1) as f64 / n);
        total += v * (gi - prev);
        prev = gi;
    }
    total
}
