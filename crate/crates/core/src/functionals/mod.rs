//! Pricing functionals `π: payoffs → ℝ ∪ {+∞}` with declared structural flags.
//!
//! The catalog covers the expectation, distortion (Choquet) functionals,
//! expected shortfall, the entropic functional, the mean-gate and floor-gauge
//! counterexamples, mean plus absolute deviation, the worst case and
//! quantile-representation functionals. Values are plain `f64`; `+∞` is
//! allowed, `−∞` and NaN are rejected by [`PricingFunctional::eval`].

mod audit;
mod conjugate;
mod distortion;
mod recession;
mod representation;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{expectation, AtomSpace, Payoff};
use crate::quantile::quantile;

pub use audit::{flag_audit, schur_convexity_report, FlagAudit, FlagCheck, FlagVerdict, SchurReport, Witness};
pub use conjugate::{closed_form_conjugate, conjugate_lower_bound, sampled_conjugate_lower_bound};
pub use distortion::{choquet_eval, Distortion, DistortionShape, VALIDATION_GRID};
pub use recession::{recession, RecessionReport};
pub use representation::{representation_eval, RepresentationSet};

/// Declared structural properties.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flags {
    pub convex: bool,
    pub sublinear: bool,
    pub monotone: bool,
    pub law_invariant: bool,
    pub cash_additive: bool,
    pub comonotonic: bool,
}

impl Flags {
    const ALL: Flags = Flags {
        convex: true,
        sublinear: true,
        monotone: true,
        law_invariant: true,
        cash_additive: true,
        comonotonic: true,
    };
}

/// `0 · ∞ := 0`; otherwise ordinary multiplication.
pub fn mul_ext(m: f64, v: f64) -> f64 {
    if m == 0.0 {
        0.0
    } else {
        m * v
    }
}

type CustomEval = Arc<dyn Fn(&Payoff) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Kind {
    Expectation { c: f64 },
    Choquet(Distortion),
    ExpectedShortfall { beta: f64 },
    Entropic { theta: f64 },
    Gate,
    FloorGauge,
    MeanAbsDev { lambda: f64 },
    WorstCase,
    Representation(RepresentationSet),
    OfLoss(Box<PricingFunctional>),
    Custom(CustomEval),
}

impl fmt::Debug for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kind::Expectation { c } => write!(f, "Expectation({c})"),
            Kind::Choquet(g) => write!(f, "Choquet({g:?})"),
            Kind::ExpectedShortfall { beta } => write!(f, "ExpectedShortfall({beta})"),
            Kind::Entropic { theta } => write!(f, "Entropic({theta})"),
            Kind::Gate => write!(f, "Gate"),
            Kind::FloorGauge => write!(f, "FloorGauge"),
            Kind::MeanAbsDev { lambda } => write!(f, "MeanAbsDev({lambda})"),
            Kind::WorstCase => write!(f, "WorstCase"),
            Kind::Representation(d) => write!(f, "Representation({d:?})"),
            Kind::OfLoss(inner) => write!(f, "OfLoss({inner:?})"),
            Kind::Custom(_) => write!(f, "Custom"),
        }
    }
}

/// An evaluable pricing functional. Immutable and cheap to clone.
#[derive(Debug, Clone)]
pub struct PricingFunctional {
    name: String,
    kind: Kind,
    flags: Flags,
    space: Option<AtomSpace>,
}

impl PricingFunctional {
    fn new(name: impl Into<String>, kind: Kind, flags: Flags) -> Self {
        Self {
            name: name.into(),
            kind,
            flags,
            space: None,
        }
    }

    /// `X ↦ c·E[X]`.
    pub fn expectation(c: f64) -> Result<Self> {
        if !c.is_finite() {
            return Err(Error::InvalidParameter(format!("expectation scale must be finite, got {c}")));
        }
        Ok(Self::new(
            format!("expectation({c})"),
            Kind::Expectation { c },
            Flags {
                monotone: c >= 0.0,
                cash_additive: c == 1.0,
                ..Flags::ALL
            },
        ))
    }

    pub fn choquet(g: Distortion) -> Result<Self> {
        g.validate()?;
        let concave = g.is_concave();
        Ok(Self::new(
            format!("choquet({g:?})"),
            Kind::Choquet(g),
            Flags {
                convex: concave,
                sublinear: concave,
                ..Flags::ALL
            },
        ))
    }

    /// `(1/(1−β)) ∫_β¹ q_X(α) dα`.
    pub fn expected_shortfall(beta: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&beta) {
            return Err(Error::InvalidParameter(format!(
                "expected shortfall level must lie in [0,1), got {beta}"
            )));
        }
        Ok(Self::new(
            format!("expected_shortfall({beta})"),
            Kind::ExpectedShortfall { beta },
            Flags::ALL,
        ))
    }

    /// `X ↦ (1/θ) log E[exp(θX)]`.
    pub fn entropic(theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(Error::InvalidParameter(format!("entropic θ must be positive, got {theta}")));
        }
        Ok(Self::new(
            format!("entropic({theta})"),
            Kind::Entropic { theta },
            Flags {
                sublinear: false,
                comonotonic: false,
                ..Flags::ALL
            },
        ))
    }

    /// `E[X]` if `E[X] ≥ 0`, else `0`.
    pub fn gate() -> Self {
        Self::new(
            "gate",
            Kind::Gate,
            Flags {
                cash_additive: false,
                comonotonic: false,
                ..Flags::ALL
            },
        )
    }

    /// `inf{m : X + m ≥ −1} = −1 − min X`.
    pub fn floor_gauge() -> Self {
        Self::new(
            "floor_gauge",
            Kind::FloorGauge,
            Flags {
                convex: true,
                law_invariant: true,
                ..Flags::default()
            },
        )
    }

    /// `E[X] + λ E|X − E[X]|`.
    pub fn mean_abs_dev(lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!("mean_abs_dev λ must be ≥ 0, got {lambda}")));
        }
        Ok(Self::new(
            format!("mean_abs_dev({lambda})"),
            Kind::MeanAbsDev { lambda },
            Flags {
                monotone: lambda <= 0.5,
                comonotonic: lambda == 0.0,
                ..Flags::ALL
            },
        ))
    }

    /// Essential supremum, `max X`.
    pub fn worst_case() -> Self {
        Self::new("worst_case", Kind::WorstCase, Flags::ALL)
    }

    /// `sup_{Y∈𝒟} ∫ q_X q_Y`.
    pub fn representation(set: RepresentationSet) -> Result<Self> {
        set.validate()?;
        let (flags, space) = match &set {
            RepresentationSet::BoundedDensity { .. } => (Flags::ALL, None),
            RepresentationSet::Finite(ys) => {
                let monotone = ys.iter().all(|y| y.min() >= 0.0);
                let cash_additive = ys.iter().all(|y| (expectation(y) - 1.0).abs() <= 1e-12);
                (
                    Flags {
                        monotone,
                        cash_additive,
                        comonotonic: ys.len() == 1,
                        ..Flags::ALL
                    },
                    Some(ys[0].space()),
                )
            }
        };
        let mut f = Self::new(format!("representation({})", set.label()), Kind::Representation(set), flags);
        f.space = space;
        Ok(f)
    }

    /// `X ↦ F(−X)`: the functional applied to the loss.
    pub fn of_loss(inner: PricingFunctional) -> Self {
        let fl = inner.flags;
        let space = inner.space;
        let mut f = Self::new(
            format!("loss[{}]", inner.name),
            Kind::OfLoss(Box::new(inner)),
            Flags {
                convex: fl.convex,
                sublinear: fl.sublinear,
                monotone: false,
                law_invariant: fl.law_invariant,
                cash_additive: false,
                comonotonic: fl.comonotonic,
            },
        );
        f.space = space;
        f
    }

    /// Arbitrary evaluator with caller-declared flags.
    pub fn custom(
        name: impl Into<String>,
        flags: Flags,
        eval: impl Fn(&Payoff) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self::new(name, Kind::Custom(Arc::new(eval)), flags)
    }

    /// Replaces the declared flags (e.g. to audit a deliberately mislabeled functional).
    pub fn with_flags(mut self, flags: Flags) -> Self {
        self.flags = flags;
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Restricts evaluation to payoffs on `space`.
    pub fn bound_to(mut self, space: AtomSpace) -> Result<Self> {
        if let Some(s) = self.space {
            s.ensure_same(&space)?;
        }
        self.space = Some(space);
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn flags(&self) -> Flags {
        self.flags
    }

    pub fn space(&self) -> Option<AtomSpace> {
        self.space
    }

    pub fn eval(&self, x: &Payoff) -> Result<f64> {
        if let Some(space) = self.space {
            space.ensure_same(&x.space())?;
        }
        let v = match &self.kind {
            Kind::Expectation { c } => c * expectation(x),
            Kind::Choquet(g) => choquet_eval(g, x),
            Kind::ExpectedShortfall { beta } => quantile(x).upper_tail_integral(*beta) / (1.0 - beta),
            Kind::Entropic { theta } => {
                let m = x.max();
                let mean = x.values().iter().map(|v| (theta * (v - m)).exp()).sum::<f64>() / x.n() as f64;
                m + mean.ln() / theta
            }
            Kind::Gate => expectation(x).max(0.0),
            Kind::FloorGauge => -1.0 - x.min(),
            Kind::MeanAbsDev { lambda } => {
                let e = expectation(x);
                let mad = x.values().iter().map(|v| (v - e).abs()).sum::<f64>() / x.n() as f64;
                e + lambda * mad
            }
            Kind::WorstCase => x.max(),
            Kind::Representation(set) => representation_eval(set, x)?,
            Kind::OfLoss(inner) => inner.eval(&x.neg())?,
            Kind::Custom(f) => f(x),
        };
        if v.is_nan() || v == f64::NEG_INFINITY {
            return Err(Error::InvalidParameter(format!(
                "{} returned {v}; values must lie in ℝ ∪ {{+∞}}",
                self.name
            )));
        }
        Ok(v)
    }

    pub(crate) fn expectation_scale(&self) -> Option<f64> {
        match self.kind {
            Kind::Expectation { c } => Some(c),
            _ => None,
        }
    }

    pub(crate) fn kind_density_bound(&self) -> Option<f64> {
        match &self.kind {
            Kind::ExpectedShortfall { beta } => Some(1.0 / (1.0 - beta)),
            Kind::Representation(RepresentationSet::BoundedDensity { bound }) => Some(*bound),
            Kind::WorstCase => Some(f64::INFINITY),
            _ => None,
        }
    }
}
