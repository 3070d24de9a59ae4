//! JSON file formats: scenarios, functional, market, acceptance and Young
//! function specs, and the run configuration consumed by the CLI.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::capital::{AcceptanceFlags, AcceptanceSet, Market};
use crate::error::{Error, Result};
use crate::functionals::{Distortion, Flags, PricingFunctional, RepresentationSet};
use crate::orlicz::YoungFunction;
use crate::prob::{AtomSpace, Payoff};

pub fn from_json_str<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

pub fn from_json_file<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    from_json_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

/// `{"n": 4, "payoffs": {"X": [..], ...}}`; payoffs are keyed by name and
/// iterated in name order.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub n: usize,
    pub payoffs: BTreeMap<String, Payoff>,
}

impl Scenario {
    pub fn space(&self) -> Result<AtomSpace> {
        AtomSpace::new(self.n)
    }

    /// Nonempty, and every payoff lives on `n` atoms.
    pub fn validate(&self) -> Result<()> {
        let space = self.space()?;
        if self.payoffs.is_empty() {
            return Err(Error::Parse("scenario has no payoffs".into()));
        }
        for x in self.payoffs.values() {
            space.ensure_same(&x.space())?;
        }
        Ok(())
    }
}

/// Functional spec, e.g. `{"type": "expected_shortfall", "beta": 0.95}`, with
/// optional `"name"` and a `"flags"` override.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FunctionalSpec {
    #[serde(flatten)]
    pub kind: FunctionalKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flags: Option<Flags>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FunctionalKind {
    Expectation {
        #[serde(default = "one")]
        c: f64,
    },
    ExpectedShortfall {
        beta: f64,
    },
    Entropic {
        theta: f64,
    },
    Gate,
    FloorGauge,
    MeanAbsDev {
        lambda: f64,
    },
    WorstCase,
    Choquet {
        distortion: Distortion,
    },
    BoundedDensity {
        m: f64,
    },
    /// `X ↦ F(−X)`.
    Loss {
        of: Box<FunctionalSpec>,
    },
}

fn one() -> f64 {
    1.0
}

impl FunctionalSpec {
    pub fn build(&self) -> Result<PricingFunctional> {
        let mut f = match &self.kind {
            FunctionalKind::Expectation { c } => PricingFunctional::expectation(*c)?,
            FunctionalKind::ExpectedShortfall { beta } => PricingFunctional::expected_shortfall(*beta)?,
            FunctionalKind::Entropic { theta } => PricingFunctional::entropic(*theta)?,
            FunctionalKind::Gate => PricingFunctional::gate(),
            FunctionalKind::FloorGauge => PricingFunctional::floor_gauge(),
            FunctionalKind::MeanAbsDev { lambda } => PricingFunctional::mean_abs_dev(*lambda)?,
            FunctionalKind::WorstCase => PricingFunctional::worst_case(),
            FunctionalKind::Choquet { distortion } => PricingFunctional::choquet(distortion.clone())?,
            FunctionalKind::BoundedDensity { m } => {
                PricingFunctional::representation(RepresentationSet::BoundedDensity { bound: *m })?
            }
            FunctionalKind::Loss { of } => PricingFunctional::of_loss(of.build()?),
        };
        if let Some(flags) = self.flags {
            f = f.with_flags(flags);
        }
        if let Some(name) = &self.name {
            f = f.with_name(name.clone());
        }
        Ok(f)
    }
}

/// `{"basis": [[...], ...], "prices": [...], "numeraire_index": 0}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketSpec {
    pub basis: Vec<Vec<f64>>,
    pub prices: Vec<f64>,
    #[serde(default)]
    pub numeraire_index: usize,
}

impl MarketSpec {
    pub fn build(&self) -> Result<Market> {
        let basis = self
            .basis
            .iter()
            .map(|b| Payoff::new(b.clone()))
            .collect::<Result<Vec<_>>>()?;
        Market::new(basis, self.prices.clone(), self.numeraire_index)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum AcceptanceSpec {
    NonnegativeMean,
    /// `{X : ES_β(−X) ≤ 0}`.
    ExpectedShortfall {
        beta: f64,
    },
    RiskFree,
    BoundedShortfall {
        #[serde(default = "one")]
        level: f64,
    },
    AtomWeighted {
        weights: Vec<f64>,
    },
    /// `{X : R(X) ≤ 0}` for the functional `R`, with declared flags.
    Gauge {
        functional: FunctionalSpec,
        flags: AcceptanceFlags,
        #[serde(default)]
        name: Option<String>,
    },
}

impl AcceptanceSpec {
    pub fn build(&self) -> Result<AcceptanceSet> {
        Ok(match self {
            AcceptanceSpec::NonnegativeMean => AcceptanceSet::nonnegative_mean(),
            AcceptanceSpec::ExpectedShortfall { beta } => AcceptanceSet::expected_shortfall(*beta)?,
            AcceptanceSpec::RiskFree => AcceptanceSet::risk_free(),
            AcceptanceSpec::BoundedShortfall { level } => AcceptanceSet::bounded_shortfall(*level)?,
            AcceptanceSpec::AtomWeighted { weights } => AcceptanceSet::atom_weighted(weights.clone())?,
            AcceptanceSpec::Gauge { functional, flags, name } => {
                let r = functional.build()?;
                let name = name.clone().unwrap_or_else(|| format!("gauge({})", r.name()));
                AcceptanceSet::from_gauge(name, r, *flags)
            }
        })
    }
}

/// Scenario given inline or as a path relative to the config file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScenarioSource {
    Path(PathBuf),
    Inline(Scenario),
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Delta2Grid {
    pub t_min: f64,
    pub t_max: f64,
    pub grid_size: usize,
}

impl Default for Delta2Grid {
    fn default() -> Self {
        Self {
            t_min: 0.01,
            t_max: 50.0,
            grid_size: 60,
        }
    }
}

/// Run configuration shared by every CLI subcommand; each subcommand reads
/// the fields it needs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub command: Option<String>,
    #[serde(default)]
    pub scenario: Option<ScenarioSource>,
    #[serde(default)]
    pub functionals: Vec<FunctionalSpec>,
    #[serde(default)]
    pub market: Option<MarketSpec>,
    #[serde(default)]
    pub acceptance: Vec<AcceptanceSpec>,
    #[serde(default)]
    pub young: Vec<YoungFunction>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub tolerance: Option<f64>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Atom count for scans and audits when no scenario is given.
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub trials: Option<usize>,
    #[serde(default)]
    pub budget: Option<usize>,
    #[serde(default)]
    pub delta2: Option<Delta2Grid>,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(tol) = self.tolerance {
            if !(tol > 0.0 && tol.is_finite()) {
                return Err(Error::Parse(format!("tolerance must be positive, got {tol}")));
            }
        }
        Ok(())
    }

    /// Loads the scenario, resolving a relative path against `base_dir`.
    pub fn load_scenario(&self, base_dir: &Path) -> Result<Option<Scenario>> {
        let scenario = match &self.scenario {
            None => return Ok(None),
            Some(ScenarioSource::Inline(s)) => s.clone(),
            Some(ScenarioSource::Path(p)) => {
                let path = if p.is_absolute() { p.clone() } else { base_dir.join(p) };
                if !path.exists() {
                    return Err(Error::Parse(format!("scenario file {} does not exist", path.display())));
                }
                from_json_file(&path)?
            }
        };
        scenario.validate()?;
        Ok(Some(scenario))
    }
}
