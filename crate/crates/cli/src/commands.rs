use std::path::PathBuf;

use lawprice_core::capital::{conditioning_closure_check, risk_measure_batch, ClosureReport, RiskReport};
use lawprice_core::formats::{Delta2Grid, RunConfig, Scenario};
use lawprice_core::friction::{collapse_scan, friction_report, landscape_csv, spread_landscape, CollapseReport, DEFAULT_M_GRID};
use lawprice_core::functionals::{flag_audit, schur_convexity_report, FlagAudit, SchurReport};
use lawprice_core::orlicz::{delta2_check, luxemburg_norm, norm_order_check, Delta2Report, NormOrderReport};
use lawprice_core::{AcceptanceFlags, AtomSpace, Flags, Payoff, PricingFunctional};
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::output::{to_json, Envelope};

const DEFAULT_N: usize = 8;
const DEFAULT_TRIALS: usize = 500;
const DEFAULT_BUDGET: usize = 20_000;

pub struct Context {
    pub command: &'static str,
    pub config: RunConfig,
    pub base_dir: PathBuf,
    pub config_hash: String,
    pub seed: u64,
    pub tol: f64,
}

/// Rendered report, extra files keyed by suffix, and an optional failure
/// raised after the report is written.
pub struct Output {
    pub report: String,
    pub attachments: Vec<(String, String)>,
    pub failure: Option<CliError>,
}

impl Context {
    fn render<T: Serialize>(&self, result: T) -> CliResult<String> {
        to_json(&Envelope {
            tool: "lawprice",
            version: env!("CARGO_PKG_VERSION"),
            command: self.command,
            config_hash: &self.config_hash,
            seed: self.seed,
            tolerance: self.tol,
            result,
        })
    }

    fn scenario(&self) -> CliResult<Option<Scenario>> {
        Ok(self.config.load_scenario(&self.base_dir)?)
    }

    fn require_scenario(&self) -> CliResult<Scenario> {
        self.scenario()?
            .ok_or_else(|| CliError::Config(format!("{} needs a scenario", self.command)))
    }

    fn functionals(&self) -> CliResult<Vec<PricingFunctional>> {
        if self.config.functionals.is_empty() {
            return Err(CliError::Config(format!("{} needs at least one functional", self.command)));
        }
        Ok(self
            .config
            .functionals
            .iter()
            .map(|s| s.build())
            .collect::<lawprice_core::Result<_>>()?)
    }

    fn space(&self, scenario: Option<&Scenario>) -> CliResult<AtomSpace> {
        let n = self.config.n.or(scenario.map(|s| s.n)).unwrap_or(DEFAULT_N);
        Ok(AtomSpace::new(n)?)
    }
}

#[derive(Serialize)]
struct EvalRow {
    payoff: String,
    value: f64,
    ask: f64,
    bid: f64,
    spread: f64,
    frictionless: bool,
    strongly_frictionless: bool,
}

#[derive(Serialize)]
struct EvalBlock {
    functional: String,
    flags: Flags,
    rows: Vec<EvalRow>,
}

pub fn eval(ctx: &Context) -> CliResult<Output> {
    let scenario = ctx.require_scenario()?;
    let mut blocks = Vec::new();
    for f in ctx.functionals()? {
        let mut rows = Vec::new();
        for (name, x) in &scenario.payoffs {
            let r = friction_report(&f, name.clone(), x, &DEFAULT_M_GRID, ctx.tol)?;
            rows.push(EvalRow {
                payoff: r.payoff_id,
                value: r.ask,
                ask: r.ask,
                bid: r.bid,
                spread: r.spread,
                frictionless: r.frictionless,
                strongly_frictionless: r.strongly_frictionless,
            });
        }
        blocks.push(EvalBlock {
            functional: f.name().to_string(),
            flags: f.flags(),
            rows,
        });
    }
    Ok(Output {
        report: ctx.render(&blocks)?,
        attachments: vec![],
        failure: None,
    })
}

pub fn collapse(ctx: &Context) -> CliResult<Output> {
    let scenario = ctx.scenario()?;
    let space = ctx.space(scenario.as_ref())?;
    let budget = ctx.config.budget.unwrap_or(DEFAULT_BUDGET);
    let mus: Vec<f64> = (0..=40).map(|i| i as f64 / 10.0 - 2.0).collect();
    let mut reports: Vec<CollapseReport> = Vec::new();
    let mut attachments = Vec::new();
    for (i, f) in ctx.functionals()?.iter().enumerate() {
        let report = collapse_scan(f, space, ctx.tol, ctx.seed, budget)?;
        let shape = report
            .best_witness
            .as_ref()
            .map(|w| w.payoff.clone())
            .filter(|p| !p.is_constant())
            .unwrap_or_else(|| two_point(space));
        let rows = spread_landscape(f, &shape, &mus)?;
        attachments.push((format!("landscape-{i}.csv"), landscape_csv(&rows)?));
        reports.push(report);
    }
    Ok(Output {
        report: ctx.render(&reports)?,
        attachments,
        failure: None,
    })
}

fn two_point(space: AtomSpace) -> Payoff {
    let n = space.n();
    Payoff::new((0..n).map(|i| if 2 * i < n { -0.5 } else { 0.5 }).collect()).expect("finite values")
}

#[derive(Serialize)]
struct RiskRow {
    payoff: String,
    value: f64,
    solver: RiskReport,
}

#[derive(Serialize)]
struct RiskBlock {
    acceptance: String,
    flags: AcceptanceFlags,
    rows: Vec<RiskRow>,
}

pub fn risk(ctx: &Context) -> CliResult<Output> {
    let scenario = ctx.require_scenario()?;
    let market = ctx
        .config
        .market
        .as_ref()
        .ok_or_else(|| CliError::Config("risk needs a market".into()))?
        .build()?;
    if ctx.config.acceptance.is_empty() {
        return Err(CliError::Config("risk needs at least one acceptance set".into()));
    }
    let names: Vec<&String> = scenario.payoffs.keys().collect();
    let xs: Vec<Payoff> = scenario.payoffs.values().cloned().collect();
    for x in &xs {
        market.space().ensure_same(&x.space())?;
    }
    let mut blocks = Vec::new();
    for spec in &ctx.config.acceptance {
        let a = spec.build()?;
        let reports = risk_measure_batch(&a, &market, &xs, ctx.tol)?;
        blocks.push(RiskBlock {
            acceptance: a.name().to_string(),
            flags: a.flags(),
            rows: names
                .iter()
                .zip(reports)
                .map(|(name, r)| RiskRow {
                    payoff: name.to_string(),
                    value: r.value,
                    solver: r,
                })
                .collect(),
        });
    }
    Ok(Output {
        report: ctx.render(&blocks)?,
        attachments: vec![],
        failure: None,
    })
}

#[derive(Serialize)]
struct FunctionalAudit {
    flags: FlagAudit,
    schur: Option<SchurReport>,
}

#[derive(Serialize)]
struct AcceptanceAudit {
    acceptance: String,
    closure: Option<ClosureReport>,
    skipped: Option<String>,
}

#[derive(Serialize)]
struct AuditReport {
    passed: bool,
    n: usize,
    trials: usize,
    functionals: Vec<FunctionalAudit>,
    acceptance: Vec<AcceptanceAudit>,
}

pub fn audit(ctx: &Context) -> CliResult<Output> {
    let scenario = ctx.scenario()?;
    let space = ctx.space(scenario.as_ref())?;
    let trials = ctx.config.trials.unwrap_or(DEFAULT_TRIALS);
    if ctx.config.functionals.is_empty() && ctx.config.acceptance.is_empty() {
        return Err(CliError::Config("audit needs functionals or acceptance sets".into()));
    }
    let mut failures = Vec::new();
    let mut functionals = Vec::new();
    for spec in &ctx.config.functionals {
        let f = spec.build()?;
        let flags = flag_audit(&f, space, trials, ctx.seed)?;
        if !flags.passed() {
            failures.push(format!("{}: declared flags falsified", f.name()));
        }
        let schur = if f.flags().law_invariant && f.flags().convex {
            let r = schur_convexity_report(&f, space, trials, ctx.seed, ctx.tol)?;
            if !r.passed() {
                failures.push(format!("{}: conditioning or convex-order violation", f.name()));
            }
            Some(r)
        } else {
            None
        };
        functionals.push(FunctionalAudit { flags, schur });
    }
    let mut acceptance = Vec::new();
    for spec in &ctx.config.acceptance {
        let a = spec.build()?;
        let fl = a.flags();
        let entry = if fl.convex && fl.closed && fl.law_invariant {
            let r = conditioning_closure_check(&a, space, trials, ctx.seed)?;
            if !r.passed() {
                failures.push(format!("{}: not closed under conditioning", a.name()));
            }
            AcceptanceAudit {
                acceptance: a.name().to_string(),
                closure: Some(r),
                skipped: None,
            }
        } else {
            AcceptanceAudit {
                acceptance: a.name().to_string(),
                closure: None,
                skipped: Some("not declared convex, closed and law-invariant".into()),
            }
        };
        acceptance.push(entry);
    }
    let report = AuditReport {
        passed: failures.is_empty(),
        n: space.n(),
        trials,
        functionals,
        acceptance,
    };
    Ok(Output {
        report: ctx.render(&report)?,
        attachments: vec![],
        failure: (!failures.is_empty()).then(|| CliError::AuditFailed(failures.join("; "))),
    })
}

#[derive(Serialize)]
struct NormRow {
    payoff: String,
    norm: f64,
    in_heart: bool,
}

#[derive(Serialize)]
#[serde(untagged)]
enum Delta2Outcome {
    Report(Delta2Report),
    Error { error: String },
}

#[derive(Serialize)]
struct OrliczBlock {
    young: String,
    finite: bool,
    norms: Vec<NormRow>,
    norm_order: NormOrderReport,
    delta2: Delta2Outcome,
}

pub fn orlicz(ctx: &Context) -> CliResult<Output> {
    if ctx.config.young.is_empty() {
        return Err(CliError::Config("orlicz needs at least one Young function".into()));
    }
    let scenario = ctx.scenario()?;
    let trials = ctx.config.trials.unwrap_or(DEFAULT_TRIALS);
    let grid = ctx.config.delta2.unwrap_or_default();
    let mut blocks = Vec::new();
    for phi in &ctx.config.young {
        phi.validate()?;
        let mut norms = Vec::new();
        if let Some(s) = &scenario {
            for (name, x) in &s.payoffs {
                norms.push(NormRow {
                    payoff: name.clone(),
                    norm: luxemburg_norm(phi, x, ctx.tol)?,
                    in_heart: phi.in_heart(x),
                });
            }
        }
        let Delta2Grid {
            t_min,
            t_max,
            grid_size,
        } = grid;
        let delta2 = match delta2_check(phi, t_min, t_max, grid_size) {
            Ok(r) => Delta2Outcome::Report(r),
            Err(e @ lawprice_core::Error::NonFiniteYoung) => Delta2Outcome::Error { error: e.to_string() },
            Err(e) => return Err(e.into()),
        };
        blocks.push(OrliczBlock {
            young: phi.name(),
            finite: phi.is_finite(),
            norms,
            norm_order: norm_order_check(phi, trials, ctx.seed, ctx.tol)?,
            delta2,
        });
    }
    Ok(Output {
        report: ctx.render(&blocks)?,
        attachments: vec![],
        failure: None,
    })
}
