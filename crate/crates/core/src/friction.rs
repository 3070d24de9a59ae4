//! Bid-ask spreads, frictionless payoffs, `Z`-additivity and the
//! collapse-to-the-mean scanner.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::functionals::{mul_ext, PricingFunctional, Witness};
use crate::prob::{derive_seed, expectation, rng_from_seed, sample_payoff, AtomSpace, DistributionSpec, Payoff};

/// Volume grid used when callers do not supply one.
pub const DEFAULT_M_GRID: [f64; 10] = [-3.0, -2.0, -1.0, -0.5, -0.25, 0.25, 0.5, 1.0, 2.0, 3.0];

/// `π(X) + π(−X)`, `+∞` absorbing.
pub fn spread(f: &PricingFunctional, x: &Payoff) -> Result<f64> {
    Ok(f.eval(x)? + f.eval(&x.neg())?)
}

pub fn is_frictionless(f: &PricingFunctional, x: &Payoff, tol: f64) -> Result<bool> {
    let (a, b) = (f.eval(x)?, f.eval(&x.neg())?);
    Ok(a.is_finite() && b.is_finite() && (a + b).abs() <= tol)
}

fn validate_m_grid(grid: &[f64]) -> Result<()> {
    let has = |m: f64| grid.contains(&m);
    if !(has(1.0) && has(-1.0)) || !grid.iter().any(|m| m.abs() >= 2.0) {
        return Err(Error::InvalidParameter(
            "m grid must contain ±1 and a magnitude ≥ 2".into(),
        ));
    }
    if grid.iter().any(|m| !m.is_finite()) {
        return Err(Error::InvalidParameter("m grid must be finite".into()));
    }
    Ok(())
}

/// `|π(mX) − mπ(X)| ≤ tol·max(1,|m|)` for every `m` in the grid.
pub fn is_strongly_frictionless(f: &PricingFunctional, x: &Payoff, m_grid: &[f64], tol: f64) -> Result<bool> {
    validate_m_grid(m_grid)?;
    let base = f.eval(x)?;
    if !base.is_finite() {
        return Ok(false);
    }
    for &m in m_grid {
        let v = f.eval(&x.scale(m))?;
        if !v.is_finite() || (v - m * base).abs() > tol * m.abs().max(1.0) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `Σ_m |π(mX) − mπ(X)|` over the grid; `+∞` if any value is infinite.
pub fn strong_residual(f: &PricingFunctional, x: &Payoff, m_grid: &[f64]) -> Result<f64> {
    let base = f.eval(x)?;
    let mut total = 0.0;
    for &m in m_grid {
        let v = f.eval(&x.scale(m))?;
        total += (v - mul_ext(m, base)).abs();
    }
    Ok(if total.is_nan() { f64::INFINITY } else { total })
}

#[derive(Debug, Clone, Serialize)]
pub struct FrictionReport {
    pub payoff_id: String,
    pub ask: f64,
    pub bid: f64,
    pub spread: f64,
    pub frictionless: bool,
    pub strongly_frictionless: bool,
    pub m_grid_used: Vec<f64>,
    pub tolerance: f64,
}

pub fn friction_report(
    f: &PricingFunctional,
    payoff_id: impl Into<String>,
    x: &Payoff,
    m_grid: &[f64],
    tol: f64,
) -> Result<FrictionReport> {
    let ask = f.eval(x)?;
    let bid = -f.eval(&x.neg())?;
    let frictionless = is_frictionless(f, x, tol)?;
    // a strongly frictionless payoff is frictionless by definition
    let strongly_frictionless = frictionless && is_strongly_frictionless(f, x, m_grid, tol)?;
    Ok(FrictionReport {
        payoff_id: payoff_id.into(),
        ask,
        bid,
        spread: ask - bid,
        frictionless,
        strongly_frictionless,
        m_grid_used: m_grid.to_vec(),
        tolerance: tol,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ZAdditivityReport {
    pub trials: usize,
    /// First `(X, m)` with `π(X+mZ) ≠ π(X) + mπ(Z)`.
    pub witness: Option<Witness>,
    /// First `(X, m)` with `π(X+mZ) > π(X) + mπ(Z)`.
    pub one_sided_witness: Option<Witness>,
}

impl ZAdditivityReport {
    pub fn falsified(&self) -> bool {
        self.witness.is_some()
    }
}

/// Randomized search for a violation of `π(X+mZ) = π(X) + mπ(Z)`, together
/// with its one-sided `≤` variant. Structured candidates `X = ∓Z` come first.
pub fn z_additivity_check(
    f: &PricingFunctional,
    z: &Payoff,
    trials: usize,
    tol: f64,
    seed: u64,
) -> Result<ZAdditivityReport> {
    let pz = f.eval(z)?;
    if !pz.is_finite() {
        return Err(Error::InvalidParameter(format!("π(Z) must be finite, got {pz}")));
    }
    let space = z.space();
    let scale = z.sup_norm().max(1.0);
    let cases: Vec<(Payoff, f64)> = (0..trials)
        .map(|i| match i {
            0 => (z.neg(), 1.0),
            1 => (z.clone(), -1.0),
            2 => (space.zero(), 2.0),
            3 => (z.neg(), 2.0),
            _ => {
                let mut rng = rng_from_seed(derive_seed(seed, i as u64));
                let spec = DistributionSpec::Normal { mean: 0.0, sd: scale };
                let x = sample_payoff(space, &spec, &mut rng);
                (x, rng.random_range(-3.0..3.0))
            }
        })
        .collect();
    let outcomes: Vec<(Option<Witness>, Option<Witness>)> = cases
        .into_par_iter()
        .map(|(x, m)| -> Result<_> {
            let lhs = f.eval(&x.add_scaled(z, m)?)?;
            let rhs = f.eval(&x)? + m * pz;
            let band = tol * (1.0 + lhs.abs().max(rhs.abs()));
            let w = |what: &str| Witness {
                description: format!("{what} at m={m}"),
                payoffs: vec![x.clone()],
                lhs,
                rhs,
            };
            let two = (!(lhs.is_finite() && rhs.is_finite() && (lhs - rhs).abs() <= band) && lhs != rhs)
                .then(|| w("π(X+mZ) ≠ π(X)+mπ(Z)"));
            let one = (lhs > rhs + band).then(|| w("π(X+mZ) > π(X)+mπ(Z)"));
            Ok((two, one))
        })
        .collect::<Result<_>>()?;
    let mut report = ZAdditivityReport {
        trials,
        witness: None,
        one_sided_witness: None,
    };
    for (two, one) in outcomes {
        if report.witness.is_none() {
            report.witness = two;
        }
        if report.one_sided_witness.is_none() {
            report.one_sided_witness = one;
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CollapseVerdict {
    Collapse { c: f64 },
    NoFrictionlessRisky,
    /// Frictionless risky payoffs exist only with zero mean.
    Boundary,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanMode {
    /// Sublinear functionals: minimize the bid-ask spread.
    Spread,
    /// Convex functionals: minimize `Σ_m |π(mZ) − mπ(Z)|`.
    Strong,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanCandidate {
    pub payoff: Payoff,
    pub mean: f64,
    pub spread: f64,
    /// The minimized quantity (spread or strong residual).
    pub objective: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CollapseReport {
    pub functional: String,
    pub n: usize,
    pub mode: ScanMode,
    pub verdict: CollapseVerdict,
    /// Best candidate over all restarts.
    pub best_witness: Option<ScanCandidate>,
    /// Best candidate among payoffs with `|E[Z]|` bounded away from zero.
    pub best_nonzero_mean: Option<ScanCandidate>,
    /// Minimal objective found; a certificate only up to this value.
    pub min_objective: f64,
    /// `max |π(X) − c E[X]|` on a fresh batch, `c = π(1)`.
    pub linearity_residual: f64,
    pub c_probe: f64,
    pub mean_threshold: f64,
    pub tolerance: f64,
    pub restarts: usize,
    pub evaluations: usize,
    pub seed: u64,
    /// Candidates are normalized to `max Z − min Z = 1`.
    pub normalization: &'static str,
}

const LINEARITY_BATCH: usize = 64;

struct Searcher<'a> {
    f: &'a PricingFunctional,
    mode: ScanMode,
    n: usize,
}

impl Searcher<'_> {
    /// Sorted, mean-zero, unit-range shape plus the mean `mu`.
    fn candidate(&self, v: &[f64], mu: f64) -> Option<Payoff> {
        let mut s = v.to_vec();
        s.sort_by(f64::total_cmp);
        let range = s[self.n - 1] - s[0];
        if !(range > 0.0) || !range.is_finite() {
            return None;
        }
        let mean = s.iter().sum::<f64>() / self.n as f64;
        Payoff::new(s.iter().map(|x| (x - mean) / range + mu).collect()).ok()
    }

    fn objective(&self, z: &Payoff) -> Result<f64> {
        let v = match self.mode {
            ScanMode::Spread => spread(self.f, z)?,
            ScanMode::Strong => strong_residual(self.f, z, &DEFAULT_M_GRID)?,
        };
        Ok(if v.is_nan() { f64::INFINITY } else { v.abs() })
    }

    /// Coordinate descent over the shape vector and the mean, with the mean
    /// restricted to `|mu| ≥ mu_min` when `mu_min > 0`.
    fn descend(&self, mut v: Vec<f64>, mut mu: f64, mu_min: f64, budget: usize) -> Result<(Option<ScanCandidate>, usize)> {
        let clamp_mu = |m: f64| {
            let m = m.clamp(-1.0, 1.0);
            if mu_min > 0.0 && m.abs() < mu_min {
                if m < 0.0 { -mu_min } else { mu_min }
            } else {
                m
            }
        };
        mu = clamp_mu(mu);
        let mut evals = 0;
        let mut best_val = match self.candidate(&v, mu) {
            Some(z) => {
                evals += 1;
                self.objective(&z)?
            }
            None => f64::INFINITY,
        };
        let mut step = 0.25;
        while step > 1e-12 && evals < budget {
            let mut improved = false;
            for coord in 0..=self.n {
                for dir in [1.0, -1.0] {
                    let (mut v2, mut mu2) = (v.clone(), mu);
                    if coord == self.n {
                        mu2 = clamp_mu(mu + dir * step);
                        // crossing zero is allowed in the restricted search
                        if mu_min > 0.0 && mu2 == mu {
                            mu2 = -mu;
                        }
                    } else {
                        v2[coord] += dir * step;
                    }
                    let Some(z) = self.candidate(&v2, mu2) else { continue };
                    evals += 1;
                    let val = self.objective(&z)?;
                    if val < best_val {
                        best_val = val;
                        v = v2;
                        mu = mu2;
                        improved = true;
                        break;
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        let Some(z) = self.candidate(&v, mu) else {
            return Ok((None, evals));
        };
        let spread = spread(self.f, &z)?;
        Ok((
            Some(ScanCandidate {
                mean: expectation(&z),
                payoff: z,
                spread,
                objective: best_val,
            }),
            evals,
        ))
    }
}

fn better(a: &Option<ScanCandidate>, b: &Option<ScanCandidate>) -> bool {
    match (a, b) {
        (Some(x), Some(y)) => x.objective < y.objective,
        (Some(_), None) => true,
        _ => false,
    }
}

/// Searches for frictionless (sublinear `F`) or strongly frictionless
/// (convex `F`) risky payoffs and classifies `F` as collapsing to `c·E`,
/// having no frictionless risky payoff, or the zero-mean boundary case.
///
/// `budget` is the total number of objective evaluations across restarts.
pub fn collapse_scan(
    f: &PricingFunctional,
    space: AtomSpace,
    tol: f64,
    seed: u64,
    budget: usize,
) -> Result<CollapseReport> {
    let flags = f.flags();
    if !flags.law_invariant {
        return Err(Error::FlagViolation(format!("{} is not declared law-invariant", f.name())));
    }
    if !(flags.convex || flags.sublinear) {
        return Err(Error::FlagViolation(format!("{} is not declared convex", f.name())));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    let n = space.n();
    if n < 2 {
        return Err(Error::InvalidParameter("a risky payoff needs at least two atoms".into()));
    }
    let pi_zero = f.eval(&space.zero())?;
    if pi_zero.abs() > tol {
        return Err(Error::InvalidParameter(format!("collapse scan requires π(0) = 0, got {pi_zero}")));
    }
    let mode = if flags.sublinear { ScanMode::Spread } else { ScanMode::Strong };
    let searcher = Searcher { f, mode, n };
    let mean_threshold = tol.sqrt();
    let mu_min = 2.0 * mean_threshold;

    let restarts = (budget / (400 * (n + 1))).clamp(4, 32);
    let per_restart = (budget / restarts).max(1);
    // Even restarts search freely (half of them from mean 0), odd restarts
    // keep the mean away from zero.
    let results: Vec<(Option<ScanCandidate>, usize, bool)> = (0..restarts)
        .into_par_iter()
        .map(|r| -> Result<_> {
            let mut rng = rng_from_seed(derive_seed(seed, r as u64));
            let v: Vec<f64> = if r < 2 {
                (0..n).map(|i| if 2 * i < n { 0.0 } else { 1.0 }).collect()
            } else {
                (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
            };
            let restricted = r % 2 == 1;
            let mu = if restricted {
                rng.random_range(-1.0..1.0)
            } else if r % 4 == 0 {
                0.0
            } else {
                rng.random_range(-1.0..1.0)
            };
            let (c, e) = searcher.descend(v, mu, if restricted { mu_min } else { 0.0 }, per_restart)?;
            Ok((c, e, restricted))
        })
        .collect::<Result<_>>()?;

    let mut best: Option<ScanCandidate> = None;
    let mut best_nonzero: Option<ScanCandidate> = None;
    let mut evaluations = 0;
    for (cand, evals, _) in results {
        evaluations += evals;
        if let Some(c) = &cand {
            if c.mean.abs() > mean_threshold && better(&cand, &best_nonzero) {
                best_nonzero = Some(c.clone());
            }
        }
        if better(&cand, &best) {
            best = cand;
        }
    }

    let c_probe = f.eval(&Payoff::constant(space, 1.0))?;
    let mut rng = rng_from_seed(derive_seed(seed, u64::MAX));
    let spec = DistributionSpec::Normal { mean: 0.0, sd: 1.0 };
    let mut linearity_residual: f64 = 0.0;
    for _ in 0..LINEARITY_BATCH {
        let x = sample_payoff(space, &spec, &mut rng);
        let r = (f.eval(&x)? - mul_ext(c_probe, expectation(&x))).abs();
        linearity_residual = linearity_residual.max(if r.is_nan() { f64::INFINITY } else { r });
    }

    let min_objective = best.as_ref().map_or(f64::INFINITY, |c| c.objective);
    let nonzero_hit = best_nonzero.as_ref().is_some_and(|c| c.objective <= tol);
    let verdict = if nonzero_hit {
        if c_probe.is_finite() && linearity_residual <= tol {
            CollapseVerdict::Collapse { c: c_probe }
        } else {
            CollapseVerdict::Inconclusive
        }
    } else if min_objective <= tol {
        CollapseVerdict::Boundary
    } else {
        CollapseVerdict::NoFrictionlessRisky
    };

    Ok(CollapseReport {
        functional: f.name().to_string(),
        n,
        mode,
        verdict,
        best_witness: best,
        best_nonzero_mean: best_nonzero,
        min_objective,
        linearity_residual,
        c_probe,
        mean_threshold,
        tolerance: tol,
        restarts,
        evaluations,
        seed,
        normalization: "max(Z) - min(Z) = 1",
    })
}

/// Exhaustive certificate for `n ∈ {2, 3}`: minimal scan objective over all
/// sorted nonconstant vectors with entries on a `levels`-point grid of
/// `[−1, 1]`, normalized to unit range.
pub fn exhaustive_certificate(f: &PricingFunctional, n: usize, levels: usize) -> Result<ScanCandidate> {
    if !(2..=3).contains(&n) {
        return Err(Error::InvalidParameter(format!("exhaustive certificate supports n ∈ {{2,3}}, got {n}")));
    }
    if levels < 2 {
        return Err(Error::InvalidParameter("need at least two grid levels".into()));
    }
    let mode = if f.flags().sublinear { ScanMode::Spread } else { ScanMode::Strong };
    let searcher = Searcher { f, mode, n };
    let grid: Vec<f64> = (0..levels).map(|i| -1.0 + 2.0 * i as f64 / (levels - 1) as f64).collect();
    let mut best: Option<ScanCandidate> = None;
    let mut consider = |vals: &[f64]| -> Result<()> {
        let (lo, hi) = (vals[0], vals[n - 1]);
        if hi <= lo {
            return Ok(());
        }
        let z = Payoff::new(vals.iter().map(|v| v / (hi - lo)).collect())?;
        let objective = searcher.objective(&z)?;
        let cand = Some(ScanCandidate {
            mean: expectation(&z),
            spread: spread(f, &z)?,
            payoff: z,
            objective,
        });
        if better(&cand, &best) {
            best = cand;
        }
        Ok(())
    };
    for (i, &a) in grid.iter().enumerate() {
        for (j, &b) in grid.iter().enumerate().skip(i) {
            if n == 2 {
                consider(&[a, b])?;
            } else {
                for &c in &grid[j..] {
                    consider(&[a, b, c])?;
                }
            }
        }
    }
    best.ok_or_else(|| Error::InvalidParameter("grid produced no risky payoff".into()))
}

#[derive(Debug, Clone, Serialize)]
pub struct LandscapeRow {
    pub mu: f64,
    pub mean: f64,
    pub spread: f64,
    pub strong_residual: f64,
}

/// Spread along `Z(μ) = shape − E[shape] + μ` for each `μ`.
pub fn spread_landscape(f: &PricingFunctional, shape: &Payoff, mus: &[f64]) -> Result<Vec<LandscapeRow>> {
    let centered = shape.shift(-expectation(shape));
    mus.iter()
        .map(|&mu| {
            let z = centered.shift(mu);
            Ok(LandscapeRow {
                mu,
                mean: expectation(&z),
                spread: spread(f, &z)?,
                strong_residual: strong_residual(f, &z, &DEFAULT_M_GRID)?,
            })
        })
        .collect()
}

pub fn landscape_csv(rows: &[LandscapeRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(|e| Error::Parse(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
}
