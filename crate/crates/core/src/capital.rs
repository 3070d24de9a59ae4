//! Acceptance sets, markets of eligible payoffs and the risk measure
//! `ρ(X) = inf{ψ(Z) : Z ∈ 𝓜, X + Z ∈ 𝒜}`.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::PricingFunctional;
use crate::prob::{
    condition, derive_seed, expectation, random_permutation, rng_from_seed, sample_payoff, AtomSpace,
    DistributionSpec, Partition, Payoff,
};

/// Number of bracket doublings before a sentinel is returned.
pub const EXPANSION_BUDGET: u32 = 60;
/// Largest supported number of eligible payoffs.
pub const MAX_BASIS: usize = 3;
const MAX_ITER: usize = 300;
const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AcceptanceFlags {
    pub convex: bool,
    pub conic: bool,
    pub monotone: bool,
    pub law_invariant: bool,
    pub closed: bool,
}

impl AcceptanceFlags {
    pub const COHERENT: AcceptanceFlags = AcceptanceFlags {
        convex: true,
        conic: true,
        monotone: true,
        law_invariant: true,
        closed: true,
    };

    pub fn is_coherent(&self) -> bool {
        self.convex && self.conic && self.monotone && self.law_invariant
    }
}

type Membership = Arc<dyn Fn(&Payoff) -> bool + Send + Sync>;

#[derive(Clone)]
enum Rule {
    NonnegativeMean,
    Gauge(PricingFunctional),
    RiskFree,
    BoundedShortfall { level: f64 },
    AtomWeighted { weights: Vec<f64> },
    Custom(Membership),
}

/// A set of acceptable payoffs, given by a membership test and, for most
/// sets, a gauge `R` with `X ∈ 𝒜 ⟺ R(X) ≤ 0`.
#[derive(Clone)]
pub struct AcceptanceSet {
    name: String,
    rule: Rule,
    flags: AcceptanceFlags,
}

impl fmt::Debug for AcceptanceSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AcceptanceSet")
            .field("name", &self.name)
            .field("flags", &self.flags)
            .finish()
    }
}

impl AcceptanceSet {
    /// `{X : E[X] ≥ 0}`.
    pub fn nonnegative_mean() -> Self {
        Self {
            name: "nonnegative_mean".into(),
            rule: Rule::NonnegativeMean,
            flags: AcceptanceFlags::COHERENT,
        }
    }

    /// `{X : R(X) ≤ 0}` for a caller-supplied gauge and declared flags.
    pub fn from_gauge(name: impl Into<String>, gauge: PricingFunctional, flags: AcceptanceFlags) -> Self {
        Self {
            name: name.into(),
            rule: Rule::Gauge(gauge),
            flags,
        }
    }

    /// `{X : ES_β(−X) ≤ 0}`.
    pub fn expected_shortfall(beta: f64) -> Result<Self> {
        let es = PricingFunctional::expected_shortfall(beta)?;
        Ok(Self::from_gauge(
            format!("es_acceptance({beta})"),
            PricingFunctional::of_loss(es),
            AcceptanceFlags::COHERENT,
        ))
    }

    /// Constant payoffs. Convex, conic, closed and law-invariant but not monotone.
    pub fn risk_free() -> Self {
        Self {
            name: "risk_free".into(),
            rule: Rule::RiskFree,
            flags: AcceptanceFlags {
                monotone: false,
                ..AcceptanceFlags::COHERENT
            },
        }
    }

    /// `{X : E[min(X, 0)] ≥ −level}`. Convex and monotone but not conic.
    pub fn bounded_shortfall(level: f64) -> Result<Self> {
        if !(level > 0.0 && level.is_finite()) {
            return Err(Error::InvalidParameter(format!("shortfall level must be positive, got {level}")));
        }
        Ok(Self {
            name: format!("bounded_shortfall({level})"),
            rule: Rule::BoundedShortfall { level },
            flags: AcceptanceFlags {
                conic: false,
                ..AcceptanceFlags::COHERENT
            },
        })
    }

    /// `{X : Σ wᵢ Xᵢ ≥ 0}` with nonnegative weights, not all zero. Law-invariant
    /// only for constant weights.
    pub fn atom_weighted(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() || weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidParameter("atom weights must be finite and nonnegative".into()));
        }
        if weights.iter().all(|&w| w == 0.0) {
            return Err(Error::InvalidParameter("atom weights must not all vanish".into()));
        }
        let law_invariant = weights.iter().all(|&w| w == weights[0]);
        Ok(Self {
            name: "atom_weighted".into(),
            rule: Rule::AtomWeighted { weights },
            flags: AcceptanceFlags {
                law_invariant,
                ..AcceptanceFlags::COHERENT
            },
        })
    }

    /// Membership-only set. The solver falls back to scanning when no gauge
    /// is available and the set is not monotone.
    pub fn custom(
        name: impl Into<String>,
        flags: AcceptanceFlags,
        membership: impl Fn(&Payoff) -> bool + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            rule: Rule::Custom(Arc::new(membership)),
            flags,
        }
    }

    pub fn with_flags(mut self, flags: AcceptanceFlags) -> Self {
        self.flags = flags;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn flags(&self) -> AcceptanceFlags {
        self.flags
    }

    pub fn has_gauge(&self) -> bool {
        !matches!(self.rule, Rule::Custom(_))
    }

    /// Gauge value `R(X)`; `None` for membership-only sets.
    pub fn gauge(&self, x: &Payoff) -> Option<Result<f64>> {
        let v = match &self.rule {
            Rule::NonnegativeMean => Ok(-expectation(x)),
            Rule::Gauge(r) => r.eval(x),
            Rule::RiskFree => Ok(x.max() - x.min()),
            Rule::BoundedShortfall { level } => {
                let shortfall = x.values().iter().map(|v| v.min(0.0)).sum::<f64>() / x.n() as f64;
                Ok(-level - shortfall)
            }
            Rule::AtomWeighted { weights } => {
                if weights.len() != x.n() {
                    Err(Error::SpaceMismatch {
                        left: weights.len(),
                        right: x.n(),
                    })
                } else {
                    Ok(-weights.iter().zip(x.values()).map(|(w, v)| w * v).sum::<f64>())
                }
            }
            Rule::Custom(_) => return None,
        };
        Some(v)
    }

    pub fn contains(&self, x: &Payoff) -> Result<bool> {
        match (&self.rule, self.gauge(x)) {
            (Rule::Custom(m), _) => Ok(m(x)),
            (_, Some(g)) => Ok(g? <= 0.0),
            (_, None) => unreachable!("only custom sets lack a gauge"),
        }
    }

    /// An accepted and a rejected payoff on `space`, proving the set is
    /// neither empty nor everything.
    pub fn nontriviality_witnesses(&self, space: AtomSpace) -> Result<(Payoff, Payoff)> {
        let mut candidates = Vec::new();
        for c in [0.0, 1.0, -1.0, 10.0, -10.0, 1e3, -1e3, 1e6, -1e6] {
            candidates.push(Payoff::constant(space, c));
        }
        for i in 0..space.n() {
            let mut v = vec![0.0; space.n()];
            v[i] = 1.0;
            let e = Payoff::from_vec(v);
            candidates.push(e.neg());
            candidates.push(e);
        }
        let mut accepted = None;
        let mut rejected = None;
        for c in candidates {
            if self.contains(&c)? {
                accepted.get_or_insert(c);
            } else {
                rejected.get_or_insert(c);
            }
            if accepted.is_some() && rejected.is_some() {
                break;
            }
        }
        match (accepted, rejected) {
            (Some(a), Some(r)) => Ok((a, r)),
            (None, _) => Err(Error::InvalidParameter(format!("{}: no accepted payoff found", self.name))),
            (_, None) => Err(Error::InvalidParameter(format!("{}: every candidate is accepted", self.name))),
        }
    }
}

/// Eligible payoffs `basis` spanning 𝓜, with prices ψ on the basis. The basis
/// element at `numeraire_index` is the positive payoff `U`.
#[derive(Debug, Clone, Serialize)]
pub struct Market {
    basis: Vec<Payoff>,
    prices: Vec<f64>,
    numeraire_index: usize,
}

impl Market {
    pub fn new(basis: Vec<Payoff>, prices: Vec<f64>, numeraire_index: usize) -> Result<Self> {
        let k = basis.len();
        if k == 0 || k > MAX_BASIS {
            return Err(Error::InvalidMarket(format!("basis size must be 1..={MAX_BASIS}, got {k}")));
        }
        if prices.len() != k {
            return Err(Error::InvalidMarket(format!("{k} basis payoffs but {} prices", prices.len())));
        }
        if prices.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidMarket("prices must be finite".into()));
        }
        for b in &basis[1..] {
            basis[0].ensure_same_space(b)?;
        }
        let u = basis
            .get(numeraire_index)
            .ok_or_else(|| Error::InvalidMarket(format!("numeraire index {numeraire_index} out of range")))?;
        if u.min() < 0.0 || u.max() == 0.0 {
            return Err(Error::InvalidMarket("numeraire must be nonnegative and nonzero".into()));
        }
        if prices[numeraire_index] <= 0.0 {
            return Err(Error::InvalidMarket("numeraire price must be positive".into()));
        }
        if rank(&basis) < k {
            return Err(Error::InvalidMarket("basis payoffs are linearly dependent".into()));
        }
        Ok(Self {
            basis,
            prices,
            numeraire_index,
        })
    }

    /// Cash only: `𝓜 = span{1}` with `ψ(1) = price`.
    pub fn cash(space: AtomSpace, price: f64) -> Result<Self> {
        Self::new(vec![Payoff::constant(space, 1.0)], vec![price], 0)
    }

    pub fn k(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Payoff] {
        &self.basis
    }

    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    pub fn numeraire_index(&self) -> usize {
        self.numeraire_index
    }

    pub fn numeraire(&self) -> &Payoff {
        &self.basis[self.numeraire_index]
    }

    pub fn space(&self) -> AtomSpace {
        self.basis[0].space()
    }

    /// `ψ(Σ aᵢ basisᵢ)`.
    pub fn price(&self, coefficients: &[f64]) -> f64 {
        coefficients.iter().zip(&self.prices).map(|(a, p)| a * p).sum()
    }

    /// `Σ aᵢ basisᵢ`.
    pub fn payoff(&self, coefficients: &[f64]) -> Payoff {
        let mut z = self.space().zero();
        for (a, b) in coefficients.iter().zip(&self.basis) {
            z = z.zip_with(b, |x, y| x + a * y);
        }
        z
    }

    /// Whether some eligible payoff is nonconstant.
    pub fn has_risky_payoff(&self) -> bool {
        self.basis.iter().any(|b| !b.is_constant())
    }
}

fn rank(rows: &[Payoff]) -> usize {
    let mut m: Vec<Vec<f64>> = rows.iter().map(|r| r.values().to_vec()).collect();
    let scale = m.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
    let eps = 1e-10 * scale.max(f64::MIN_POSITIVE);
    let cols = m.first().map_or(0, Vec::len);
    let mut rank = 0;
    for col in 0..cols {
        if rank == m.len() {
            break;
        }
        let pivot = (rank..m.len())
            .max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
            .unwrap();
        if m[pivot][col].abs() <= eps {
            continue;
        }
        m.swap(rank, pivot);
        for r in 0..m.len() {
            if r != rank {
                let factor = m[r][col] / m[rank][col];
                for c in col..cols {
                    m[r][c] -= factor * m[rank][c];
                }
            }
        }
        rank += 1;
    }
    rank
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Sentinel {
    /// No acceptable `X + Z` found within the expansion budget: `ρ = +∞`.
    NeverAcceptable,
    /// Cost decreasing without bound within the expansion budget: `ρ = −∞`.
    UnboundedBelow,
}

#[derive(Debug, Clone, Serialize)]
pub struct RiskReport {
    /// `±∞` when a sentinel is set.
    pub value: f64,
    pub sentinel: Option<Sentinel>,
    /// Coefficients on the basis of the best eligible payoff found.
    pub coefficients: Option<Vec<f64>>,
    /// False when the optimum sat on the edge of the search box and was
    /// accepted only because further expansion stopped improving it.
    pub attained: bool,
    pub evaluations: usize,
    pub expansions: u32,
    pub expansion_budget: u32,
}

enum LineMin {
    Finite(f64),
    PlusInf,
    MinusInf,
}

impl LineMin {
    fn value(&self) -> f64 {
        match self {
            LineMin::Finite(t) => *t,
            LineMin::PlusInf => f64::INFINITY,
            LineMin::MinusInf => f64::NEG_INFINITY,
        }
    }
}

struct Solver<'a> {
    set: &'a AcceptanceSet,
    tol: f64,
    evaluations: usize,
}

/// Golden-section minimization of `f` on `[a, b]`, endpoints included.
/// When both interior probes are `+∞` a coarse grid relocates the bracket
/// around a finite value if one exists. Stops early on `−∞`.
fn golden(f: &mut dyn FnMut(f64) -> Result<f64>, mut a: f64, mut b: f64, tol: f64) -> Result<(f64, f64)> {
    let mut best = (a, f64::INFINITY);
    let mut probe = |x: f64, best: &mut (f64, f64)| -> Result<f64> {
        let v = f(x)?;
        if v < best.1 {
            *best = (x, v);
        }
        Ok(v)
    };
    for end in [a, b] {
        if probe(end, &mut best)? == f64::NEG_INFINITY {
            return Ok(best);
        }
    }
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = probe(c, &mut best)?;
    let mut fd = probe(d, &mut best)?;
    for _ in 0..MAX_ITER {
        if best.1 == f64::NEG_INFINITY || b - a <= tol {
            break;
        }
        if fc == f64::INFINITY && fd == f64::INFINITY {
            const GRID: usize = 32;
            let h = (b - a) / GRID as f64;
            let mut found = None;
            for i in 1..GRID {
                let x = a + h * i as f64;
                let v = probe(x, &mut best)?;
                if v < f64::INFINITY && found.is_none_or(|(_, fv)| v < fv) {
                    found = Some((x, v));
                }
            }
            let Some((x, _)) = found else { break };
            a = x - h;
            b = x + h;
            c = b - INV_PHI * (b - a);
            d = a + INV_PHI * (b - a);
            fc = probe(c, &mut best)?;
            fd = probe(d, &mut best)?;
            continue;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = probe(c, &mut best)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = probe(d, &mut best)?;
        }
    }
    Ok(best)
}

impl Solver<'_> {
    fn accepts(&mut self, y: &Payoff, slack: f64) -> Result<bool> {
        self.evaluations += 1;
        match self.set.gauge(y) {
            Some(g) => Ok(g? <= slack),
            None => self.set.contains(y),
        }
    }

    /// `inf{t : y + t·u ∈ 𝒜}`.
    fn line(&mut self, y: &Payoff, u: &Payoff) -> Result<LineMin> {
        let w = y.sup_norm().max(1.0);
        let monotone = self.set.flags.monotone;
        // Non-monotone sets are solved on the tolerance-relaxed gauge: their
        // acceptable slice along `u` may be a single point.
        let slack = if monotone { 0.0 } else { self.tol * w };
        let feasible = if monotone {
            self.upward_feasible(y, u, w)?
        } else {
            self.find_feasible(y, u, w, slack)?
        };
        let Some(mut hi) = feasible else {
            return Ok(LineMin::PlusInf);
        };
        let mut step = w;
        let mut lo = hi - step;
        let mut doublings = 0;
        while self.accepts(&y.add_scaled(u, lo)?, slack)? {
            if doublings == EXPANSION_BUDGET {
                return Ok(LineMin::MinusInf);
            }
            hi = lo;
            step *= 2.0;
            lo = hi - step;
            doublings += 1;
        }
        for _ in 0..MAX_ITER {
            if hi - lo <= self.tol * hi.abs().max(1.0) {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if self.accepts(&y.add_scaled(u, mid)?, slack)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(LineMin::Finite(hi))
    }

    fn upward_feasible(&mut self, y: &Payoff, u: &Payoff, w: f64) -> Result<Option<f64>> {
        if self.accepts(y, 0.0)? {
            return Ok(Some(0.0));
        }
        let mut t = w;
        for _ in 0..=EXPANSION_BUDGET {
            if self.accepts(&y.add_scaled(u, t)?, 0.0)? {
                return Ok(Some(t));
            }
            t *= 2.0;
        }
        Ok(None)
    }

    fn find_feasible(&mut self, y: &Payoff, u: &Payoff, w: f64, slack: f64) -> Result<Option<f64>> {
        if self.accepts(y, slack)? {
            return Ok(Some(0.0));
        }
        if !self.set.has_gauge() {
            let mut t = w;
            for _ in 0..=EXPANSION_BUDGET {
                for cand in [t, -t] {
                    if self.accepts(&y.add_scaled(u, cand)?, slack)? {
                        return Ok(Some(cand));
                    }
                }
                t *= 2.0;
            }
            return Ok(None);
        }
        let set = self.set;
        let mut half = w;
        for _ in 0..=EXPANSION_BUDGET {
            let mut evaluations = 0;
            let mut profile = |t: f64| -> Result<f64> {
                evaluations += 1;
                set.gauge(&y.add_scaled(u, t)?).expect("gauge checked above")
            };
            let (t, v) = golden(&mut profile, -half, half, self.tol * half)?;
            self.evaluations += evaluations;
            if v <= slack {
                return Ok(Some(t));
            }
            if t.abs() < half * (1.0 - 1e-3) {
                return Ok(None);
            }
            half *= 2.0;
        }
        Ok(None)
    }

    fn tau(&mut self, x: &Payoff, u: &Payoff, dirs: &[Payoff], s: &[f64]) -> Result<f64> {
        let mut y = x.clone();
        for (d, si) in dirs.iter().zip(s) {
            y = y.add_scaled(d, *si)?;
        }
        Ok(self.line(&y, u)?.value())
    }

    /// Minimizes `τ` over the box `[−w, w]^m`, `m = dirs.len() ≤ 2`.
    fn box_min(&mut self, x: &Payoff, u: &Payoff, dirs: &[Payoff], w: f64) -> Result<(Vec<f64>, f64)> {
        let tol = self.tol * w.max(1.0);
        match dirs.len() {
            0 => Ok((vec![], self.tau(x, u, dirs, &[])?)),
            1 => {
                let (s, v) = golden(&mut |s| self.tau(x, u, dirs, &[s]), -w, w, tol)?;
                Ok((vec![s], v))
            }
            _ => {
                let inner = |s1: f64, this: &mut Self| -> Result<(f64, f64)> {
                    golden(&mut |s2| this.tau(x, u, dirs, &[s1, s2]), -w, w, tol)
                };
                let (s1, v) = golden(&mut |s1| Ok(inner(s1, self)?.1), -w, w, tol)?;
                let (s2, _) = inner(s1, self)?;
                Ok((vec![s1, s2], v))
            }
        }
    }
}

/// `ρ(X) = inf{ψ(Z) : Z ∈ 𝓜, X + Z ∈ 𝒜}`.
///
/// Writing `Z = t·U + Σ sⱼ dⱼ` with `dⱼ` spanning `ker ψ`, the cost is
/// `ψ(U)·t`. The minimal `t` for fixed `s` is found by bisection (monotone
/// sets) or by golden-section on the gauge followed by bisection; `s` is
/// optimized by nested golden-section over a box that doubles while the
/// optimum sits on its edge.
pub fn risk_measure(a: &AcceptanceSet, m: &Market, x: &Payoff, tol: f64) -> Result<RiskReport> {
    if !a.flags.convex {
        return Err(Error::FlagViolation(format!("{} is not declared convex", a.name)));
    }
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    m.space().ensure_same(&x.space())?;
    let ui = m.numeraire_index;
    let u = m.numeraire();
    let pu = m.prices[ui];
    let others: Vec<usize> = (0..m.k()).filter(|&j| j != ui).collect();
    let dirs: Vec<Payoff> = others
        .iter()
        .map(|&j| m.basis[j].add_scaled(u, -m.prices[j] / pu))
        .collect::<Result<_>>()?;
    let mut solver = Solver {
        set: a,
        tol,
        evaluations: 0,
    };
    let w0 = x.sup_norm().max(1.0);
    let report = |solver: &Solver, value: f64, s: Option<(Vec<f64>, f64)>, attained: bool, expansions: u32| {
        let sentinel = if value == f64::INFINITY {
            Some(Sentinel::NeverAcceptable)
        } else if value == f64::NEG_INFINITY {
            Some(Sentinel::UnboundedBelow)
        } else {
            None
        };
        let coefficients = s.filter(|_| sentinel.is_none()).map(|(s, t)| {
            let mut c = vec![0.0; m.k()];
            c[ui] = t;
            for (&j, sj) in others.iter().zip(&s) {
                c[j] += sj;
                c[ui] -= sj * m.prices[j] / pu;
            }
            c
        });
        RiskReport {
            value,
            sentinel,
            coefficients,
            attained,
            evaluations: solver.evaluations,
            expansions,
            expansion_budget: EXPANSION_BUDGET,
        }
    };
    if dirs.is_empty() {
        let t = solver.line(x, u)?.value();
        return Ok(report(&solver, pu * t, Some((vec![], t)), true, 0));
    }
    let mut previous: Option<f64> = None;
    let mut w = w0;
    for e in 0..=EXPANSION_BUDGET {
        let (s, t) = solver.box_min(x, u, &dirs, w)?;
        if t == f64::NEG_INFINITY {
            return Ok(report(&solver, t, None, true, e));
        }
        if t < f64::INFINITY {
            let at_edge = s.iter().any(|si| si.abs() >= w * (1.0 - 1e-3));
            if !at_edge {
                return Ok(report(&solver, pu * t, Some((s, t)), true, e));
            }
            if let Some(p) = previous {
                if p - t <= tol * t.abs().max(1.0) {
                    return Ok(report(&solver, pu * t, Some((s, t)), false, e));
                }
            }
            previous = Some(t);
        }
        w *= 2.0;
    }
    let value = if previous.is_some() {
        f64::NEG_INFINITY
    } else {
        f64::INFINITY
    };
    Ok(report(&solver, value, None, false, EXPANSION_BUDGET))
}

/// [`risk_measure`] over a batch, evaluated in parallel; order preserved.
pub fn risk_measure_batch(a: &AcceptanceSet, m: &Market, xs: &[Payoff], tol: f64) -> Result<Vec<RiskReport>> {
    xs.par_iter().map(|x| risk_measure(a, m, x, tol)).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct LawInvarianceWitness {
    pub x: Payoff,
    pub permuted: Payoff,
    pub rho_x: f64,
    pub rho_permuted: f64,
    pub trial: usize,
}

/// Searches for a payoff `X` and a rearrangement `X'` with
/// `|ρ(X) − ρ(X')| > tol`. The first trials use `±` each eligible payoff.
pub fn law_invariance_witness(
    a: &AcceptanceSet,
    m: &Market,
    trials: usize,
    seed: u64,
    tol: f64,
) -> Result<Option<LawInvarianceWitness>> {
    let space = m.space();
    let n = space.n();
    let spec = DistributionSpec::Normal { mean: 0.0, sd: 1.0 };
    let solve_tol = (tol * 1e-3).max(1e-12);
    let outcome = (0..trials).into_par_iter().map(|i| -> Result<Option<LawInvarianceWitness>> {
        let mut rng = rng_from_seed(derive_seed(seed, i as u64));
        let x = if i < 2 * m.k() {
            let b = &m.basis[i / 2];
            if i % 2 == 0 {
                b.neg()
            } else {
                b.clone()
            }
        } else {
            let scale = rng.random_range(0.5..4.0);
            sample_payoff(space, &spec, &mut rng).scale(scale)
        };
        let permuted = x.permuted(&random_permutation(n, &mut rng));
        if permuted == x {
            return Ok(None);
        }
        let rho_x = risk_measure(a, m, &x, solve_tol)?.value;
        let rho_permuted = risk_measure(a, m, &permuted, solve_tol)?.value;
        let differs = if rho_x.is_finite() && rho_permuted.is_finite() {
            (rho_x - rho_permuted).abs() > tol
        } else {
            rho_x != rho_permuted
        };
        Ok(differs.then_some(LawInvarianceWitness {
            x,
            permuted,
            rho_x,
            rho_permuted,
            trial: i,
        }))
    });
    outcome
        .find_map_first(|r| match r {
            Ok(None) => None,
            other => Some(other),
        })
        .transpose()
        .map(Option::flatten)
}

/// Checks `ρ(X) = −c·E[X]` with `c = −ρ(1)` on a random batch. Skipped
/// (no residual computed) when `|ρ(0)| > tol`.
#[derive(Debug, Clone, Serialize)]
pub struct ProportionalityReport {
    pub rho_zero: f64,
    pub skipped: bool,
    pub c: f64,
    pub max_residual: f64,
    pub batch: usize,
}

pub fn mean_proportionality_check(
    a: &AcceptanceSet,
    m: &Market,
    batch: usize,
    seed: u64,
    tol: f64,
) -> Result<ProportionalityReport> {
    let space = m.space();
    let solve_tol = (tol * 1e-3).max(1e-13);
    let rho_zero = risk_measure(a, m, &space.zero(), solve_tol)?.value;
    let c = -risk_measure(a, m, &Payoff::constant(space, 1.0), solve_tol)?.value;
    if !(rho_zero.abs() <= tol) {
        return Ok(ProportionalityReport {
            rho_zero,
            skipped: true,
            c,
            max_residual: f64::NAN,
            batch: 0,
        });
    }
    let spec = DistributionSpec::Normal { mean: 0.0, sd: 2.0 };
    let residuals: Vec<f64> = (0..batch)
        .into_par_iter()
        .map(|i| {
            let x = sample_payoff(space, &spec, &mut rng_from_seed(derive_seed(seed, i as u64)));
            Ok((risk_measure(a, m, &x, solve_tol)?.value + c * expectation(&x)).abs())
        })
        .collect::<Result<_>>()?;
    Ok(ProportionalityReport {
        rho_zero,
        skipped: false,
        c,
        max_residual: residuals.into_iter().fold(0.0, f64::max),
        batch,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Pointedness {
    Pointed,
    NotPointed,
}

#[derive(Debug, Clone, Serialize)]
pub struct PointednessReport {
    pub verdict: Pointedness,
    /// Nonzero `Z` with `Z ∈ 𝒜` and `−Z ∈ 𝒜`.
    pub witness: Option<Payoff>,
    /// Smallest `max(R(Z), R(−Z)) / ‖Z‖∞` over the candidates; positive for a
    /// pointed set with a gauge, `None` without one.
    pub min_depth: Option<f64>,
    pub candidates: usize,
    pub exhaustive: bool,
    /// Whether membership coincided with `E[X] ≥ 0` on a random batch.
    pub matches_nonnegative_mean: bool,
    /// `NOT_POINTED` must co-occur with `𝒜 = {E[X] ≥ 0}`.
    pub consistent: bool,
}

/// Searches for a nonzero `Z` with `±Z ∈ 𝒜`: exhaustively over sorted integer
/// vectors in `[−grid, grid]ⁿ` for `n ≤ 3`, then over `trials` random
/// zero-sum integer and Gaussian candidates.
pub fn pointedness_check(
    a: &AcceptanceSet,
    space: AtomSpace,
    trials: usize,
    seed: u64,
    grid: u32,
) -> Result<PointednessReport> {
    if !a.flags.is_coherent() {
        return Err(Error::FlagViolation(format!(
            "{} is not declared convex, conic, monotone and law-invariant",
            a.name
        )));
    }
    let n = space.n();
    let exhaustive = n <= 3;
    let mut candidates = Vec::new();
    if exhaustive {
        sorted_grid(n, grid as i64, &mut vec![], &mut candidates);
    }
    let mut rng = rng_from_seed(seed);
    let normal = DistributionSpec::Normal { mean: 0.0, sd: 1.0 };
    for i in 0..trials {
        let z = match i % 3 {
            0 if n >= 2 => {
                let mut v: Vec<f64> = (0..n - 1).map(|_| rng.random_range(-3..=3) as f64).collect();
                v.push(-v.iter().sum::<f64>());
                Payoff::from_vec(v)
            }
            1 => {
                let z = sample_payoff(space, &normal, &mut rng);
                z.shift(-expectation(&z))
            }
            _ => sample_payoff(space, &normal, &mut rng),
        };
        candidates.push(z);
    }
    let mut min_depth: Option<f64> = None;
    let mut witness = None;
    let mut count = 0;
    for z in candidates {
        if z.sup_norm() == 0.0 {
            continue;
        }
        count += 1;
        let neg = z.neg();
        if a.contains(&z)? && a.contains(&neg)? {
            witness = Some(z);
            break;
        }
        if let (Some(g), Some(h)) = (a.gauge(&z), a.gauge(&neg)) {
            let depth = g?.max(h?) / z.sup_norm();
            min_depth = Some(min_depth.map_or(depth, |d| d.min(depth)));
        }
    }
    let mut matches = true;
    for _ in 0..200 {
        let x = sample_payoff(space, &normal, &mut rng);
        let e = expectation(&x);
        if e.abs() > 1e-9 && a.contains(&x)? != (e >= 0.0) {
            matches = false;
            break;
        }
    }
    let verdict = if witness.is_some() {
        Pointedness::NotPointed
    } else {
        Pointedness::Pointed
    };
    Ok(PointednessReport {
        verdict,
        consistent: verdict == Pointedness::Pointed || matches,
        witness,
        min_depth: if verdict == Pointedness::Pointed { min_depth } else { None },
        candidates: count,
        exhaustive,
        matches_nonnegative_mean: matches,
    })
}

fn sorted_grid(n: usize, grid: i64, prefix: &mut Vec<f64>, out: &mut Vec<Payoff>) {
    if prefix.len() == n {
        out.push(Payoff::from_vec(prefix.clone()));
        return;
    }
    let start = prefix.last().map_or(-grid, |&v| v as i64);
    for v in start..=grid {
        prefix.push(v as f64);
        sorted_grid(n, grid, prefix, out);
        prefix.pop();
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ClosureViolation {
    pub x: Payoff,
    pub partition: Partition,
    pub conditioned: Payoff,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClosureReport {
    pub acceptance: String,
    pub trials: usize,
    /// Trials where no accepted sample could be produced.
    pub skipped: usize,
    pub violations: usize,
    /// Up to five violating triples.
    pub witnesses: Vec<ClosureViolation>,
}

impl ClosureReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Draws accepted `X` (random payoffs shifted up to the boundary plus a
/// margin of `1e−9·max(1, ‖X‖∞)`) and random partitions `G`, and checks
/// `E[X | G] ∈ 𝒜`.
pub fn conditioning_closure_check(
    a: &AcceptanceSet,
    space: AtomSpace,
    trials: usize,
    seed: u64,
) -> Result<ClosureReport> {
    let f = a.flags;
    if !(f.convex && f.closed && f.law_invariant) {
        return Err(Error::FlagViolation(format!(
            "{} is not declared convex, closed and law-invariant",
            a.name
        )));
    }
    let spec = DistributionSpec::Normal { mean: 0.0, sd: 1.0 };
    let outcomes: Vec<Option<Option<ClosureViolation>>> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_from_seed(derive_seed(seed, i as u64));
            let scale = rng.random_range(0.1..5.0);
            let x = sample_payoff(space, &spec, &mut rng).scale(scale);
            let Some(x) = accepted_shift(a, &x)? else {
                return Ok(None);
            };
            let partition = Partition::random(space.n(), &mut rng);
            let conditioned = condition(&x, &partition)?;
            Ok(Some((!a.contains(&conditioned)?).then_some(ClosureViolation {
                x,
                partition,
                conditioned,
            })))
        })
        .collect::<Result<_>>()?;
    let skipped = outcomes.iter().filter(|o| o.is_none()).count();
    let violating: Vec<ClosureViolation> = outcomes.into_iter().flatten().flatten().collect();
    Ok(ClosureReport {
        acceptance: a.name.clone(),
        trials,
        skipped,
        violations: violating.len(),
        witnesses: violating.into_iter().take(5).collect(),
    })
}

fn accepted_shift(a: &AcceptanceSet, x: &Payoff) -> Result<Option<Payoff>> {
    if a.contains(x)? {
        return Ok(Some(x.clone()));
    }
    let w = x.sup_norm().max(1.0);
    let mut hi = w;
    let mut found = false;
    for _ in 0..=EXPANSION_BUDGET {
        if a.contains(&x.shift(hi))? {
            found = true;
            break;
        }
        hi *= 2.0;
    }
    if !found {
        return Ok(None);
    }
    let mut lo = 0.0;
    for _ in 0..MAX_ITER {
        if hi - lo <= 1e-12 * hi.max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if a.contains(&x.shift(mid))? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let shifted = x.shift(hi + 1e-9 * w);
    Ok(a.contains(&shifted)?.then_some(shifted))
}
