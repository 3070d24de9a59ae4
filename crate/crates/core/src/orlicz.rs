//! Young functions, the Luxemburg gauge `‖X‖_Φ = inf{λ > 0 : E[Φ(|X|/λ)] ≤ 1}`
//! and a grid check of the Δ₂ growth condition.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{derive_seed, rng_from_seed, sample_payoff, AtomSpace, DistributionSpec, Payoff};

const MAX_ITER: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum YoungFunction {
    /// `Φ(t) = t^p`, `p ≥ 1`.
    Power { p: f64 },
    /// `Φ(t) = e^t − 1`.
    Exp,
    /// `Φ = 0` on `[0, 1]`, `+∞` beyond; its gauge is the sup norm.
    Linf,
}

impl YoungFunction {
    pub fn power(p: f64) -> Result<Self> {
        let phi = YoungFunction::Power { p };
        phi.validate()?;
        Ok(phi)
    }

    pub fn validate(&self) -> Result<()> {
        if let YoungFunction::Power { p } = self {
            if !(p.is_finite() && *p >= 1.0) {
                return Err(Error::InvalidParameter(format!("power Young function needs p ≥ 1, got {p}")));
            }
        }
        Ok(())
    }

    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            YoungFunction::Power { p } => t.powf(p),
            YoungFunction::Exp => t.exp_m1(),
            YoungFunction::Linf => {
                if t <= 1.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    pub fn name(&self) -> String {
        match self {
            YoungFunction::Power { p } => format!("power({p})"),
            YoungFunction::Exp => "exp".into(),
            YoungFunction::Linf => "linf".into(),
        }
    }

    /// Whether `Φ` is finite-valued.
    pub fn is_finite(&self) -> bool {
        !matches!(self, YoungFunction::Linf)
    }

    /// `E[Φ(|X|/λ)]`; `+∞` as soon as one atom hits `+∞`.
    pub fn modular(&self, x: &Payoff, lambda: f64) -> f64 {
        let mut sum = 0.0;
        for v in x.values() {
            let phi = self.eval(v.abs() / lambda);
            if phi == f64::INFINITY {
                return f64::INFINITY;
            }
            sum += phi;
        }
        sum / x.n() as f64
    }

    /// Orlicz-heart membership: `E[Φ(|X|/λ)] < ∞` for every `λ > 0`. Always
    /// true for finite `Φ`; for the L^∞ indicator only `X = 0` qualifies.
    pub fn in_heart(&self, x: &Payoff) -> bool {
        self.is_finite() || x.sup_norm() == 0.0
    }
}

/// Luxemburg norm by bisection to absolute tolerance `tol`.
///
/// The lower bracket is `max|X| / t*` with `Φ(t*) > n`, so the largest atom
/// alone pushes the modular above 1; the upper bracket doubles from there.
pub fn luxemburg_norm(phi: &YoungFunction, x: &Payoff, tol: f64) -> Result<f64> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    phi.validate()?;
    let top = x.sup_norm();
    if top == 0.0 {
        return Ok(0.0);
    }
    let n = x.n() as f64;
    let mut t_star = 1.0;
    while !(phi.eval(t_star) > n) {
        t_star *= 2.0;
        if !t_star.is_finite() {
            return Err(Error::InvalidParameter(format!("{} never exceeds {n}", phi.name())));
        }
    }
    let mut lo = top / t_star;
    let mut m_lo = phi.modular(x, lo);
    let mut hi = lo;
    let mut m_hi = m_lo;
    while m_hi > 1.0 {
        hi *= 2.0;
        let m = phi.modular(x, hi);
        if m > m_hi {
            return Err(inversion(phi, hi / 2.0, m_hi, hi, m));
        }
        m_hi = m;
    }
    for _ in 0..MAX_ITER {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let m = phi.modular(x, mid);
        if m > m_lo || m < m_hi {
            return Err(inversion(phi, lo, m_lo, mid, m));
        }
        if m <= 1.0 {
            hi = mid;
            m_hi = m;
        } else {
            lo = mid;
            m_lo = m;
        }
    }
    Ok(hi)
}

fn inversion(phi: &YoungFunction, a: f64, ma: f64, b: f64, mb: f64) -> Error {
    Error::Monotonicity(format!(
        "modular of {} not nonincreasing: E[Φ(|X|/{a})] = {ma} but E[Φ(|X|/{b})] = {mb}",
        phi.name()
    ))
}

#[derive(Debug, Clone, Serialize)]
pub struct NormOrderReport {
    pub young: String,
    pub trials: usize,
    pub tol: f64,
    pub zero_norm: f64,
    /// Largest `|‖cX‖ − |c|·‖X‖| / max(1, |c|)`.
    pub homogeneity_max_error: f64,
    pub triangle_violations: usize,
    pub monotonicity_violations: usize,
}

impl NormOrderReport {
    pub fn passed(&self) -> bool {
        self.zero_norm == 0.0
            && self.homogeneity_max_error <= 10.0 * self.tol
            && self.triangle_violations == 0
            && self.monotonicity_violations == 0
    }
}

/// Samples the norm axioms: homogeneity, the triangle inequality and
/// monotonicity in `|X|`.
pub fn norm_order_check(phi: &YoungFunction, trials: usize, seed: u64, tol: f64) -> Result<NormOrderReport> {
    let spec = DistributionSpec::Normal { mean: 0.0, sd: 2.0 };
    let norm = |x: &Payoff| luxemburg_norm(phi, x, tol);
    let mut homogeneity_max_error: f64 = 0.0;
    let mut triangle_violations = 0;
    let mut monotonicity_violations = 0;
    for i in 0..trials {
        let mut rng = rng_from_seed(derive_seed(seed, i as u64));
        let space = AtomSpace::new(rng.random_range(1..=12))?;
        let x = sample_payoff(space, &spec, &mut rng);
        let y = sample_payoff(space, &spec, &mut rng);
        let c: f64 = rng.random_range(-5.0..5.0);
        let nx = norm(&x)?;
        let ny = norm(&y)?;
        let err = (norm(&x.scale(c))? - c.abs() * nx).abs() / c.abs().max(1.0);
        homogeneity_max_error = homogeneity_max_error.max(err);
        if norm(&x.add(&y)?)? > nx + ny + 3.0 * tol {
            triangle_violations += 1;
        }
        let factors: Vec<f64> = (0..space.n()).map(|_| rng.random_range(1.0..2.0)).collect();
        let bigger = Payoff::new(x.values().iter().zip(&factors).map(|(v, f)| v * f).collect())?;
        if nx > norm(&bigger)? + 2.0 * tol {
            monotonicity_violations += 1;
        }
    }
    Ok(NormOrderReport {
        young: phi.name(),
        trials,
        tol,
        zero_norm: norm(&AtomSpace::new(3)?.zero())?,
        homogeneity_max_error,
        triangle_violations,
        monotonicity_violations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Delta2Verdict {
    Holds { k: f64 },
    Fails,
}

#[derive(Debug, Clone, Serialize)]
pub struct Delta2Report {
    pub young: String,
    pub verdict: Delta2Verdict,
    /// `(t, Φ(2t)/Φ(t))` along the grid, skipping `Φ(t) = 0`.
    pub trace: Vec<(f64, f64)>,
    pub sup_ratio: f64,
}

/// Ratios `Φ(2t)/Φ(t)` on a geometric grid over `[t_min, t_max]`. The
/// verdict is `FAILS` when the ratio still grows over the last quarter of
/// the grid and `HOLDS(k)` with `k` the largest ratio otherwise.
pub fn delta2_check(phi: &YoungFunction, t_min: f64, t_max: f64, grid_size: usize) -> Result<Delta2Report> {
    if !phi.is_finite() {
        return Err(Error::NonFiniteYoung);
    }
    phi.validate()?;
    if !(t_min > 0.0 && t_max > t_min && t_max.is_finite()) {
        return Err(Error::InvalidParameter(format!("need 0 < t_min < t_max, got [{t_min}, {t_max}]")));
    }
    if grid_size < 3 {
        return Err(Error::InvalidParameter("Δ₂ grid needs at least 3 points".into()));
    }
    let ratio = (t_max / t_min).powf(1.0 / (grid_size - 1) as f64);
    let mut trace = Vec::with_capacity(grid_size);
    for i in 0..grid_size {
        let t = if i == grid_size - 1 {
            t_max
        } else {
            t_min * ratio.powi(i as i32)
        };
        let (a, b) = (phi.eval(t), phi.eval(2.0 * t));
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::NonFiniteYoung);
        }
        if a > 0.0 {
            trace.push((t, b / a));
        }
    }
    if trace.len() < 2 {
        return Err(Error::InvalidParameter(format!("{} vanishes on the grid", phi.name())));
    }
    let sup_ratio = trace.iter().map(|&(_, r)| r).fold(f64::NEG_INFINITY, f64::max);
    let window = (trace.len() / 4).max(2);
    let tail = &trace[trace.len() - window..];
    let growing = tail[window - 1].1 > tail[0].1 * (1.0 + 1e-9);
    let verdict = if growing {
        Delta2Verdict::Fails
    } else {
        Delta2Verdict::Holds { k: sup_ratio }
    };
    Ok(Delta2Report {
        young: phi.name(),
        verdict,
        trace,
        sup_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(v: &[f64]) -> Payoff {
        Payoff::new(v.to_vec()).unwrap()
    }

    #[test]
    fn power_norms() {
        let x = p(&[0.0, 2.0]);
        let l2 = luxemburg_norm(&YoungFunction::power(2.0).unwrap(), &x, 1e-13).unwrap();
        assert!((l2 - 2f64.sqrt()).abs() < 1e-12);
        let l1 = luxemburg_norm(&YoungFunction::power(1.0).unwrap(), &p(&[-1.0, 3.0, 0.5]), 1e-13).unwrap();
        assert!((l1 - 1.5).abs() < 1e-12);
    }

    #[test]
    fn linf_indicator_is_sup_norm() {
        let x = p(&[-4.0, 1.0, 2.5]);
        let v = luxemburg_norm(&YoungFunction::Linf, &x, 1e-12).unwrap();
        assert!((v - 4.0).abs() < 1e-11);
    }

    #[test]
    fn zero_and_bad_tolerance() {
        let phi = YoungFunction::Exp;
        assert_eq!(luxemburg_norm(&phi, &p(&[0.0, 0.0]), 1e-9).unwrap(), 0.0);
        assert!(luxemburg_norm(&phi, &p(&[1.0]), 0.0).is_err());
        assert!(luxemburg_norm(&phi, &p(&[1.0]), -1.0).is_err());
    }

    #[test]
    fn exp_norm_solves_modular_equation() {
        let x = p(&[1.0, -2.0, 0.5]);
        let phi = YoungFunction::Exp;
        let v = luxemburg_norm(&phi, &x, 1e-13).unwrap();
        assert!((phi.modular(&x, v) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn norm_axioms() {
        for phi in [YoungFunction::power(1.5).unwrap(), YoungFunction::Exp, YoungFunction::Linf] {
            let r = norm_order_check(&phi, 100, 7, 1e-11).unwrap();
            assert!(r.passed(), "{r:?}");
        }
    }

    #[test]
    fn delta2_powers_and_exp() {
        for pw in [1.0, 1.5, 2.0, 3.0] {
            let r = delta2_check(&YoungFunction::power(pw).unwrap(), 0.1, 100.0, 50).unwrap();
            match r.verdict {
                Delta2Verdict::Holds { k } => assert!((k - 2f64.powf(pw)).abs() < 1e-9),
                Delta2Verdict::Fails => panic!("power {pw} reported failing"),
            }
        }
        let r = delta2_check(&YoungFunction::Exp, 0.1, 50.0, 40).unwrap();
        assert_eq!(r.verdict, Delta2Verdict::Fails);
        assert!(r.trace.windows(2).all(|w| w[1].1 > w[0].1));
        assert!(matches!(delta2_check(&YoungFunction::Linf, 0.1, 10.0, 10), Err(Error::NonFiniteYoung)));
        assert_eq!(Error::NonFiniteYoung.to_string(), "Δ₂ undefined for nonfinite Φ");
    }

    #[test]
    fn heart_membership() {
        let x = p(&[1.0, -3.0]);
        assert!(YoungFunction::Exp.in_heart(&x));
        assert!(!YoungFunction::Linf.in_heart(&x));
        assert!(YoungFunction::Linf.in_heart(&p(&[0.0, 0.0])));
    }

    #[test]
    fn json_spec() {
        let phi: YoungFunction = serde_json::from_str(r#"{"type": "power", "p": 2}"#).unwrap();
        assert_eq!(phi, YoungFunction::Power { p: 2.0 });
        let phi: YoungFunction = serde_json::from_str(r#"{"type": "linf"}"#).unwrap();
        assert_eq!(phi, YoungFunction::Linf);
    }
}
