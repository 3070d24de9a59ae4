//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use lawprice_core::capital::{
    conditioning_closure_check, law_invariance_witness, pointedness_check, risk_measure, Pointedness,
};
use lawprice_core::friction::{
    collapse_scan, exhaustive_certificate, is_frictionless, is_strongly_frictionless, spread, z_additivity_check,
    CollapseVerdict, DEFAULT_M_GRID,
};
use lawprice_core::functionals::{choquet_eval, recession, schur_convexity_report};
use lawprice_core::orlicz::{delta2_check, luxemburg_norm, Delta2Verdict};
use lawprice_core::prob::{derive_seed, random_payoff, random_permutation, rng_from_seed};
use lawprice_core::quantile::{convex_order_geq, convex_order_oracle, hl_product, max_correlation_oracle};
use lawprice_core::{
    expectation, AcceptanceSet, AtomSpace, Distortion, DistributionSpec, Market, Payoff, PricingFunctional,
    RepresentationSet, YoungFunction,
};
use rand::Rng;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn ok<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn space(n: usize) -> AtomSpace {
    AtomSpace::new(n).unwrap()
}

fn hardy_littlewood() -> Outcome {
    let mut rng = rng_from_seed(1);
    for i in 0..500 {
        let n = rng.random_range(2..=8);
        let spec = DistributionSpec::Integers { low: -10, high: 10 };
        let x = ok(random_payoff(space(n), derive_seed(1, 2 * i), &spec))?;
        let y = ok(random_payoff(space(n), derive_seed(1, 2 * i + 1), &spec))?;
        let hl = ok(hl_product(&x, &y))?;
        let oracle = ok(max_correlation_oracle(&x, &y))?;
        ensure!(hl == oracle, "pair {i}: hl {hl} != oracle {oracle} for {x} / {y}");
    }
    Ok("500 integer pairs, n in 2..=8, exact equality".into())
}

fn riemann_choquet(g: &Distortion, x: &Payoff, steps: usize) -> f64 {
    let n = x.n() as f64;
    let lo = x.min().min(0.0);
    let hi = x.max().max(0.0);
    let h = (hi - lo) / steps as f64;
    let mut total = 0.0;
    for k in 0..steps {
        let t = lo + (k as f64 + 0.5) * h;
        let c = g.eval(x.values().iter().filter(|&&v| v > t).count() as f64 / n);
        total += if t >= 0.0 { c } else { c - 1.0 };
    }
    total * h
}

fn choquet_consistency() -> Outcome {
    let spec = DistributionSpec::Uniform { low: -2.0, high: 2.0 };
    let gammas = [0.5, 1.0, 2.0];
    let mut worst: f64 = 0.0;
    let mut rng = rng_from_seed(2);
    for i in 0..100 {
        let n = rng.random_range(2..=12);
        let x = ok(random_payoff(space(n), derive_seed(2, i), &spec))?;
        for &gamma in &gammas {
            let g = ok(Distortion::power(gamma))?;
            let err = (choquet_eval(&g, &x) - riemann_choquet(&g, &x, 100_000)).abs();
            worst = worst.max(err);
            ensure!(err <= 1e-4, "γ={gamma}, payoff {x}: Riemann gap {err}");
        }
    }
    let mut worst_additivity: f64 = 0.0;
    for i in 0..200u64 {
        let mut rng = rng_from_seed(derive_seed(22, i));
        let n = rng.random_range(2..=12);
        let mut a: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let mut b: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        let perm = random_permutation(n, &mut rng);
        let x = ok(Payoff::new(a))?.permuted(&perm);
        let y = ok(Payoff::new(b))?.permuted(&perm);
        let sum = ok(x.add(&y))?;
        for &gamma in &gammas {
            let g = ok(Distortion::power(gamma))?;
            let gap = (choquet_eval(&g, &sum) - choquet_eval(&g, &x) - choquet_eval(&g, &y)).abs();
            worst_additivity = worst_additivity.max(gap);
            ensure!(gap <= 1e-10, "γ={gamma}: comonotonic additivity gap {gap}");
        }
    }
    Ok(format!(
        "max Riemann gap {worst:.2e} (100 payoffs × 3 distortions), max additivity gap {worst_additivity:.2e} (200 pairs)"
    ))
}

fn convex_order_exhaustive() -> Outcome {
    let levels = [-2.0, -1.0, 0.0, 1.0, 2.0];
    let mut pairs = 0usize;
    let mut dominated = 0usize;
    for n in 1..=4usize {
        let count = 5usize.pow(n as u32);
        let vectors: Vec<Payoff> = (0..count)
            .map(|mut code| {
                let v = (0..n)
                    .map(|_| {
                        let l = levels[code % 5];
                        code /= 5;
                        l
                    })
                    .collect();
                Payoff::new(v).unwrap()
            })
            .collect();
        for x in &vectors {
            for y in &vectors {
                let fast = ok(convex_order_geq(x, y, 0.0))?;
                let oracle = ok(convex_order_oracle(x, y))?;
                ensure!(fast == oracle, "disagreement on {x} vs {y}: partial sums {fast}, calls {oracle}");
                pairs += 1;
                dominated += fast as usize;
            }
        }
    }
    Ok(format!("{pairs} pairs agree ({dominated} ordered)"))
}

fn collapse_dichotomy() -> Outcome {
    let s = space(10);
    let mut notes = Vec::new();
    for c in [0.5, 1.0, 2.0] {
        let f = ok(PricingFunctional::expectation(c))?;
        let r = ok(collapse_scan(&f, s, 1e-9, 4, 20_000))?;
        ensure!(r.verdict == CollapseVerdict::Collapse { c }, "expectation({c}): {:?}", r.verdict);
        ensure!(r.linearity_residual <= 1e-9, "expectation({c}): residual {}", r.linearity_residual);
    }
    notes.push("expectation(c) collapses for c ∈ {0.5, 1, 2}".to_string());
    for beta in [0.5, 0.9] {
        let f = ok(PricingFunctional::expected_shortfall(beta))?;
        let r = ok(collapse_scan(&f, s, 1e-9, 4, 20_000))?;
        ensure!(r.verdict == CollapseVerdict::NoFrictionlessRisky, "ES({beta}): {:?}", r.verdict);
        ensure!(r.min_objective >= 1e-3, "ES({beta}): min spread {}", r.min_objective);
        let cert = ok(exhaustive_certificate(&f, 2, 201))?;
        ensure!(cert.spread >= 1e-3, "ES({beta}) n=2 certificate spread {}", cert.spread);
        notes.push(format!("ES({beta}) min spread {:.3} (n=2 certificate {:.3})", r.min_objective, cert.spread));
    }
    let gate = PricingFunctional::gate();
    let r = ok(collapse_scan(&gate, s, 1e-9, 4, 20_000))?;
    ensure!(r.verdict == CollapseVerdict::Boundary, "gate: {:?}", r.verdict);
    let w = r.best_witness.ok_or("gate: no witness")?;
    ensure!(w.mean.abs() <= 1e-9 && w.spread <= 1e-9, "gate witness mean {} spread {}", w.mean, w.spread);
    ensure!(!w.payoff.is_constant(), "gate witness is constant");
    notes.push("gate on the zero-mean boundary".into());
    Ok(notes.join("; "))
}

fn convex_counterexample() -> Outcome {
    let f = PricingFunctional::floor_gauge();
    let x = ok(Payoff::new(vec![-1.0, 1.0]))?;
    let sp = ok(spread(&f, &x))?;
    ensure!(sp == 0.0, "spread {sp}");
    ensure!(ok(is_frictionless(&f, &x, 1e-12))?, "not frictionless");
    ensure!(!ok(is_strongly_frictionless(&f, &x, &DEFAULT_M_GRID, 1e-12))?, "strongly frictionless");
    let twice = ok(f.eval(&x.scale(2.0)))?;
    ensure!(twice == 1.0, "eval(2X) = {twice}");
    let r = ok(recession(&f, &x, 1e6, 25, 1e-9))?;
    let target = -x.min();
    ensure!((r.value - target).abs() <= 1e-6, "recession {} vs {target}", r.value);
    Ok(format!("spread 0, frictionless, not strongly frictionless, recession {}", r.value))
}

fn frictionless_equivalences() -> Outcome {
    let tol = 1e-9;
    let mut counts = [0usize; 2];
    for i in 0..200u64 {
        let mut rng = rng_from_seed(derive_seed(6, i));
        let n = rng.random_range(2..=8);
        let f = match i % 3 {
            0 => ok(PricingFunctional::expected_shortfall([0.3, 0.5, 0.9][rng.random_range(0..3)]))?,
            1 => ok(PricingFunctional::mean_abs_dev([0.1, 0.3, 0.5][rng.random_range(0..3)]))?,
            _ => ok(PricingFunctional::expectation([0.5, 1.0, 2.0][rng.random_range(0..3)]))?,
        };
        let z = if rng.random_bool(0.3) {
            Payoff::constant(space(n), rng.random_range(-3.0..3.0))
        } else {
            ok(random_payoff(space(n), derive_seed(60, i), &DistributionSpec::Normal { mean: 0.0, sd: 1.0 }))?
        };
        let a = ok(is_frictionless(&f, &z, tol))?;
        let b = ok(is_strongly_frictionless(&f, &z, &DEFAULT_M_GRID, tol))?;
        let c = !ok(z_additivity_check(&f, &z, 200, tol, i))?.falsified();
        ensure!(a == b && b == c, "{} on {z}: frictionless {a}, strong {b}, additive {c}", f.name());
        counts[a as usize] += 1;
    }
    let entropic = ok(PricingFunctional::entropic(1.0))?;
    for i in 0..200u64 {
        let mut rng = rng_from_seed(derive_seed(61, i));
        let n = rng.random_range(2..=8);
        let z = ok(random_payoff(space(n), derive_seed(62, i), &DistributionSpec::Normal { mean: 0.0, sd: 1.0 }))?;
        ensure!(!ok(is_strongly_frictionless(&entropic, &z, &DEFAULT_M_GRID, tol))?, "entropic strong on {z}");
        let c = Payoff::constant(space(n), rng.random_range(-3.0..3.0));
        ensure!(ok(is_strongly_frictionless(&entropic, &c, &DEFAULT_M_GRID, tol))?, "entropic rejects constant {c}");
    }
    Ok(format!(
        "200 (F, Z): {} frictionless, {} not, all three tests agree; entropic(1) strong only on constants",
        counts[1], counts[0]
    ))
}

fn capital_suite() -> Outcome {
    let mean = AcceptanceSet::nonnegative_mean();
    let es = ok(AcceptanceSet::expected_shortfall(0.5))?;
    let mut worst: f64 = 0.0;
    for i in 0..100u64 {
        let n = 2 + (i as usize % 11);
        let cash = ok(Market::cash(space(n), 1.0))?;
        let x = ok(random_payoff(space(n), derive_seed(7, i), &DistributionSpec::Normal { mean: 0.0, sd: 3.0 }))?;
        let r = ok(risk_measure(&mean, &cash, &x, 1e-12))?;
        let err = (r.value + expectation(&x)).abs();
        worst = worst.max(err);
        ensure!(err <= 1e-9, "ρ(X) = {} vs −E = {}", r.value, -expectation(&x));
    }
    let s = space(6);
    let cash = ok(Market::cash(s, 1.0))?;
    for a in [&mean, &es] {
        let w = ok(law_invariance_witness(a, &cash, 1000, 7, 1e-6))?;
        ensure!(w.is_none(), "{}: unexpected witness {:?}", a.name(), w);
    }
    let weighted = ok(AcceptanceSet::atom_weighted(vec![0.05, 0.1, 0.15, 0.2, 0.2, 0.3]))?;
    let w = ok(law_invariance_witness(&weighted, &cash, 1000, 7, 1e-6))?.ok_or("atom-weighted: no witness")?;
    let p = ok(pointedness_check(&mean, space(2), 200, 7, 3))?;
    ensure!(p.verdict == Pointedness::NotPointed && p.witness.is_some(), "mean acceptance pointed");
    ensure!(p.consistent, "NOT_POINTED without matching E ≥ 0");
    let p = ok(pointedness_check(&es, space(2), 200, 7, 10))?;
    ensure!(p.verdict == Pointedness::Pointed && p.exhaustive, "ES acceptance not pointed: {:?}", p.witness);
    let s4 = space(4);
    let risky = ok(Payoff::new(vec![0.0, 0.0, 1.0, 1.0]))?;
    let market = ok(Market::new(vec![Payoff::constant(s4, 1.0), risky], vec![1.0, 0.8], 0))?;
    let wit = ok(law_invariance_witness(&es, &market, 1000, 7, 1e-3))?.ok_or("risky market: no witness")?;
    let gap = (wit.rho_x - wit.rho_permuted).abs();
    ensure!(gap > 1e-3, "witness gap {gap}");
    Ok(format!(
        "ρ = −E max error {worst:.1e}; atom-weighted witness at trial {}; pointedness as expected; risky-asset gap {gap:.3}",
        w.trial
    ))
}

fn schur_and_conditioning() -> Outcome {
    let catalog = vec![
        ok(PricingFunctional::expectation(1.0))?,
        ok(PricingFunctional::expectation(2.0))?,
        ok(PricingFunctional::expected_shortfall(0.5))?,
        ok(PricingFunctional::expected_shortfall(0.9))?,
        ok(PricingFunctional::entropic(1.0))?,
        PricingFunctional::gate(),
        PricingFunctional::floor_gauge(),
        ok(PricingFunctional::mean_abs_dev(0.3))?,
        PricingFunctional::worst_case(),
        ok(PricingFunctional::choquet(ok(Distortion::power(0.5))?))?,
        ok(PricingFunctional::representation(RepresentationSet::BoundedDensity { bound: 2.5 }))?,
        PricingFunctional::of_loss(ok(PricingFunctional::expected_shortfall(0.5))?),
    ];
    let s = space(8);
    let mut checked = 0;
    for f in &catalog {
        if !(f.flags().law_invariant && f.flags().convex) {
            continue;
        }
        let r = ok(schur_convexity_report(f, s, 10_000, 8, 1e-9))?;
        ensure!(r.passed(), "{}: {} conditioning, {} order violations", f.name(), r.conditioning_violations, r.order_violations);
        checked += 1;
    }
    let sets = [
        AcceptanceSet::nonnegative_mean(),
        ok(AcceptanceSet::expected_shortfall(0.5))?,
        ok(AcceptanceSet::bounded_shortfall(1.0))?,
    ];
    for a in &sets {
        let r = ok(conditioning_closure_check(a, s, 10_000, 8))?;
        ensure!(r.passed(), "{}: {} closure violations", a.name(), r.violations);
        ensure!(r.skipped == 0, "{}: {} skipped trials", a.name(), r.skipped);
    }
    Ok(format!("{checked} functionals × 10⁴ trials, 3 acceptance sets × 10⁴ trials, zero violations"))
}

fn orlicz_gauges() -> Outcome {
    let p1 = ok(YoungFunction::power(1.0))?;
    let p2 = ok(YoungFunction::power(2.0))?;
    let mut worst: f64 = 0.0;
    for i in 0..1000u64 {
        let n = 1 + (i as usize % 12);
        let x = ok(random_payoff(space(n), derive_seed(9, i), &DistributionSpec::Normal { mean: 0.0, sd: 2.0 }))?;
        let l1 = x.values().iter().map(|v| v.abs()).sum::<f64>() / n as f64;
        let l2 = (x.values().iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
        for (phi, exact) in [(&p1, l1), (&p2, l2), (&YoungFunction::Linf, x.sup_norm())] {
            let err = (ok(luxemburg_norm(phi, &x, 1e-12))? - exact).abs();
            worst = worst.max(err);
            ensure!(err <= 1e-8, "{} on {x}: error {err}", phi.name());
        }
    }
    for p in [1.0, 1.5, 2.0, 3.0] {
        let r = ok(delta2_check(&ok(YoungFunction::power(p))?, 0.01, 100.0, 80))?;
        match r.verdict {
            Delta2Verdict::Holds { k } => ensure!((k - 2f64.powf(p)).abs() <= 1e-9, "power {p}: k = {k}"),
            Delta2Verdict::Fails => return Err(format!("power {p} reported failing")),
        }
    }
    let r = ok(delta2_check(&YoungFunction::Exp, 0.01, 50.0, 80))?;
    ensure!(r.verdict == Delta2Verdict::Fails, "exp: {:?}", r.verdict);
    let tail = &r.trace[r.trace.len() / 2..];
    ensure!(tail.windows(2).all(|w| w[1].1 > w[0].1), "exp trace not growing");
    Ok(format!(
        "max norm error {worst:.1e} over 3000 evaluations; Δ₂ k = 2^p for powers; exp fails, last ratio {:.3e}",
        r.trace.last().unwrap().1
    ))
}

fn cli_determinism() -> Outcome {
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let dir = ok(tempfile::tempdir())?;
    for command in ["eval", "collapse", "risk", "audit", "orlicz"] {
        let mut outputs = Vec::new();
        for run in 0..2 {
            let out = dir.path().join(format!("{command}-{run}.json"));
            let status = ok(Command::new(env!("CARGO_BIN_EXE_lawprice"))
                .args([command, "--seed", "2024", "--config"])
                .arg(configs.join(format!("{command}.json")))
                .arg("--out")
                .arg(&out)
                .status())?;
            ensure!(status.success(), "{command} exited with {status}");
            outputs.push(ok(std::fs::read(&out))?);
        }
        ensure!(outputs[0] == outputs[1], "{command}: reports differ");
    }
    Ok("eval, collapse, risk, audit, orlicz byte-identical".into())
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("Hardy–Littlewood exactness", hardy_littlewood),
        ("Choquet consistency", choquet_consistency),
        ("convex-order cross-validation", convex_order_exhaustive),
        ("collapse dichotomy", collapse_dichotomy),
        ("convex counterexample", convex_counterexample),
        ("frictionless equivalences", frictionless_equivalences),
        ("capital requirements", capital_suite),
        ("Schur-convexity and conditioning", schur_and_conditioning),
        ("Orlicz gauges", orlicz_gauges),
        ("CLI determinism", cli_determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name} ({secs:.1}s): {detail}", i + 1),
            Err(why) => {
                failures += 1;
                println!("criterion {:>2} FAIL  {name} ({secs:.1}s): {why}", i + 1);
            }
        }
    }
    if failures > 0 {
        eprintln!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
