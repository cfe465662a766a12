//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

use std::f64::consts::PI;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use slpart::coefficients::{Coefficient, CoefficientSet};
use slpart::experiments::{asymptotic_study, brascamp_lieb_sweep, interior_grid};
use slpart::gamma::{f_infinity, f_infinity_functional, limit_cost, verify_recovery, PiecewiseConstMeasure};
use slpart::optimizer::{brute_force, optimize, OptimizerConfig};
use slpart::partition::{empirical_measure, portion_count, wasserstein1};
use slpart::phi::ConvexFn;
use slpart::sl_solver::{
    closed_form_eigenvalue, first_eigenvalue, global_bounds, local_lower_bound, local_upper_bound,
    shrinkage_limit_check, Interval,
};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn sci(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn lib<T>(r: slpart::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn step_w() -> CoefficientSet {
    let w = Coefficient::table(vec![(0.0, 0.5, 4.0), (0.5, 1.0, 1.0)]).unwrap();
    CoefficientSet::new(Coefficient::constant(1.0), Coefficient::constant(0.0), w, 4.0)
}

fn step_w_with_q(q: f64) -> CoefficientSet {
    CoefficientSet {
        q: Coefficient::constant(q),
        beta: 5f64.max(q),
        ..step_w()
    }
}

fn square() -> ConvexFn {
    ConvexFn::power(1.0).unwrap()
}

fn closed_form_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let beta = 4.0;
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let p = rng.gen_range(1.0 / beta..=beta);
        let q = rng.gen_range(0.0..=beta);
        let w = rng.gen_range(1.0 / beta..=beta);
        let len = rng.gen_range(0.01..=1.0);
        let lo = rng.gen_range(0.0..=1.0 - len);
        let j = lib(Interval::new(lo, lo + len))?;
        let cs = CoefficientSet::constant(p, q, w, beta);
        lib(cs.ensure_valid())?;
        let got = lib(first_eigenvalue(j, &cs, 1e-9))?.lambda;
        let want = lib(closed_form_eigenvalue(j, p, q, w))?;
        worst = worst.max((got - want).abs() / want);
    }
    ensure(worst <= 1e-8, format!("max relative error {worst:.3e}"))?;
    Ok(format!("max relative error {worst:.3e} over 50 tuples"))
}

fn random_config(rng: &mut ChaCha8Rng, k: usize) -> CoefficientSet {
    if k % 3 == 2 {
        let cuts = [0.0, rng.gen_range(0.1..0.45), rng.gen_range(0.55..0.9), 1.0];
        let table = |rng: &mut ChaCha8Rng, lo: f64, hi: f64| {
            let cells = cuts.windows(2).map(|c| (c[0], c[1], rng.gen_range(lo..hi))).collect();
            Coefficient::table(cells).unwrap()
        };
        let p = table(rng, 0.5, 2.0);
        let q = table(rng, 0.0, 3.0);
        let w = table(rng, 0.5, 2.0);
        CoefficientSet::new(p, q, w, 4.0)
    } else {
        let p = format!(
            "{} + {} * sin({} * x)",
            rng.gen_range(1.0..2.0),
            rng.gen_range(0.0..0.5),
            rng.gen_range(1.0..6.0)
        );
        let q = format!("{} * x^2", rng.gen_range(0.0..3.0));
        let w = format!("{} + {} * x", rng.gen_range(0.5..1.5), rng.gen_range(0.0..1.0));
        CoefficientSet::from_exprs(&p, &q, &w, 4.0).unwrap()
    }
}

fn bound_sandwich() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut checked = 0;
    for k in 0..25 {
        let cs = random_config(&mut rng, k);
        lib(cs.ensure_valid())?;
        for _ in 0..4 {
            let a: f64 = rng.gen_range(0.0..0.95);
            let b = rng.gen_range(a + 0.01..=1.0);
            let j = lib(Interval::new(a, b))?;
            let r = lib(first_eigenvalue(j, &cs, 1e-9))?;
            let slack = 10.0 * r.error_estimate;
            let (g_lo, g_hi) = lib(global_bounds(j, cs.beta))?;
            let (l_lo, l_hi) = (lib(local_lower_bound(j, &cs))?, lib(local_upper_bound(j, &cs))?);
            for (name, lo, hi) in [("global", g_lo, g_hi), ("local", l_lo, l_hi)] {
                ensure(
                    lo <= r.lambda + slack && r.lambda - slack <= hi,
                    format!("config {k} on ({a}, {b}): {name} [{lo}, {hi}] misses {}", r.lambda),
                )?;
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} subintervals sandwiched"))
}

fn shrinkage_limit() -> Outcome {
    let cs = lib(CoefficientSet::from_exprs("1", "0", "1 + x", 2.0))?;
    let target = PI * PI / lib(cs.s_of(0.5))?.powi(2);
    let r = 0.1 / 64.0;
    let (_, scaled) = lib(shrinkage_limit_check(0.5, &cs, &[r], 1e-9))?[0];
    let rel = (scaled - target).abs() / target;
    ensure(rel <= 0.01, format!("relative deviation {rel:.3e}"))?;
    Ok(format!("relative deviation {rel:.3e} at r = {r}"))
}

fn optimizer_vs_oracle() -> Outcome {
    let configs: Vec<(&str, CoefficientSet, ConvexFn)> = vec![
        (
            "constants, power(1)",
            CoefficientSet::constant(1.0, 0.0, 1.0, 1.0),
            square(),
        ),
        (
            "w = 1 + x, power(1)",
            lib(CoefficientSet::from_exprs("1", "0", "1 + x", 2.0))?,
            square(),
        ),
        (
            "varying p, q, power(2)",
            lib(CoefficientSet::from_exprs(
                "1 + 0.5 * sin(3 * x)",
                "2 * x",
                "1.5 - x",
                3.0,
            ))?,
            lib(ConvexFn::power(2.0))?,
        ),
        ("step w, shifted(0.3, 0.1)", step_w(), lib(ConvexFn::shifted(0.3, 0.1))?),
        (
            "q = 3, power_inverse(0.25)",
            lib(CoefficientSet::from_exprs("1", "3", "2 - x", 3.0))?,
            lib(ConvexFn::power_inverse(0.25))?,
        ),
    ];
    let mut worst = 0.0f64;
    for (name, cs, phi) in &configs {
        for (n, grid) in [(2, 400), (3, 200)] {
            let cfg = OptimizerConfig {
                rel_tol: 1e-9,
                step_tol: 1e-7,
                ..OptimizerConfig::new(n, 11)
            };
            let opt = lib(optimize(&cfg, cs, phi))?;
            let bf = lib(brute_force(n, grid, cs, phi, 1e-9))?;
            let diff = (opt.cost - bf.cost).abs();
            worst = worst.max(diff);
            ensure(diff <= 1e-4, format!("{name}, n = {n}: {} vs {}", opt.cost, bf.cost))?;
        }
    }
    Ok(format!("max cost difference {worst:.3e} over 10 cases"))
}

fn constant_minimizer() -> Outcome {
    let cs = CoefficientSet::constant(1.0, 0.0, 1.0, 1.0);
    let (mut dev, mut cost_err) = (0.0f64, 0.0f64);
    for n in 2..=8 {
        let cfg = OptimizerConfig {
            rel_tol: 1e-9,
            step_tol: 1e-7,
            ..OptimizerConfig::new(n, 3)
        };
        let opt = lib(optimize(&cfg, &cs, &square()))?;
        for (k, &x) in opt.partition.breakpoints().iter().enumerate() {
            dev = dev.max((x - k as f64 / n as f64).abs());
        }
        cost_err = cost_err.max((opt.cost - 1.0 / (PI * PI)).abs());
    }
    ensure(
        dev <= 1e-4 && cost_err <= 1e-6,
        format!("deviation {dev:.3e}, cost error {cost_err:.3e}"),
    )?;
    Ok(format!("breakpoint deviation {dev:.3e}, cost error {cost_err:.3e}"))
}

fn large_n_config() -> OptimizerConfig {
    OptimizerConfig {
        restarts: 2,
        rel_tol: 1e-7,
        step_tol: 1e-6,
        seed: 0,
        ..Default::default()
    }
}

struct LargeN {
    cost: f64,
    limit: f64,
    w1: f64,
    left: f64,
    converged: bool,
}

fn solve_large_n() -> slpart::Result<LargeN> {
    let cs = step_w();
    let opt = optimize(
        &OptimizerConfig {
            n: 64,
            ..large_n_config()
        },
        &cs,
        &square(),
    )?;
    let f_inf = f_infinity(&cs, 1, 1e-12)?;
    Ok(LargeN {
        cost: opt.cost,
        limit: limit_cost(&cs, &square(), 1e-12)?,
        w1: wasserstein1(&empirical_measure(&opt.partition), &f_inf)?,
        left: portion_count(&opt.partition, 0.0, 0.5),
        converged: opt.converged,
    })
}

fn asymptotic_density(run: &LargeN) -> Outcome {
    ensure(
        run.w1 <= 0.03 && (run.left - 2.0 / 3.0).abs() <= 0.05,
        format!("W1 {:.4e}, portion(0, 0.5) {:.4}", run.w1, run.left),
    )?;
    Ok(format!(
        "n = 64: W1 {:.4e}, portion(0, 0.5) {:.4}, converged {}",
        run.w1, run.left, run.converged
    ))
}

fn limiting_cost(run: &LargeN) -> Outcome {
    let rel = (run.cost - run.limit).abs() / run.limit;
    ensure(rel <= 0.02, format!("relative gap {rel:.3e}"))?;
    let cs = step_w_with_q(5.0);
    lib(cs.ensure_valid())?;
    let report = lib(asymptotic_study(&cs, &square(), &[8, 16, 32], &large_n_config()))?;
    let limit_q = report.rows[0].limit_cost;
    ensure(
        limit_q == run.limit,
        format!("limit with q = 5 is {limit_q}, with q = 0 {}", run.limit),
    )?;
    let gaps: Vec<f64> = report.rows.iter().map(|r| r.gap.abs()).collect();
    ensure(
        gaps.windows(2).all(|g| g[1] < g[0]),
        format!("q = 5 gaps {gaps:?} do not shrink"),
    )?;
    Ok(format!(
        "relative gap {rel:.3e} at n = 64; q = 5 |gap| over n = 8, 16, 32: {}",
        sci(&gaps)
    ))
}

fn recovery_sequence() -> Outcome {
    let cs = CoefficientSet::constant(1.0, 0.0, 1.0, 1.0);
    let mu = lib(PiecewiseConstMeasure::new(vec![1.2, 0.8]))?;
    let rel_tol = 1e-9;
    let rows = lib(verify_recovery(&mu, &cs, &square(), &[10, 20, 40, 80], rel_tol))?;
    let f_inf = rows[0].f_infinity;
    let gaps: Vec<f64> = rows.iter().map(|r| r.gap).collect();
    // differences below the solver tolerance are not a positive gap
    let noise = 10.0 * rel_tol * f_inf;
    ensure(
        gaps[0] > noise,
        format!("gap at n = 10 is {:.3e}, not positive (gaps {})", gaps[0], sci(&gaps)),
    )?;
    ensure(gaps[3] <= 0.02 * f_inf, format!("gap at n = 80 is {:.3e}", gaps[3]))?;
    ensure(
        gaps.windows(2).all(|g| g[1] < g[0]),
        format!("gaps {} not decreasing", sci(&gaps)),
    )?;
    Ok(format!("gaps {}", sci(&gaps)))
}

fn jensen_optimality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let phi = square();
    let mut worst_eq = 0.0f64;
    for k in 0..100 {
        let cuts = [0.0, rng.gen_range(0.1..0.9), 1.0];
        let cells = cuts.windows(2).map(|c| (c[0], c[1], rng.gen_range(0.5..2.0))).collect();
        let w = lib(Coefficient::table(cells))?;
        let cs = CoefficientSet::new(
            Coefficient::constant(rng.gen_range(0.5..2.0)),
            Coefficient::constant(0.0),
            w,
            4.0,
        );
        let m = rng.gen_range(1..=6);
        let mut alphas: Vec<f64> = (0..m)
            .map(|_| {
                if rng.gen_bool(0.1) {
                    0.0
                } else {
                    rng.gen_range(0.1..3.0)
                }
            })
            .collect();
        if alphas.iter().all(|&a| a == 0.0) {
            alphas[0] = 1.0;
        }
        let total: f64 = alphas.iter().sum();
        alphas.iter_mut().for_each(|a| *a *= m as f64 / total);
        let mu = lib(PiecewiseConstMeasure::new(alphas))?.to_measure();
        let limit = lib(limit_cost(&cs, &phi, 1e-12))?;
        let value = lib(f_infinity_functional(&mu, &cs, &phi, 1e-12))?;
        ensure(
            value >= limit * (1.0 - 1e-12),
            format!("density {k}: {value} < {limit}"),
        )?;
        let at_opt = lib(f_infinity_functional(
            &lib(f_infinity(&cs, 1, 1e-12))?,
            &cs,
            &phi,
            1e-12,
        ))?;
        worst_eq = worst_eq.max((at_opt - limit).abs());
    }
    ensure(worst_eq <= 1e-8, format!("equality defect {worst_eq:.3e}"))?;
    Ok(format!("100 densities above the limit; equality defect {worst_eq:.3e}"))
}

fn brascamp_lieb() -> Outcome {
    let xs = interior_grid(99);
    let flat = lib(brascamp_lieb_sweep(
        &CoefficientSet::constant(1.0, 0.0, 1.0, 1.0),
        &xs,
        1e-9,
    ))?;
    for r in &flat.rows {
        ensure(
            (r.lhs - r.rhs).abs() <= 10.0 * r.tolerance,
            format!("q = 0, x = {}: {} vs {}", r.x, r.lhs, r.rhs),
        )?;
    }
    let strict = lib(brascamp_lieb_sweep(
        &CoefficientSet::constant(1.0, 7.0, 1.0, 7.0),
        &xs,
        1e-9,
    ))?;
    for r in &strict.rows {
        ensure(
            r.lhs > r.rhs + r.tolerance,
            format!("q = 7, x = {}: {} vs {}", r.x, r.lhs, r.rhs),
        )?;
    }
    let well = CoefficientSet::constant(1.0, -9.0, 1.0, 9.0).with_relaxed_q(true);
    let row = lib(brascamp_lieb_sweep(&well, &[0.5], 1e-9))?.rows[0].clone();
    ensure(
        !row.holds && (row.lhs - 0.3623).abs() < 1e-4 && (row.rhs - 1.0723).abs() < 1e-4,
        format!("q = -9 at 0.5: lhs {}, rhs {}", row.lhs, row.rhs),
    )?;
    Ok(format!("q = -9, x = 0.5: lhs {:.4} < rhs {:.4}", row.lhs, row.rhs))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = dir.path().join("config.json");
    std::fs::write(
        &config,
        r#"{"p": "1", "q": 0, "w": {"cells": [[0, 0.5, 4], [0.5, 1, 1]]}, "beta": 4, "phi": {"kind": "power", "r": 1}}"#,
    )
    .map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("run{k}.csv"));
        let status = Command::new(env!("CARGO_BIN_EXE_slpart"))
            .arg("verify")
            .arg("--config")
            .arg(&config)
            .args(["--n-list", "4,8,12", "--seed", "42", "--restarts", "3", "--out-csv"])
            .arg(&out)
            .status()
            .map_err(|e| e.to_string())?;
        ensure(status.success(), format!("verify exited with {status}"))?;
        outputs.push(std::fs::read(&out).map_err(|e| e.to_string())?);
    }
    ensure(outputs[0] == outputs[1], "CSV outputs differ")?;
    Ok(format!("{} identical bytes", outputs[0].len()))
}

fn report(id: usize, name: &str, limit: Duration, start: Instant, outcome: Outcome) -> bool {
    let elapsed = start.elapsed();
    let (pass, detail) = match outcome {
        Ok(d) if elapsed <= limit => (true, d),
        Ok(d) => (false, format!("{d}; took {elapsed:.1?}, limit {limit:?}")),
        Err(e) => (false, e),
    };
    println!(
        "{} {id:>2} {name}: {detail} [{:.1?}]",
        if pass { "PASS" } else { "FAIL" },
        elapsed
    );
    pass
}

fn main() {
    let secs = Duration::from_secs;
    let mut results = Vec::new();
    let mut run = |id, name, limit, f: &dyn Fn() -> Outcome| {
        let t = Instant::now();
        results.push(report(id, name, limit, t, f()));
    };
    run(1, "closed-form exactness", secs(10), &closed_form_exactness);
    run(2, "bound sandwich", secs(30), &bound_sandwich);
    run(3, "shrinkage limit", secs(10), &shrinkage_limit);
    run(4, "optimizer vs oracle", secs(120), &optimizer_vs_oracle);
    run(5, "constant-coefficient minimizer", secs(60), &constant_minimizer);

    let t = Instant::now();
    let large = solve_large_n().map_err(|e| e.to_string());
    let shared = t.elapsed();
    let t6 = Instant::now() - shared;
    results.push(report(
        6,
        "asymptotic density",
        secs(300),
        t6,
        large.as_ref().map_err(Clone::clone).and_then(asymptotic_density),
    ));
    let t7 = Instant::now() - shared;
    results.push(report(
        7,
        "limiting cost",
        secs(300),
        t7,
        large.as_ref().map_err(Clone::clone).and_then(limiting_cost),
    ));

    let mut run = |id, name, limit, f: &dyn Fn() -> Outcome| {
        let t = Instant::now();
        results.push(report(id, name, limit, t, f()));
    };
    run(8, "recovery sequence", secs(60), &recovery_sequence);
    run(9, "Jensen optimality", secs(10), &jensen_optimality);
    run(10, "splitting inequality sweep", secs(20), &brascamp_lieb);
    run(11, "determinism", secs(600), &determinism);

    let passed = results.iter().filter(|&&p| p).count();
    println!("{passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
