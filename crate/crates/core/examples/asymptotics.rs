//! Optimal costs and empirical measures approaching their limits as n grows.
use slpart::coefficients::{Coefficient, CoefficientSet};
use slpart::experiments::asymptotic_study;
use slpart::optimizer::OptimizerConfig;
use slpart::phi::ConvexFn;

fn main() -> slpart::Result<()> {
    let w = Coefficient::table(vec![(0.0, 0.5, 4.0), (0.5, 1.0, 1.0)])?;
    let cs = CoefficientSet::new(Coefficient::constant(1.0), Coefficient::constant(0.0), w, 4.0);
    let cfg = OptimizerConfig {
        restarts: 2,
        rel_tol: 1e-7,
        step_tol: 1e-6,
        ..Default::default()
    };
    let report = asymptotic_study(&cs, &ConvexFn::power(1.0)?, &[4, 8, 16, 32], &cfg)?;
    println!(
        "{:>4} {:>12} {:>12} {:>10} {:>8} {:>8}",
        "n", "cost", "limit", "gap", "W1", "left"
    );
    for r in &report.rows {
        let left: f64 = r.portions[..4].iter().sum();
        println!(
            "{:>4} {:>12.8} {:>12.8} {:>10.2e} {:>8.4} {:>8.4}",
            r.n, r.cost, r.limit_cost, r.gap, r.w1, left
        );
    }
    Ok(())
}
