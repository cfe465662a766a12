//! Recovery partitions for a block measure and their cost gaps.
use slpart::coefficients::CoefficientSet;
use slpart::gamma::{recovery_partition, verify_recovery, PiecewiseConstMeasure};
use slpart::phi::ConvexFn;

fn main() -> slpart::Result<()> {
    let mu = PiecewiseConstMeasure::new(vec![1.23456, 0.76544])?;
    let (p, plan) = recovery_partition(&mu, 10)?;
    println!("n = 10: per-block counts {:?}, correctors {:?}", plan.k, plan.gammas);
    println!("        breakpoints {:?}", p.breakpoints());

    let cs = CoefficientSet::from_exprs("1", "0", "1 + x", 2.0)?;
    let phi = ConvexFn::power(1.0)?;
    println!("{:>5} {:>14} {:>14} {:>12} {:>10}", "n", "cost", "F_inf", "gap", "W1");
    for r in verify_recovery(&mu, &cs, &phi, &[10, 20, 40, 80, 160], 1e-9)? {
        println!(
            "{:>5} {:>14.10} {:>14.10} {:>12.3e} {:>10.2e}",
            r.n, r.cost, r.f_infinity, r.gap, r.w1
        );
    }
    Ok(())
}
