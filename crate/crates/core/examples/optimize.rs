//! Optimal partitions by multistart coordinate descent, checked against
//! exhaustive search for small n.
use slpart::coefficients::CoefficientSet;
use slpart::optimizer::{brute_force, optimize, OptimizerConfig};
use slpart::phi::ConvexFn;

fn main() -> slpart::Result<()> {
    let cs = CoefficientSet::from_exprs("1", "0", "1 + x", 2.0)?;
    let phi = ConvexFn::power(1.0)?;
    for n in [2, 3] {
        let opt = optimize(
            &OptimizerConfig {
                rel_tol: 1e-9,
                ..OptimizerConfig::new(n, 7)
            },
            &cs,
            &phi,
        )?;
        let bf = brute_force(n, 200, &cs, &phi, 1e-9)?;
        println!("n = {n}: descent {:.10} at {:?}", opt.cost, opt.partition.interior());
        println!("       grid    {:.10} at {:?}", bf.cost, bf.partition.interior());
    }
    let opt = optimize(
        &OptimizerConfig {
            restarts: 4,
            ..OptimizerConfig::new(12, 1)
        },
        &cs,
        &phi,
    )?;
    println!(
        "n = 12: cost {:.10}, {} sweeps, converged {}, restart {} won",
        opt.cost, opt.iterations, opt.converged, opt.restart
    );
    println!(
        "        lengths {:?}",
        opt.partition
            .lengths()
            .iter()
            .map(|l| format!("{l:.4}"))
            .collect::<Vec<_>>()
    );
    Ok(())
}
