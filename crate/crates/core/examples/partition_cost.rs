//! Partition cost, empirical measures, portions and the W1 distance.
use slpart::coefficients::CoefficientSet;
use slpart::partition::{cost_with_lambdas, empirical_measure, portion_count, wasserstein1, MeasureRepr, Partition};
use slpart::phi::ConvexFn;

fn main() -> slpart::Result<()> {
    let cs = CoefficientSet::from_exprs("1", "0", "1 + x", 2.0)?;
    let phi = ConvexFn::power(1.0)?;
    for p in [
        Partition::uniform(4),
        Partition::from_interior(&[0.3, 0.55, 0.78])?,
        Partition::from_interior(&[0.5, 0.5, 0.75])?,
    ] {
        let (cost, lambdas) = cost_with_lambdas(&p, &cs, &phi, 1e-9)?;
        let mu = empirical_measure(&p);
        println!(
            "{:?}\n  cost {cost:.10}, lambdas {:?}\n  portion(0, 1/2) = {}, W1 to Lebesgue = {:.6}",
            p.breakpoints(),
            lambdas.iter().map(|l| format!("{l:.3}")).collect::<Vec<_>>(),
            portion_count(&p, 0.0, 0.5),
            wasserstein1(&mu, &MeasureRepr::uniform())?
        );
    }
    Ok(())
}
