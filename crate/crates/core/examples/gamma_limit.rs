//! The limit density f∞, the limit functional and the limiting cost.
use slpart::coefficients::{Coefficient, CoefficientSet};
use slpart::gamma::{f_infinity, f_infinity_functional, limit_cost, PiecewiseConstMeasure};
use slpart::partition::MeasureRepr;
use slpart::phi::ConvexFn;

fn main() -> slpart::Result<()> {
    let w = Coefficient::table(vec![(0.0, 0.5, 4.0), (0.5, 1.0, 1.0)])?;
    let cs = CoefficientSet::new(Coefficient::constant(1.0), Coefficient::constant(0.0), w, 4.0);
    let phi = ConvexFn::power(1.0)?;
    let f_inf = f_infinity(&cs, 256, 1e-12)?;
    println!("f_inf cells {:?}", f_inf.cells);
    println!("limit cost {:.12}", limit_cost(&cs, &phi, 1e-12)?);
    let candidates = [
        ("f_inf", f_inf.clone()),
        ("uniform", MeasureRepr::uniform()),
        (
            "blocks (1.5, 0.5)",
            PiecewiseConstMeasure::new(vec![1.5, 0.5])?.to_measure(),
        ),
        (
            "atom at 0.5",
            MeasureRepr::new(vec![(0.0, 1.0, 0.5)], vec![(0.5, 0.5)])?,
        ),
    ];
    for (name, mu) in candidates {
        println!("F_inf({name}) = {:.12}", f_infinity_functional(&mu, &cs, &phi, 1e-10)?);
    }
    Ok(())
}
