//! The splitting inequality `λ(0,x)^(-1/2) + λ(x,1)^(-1/2) >= λ(0,1)^(-1/2)`.
use slpart::coefficients::CoefficientSet;
use slpart::experiments::{brascamp_lieb_sweep, interior_grid};

fn main() -> slpart::Result<()> {
    let cases = [
        ("q = 0", CoefficientSet::constant(1.0, 0.0, 1.0, 1.0)),
        ("q = 7", CoefficientSet::constant(1.0, 7.0, 1.0, 7.0)),
        (
            "q = -9",
            CoefficientSet::constant(1.0, -9.0, 1.0, 9.0).with_relaxed_q(true),
        ),
        (
            "q = 2 + sin(6x)",
            CoefficientSet::from_exprs("1 + x", "2 + sin(6 * x)", "2 - x", 4.0)?,
        ),
    ];
    for (name, cs) in cases {
        let r = brascamp_lieb_sweep(&cs, &interior_grid(19), 1e-9)?;
        let worst = r
            .rows
            .iter()
            .min_by(|a, b| (a.lhs - a.rhs).total_cmp(&(b.lhs - b.rhs)))
            .expect("non-empty grid");
        println!(
            "{name:<16} all hold: {:<5}  tightest x = {:.2}: lhs {:.6}, rhs {:.6}",
            r.all_hold(),
            worst.x,
            worst.lhs,
            worst.rhs
        );
    }
    Ok(())
}
