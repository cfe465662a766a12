//! First Dirichlet eigenvalue of `-(p u')' + q u = λ w u` on a subinterval.
use slpart::coefficients::CoefficientSet;
use slpart::sl_solver::{closed_form_eigenvalue, first_eigenvalue, first_eigenvalue_with, Interval, SolverOptions};

fn main() -> slpart::Result<()> {
    let j = Interval::new(0.0, 0.5)?;
    let cs = CoefficientSet::constant(1.0, 2.0, 4.0, 4.0);
    let r = first_eigenvalue(j, &cs, 1e-9)?;
    println!(
        "constant: lambda = {:.12} (closed form {:.12})",
        r.lambda,
        closed_form_eigenvalue(j, 1.0, 2.0, 4.0)?
    );
    println!(
        "          error estimate {:.2e}, {} interior nodes",
        r.error_estimate, r.grid_size
    );

    let cs = CoefficientSet::from_exprs("1 + x", "3 * x^2", "2 - x", 4.0)?;
    let opts = SolverOptions {
        eigenfunction: true,
        ..SolverOptions::with_rel_tol(1e-9)
    };
    let r = first_eigenvalue_with(Interval::new(0.0, 1.0)?, &cs, &opts)?;
    println!("varying:  lambda = {:.12}", r.lambda);
    let u = r.eigenfunction.unwrap_or_default();
    let (xmax, _) = u
        .iter()
        .copied()
        .fold((0.0, f64::MIN), |a, b| if b.1 > a.1 { b } else { a });
    println!("          eigenfunction peaks at x = {xmax:.4}");
    Ok(())
}
