//! Global and local bounds around the computed eigenvalue, and the
//! small-interval limit `λ(J) L(J)² → π² / s(x0)²`.
use slpart::coefficients::CoefficientSet;
use slpart::sl_solver::{
    first_eigenvalue, global_bounds, local_lower_bound, local_upper_bound, shrinkage_limit_check, Interval,
};

fn main() -> slpart::Result<()> {
    let cs = CoefficientSet::from_exprs("1 + 0.5 * sin(3 * x)", "x", "1 + x", 3.0)?;
    for (lo, hi) in [(0.0, 1.0), (0.2, 0.45), (0.7, 0.72)] {
        let j = Interval::new(lo, hi)?;
        let lam = first_eigenvalue(j, &cs, 1e-9)?.lambda;
        let (g_lo, g_hi) = global_bounds(j, cs.beta)?;
        let (l_lo, l_hi) = (local_lower_bound(j, &cs)?, local_upper_bound(j, &cs)?);
        println!("({lo}, {hi}): {g_lo:.4} <= {l_lo:.4} <= lambda = {lam:.6} <= {l_hi:.4} <= {g_hi:.4}");
    }

    let cs = CoefficientSet::from_exprs("1", "0", "1 + x", 2.0)?;
    let target = std::f64::consts::PI.powi(2) / cs.s_of(0.5)?.powi(2);
    let radii: Vec<f64> = (0..=6).map(|k| 0.1 / f64::powi(2.0, k)).collect();
    for (r, scaled) in shrinkage_limit_check(0.5, &cs, &radii, 1e-9)? {
        println!("r = {r:.5}: lambda L^2 = {scaled:.8}  (limit {target:.8})");
    }
    Ok(())
}
