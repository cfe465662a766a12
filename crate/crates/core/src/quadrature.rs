//! Globally adaptive Gauss-Kronrod (7, 15) quadrature.

use crate::error::{Error, Result};

/// Maximum number of subintervals held by one adaptive integration.
pub const DEFAULT_BUDGET: usize = 4000;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One Kronrod panel: (integral estimate, error estimate).
fn kronrod<F>(f: &F, a: f64, b: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c)?;
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let f1 = f(c - h * x)?;
        let f2 = f(c + h * x)?;
        kron += w * (f1 + f2);
        // Gauss nodes are the odd-indexed Kronrod nodes.
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    Ok((kron * h, ((kron - gauss) * h).abs()))
}

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`.
pub fn integrate<F>(f: F, a: f64, b: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    integrate_with_budget(f, a, b, tol, DEFAULT_BUDGET)
}

pub fn integrate_with_budget<F>(f: F, a: f64, b: f64, tol: f64, budget: usize) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    if !(a.is_finite() && b.is_finite()) || a > b {
        return Err(Error::InvalidInput(format!("bad integration range [{a}, {b}]")));
    }
    if a == b {
        return Ok(0.0);
    }
    let (v, e) = kronrod(&f, a, b)?;
    let mut panels = vec![(a, b, v, e)];
    let mut total_err = e;
    // Round-off floor: no point splitting below a few ulps of the result.
    let floor = |value: f64| 50.0 * f64::EPSILON * value.abs();
    loop {
        let total: f64 = panels.iter().map(|p| p.2).sum();
        if total_err <= tol.max(floor(total)) {
            return Ok(total);
        }
        if panels.len() >= budget {
            return Err(Error::Quadrature {
                tol,
                budget,
                estimate: total_err,
            });
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("non-empty");
        let (lo, hi, _, err) = panels.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Err(Error::Quadrature {
                tol,
                budget,
                estimate: total_err,
            });
        }
        let (v1, e1) = kronrod(&f, lo, mid)?;
        let (v2, e2) = kronrod(&f, mid, hi)?;
        total_err += e1 + e2 - err;
        panels.push((lo, mid, v1, e1));
        panels.push((mid, hi, v2, e2));
    }
}

/// Integrates over `[a, b]` after splitting at the given interior knots, so
/// that piecewise-smooth integrands are handled panel by panel.
pub fn integrate_split<F>(f: F, a: f64, b: f64, knots: &[f64], tol: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let mut edges = vec![a];
    edges.extend(knots.iter().copied().filter(|&k| k > a && k < b));
    edges.push(b);
    let pieces = edges.len() - 1;
    let per_piece = tol / pieces as f64;
    let mut total = 0.0;
    for w in edges.windows(2) {
        total += integrate(&f, w[0], w[1], per_piece)?;
    }
    Ok(total)
}
