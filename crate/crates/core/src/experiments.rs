//! Desk-scale studies: optimal partitions against their limit as `n` grows,
//! and the splitting inequality `λ(0,x)^{-1/2} + λ(x,1)^{-1/2} >= λ(0,1)^{-1/2}`.

use rayon::prelude::*;
use serde::Serialize;

use crate::coefficients::CoefficientSet;
use crate::error::{Error, Result};
use crate::gamma::{f_infinity, limit_cost};
use crate::optimizer::{optimize, OptimizerConfig};
use crate::output::fmt_num;
use crate::partition::{empirical_measure, portion_count, wasserstein1};
use crate::phi::ConvexFn;
use crate::sl_solver::{first_eigenvalue, Interval};

/// Dyadic cells `(k/8, (k+1)/8)` of the portion table.
pub const PORTION_CELLS: usize = 8;

/// Grid used for `f∞` when `s` is not piecewise constant.
const F_INF_GRID: usize = 1024;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticRow {
    pub n: usize,
    pub cost: f64,
    pub limit_cost: f64,
    /// `cost - limit_cost`; either sign is possible at finite `n`.
    pub gap: f64,
    /// `W₁` distance between the optimal empirical measure and `f∞`.
    pub w1: f64,
    pub portions: [f64; PORTION_CELLS],
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticReport {
    pub rows: Vec<AsymptoticRow>,
}

impl AsymptoticReport {
    pub fn header() -> Vec<String> {
        let mut h: Vec<String> = ["n", "cost", "limit_cost", "gap", "w1"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        h.extend((0..PORTION_CELLS).map(|k| format!("portion_{k}")));
        h.push("converged".into());
        h
    }

    pub fn csv_rows(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| {
                let mut v = vec![
                    r.n.to_string(),
                    fmt_num(r.cost),
                    fmt_num(r.limit_cost),
                    fmt_num(r.gap),
                    fmt_num(r.w1),
                ];
                v.extend(r.portions.iter().map(|&p| fmt_num(p)));
                v.push(r.converged.to_string());
                v
            })
            .collect()
    }
}

/// Optimizes `F_n` for each `n` in the increasing list `n_list`, using `cfg`
/// for everything except `n`.
pub fn asymptotic_study(
    cs: &CoefficientSet,
    phi: &ConvexFn,
    n_list: &[usize],
    cfg: &OptimizerConfig,
) -> Result<AsymptoticReport> {
    if n_list.is_empty() || n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput(
            "n list must be non-empty and strictly increasing".into(),
        ));
    }
    let f_inf = f_infinity(cs, F_INF_GRID, 1e-12)?;
    let limit = limit_cost(cs, phi, 1e-12)?;
    let rows = n_list
        .par_iter()
        .map(|&n| {
            let opt = optimize(&OptimizerConfig { n, ..cfg.clone() }, cs, phi)?;
            let mut portions = [0.0; PORTION_CELLS];
            for (k, p) in portions.iter_mut().enumerate() {
                let w = 1.0 / PORTION_CELLS as f64;
                *p = portion_count(&opt.partition, k as f64 * w, (k + 1) as f64 * w);
            }
            Ok(AsymptoticRow {
                n,
                cost: opt.cost,
                limit_cost: limit,
                gap: opt.cost - limit,
                w1: wasserstein1(&empirical_measure(&opt.partition), &f_inf)?,
                portions,
                converged: opt.converged,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AsymptoticReport { rows })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BLiebRow {
    pub x: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    /// Some eigenvalue was not positive; `lhs` and `rhs` are NaN.
    pub flagged: bool,
    /// Allowance used in `holds`.
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BLiebReport {
    pub rows: Vec<BLiebRow>,
}

impl BLiebReport {
    pub fn all_hold(&self) -> bool {
        self.rows.iter().all(|r| r.holds)
    }

    pub fn header() -> Vec<String> {
        ["x", "lhs", "rhs", "holds"].iter().map(|s| s.to_string()).collect()
    }

    pub fn csv_rows(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| vec![fmt_num(r.x), fmt_num(r.lhs), fmt_num(r.rhs), r.holds.to_string()])
            .collect()
    }
}

/// `x_k = k / (count + 1)` for `k = 1..=count`.
pub fn interior_grid(count: usize) -> Vec<f64> {
    (1..=count).map(|k| k as f64 / (count + 1) as f64).collect()
}

/// Evaluates both sides of the splitting inequality at every `x`. A row
/// holds when `lhs >= rhs - tol`, with `tol` ten times the propagated
/// eigenvalue error estimates plus a round-off floor.
pub fn brascamp_lieb_sweep(cs: &CoefficientSet, xs: &[f64], rel_tol: f64) -> Result<BLiebReport> {
    if let Some(x) = xs.iter().find(|&&x| !(x > 0.0 && x < 1.0)) {
        return Err(Error::InvalidInput(format!("split points must lie in (0, 1), got {x}")));
    }
    let whole = first_eigenvalue(Interval::new(0.0, 1.0)?, cs, rel_tol)?;
    let rows = xs
        .par_iter()
        .map(|&x| {
            let left = first_eigenvalue(Interval::new(0.0, x)?, cs, rel_tol)?;
            let right = first_eigenvalue(Interval::new(x, 1.0)?, cs, rel_tol)?;
            if [left.lambda, right.lambda, whole.lambda].iter().any(|&l| !(l > 0.0)) {
                return Ok(BLiebRow {
                    x,
                    lhs: f64::NAN,
                    rhs: f64::NAN,
                    holds: false,
                    flagged: true,
                    tolerance: f64::NAN,
                });
            }
            let inv_sqrt = |l: f64| 1.0 / l.sqrt();
            // d(λ^{-1/2}) = λ^{-3/2} dλ / 2
            let spread = |l: f64, e: f64| 0.5 * e / (l * l.sqrt());
            let lhs = inv_sqrt(left.lambda) + inv_sqrt(right.lambda);
            let rhs = inv_sqrt(whole.lambda);
            let propagated = spread(left.lambda, left.error_estimate)
                + spread(right.lambda, right.error_estimate)
                + spread(whole.lambda, whole.error_estimate);
            let tolerance = 10.0 * propagated + 1e-12 * (lhs + rhs);
            Ok(BLiebRow {
                x,
                lhs,
                rhs,
                holds: lhs >= rhs - tolerance,
                flagged: false,
                tolerance,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BLiebReport { rows })
}
