//! The limit functional `F∞`, the optimal density `f∞ = s / ∫s`, the
//! limiting cost `φ(∫s / π)` and recovery partitions built from
//! piecewise-constant measures.
//!
//! Singular parts are atoms only. `F∞` sees them through their total mass.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coefficients::CoefficientSet;
use crate::error::{Error, Result};
use crate::partition::{cost_fn, empirical_measure, wasserstein1, MeasureRepr, Partition};
use crate::phi::{weighted, ConvexFn};

/// Density `α_i` on each block `J_i = ((i-1)/m, i/m)`, with `Σ α_i = m`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PiecewiseConstMeasure {
    alphas: Vec<f64>,
}

impl PiecewiseConstMeasure {
    pub fn new(alphas: Vec<f64>) -> Result<Self> {
        let m = alphas.len();
        if m == 0 {
            return Err(Error::InvalidInput("piecewise constant measure needs m >= 1".into()));
        }
        if let Some(a) = alphas.iter().find(|a| !(**a >= 0.0 && a.is_finite())) {
            return Err(Error::InvalidInput(format!(
                "block heights must be finite and >= 0, got {a}"
            )));
        }
        let sum: f64 = alphas.iter().sum();
        if (sum - m as f64).abs() > 1e-12 * m as f64 {
            return Err(Error::InvalidInput(format!(
                "block heights must sum to m = {m}, got {sum}"
            )));
        }
        Ok(PiecewiseConstMeasure { alphas })
    }

    pub fn m(&self) -> usize {
        self.alphas.len()
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    /// Blocks with zero height.
    pub fn zero_blocks(&self) -> Vec<usize> {
        (0..self.m()).filter(|&i| self.alphas[i] == 0.0).collect()
    }

    fn block(&self, i: usize) -> (f64, f64) {
        let m = self.m() as f64;
        let hi = if i + 1 == self.m() { 1.0 } else { (i + 1) as f64 / m };
        (i as f64 / m, hi)
    }

    pub fn to_measure(&self) -> MeasureRepr {
        let cells = (0..self.m())
            .map(|i| {
                let (lo, hi) = self.block(i);
                (lo, hi, self.alphas[i])
            })
            .collect();
        MeasureRepr {
            cells,
            atoms: Vec::new(),
        }
    }
}

/// Interval counts per block of a recovery partition. Zero-height blocks
/// hold a single interval and a zero corrector.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecoveryPlan {
    pub n: usize,
    pub k: Vec<usize>,
    pub gammas: Vec<u8>,
}

/// Measure as read from JSON: either block heights or cells and atoms.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum MeasureSpec {
    Blocks {
        m: usize,
        alphas: Vec<f64>,
    },
    General {
        #[serde(default)]
        cells: Vec<[f64; 3]>,
        #[serde(default)]
        atoms: Vec<[f64; 2]>,
    },
}

impl MeasureSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("measure: {e}")))
    }

    /// The block form, if the measure was given as one.
    pub fn blocks(&self) -> Result<Option<PiecewiseConstMeasure>> {
        match self {
            MeasureSpec::Blocks { m, alphas } => {
                if *m != alphas.len() {
                    return Err(Error::InvalidInput(format!(
                        "m = {m} but {} block heights given",
                        alphas.len()
                    )));
                }
                Ok(Some(PiecewiseConstMeasure::new(alphas.clone())?))
            }
            MeasureSpec::General { .. } => Ok(None),
        }
    }

    pub fn to_measure(&self) -> Result<MeasureRepr> {
        match self {
            MeasureSpec::Blocks { .. } => Ok(self.blocks()?.expect("block form").to_measure()),
            MeasureSpec::General { cells, atoms } => MeasureRepr::new(
                cells.iter().map(|c| (c[0], c[1], c[2])).collect(),
                atoms.iter().map(|a| (a[0], a[1])).collect(),
            ),
        }
    }
}

/// Edges of the pieces on which `s` is constant.
fn s_pieces(cs: &CoefficientSet) -> Vec<f64> {
    let mut e = vec![0.0];
    e.extend(cs.knots());
    e.push(1.0);
    e
}

/// `f∞ = s / ∫s` as a piecewise-constant density: one cell per piece of `s`
/// when `s` is piecewise constant, otherwise `grid` uniform cells holding
/// the cell mean of `s`.
pub fn f_infinity(cs: &CoefficientSet, grid: usize, tol: f64) -> Result<MeasureRepr> {
    if grid == 0 {
        return Err(Error::InvalidInput("grid must be >= 1".into()));
    }
    let edges: Vec<f64> = if cs.s_is_piecewise_constant() {
        s_pieces(cs)
    } else {
        let mut e: Vec<f64> = (0..=grid).map(|i| i as f64 / grid as f64).collect();
        e[grid] = 1.0;
        e
    };
    let per_cell = tol / (edges.len() - 1) as f64;
    let masses: Vec<f64> = edges
        .windows(2)
        .map(|w| cs.integrate_s(w[0], w[1], per_cell))
        .collect::<Result<_>>()?;
    let total: f64 = masses.iter().sum();
    let cells = edges
        .windows(2)
        .zip(&masses)
        .map(|(w, &mass)| (w[0], w[1], mass / (total * (w[1] - w[0]))))
        .collect();
    Ok(MeasureRepr {
        cells,
        atoms: Vec::new(),
    })
}

/// Breakpoints at the `j/n` quantiles of an atomless measure.
pub fn quantile_partition(mu: &MeasureRepr, n: usize) -> Result<Partition> {
    if n == 0 || !mu.atoms.is_empty() {
        return Err(Error::InvalidInput(
            "quantiles need n >= 1 and an atomless measure".into(),
        ));
    }
    let mut breaks = vec![0.0];
    let mut acc = 0.0;
    let mut j = 1;
    for &(lo, hi, h) in &mu.cells {
        let mass = h * (hi - lo);
        while j < n && acc + mass >= j as f64 / n as f64 && h > 0.0 {
            let x = lo + (j as f64 / n as f64 - acc) / h;
            breaks.push(x.clamp(lo, hi).max(*breaks.last().unwrap()));
            j += 1;
        }
        acc += mass;
    }
    while breaks.len() < n {
        breaks.push(*breaks.last().unwrap());
    }
    breaks.push(1.0);
    Partition::new(breaks)
}

/// `φ((1/π) ∫_0^1 s)`.
pub fn limit_cost(cs: &CoefficientSet, phi: &ConvexFn, tol: f64) -> Result<f64> {
    phi.eval(cs.integrate_s(0.0, 1.0, tol)? / PI)
}

/// `F∞(μ) = ∫_{f>0} φ(s / (π f)) f + φ∞ L({f = 0}) + φ(0) μˢ([0, 1])`.
pub fn f_infinity_functional(mu: &MeasureRepr, cs: &CoefficientSet, phi: &ConvexFn, tol: f64) -> Result<f64> {
    let mut zero_length = 0.0;
    let mut prev_hi = 0.0;
    for &(lo, hi, h) in &mu.cells {
        zero_length += lo - prev_hi;
        if h == 0.0 {
            zero_length += hi - lo;
        }
        prev_hi = hi;
    }
    zero_length += 1.0 - prev_hi;

    let knots = cs.knots();
    let exact = cs.s_is_piecewise_constant();
    let positive: Vec<(f64, f64, f64)> = mu.cells.iter().copied().filter(|c| c.2 > 0.0).collect();
    let per_cell = tol / positive.len().max(1) as f64;
    let integral: f64 = positive
        .iter()
        .map(|&(lo, hi, h)| {
            let g = |x: f64| -> Result<f64> { Ok(phi.eval_unchecked(cs.s_of(x)? / (PI * h)) * h) };
            if exact {
                let mut edges = vec![lo];
                edges.extend(knots.iter().copied().filter(|&k| k > lo && k < hi));
                edges.push(hi);
                edges
                    .windows(2)
                    .map(|w| Ok(g(0.5 * (w[0] + w[1]))? * (w[1] - w[0])))
                    .sum::<Result<f64>>()
            } else {
                // scale the tolerance to the size of the integrand
                let scale = g(0.5 * (lo + hi))?.abs().max(1.0);
                if scale.is_infinite() {
                    return Ok(f64::INFINITY);
                }
                cs.integrate(g, lo, hi, per_cell * scale)
            }
        })
        .sum::<Result<f64>>()?;

    Ok(integral + weighted(zero_length, phi.recession().value()) + weighted(mu.atom_mass(), phi.value_at_zero()))
}

/// Recovery partition of `μ` with `n` intervals.
pub fn recovery_partition(mu: &PiecewiseConstMeasure, n: usize) -> Result<(Partition, RecoveryPlan)> {
    let m = mu.m();
    if n < m {
        return Err(Error::InvalidInput(format!("need n >= m, got n = {n}, m = {m}")));
    }
    let m0 = mu.zero_blocks().len();
    let free = n - m0;
    let mut k = vec![1usize; m];
    let mut gammas = vec![0u8; m];
    let mut remainders: Vec<(usize, f64)> = Vec::new();
    let mut assigned = 0;
    for (i, &a) in mu.alphas().iter().enumerate() {
        if a == 0.0 {
            continue;
        }
        let raw = a * free as f64 / m as f64;
        let fl = raw.floor();
        k[i] = fl as usize;
        assigned += k[i];
        remainders.push((i, raw - fl));
    }
    let deficit = free
        .checked_sub(assigned)
        .expect("floors cannot exceed the number of free intervals");
    assert!(deficit <= remainders.len(), "infeasible corrector assignment");
    remainders.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    for &(i, _) in &remainders[..deficit] {
        k[i] += 1;
        gammas[i] = 1;
    }
    // every charged block needs at least one interval
    for i in 0..m {
        if mu.alphas()[i] > 0.0 && k[i] == 0 {
            let donor = (0..m)
                .filter(|&j| mu.alphas()[j] > 0.0)
                .max_by(|&a, &b| k[a].cmp(&k[b]).then(b.cmp(&a)))
                .expect("at least one charged block");
            k[donor] -= 1;
            k[i] = 1;
        }
    }

    let mut breaks = vec![0.0];
    for (i, &ki) in k.iter().enumerate() {
        let (lo, hi) = mu.block(i);
        for j in 1..ki {
            breaks.push(lo + (hi - lo) * j as f64 / ki as f64);
        }
        breaks.push(hi);
    }
    let partition = Partition::new(breaks)?;
    debug_assert_eq!(partition.n(), n);
    Ok((partition, RecoveryPlan { n, k, gammas }))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecoveryRow {
    pub n: usize,
    pub cost: f64,
    pub f_infinity: f64,
    pub gap: f64,
    /// `W₁` between the recovery partition's empirical measure and `μ`.
    pub w1: f64,
}

/// `F_n` of the recovery partition against `F∞(μ)` for every `n`.
pub fn verify_recovery(
    mu: &PiecewiseConstMeasure,
    cs: &CoefficientSet,
    phi: &ConvexFn,
    n_list: &[usize],
    rel_tol: f64,
) -> Result<Vec<RecoveryRow>> {
    let target = mu.to_measure();
    let f_inf = f_infinity_functional(&target, cs, phi, 1e-10)?;
    n_list
        .par_iter()
        .map(|&n| {
            let (p, _) = recovery_partition(mu, n)?;
            let cost = cost_fn(&p, cs, phi, rel_tol)?;
            Ok(RecoveryRow {
                n,
                cost,
                f_infinity: f_inf,
                gap: cost - f_inf,
                w1: wasserstein1(&empirical_measure(&p), &target)?,
            })
        })
        .collect()
}
