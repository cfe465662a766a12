//! Minimization of `F_n` over partitions with `n` intervals.
//!
//! Each restart is a coordinate descent on the interior breakpoints. A
//! breakpoint is moved to the golden-section minimizer of its two adjacent
//! terms inside the bracket formed by its neighbours, then over-relaxed
//! towards that minimizer when this does not increase the cost. Restart 0
//! starts from the uniform partition, later restarts from jittered
//! quantiles of `f∞`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coefficients::CoefficientSet;
use crate::error::{Error, Result};
use crate::gamma::{f_infinity, quantile_partition};
use crate::partition::{interval_term, Partition};
use crate::phi::ConvexFn;
use crate::sl_solver::Interval;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    pub n: usize,
    pub restarts: usize,
    /// Maximum number of sweeps per restart.
    pub max_iters: usize,
    /// Convergence threshold on the largest breakpoint move of a sweep.
    pub step_tol: f64,
    pub seed: u64,
    /// Ignored (treated as false) when `φ(0) = +∞`.
    pub allow_empty: bool,
    /// Relative tolerance of every eigenvalue solve.
    pub rel_tol: f64,
    /// Over-relaxation factor in `[1, 2)`; `None` picks `2 / (1 + sin(π/n))`.
    pub omega: Option<f64>,
    /// Relative jitter of the quantile starts, in units of the local spacing.
    pub jitter: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            n: 2,
            restarts: 3,
            max_iters: 500,
            step_tol: 1e-6,
            seed: 0,
            allow_empty: false,
            rel_tol: 1e-8,
            omega: None,
            jitter: 0.25,
        }
    }
}

impl OptimizerConfig {
    pub fn new(n: usize, seed: u64) -> Self {
        OptimizerConfig {
            n,
            seed,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(m));
        if self.n == 0 {
            return bad("n must be >= 1".into());
        }
        if self.restarts == 0 {
            return bad("restarts must be >= 1".into());
        }
        if !(self.step_tol > 0.0) {
            return bad(format!("step_tol must be > 0, got {}", self.step_tol));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return bad(format!("rel_tol must lie in (0, 1), got {}", self.rel_tol));
        }
        if let Some(w) = self.omega {
            if !(1.0..2.0).contains(&w) {
                return bad(format!("omega must lie in [1, 2), got {w}"));
            }
        }
        if !(self.jitter >= 0.0 && self.jitter <= 1.0) {
            return bad(format!("jitter must lie in [0, 1], got {}", self.jitter));
        }
        Ok(())
    }

    fn omega_for(&self, n: usize) -> f64 {
        self.omega
            .unwrap_or_else(|| 2.0 / (1.0 + (std::f64::consts::PI / n as f64).sin()))
            .min(1.95)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Optimum {
    pub partition: Partition,
    pub cost: f64,
    /// Sweeps performed by the winning restart.
    pub iterations: usize,
    pub restarts_used: usize,
    /// `+∞` for empty intervals.
    pub per_interval_lambdas: Vec<f64>,
    pub converged: bool,
    /// Cost after each sweep of the winning restart, starting with the
    /// initial cost.
    pub cost_log: Vec<f64>,
    /// Index of the winning restart.
    pub restart: usize,
}

/// `(cost term, λ)` of one interval.
type Term = (f64, f64);

struct Problem<'a> {
    n: usize,
    cs: &'a CoefficientSet,
    phi: &'a ConvexFn,
    rel_tol: f64,
}

impl Problem<'_> {
    fn term(&self, lo: f64, hi: f64) -> Result<Term> {
        interval_term(Interval { lo, hi }, self.n, self.cs, self.phi, self.rel_tol)
    }
}

/// Multistart minimization of `F_n`.
pub fn optimize(cfg: &OptimizerConfig, cs: &CoefficientSet, phi: &ConvexFn) -> Result<Optimum> {
    cfg.validate()?;
    let n = cfg.n;
    let allow_empty = cfg.allow_empty && phi.value_at_zero().is_finite();
    let problem = Problem {
        n,
        cs,
        phi,
        rel_tol: cfg.rel_tol,
    };
    let starts = starting_points(cfg, cs)?;
    let runs: Vec<Result<Optimum>> = starts
        .into_par_iter()
        .enumerate()
        .map(|(k, start)| descend(&problem, cfg, start, allow_empty, k))
        .collect();
    let restarts_used = runs.len();
    let mut best: Option<Optimum> = None;
    let mut first_err = None;
    for r in runs {
        match r {
            Ok(o) => {
                if best.as_ref().is_none_or(|b| o.cost < b.cost) {
                    best = Some(o);
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    match best {
        Some(mut b) => {
            b.restarts_used = restarts_used;
            Ok(b)
        }
        None => Err(first_err.expect("at least one restart")),
    }
}

fn starting_points(cfg: &OptimizerConfig, cs: &CoefficientSet) -> Result<Vec<Vec<f64>>> {
    let n = cfg.n;
    let mut starts = vec![Partition::uniform(n).breakpoints().to_vec()];
    if cfg.restarts > 1 {
        let quant = quantile_partition(&f_infinity(cs, 4 * n.max(64), 1e-10)?, n)?;
        let base = quant.breakpoints();
        for k in 1..cfg.restarts {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(k as u64));
            let mut b = base.to_vec();
            for j in 1..n {
                let spacing = 0.5 * (base[j + 1] - base[j - 1]);
                b[j] += cfg.jitter * spacing * rng.gen_range(-0.5..0.5);
            }
            // project back onto ordered breakpoints in [0, 1]
            b[1..n].sort_by(f64::total_cmp);
            for x in &mut b[1..n] {
                *x = x.clamp(0.0, 1.0);
            }
            starts.push(b);
        }
    }
    Ok(starts)
}

/// Golden-section minimization of `g` on `[a, b]` to width `tol`. `current`
/// is the present point with its value; it is returned unless a strictly
/// better point is found.
fn golden<G>(g: G, mut a: f64, mut b: f64, tol: f64, current: (f64, f64)) -> Result<(f64, f64)>
where
    G: Fn(f64) -> Result<f64>,
{
    let mut best = current;
    if !(b > a) {
        return Ok(best);
    }
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = g(c)?;
    let mut fd = g(d)?;
    for (x, f) in [(c, fc), (d, fd)] {
        if f < best.1 {
            best = (x, f);
        }
    }
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = g(c)?;
            if fc < best.1 {
                best = (c, fc);
            }
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = g(d)?;
            if fd < best.1 {
                best = (d, fd);
            }
        }
    }
    Ok(best)
}

fn descend(pb: &Problem, cfg: &OptimizerConfig, mut x: Vec<f64>, allow_empty: bool, restart: usize) -> Result<Optimum> {
    let n = pb.n;
    let delta = if allow_empty { 0.0 } else { 1e-9 };
    if !allow_empty {
        // separate coincident starting breakpoints
        for j in 1..=n {
            if x[j] - x[j - 1] < delta {
                x[j] = (x[j - 1] + delta).min(1.0);
            }
        }
        for j in (1..n).rev() {
            if x[j + 1] - x[j] < delta {
                x[j] = x[j + 1] - delta;
            }
        }
    }
    let mut terms: Vec<(f64, f64)> = (0..n).map(|j| pb.term(x[j], x[j + 1])).collect::<Result<_>>()?;
    let total = |t: &[(f64, f64)]| t.iter().map(|v| v.0).sum::<f64>();
    let mut cost_log = vec![total(&terms)];
    let omega = cfg.omega_for(n);
    let line_tol = 0.25 * cfg.step_tol;
    let mut converged = n == 1;
    let mut sweeps = 0;

    while !converged && sweeps < cfg.max_iters {
        sweeps += 1;
        let mut max_move: f64 = 0.0;
        for j in 1..n {
            let (left, right) = (x[j - 1], x[j + 1]);
            let pair = |xj: f64| -> Result<((f64, f64), (f64, f64))> { Ok((pb.term(left, xj)?, pb.term(xj, right)?)) };
            let g = |xj: f64| -> Result<f64> {
                let (a, b) = pair(xj)?;
                Ok(a.0 + b.0)
            };
            let old = (x[j], terms[j - 1].0 + terms[j].0);
            let (lo, hi) = (left + delta, right - delta);
            let (star, f_star) = golden(g, lo, hi, line_tol, old)?;
            let mut target = (star, f_star);
            if omega > 1.0 && star != old.0 {
                let over = (old.0 + omega * (star - old.0)).clamp(lo, hi);
                let f_over = g(over)?;
                if f_over <= old.1 {
                    target = (over, f_over);
                }
            }
            if target.1 < old.1 {
                max_move = max_move.max((target.0 - old.0).abs());
                x[j] = target.0;
                let (a, b) = pair(x[j])?;
                terms[j - 1] = a;
                terms[j] = b;
            }
        }
        cost_log.push(total(&terms));
        if max_move < cfg.step_tol {
            converged = true;
        }
    }

    let cost = total(&terms);
    Ok(Optimum {
        partition: Partition::new(x)?,
        cost,
        iterations: sweeps,
        restarts_used: 1,
        per_interval_lambdas: terms.iter().map(|t| t.1).collect(),
        converged,
        cost_log,
        restart,
    })
}

/// Exhaustive search on the uniform grid `{i / grid}` for `n <= 3`.
/// Coincident breakpoints are only tried when `φ(0)` is finite.
pub fn brute_force(n: usize, grid: usize, cs: &CoefficientSet, phi: &ConvexFn, rel_tol: f64) -> Result<Optimum> {
    if !(1..=3).contains(&n) {
        return Err(Error::InvalidInput(format!("brute force supports n in 1..=3, got {n}")));
    }
    if !(2..=400).contains(&grid) {
        return Err(Error::InvalidInput(format!("grid must lie in 2..=400, got {grid}")));
    }
    let pb = Problem { n, cs, phi, rel_tol };
    let node = |i: usize| if i == grid { 1.0 } else { i as f64 / grid as f64 };
    let finish = |b: Vec<f64>, terms: Vec<(f64, f64)>| -> Result<Optimum> {
        let cost = terms.iter().map(|t| t.0).sum();
        Ok(Optimum {
            partition: Partition::new(b)?,
            cost,
            iterations: 0,
            restarts_used: 1,
            per_interval_lambdas: terms.iter().map(|t| t.1).collect(),
            converged: true,
            cost_log: vec![cost],
            restart: 0,
        })
    };
    match n {
        1 => finish(vec![0.0, 1.0], vec![pb.term(0.0, 1.0)?]),
        2 => {
            let rows: Vec<(usize, Term, Term)> = (1..grid)
                .into_par_iter()
                .map(|i| Ok((i, pb.term(0.0, node(i))?, pb.term(node(i), 1.0)?)))
                .collect::<Result<_>>()?;
            let best = rows
                .into_iter()
                .min_by(|a, b| (a.1 .0 + a.2 .0).total_cmp(&(b.1 .0 + b.2 .0)).then(a.0.cmp(&b.0)))
                .expect("grid >= 2");
            finish(vec![0.0, node(best.0), 1.0], vec![best.1, best.2])
        }
        _ => {
            // table[i][j] = term on (node(i), node(j)) for i <= j
            let table: Vec<Vec<(f64, f64)>> = (0..=grid)
                .into_par_iter()
                .map(|i| {
                    (i..=grid)
                        .map(|j| pb.term(node(i), node(j)))
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<_>>()?;
            let t = |i: usize, j: usize| table[i][j - i];
            let allow_equal = phi.value_at_zero().is_finite();
            let mut best: Option<(f64, usize, usize)> = None;
            for i in 1..grid {
                for j in i..grid {
                    if j == i && !allow_equal {
                        continue;
                    }
                    let c = t(0, i).0 + t(i, j).0 + t(j, grid).0;
                    if best.is_none_or(|b| c < b.0) {
                        best = Some((c, i, j));
                    }
                }
            }
            let (_, i, j) = best.expect("grid >= 3");
            finish(vec![0.0, node(i), node(j), 1.0], vec![t(0, i), t(i, j), t(j, grid)])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::Coefficient;
    use crate::partition::cost_fn;
    use std::f64::consts::PI;

    fn laplacian() -> CoefficientSet {
        CoefficientSet::constant(1.0, 0.0, 1.0, 1.0)
    }

    fn square() -> ConvexFn {
        ConvexFn::power(1.0).unwrap()
    }

    #[test]
    fn golden_finds_parabola_minimum() {
        let (x, f) = golden(|x| Ok((x - 0.3) * (x - 0.3)), 0.0, 1.0, 1e-9, (0.9, 0.36)).unwrap();
        assert!((x - 0.3).abs() < 1e-8);
        assert!(f < 1e-16);
        let (x, _) = golden(Ok, 0.2, 0.2, 1e-9, (0.2, 0.2)).unwrap();
        assert_eq!(x, 0.2);
    }

    #[test]
    fn uniform_is_optimal_for_constants() {
        for n in [2, 5] {
            let mut cfg = OptimizerConfig::new(n, 7);
            cfg.restarts = 2;
            let o = optimize(&cfg, &laplacian(), &square()).unwrap();
            assert!(o.converged);
            assert!((o.cost - 1.0 / (PI * PI)).abs() < 1e-9, "{o:?}");
            for (j, b) in o.partition.breakpoints().iter().enumerate() {
                assert!((b - j as f64 / n as f64).abs() < 1e-4);
            }
        }
    }

    #[test]
    fn single_interval() {
        let mut cfg = OptimizerConfig::new(1, 0);
        cfg.rel_tol = 1e-9;
        let o = optimize(&cfg, &laplacian(), &square()).unwrap();
        assert_eq!(o.partition.breakpoints(), &[0.0, 1.0]);
        let b = brute_force(1, 10, &laplacian(), &square(), 1e-9).unwrap();
        assert!((b.cost - 1.0 / (PI * PI)).abs() < 1e-9);
        assert!((o.cost - b.cost).abs() < 1e-12);
    }

    #[test]
    fn brute_force_examples() {
        let b = brute_force(2, 200, &laplacian(), &square(), 1e-9).unwrap();
        assert_eq!(b.partition.breakpoints()[1], 0.5);
        let b = brute_force(3, 120, &laplacian(), &square(), 1e-8).unwrap();
        assert_eq!(b.partition.breakpoints()[1], 40.0 / 120.0);
        assert_eq!(b.partition.breakpoints()[2], 80.0 / 120.0);
        assert!(brute_force(4, 10, &laplacian(), &square(), 1e-8).is_err());
        assert!(brute_force(2, 401, &laplacian(), &square(), 1e-8).is_err());
    }

    #[test]
    fn agrees_with_brute_force_on_varying_weight() {
        let cs = CoefficientSet::from_exprs("1", "0", "1 + x", 2.0).unwrap();
        for n in [2, 3] {
            let mut cfg = OptimizerConfig::new(n, 3);
            cfg.restarts = 2;
            let o = optimize(&cfg, &cs, &square()).unwrap();
            let b = brute_force(n, 100, &cs, &square(), 1e-8).unwrap();
            assert!(o.cost <= b.cost + 1e-9);
            assert!((o.cost - b.cost).abs() < 1e-4);
            for (x, y) in o.partition.breakpoints().iter().zip(b.partition.breakpoints()) {
                assert!((x - y).abs() <= 2.0 / 100.0);
            }
        }
    }

    #[test]
    fn descent_is_monotone_and_feasible() {
        let cs = CoefficientSet::new(
            Coefficient::constant(1.0),
            Coefficient::constant(0.0),
            Coefficient::table(vec![(0.0, 0.5, 4.0), (0.5, 1.0, 1.0)]).unwrap(),
            4.0,
        );
        let mut cfg = OptimizerConfig::new(12, 11);
        cfg.restarts = 3;
        cfg.rel_tol = 1e-7;
        let o = optimize(&cfg, &cs, &square()).unwrap();
        assert!(o.converged);
        assert_eq!(o.restarts_used, 3);
        for w in o.cost_log.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-14), "{:?}", o.cost_log);
        }
        assert!(o.partition.min_length() > 1e-9);
        let direct = cost_fn(&o.partition, &cs, &square(), 1e-7).unwrap();
        assert!((direct - o.cost).abs() < 1e-6 * o.cost);
        // about two thirds of the intervals sit where w = 4
        let left = o
            .partition
            .breakpoints()
            .iter()
            .filter(|&&b| b > 0.0 && b < 0.5)
            .count();
        assert!((7..=9).contains(&left), "{:?}", o.partition);
    }

    #[test]
    fn deterministic_for_a_seed() {
        let cs = CoefficientSet::from_exprs("1", "0", "1 + x", 2.0).unwrap();
        let mut cfg = OptimizerConfig::new(6, 42);
        cfg.restarts = 3;
        let a = optimize(&cfg, &cs, &square()).unwrap();
        let b = optimize(&cfg, &cs, &square()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn empty_intervals_only_when_allowed() {
        // φ(0) = +∞ forces distinct breakpoints even if empties are requested
        let mut cfg = OptimizerConfig::new(4, 1);
        cfg.allow_empty = true;
        cfg.restarts = 1;
        let inv = ConvexFn::power_inverse(1.0).unwrap();
        let o = optimize(&cfg, &laplacian(), &inv).unwrap();
        assert!(o.partition.min_length() > 1e-9);
        assert!(o.cost.is_finite());
    }

    #[test]
    fn config_validation() {
        let mut c = OptimizerConfig::new(3, 0);
        c.restarts = 0;
        assert!(optimize(&c, &laplacian(), &square()).is_err());
        let mut c = OptimizerConfig::new(3, 0);
        c.omega = Some(2.0);
        assert!(c.validate().is_err());
        assert!(OptimizerConfig::new(0, 0).validate().is_err());
    }
}
