//! First Dirichlet eigenvalue of `-(p u')' + q u = λ w u` on a subinterval
//! of `[0, 1]`, plus the closed form for constant coefficients and the
//! global/local eigenvalue bounds.
//!
//! The discretization is vertex-centred: `m` interior nodes at spacing
//! `h = L / (m + 1)`, flux coefficients from the harmonic mean of `p` on
//! each cell, and a lumped (diagonal) mass and potential from the means of
//! `w` and `q` over the dual cell around each node. The resulting pencil is
//! symmetrized with the diagonal mass into a symmetric tridiagonal matrix
//! whose smallest eigenvalue is isolated by Sturm-sequence bisection.
//! Grids are nested (`m_k + 1 = (m_0 + 1) 2^k`) and one level of Richardson
//! extrapolation removes the `h^2` term; refinement stops once two
//! successive extrapolated values agree to `rel_tol`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::coefficients::CoefficientSet;
use crate::error::{Error, Result};

/// Intervals shorter than this are treated as empty.
pub const EMPTY_LENGTH: f64 = 1e-12;

/// Absolute tolerance used for the mean values inside the local bounds.
const BOUND_QUAD_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "interval must satisfy 0 <= lo <= hi <= 1, got ({lo}, {hi})"
            )));
        }
        Ok(Interval { lo, hi })
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_empty(&self) -> bool {
        self.length() < EMPTY_LENGTH
    }

    fn non_empty(&self) -> Result<f64> {
        if self.is_empty() {
            Err(Error::InvalidInput(format!(
                "interval ({}, {}) is empty",
                self.lo, self.hi
            )))
        } else {
            Ok(self.length())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenResult {
    /// `f64::INFINITY` for an empty interval.
    pub lambda: f64,
    pub error_estimate: f64,
    /// Interior nodes of the finest grid used.
    pub grid_size: usize,
    /// `(x, u(x))` on the finest grid including both endpoints, scaled to
    /// unit maximum.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eigenfunction: Option<Vec<(f64, f64)>>,
}

impl EigenResult {
    fn empty() -> Self {
        EigenResult {
            lambda: f64::INFINITY,
            error_estimate: 0.0,
            grid_size: 0,
            eigenfunction: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub rel_tol: f64,
    pub initial_nodes: usize,
    pub max_nodes: usize,
    pub eigenfunction: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            rel_tol: 1e-9,
            initial_nodes: 32,
            max_nodes: 1 << 17,
            eigenfunction: false,
        }
    }
}

impl SolverOptions {
    pub fn with_rel_tol(rel_tol: f64) -> Self {
        SolverOptions {
            rel_tol,
            ..Default::default()
        }
    }
}

/// `λ(J)` to relative tolerance `rel_tol`.
pub fn first_eigenvalue(j: Interval, cs: &CoefficientSet, rel_tol: f64) -> Result<EigenResult> {
    first_eigenvalue_with(j, cs, &SolverOptions::with_rel_tol(rel_tol))
}

pub fn first_eigenvalue_with(j: Interval, cs: &CoefficientSet, opts: &SolverOptions) -> Result<EigenResult> {
    if !(opts.rel_tol > 0.0 && opts.rel_tol < 1.0) {
        return Err(Error::InvalidInput(format!(
            "rel_tol must lie in (0, 1), got {}",
            opts.rel_tol
        )));
    }
    if j.is_empty() {
        return Ok(EigenResult::empty());
    }
    let base = base_mesh(j, &cs.knots(), opts.initial_nodes.max(2) + 1);
    let base_cells: usize = base.iter().map(|seg| seg.2).sum();
    let mut level = 0u32;
    // Each level is bisected well below the requested tolerance so that
    // bisection error does not pollute the extrapolation.
    let bisect_tol = (1e-3 * opts.rel_tol).max(4.0 * f64::EPSILON);
    let mut raw: Vec<f64> = Vec::new();
    let mut extrapolated: Vec<f64> = Vec::new();
    let mut last_change = f64::INFINITY;
    loop {
        let cells = base_cells << level;
        let m = cells - 1;
        let pencil = Pencil::assemble(j, cs, &refine(&base, level))?;
        // Second-order convergence: the next raw increment is about a
        // quarter of the previous one.
        let guess = match raw.len() {
            0 => None,
            1 => {
                let spread = (PI / cells as f64).powi(2) * raw[0].abs();
                Some((raw[0] + 0.5 * spread, spread))
            }
            k => {
                let step = raw[k - 1] - raw[k - 2];
                Some((raw[k - 1] + 0.25 * step, 0.5 * step.abs()))
            }
        };
        let lam = pencil.smallest_eigenvalue(guess, bisect_tol);
        raw.push(lam);
        if raw.len() >= 2 {
            let k = raw.len();
            extrapolated.push((4.0 * raw[k - 1] - raw[k - 2]) / 3.0);
        }
        if extrapolated.len() >= 2 {
            let k = extrapolated.len();
            let (prev, cur) = (extrapolated[k - 2], extrapolated[k - 1]);
            last_change = (cur - prev).abs();
            if last_change <= opts.rel_tol * cur.abs() {
                let eigenfunction = opts.eigenfunction.then(|| pencil.eigenfunction(lam));
                return Ok(EigenResult {
                    lambda: cur,
                    error_estimate: last_change,
                    grid_size: m,
                    eigenfunction,
                });
            }
        }
        if 2 * cells - 1 > opts.max_nodes {
            return Err(Error::RefinementBudget {
                grid_size: m,
                last_change,
            });
        }
        level += 1;
    }
}

/// Knots closer than this fraction of the interval length to an endpoint or
/// to the previous knot are not resolved by the mesh.
const KNOT_MERGE: f64 = 1e-6;

/// Segments `(lo, hi, cells)` of the coarsest mesh: `J` split at the
/// coefficient knots, with about `cells` cells shared in proportion to
/// length.
fn base_mesh(j: Interval, knots: &[f64], cells: usize) -> Vec<(f64, f64, usize)> {
    let len = j.length();
    let gap = KNOT_MERGE * len;
    let mut edges = vec![j.lo];
    for &k in knots {
        if k > j.lo + gap && k < j.hi - gap && k > edges[edges.len() - 1] + gap {
            edges.push(k);
        }
    }
    edges.push(j.hi);
    if edges.len() == 2 {
        return vec![(j.lo, j.hi, cells)];
    }
    edges
        .windows(2)
        .map(|e| {
            let share = (cells as f64 * (e[1] - e[0]) / len).round() as usize;
            (e[0], e[1], share.max(1))
        })
        .collect()
}

/// Mesh nodes after splitting every base cell into `2^level` equal cells.
fn refine(base: &[(f64, f64, usize)], level: u32) -> Vec<f64> {
    let mut nodes = vec![base[0].0];
    for &(lo, hi, c) in base {
        let c = c << level;
        for i in 1..c {
            nodes.push(lo + (hi - lo) * i as f64 / c as f64);
        }
        nodes.push(hi);
    }
    nodes
}

/// Symmetric tridiagonal matrix `W^{-1/2} K W^{-1/2}` on one grid.
struct Pencil {
    span: Interval,
    nodes: Vec<f64>,
    diag: Vec<f64>,
    /// `off[i]` couples nodes `i` and `i + 1`.
    off: Vec<f64>,
    off_sq: Vec<f64>,
    /// `sqrt(W_i)`, to map eigenvectors back.
    sqrt_mass: Vec<f64>,
}

impl Pencil {
    /// Lumped-mass linear elements on `nodes` (both endpoints included).
    fn assemble(j: Interval, cs: &CoefficientSet, nodes: &[f64]) -> Result<Self> {
        let m = nodes.len() - 2;
        let widths: Vec<f64> = nodes.windows(2).map(|e| e[1] - e[0]).collect();

        // flux a / h on each of the m + 1 cells
        let mut flux = Vec::with_capacity(m + 1);
        let p_const = cs.p.constant_value();
        for (i, e) in nodes.windows(2).enumerate() {
            let a = match p_const {
                Some(p) => p,
                None => cs.p.cell_harmonic_mean(e[0], e[1])?,
            };
            flux.push(a / widths[i]);
        }
        if flux.iter().any(|&k| !(k > 0.0 && k.is_finite())) {
            return Err(Error::InvalidInput("p must be positive and finite".into()));
        }
        let mut mass = Vec::with_capacity(m);
        let mut diag = Vec::with_capacity(m);
        let (w_const, q_const) = (cs.w.constant_value(), cs.q.constant_value());
        for i in 1..=m {
            let (a, b) = (nodes[i] - 0.5 * widths[i - 1], nodes[i] + 0.5 * widths[i]);
            let w = match w_const {
                Some(w) => w,
                None => cs.w.cell_mean(a, b)?,
            };
            let q = match q_const {
                Some(q) => q,
                None => cs.q.cell_mean(a, b)?,
            };
            if !(w > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "w must be positive, got {w} near x = {}",
                    nodes[i]
                )));
            }
            let dual = b - a;
            mass.push(w * dual);
            diag.push((flux[i - 1] + flux[i] + q * dual) / (w * dual));
        }
        let sqrt_mass: Vec<f64> = mass.iter().map(|w| w.sqrt()).collect();
        let off: Vec<f64> = (0..m.saturating_sub(1))
            .map(|i| -flux[i + 1] / (sqrt_mass[i] * sqrt_mass[i + 1]))
            .collect();
        let off_sq = off.iter().map(|e| e * e).collect();
        Ok(Pencil {
            span: j,
            nodes: nodes.to_vec(),
            diag,
            off,
            off_sq,
            sqrt_mass,
        })
    }

    /// Number of eigenvalues strictly below `sigma`.
    fn sturm_count(&self, sigma: f64) -> usize {
        let mut count = 0;
        let mut d = self.diag[0] - sigma;
        for i in 0..self.diag.len() {
            if i > 0 {
                d = self.diag[i] - sigma - self.off_sq[i - 1] / d;
            }
            if d == 0.0 {
                d = -f64::MIN_POSITIVE;
            }
            count += (d < 0.0) as usize;
        }
        count
    }

    fn gershgorin_lower(&self) -> f64 {
        let n = self.diag.len();
        (0..n)
            .map(|i| {
                let left = if i > 0 { self.off[i - 1].abs() } else { 0.0 };
                let right = if i + 1 < n { self.off[i].abs() } else { 0.0 };
                self.diag[i] - left - right
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Rayleigh quotient of a half-sine vector; an upper bound for the
    /// smallest eigenvalue.
    fn rayleigh_upper(&self) -> f64 {
        let n = self.diag.len();
        let len = self.span.length();
        let v: Vec<f64> = (1..=n)
            .map(|i| (PI * (self.nodes[i] - self.span.lo) / len).sin() * self.sqrt_mass[i - 1])
            .collect();
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..n {
            let mut bv = self.diag[i] * v[i];
            if i > 0 {
                bv += self.off[i - 1] * v[i - 1];
            }
            if i + 1 < n {
                bv += self.off[i] * v[i + 1];
            }
            num += v[i] * bv;
            den += v[i] * v[i];
        }
        num / den
    }

    /// Bisection to relative width `rel_width`, starting from a
    /// `(centre, spread)` guess when one is available.
    fn smallest_eigenvalue(&self, guess: Option<(f64, f64)>, rel_width: f64) -> f64 {
        let (mut lo, mut hi) = (f64::NAN, f64::NAN);
        if let Some((centre, spread)) = guess {
            let mut width = spread.max(1e-12 * centre.abs()) * 2.0;
            for _ in 0..8 {
                let (a, b) = (centre - width, centre + width);
                if self.sturm_count(a) == 0 && self.sturm_count(b) >= 1 {
                    lo = a;
                    hi = b;
                    break;
                }
                width *= 4.0;
            }
        }
        if lo.is_nan() {
            lo = self.gershgorin_lower();
            hi = self.rayleigh_upper() * (1.0 + 1e-12) + f64::MIN_POSITIVE;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi || hi - lo <= rel_width * lo.abs().max(hi.abs()) {
                break;
            }
            if self.sturm_count(mid) >= 1 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Inverse iteration just below `lambda`; returns nodal values with the
    /// Dirichlet endpoints appended.
    fn eigenfunction(&self, lambda: f64) -> Vec<(f64, f64)> {
        let n = self.diag.len();
        let shift = lambda - 1e-6 * lambda.abs().max(1.0);
        let mut y = vec![1.0; n];
        for _ in 0..4 {
            y = self.solve_shifted(shift, &y);
            let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            y.iter_mut().for_each(|v| *v /= norm);
        }
        let mut u: Vec<f64> = y.iter().zip(&self.sqrt_mass).map(|(v, s)| v / s).collect();
        let peak = u
            .iter()
            .copied()
            .fold(0.0f64, |a, b| if b.abs() > a.abs() { b } else { a });
        u.iter_mut().for_each(|v| *v = (*v / peak).max(0.0));
        let mut out = Vec::with_capacity(n + 2);
        out.push((self.span.lo, 0.0));
        for (i, v) in u.into_iter().enumerate() {
            out.push((self.nodes[i + 1], v));
        }
        out.push((self.span.hi, 0.0));
        out
    }

    /// Thomas algorithm for `(B - shift I) x = rhs`.
    fn solve_shifted(&self, shift: f64, rhs: &[f64]) -> Vec<f64> {
        let n = self.diag.len();
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut denom = self.diag[0] - shift;
        c[0] = if n > 1 { self.off[0] / denom } else { 0.0 };
        d[0] = rhs[0] / denom;
        for i in 1..n {
            denom = self.diag[i] - shift - self.off[i - 1] * c[i - 1];
            c[i] = if i + 1 < n { self.off[i] / denom } else { 0.0 };
            d[i] = (rhs[i] - self.off[i - 1] * d[i - 1]) / denom;
        }
        let mut x = vec![0.0; n];
        x[n - 1] = d[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = d[i] - c[i] * x[i + 1];
        }
        x
    }
}

/// `π² / (s² L²) + q / w` with `s² = w / p`, the exact eigenvalue for
/// constant coefficients (the potential enters divided by the weight).
pub fn closed_form_eigenvalue(j: Interval, p: f64, q: f64, w: f64) -> Result<f64> {
    let len = j.non_empty()?;
    Ok(PI * PI * p / (w * len * len) + q / w)
}

/// `(π² / (β² L²), β² π² / L² + β²)`.
pub fn global_bounds(j: Interval, beta: f64) -> Result<(f64, f64)> {
    let len = j.non_empty()?;
    let b2 = beta * beta;
    let base = PI * PI / (len * len);
    Ok((base / b2, b2 * base + b2))
}

/// Upper bound from the change of variables that flattens `w`.
pub fn local_upper_bound(j: Interval, cs: &CoefficientSet) -> Result<f64> {
    let len = j.non_empty()?;
    let (a, b) = (j.lo, j.hi);
    let mean = |f: &dyn Fn(f64) -> Result<f64>| cs.mean(f, a, b, BOUND_QUAD_TOL);
    let mean_w = mean(&|x| cs.w.eval(x))?;
    let pw2 = |x: f64| -> Result<f64> {
        let w = cs.w.eval(x)?;
        Ok(cs.p.eval(x)? * w * w)
    };
    let mean_pw2 = mean(&pw2)?;
    let ratio = mean_pw2 / mean_w;
    let deviation = mean(&|x| Ok((pw2(x)? - ratio * cs.w.eval(x)?).abs()))?;
    let beta2 = cs.beta * cs.beta;
    Ok(PI * PI / (len * len) * (mean_pw2 + 2.0 * deviation) / mean_w.powi(3) + beta2)
}

/// Lower bound from the change of variables that flattens `1/p`.
pub fn local_lower_bound(j: Interval, cs: &CoefficientSet) -> Result<f64> {
    let len = j.non_empty()?;
    let (a, b) = (j.lo, j.hi);
    let mean = |f: &dyn Fn(f64) -> Result<f64>| cs.mean(f, a, b, BOUND_QUAD_TOL);
    let mean_w = mean(&|x| cs.w.eval(x))?;
    let mean_inv_p = mean(&|x| Ok(1.0 / cs.p.eval(x)?))?;
    let ratio = mean_w / mean_inv_p;
    let deviation = mean(&|x| Ok((cs.w.eval(x)? - ratio / cs.p.eval(x)?).abs()))?;
    Ok(PI * PI / (mean_inv_p * (mean_w + PI * PI * deviation) * len * len))
}

/// `λ(J) L(J)²` on `J = (x0 - r, x0 + r)` for each radius.
pub fn shrinkage_limit_check(x0: f64, cs: &CoefficientSet, radii: &[f64], rel_tol: f64) -> Result<Vec<(f64, f64)>> {
    if !(0.0 < x0 && x0 < 1.0) {
        return Err(Error::InvalidInput(format!("x0 must lie in (0, 1), got {x0}")));
    }
    if radii.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidInput("radii must be strictly decreasing".into()));
    }
    radii
        .iter()
        .map(|&r| {
            let j = Interval::new(x0 - r, x0 + r)?;
            let res = first_eigenvalue(j, cs, rel_tol)?;
            Ok((r, res.lambda * j.length() * j.length()))
        })
        .collect()
}
