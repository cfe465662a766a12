//! Coefficient functions `p`, `q`, `w` of the Sturm-Liouville operator and
//! the standing bounds they must satisfy.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::quadrature;

/// Default number of uniform sample points used by [`CoefficientSet::validate`].
pub const DEFAULT_VALIDATION_POINTS: usize = 10_000;

/// Piecewise-constant function on `[0, 1]` with half-open cells `[lo, hi)`;
/// the last cell is closed at 1.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseTable {
    cells: Vec<(f64, f64, f64)>,
}

impl PiecewiseTable {
    pub fn new(cells: Vec<(f64, f64, f64)>) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::InvalidInput("piecewise table has no cells".into()));
        }
        let tiles = 1e-12;
        if cells[0].0.abs() > tiles || (cells[cells.len() - 1].1 - 1.0).abs() > tiles {
            return Err(Error::InvalidInput("piecewise table must cover [0, 1]".into()));
        }
        for (i, &(lo, hi, v)) in cells.iter().enumerate() {
            if !(lo < hi) || !v.is_finite() {
                return Err(Error::InvalidInput(format!("bad table cell [{lo}, {hi}) -> {v}")));
            }
            if i > 0 && (cells[i - 1].1 - lo).abs() > tiles {
                return Err(Error::InvalidInput(format!("table cells not contiguous at {lo}")));
            }
        }
        Ok(PiecewiseTable { cells })
    }

    pub fn cells(&self) -> &[(f64, f64, f64)] {
        &self.cells
    }

    fn index(&self, x: f64) -> usize {
        // first cell whose upper edge is > x; points at or past 1 fall in the last cell
        let i = self.cells.partition_point(|c| c.1 <= x);
        i.min(self.cells.len() - 1)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.cells[self.index(x)].2
    }

    /// Interior knots (cell edges strictly inside (0, 1)).
    pub fn knots(&self) -> Vec<f64> {
        self.cells[1..].iter().map(|c| c.0).collect()
    }

    /// Exact integral of `g(value)` over `[a, b]`.
    pub fn integrate_map(&self, a: f64, b: f64, g: impl Fn(f64) -> f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let mut total = 0.0;
        for &(lo, hi, v) in &self.cells[self.index(a)..] {
            if lo >= b {
                break;
            }
            let len = hi.min(b) - lo.max(a);
            if len > 0.0 {
                total += g(v) * len;
            }
        }
        total
    }
}

/// A single coefficient: either a closed-form expression in `x` or a
/// piecewise-constant table.
#[derive(Debug, Clone, PartialEq)]
pub enum Coefficient {
    Expr(Expr),
    Table(PiecewiseTable),
}

impl Coefficient {
    pub fn parse(src: &str) -> Result<Self> {
        Ok(Coefficient::Expr(Expr::parse(src)?))
    }

    pub fn constant(v: f64) -> Self {
        Coefficient::Expr(Expr::parse(&format!("{v:?}")).expect("float literal parses"))
    }

    pub fn table(cells: Vec<(f64, f64, f64)>) -> Result<Self> {
        Ok(Coefficient::Table(PiecewiseTable::new(cells)?))
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        match self {
            Coefficient::Expr(e) => e.eval(x),
            Coefficient::Table(t) => Ok(t.eval(x)),
        }
    }

    pub fn constant_value(&self) -> Option<f64> {
        match self {
            Coefficient::Expr(e) => e.constant_value(),
            Coefficient::Table(t) if t.cells.len() == 1 => Some(t.cells[0].2),
            Coefficient::Table(_) => None,
        }
    }

    /// True when the coefficient is constant on each cell of [`Self::knots`].
    pub fn is_piecewise_constant(&self) -> bool {
        matches!(self, Coefficient::Table(_)) || self.constant_value().is_some()
    }

    pub fn knots(&self) -> Vec<f64> {
        match self {
            Coefficient::Expr(_) => Vec::new(),
            Coefficient::Table(t) => t.knots(),
        }
    }

    /// Mean of the coefficient over `[a, b]`, exact for tables and sampled at
    /// the midpoint for expressions. Used for grid cell averages.
    pub(crate) fn cell_mean(&self, a: f64, b: f64) -> Result<f64> {
        match self {
            Coefficient::Expr(e) => e.eval(0.5 * (a + b)),
            Coefficient::Table(t) => {
                if b > a {
                    Ok(t.integrate_map(a, b, |v| v) / (b - a))
                } else {
                    Ok(t.eval(a))
                }
            }
        }
    }

    /// Harmonic mean over `[a, b]`; exact for tables, midpoint value for
    /// expressions.
    pub(crate) fn cell_harmonic_mean(&self, a: f64, b: f64) -> Result<f64> {
        match self {
            Coefficient::Expr(e) => e.eval(0.5 * (a + b)),
            Coefficient::Table(t) => {
                if b > a {
                    Ok((b - a) / t.integrate_map(a, b, |v| 1.0 / v))
                } else {
                    Ok(t.eval(a))
                }
            }
        }
    }
}

/// Which standing bound a sample violated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    PLower,
    PUpper,
    WLower,
    WUpper,
    QLower,
    QUpper,
    SLower,
    SUpper,
    Evaluation,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub bound: Bound,
    /// Worst offending sample point.
    pub x: f64,
    pub value: f64,
    pub limit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub p_ok: bool,
    pub q_ok: bool,
    pub w_ok: bool,
    pub s_ok: bool,
    pub s_min: f64,
    pub s_max: f64,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn summary(&self) -> String {
        self.violations
            .iter()
            .map(|v| format!("{:?}: value {} vs limit {} at x = {}", v.bound, v.value, v.limit, v.x))
            .collect::<Vec<_>>()
            .join("; ")
    }
}

/// The triple `(p, q, w)` with bound constant `beta`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSet {
    pub p: Coefficient,
    pub q: Coefficient,
    pub w: Coefficient,
    pub beta: f64,
    /// Lifts the `q >= 0` requirement (and only that).
    pub relax_q: bool,
}

impl CoefficientSet {
    pub fn new(p: Coefficient, q: Coefficient, w: Coefficient, beta: f64) -> Self {
        CoefficientSet {
            p,
            q,
            w,
            beta,
            relax_q: false,
        }
    }

    pub fn constant(p: f64, q: f64, w: f64, beta: f64) -> Self {
        Self::new(
            Coefficient::constant(p),
            Coefficient::constant(q),
            Coefficient::constant(w),
            beta,
        )
    }

    /// Parses three expression strings.
    pub fn from_exprs(p: &str, q: &str, w: &str, beta: f64) -> Result<Self> {
        Ok(Self::new(
            Coefficient::parse(p)?,
            Coefficient::parse(q)?,
            Coefficient::parse(w)?,
            beta,
        ))
    }

    pub fn with_relaxed_q(mut self, relax: bool) -> Self {
        self.relax_q = relax;
        self
    }

    pub fn eval_pqw(&self, x: f64) -> Result<(f64, f64, f64)> {
        Ok((self.p.eval(x)?, self.q.eval(x)?, self.w.eval(x)?))
    }

    /// `s(x) = sqrt(w(x) / p(x))`.
    pub fn s_of(&self, x: f64) -> Result<f64> {
        let s = (self.w.eval(x)? / self.p.eval(x)?).sqrt();
        if s.is_finite() {
            Ok(s)
        } else {
            Err(Error::NonFinite { x, value: s })
        }
    }

    /// Union of the interior knots of `p`, `q` and `w`, sorted.
    pub fn knots(&self) -> Vec<f64> {
        let mut k: Vec<f64> = [&self.p, &self.q, &self.w].iter().flat_map(|c| c.knots()).collect();
        k.sort_by(f64::total_cmp);
        k.dedup();
        k
    }

    /// True when `s` is piecewise constant between [`Self::knots`].
    pub fn s_is_piecewise_constant(&self) -> bool {
        self.p.is_piecewise_constant() && self.w.is_piecewise_constant()
    }

    /// `∫_a^b s(x) dx` to absolute tolerance `tol`; exact cell by cell when
    /// `s` is piecewise constant.
    pub fn integrate_s(&self, a: f64, b: f64, tol: f64) -> Result<f64> {
        if !(0.0 <= a && a <= b && b <= 1.0) {
            return Err(Error::InvalidInput(format!("need 0 <= a <= b <= 1, got [{a}, {b}]")));
        }
        if self.s_is_piecewise_constant() {
            let mut edges = vec![a];
            edges.extend(self.knots().into_iter().filter(|&k| k > a && k < b));
            edges.push(b);
            let mut total = 0.0;
            for e in edges.windows(2) {
                total += self.s_of(0.5 * (e[0] + e[1]))? * (e[1] - e[0]);
            }
            return Ok(total);
        }
        self.integrate(|x| self.s_of(x), a, b, tol)
    }

    /// Adaptive integral of an arbitrary function of `x` over `[a, b]`,
    /// split at the coefficient knots.
    pub fn integrate<F>(&self, f: F, a: f64, b: f64, tol: f64) -> Result<f64>
    where
        F: Fn(f64) -> Result<f64>,
    {
        quadrature::integrate_split(f, a, b, &self.knots(), tol)
    }

    /// Mean value of `f` over `[a, b]`.
    pub fn mean<F>(&self, f: F, a: f64, b: f64, tol: f64) -> Result<f64>
    where
        F: Fn(f64) -> Result<f64>,
    {
        Ok(self.integrate(f, a, b, tol * (b - a))? / (b - a))
    }

    pub fn validate(&self) -> ValidationReport {
        self.validate_with(DEFAULT_VALIDATION_POINTS)
    }

    /// Checks the standing bounds on `points` uniform samples of `[0, 1]`.
    pub fn validate_with(&self, points: usize) -> ValidationReport {
        let beta = self.beta;
        let lo = 1.0 / beta;
        // (bound, worst x, worst value, limit, excess)
        let mut worst: Vec<(Bound, f64, f64, f64, f64)> = Vec::new();
        let mut note = |bound: Bound, x: f64, value: f64, limit: f64, excess: f64| {
            if excess > 0.0 {
                match worst.iter_mut().find(|w| w.0 == bound) {
                    Some(w) if w.4 >= excess => {}
                    Some(w) => *w = (bound, x, value, limit, excess),
                    None => worst.push((bound, x, value, limit, excess)),
                }
            }
        };
        let (mut s_min, mut s_max) = (f64::INFINITY, f64::NEG_INFINITY);
        let n = points.max(2);
        for i in 0..n {
            let x = i as f64 / (n - 1) as f64;
            let (p, q, w) = match self.eval_pqw(x) {
                Ok(v) => v,
                Err(_) => {
                    note(Bound::Evaluation, x, f64::NAN, f64::NAN, f64::INFINITY);
                    continue;
                }
            };
            note(Bound::PLower, x, p, lo, lo - p);
            note(Bound::PUpper, x, p, beta, p - beta);
            note(Bound::WLower, x, w, lo, lo - w);
            note(Bound::WUpper, x, w, beta, w - beta);
            if !self.relax_q {
                note(Bound::QLower, x, q, 0.0, -q);
            }
            note(Bound::QUpper, x, q, beta, q - beta);
            let s = (w / p).sqrt();
            if s.is_finite() {
                s_min = s_min.min(s);
                s_max = s_max.max(s);
                note(Bound::SLower, x, s, lo, lo - s);
                note(Bound::SUpper, x, s, beta, s - beta);
            }
        }
        let has = |b: &[Bound]| worst.iter().any(|w| b.contains(&w.0));
        ValidationReport {
            p_ok: !has(&[Bound::PLower, Bound::PUpper, Bound::Evaluation]),
            q_ok: !has(&[Bound::QLower, Bound::QUpper, Bound::Evaluation]),
            w_ok: !has(&[Bound::WLower, Bound::WUpper, Bound::Evaluation]),
            s_ok: !has(&[Bound::SLower, Bound::SUpper, Bound::Evaluation]),
            s_min,
            s_max,
            violations: worst
                .into_iter()
                .map(|(bound, x, value, limit, _)| Violation { bound, x, value, limit })
                .collect(),
        }
    }

    /// Validates and turns failures into [`Error::Validation`].
    pub fn ensure_valid(&self) -> Result<()> {
        if !(self.beta.is_finite() && self.beta >= 1.0) {
            return Err(Error::Validation(format!(
                "beta must be finite and >= 1, got {}",
                self.beta
            )));
        }
        let report = self.validate();
        if report.passed() {
            Ok(())
        } else {
            Err(Error::Validation(report.summary()))
        }
    }
}

/// JSON form of one coefficient: an expression string or `{"cells": [[lo, hi, v], ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum CoefficientSpec {
    Expr(String),
    Number(f64),
    Table { cells: Vec<[f64; 3]> },
}

impl CoefficientSpec {
    pub fn build(&self) -> Result<Coefficient> {
        match self {
            CoefficientSpec::Expr(s) => Coefficient::parse(s),
            CoefficientSpec::Number(v) => Ok(Coefficient::constant(*v)),
            CoefficientSpec::Table { cells } => Coefficient::table(cells.iter().map(|c| (c[0], c[1], c[2])).collect()),
        }
    }
}

/// JSON coefficient block `{"p": ..., "q": ..., "w": ..., "beta": number}`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CoefficientsConfig {
    pub p: CoefficientSpec,
    pub q: CoefficientSpec,
    pub w: CoefficientSpec,
    pub beta: f64,
}

impl CoefficientsConfig {
    pub fn build(&self) -> Result<CoefficientSet> {
        Ok(CoefficientSet::new(
            self.p.build()?,
            self.q.build()?,
            self.w.build()?,
            self.beta,
        ))
    }
}
