//! Partitions of the unit interval into `n` ordered, possibly empty
//! intervals, the discrete cost `F_n` and the associated empirical measure.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coefficients::CoefficientSet;
use crate::error::{Error, Result};
use crate::output::{fmt_num, write_csv};
use crate::phi::ConvexFn;
use crate::sl_solver::{first_eigenvalue, Interval};

/// Breakpoints `0 = x_0 <= x_1 <= ... <= x_n = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PartitionJson", into = "PartitionJson")]
pub struct Partition {
    breakpoints: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct PartitionJson {
    breakpoints: Vec<f64>,
}

impl TryFrom<PartitionJson> for Partition {
    type Error = Error;
    fn try_from(j: PartitionJson) -> Result<Self> {
        Partition::new(j.breakpoints)
    }
}

impl From<Partition> for PartitionJson {
    fn from(p: Partition) -> Self {
        PartitionJson {
            breakpoints: p.breakpoints,
        }
    }
}

impl Partition {
    pub fn new(breakpoints: Vec<f64>) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(Error::InvalidInput("a partition needs at least two breakpoints".into()));
        }
        if breakpoints[0] != 0.0 || *breakpoints.last().unwrap() != 1.0 {
            return Err(Error::InvalidInput("breakpoints must start at 0 and end at 1".into()));
        }
        if let Some(w) = breakpoints.windows(2).find(|w| !(w[0] <= w[1])) {
            return Err(Error::InvalidInput(format!(
                "breakpoints must be non-decreasing, found {} then {}",
                w[0], w[1]
            )));
        }
        Ok(Partition { breakpoints })
    }

    /// Builds a partition from its `n - 1` interior breakpoints.
    pub fn from_interior(interior: &[f64]) -> Result<Self> {
        let mut b = Vec::with_capacity(interior.len() + 2);
        b.push(0.0);
        b.extend_from_slice(interior);
        b.push(1.0);
        Self::new(b)
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n >= 1, "uniform partition needs n >= 1");
        let mut b: Vec<f64> = (0..=n).map(|j| j as f64 / n as f64).collect();
        b[n] = 1.0;
        Partition { breakpoints: b }
    }

    pub fn n(&self) -> usize {
        self.breakpoints.len() - 1
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn interior(&self) -> &[f64] {
        &self.breakpoints[1..self.n()]
    }

    pub fn interval(&self, j: usize) -> Interval {
        Interval {
            lo: self.breakpoints[j],
            hi: self.breakpoints[j + 1],
        }
    }

    pub fn intervals(&self) -> impl Iterator<Item = Interval> + '_ {
        self.breakpoints.windows(2).map(|w| Interval { lo: w[0], hi: w[1] })
    }

    pub fn lengths(&self) -> Vec<f64> {
        self.intervals().map(|i| i.length()).collect()
    }

    pub fn min_length(&self) -> f64 {
        self.lengths().into_iter().fold(f64::INFINITY, f64::min)
    }
}

/// One summand of `F_n` together with its eigenvalue:
/// `φ(n / sqrt(λ(I))) / n`, or `φ(0) / n` for an empty interval.
pub fn interval_term(iv: Interval, n: usize, cs: &CoefficientSet, phi: &ConvexFn, rel_tol: f64) -> Result<(f64, f64)> {
    let nf = n as f64;
    if iv.is_empty() {
        return Ok((phi.value_at_zero() / nf, f64::INFINITY));
    }
    let lambda = first_eigenvalue(iv, cs, rel_tol)?.lambda;
    if !(lambda > 0.0) {
        return Err(Error::NonPositiveEigenvalue {
            lo: iv.lo,
            hi: iv.hi,
            lambda,
        });
    }
    Ok((phi.eval_unchecked(nf / lambda.sqrt()) / nf, lambda))
}

/// `F_n(P)` and the eigenvalue of every interval (`+∞` for empty ones).
pub fn cost_with_lambdas(p: &Partition, cs: &CoefficientSet, phi: &ConvexFn, rel_tol: f64) -> Result<(f64, Vec<f64>)> {
    let n = p.n();
    let terms: Vec<(f64, f64)> = (0..n)
        .into_par_iter()
        .map(|j| interval_term(p.interval(j), n, cs, phi, rel_tol))
        .collect::<Result<_>>()?;
    let cost = terms.iter().map(|t| t.0).sum();
    Ok((cost, terms.into_iter().map(|t| t.1).collect()))
}

/// `F_n(P) = (1/n) Σ φ(n / sqrt(λ(I_j)))`.
pub fn cost_fn(p: &Partition, cs: &CoefficientSet, phi: &ConvexFn, rel_tol: f64) -> Result<f64> {
    Ok(cost_with_lambdas(p, cs, phi, rel_tol)?.0)
}

/// Probability measure on `[0, 1]`: piecewise-constant density plus atoms.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasureRepr {
    /// `(lo, hi, height)`, sorted and non-overlapping.
    pub cells: Vec<(f64, f64, f64)>,
    /// `(location, mass)`.
    pub atoms: Vec<(f64, f64)>,
}

/// Tolerance on the total mass of a [`MeasureRepr`].
pub const MASS_TOL: f64 = 1e-12;

impl MeasureRepr {
    pub fn new(cells: Vec<(f64, f64, f64)>, mut atoms: Vec<(f64, f64)>) -> Result<Self> {
        let mut prev_hi = 0.0;
        for &(lo, hi, h) in &cells {
            if !(lo >= prev_hi && lo < hi && hi <= 1.0) || !(h >= 0.0 && h.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "bad density cell ({lo}, {hi}, {h}): cells must be sorted, disjoint, inside [0, 1] with finite height >= 0"
                )));
            }
            prev_hi = hi;
        }
        for &(x, m) in &atoms {
            if !(0.0..=1.0).contains(&x) || !(m > 0.0 && m.is_finite()) {
                return Err(Error::InvalidInput(format!("bad atom ({x}, {m})")));
            }
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let r = MeasureRepr { cells, atoms };
        let total = r.total_mass();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidInput(format!(
                "measure has total mass {total}, expected 1"
            )));
        }
        Ok(r)
    }

    /// Lebesgue measure on `[0, 1]`.
    pub fn uniform() -> Self {
        MeasureRepr {
            cells: vec![(0.0, 1.0, 1.0)],
            atoms: Vec::new(),
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.absolutely_continuous_mass() + self.atom_mass()
    }

    pub fn absolutely_continuous_mass(&self) -> f64 {
        self.cells.iter().map(|c| c.2 * (c.1 - c.0)).sum()
    }

    pub fn atom_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }

    /// Mass of `[lo, hi)`, with `hi = 1` closed.
    pub fn mass_of(&self, lo: f64, hi: f64) -> f64 {
        let (lo, hi) = (lo.max(0.0), hi.min(1.0));
        if lo >= hi && !(lo == 1.0 && hi == 1.0) {
            return 0.0;
        }
        let cont: f64 = self
            .cells
            .iter()
            .map(|&(a, b, h)| h * (b.min(hi) - a.max(lo)).max(0.0))
            .sum();
        let atoms: f64 = self
            .atoms
            .iter()
            .filter(|a| in_half_open(a.0, lo, hi))
            .map(|a| a.1)
            .sum();
        cont + atoms
    }

    /// CSV with columns `kind, lo, hi, value`; atoms have `lo = hi`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut rows = Vec::new();
        for &(lo, hi, h) in &self.cells {
            rows.push(vec!["cell".into(), fmt_num(lo), fmt_num(hi), fmt_num(h)]);
        }
        for &(x, m) in &self.atoms {
            rows.push(vec!["atom".into(), fmt_num(x), fmt_num(x), fmt_num(m)]);
        }
        write_csv(out, &["kind", "lo", "hi", "value"], &rows)
    }

    /// Right-continuous CDF and its left limits, evaluated on sorted points.
    fn cdf_pairs(&self, xs: &[f64]) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(xs.len());
        let (mut ci, mut ai) = (0usize, 0usize);
        let mut cell_mass_before = 0.0;
        let mut atoms_before = 0.0;
        for &x in xs {
            while ci < self.cells.len() && self.cells[ci].1 <= x {
                let c = self.cells[ci];
                cell_mass_before += c.2 * (c.1 - c.0);
                ci += 1;
            }
            while ai < self.atoms.len() && self.atoms[ai].0 < x {
                atoms_before += self.atoms[ai].1;
                ai += 1;
            }
            let partial = match self.cells.get(ci) {
                Some(&(a, _, h)) if a < x => h * (x - a),
                _ => 0.0,
            };
            let at_x: f64 = self.atoms[ai..].iter().take_while(|a| a.0 == x).map(|a| a.1).sum();
            let left = cell_mass_before + partial + atoms_before;
            out.push((left, left + at_x));
        }
        out
    }

    fn grid_points(&self) -> Vec<f64> {
        let mut g: Vec<f64> = vec![0.0, 1.0];
        for c in &self.cells {
            g.push(c.0);
            g.push(c.1);
        }
        g.extend(self.atoms.iter().map(|a| a.0));
        g
    }
}

fn in_half_open(x: f64, lo: f64, hi: f64) -> bool {
    lo <= x && (x < hi || (hi == 1.0 && x == 1.0))
}

/// Density `1 / (n L(I_j))` on each non-empty interval and an atom of mass
/// `1/n` at the location of each empty one.
pub fn empirical_measure(p: &Partition) -> MeasureRepr {
    let nf = p.n() as f64;
    let mut cells = Vec::new();
    let mut atoms: Vec<(f64, f64)> = Vec::new();
    for iv in p.intervals() {
        if iv.is_empty() {
            match atoms.last_mut() {
                Some(a) if a.0 == iv.hi => a.1 += 1.0 / nf,
                _ => atoms.push((iv.hi, 1.0 / nf)),
            }
        } else {
            cells.push((iv.lo, iv.hi, 1.0 / (nf * iv.length())));
        }
    }
    MeasureRepr { cells, atoms }
}

/// Share of the partition's intervals in `A = (lo, hi)`: each non-empty
/// interval contributes its overlapping fraction, each empty one `1/n` when
/// its location lies in `A`. `A` is intersected with `[0, 1]` first and
/// treated as `[lo, hi)` (closed at 1), so that a tiling of `[0, 1]` counts
/// every interval exactly once.
pub fn portion_count(p: &Partition, lo: f64, hi: f64) -> f64 {
    let (lo, hi) = (lo.max(0.0), hi.min(1.0));
    let nf = p.n() as f64;
    let mut total = 0.0;
    for iv in p.intervals() {
        if iv.is_empty() {
            if in_half_open(iv.hi, lo, hi) {
                total += 1.0 / nf;
            }
        } else {
            let overlap = (iv.hi.min(hi) - iv.lo.max(lo)).max(0.0);
            total += overlap / (nf * iv.length());
        }
    }
    total
}

/// `∫_0^1 |F_μ - F_ν|`, exact for piecewise-linear CDFs with jumps.
pub fn wasserstein1(mu: &MeasureRepr, nu: &MeasureRepr) -> Result<f64> {
    let (mm, mn) = (mu.total_mass(), nu.total_mass());
    if (mm - mn).abs() > 1e-9 {
        return Err(Error::InvalidInput(format!(
            "measures have different total mass ({mm} vs {mn})"
        )));
    }
    let mut xs = mu.grid_points();
    xs.extend(nu.grid_points());
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let a = mu.cdf_pairs(&xs);
    let b = nu.cdf_pairs(&xs);
    let mut total = 0.0;
    for k in 0..xs.len() - 1 {
        let len = xs[k + 1] - xs[k];
        // difference just right of xs[k] and just left of xs[k+1]
        let d0 = a[k].1 - b[k].1;
        let d1 = a[k + 1].0 - b[k + 1].0;
        total += if d0 * d1 >= 0.0 {
            0.5 * (d0.abs() + d1.abs()) * len
        } else {
            0.5 * (d0 * d0 + d1 * d1) / (d0.abs() + d1.abs()) * len
        };
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn laplacian() -> CoefficientSet {
        CoefficientSet::constant(1.0, 0.0, 1.0, 1.0)
    }

    #[test]
    fn validation() {
        assert!(Partition::new(vec![0.0, 0.6, 0.4, 1.0]).is_err());
        assert!(Partition::new(vec![0.1, 1.0]).is_err());
        assert!(Partition::new(vec![0.0]).is_err());
        assert!(Partition::new(vec![0.0, 0.0, 0.5, 0.5, 1.0]).is_ok());
        let p: Partition = serde_json::from_str(r#"{"breakpoints":[0,0.25,1]}"#).unwrap();
        assert_eq!(p.n(), 2);
        assert!(serde_json::from_str::<Partition>(r#"{"breakpoints":[0,1.5,1]}"#).is_err());
        assert_eq!(serde_json::to_string(&p).unwrap(), r#"{"breakpoints":[0.0,0.25,1.0]}"#);
    }

    #[test]
    fn uniform_cost_is_one_over_pi_squared() {
        let phi = ConvexFn::power(1.0).unwrap();
        for n in [1, 3, 8] {
            let (c, lams) = cost_with_lambdas(&Partition::uniform(n), &laplacian(), &phi, 1e-9).unwrap();
            assert!((c - 1.0 / (PI * PI)).abs() < 1e-9, "n = {n}: {c}");
            for l in lams {
                let exact = (n as f64 * PI).powi(2);
                assert!((l - exact).abs() < 1e-8 * exact);
            }
        }
    }

    #[test]
    fn two_interval_cost() {
        let phi = ConvexFn::power(1.0).unwrap();
        let p = Partition::new(vec![0.0, 0.25, 1.0]).unwrap();
        let c = cost_fn(&p, &laplacian(), &phi, 1e-9).unwrap();
        assert!((c - 1.25 / (PI * PI)).abs() < 1e-9);
    }

    #[test]
    fn empty_interval_uses_phi_at_zero() {
        let p = Partition::new(vec![0.0, 0.5, 0.5, 1.0]).unwrap();
        let inv = ConvexFn::power_inverse(1.0).unwrap();
        assert_eq!(cost_fn(&p, &laplacian(), &inv, 1e-8).unwrap(), f64::INFINITY);
        let pow = ConvexFn::power(1.0).unwrap();
        let c = cost_fn(&p, &laplacian(), &pow, 1e-9).unwrap();
        // two halves with n = 3: φ(3 · 0.5 / π) / 3 each
        let expect = 2.0 * (1.5 / PI).powi(2) / 3.0;
        assert!((c - expect).abs() < 1e-9);
    }

    #[test]
    fn negative_eigenvalue_is_an_error() {
        let cs = CoefficientSet::constant(1.0, -20.0, 1.0, 30.0).with_relaxed_q(true);
        let phi = ConvexFn::power(1.0).unwrap();
        assert!(matches!(
            cost_fn(&Partition::uniform(1), &cs, &phi, 1e-8),
            Err(Error::NonPositiveEigenvalue { .. })
        ));
    }

    #[test]
    fn empirical_measure_examples() {
        let m = empirical_measure(&Partition::uniform(4));
        assert_eq!(m.cells.len(), 4);
        assert!(m.cells.iter().all(|c| (c.2 - 1.0).abs() < 1e-15));
        assert!(m.atoms.is_empty());

        let m = empirical_measure(&Partition::new(vec![0.0, 0.0, 1.0]).unwrap());
        assert_eq!(m.atoms, vec![(0.0, 0.5)]);
        assert_eq!(m.cells, vec![(0.0, 1.0, 0.5)]);

        let m = empirical_measure(&Partition::new(vec![0.0, 0.5, 0.5, 1.0]).unwrap());
        assert_eq!(m.atoms, vec![(0.5, 1.0 / 3.0)]);
        assert!((m.cells[0].2 - 2.0 / 3.0).abs() < 1e-15);
        assert!((m.cells[1].2 - 2.0 / 3.0).abs() < 1e-15);
        assert!((m.total_mass() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn portion_examples() {
        let u = Partition::uniform(4);
        assert!((portion_count(&u, 0.0, 0.5) - 0.5).abs() < 1e-15);
        assert!((portion_count(&u, 0.0, 0.375) - 0.375).abs() < 1e-15);
        let p = Partition::new(vec![0.0, 0.0, 1.0]).unwrap();
        assert!((portion_count(&p, -0.1, 0.5) - 0.75).abs() < 1e-15);
        assert!((portion_count(&p, 0.0, 1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn wasserstein_examples() {
        let u = MeasureRepr::uniform();
        let d0 = MeasureRepr::new(vec![], vec![(0.0, 1.0)]).unwrap();
        let d1 = MeasureRepr::new(vec![], vec![(1.0, 1.0)]).unwrap();
        assert_eq!(wasserstein1(&u, &u).unwrap(), 0.0);
        assert!((wasserstein1(&d0, &d1).unwrap() - 1.0).abs() < 1e-15);
        assert!((wasserstein1(&u, &d0).unwrap() - 0.5).abs() < 1e-15);
        assert!((wasserstein1(&d1, &u).unwrap() - 0.5).abs() < 1e-15);
        let half = MeasureRepr::new(vec![(0.0, 0.5, 1.0)], vec![(0.5, 0.5)]).unwrap();
        // CDFs agree on (0, 0.5) and differ by 1 - x on (0.5, 1)
        assert!((wasserstein1(&half, &u).unwrap() - 0.125).abs() < 1e-15);
        let bad = MeasureRepr {
            cells: vec![(0.0, 1.0, 0.5)],
            atoms: vec![],
        };
        assert!(wasserstein1(&u, &bad).is_err());
    }

    #[test]
    fn measure_validation_and_csv() {
        assert!(MeasureRepr::new(vec![(0.0, 0.5, 1.0)], vec![]).is_err());
        assert!(MeasureRepr::new(vec![(0.5, 1.0, 1.0), (0.0, 0.5, 1.0)], vec![]).is_err());
        assert!(MeasureRepr::new(vec![(0.0, 1.0, 0.5)], vec![(1.5, 0.5)]).is_err());
        let m = MeasureRepr::new(vec![(0.0, 1.0, 0.5)], vec![(0.25, 0.5)]).unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "kind,lo,hi,value");
        assert!(lines[2].starts_with("atom,2.5"));
        assert!((m.mass_of(0.0, 0.25) - 0.125).abs() < 1e-15);
        assert!((m.mass_of(0.25, 1.0) - 0.875).abs() < 1e-15);
    }

    fn partition_strategy() -> impl Strategy<Value = Partition> {
        (1usize..12, prop::collection::vec(0.0f64..1.0, 11), any::<bool>()).prop_map(|(n, mut xs, collide)| {
            xs.truncate(n - 1);
            if collide && xs.len() >= 2 {
                xs[1] = xs[0];
            }
            xs.sort_by(f64::total_cmp);
            Partition::from_interior(&xs).unwrap()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn empirical_mass_and_portions(p in partition_strategy()) {
            let m = empirical_measure(&p);
            prop_assert!((m.total_mass() - 1.0).abs() < MASS_TOL);
            prop_assert!((portion_count(&p, 0.0, 1.0) - 1.0).abs() < 1e-12);
            let dyadic: f64 = (0..8).map(|k| portion_count(&p, k as f64 / 8.0, (k + 1) as f64 / 8.0)).sum();
            prop_assert!((dyadic - 1.0).abs() < 1e-12);
            prop_assert!((m.mass_of(0.0, 0.3) - portion_count(&p, 0.0, 0.3)).abs() < 1e-12);
        }

        #[test]
        fn constant_cost_matches_closed_form(
            p in partition_strategy(),
            pc in 0.5f64..2.0,
            wc in 0.5f64..2.0,
        ) {
            let cs = CoefficientSet::constant(pc, 0.0, wc, 2.0);
            let phi = ConvexFn::power(1.0).unwrap();
            let n = p.n() as f64;
            let s = (wc / pc).sqrt();
            let exact: f64 = p.lengths().iter().map(|l| (n * s * l / PI).powi(2)).sum::<f64>() / n;
            let c = cost_fn(&p, &cs, &phi, 1e-9).unwrap();
            prop_assert!((c - exact).abs() <= 1e-8 * exact, "{} vs {}", c, exact);
        }

        #[test]
        fn wasserstein_is_a_metric(a in partition_strategy(), b in partition_strategy(), c in partition_strategy()) {
            let (ma, mb, mc) = (empirical_measure(&a), empirical_measure(&b), empirical_measure(&c));
            let ab = wasserstein1(&ma, &mb).unwrap();
            prop_assert_eq!(ab, wasserstein1(&mb, &ma).unwrap());
            let ac = wasserstein1(&ma, &mc).unwrap();
            let cb = wasserstein1(&mc, &mb).unwrap();
            prop_assert!(ab <= ac + cb + 1e-12);
            prop_assert!(wasserstein1(&ma, &ma).unwrap().abs() < 1e-15);
            prop_assert!((0.0..=1.0).contains(&ab));
        }
    }
}
