//! Finite quasi-metric measure spaces.
//!
//! A space is a dense distance matrix together with a quasi-triangle constant
//! `A0` and strictly positive point masses. Balls are strict,
//! `B(x, r) = {y : d(x, y) < r}`, so `V(x, x) = μ(B(x, 0)) = 0`.
//!
//! Every ball query goes through a per-point neighbour table (indices sorted by
//! distance with prefix masses), built once on first use.

use crate::error::{HardyError, Result};
use crate::par;
use crate::report::ValidationReport;
use serde::Serialize;
use std::sync::OnceLock;

/// Default cap on the number of points.
pub const DEFAULT_MAX_POINTS: usize = 16384;

/// Relative slack used when comparing distances against the quasi-triangle bound.
const TRIANGLE_SLACK: f64 = 1e-12;

#[derive(Debug)]
struct Neighbours {
    /// `order[x]`: all points sorted by `d(x, ·)` ascending, ties by index.
    order: Vec<Vec<u32>>,
    /// `dist[x][i] = d(x, order[x][i])`.
    dist: Vec<Vec<f64>>,
    /// `mass[x][i]` = total mass of `order[x][..i]`; length `n + 1`.
    mass: Vec<Vec<f64>>,
}

#[derive(Debug)]
pub struct QuasiMetricSpace {
    n: usize,
    d: Vec<f64>,
    a0: f64,
    mu: Vec<f64>,
    labels: Option<Vec<String>>,
    nb: OnceLock<Neighbours>,
}

impl Clone for QuasiMetricSpace {
    fn clone(&self) -> Self {
        Self {
            n: self.n,
            d: self.d.clone(),
            a0: self.a0,
            mu: self.mu.clone(),
            labels: self.labels.clone(),
            nb: OnceLock::new(),
        }
    }
}

/// A strict ball together with its members.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ball {
    pub center: usize,
    pub radius: f64,
    pub members: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DoublingProfile {
    pub c_mu: f64,
    pub omega: f64,
    /// `(center, radius)` attaining `c_mu`.
    pub worst_pair: (usize, f64),
}

impl QuasiMetricSpace {
    /// Build from a row-major `n × n` distance matrix. Only shapes, finiteness and
    /// the size cap are checked here; use [`verify_space`] for the axioms.
    pub fn from_flat(n: usize, d: Vec<f64>, mu: Vec<f64>, a0: f64) -> Result<Self> {
        Self::from_flat_capped(n, d, mu, a0, DEFAULT_MAX_POINTS)
    }

    pub fn from_flat_capped(
        n: usize,
        d: Vec<f64>,
        mu: Vec<f64>,
        a0: f64,
        cap: usize,
    ) -> Result<Self> {
        if n == 0 {
            return Err(HardyError::Parameter("a space needs at least one point".into()));
        }
        if n > cap {
            return Err(HardyError::TooLarge { n, cap });
        }
        if d.len() != n * n {
            return Err(HardyError::Shape { expected: n * n, got: d.len() });
        }
        if mu.len() != n {
            return Err(HardyError::Shape { expected: n, got: mu.len() });
        }
        if d.iter().any(|v| !v.is_finite()) || mu.iter().any(|v| !v.is_finite()) {
            return Err(HardyError::Parameter("distances and masses must be finite".into()));
        }
        if !a0.is_finite() {
            return Err(HardyError::Parameter("A0 must be finite".into()));
        }
        Ok(Self { n, d, a0, mu, labels: None, nb: OnceLock::new() })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>, mu: Vec<f64>, a0: f64) -> Result<Self> {
        let n = rows.len();
        let mut d = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(HardyError::Shape { expected: n, got: row.len() });
            }
            d.extend(row);
        }
        Self::from_flat(n, d, mu, a0)
    }

    pub fn from_fn(n: usize, mu: Vec<f64>, a0: f64, dist: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let mut d = vec![0.0; n * n];
        for x in 0..n {
            for y in 0..n {
                d[x * n + y] = dist(x, y);
            }
        }
        Self::from_flat(n, d, mu, a0)
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n {
            return Err(HardyError::Shape { expected: self.n, got: labels.len() });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn with_a0(mut self, a0: f64) -> Self {
        self.a0 = a0;
        self
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn d(&self, x: usize, y: usize) -> f64 {
        self.d[x * self.n + y]
    }

    #[inline]
    pub fn row(&self, x: usize) -> &[f64] {
        &self.d[x * self.n..(x + 1) * self.n]
    }

    pub fn distances(&self) -> &[f64] {
        &self.d
    }

    #[inline]
    pub fn a0(&self) -> f64 {
        self.a0
    }

    #[inline]
    pub fn mu(&self, x: usize) -> f64 {
        self.mu[x]
    }

    pub fn masses(&self) -> &[f64] {
        &self.mu
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn total_mass(&self) -> f64 {
        self.mu.iter().sum()
    }

    pub fn diameter(&self) -> f64 {
        self.d.iter().copied().fold(0.0, f64::max)
    }

    /// Smallest positive distance, or `None` for a single point.
    pub fn min_positive_distance(&self) -> Option<f64> {
        self.d
            .iter()
            .copied()
            .filter(|&v| v > 0.0)
            .min_by(|a, b| a.total_cmp(b))
    }

    fn neighbours(&self) -> &Neighbours {
        self.nb.get_or_init(|| {
            let n = self.n;
            let rows = par::map_indices(n, |x| {
                let mut idx: Vec<u32> = (0..n as u32).collect();
                let row = self.row(x);
                idx.sort_by(|&a, &b| {
                    row[a as usize]
                        .total_cmp(&row[b as usize])
                        .then(a.cmp(&b))
                });
                let dist: Vec<f64> = idx.iter().map(|&y| row[y as usize]).collect();
                let mut mass = Vec::with_capacity(n + 1);
                let mut acc = 0.0;
                mass.push(0.0);
                for &y in &idx {
                    acc += self.mu[y as usize];
                    mass.push(acc);
                }
                (idx, dist, mass)
            });
            let mut order = Vec::with_capacity(n);
            let mut dist = Vec::with_capacity(n);
            let mut mass = Vec::with_capacity(n);
            for (o, d, m) in rows {
                order.push(o);
                dist.push(d);
                mass.push(m);
            }
            Neighbours { order, dist, mass }
        })
    }

    /// Number of points strictly closer than `r` to `x`.
    #[inline]
    pub fn ball_len(&self, x: usize, r: f64) -> usize {
        self.neighbours().dist[x].partition_point(|&v| v < r)
    }

    /// Members of `B(x, r)` ordered by distance from `x`.
    pub fn ball_members(&self, x: usize, r: f64) -> &[u32] {
        let nb = self.neighbours();
        let len = nb.dist[x].partition_point(|&v| v < r);
        &nb.order[x][..len]
    }

    /// Points sorted by distance from `x` together with those distances.
    pub fn sorted_from(&self, x: usize) -> (&[u32], &[f64]) {
        let nb = self.neighbours();
        (&nb.order[x], &nb.dist[x])
    }

    /// Prefix masses along [`sorted_from`](Self::sorted_from); length `n + 1`.
    pub fn prefix_mass_from(&self, x: usize) -> &[f64] {
        &self.neighbours().mass[x]
    }

    pub fn ball(&self, center: usize, radius: f64) -> Ball {
        let mut members: Vec<usize> = self
            .ball_members(center, radius)
            .iter()
            .map(|&y| y as usize)
            .collect();
        members.sort_unstable();
        Ball { center, radius, members }
    }

    /// `V_r(x) = μ(B(x, r))`.
    #[inline]
    pub fn ball_measure(&self, x: usize, r: f64) -> f64 {
        let nb = self.neighbours();
        let len = nb.dist[x].partition_point(|&v| v < r);
        nb.mass[x][len]
    }

    /// `V(x, y) = μ(B(x, d(x, y)))`.
    #[inline]
    pub fn volume_between(&self, x: usize, y: usize) -> f64 {
        self.ball_measure(x, self.d(x, y))
    }

    /// Distance from `x` to the set of points where `mask` is true, `∞` if empty.
    pub fn dist_to_set(&self, x: usize, mask: &[bool]) -> f64 {
        let (order, dist) = self.sorted_from(x);
        order
            .iter()
            .zip(dist)
            .find(|(y, _)| mask[**y as usize])
            .map_or(f64::INFINITY, |(_, &d)| d)
    }

    /// Distinct positive distances from `x`, ascending.
    pub fn distinct_distances_from(&self, x: usize) -> Vec<f64> {
        let (_, dist) = self.sorted_from(x);
        let mut out: Vec<f64> = Vec::new();
        for &v in dist {
            if v > 0.0 && out.last().is_none_or(|&l| l < v) {
                out.push(v);
            }
        }
        out
    }

    /// All distinct positive distances in the space, ascending.
    pub fn distinct_distances(&self) -> Vec<f64> {
        let mut all: Vec<f64> = self.d.iter().copied().filter(|&v| v > 0.0).collect();
        all.sort_by(|a, b| a.total_cmp(b));
        all.dedup();
        all
    }
}

/// `(V_r(x), [V(x, y) for all y])`.
pub fn volume_functions(s: &QuasiMetricSpace, x: usize, r: f64) -> Result<(f64, Vec<f64>)> {
    if !(r > 0.0) {
        return Err(HardyError::Parameter(format!("radius must be positive, got {r}")));
    }
    let v = s.ball_measure(x, r);
    let between = (0..s.n()).map(|y| s.volume_between(x, y)).collect();
    Ok((v, between))
}

/// Check every axiom of a quasi-metric measure space, listing witnesses.
pub fn verify_space(s: &QuasiMetricSpace) -> ValidationReport {
    let n = s.n();
    let mut report = ValidationReport::new();
    if !(s.a0() >= 1.0) {
        report.push("a0-range", vec![], format!("A0 = {} is below 1", s.a0()));
    }
    for x in 0..n {
        let m = s.mu(x);
        if !(m > 0.0) {
            report.push("positive-mass", vec![x], format!("mu({x}) = {m}"));
        }
    }
    for x in 0..n {
        for y in 0..n {
            let dxy = s.d(x, y);
            if dxy < 0.0 {
                report.push("nonnegative", vec![x, y], format!("d = {dxy}"));
            }
            if x == y && dxy != 0.0 {
                report.push("zero-diagonal", vec![x], format!("d(x,x) = {dxy}"));
            }
            if x != y && dxy == 0.0 {
                report.push("separation", vec![x, y], "distinct points at distance 0");
            }
            if x < y && dxy != s.d(y, x) {
                report.push(
                    "symmetry",
                    vec![x, y],
                    format!("d({x},{y}) = {dxy} but d({y},{x}) = {}", s.d(y, x)),
                );
            }
        }
    }
    let a0 = s.a0();
    let triples: Vec<Vec<(usize, usize, usize, f64, f64)>> = par::map_indices(n, |x| {
        let mut bad = Vec::new();
        for y in 0..n {
            let dxy = s.d(x, y);
            if dxy <= 0.0 {
                continue;
            }
            for z in 0..n {
                let bound = a0 * (s.d(x, z) + s.d(z, y));
                if dxy > bound * (1.0 + TRIANGLE_SLACK) {
                    bad.push((x, z, y, dxy, bound));
                }
            }
        }
        bad
    });
    for (x, z, y, dxy, bound) in triples.into_iter().flatten() {
        report.push(
            "quasi-triangle",
            vec![x, z, y],
            format!("d({x},{y}) = {dxy} > A0·(d({x},{z}) + d({z},{y})) = {bound}"),
        );
    }
    report
}

/// Smallest `A0 ≥ 1` for which the quasi-triangle inequality holds.
pub fn quasi_triangle_constant(s: &QuasiMetricSpace) -> f64 {
    let n = s.n();
    let per_x = par::map_indices(n, |x| {
        let mut worst: f64 = 1.0;
        for y in 0..n {
            let dxy = s.d(x, y);
            if dxy <= 0.0 {
                continue;
            }
            for z in 0..n {
                let via = s.d(x, z) + s.d(z, y);
                if via > 0.0 {
                    worst = worst.max(dxy / via);
                }
            }
        }
        worst
    });
    per_x.into_iter().fold(1.0, f64::max)
}

/// Radii scanned by the doubling scan around `x`: every distinct distance from
/// `x`, the midpoints between consecutive ones, and half the smallest one.
/// The ratio `μ(B(x,2r))/μ(B(x,r))` is a step function whose supremum over
/// `r > 0` is attained on the distances from `x`, so this scan is exact.
pub fn doubling_radii(s: &QuasiMetricSpace, x: usize) -> Vec<f64> {
    let dd = s.distinct_distances_from(x);
    let mut radii = Vec::with_capacity(2 * dd.len() + 1);
    match dd.first() {
        Some(&first) => radii.push(first / 2.0),
        None => radii.push(1.0),
    }
    for (i, &v) in dd.iter().enumerate() {
        radii.push(v);
        if let Some(&next) = dd.get(i + 1) {
            radii.push(0.5 * (v + next));
        }
    }
    radii
}

pub fn doubling_profile(s: &QuasiMetricSpace) -> DoublingProfile {
    let per_x = par::map_indices(s.n(), |x| {
        let mut best = (1.0, x, doubling_radii(s, x)[0]);
        for r in doubling_radii(s, x) {
            let small = s.ball_measure(x, r);
            let big = s.ball_measure(x, 2.0 * r);
            let ratio = big / small;
            if ratio > best.0 {
                best = (ratio, x, r);
            }
        }
        best
    });
    let (c_mu, x, r) = per_x
        .into_iter()
        .fold((1.0, 0usize, 1.0), |acc, cur| if cur.0 > acc.0 { cur } else { acc });
    DoublingProfile { c_mu, omega: c_mu.log2(), worst_pair: (x, r) }
}
