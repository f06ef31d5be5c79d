//! Atoms, molecules and the dual Campanato/Lipschitz norms.
//!
//! Every sup over "all balls" runs over a [`BallFamily`]: per center, the
//! distinct distances, the midpoints between consecutive ones, the radius 1 and
//! `diam + 1`. This realizes every member set of a ball together with its
//! small (`r ≤ 1`) or big (`r > 1`) label.

use crate::decompose::{AtomEntry, AtomicDecomposition};
use crate::error::{HardyError, Result};
use crate::kernels::next_up;
use crate::par;
use crate::report::ValidationReport;
use crate::space::QuasiMetricSpace;
use serde::Serialize;

/// Relative slack on size conditions of exactly normalized atoms.
pub const SIZE_TOL: f64 = 1e-10;
/// Cancellation tolerance, relative to `max(1, ‖a‖_{L¹})`.
pub const CANCEL_TOL: f64 = 1e-10;

/// `‖f‖_{L^q(μ)}` restricted to `mask` (`q = ∞` gives the max).
fn lq_on(f: &[f64], mu: &[f64], q: f64, mask: impl Fn(usize) -> bool) -> f64 {
    if q.is_infinite() {
        return (0..f.len()).filter(|&y| mask(y)).map(|y| f[y].abs()).fold(0.0, f64::max);
    }
    let sum: f64 = (0..f.len()).filter(|&y| mask(y)).map(|y| f[y].abs().powf(q) * mu[y]).sum();
    sum.powf(1.0 / q)
}

/// `μ(B)^{1/q − 1/p}`.
fn size_bound(measure: f64, p: f64, q: f64) -> f64 {
    let inv_q = if q.is_infinite() { 0.0 } else { 1.0 / q };
    measure.powf(inv_q - 1.0 / p)
}

fn check_exponents(report: &mut ValidationReport, p: f64, q: f64) {
    if !(p > 0.0 && p <= 1.0 && q > p && q >= 1.0) {
        report.push("exponents", vec![], format!("need p in (0, 1] and q in (p, ∞] ∩ [1, ∞], got p = {p}, q = {q}"));
    }
}

/// Smallest radius whose strict ball about `center` holds every point at distance `reach`.
pub fn enclosing_radius(reach: f64) -> f64 {
    if reach > 0.0 {
        next_up(reach)
    } else {
        f64::MIN_POSITIVE
    }
}

/// Local `(p, q)`-atom conditions: support in `B(x0, r0)`, `‖a‖_q ≤ μ(B)^{1/q−1/p}`,
/// and `Σ a μ = 0` when `r0 ≤ 1`.
pub fn validate_local_atom(
    s: &QuasiMetricSpace,
    a: &[f64],
    center: usize,
    radius: f64,
    p: f64,
    q: f64,
) -> ValidationReport {
    let mut report = ValidationReport::new();
    check_exponents(&mut report, p, q);
    if a.len() != s.n() {
        report.push("shape", vec![a.len()], format!("expected {} values", s.n()));
        return report;
    }
    if !(radius > 0.0) {
        report.push("radius", vec![center], format!("radius {radius} is not positive"));
        return report;
    }
    let mu = s.masses();
    for y in 0..s.n() {
        if a[y] != 0.0 && s.d(center, y) >= radius {
            report.push("support", vec![y], format!("a = {} at distance {} ≥ {radius}", a[y], s.d(center, y)));
        }
    }
    let norm = lq_on(a, mu, q, |_| true);
    let bound = size_bound(s.ball_measure(center, radius), p, q);
    if norm > bound * (1.0 + SIZE_TOL) {
        report.push("size", vec![center], format!("‖a‖_q = {norm:e} exceeds μ(B)^(1/q-1/p) = {bound:e}"));
    }
    if radius <= 1.0 {
        let integral: f64 = a.iter().zip(mu).map(|(v, m)| v * m).sum();
        let l1: f64 = a.iter().zip(mu).map(|(v, m)| v.abs() * m).sum();
        if integral.abs() > CANCEL_TOL * l1.max(1.0) {
            report.push("cancellation", vec![center], format!("∫a dμ = {integral:e} on a ball of radius {radius} ≤ 1"));
        }
    }
    report
}

/// The ball of least measure (then lowest center) holding the support of `a`;
/// `None` for `a = 0`.
pub fn global_atom_ball(s: &QuasiMetricSpace, a: &[f64]) -> Option<(usize, f64)> {
    let support: Vec<usize> = (0..a.len()).filter(|&y| a[y] != 0.0).collect();
    if support.is_empty() {
        return None;
    }
    (0..s.n())
        .map(|x| {
            let r = enclosing_radius(support.iter().map(|&y| s.d(x, y)).fold(0.0, f64::max));
            (x, r, s.ball_measure(x, r))
        })
        .min_by(|a, b| a.2.total_cmp(&b.2).then(a.0.cmp(&b.0)))
        .map(|(x, r, _)| (x, r))
}

/// Whether `a` is the constant atom `μ(X)^{-1/p}`.
pub fn is_constant_atom(s: &QuasiMetricSpace, a: &[f64], p: f64) -> bool {
    let c = s.total_mass().powf(-1.0 / p);
    a.iter().all(|&v| (v - c).abs() <= SIZE_TOL * c)
}

/// Global `(p, q)`-atom on a finite-measure space: either the constant
/// `μ(X)^{-1/p}`, or a function with vanishing integral meeting the size
/// condition on some ball (the least-measure ball holding its support is tried).
pub fn validate_global_atom(s: &QuasiMetricSpace, a: &[f64], p: f64, q: f64) -> ValidationReport {
    let mut report = ValidationReport::new();
    check_exponents(&mut report, p, q);
    if a.len() != s.n() {
        report.push("shape", vec![a.len()], format!("expected {} values", s.n()));
        return report;
    }
    if is_constant_atom(s, a, p) {
        return report;
    }
    let mu = s.masses();
    let integral: f64 = a.iter().zip(mu).map(|(v, m)| v * m).sum();
    let l1: f64 = a.iter().zip(mu).map(|(v, m)| v.abs() * m).sum();
    if integral.abs() > CANCEL_TOL * l1.max(1.0) {
        report.push("cancellation", vec![], format!("∫a dμ = {integral:e} for a non-constant atom"));
    }
    if let Some((x, r)) = global_atom_ball(s, a) {
        let norm = lq_on(a, mu, q, |_| true);
        let bound = size_bound(s.ball_measure(x, r), p, q);
        if norm > bound * (1.0 + SIZE_TOL) {
            report.push("size", vec![x], format!("‖a‖_q = {norm:e} exceeds {bound:e} on the smallest enclosing ball"));
        }
    }
    report
}

/// A local `(p, q, ε)`-molecule candidate centered at `B(center, radius)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Molecule {
    pub values: Vec<f64>,
    pub center: usize,
    pub radius: f64,
    /// Annulus ratio: the `m`-th annulus is `B(x0, δ^{-m} r0) \ B(x0, δ^{-m+1} r0)`.
    pub delta: f64,
    pub p: f64,
    pub q: f64,
    /// `eps[m − 1] = ε_m`.
    pub eps: Vec<f64>,
}

impl Molecule {
    fn annulus_radius(&self, m: usize) -> f64 {
        self.radius * self.delta.powi(-(m as i32))
    }

    /// Number of annuli needed to reach every point of the space.
    pub fn annulus_count(&self, s: &QuasiMetricSpace) -> usize {
        let reach = s.row(self.center).iter().copied().fold(0.0, f64::max);
        let mut m = 0;
        while self.annulus_radius(m) <= reach {
            m += 1;
        }
        m
    }

    fn in_annulus(&self, s: &QuasiMetricSpace, m: usize, y: usize) -> bool {
        let d = s.d(self.center, y);
        d < self.annulus_radius(m) && d >= self.annulus_radius(m - 1)
    }

    /// Ball part, then every annulus part whose values are not all zero: `(m, piece)`.
    fn parts(&self, s: &QuasiMetricSpace) -> Vec<(usize, Vec<f64>)> {
        let n = s.n();
        let mut out = Vec::new();
        for m in 0..=self.annulus_count(s) {
            let piece: Vec<f64> = (0..n)
                .map(|y| {
                    let inside = if m == 0 { s.d(self.center, y) < self.radius } else { self.in_annulus(s, m, y) };
                    if inside {
                        self.values[y]
                    } else {
                        0.0
                    }
                })
                .collect();
            if m == 0 || piece.iter().any(|&v| v != 0.0) {
                out.push((m, piece));
            }
        }
        out
    }

    /// Smallest `c` such that `values / c` meets the ball and annulus size bounds.
    pub fn normalizer(&self, s: &QuasiMetricSpace) -> Result<f64> {
        let mu = s.masses();
        let mut c = 0.0f64;
        for (m, piece) in self.parts(s) {
            let norm = lq_on(&piece, mu, self.q, |_| true);
            if norm == 0.0 {
                continue;
            }
            let r = self.annulus_radius(m);
            let mut bound = size_bound(s.ball_measure(self.center, r), self.p, self.q);
            if m > 0 {
                let e = self.eps.get(m - 1).copied().unwrap_or(0.0);
                if !(e > 0.0) {
                    return Err(HardyError::Parameter(format!("annulus {m} is nonzero but ε_{m} is missing or zero")));
                }
                bound *= e;
            }
            c = c.max(norm / bound);
        }
        Ok(c)
    }
}

/// Molecule conditions: ball size, every nonzero annulus, summability of `ε`,
/// and cancellation iff `r0 ≤ 1`.
pub fn validate_molecule(s: &QuasiMetricSpace, mol: &Molecule) -> ValidationReport {
    let mut report = ValidationReport::new();
    check_exponents(&mut report, mol.p, mol.q);
    if mol.values.len() != s.n() {
        report.push("shape", vec![mol.values.len()], format!("expected {} values", s.n()));
        return report;
    }
    if !(mol.delta > 0.0 && mol.delta < 1.0 && mol.radius > 0.0) {
        report.push("geometry", vec![], format!("need δ in (0, 1) and r0 > 0, got δ = {}, r0 = {}", mol.delta, mol.radius));
        return report;
    }
    if mol.eps.iter().any(|&e| !(e >= 0.0 && e.is_finite())) {
        report.push("eps", vec![], "ε must be finite and nonnegative");
    }
    let weighted: f64 = mol.eps.iter().enumerate().map(|(i, e)| (i + 1) as f64 * e.powf(mol.p)).sum();
    if !weighted.is_finite() {
        report.push("eps", vec![], "Σ m ε_m^p diverges");
    }
    let mu = s.masses();
    for (m, piece) in mol.parts(s) {
        let norm = lq_on(&piece, mu, mol.q, |_| true);
        let bound = size_bound(s.ball_measure(mol.center, mol.annulus_radius(m)), mol.p, mol.q);
        if m == 0 {
            if norm > bound * (1.0 + SIZE_TOL) {
                report.push("ball-size", vec![0], format!("‖M 1_B‖_q = {norm:e} exceeds {bound:e}"));
            }
        } else {
            let e = mol.eps.get(m - 1).copied().unwrap_or(0.0);
            if norm > e * bound * (1.0 + SIZE_TOL) {
                report.push("annulus", vec![m], format!("annulus {m}: {norm:e} exceeds ε_m μ^(1/q-1/p) = {:e}", e * bound));
            }
        }
    }
    if mol.radius <= 1.0 {
        let integral: f64 = mol.values.iter().zip(mu).map(|(v, m)| v * m).sum();
        let l1: f64 = mol.values.iter().zip(mu).map(|(v, m)| v.abs() * m).sum();
        if integral.abs() > CANCEL_TOL * l1.max(1.0) {
            report.push("cancellation", vec![], format!("∫M dμ = {integral:e} with r0 ≤ 1"));
        }
    }
    report
}

/// Split a molecule with `r0 > 1` into `a_0 = M 1_B` (`λ = 1`) and
/// `a_m = M 1_{A_m} / ε_m` (`λ = ε_m`) on `B(x0, δ^{-m} r0)`; zero pieces are skipped.
pub fn molecule_to_atoms(s: &QuasiMetricSpace, mol: &Molecule) -> Result<AtomicDecomposition> {
    if mol.values.len() != s.n() {
        return Err(HardyError::Shape { expected: s.n(), got: mol.values.len() });
    }
    if mol.radius <= 1.0 {
        return Err(HardyError::UnsupportedMolecule(format!(
            "r0 = {} ≤ 1 needs the global-molecule conversion, which is not implemented",
            mol.radius
        )));
    }
    let mut dec = AtomicDecomposition::empty(mol.p, mol.q);
    for (m, piece) in mol.parts(s) {
        if piece.iter().all(|&v| v == 0.0) {
            continue;
        }
        let lambda = if m == 0 {
            1.0
        } else {
            let e = mol.eps.get(m - 1).copied().unwrap_or(0.0);
            if !(e > 0.0) {
                return Err(HardyError::UnsupportedMolecule(format!("annulus {m} is nonzero but ε_{m} = {e}")));
            }
            e
        };
        dec.entries.push(AtomEntry {
            lambda,
            center: mol.center,
            radius: mol.annulus_radius(m),
            level: m as i64,
            index: 0,
            atom: piece.iter().map(|v| v / lambda).collect(),
        });
    }
    dec.finish(&mol.values, s.masses());
    Ok(dec)
}

/// `ε_m = δ^{m(γ′ − ω(1/p − 1))}`, `m = 1..=count`.
pub fn default_eps(delta: f64, gamma_prime: f64, omega: f64, p: f64, count: usize) -> Vec<f64> {
    let rate = gamma_prime - omega * (1.0 / p - 1.0);
    (1..=count).map(|m| delta.powf(m as f64 * rate)).collect()
}

/// All balls used by the dual norms.
#[derive(Debug, Clone, Serialize)]
pub struct BallFamily {
    /// `radii[x]`: ascending radii about center `x`.
    pub radii: Vec<Vec<f64>>,
}

impl BallFamily {
    pub fn new(s: &QuasiMetricSpace) -> Self {
        let big = s.diameter() + 1.0;
        let radii = (0..s.n())
            .map(|x| {
                let dist = s.distinct_distances_from(x);
                let mut r = dist.clone();
                r.extend(dist.windows(2).map(|w| 0.5 * (w[0] + w[1])));
                r.push(1.0);
                r.push(big);
                r.sort_by(|a, b| a.total_cmp(b));
                r.dedup();
                r
            })
            .collect();
        Self { radii }
    }

    pub fn len(&self) -> usize {
        self.radii.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Max over balls of `μ(B)^{−α−1/q} (Σ_B |f − m_B f|^q μ)^{1/q}` (`m_B f` only for `r ≤ 1`).
    pub fn campanato(&self, s: &QuasiMetricSpace, f: &[f64], alpha: f64, q: f64) -> f64 {
        let mu = s.masses();
        let best = par::map_indices(s.n(), |x| {
            let (order, dist) = s.sorted_from(x);
            let prefix = s.prefix_mass_from(x);
            let mut best = 0.0f64;
            let mut sum = 0.0;
            let mut len = 0;
            for &r in &self.radii[x] {
                while len < order.len() && dist[len] < r {
                    let y = order[len] as usize;
                    sum += f[y] * mu[y];
                    len += 1;
                }
                let members = &order[..len];
                let measure = prefix[len];
                let centre = if r <= 1.0 { sum / measure } else { 0.0 };
                let term = if q.is_infinite() {
                    members.iter().map(|&y| (f[y as usize] - centre).abs()).fold(0.0, f64::max) * measure.powf(-alpha)
                } else {
                    let acc: f64 = members
                        .iter()
                        .map(|&y| (f[y as usize] - centre).abs().powf(q) * mu[y as usize])
                        .sum();
                    measure.powf(-alpha - 1.0 / q) * acc.powf(1.0 / q)
                };
                best = best.max(term);
            }
            best
        });
        best.into_iter().fold(0.0, f64::max)
    }

    /// Max over balls of `osc_B f / μ(B)^α` (`r ≤ 1`) or `max_B |f| / μ(B)^α` (`r > 1`).
    pub fn lipschitz(&self, s: &QuasiMetricSpace, f: &[f64], alpha: f64) -> f64 {
        let best = par::map_indices(s.n(), |x| {
            let (order, dist) = s.sorted_from(x);
            let prefix = s.prefix_mass_from(x);
            let (mut lo, mut hi, mut top) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
            let mut best = 0.0f64;
            let mut len = 0;
            for &r in &self.radii[x] {
                while len < order.len() && dist[len] < r {
                    let v = f[order[len] as usize];
                    lo = lo.min(v);
                    hi = hi.max(v);
                    top = top.max(v.abs());
                    len += 1;
                }
                let size = if r <= 1.0 { hi - lo } else { top };
                best = best.max(size / prefix[len].powf(alpha));
            }
            best
        });
        best.into_iter().fold(0.0, f64::max)
    }
}

/// Local Campanato norm `‖f‖_{c_{α,q}}`.
pub fn campanato_norm(s: &QuasiMetricSpace, f: &[f64], alpha: f64, q: f64) -> Result<f64> {
    if f.len() != s.n() {
        return Err(HardyError::Shape { expected: s.n(), got: f.len() });
    }
    if !(q >= 1.0) {
        return Err(HardyError::Parameter(format!("q must be at least 1, got {q}")));
    }
    Ok(BallFamily::new(s).campanato(s, f, alpha, q))
}

/// Local Lipschitz norm `‖f‖_{ℓ_α}`.
pub fn lipschitz_norm(s: &QuasiMetricSpace, f: &[f64], alpha: f64) -> Result<f64> {
    if f.len() != s.n() {
        return Err(HardyError::Shape { expected: s.n(), got: f.len() });
    }
    if !(alpha >= 0.0) {
        return Err(HardyError::Parameter(format!("alpha must be nonnegative, got {alpha}")));
    }
    Ok(BallFamily::new(s).lipschitz(s, f, alpha))
}

/// `Σ_j λ_j Σ_x f a_j μ`.
pub fn duality_pairing(s: &QuasiMetricSpace, f: &[f64], dec: &AtomicDecomposition) -> f64 {
    let mu = s.masses();
    dec.entries
        .iter()
        .map(|e| e.lambda * e.atom.iter().zip(f).zip(mu).map(|((a, v), m)| a * v * m).sum::<f64>())
        .sum()
}
