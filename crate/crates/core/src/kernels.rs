//! Approximation-of-identity operator families.
//!
//! A family stores the conservative kernels `P_k` as dense row-major matrices;
//! `Q_0 = P_0` and `Q_k = P_k − P_{k−1}`. Operators act by
//! `(P_k f)(x) = Σ_y P_k(x, y) f(y) μ(y)`.
//!
//! Two surrogates are provided:
//!
//! - **Haar martingale**: `P_k` is the conditional expectation onto level-`k`
//!   cubes. Orthogonality, `Σ Q_k = I` and conservation are exact; kernels jump
//!   across cube faces so there is no Hölder regularity.
//! - **Gauss–Sinkhorn**: `S_k = exp(−ν (d/δ^k)^a)` scaled symmetrically until both
//!   μ-weighted marginals are 1. Smooth and exponentially decaying; conservation
//!   holds to the Sinkhorn tolerance. Levels continue past `K_max` until `P_K`
//!   is the identity to [`IDENTITY_TOL`].

use crate::dyadic::DyadicSystem;
use crate::error::{HardyError, Result};
use crate::par;
use crate::space::QuasiMetricSpace;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub const SINKHORN_TOL: f64 = 1e-10;
pub const SINKHORN_MAX_ITER: usize = 10_000;
/// `P_K` counts as the identity once every entry of `P_K(x,y)μ(y) − δ_xy` is below this.
pub const IDENTITY_TOL: f64 = 1e-14;
/// Gauss levels are extended at most this far past `K_max`.
pub const MAX_EXTRA_LEVELS: usize = 8;
pub const SECOND_DIFF_SAMPLES: usize = 10_000;
/// Budget (pair × point evaluations) for the exhaustive regularity scan.
const REGULARITY_BUDGET: usize = 400_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    HaarMartingale,
    GaussSinkhorn,
}

impl FamilyKind {
    /// Declared tolerance for conservation and cancellation.
    pub fn tolerance(self) -> f64 {
        match self {
            FamilyKind::HaarMartingale => 1e-12,
            FamilyKind::GaussSinkhorn => 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilyParams {
    pub nu: f64,
    pub a: f64,
    pub delta: f64,
    /// Index of the last level, so there are `k_top + 1` kernels.
    pub k_top: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IATIDiagnostics {
    /// Decay rate used in the diagnostics, `ν δ^a`: `Q_k` inherits the slower
    /// decay of `P_{k−1}`.
    pub nu_diag: f64,
    pub size_c: f64,
    pub log_size_c: f64,
    pub eta_eff: f64,
    /// Envelope of the regularity quotient in the top bin `t ∈ (1/2, 1]`.
    pub regularity_c: f64,
    /// Largest regularity quotient over `regularity_c · t^eta_eff`.
    pub max_violation: f64,
    pub second_diff_ratio: f64,
    pub second_diff_samples: usize,
    /// `max_x |Σ_y Q_k(x,y)μ(y) − [k = 0]|` over all `k`.
    pub cancellation_error: f64,
}

#[derive(Debug, Clone)]
pub struct OperatorFamily {
    pub kind: FamilyKind,
    pub params: FamilyParams,
    n: usize,
    mu: Vec<f64>,
    p: Vec<Vec<f64>>,
    /// Worst μ-weighted marginal deviation over all `P_k`.
    pub marginal_error: f64,
    /// Sinkhorn iterations used per level (zero for Haar).
    pub iterations: Vec<usize>,
    pub diagnostics: Option<IATIDiagnostics>,
}

/// Unscaled Gaussian-type kernel value.
#[inline]
pub fn gauss_kernel_value(d: f64, scale: f64, nu: f64, a: f64) -> f64 {
    (-nu * (d / scale).powf(a)).exp()
}

pub fn build_haar_family(s: &QuasiMetricSpace, dys: &DyadicSystem) -> Result<OperatorFamily> {
    if !dys.deepest_is_singleton() {
        return Err(HardyError::ShallowDyadic { level: dys.k_max });
    }
    let n = s.n();
    let p = par::map_indices(dys.levels(), |k| {
        let masses: Vec<f64> = (0..dys.cubes[k].len()).map(|a| dys.cube_mass(s, k, a)).collect();
        let mut m = vec![0.0; n * n];
        for q in &dys.cubes[k] {
            let w = 1.0 / q.iter().map(|&x| s.mu(x)).sum::<f64>();
            for &x in q {
                for &y in q {
                    m[x * n + y] = w;
                }
            }
        }
        debug_assert_eq!(masses.len(), dys.cubes[k].len());
        m
    });
    let mut fam = OperatorFamily {
        kind: FamilyKind::HaarMartingale,
        params: FamilyParams { nu: 1.0, a: 1.0, delta: dys.delta, k_top: dys.k_max },
        n,
        mu: s.masses().to_vec(),
        p,
        marginal_error: 0.0,
        iterations: vec![0; dys.levels()],
        diagnostics: None,
    };
    fam.marginal_error = fam.measure_marginal_error();
    Ok(fam)
}

/// Symmetric Sinkhorn scaling of `exp(−ν (d/scale)^a)`.
fn sinkhorn_level(s: &QuasiMetricSpace, scale: f64, nu: f64, a: f64, level: usize) -> Result<(Vec<f64>, usize)> {
    let n = s.n();
    let kernel: Vec<f64> = {
        let rows = par::map_indices(n, |x| {
            s.row(x).iter().map(|&d| gauss_kernel_value(d, scale, nu, a)).collect::<Vec<_>>()
        });
        rows.concat()
    };
    let mu = s.masses();
    let mut u = vec![1.0 / s.total_mass().sqrt(); n];
    let mut iterations = 0;
    let mut residual;
    loop {
        let um: Vec<f64> = u.iter().zip(mu).map(|(a, b)| a * b).collect();
        let v = par::map_indices(n, |x| {
            kernel[x * n..(x + 1) * n].iter().zip(&um).map(|(k, w)| k * w).sum::<f64>()
        });
        residual = u.iter().zip(&v).map(|(a, b)| (a * b - 1.0).abs()).fold(0.0, f64::max);
        if residual <= SINKHORN_TOL * 0.5 || iterations >= SINKHORN_MAX_ITER {
            break;
        }
        for (ux, vx) in u.iter_mut().zip(&v) {
            *ux = (*ux / vx).sqrt();
        }
        iterations += 1;
    }
    let mut p = vec![0.0; n * n];
    for x in 0..n {
        for y in x..n {
            let v = u[x] * kernel[x * n + y] * u[y];
            p[x * n + y] = v;
            p[y * n + x] = v;
        }
    }
    let err = marginal_error_of(&p, mu);
    if err > SINKHORN_TOL {
        return Err(HardyError::SinkhornDiverged { level, residual: err.max(residual), iterations });
    }
    Ok((p, iterations))
}

fn marginal_error_of(p: &[f64], mu: &[f64]) -> f64 {
    let n = mu.len();
    (0..n)
        .map(|x| {
            let row: f64 = (0..n).map(|y| p[x * n + y] * mu[y]).sum();
            let col: f64 = (0..n).map(|y| p[y * n + x] * mu[y]).sum();
            (row - 1.0).abs().max((col - 1.0).abs())
        })
        .fold(0.0, f64::max)
}

fn identity_gap(p: &[f64], mu: &[f64]) -> f64 {
    let n = mu.len();
    let mut gap: f64 = 0.0;
    for x in 0..n {
        for y in 0..n {
            let target = if x == y { 1.0 } else { 0.0 };
            gap = gap.max((p[x * n + y] * mu[y] - target).abs());
        }
    }
    gap
}

pub fn build_gauss_sinkhorn_family(
    s: &QuasiMetricSpace,
    dys: &DyadicSystem,
    nu: f64,
    a: f64,
) -> Result<OperatorFamily> {
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(HardyError::Parameter(format!("nu must be positive, got {nu}")));
    }
    if !(a > 0.0 && a <= 1.0) {
        return Err(HardyError::Parameter(format!("a must lie in (0, 1], got {a}")));
    }
    let delta = dys.delta;
    let built = par::map_indices(dys.levels(), |k| sinkhorn_level(s, delta.powi(k as i32), nu, a, k));
    let mut p = Vec::with_capacity(dys.levels());
    let mut iterations = Vec::with_capacity(dys.levels());
    for r in built {
        let (m, it) = r?;
        p.push(m);
        iterations.push(it);
    }
    let mut k = dys.k_max;
    while identity_gap(&p[k], s.masses()) > IDENTITY_TOL && k < dys.k_max + MAX_EXTRA_LEVELS {
        k += 1;
        let (m, it) = sinkhorn_level(s, delta.powi(k as i32), nu, a, k)?;
        p.push(m);
        iterations.push(it);
    }
    if k > dys.k_max {
        log::debug!("gauss family extended from level {} to {}", dys.k_max, k);
    }
    let mut fam = OperatorFamily {
        kind: FamilyKind::GaussSinkhorn,
        params: FamilyParams { nu, a, delta, k_top: k },
        n: s.n(),
        mu: s.masses().to_vec(),
        p,
        marginal_error: 0.0,
        iterations,
        diagnostics: None,
    };
    fam.marginal_error = fam.measure_marginal_error();
    Ok(fam)
}

impl OperatorFamily {
    /// Assemble a family from stored kernels (used by the binary reader).
    pub fn from_parts(kind: FamilyKind, params: FamilyParams, mu: Vec<f64>, p: Vec<Vec<f64>>) -> Result<Self> {
        let n = mu.len();
        if p.len() != params.k_top + 1 {
            return Err(HardyError::Shape { expected: params.k_top + 1, got: p.len() });
        }
        for m in &p {
            if m.len() != n * n {
                return Err(HardyError::Shape { expected: n * n, got: m.len() });
            }
        }
        let iterations = vec![0; p.len()];
        let mut fam = Self { kind, params, n, mu, p, marginal_error: 0.0, iterations, diagnostics: None };
        fam.marginal_error = fam.measure_marginal_error();
        Ok(fam)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of levels `K + 1`.
    pub fn levels(&self) -> usize {
        self.p.len()
    }

    pub fn masses(&self) -> &[f64] {
        &self.mu
    }

    pub fn scale(&self, k: usize) -> f64 {
        self.params.delta.powi(k as i32)
    }

    pub fn p_matrix(&self, k: usize) -> &[f64] {
        &self.p[k]
    }

    #[inline]
    pub fn p(&self, k: usize, x: usize, y: usize) -> f64 {
        self.p[k][x * self.n + y]
    }

    #[inline]
    pub fn q(&self, k: usize, x: usize, y: usize) -> f64 {
        if k == 0 {
            self.p(0, x, y)
        } else {
            self.p(k, x, y) - self.p(k - 1, x, y)
        }
    }

    pub fn q_matrix(&self, k: usize) -> Vec<f64> {
        if k == 0 {
            return self.p[0].clone();
        }
        self.p[k].iter().zip(&self.p[k - 1]).map(|(a, b)| a - b).collect()
    }

    fn check(&self, k: usize, f: &[f64]) -> Result<()> {
        if k >= self.levels() {
            return Err(HardyError::Parameter(format!(
                "level {k} beyond the family's last level {}",
                self.levels() - 1
            )));
        }
        if f.len() != self.n {
            return Err(HardyError::Shape { expected: self.n, got: f.len() });
        }
        Ok(())
    }

    fn apply_matrix(&self, m: &[f64], f: &[f64]) -> Vec<f64> {
        let n = self.n;
        let fm: Vec<f64> = f.iter().zip(&self.mu).map(|(a, b)| a * b).collect();
        par::map_indices(n, |x| m[x * n..(x + 1) * n].iter().zip(&fm).map(|(k, v)| k * v).sum())
    }

    /// `P_k f`.
    pub fn apply_p(&self, k: usize, f: &[f64]) -> Result<Vec<f64>> {
        self.check(k, f)?;
        Ok(self.apply_matrix(&self.p[k], f))
    }

    /// `Q_k f`, computed as `P_k f − P_{k−1} f`.
    pub fn apply_q(&self, k: usize, f: &[f64]) -> Result<Vec<f64>> {
        self.check(k, f)?;
        let pk = self.apply_matrix(&self.p[k], f);
        if k == 0 {
            return Ok(pk);
        }
        let prev = self.apply_matrix(&self.p[k - 1], f);
        Ok(pk.iter().zip(&prev).map(|(a, b)| a - b).collect())
    }

    /// `P_k f` for every level.
    pub fn apply_all_p(&self, f: &[f64]) -> Result<Vec<Vec<f64>>> {
        (0..self.levels()).map(|k| self.apply_p(k, f)).collect()
    }

    /// `Q_k f` for every level, from one pass of `P_k f`.
    pub fn apply_all_q(&self, f: &[f64]) -> Result<Vec<Vec<f64>>> {
        let pf = self.apply_all_p(f)?;
        let mut out = Vec::with_capacity(pf.len());
        for k in 0..pf.len() {
            if k == 0 {
                out.push(pf[0].clone());
            } else {
                out.push(pf[k].iter().zip(&pf[k - 1]).map(|(a, b)| a - b).collect());
            }
        }
        Ok(out)
    }

    fn measure_marginal_error(&self) -> f64 {
        self.p.iter().map(|m| marginal_error_of(m, &self.mu)).fold(0.0, f64::max)
    }

    /// `max_{k,x} |Σ_y Q_k(x,y)μ(y) − [k = 0]|`, rows and columns.
    pub fn cancellation_error(&self) -> f64 {
        let n = self.n;
        let mut worst: f64 = 0.0;
        for k in 0..self.levels() {
            let target = if k == 0 { 1.0 } else { 0.0 };
            for x in 0..n {
                let mut row = 0.0;
                let mut col = 0.0;
                for y in 0..n {
                    row += self.q(k, x, y) * self.mu[y];
                    col += self.q(k, y, x) * self.mu[y];
                }
                worst = worst.max((row - target).abs()).max((col - target).abs());
            }
        }
        worst
    }

    /// Largest `|P_k(x,y) − P_k(y,x)|`.
    pub fn symmetry_error(&self) -> f64 {
        let n = self.n;
        let mut worst: f64 = 0.0;
        for m in &self.p {
            for x in 0..n {
                for y in x + 1..n {
                    worst = worst.max((m[x * n + y] - m[y * n + x]).abs());
                }
            }
        }
        worst
    }
}

/// Envelope bins of the regularity quotient: bin `b` holds `t ∈ (2^{-b-1}, 2^{-b}]`.
const REG_BINS: usize = 48;

fn reg_bin(t: f64) -> usize {
    // t ∈ (0, 1]
    let b = (-t.log2()).floor();
    let b = if t == 1.0 { 0.0 } else { b };
    (b.max(0.0) as usize).min(REG_BINS - 1)
}

/// Largest `η` with `E_b ≤ E_r 2^{−(b−r)η}` for every populated bin, `r` the
/// coarsest populated bin (sparse distance sets may leave the top bins empty).
/// Returns 0 when the finest populated bin keeps at least half the top envelope
/// (a jump).
pub fn fit_eta(envelope: &[f64]) -> f64 {
    let populated: Vec<(usize, f64)> = envelope
        .iter()
        .copied()
        .enumerate()
        .filter(|(_, e)| *e > 0.0)
        .collect();
    let Some(&(top_b, top)) = populated.iter().max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0))) else {
        // quotient vanishes identically: constant kernels are infinitely regular
        return 1.0;
    };
    let (fine_b, fine) = *populated.last().expect("non-empty");
    if fine_b == top_b || fine >= top / 2.0 {
        return 0.0;
    }
    let (ref_b, ref_e) = populated[0];
    let mut eta: f64 = 1.0;
    for &(b, e) in &populated[1..] {
        eta = eta.min((ref_e / e).log2() / (b - ref_b) as f64);
    }
    eta.clamp(0.0, 1.0)
}

/// Measure the size, regularity and second-difference constants and the
/// cancellation error of a family. Quotients are formed in the log domain.
pub fn verify_iati(fam: &OperatorFamily, s: &QuasiMetricSpace, seed: u64) -> IATIDiagnostics {
    let n = s.n();
    let nu_diag = fam.params.nu * fam.params.delta.powf(fam.params.a);
    let a = fam.params.a;
    let levels = fam.levels();
    let log_vols: Vec<Vec<f64>> = (0..levels)
        .map(|k| (0..n).map(|x| s.ball_measure(x, fam.scale(k)).ln()).collect())
        .collect();
    let log_weight = |k: usize, x: usize, y: usize| -> f64 {
        0.5 * (log_vols[k][x] + log_vols[k][y]) + nu_diag * (s.d(x, y) / fam.scale(k)).powf(a)
    };

    let log_size = par::map_indices(levels, |k| {
        let mut best = f64::NEG_INFINITY;
        for x in 0..n {
            for y in 0..n {
                let q = fam.q(k, x, y).abs();
                if q > 0.0 {
                    best = best.max(q.ln() + log_weight(k, x, y));
                }
            }
        }
        best
    })
    .into_iter()
    .fold(f64::NEG_INFINITY, f64::max);

    // regularity envelopes over pairs with 0 < d(x,x') ≤ δ^k
    let pairs_per_level: Vec<usize> = (0..levels)
        .map(|k| (0..n).map(|x| s.ball_len(x, next_up(fam.scale(k)))).sum::<usize>())
        .collect();
    let work: usize = pairs_per_level.iter().sum::<usize>() * n;
    let stride = work.div_ceil(REGULARITY_BUDGET).max(1);
    let per_level: Vec<(Vec<f64>, Vec<(f64, f64)>)> = par::map_indices(levels, |k| {
        let scale = fam.scale(k);
        let mut env = vec![0.0f64; REG_BINS];
        let mut samples = Vec::new();
        for x in (0..n).step_by(stride) {
            for &xp in s.ball_members(x, next_up(scale)) {
                let xp = xp as usize;
                if xp == x {
                    continue;
                }
                let t = s.d(x, xp) / scale;
                let mut worst = 0.0f64;
                for y in 0..n {
                    let diff = (fam.q(k, x, y) - fam.q(k, xp, y)).abs()
                        + (fam.q(k, y, x) - fam.q(k, y, xp)).abs();
                    if diff > 0.0 {
                        worst = worst.max((diff.ln() + log_weight(k, x, y)).exp());
                    }
                }
                let b = reg_bin(t);
                env[b] = env[b].max(worst);
                samples.push((t, worst));
            }
        }
        (env, samples)
    });
    let mut envelope = vec![0.0f64; REG_BINS];
    for (env, _) in &per_level {
        for (e, v) in envelope.iter_mut().zip(env) {
            *e = e.max(*v);
        }
    }
    let eta_eff = fit_eta(&envelope);
    // constant of `quotient ≤ C t^η` carried from the coarsest populated bin
    let regularity_c = envelope
        .iter()
        .enumerate()
        .find(|(_, e)| **e > 0.0)
        .map_or(0.0, |(b, e)| e * 2f64.powf(b as f64 * eta_eff));
    let max_violation = if regularity_c > 0.0 {
        per_level
            .iter()
            .flat_map(|(_, s)| s.iter())
            .map(|&(t, q)| q / (regularity_c * t.powf(eta_eff)))
            .fold(0.0, f64::max)
    } else {
        0.0
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut second: f64 = 0.0;
    for _ in 0..SECOND_DIFF_SAMPLES {
        let k = rng.random_range(0..levels);
        let scale = fam.scale(k);
        let x = rng.random_range(0..n);
        let y = rng.random_range(0..n);
        let bx = s.ball_members(x, next_up(scale));
        let by = s.ball_members(y, next_up(scale));
        let xp = bx[rng.random_range(0..bx.len())] as usize;
        let yp = by[rng.random_range(0..by.len())] as usize;
        if xp == x || yp == y {
            continue;
        }
        let dd = (fam.q(k, x, y) - fam.q(k, xp, y)) - (fam.q(k, x, yp) - fam.q(k, xp, yp));
        if dd == 0.0 {
            continue;
        }
        let t1 = s.d(x, xp) / scale;
        let t2 = s.d(y, yp) / scale;
        let log_ratio = dd.abs().ln() + log_weight(k, x, y) - eta_eff * (t1.ln() + t2.ln());
        second = second.max(log_ratio.exp());
    }

    IATIDiagnostics {
        nu_diag,
        size_c: log_size.exp(),
        log_size_c: log_size,
        eta_eff,
        regularity_c,
        max_violation,
        second_diff_ratio: second,
        second_diff_samples: SECOND_DIFF_SAMPLES,
        cancellation_error: fam.cancellation_error(),
    }
}

/// Smallest float above `r`, turning the strict ball `d < r` into `d ≤ r`.
#[inline]
pub(crate) fn next_up(r: f64) -> f64 {
    if r.is_finite() && r > 0.0 {
        f64::from_bits(r.to_bits() + 1)
    } else {
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(n: usize, spacing: f64) -> QuasiMetricSpace {
        QuasiMetricSpace::from_fn(n, vec![1.0; n], 1.0, |i, j| (i as f64 - j as f64).abs() * spacing)
            .unwrap()
    }

    #[test]
    fn haar_two_points() {
        let s = line(2, 1.0 / 8.0);
        let dys = DyadicSystem::build(&s, None, None).unwrap();
        assert_eq!(dys.k_max, 1);
        let fam = build_haar_family(&s, &dys).unwrap();
        assert!(fam.p_matrix(0).iter().all(|&v| v == 0.5));
        let q1 = fam.q_matrix(1);
        assert_eq!(q1, vec![0.5, -0.5, -0.5, 0.5]);
        assert_eq!(fam.cancellation_error(), 0.0);
    }

    #[test]
    fn haar_kills_constants_and_is_plancherel() {
        let s = line(4, 1.0 / 32.0);
        let dys = DyadicSystem::build(&s, None, None).unwrap();
        let fam = build_haar_family(&s, &dys).unwrap();
        let one = vec![1.0; 4];
        for k in 1..fam.levels() {
            assert!(fam.apply_q(k, &one).unwrap().iter().all(|&v| v == 0.0));
        }
        let e0 = vec![1.0, 0.0, 0.0, 0.0];
        let total: f64 = fam
            .apply_all_q(&e0)
            .unwrap()
            .iter()
            .map(|q| q.iter().map(|v| v * v).sum::<f64>())
            .sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn haar_requires_singleton_deepest_level() {
        let s = line(8, 1.0 / 32.0);
        let dys = DyadicSystem::build(&s, None, Some(0)).unwrap();
        assert!(matches!(build_haar_family(&s, &dys), Err(HardyError::ShallowDyadic { .. })));
    }

    #[test]
    fn gauss_single_point_and_two_points() {
        let s = QuasiMetricSpace::from_flat(1, vec![0.0], vec![2.0], 1.0).unwrap();
        let dys = DyadicSystem::build(&s, None, None).unwrap();
        let fam = build_gauss_sinkhorn_family(&s, &dys, 1.0, 1.0).unwrap();
        assert!((fam.p(0, 0, 0) - 0.5).abs() < 1e-12);

        let s = line(2, 1.0);
        let dys = DyadicSystem::build(&s, None, None).unwrap();
        let fam = build_gauss_sinkhorn_family(&s, &dys, 1.0, 1.0).unwrap();
        assert!(fam.marginal_error <= SINKHORN_TOL);
        assert_eq!(fam.symmetry_error(), 0.0);
        assert!((gauss_kernel_value(1.0, 1.0, 1.0, 1.0) - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn gauss_parameter_errors() {
        let s = line(3, 1.0);
        let dys = DyadicSystem::build(&s, None, None).unwrap();
        assert!(build_gauss_sinkhorn_family(&s, &dys, 0.0, 1.0).is_err());
        assert!(build_gauss_sinkhorn_family(&s, &dys, 1.0, 1.5).is_err());
    }

    #[test]
    fn eta_fit_shapes() {
        let mut jump = vec![0.0; REG_BINS];
        jump[0] = 1.0;
        jump[5] = 0.9;
        assert_eq!(fit_eta(&jump), 0.0);
        let mut lip = vec![0.0; REG_BINS];
        for (b, e) in lip.iter_mut().enumerate().take(6) {
            *e = 2f64.powi(-(b as i32));
        }
        assert!((fit_eta(&lip) - 1.0).abs() < 1e-12);
        // same slope with the two coarsest bins empty
        let mut sparse = vec![0.0; REG_BINS];
        sparse[2] = 1.0;
        sparse[4] = 0.25f64.sqrt().powi(2);
        sparse[6] = 0.0625;
        assert!((fit_eta(&sparse) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn diagnostics_distinguish_families() {
        let s = line(32, 1.0 / 16.0);
        let dys = DyadicSystem::build(&s, None, None).unwrap();
        let haar = build_haar_family(&s, &dys).unwrap();
        let gauss = build_gauss_sinkhorn_family(&s, &dys, 1.0, 1.0).unwrap();
        let dh = verify_iati(&haar, &s, 1);
        let dg = verify_iati(&gauss, &s, 1);
        assert_eq!(dh.eta_eff, 0.0);
        assert!(dg.eta_eff > 0.0, "{dg:?}");
        assert!(dg.size_c.is_finite() && dh.size_c.is_finite());
        assert!(dg.cancellation_error <= 1e-9);
        assert!(dh.cancellation_error <= 1e-14);
    }
}
