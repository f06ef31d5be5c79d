//! Test-function norms and maximal functions.
//!
//! The grand maximal function runs over an infinite test class, so it is
//! replaced by a finite [`TestDictionary`]: per anchor point, kernel rows,
//! normalized cube indicators and tent bumps at every dictionary level. Since
//! the sup is taken over fewer functions, `f*_{0,dict}` is a lower bound of the
//! true grand maximal function.

use crate::dyadic::{DyadicSystem, SubcubeIndex};
use crate::error::{HardyError, Result};
use crate::kernels::OperatorFamily;
use crate::par;
use crate::space::QuasiMetricSpace;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GNormParams {
    pub x1: usize,
    pub r: f64,
    pub beta: f64,
    pub gamma: f64,
}

/// `‖φ‖_{G(x1, r, β, γ)}`, the smallest constant in both the size and the
/// regularity conditions, by brute force over all points and admissible pairs.
pub fn g_norm(s: &QuasiMetricSpace, phi: &[f64], p: GNormParams) -> Result<f64> {
    if !(p.r > 0.0) {
        return Err(HardyError::Parameter(format!("scale r must be positive, got {}", p.r)));
    }
    if phi.len() != s.n() {
        return Err(HardyError::Shape { expected: s.n(), got: phi.len() });
    }
    Ok(g_norms(s, phi, p.x1, &[p.r], p.beta, p.gamma)[0])
}

/// [`g_norm`] at several scales in one pass over the pairs.
pub fn g_norms(s: &QuasiMetricSpace, phi: &[f64], x1: usize, radii: &[f64], beta: f64, gamma: f64) -> Vec<f64> {
    let n = s.n();
    let a0 = s.a0();
    let v_r: Vec<f64> = radii.iter().map(|&r| s.ball_measure(x1, r)).collect();
    let support: Vec<usize> = (0..n).filter(|&x| phi[x] != 0.0).collect();
    let mut in_support = vec![false; n];
    for &x in &support {
        in_support[x] = true;
    }
    let mut best = vec![0.0f64; radii.len()];
    for x in 0..n {
        let dx = s.d(x1, x);
        let vx = s.volume_between(x1, x);
        // the weight (V_r(x1) + V(x1,x)) ((r + d)/r)^γ, per scale
        let weights: Vec<f64> = radii
            .iter()
            .zip(&v_r)
            .map(|(&r, &v)| (v + vx) * ((r + dx) / r).powf(gamma))
            .collect();
        if in_support[x] {
            for (b, w) in best.iter_mut().zip(&weights) {
                *b = b.max(phi[x].abs() * w);
            }
        }
        let mut check = |y: usize| {
            if y == x || phi[x] == phi[y] {
                return;
            }
            let dxy = s.d(x, y);
            let jump = (phi[x] - phi[y]).abs();
            for (i, &r) in radii.iter().enumerate() {
                let reach = r + dx;
                if dxy <= reach / (2.0 * a0) {
                    best[i] = best[i].max(jump * (reach / dxy).powf(beta) * weights[i]);
                }
            }
        };
        if in_support[x] {
            (0..n).for_each(&mut check);
        } else {
            support.iter().for_each(|&y| check(y));
        }
    }
    best
}

/// Hardy–Littlewood maximal function over all balls `B ∋ x`.
pub fn hl_maximal(s: &QuasiMetricSpace, f: &[f64]) -> Vec<f64> {
    let n = s.n();
    let per_center = par::map_indices(n, |c| {
        let (order, dist) = s.sorted_from(c);
        let mass = s.prefix_mass_from(c);
        let mut sum = 0.0;
        // averages at group ends (ties in distance share one ball)
        let mut avg = vec![0.0; n];
        for i in 0..n {
            let y = order[i] as usize;
            sum += f[y].abs() * s.mu(y);
            avg[i] = if i + 1 == n || dist[i + 1] > dist[i] { sum / mass[i + 1] } else { f64::NEG_INFINITY };
        }
        let mut out = vec![0.0; n];
        let mut run = f64::NEG_INFINITY;
        for i in (0..n).rev() {
            run = run.max(avg[i]);
            out[order[i] as usize] = run;
        }
        out
    });
    let mut m = vec![0.0f64; n];
    for row in per_center {
        for (a, b) in m.iter_mut().zip(row) {
            *a = a.max(b);
        }
    }
    m
}

/// `M^+_0 f`: levels `k ≤ N` take the sup of `|P_k f|` over the subcube
/// `Q_α^{k,m} ∋ x`; levels `k ≥ N` use `|P_k f(x)|`.
pub fn radial_local_maximal(
    fam: &OperatorFamily,
    dys: &DyadicSystem,
    subidx: &SubcubeIndex,
    f: &[f64],
    n_low: usize,
) -> Result<Vec<f64>> {
    let pf = fam.apply_all_p(f)?;
    radial_from_pf(&pf, dys, subidx, n_low)
}

pub(crate) fn radial_from_pf(
    pf: &[Vec<f64>],
    dys: &DyadicSystem,
    subidx: &SubcubeIndex,
    n_low: usize,
) -> Result<Vec<f64>> {
    if n_low >= pf.len() {
        return Err(HardyError::Parameter(format!(
            "N = {n_low} beyond the family's last level {}",
            pf.len() - 1
        )));
    }
    let n = dys.n();
    let mut out = vec![0.0f64; n];
    for (k, pk) in pf.iter().enumerate().take(n_low + 1) {
        let l = subidx.sub_level.get(k).copied().flatten().ok_or(HardyError::MissingSubcube(k))?;
        let mut sup = vec![0.0f64; dys.cubes[l].len()];
        for x in 0..n {
            let b = dys.cube_of[l][x];
            sup[b] = sup[b].max(pk[x].abs());
        }
        for x in 0..n {
            out[x] = out[x].max(sup[dys.cube_of[l][x]]);
        }
    }
    for pk in &pf[n_low..] {
        for (o, v) in out.iter_mut().zip(pk) {
            *o = o.max(v.abs());
        }
    }
    Ok(out)
}

/// `M_{θ,0} f(x) = max_k max_{d(x,y) < θ δ^k} |P_k f(y)|`.
pub fn nontangential_maximal(fam: &OperatorFamily, s: &QuasiMetricSpace, f: &[f64], theta: f64) -> Result<Vec<f64>> {
    if !(theta > 0.0) {
        return Err(HardyError::Parameter(format!("theta must be positive, got {theta}")));
    }
    let pf = fam.apply_all_p(f)?;
    Ok(nontangential_from_pf(&pf, fam, s, theta))
}

pub(crate) fn nontangential_from_pf(pf: &[Vec<f64>], fam: &OperatorFamily, s: &QuasiMetricSpace, theta: f64) -> Vec<f64> {
    par::map_indices(s.n(), |x| {
        let mut best = 0.0f64;
        for (k, pk) in pf.iter().enumerate() {
            for &y in s.ball_members(x, theta * fam.scale(k)) {
                best = best.max(pk[y as usize].abs());
            }
        }
        best
    })
}

/// `(Σ_x |F(x)|^p μ(x))^{1/p}`, or the max for `p = ∞`.
pub fn lp_quasinorm(s: &QuasiMetricSpace, f: &[f64], p: f64) -> Result<f64> {
    if !(p > 0.0) {
        return Err(HardyError::Parameter(format!("p must be positive, got {p}")));
    }
    if f.len() != s.n() {
        return Err(HardyError::Shape { expected: s.n(), got: f.len() });
    }
    if p.is_infinite() {
        return Ok(f.iter().map(|v| v.abs()).fold(0.0, f64::max));
    }
    let sum: f64 = f.iter().zip(s.masses()).map(|(v, m)| v.abs().powf(p) * m).sum();
    Ok(sum.powf(1.0 / p))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryKind {
    KernelRow,
    CubeIndicator,
    Tent,
    Custom,
}

/// A dictionary function anchored at one point, stored sparsely.
#[derive(Debug, Clone, Serialize)]
pub struct DictEntry {
    pub kind: EntryKind,
    pub level: usize,
    pub support: Vec<u32>,
    pub values: Vec<f64>,
    /// `min_r ‖φ‖_{G(x, r, β, γ)}` over the dictionary scales.
    pub norm: f64,
    /// The scale attaining `norm`.
    pub best_r: f64,
    /// `‖φ‖_{G(x, r, β, γ)}` for every dictionary scale, in scale order.
    pub norms: Vec<f64>,
}

impl DictEntry {
    pub fn pair(&self, f: &[f64], mu: &[f64]) -> f64 {
        self.support
            .iter()
            .zip(&self.values)
            .map(|(&y, &v)| f[y as usize] * v * mu[y as usize])
            .sum()
    }

    pub fn dense(&self, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        for (&y, &v) in self.support.iter().zip(&self.values) {
            out[y as usize] = v;
        }
        out
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TestDictionary {
    pub beta: f64,
    pub gamma: f64,
    /// Scales `δ^l ≤ 1`, `l = 0..=levels`.
    pub radii: Vec<f64>,
    /// `entries[x]`: functions anchored at `x`.
    pub entries: Vec<Vec<DictEntry>>,
    mu: Vec<f64>,
}

fn sparse(values: Vec<f64>) -> (Vec<u32>, Vec<f64>) {
    let mut idx = Vec::new();
    let mut val = Vec::new();
    for (y, v) in values.into_iter().enumerate() {
        if v != 0.0 {
            idx.push(y as u32);
            val.push(v);
        }
    }
    (idx, val)
}

impl TestDictionary {
    /// Dictionary with levels `0..=levels`: kernel rows `P_l(x, ·)`, normalized
    /// cube indicators `1_{Q_l(x)}/μ(Q_l(x))` and tents of radius `δ^l`, `2δ^l` at `x`.
    pub fn build(
        s: &QuasiMetricSpace,
        fam: &OperatorFamily,
        dys: &DyadicSystem,
        beta: f64,
        gamma: f64,
        levels: usize,
    ) -> Result<Self> {
        if !(beta > 0.0 && beta <= 1.0 && gamma > 0.0) {
            return Err(HardyError::Parameter(format!(
                "need beta in (0, 1] and gamma > 0, got beta = {beta}, gamma = {gamma}"
            )));
        }
        let levels = levels.min(fam.levels() - 1).min(dys.k_max);
        let radii: Vec<f64> = (0..=levels).map(|l| dys.scale(l)).filter(|&r| r <= 1.0).collect();
        let n = s.n();
        let entries = par::map_indices(n, |x| {
            let mut out = Vec::new();
            for l in 0..=levels {
                let row: Vec<f64> = (0..n).map(|y| fam.p(l, x, y)).collect();
                out.push((EntryKind::KernelRow, l, row));
                let a = dys.cube_of[l][x];
                let w = 1.0 / dys.cube_mass(s, l, a);
                let mut ind = vec![0.0; n];
                for &y in &dys.cubes[l][a] {
                    ind[y] = w;
                }
                out.push((EntryKind::CubeIndicator, l, ind));
                for rho in [dys.scale(l), 2.0 * dys.scale(l)] {
                    let tent: Vec<f64> = (0..n).map(|y| (1.0 - s.d(x, y) / rho).max(0.0)).collect();
                    out.push((EntryKind::Tent, l, tent));
                }
            }
            out.into_iter()
                .map(|(kind, level, values)| Self::entry(s, x, &radii, beta, gamma, kind, level, values))
                .collect()
        });
        Ok(Self { beta, gamma, radii, entries, mu: s.masses().to_vec() })
    }

    /// Dictionary holding exactly the given functions at every anchor.
    pub fn from_functions(
        s: &QuasiMetricSpace,
        functions: &[Vec<f64>],
        radii: Vec<f64>,
        beta: f64,
        gamma: f64,
    ) -> Result<Self> {
        if functions.is_empty() || radii.is_empty() {
            return Err(HardyError::EmptyDictionary);
        }
        let entries = par::map_indices(s.n(), |x| {
            functions
                .iter()
                .map(|phi| Self::entry(s, x, &radii, beta, gamma, EntryKind::Custom, 0, phi.clone()))
                .collect()
        });
        Ok(Self { beta, gamma, radii, entries, mu: s.masses().to_vec() })
    }

    #[allow(clippy::too_many_arguments)]
    fn entry(
        s: &QuasiMetricSpace,
        x: usize,
        radii: &[f64],
        beta: f64,
        gamma: f64,
        kind: EntryKind,
        level: usize,
        values: Vec<f64>,
    ) -> DictEntry {
        let norms = g_norms(s, &values, x, radii, beta, gamma);
        let (best_i, norm) = norms
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
        let (support, values) = sparse(values);
        DictEntry { kind, level, support, values, norm, best_r: radii[best_i], norms }
    }

    pub fn len(&self) -> usize {
        self.entries.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// `f*_{0,dict}(x) = max_φ |⟨f, φ⟩| / min_r ‖φ‖_{G(x, r, β, γ)}`.
pub fn grand_maximal_dict(dict: &TestDictionary, f: &[f64]) -> Result<Vec<f64>> {
    if dict.is_empty() {
        return Err(HardyError::EmptyDictionary);
    }
    if f.len() != dict.entries.len() {
        return Err(HardyError::Shape { expected: dict.entries.len(), got: f.len() });
    }
    Ok(par::map_slice(&dict.entries, |list| {
        list.iter()
            .filter(|e| e.norm > 0.0)
            .map(|e| e.pair(f, &dict.mu).abs() / e.norm)
            .fold(0.0, f64::max)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::refine_subcubes;
    use crate::kernels::build_haar_family;

    fn line(n: usize, spacing: f64) -> QuasiMetricSpace {
        QuasiMetricSpace::from_fn(n, vec![1.0; n], 1.0, |i, j| (i as f64 - j as f64).abs() * spacing)
            .unwrap()
    }

    #[test]
    fn g_norm_examples() {
        let s = line(2, 1.0);
        let p = GNormParams { x1: 0, r: 1.0, beta: 0.5, gamma: 0.5 };
        assert_eq!(g_norm(&s, &[0.0, 0.0], p).unwrap(), 0.0);
        // size terms: 1 at x = 0; one admissible pair (x, y) = (1, 0):
        // 1 · (2/1)^0.5 · (V_1(0) + V(0,1)) · (2/1)^0.5 = 4
        assert!((g_norm(&s, &[1.0, 0.0], p).unwrap() - 4.0).abs() < 1e-12);
        let single = QuasiMetricSpace::from_flat(1, vec![0.0], vec![3.0], 1.0).unwrap();
        let q = GNormParams { x1: 0, r: 1.0, beta: 0.5, gamma: 0.5 };
        assert_eq!(g_norm(&single, &[2.0], q).unwrap(), 6.0);
        assert!(g_norm(&s, &[1.0, 0.0], GNormParams { r: 0.0, ..p }).is_err());
    }

    #[test]
    fn hl_examples() {
        let s = line(2, 1.0);
        assert_eq!(hl_maximal(&s, &[1.0, 0.0]), vec![1.0, 0.5]);
        assert_eq!(hl_maximal(&s, &[-3.0, -3.0]), vec![3.0, 3.0]);
        assert_eq!(hl_maximal(&s, &[0.0, 0.0]), vec![0.0, 0.0]);
    }

    #[test]
    fn lp_examples() {
        let s = line(2, 1.0);
        assert_eq!(lp_quasinorm(&s, &[3.0, 4.0], 2.0).unwrap(), 5.0);
        assert_eq!(lp_quasinorm(&s, &[1.0, 1.0], 0.5).unwrap(), 4.0);
        assert_eq!(lp_quasinorm(&s, &[1.0, -7.0], f64::INFINITY).unwrap(), 7.0);
        assert!(lp_quasinorm(&s, &[1.0, 1.0], 0.0).is_err());
    }

    #[test]
    fn radial_and_nontangential_on_haar() {
        let s = line(4, 1.0 / 8.0);
        let dys = DyadicSystem::build(&s, None, None).unwrap();
        let fam = build_haar_family(&s, &dys).unwrap();
        let idx = refine_subcubes(&dys, dys.min_j0()).unwrap();
        let one = vec![1.0; 4];
        for v in radial_local_maximal(&fam, &dys, &idx, &one, 0).unwrap() {
            assert!((v - 1.0).abs() < 1e-15);
        }
        let e0 = vec![1.0, 0.0, 0.0, 0.0];
        let m = radial_local_maximal(&fam, &dys, &idx, &e0, 0).unwrap();
        // direct: sup over all P_k e0(x), k ≥ 0, plus level 0 over the subcube of x
        let pf = fam.apply_all_p(&e0).unwrap();
        for x in 0..4 {
            let (l, b) = idx.subcube_of(&dys, 0, x).unwrap();
            let low = dys.cubes[l][b].iter().map(|&z| pf[0][z].abs()).fold(0.0, f64::max);
            let high = pf.iter().map(|p| p[x].abs()).fold(0.0, f64::max);
            assert_eq!(m[x], low.max(high));
        }
        let tiny = nontangential_maximal(&fam, &s, &e0, 1e-6).unwrap();
        for x in 0..4 {
            assert_eq!(tiny[x], pf.iter().map(|p| p[x].abs()).fold(0.0, f64::max));
        }
        assert!(nontangential_maximal(&fam, &s, &e0, 0.0).is_err());
    }

    #[test]
    fn dictionary_single_point() {
        let s = QuasiMetricSpace::from_flat(1, vec![0.0], vec![2.0], 1.0).unwrap();
        let dict = TestDictionary::from_functions(&s, &[vec![1.0]], vec![1.0], 0.5, 0.5).unwrap();
        let norm = g_norm(&s, &[1.0], GNormParams { x1: 0, r: 1.0, beta: 0.5, gamma: 0.5 }).unwrap();
        let got = grand_maximal_dict(&dict, &[3.0]).unwrap();
        assert!((got[0] - 3.0 * 2.0 / norm).abs() < 1e-15);
        assert_eq!(grand_maximal_dict(&dict, &[0.0]).unwrap(), vec![0.0]);
    }

    #[test]
    fn dictionary_dominates_kernel_rows() {
        let s = line(16, 1.0 / 16.0);
        let dys = DyadicSystem::build(&s, None, None).unwrap();
        let fam = build_haar_family(&s, &dys).unwrap();
        let dict = TestDictionary::build(&s, &fam, &dys, 0.4, 0.4, dys.k_max).unwrap();
        let f: Vec<f64> = (0..16).map(|i| ((i * 7) % 5) as f64 - 2.0).collect();
        let fs = grand_maximal_dict(&dict, &f).unwrap();
        let pf = fam.apply_all_p(&f).unwrap();
        for x in 0..16 {
            for (l, pl) in pf.iter().enumerate() {
                let row: Vec<f64> = (0..16).map(|y| fam.p(l, x, y)).collect();
                let nrm = g_norm(&s, &row, GNormParams { x1: x, r: dys.scale(l), beta: 0.4, gamma: 0.4 }).unwrap();
                assert!(fs[x] >= pl[x].abs() / nrm * (1.0 - 1e-12));
            }
        }
    }
}
