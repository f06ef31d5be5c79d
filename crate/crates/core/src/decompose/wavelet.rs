use super::atomic::NEGLIGIBLE;
use super::{relative_residual, AtomEntry, AtomicDecomposition};
use crate::atoms::{enclosing_radius, molecule_to_atoms, validate_local_atom, Molecule};
use crate::dyadic::DyadicSystem;
use crate::error::{HardyError, Result};
use crate::kernels::{FamilyKind, OperatorFamily};
use crate::maximal::lp_quasinorm;
use crate::space::QuasiMetricSpace;
use crate::square::lusin_area;
use serde::Serialize;
use std::collections::BTreeMap;

/// Realized constants of one square-function-route run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WaveletRouteInfo {
    /// `‖S_0 f‖_p`.
    pub s_norm: f64,
    /// Number of nonzero pieces `b^{j,i}_{τ,k}`.
    pub pieces: usize,
    /// `Σ (λ^{j,i}_{τ,k})^p / ‖S_0 f‖_p^p`.
    pub coefficient_ratio: f64,
    /// `Σ|λ|^p` of the emitted atoms over `‖S_0 f‖_p^p`.
    pub atom_ratio: f64,
    /// Largest normalizing constant applied to a piece to make it an exact molecule or atom.
    pub max_normalizer: f64,
    /// `‖f − Σ λ b‖_{L²} / ‖f‖_{L²}` over the pieces.
    pub piece_residual: f64,
    pub invalid_atoms: usize,
}

/// Cube `(m, α)` of the tree used here: levels `1..=K_max + 1`, the last one a
/// copy of the singleton level `K_max`. A level-`m` cube carries `D_{m−1}`.
fn cube_level(dys: &DyadicSystem, m: usize) -> usize {
    m.min(dys.k_max)
}

fn parent_of(dys: &DyadicSystem, m: usize, alpha: usize) -> Option<usize> {
    if m <= 1 {
        None
    } else if m <= dys.k_max {
        Some(dys.parent[m][alpha])
    } else {
        Some(alpha)
    }
}

/// Largest `k` with `μ(Q ∩ {S > 2^k}) > μ(Q)/2`; `None` when `S` vanishes on half of `Q`.
fn cube_class(points: &[usize], sq: &[f64], mu: &[f64]) -> Option<i32> {
    let mut vals: Vec<(f64, f64)> = points.iter().map(|&x| (sq[x], mu[x])).collect();
    vals.sort_by(|a, b| b.0.total_cmp(&a.0));
    let half = vals.iter().map(|v| v.1).sum::<f64>() / 2.0;
    let mut acc = 0.0;
    let mut median = 0.0;
    for (v, m) in vals {
        acc += m;
        if acc > half {
            median = v;
            break;
        }
    }
    if !(median > 0.0) {
        return None;
    }
    let mut k = median.log2().ceil() as i32 - 1;
    while 2f64.powi(k + 1) < median {
        k += 1;
    }
    while 2f64.powi(k) >= median {
        k -= 1;
    }
    Some(k)
}

/// Atomic decomposition through the level sets of the Lusin area function with
/// the Haar family `D_k = Q_k`: cubes are grouped by their maximal cube in each
/// class `D_k`, the pieces of levels `≤ N + 1` become molecules on `B(z, δ^{-1})`
/// (converted to atoms), the deeper pieces become `(p, 2)`-atoms on the smallest
/// ball about `z` holding their support.
pub fn atomic_decompose_wavelet(
    s: &QuasiMetricSpace,
    dys: &DyadicSystem,
    fam: &OperatorFamily,
    f: &[f64],
    p: f64,
    n_low: usize,
    eps: &[f64],
) -> Result<(AtomicDecomposition, WaveletRouteInfo)> {
    if fam.kind != FamilyKind::HaarMartingale {
        return Err(HardyError::UnsupportedFamily(
            "the square-function route needs the exact orthogonality of the haar family".into(),
        ));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(HardyError::Parameter(format!("p must lie in (0, 1], got {p}")));
    }
    if f.len() != s.n() {
        return Err(HardyError::Shape { expected: s.n(), got: f.len() });
    }
    if fam.levels() != dys.levels() {
        return Err(HardyError::Parameter("family and dyadic system disagree on the level count".into()));
    }
    let mut dec = AtomicDecomposition::empty(p, 2.0);
    let mut info = WaveletRouteInfo {
        s_norm: 0.0,
        pieces: 0,
        coefficient_ratio: 0.0,
        atom_ratio: 0.0,
        max_normalizer: 0.0,
        piece_residual: 0.0,
        invalid_atoms: 0,
    };
    if f.iter().all(|&v| v == 0.0) {
        return Ok((dec, info));
    }
    let n = s.n();
    let mu = s.masses();
    let qf = fam.apply_all_q(f)?;
    let sq = lusin_area(fam, s, f, 1.0)?;
    let s_norm = lp_quasinorm(s, &sq, p)?;
    info.s_norm = s_norm;
    let top = dys.k_max + 1;

    // class of every cube, then its topmost ancestor in the same class
    let classes: Vec<Vec<Option<i32>>> = (0..=top)
        .map(|m| {
            if m == 0 {
                return Vec::new();
            }
            dys.cubes[cube_level(dys, m)].iter().map(|q| cube_class(q, &sq, mu)).collect()
        })
        .collect();
    // groups[(k, j, τ)] = cubes (m, α) inside the maximal cube Q^j_τ of class k
    let mut groups: BTreeMap<(i32, usize, usize), Vec<(usize, usize)>> = BTreeMap::new();
    for m in 1..=top {
        for alpha in 0..classes[m].len() {
            let class = classes[m][alpha];
            let (mut rm, mut ra) = (m, alpha);
            let (mut cm, mut ca) = (m, alpha);
            while let Some(pa) = parent_of(dys, cm, ca) {
                cm -= 1;
                ca = pa;
                if classes[cm][ca] == class {
                    (rm, ra) = (cm, ca);
                }
            }
            groups.entry((class.unwrap_or(i32::MIN), rm, ra)).or_default().push((m, alpha));
        }
    }

    let floor = NEGLIGIBLE * f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut sum_pieces = vec![0.0; n];
    let mut coeff_sum = 0.0;
    for (&(_, j, tau), members) in &groups {
        let tau_level = cube_level(dys, j);
        let z = dys.centers[tau_level][tau];
        let tau_mass = dys.cube_mass(s, tau_level, tau);
        for low in [true, false] {
            let chosen: Vec<(usize, usize)> =
                members.iter().copied().filter(|&(m, _)| (m <= n_low + 1) == low).collect();
            if chosen.is_empty() {
                continue;
            }
            let mut by_level: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
            let mut energy = 0.0;
            for &(m, alpha) in &chosen {
                let v = by_level.entry(m).or_insert_with(|| vec![0.0; n]);
                for &y in &dys.cubes[cube_level(dys, m)][alpha] {
                    let d = qf[m - 1][y];
                    v[y] = d;
                    energy += d * d * mu[y];
                }
            }
            if !(energy > 0.0) {
                continue;
            }
            let mut raw = vec![0.0; n];
            for (&m, v) in &by_level {
                for (r, w) in raw.iter_mut().zip(fam.apply_q(m - 1, v)?) {
                    *r += w;
                }
            }
            // rounding noise of a level that should vanish; projecting it may give exact zeros
            if raw.iter().all(|v| v.abs() <= floor) {
                continue;
            }
            let lambda = tau_mass.powf(1.0 / p - 0.5) * energy.sqrt();
            coeff_sum += lambda.powf(p);
            info.pieces += 1;
            for (t, r) in sum_pieces.iter_mut().zip(&raw) {
                *t += r;
            }
            let b: Vec<f64> = raw.iter().map(|v| v / lambda).collect();
            if low {
                let mut mol = Molecule {
                    values: b,
                    center: z,
                    radius: 1.0 / dys.delta,
                    delta: dys.delta,
                    p,
                    q: 2.0,
                    eps: eps.to_vec(),
                };
                let c = mol.normalizer(s)?;
                if !(c > 0.0) {
                    continue;
                }
                info.max_normalizer = info.max_normalizer.max(c);
                mol.values.iter_mut().for_each(|v| *v /= c);
                for mut e in molecule_to_atoms(s, &mol)?.entries {
                    e.lambda *= lambda * c;
                    e.level = j as i64;
                    e.index = tau;
                    dec.entries.push(e);
                }
            } else {
                let reach = (0..n).filter(|&y| b[y] != 0.0).map(|y| s.d(z, y)).fold(0.0, f64::max);
                let radius = enclosing_radius(reach);
                let l2: f64 = b.iter().zip(mu).map(|(v, m)| v * v * m).sum::<f64>().sqrt();
                let c = l2 / s.ball_measure(z, radius).powf(0.5 - 1.0 / p);
                info.max_normalizer = info.max_normalizer.max(c);
                dec.entries.push(AtomEntry {
                    lambda: lambda * c,
                    center: z,
                    radius,
                    level: j as i64,
                    index: tau,
                    atom: b.iter().map(|v| v / c).collect(),
                });
            }
        }
    }
    info.piece_residual = relative_residual(f, &sum_pieces, mu);
    info.invalid_atoms = dec
        .entries
        .iter()
        .filter(|e| !validate_local_atom(s, &e.atom, e.center, e.radius, p, 2.0).is_empty())
        .count();
    dec.finish(f, mu);
    let sp = s_norm.powf(p);
    info.coefficient_ratio = coeff_sum / sp;
    info.atom_ratio = dec.lp_sum / sp;
    log::debug!(
        "square-function route: {} pieces, {} atoms, ratio = {:.4e}",
        info.pieces,
        dec.len(),
        info.coefficient_ratio
    );
    Ok((dec, info))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn class_thresholds() {
        let mu = [1.0; 4];
        assert_eq!(cube_class(&[0, 1, 2, 3], &[4.0, 4.0, 4.0, 0.1], &mu), Some(1));
        assert_eq!(cube_class(&[0, 1, 2, 3], &[4.1, 4.1, 4.1, 0.1], &mu), Some(2));
        assert_eq!(cube_class(&[0, 1], &[1.0, 0.0], &mu), None);
        assert_eq!(cube_class(&[0], &[0.75], &mu), Some(-1));
    }
}
