//! Littlewood–Paley square functions: Lusin area, `g` and `g*_λ`.
//!
//! All sums over `k` run in ascending order. For the Gauss family, tail levels
//! where `max |Q_k f| < 1e-14` are dropped (and logged); for the Haar family
//! every level is kept, so identities stay exact.

use crate::dyadic::{DyadicSystem, SubcubeIndex};
use crate::error::{HardyError, Result};
use crate::kernels::{FamilyKind, OperatorFamily};
use crate::par;
use crate::space::QuasiMetricSpace;

pub const TAIL_DROP: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SquareFunctionConfig {
    pub theta: f64,
    pub lambda: f64,
    /// Threshold level; `None` disables low-level averaging in `g`.
    pub n_low: Option<usize>,
}

/// `Q_k f` for all levels, with negligible Gauss tail levels removed.
/// Returns `(level, Q_k f)` pairs.
pub fn significant_levels(fam: &OperatorFamily, f: &[f64]) -> Result<Vec<(usize, Vec<f64>)>> {
    let qf = fam.apply_all_q(f)?;
    Ok(trim_tail(fam, qf))
}

pub(crate) fn trim_tail(fam: &OperatorFamily, qf: Vec<Vec<f64>>) -> Vec<(usize, Vec<f64>)> {
    let mut out: Vec<(usize, Vec<f64>)> = qf.into_iter().enumerate().collect();
    if fam.kind == FamilyKind::GaussSinkhorn {
        let before = out.len();
        while out.len() > 1 {
            let last = &out[out.len() - 1].1;
            if last.iter().all(|v| v.abs() < TAIL_DROP) {
                out.pop();
            } else {
                break;
            }
        }
        if out.len() < before {
            log::debug!("dropped {} negligible tail level(s)", before - out.len());
        }
    }
    out
}

/// `S_{θ,0} f(x) = (Σ_k Σ_{d(x,y) < θδ^k} |Q_k f(y)|² μ(y) / V_{θδ^k}(x))^{1/2}`.
pub fn lusin_area(fam: &OperatorFamily, s: &QuasiMetricSpace, f: &[f64], theta: f64) -> Result<Vec<f64>> {
    if !(theta > 0.0) {
        return Err(HardyError::Parameter(format!("theta must be positive, got {theta}")));
    }
    let qf = significant_levels(fam, f)?;
    Ok(lusin_from_qf(&qf, fam, s, theta))
}

pub(crate) fn lusin_from_qf(qf: &[(usize, Vec<f64>)], fam: &OperatorFamily, s: &QuasiMetricSpace, theta: f64) -> Vec<f64> {
    par::map_indices(s.n(), |x| {
        let mut total = 0.0;
        for (k, q) in qf {
            let r = theta * fam.scale(*k);
            let mut acc = 0.0;
            let mut vol = 0.0;
            for &y in s.ball_members(x, r) {
                let y = y as usize;
                acc += q[y] * q[y] * s.mu(y);
                vol += s.mu(y);
            }
            total += acc / vol;
        }
        total.sqrt()
    })
}

/// `g_0 f(x)`: levels `k ≤ N` contribute the μ-average of `|Q_k f|²` over the
/// subcube `Q_α^{k,m} ∋ x`, higher levels `|Q_k f(x)|²`. With `n_low = None`
/// nothing is averaged (the plain `g'` function).
pub fn g_function(
    fam: &OperatorFamily,
    s: &QuasiMetricSpace,
    dys: &DyadicSystem,
    subidx: &SubcubeIndex,
    f: &[f64],
    n_low: Option<usize>,
) -> Result<Vec<f64>> {
    let qf = significant_levels(fam, f)?;
    g_from_qf(&qf, s, dys, subidx, n_low)
}

pub(crate) fn g_from_qf(
    qf: &[(usize, Vec<f64>)],
    s: &QuasiMetricSpace,
    dys: &DyadicSystem,
    subidx: &SubcubeIndex,
    n_low: Option<usize>,
) -> Result<Vec<f64>> {
    let n = s.n();
    let mut total = vec![0.0f64; n];
    for (k, q) in qf {
        match n_low {
            Some(nl) if *k <= nl => {
                let l = subidx.sub_level.get(*k).copied().flatten().ok_or(HardyError::MissingSubcube(*k))?;
                let cubes = dys.cubes[l].len();
                let mut num = vec![0.0; cubes];
                let mut den = vec![0.0; cubes];
                for x in 0..n {
                    let b = dys.cube_of[l][x];
                    num[b] += q[x] * q[x] * s.mu(x);
                    den[b] += s.mu(x);
                }
                for x in 0..n {
                    let b = dys.cube_of[l][x];
                    total[x] += num[b] / den[b];
                }
            }
            _ => {
                for x in 0..n {
                    total[x] += q[x] * q[x];
                }
            }
        }
    }
    Ok(total.into_iter().map(f64::sqrt).collect())
}

/// `g*_{λ,0} f(x) = (Σ_k Σ_y |Q_k f(y)|² (δ^k/(δ^k + d(x,y)))^λ μ(y)/(V_{δ^k}(x) + V_{δ^k}(y)))^{1/2}`.
pub fn g_lambda_star(fam: &OperatorFamily, s: &QuasiMetricSpace, f: &[f64], lambda: f64) -> Result<Vec<f64>> {
    if !(lambda > 0.0) {
        return Err(HardyError::Parameter(format!("lambda must be positive, got {lambda}")));
    }
    let qf = significant_levels(fam, f)?;
    Ok(gstar_from_qf(&qf, fam, s, lambda))
}

pub(crate) fn gstar_from_qf(qf: &[(usize, Vec<f64>)], fam: &OperatorFamily, s: &QuasiMetricSpace, lambda: f64) -> Vec<f64> {
    let n = s.n();
    let vols: Vec<Vec<f64>> = qf
        .iter()
        .map(|(k, _)| (0..n).map(|y| s.ball_measure(y, fam.scale(*k))).collect())
        .collect();
    par::map_indices(n, |x| {
        let mut total = 0.0;
        for ((k, q), v) in qf.iter().zip(&vols) {
            let scale = fam.scale(*k);
            let mut acc = 0.0;
            for y in 0..n {
                if q[y] == 0.0 {
                    continue;
                }
                let w = (scale / (scale + s.d(x, y))).powf(lambda);
                acc += q[y] * q[y] * w * s.mu(y) / (v[x] + v[y]);
            }
            total += acc;
        }
        total.sqrt()
    })
}
