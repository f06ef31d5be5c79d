use super::whitney::{default_dilation, partition_of_unity, whitney_cover, PartitionOfUnity, WhitneyCover};
use crate::error::{HardyError, Result};
use crate::maximal::{grand_maximal_dict, TestDictionary};
use crate::space::QuasiMetricSpace;
use serde::Serialize;

/// Radius class of a Whitney ball. `Small ⊆ I_j^*` (radius `≤ (48A0⁵)^{-1}`),
/// `Medium = I_{j,2}^*` (radius in `((48A0⁵)^{-1}, (2A0)^{-4}]`), `Large = I_j \ I_j^*`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IndexClass {
    Small,
    Medium,
    Large,
}

impl IndexClass {
    fn of(r: f64, a0: f64) -> Self {
        if r <= 1.0 / (48.0 * a0.powi(5)) {
            IndexClass::Small
        } else if r <= (2.0 * a0).powi(-4) {
            IndexClass::Medium
        } else {
            IndexClass::Large
        }
    }

    /// Member of `I_j^*` (mean-corrected part).
    pub fn is_star(self) -> bool {
        self != IndexClass::Large
    }

    /// Member of `I_{j,1}`.
    pub fn is_small(self) -> bool {
        self == IndexClass::Small
    }
}

/// Calderón–Zygmund pieces of `f` at height `2^j`.
#[derive(Debug, Clone, Serialize)]
pub struct CZParts {
    pub j: i32,
    pub omega: Vec<bool>,
    pub cover: WhitneyCover,
    pub partition: PartitionOfUnity,
    pub classes: Vec<IndexClass>,
    /// `m_k = ⟨f, φ_k⟩ / ‖φ_k‖_{L¹}`.
    pub means: Vec<f64>,
    /// `b_k`, dense.
    pub bad: Vec<Vec<f64>>,
    pub good: Vec<f64>,
    /// `max |g − (f 1_{Ωᶜ} + Σ_{I*} m_k φ_k)|`.
    pub identity_error: f64,
    /// `max |f − g − Σ b_k| / max |f|`.
    pub reconstruction_error: f64,
    /// `max_{k ∈ I*} |Σ b_k μ|`.
    pub cancellation_error: f64,
    /// `‖g‖_∞ / 2^j`.
    pub good_ratio: f64,
}

impl CZParts {
    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    /// `Σ_k b_k`.
    pub fn bad_total(&self) -> Vec<f64> {
        let n = self.good.len();
        let mut out = vec![0.0; n];
        for b in &self.bad {
            for (o, v) in out.iter_mut().zip(b) {
                *o += v;
            }
        }
        out
    }
}

/// Decompose `f = g^j + Σ_k b^j_k` over `Ω_j = {f*_{0,dict} > 2^j}`.
pub fn cz_decompose(s: &QuasiMetricSpace, dict: &TestDictionary, f: &[f64], j: i32) -> Result<CZParts> {
    if f.len() != s.n() {
        return Err(HardyError::Shape { expected: s.n(), got: f.len() });
    }
    let fstar = grand_maximal_dict(dict, f)?;
    cz_from_fstar(s, &fstar, f, j)
}

pub(crate) fn level_set(fstar: &[f64], j: i32) -> Vec<bool> {
    let t = 2f64.powi(j);
    fstar.iter().map(|&v| v > t).collect()
}

pub(crate) fn cz_from_fstar(s: &QuasiMetricSpace, fstar: &[f64], f: &[f64], j: i32) -> Result<CZParts> {
    let omega = level_set(fstar, j);
    if !omega.iter().any(|&b| b) {
        return Err(HardyError::EmptyLevelSet(j));
    }
    if omega.iter().all(|&b| b) {
        return Err(HardyError::FullLevelSet(j));
    }
    let a0 = s.a0();
    let cover = whitney_cover(s, &omega, default_dilation(a0))?;
    let partition = partition_of_unity(s, &cover)?;
    let mu = s.masses();
    let n = s.n();
    let classes: Vec<IndexClass> = cover.radii.iter().map(|&r| IndexClass::of(r, a0)).collect();
    let mut means = Vec::with_capacity(cover.len());
    let mut bad = Vec::with_capacity(cover.len());
    for (phi, class) in partition.phi.iter().zip(&classes) {
        let l1: f64 = phi.iter().zip(mu).map(|(p, m)| p * m).sum();
        let pair: f64 = phi.iter().zip(f).zip(mu).map(|((p, v), m)| p * v * m).sum();
        let m = pair / l1;
        means.push(m);
        let shift = if class.is_star() { m } else { 0.0 };
        bad.push((0..n).map(|y| if phi[y] == 0.0 { 0.0 } else { (f[y] - shift) * phi[y] }).collect::<Vec<_>>());
    }
    let mut good = f.to_vec();
    for b in &bad {
        for (g, v) in good.iter_mut().zip(b) {
            *g -= v;
        }
    }
    let mut expected: Vec<f64> = (0..n).map(|y| if omega[y] { 0.0 } else { f[y] }).collect();
    for ((phi, class), m) in partition.phi.iter().zip(&classes).zip(&means) {
        if class.is_star() {
            for (e, p) in expected.iter_mut().zip(phi) {
                *e += m * p;
            }
        }
    }
    let identity_error = good.iter().zip(&expected).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let scale = f.iter().map(|v| v.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let reconstruction_error = (0..n)
        .map(|y| (f[y] - good[y] - bad.iter().map(|b| b[y]).sum::<f64>()).abs())
        .fold(0.0, f64::max)
        / scale;
    let cancellation_error = bad
        .iter()
        .zip(&classes)
        .filter(|(_, c)| c.is_star())
        .map(|(b, _)| b.iter().zip(mu).map(|(v, m)| v * m).sum::<f64>().abs())
        .fold(0.0, f64::max);
    let good_ratio = good.iter().map(|v| v.abs()).fold(0.0, f64::max) / 2f64.powi(j);
    Ok(CZParts {
        j,
        omega,
        cover,
        partition,
        classes,
        means,
        bad,
        good,
        identity_error,
        reconstruction_error,
        cancellation_error,
        good_ratio,
    })
}

/// `L^{j+1}_{k,l} = ‖φ^{j+1}_l‖_{L¹}^{-1} Σ (f − m^{j+1}_l) φ^j_k φ^{j+1}_l μ` for `l ∈ I_{j+1}^*`;
/// zero for the other `l`. Indexed `[k][l]`.
pub fn correction_coefficients(cur: &CZParts, next: &CZParts, f: &[f64], mu: &[f64]) -> Vec<Vec<f64>> {
    let l1: Vec<f64> = next
        .partition
        .phi
        .iter()
        .map(|p| p.iter().zip(mu).map(|(a, m)| a * m).sum())
        .collect();
    cur.partition
        .phi
        .iter()
        .map(|pk| {
            next.partition
                .phi
                .iter()
                .enumerate()
                .map(|(l, pl)| {
                    if !next.classes[l].is_star() {
                        return 0.0;
                    }
                    let m = next.means[l];
                    let sum: f64 = (0..f.len())
                        .filter(|&y| pk[y] != 0.0 && pl[y] != 0.0)
                        .map(|y| (f[y] - m) * pk[y] * pl[y] * mu[y])
                        .sum();
                    sum / l1[l]
                })
                .collect()
        })
        .collect()
}

/// `max_y |Σ_k Σ_l L_{k,l} φ^{j+1}_l(y)|`, which vanishes because `Σ_k φ^j_k = 1` on `Ω_{j+1}`.
pub fn correction_sum_error(next: &CZParts, coeffs: &[Vec<f64>]) -> f64 {
    let n = next.good.len();
    let mut total = vec![0.0; n];
    for row in coeffs {
        for (l, &c) in row.iter().enumerate() {
            if c != 0.0 {
                for (t, p) in total.iter_mut().zip(&next.partition.phi[l]) {
                    *t += c * p;
                }
            }
        }
    }
    total.iter().map(|v| v.abs()).fold(0.0, f64::max)
}
