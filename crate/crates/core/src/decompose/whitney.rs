use crate::error::{HardyError, Result};
use crate::maximal::g_norms;
use crate::report::ValidationReport;
use crate::space::QuasiMetricSpace;
use serde::Serialize;

/// Slack for the partition-of-unity sum, which is a sum of ratios.
const PARTITION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Serialize)]
pub struct WhitneyCover {
    pub omega: Vec<bool>,
    /// Dilation parameter `A`.
    pub a: f64,
    pub a0: f64,
    pub centers: Vec<usize>,
    /// `r_k = d(x_k, Ωᶜ) / (2 A A0)`.
    pub radii: Vec<f64>,
    /// Nearest point of `Ωᶜ` to each center (lowest index on ties).
    pub partners: Vec<usize>,
    /// Largest number of dilated balls `B(x_j, A r_j)` meeting one `B(x_k, A r_k)`, itself included.
    pub l0: usize,
}

impl WhitneyCover {
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }
}

/// Default dilation `16 A0⁴`.
pub fn default_dilation(a0: f64) -> f64 {
    16.0 * a0.powi(4)
}

fn balls_meet(s: &QuasiMetricSpace, x: usize, rx: f64, y: usize, ry: f64) -> bool {
    (0..s.n()).any(|z| s.d(x, z) < rx && s.d(y, z) < ry)
}

/// Greedy Vitali selection over `Ω`: candidates by `r(x)` descending (lowest
/// index on ties), keeping `x` when `B(x, r(x)/(5A0³))` misses every kept shrunken ball.
pub fn whitney_cover(s: &QuasiMetricSpace, omega: &[bool], a: f64) -> Result<WhitneyCover> {
    let n = s.n();
    if omega.len() != n {
        return Err(HardyError::Shape { expected: n, got: omega.len() });
    }
    if !(a >= 1.0) {
        return Err(HardyError::Parameter(format!("dilation A must be >= 1, got {a}")));
    }
    if !omega.iter().any(|&b| b) {
        return Err(HardyError::CoverDomain("the set is empty"));
    }
    if omega.iter().all(|&b| b) {
        return Err(HardyError::CoverDomain("the set is the whole space, its complement is empty"));
    }
    let a0 = s.a0();
    let complement: Vec<bool> = omega.iter().map(|b| !b).collect();
    let r: Vec<f64> = (0..n)
        .map(|x| if omega[x] { s.dist_to_set(x, &complement) / (2.0 * a * a0) } else { 0.0 })
        .collect();
    let mut cand: Vec<usize> = (0..n).filter(|&x| omega[x]).collect();
    cand.sort_by(|&x, &y| r[y].total_cmp(&r[x]).then(x.cmp(&y)));
    let shrink = 5.0 * a0.powi(3);
    let mut owner: Vec<Option<usize>> = vec![None; n];
    let mut centers = Vec::new();
    for &x in &cand {
        let members = s.ball_members(x, r[x] / shrink);
        if members.iter().all(|&z| owner[z as usize].is_none()) {
            for &z in members {
                owner[z as usize] = Some(centers.len());
            }
            centers.push(x);
        }
    }
    let radii: Vec<f64> = centers.iter().map(|&x| r[x]).collect();
    let partners: Vec<usize> = centers
        .iter()
        .map(|&x| {
            let (order, _) = s.sorted_from(x);
            order.iter().map(|&y| y as usize).find(|&y| !omega[y]).expect("complement is non-empty")
        })
        .collect();
    let l0 = (0..centers.len())
        .map(|k| {
            (0..centers.len())
                .filter(|&j| balls_meet(s, centers[k], a * radii[k], centers[j], a * radii[j]))
                .count()
        })
        .max()
        .unwrap_or(0);
    Ok(WhitneyCover { omega: omega.to_vec(), a, a0, centers, radii, partners, l0 })
}

/// Check all six cover properties exhaustively.
pub fn verify_whitney(s: &QuasiMetricSpace, cover: &WhitneyCover) -> ValidationReport {
    let mut report = ValidationReport::new();
    let n = s.n();
    let (a, a0) = (cover.a, cover.a0);
    let complement: Vec<bool> = cover.omega.iter().map(|b| !b).collect();
    let m = cover.len();
    let shrink = 5.0 * a0.powi(3);
    for k in 0..m {
        for j in k + 1..m {
            let (xk, xj) = (cover.centers[k], cover.centers[j]);
            if balls_meet(s, xk, cover.radii[k] / shrink, xj, cover.radii[j] / shrink) {
                report.push("disjoint-shrunken", vec![xk, xj], "shrunken balls intersect");
            }
        }
    }
    let mut covered = vec![false; n];
    for (k, (&x, &r)) in cover.centers.iter().zip(&cover.radii).enumerate() {
        for &z in s.ball_members(x, r) {
            let z = z as usize;
            covered[z] = true;
            let dz = s.dist_to_set(z, &complement);
            if dz < a * r || dz > 3.0 * a * a0 * a0 * r {
                report.push(
                    "distance-comparable",
                    vec![k, z],
                    format!("d(z, complement) = {dz} outside [{}, {}]", a * r, 3.0 * a * a0 * a0 * r),
                );
            }
        }
        if s.ball_members(x, a * r).iter().any(|&z| !cover.omega[z as usize]) {
            report.push("dilated-inside", vec![k], "B(x_k, A r_k) leaves the set");
        }
        let y = cover.partners[k];
        if cover.omega[y] || !(s.d(x, y) < 3.0 * a * a0 * r) {
            report.push("partner", vec![k, y], format!("d(x_k, y_k) = {}", s.d(x, y)));
        }
    }
    for z in 0..n {
        if covered[z] != cover.omega[z] {
            report.push("covering", vec![z], if covered[z] { "covered outside the set" } else { "uncovered" });
        }
    }
    let mut l0 = 0;
    for k in 0..m {
        let mut count = 0;
        for j in 0..m {
            let (xk, xj) = (cover.centers[k], cover.centers[j]);
            let (rk, rj) = (cover.radii[k], cover.radii[j]);
            if balls_meet(s, xk, a * rk, xj, a * rj) {
                count += 1;
                let c = 8.0 * a0 * a0;
                if rj > c * rk || rk > c * rj {
                    report.push("radius-comparable", vec![k, j], format!("r_k = {rk}, r_j = {rj}"));
                }
            }
        }
        l0 = l0.max(count);
    }
    if l0 != cover.l0 {
        report.push("overlap", vec![l0, cover.l0], "recorded L0 disagrees with a recount");
    }
    report
}

#[derive(Debug, Clone, Serialize)]
pub struct PartitionOfUnity {
    /// `phi[k]` is the dense weight of ball `k`.
    pub phi: Vec<Vec<f64>>,
}

/// Tent bumps `ψ_k = 1` on `B(x_k, r_k)`, decaying linearly to 0 at `2 A0 r_k`,
/// normalized by their sum on `Ω`.
pub fn partition_of_unity(s: &QuasiMetricSpace, cover: &WhitneyCover) -> Result<PartitionOfUnity> {
    let n = s.n();
    let a0 = cover.a0;
    let psi: Vec<Vec<f64>> = cover
        .centers
        .iter()
        .zip(&cover.radii)
        .map(|(&x, &r)| {
            (0..n)
                .map(|y| {
                    let d = s.d(x, y);
                    if d < r {
                        1.0
                    } else {
                        ((2.0 * a0 * r - d) / ((2.0 * a0 - 1.0) * r + f64::EPSILON)).clamp(0.0, 1.0)
                    }
                })
                .collect()
        })
        .collect();
    let mut total = vec![0.0; n];
    for p in &psi {
        for (t, v) in total.iter_mut().zip(p) {
            *t += v;
        }
    }
    for y in 0..n {
        if cover.omega[y] && total[y] <= 0.0 {
            return Err(HardyError::Uncovered(y));
        }
    }
    let phi = psi
        .into_iter()
        .map(|p| {
            p.iter()
                .enumerate()
                .map(|(y, &v)| if cover.omega[y] { v / total[y] } else { 0.0 })
                .collect()
        })
        .collect();
    Ok(PartitionOfUnity { phi })
}

/// Partition properties: sum, range, support, lower bound `1/L0` on the core ball.
pub fn verify_partition(s: &QuasiMetricSpace, cover: &WhitneyCover, pu: &PartitionOfUnity) -> ValidationReport {
    let mut report = ValidationReport::new();
    let n = s.n();
    for y in 0..n {
        let sum: f64 = pu.phi.iter().map(|p| p[y]).sum();
        let target = if cover.omega[y] { 1.0 } else { 0.0 };
        if (sum - target).abs() > PARTITION_TOL {
            report.push("sum", vec![y], format!("sum of weights {sum}, expected {target}"));
        }
    }
    let lower = 1.0 / cover.l0.max(1) as f64;
    for (k, p) in pu.phi.iter().enumerate() {
        let (x, r) = (cover.centers[k], cover.radii[k]);
        for y in 0..n {
            if !(0.0..=1.0).contains(&p[y]) {
                report.push("range", vec![k, y], format!("phi = {}", p[y]));
            }
            if p[y] != 0.0 && s.d(x, y) >= 2.0 * cover.a0 * r {
                report.push("support", vec![k, y], "weight outside B(x_k, 2 A0 r_k)");
            }
            if s.d(x, y) < r && p[y] < lower * (1.0 - PARTITION_TOL) {
                report.push("lower-bound", vec![k, y], format!("phi = {} < 1/L0 = {lower}", p[y]));
            }
        }
    }
    report
}

/// `max_k ‖φ_k‖_{G(x_k, r_k, η, η)} / V_{r_k}(x_k)`, the measured constant of the
/// regularity bound of the partition.
pub fn partition_holder_constant(s: &QuasiMetricSpace, cover: &WhitneyCover, pu: &PartitionOfUnity, eta: f64) -> f64 {
    pu.phi
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let (x, r) = (cover.centers[k], cover.radii[k]);
            g_norms(s, p, x, &[r], eta, eta)[0] / s.ball_measure(x, r)
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(n: usize) -> QuasiMetricSpace {
        QuasiMetricSpace::from_fn(n, vec![1.0; n], 1.0, |i, j| (i as f64 - j as f64).abs()).unwrap()
    }

    #[test]
    fn single_point_set() {
        let s = line(8);
        let mut omega = vec![false; 8];
        omega[3] = true;
        let c = whitney_cover(&s, &omega, 16.0).unwrap();
        assert_eq!(c.centers, vec![3]);
        assert_eq!(c.radii, vec![1.0 / 32.0]);
        assert!(verify_whitney(&s, &c).is_empty());
        let pu = partition_of_unity(&s, &c).unwrap();
        assert_eq!(pu.phi[0], omega.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect::<Vec<_>>());
    }

    #[test]
    fn all_but_one_point() {
        let s = line(64);
        let mut omega = vec![true; 64];
        omega[10] = false;
        let c = whitney_cover(&s, &omega, 16.0).unwrap();
        let report = verify_whitney(&s, &c);
        assert!(report.is_empty(), "{report}");
        let pu = partition_of_unity(&s, &c).unwrap();
        assert!(verify_partition(&s, &c, &pu).is_empty());
        assert!(partition_holder_constant(&s, &c, &pu, 0.5).is_finite());
    }

    #[test]
    fn domain_errors() {
        let s = line(4);
        assert!(whitney_cover(&s, &[false; 4], 16.0).is_err());
        assert!(whitney_cover(&s, &[true; 4], 16.0).is_err());
    }
}
