//! Nested nets and dyadic cubes.
//!
//! Nets are greedy maximal `δ^k`-separated sets built coarse to fine, each level
//! seeded with the previous one so `X^k ⊆ X^{k+1}`; with candidates scanned in
//! ascending index order this yields separation and covering with `c0 = C0 = 1`.
//! Cubes come from a top-down nearest-center tree: each level-`(k+1)` center
//! hangs below its nearest level-`k` center and every point below its nearest
//! deepest center, so partition and nesting hold by construction. The ball
//! sandwich is *measured*, not assumed.

use crate::error::{HardyError, Result};
use crate::par;
use crate::report::ValidationReport;
use crate::space::QuasiMetricSpace;
use serde::Serialize;

/// Deepest level ever built.
pub const MAX_LEVELS_CAP: usize = 24;

/// Largest admissible `δ` for a given `A0`, namely `1/(12 A0³)`.
pub fn delta_upper_bound(a0: f64) -> f64 {
    1.0 / (12.0 * a0.powi(3))
}

/// `1/(12 A0³)` rounded down to a power of 1/2.
pub fn default_delta(a0: f64) -> f64 {
    let bound = delta_upper_bound(a0);
    let mut d = 1.0;
    while d > bound {
        d *= 0.5;
    }
    d
}

/// Centers per level, `levels[k]` in ascending point index.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Nets {
    pub delta: f64,
    pub levels: Vec<Vec<usize>>,
}

/// Measured ball-sandwich constants of one level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SandwichLevel {
    /// Largest `c` with `B(z, c δ^k) ⊆ Q` for every cube (∞ if one cube is all of X).
    pub inner: f64,
    /// Smallest `C` with `d(z, y) ≤ C δ^k` for all `y ∈ Q`, over every cube.
    pub outer: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DyadicSystem {
    pub delta: f64,
    pub a0: f64,
    pub k_max: usize,
    /// `centers[k][α] = z_α^k`, ascending point index.
    pub centers: Vec<Vec<usize>>,
    /// `cube_of[k][x] = α` with `x ∈ Q_α^k`.
    pub cube_of: Vec<Vec<usize>>,
    /// `cubes[k][α]`, ascending point index.
    pub cubes: Vec<Vec<Vec<usize>>>,
    /// `parent[k][α]` is the level-`(k-1)` cube containing `Q_α^k`; empty for `k = 0`.
    pub parent: Vec<Vec<usize>>,
    /// `children[k][α]`: level-`(k+1)` cubes inside `Q_α^k`; empty at `K_max`.
    pub children: Vec<Vec<Vec<usize>>>,
    pub c0: f64,
    pub c0_upper: f64,
    pub c_nat: f64,
    pub c_nat_upper: f64,
    pub sandwich: Vec<SandwichLevel>,
}

/// Refinement subcubes `Q_α^{k,m}`: the level-`(k + j0)` descendants of each cube.
#[derive(Debug, Clone, Serialize)]
pub struct SubcubeIndex {
    pub j0: usize,
    /// `sub_level[k]` is the level whose cubes refine level `k`; `None` if not indexed.
    pub sub_level: Vec<Option<usize>>,
    /// `subcubes[k][α]`: cube indices at `sub_level[k]` inside `Q_α^k`, ascending center index.
    pub subcubes: Vec<Vec<Vec<usize>>>,
}

impl SubcubeIndex {
    /// Level and index of the subcube `Q_α^{k,m} ∋ x`.
    pub fn subcube_of(&self, dys: &DyadicSystem, k: usize, x: usize) -> Option<(usize, usize)> {
        let l = (*self.sub_level.get(k)?)?;
        Some((l, dys.cube_of[l][x]))
    }

    pub fn count(&self, k: usize, alpha: usize) -> usize {
        self.subcubes[k][alpha].len()
    }

    pub fn covers(&self, k: usize) -> bool {
        matches!(self.sub_level.get(k), Some(Some(_)))
    }
}

/// Greedy nets for levels `0..=k_max`. With `k_max = None`, levels are added
/// until every point is a center (capped at [`MAX_LEVELS_CAP`]).
pub fn build_nets(s: &QuasiMetricSpace, delta: f64, k_max: Option<usize>) -> Result<Nets> {
    let bound = delta_upper_bound(s.a0());
    if !(delta > 0.0 && delta <= bound) {
        return Err(HardyError::Parameter(format!(
            "delta = {delta} must lie in (0, 1/(12 A0^3)] = (0, {bound}]"
        )));
    }
    if let Some(k) = k_max {
        if k > MAX_LEVELS_CAP {
            return Err(HardyError::Parameter(format!(
                "K_max = {k} exceeds the cap {MAX_LEVELS_CAP}"
            )));
        }
    }
    let n = s.n();
    let mut levels: Vec<Vec<usize>> = Vec::new();
    let mut in_net = vec![false; n];
    let mut members: Vec<usize> = Vec::new();
    let mut k = 0usize;
    loop {
        let scale = delta.powi(k as i32);
        for x in 0..n {
            if in_net[x] {
                continue;
            }
            if members.iter().all(|&z| s.d(x, z) >= scale) {
                in_net[x] = true;
                members.push(x);
            }
        }
        let mut sorted = members.clone();
        sorted.sort_unstable();
        levels.push(sorted);
        let done = match k_max {
            Some(km) => k >= km,
            None => members.len() == n || k >= MAX_LEVELS_CAP,
        };
        if done {
            break;
        }
        k += 1;
    }
    Ok(Nets { delta, levels })
}

fn nearest(s: &QuasiMetricSpace, x: usize, centers: &[usize]) -> usize {
    // centers ascend, so strict `<` keeps the lowest index on ties
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (a, &z) in centers.iter().enumerate() {
        let v = s.d(x, z);
        if v < best_d {
            best_d = v;
            best = a;
        }
    }
    best
}

pub fn assign_cubes(s: &QuasiMetricSpace, nets: &Nets) -> DyadicSystem {
    let n = s.n();
    let levels = nets.levels.len();
    let k_max = levels - 1;
    let centers = nets.levels.clone();

    let mut parent: Vec<Vec<usize>> = vec![Vec::new(); levels];
    for k in 1..levels {
        let above = &centers[k - 1];
        parent[k] = par::map_slice(&centers[k], |&z| nearest(s, z, above));
    }
    let mut cube_of: Vec<Vec<usize>> = vec![Vec::new(); levels];
    cube_of[k_max] = par::map_indices(n, |x| nearest(s, x, &centers[k_max]));
    for k in (0..k_max).rev() {
        cube_of[k] = cube_of[k + 1].iter().map(|&b| parent[k + 1][b]).collect();
    }
    let mut cubes: Vec<Vec<Vec<usize>>> = Vec::with_capacity(levels);
    for k in 0..levels {
        let mut lv = vec![Vec::new(); centers[k].len()];
        for x in 0..n {
            lv[cube_of[k][x]].push(x);
        }
        cubes.push(lv);
    }
    let mut children: Vec<Vec<Vec<usize>>> = centers.iter().map(|c| vec![Vec::new(); c.len()]).collect();
    for k in 1..levels {
        for (b, &a) in parent[k].iter().enumerate() {
            children[k - 1][a].push(b);
        }
    }
    let sandwich = (0..levels)
        .map(|k| measure_sandwich(s, nets.delta, k, &centers[k], &cubes[k], &cube_of[k]))
        .collect();
    let a0 = s.a0();
    DyadicSystem {
        delta: nets.delta,
        a0,
        k_max,
        centers,
        cube_of,
        cubes,
        parent,
        children,
        c0: 1.0,
        c0_upper: 1.0,
        c_nat: 1.0 / (3.0 * a0 * a0),
        c_nat_upper: 2.0 * a0,
        sandwich,
    }
}

fn measure_sandwich(
    s: &QuasiMetricSpace,
    delta: f64,
    k: usize,
    centers: &[usize],
    cubes: &[Vec<usize>],
    cube_of: &[usize],
) -> SandwichLevel {
    let scale = delta.powi(k as i32);
    let per = par::map_indices(centers.len(), |a| {
        let z = centers[a];
        let outer = cubes[a].iter().map(|&y| s.d(z, y)).fold(0.0, f64::max) / scale;
        let inner = (0..s.n())
            .filter(|&y| cube_of[y] != a)
            .map(|y| s.d(z, y))
            .fold(f64::INFINITY, f64::min)
            / scale;
        (inner, outer)
    });
    per.into_iter().fold(
        SandwichLevel { inner: f64::INFINITY, outer: 0.0 },
        |acc, (i, o)| SandwichLevel { inner: acc.inner.min(i), outer: acc.outer.max(o) },
    )
}

impl DyadicSystem {
    /// Nets plus cubes. `delta = None` uses [`default_delta`].
    pub fn build(s: &QuasiMetricSpace, delta: Option<f64>, k_max: Option<usize>) -> Result<Self> {
        let delta = delta.unwrap_or_else(|| default_delta(s.a0()));
        let nets = build_nets(s, delta, k_max)?;
        Ok(assign_cubes(s, &nets))
    }

    pub fn levels(&self) -> usize {
        self.k_max + 1
    }

    pub fn n(&self) -> usize {
        self.cube_of[0].len()
    }

    #[inline]
    pub fn scale(&self, k: usize) -> f64 {
        self.delta.powi(k as i32)
    }

    /// Whether every deepest cube is a single point.
    pub fn deepest_is_singleton(&self) -> bool {
        self.cubes[self.k_max].iter().all(|q| q.len() == 1)
    }

    /// `Y^k = X^{k+1} \ X^k`.
    pub fn new_centers(&self, k: usize) -> Vec<usize> {
        if k >= self.k_max {
            return Vec::new();
        }
        let old = &self.centers[k];
        self.centers[k + 1]
            .iter()
            .copied()
            .filter(|z| old.binary_search(z).is_err())
            .collect()
    }

    pub fn cube_mass(&self, s: &QuasiMetricSpace, k: usize, alpha: usize) -> f64 {
        self.cubes[k][alpha].iter().map(|&x| s.mu(x)).sum()
    }

    /// Descendants of `Q_α^k` at level `l ≥ k`, ascending.
    pub fn descendants(&self, k: usize, alpha: usize, l: usize) -> Vec<usize> {
        let mut frontier = vec![alpha];
        for lv in k..l {
            let mut next: Vec<usize> = frontier
                .iter()
                .flat_map(|&a| self.children[lv][a].iter().copied())
                .collect();
            next.sort_unstable();
            frontier = next;
        }
        frontier
    }

    /// Smallest `j0 ≥ 1` with `δ^{j0} ≤ (2A0)^{-4} C_nat`.
    pub fn min_j0(&self) -> usize {
        let bound = j0_bound(self.a0, self.c_nat_upper);
        let mut j = 1;
        while self.delta.powi(j as i32) > bound {
            j += 1;
        }
        j
    }
}

fn j0_bound(a0: f64, c_nat_upper: f64) -> f64 {
    (2.0 * a0).powi(-4) * c_nat_upper
}

/// Subcubes `Q_α^{k,m}` at depth `j0`. When the deepest level is all singletons,
/// levels with `k + j0 > K_max` are refined by the singletons, since deeper
/// levels would repeat them; otherwise only `k ≤ K_max − j0` are indexed.
pub fn refine_subcubes(dys: &DyadicSystem, j0: usize) -> Result<SubcubeIndex> {
    let bound = j0_bound(dys.a0, dys.c_nat_upper);
    if j0 == 0 || dys.delta.powi(j0 as i32) > bound {
        return Err(HardyError::Parameter(format!(
            "j0 = {j0} must be >= 1 with delta^j0 <= (2 A0)^-4 * C_nat = {bound}"
        )));
    }
    let singleton = dys.deepest_is_singleton();
    let mut sub_level = Vec::with_capacity(dys.levels());
    let mut subcubes = Vec::with_capacity(dys.levels());
    for k in 0..dys.levels() {
        let target = k + j0;
        let l = if target <= dys.k_max {
            Some(target)
        } else if singleton {
            Some(dys.k_max)
        } else {
            None
        };
        sub_level.push(l);
        subcubes.push(match l {
            Some(l) => (0..dys.centers[k].len()).map(|a| dys.descendants(k, a, l)).collect(),
            None => Vec::new(),
        });
    }
    Ok(SubcubeIndex { j0, sub_level, subcubes })
}

/// Re-check separation, covering, partition, nesting, centers and the sandwich.
pub fn verify_dyadic(s: &QuasiMetricSpace, dys: &DyadicSystem) -> ValidationReport {
    let mut report = ValidationReport::new();
    let n = s.n();
    for k in 0..dys.levels() {
        let scale = dys.scale(k);
        let centers = &dys.centers[k];
        for (i, &a) in centers.iter().enumerate() {
            for &b in &centers[i + 1..] {
                if s.d(a, b) < dys.c0 * scale {
                    report.push("separation", vec![k, a, b], format!("d = {} < {}", s.d(a, b), scale));
                }
            }
        }
        for x in 0..n {
            let m = centers.iter().map(|&z| s.d(x, z)).fold(f64::INFINITY, f64::min);
            if m > dys.c0_upper * scale {
                report.push("covering", vec![k, x], format!("distance to net {m} > {scale}"));
            }
        }
        if k + 1 < dys.levels() {
            for z in centers {
                if dys.centers[k + 1].binary_search(z).is_err() {
                    report.push("net-nesting", vec![k, *z], "center missing from the next level");
                }
            }
        }
        let mut seen = vec![0usize; n];
        for (a, q) in dys.cubes[k].iter().enumerate() {
            for &x in q {
                seen[x] += 1;
                if dys.cube_of[k][x] != a {
                    report.push("partition", vec![k, x], "membership table disagrees with cube lists");
                }
            }
            if !q.contains(&centers[a]) {
                report.push("center", vec![k, a], "cube does not contain its center");
            }
        }
        for (x, &c) in seen.iter().enumerate() {
            if c != 1 {
                report.push("partition", vec![k, x], format!("point lies in {c} cubes"));
            }
        }
        if k >= 1 {
            for (b, q) in dys.cubes[k].iter().enumerate() {
                let p = dys.parent[k][b];
                if q.iter().any(|&x| dys.cube_of[k - 1][x] != p) {
                    report.push("nesting", vec![k, b], "cube not inside its parent");
                }
            }
        }
        let sw = measure_sandwich(s, dys.delta, k, centers, &dys.cubes[k], &dys.cube_of[k]);
        if !(sw.inner > 0.0) {
            report.push("sandwich-inner", vec![k], format!("inner constant {}", sw.inner));
        }
        if sw.outer > dys.c_nat_upper {
            report.push(
                "sandwich-outer",
                vec![k],
                format!("outer constant {} > C_nat = {}", sw.outer, dys.c_nat_upper),
            );
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(n: usize, spacing: f64) -> QuasiMetricSpace {
        QuasiMetricSpace::from_fn(n, vec![1.0; n], 1.0, |i, j| (i as f64 - j as f64).abs() * spacing)
            .unwrap()
    }

    #[test]
    fn default_delta_is_power_of_half() {
        assert_eq!(default_delta(1.0), 1.0 / 16.0);
        assert_eq!(default_delta(2.0), 1.0 / 128.0);
    }

    #[test]
    fn single_point() {
        let s = line(1, 1.0);
        let dys = DyadicSystem::build(&s, Some(0.5 / 12.0), Some(3)).unwrap();
        assert!(dys.centers.iter().all(|c| c == &vec![0]));
        assert!(verify_dyadic(&s, &dys).is_empty());
        let idx = refine_subcubes(&dys, dys.min_j0()).unwrap();
        assert_eq!(idx.count(0, 0), 1);
    }

    #[test]
    fn two_points_both_admitted_at_level_zero() {
        let s = line(2, 1.0);
        let dys = DyadicSystem::build(&s, Some(1.0 / 12.0), None).unwrap();
        assert_eq!(dys.k_max, 0);
        assert_eq!(dys.centers[0], vec![0, 1]);
        assert_eq!(dys.cubes[0], vec![vec![0], vec![1]]);
        assert!(verify_dyadic(&s, &dys).is_empty());
    }

    #[test]
    fn eight_point_grid_all_singletons() {
        let s = line(8, 1.0);
        let dys = DyadicSystem::build(&s, Some(1.0 / 16.0), None).unwrap();
        assert_eq!(dys.centers[0], (0..8).collect::<Vec<_>>());
        assert!(dys.deepest_is_singleton());
        assert!(verify_dyadic(&s, &dys).is_empty());
    }

    #[test]
    fn rejects_large_delta() {
        let s = line(4, 1.0);
        assert!(build_nets(&s, 0.2, None).is_err());
        assert!(build_nets(&s, 0.0, None).is_err());
    }

    #[test]
    fn fine_grid_has_nontrivial_tree() {
        let s = line(64, 1.0 / 32.0);
        let dys = DyadicSystem::build(&s, None, None).unwrap();
        assert!(dys.k_max >= 2);
        assert!(dys.cubes[0].len() < dys.cubes[1].len());
        assert!(verify_dyadic(&s, &dys).is_empty());
        let j0 = dys.min_j0();
        let idx = refine_subcubes(&dys, j0).unwrap();
        for k in 0..dys.levels() {
            let l = idx.sub_level[k].unwrap();
            let total: usize = (0..dys.centers[k].len()).map(|a| idx.count(k, a)).sum();
            assert_eq!(total, dys.centers[l].len());
            for a in 0..dys.centers[k].len() {
                let mut union: Vec<usize> =
                    idx.subcubes[k][a].iter().flat_map(|&b| dys.cubes[l][b].clone()).collect();
                union.sort_unstable();
                assert_eq!(union, dys.cubes[k][a]);
            }
        }
        assert!(refine_subcubes(&dys, 0).is_err());
    }
}
