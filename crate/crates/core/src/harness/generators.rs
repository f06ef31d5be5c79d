use crate::error::{HardyError, Result};
use crate::space::{doubling_profile, verify_space, DoublingProfile, QuasiMetricSpace};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Space generators. All masses are 1 unless stated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpaceKind {
    /// `n` equally spaced points on a line.
    Grid1d {
        n: usize,
        #[serde(default = "unit")]
        spacing: f64,
    },
    /// `rows × cols` lattice with the Euclidean distance.
    Grid2d {
        rows: usize,
        cols: usize,
        #[serde(default = "unit")]
        spacing: f64,
    },
    /// Line points with `d = |x − y|²`, a quasi-metric with `A0 = 2`.
    SnowflakeSquare {
        n: usize,
        #[serde(default = "unit")]
        spacing: f64,
    },
    /// Binary strings of length `depth`; `d(x, y) = top · ratio^{ℓ}` with `ℓ` the common prefix length.
    CantorUltrametric {
        depth: usize,
        #[serde(default = "two")]
        top: f64,
        #[serde(default = "quarter")]
        ratio: f64,
    },
    /// Shortest-path metric of a ring with random chords; random masses in `[0.5, 2]`.
    WeightedGraph {
        n: usize,
        #[serde(default = "default_chords")]
        chords: usize,
        #[serde(default = "unit")]
        spacing: f64,
        seed: u64,
    },
    /// Uniform points in `[0, side]^dim`; random masses in `[0.5, 1.5]`.
    RandomCloud {
        n: usize,
        dim: usize,
        #[serde(default = "unit")]
        side: f64,
        seed: u64,
    },
}

fn unit() -> f64 {
    1.0
}
fn two() -> f64 {
    2.0
}
fn quarter() -> f64 {
    0.25
}
fn default_chords() -> usize {
    4
}

impl SpaceKind {
    pub fn name(&self) -> String {
        match self {
            SpaceKind::Grid1d { n, .. } => format!("grid1d({n})"),
            SpaceKind::Grid2d { rows, cols, .. } => format!("grid2d({rows}x{cols})"),
            SpaceKind::SnowflakeSquare { n, .. } => format!("snowflake_square({n})"),
            SpaceKind::CantorUltrametric { depth, .. } => format!("cantor_ultrametric(depth {depth})"),
            SpaceKind::WeightedGraph { n, .. } => format!("weighted_graph({n})"),
            SpaceKind::RandomCloud { n, dim, .. } => format!("random_cloud({n}, dim {dim})"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct GeneratedSpace {
    pub kind: SpaceKind,
    pub space: QuasiMetricSpace,
    pub doubling: DoublingProfile,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(HardyError::Parameter(format!("{name} must be positive and finite, got {v}")))
    }
}

fn nonempty(n: usize) -> Result<()> {
    if n == 0 {
        Err(HardyError::Parameter("a space needs at least one point".into()))
    } else {
        Ok(())
    }
}

/// Build the space, check every axiom and attach its doubling profile.
pub fn generate_space(kind: &SpaceKind) -> Result<GeneratedSpace> {
    let space = build(kind)?;
    let report = verify_space(&space);
    if !report.is_empty() {
        return Err(HardyError::Parameter(format!("generated space is invalid: {report}")));
    }
    let doubling = doubling_profile(&space);
    Ok(GeneratedSpace { kind: kind.clone(), space, doubling })
}

fn build(kind: &SpaceKind) -> Result<QuasiMetricSpace> {
    match *kind {
        SpaceKind::Grid1d { n, spacing } => {
            nonempty(n)?;
            positive("spacing", spacing)?;
            QuasiMetricSpace::from_fn(n, vec![1.0; n], 1.0, |i, j| (i as f64 - j as f64).abs() * spacing)
        }
        SpaceKind::Grid2d { rows, cols, spacing } => {
            nonempty(rows * cols)?;
            positive("spacing", spacing)?;
            let n = rows * cols;
            QuasiMetricSpace::from_fn(n, vec![1.0; n], 1.0, |i, j| {
                let (di, dj) = ((i / cols) as f64 - (j / cols) as f64, (i % cols) as f64 - (j % cols) as f64);
                (di * di + dj * dj).sqrt() * spacing
            })
        }
        SpaceKind::SnowflakeSquare { n, spacing } => {
            nonempty(n)?;
            positive("spacing", spacing)?;
            QuasiMetricSpace::from_fn(n, vec![1.0; n], 2.0, |i, j| {
                let t = (i as f64 - j as f64) * spacing;
                t * t
            })
        }
        SpaceKind::CantorUltrametric { depth, top, ratio } => {
            if depth > 14 {
                return Err(HardyError::Parameter(format!("depth {depth} is above the supported 14")));
            }
            positive("top", top)?;
            if !(ratio > 0.0 && ratio < 1.0) {
                return Err(HardyError::Parameter(format!("ratio must lie in (0, 1), got {ratio}")));
            }
            let n = 1usize << depth;
            QuasiMetricSpace::from_fn(n, vec![1.0; n], 1.0, |i, j| {
                if i == j {
                    return 0.0;
                }
                let prefix = depth - (usize::BITS - (i ^ j).leading_zeros()) as usize;
                top * ratio.powi(prefix as i32)
            })
        }
        SpaceKind::WeightedGraph { n, chords, spacing, seed } => {
            nonempty(n)?;
            positive("spacing", spacing)?;
            if n > 2048 {
                return Err(HardyError::TooLarge { n, cap: 2048 });
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut d = vec![f64::INFINITY; n * n];
            for x in 0..n {
                d[x * n + x] = 0.0;
            }
            let edge = |d: &mut [f64], a: usize, b: usize, w: f64| {
                if a != b && w < d[a * n + b] {
                    d[a * n + b] = w;
                    d[b * n + a] = w;
                }
            };
            for x in 0..n.saturating_sub(1) {
                let w = spacing * rng.random_range(0.5..1.5);
                edge(&mut d, x, x + 1, w);
            }
            if n > 2 {
                let w = spacing * rng.random_range(0.5..1.5);
                edge(&mut d, n - 1, 0, w);
            }
            for _ in 0..chords * n / 8 {
                let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
                let w = spacing * rng.random_range(1.0..3.0);
                edge(&mut d, a, b, w);
            }
            for k in 0..n {
                for i in 0..n {
                    let dik = d[i * n + k];
                    if dik.is_infinite() {
                        continue;
                    }
                    for j in 0..n {
                        let v = dik + d[k * n + j];
                        if v < d[i * n + j] {
                            d[i * n + j] = v;
                        }
                    }
                }
            }
            let mu: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
            QuasiMetricSpace::from_flat(n, d, mu, 1.0)
        }
        SpaceKind::RandomCloud { n, dim, side, seed } => {
            nonempty(n)?;
            positive("side", side)?;
            if dim == 0 {
                return Err(HardyError::Parameter("dim must be at least 1".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pts: Vec<Vec<f64>> = (0..n).map(|_| (0..dim).map(|_| rng.random_range(0.0..side)).collect()).collect();
            let mu: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..1.5)).collect();
            QuasiMetricSpace::from_fn(n, mu, 1.0, |i, j| {
                pts[i].iter().zip(&pts[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::quasi_triangle_constant;

    #[test]
    fn examples() {
        let g = generate_space(&SpaceKind::Grid1d { n: 2, spacing: 1.0 }).unwrap();
        assert_eq!(g.space.d(0, 1), 1.0);
        let sf = generate_space(&SpaceKind::SnowflakeSquare { n: 3, spacing: 1.0 }).unwrap();
        assert_eq!(quasi_triangle_constant(&sf.space), 2.0);
        let c = generate_space(&SpaceKind::CantorUltrametric { depth: 3, top: 2.0, ratio: 0.25 }).unwrap();
        assert_eq!(quasi_triangle_constant(&c.space), 1.0);
        assert_eq!(c.space.d(0, 1), 2.0 * 0.25f64.powi(2));
        assert_eq!(c.space.d(0, 4), 2.0);
        let s = &c.space;
        for x in 0..8 {
            for y in 0..8 {
                for z in 0..8 {
                    assert!(s.d(x, y) <= s.d(x, z).max(s.d(z, y)));
                }
            }
        }
    }

    #[test]
    fn random_kinds_are_valid() {
        generate_space(&SpaceKind::WeightedGraph { n: 24, chords: 4, spacing: 0.1, seed: 3 }).unwrap();
        generate_space(&SpaceKind::RandomCloud { n: 24, dim: 2, side: 1.0, seed: 3 }).unwrap();
        generate_space(&SpaceKind::Grid2d { rows: 3, cols: 4, spacing: 0.5 }).unwrap();
    }
}
