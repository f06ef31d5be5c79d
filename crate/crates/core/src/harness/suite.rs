use crate::error::{HardyError, Result};
use crate::kernels::OperatorFamily;
use crate::space::QuasiMetricSpace;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputKind {
    Smooth,
    Atom,
    Molecule,
    Spike,
    /// Supplied by the caller.
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SuiteConfig {
    pub size: usize,
    pub seed: u64,
    /// Weights of smooth : atoms : molecules : spikes.
    pub mix: [usize; 4],
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self { size: 100, seed: 1, mix: [4, 3, 2, 1] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteItem {
    pub index: usize,
    pub kind: InputKind,
    pub f: Vec<f64>,
}

/// A random ball for atoms: `(center, radius)` with at least two members, so
/// mean-zero atoms on it are nonzero. Radii are drawn from the distinct
/// distances about the center, so both `r ≤ 1` and `r > 1` occur when present.
pub fn random_ball(s: &QuasiMetricSpace, rng: &mut ChaCha8Rng) -> (usize, f64) {
    let x = rng.random_range(0..s.n());
    let dist = s.distinct_distances_from(x);
    if dist.len() < 2 {
        return (x, s.diameter() + 1.0);
    }
    // radius strictly above the first distance keeps at least two points
    let i = rng.random_range(1..dist.len() + 1);
    let r = if i == dist.len() { s.diameter() + 1.0 } else { dist[i] };
    (x, r)
}

/// A random local `(p, q)`-atom on a random ball, normalized so that
/// `‖a‖_q = μ(B)^{1/q − 1/p}` exactly; mean-zero when `r ≤ 1`.
pub fn random_local_atom(s: &QuasiMetricSpace, rng: &mut ChaCha8Rng, p: f64, q: f64) -> (Vec<f64>, usize, f64) {
    let (x, r) = random_ball(s, rng);
    let members: Vec<usize> = s.ball_members(x, r).iter().map(|&y| y as usize).collect();
    let mu = s.masses();
    let mut a = vec![0.0; s.n()];
    for &y in &members {
        a[y] = rng.sample::<f64, _>(StandardNormal);
    }
    if r <= 1.0 {
        let mass: f64 = members.iter().map(|&y| mu[y]).sum();
        let mean = members.iter().map(|&y| a[y] * mu[y]).sum::<f64>() / mass;
        for &y in &members {
            a[y] -= mean;
        }
    }
    normalize_atom(s, &mut a, x, r, p, q);
    (a, x, r)
}

/// Scale `a` so its `L^q` norm equals `μ(B(x, r))^{1/q − 1/p}`.
pub fn normalize_atom(s: &QuasiMetricSpace, a: &mut [f64], x: usize, r: f64, p: f64, q: f64) {
    let mu = s.masses();
    let norm = if q.is_infinite() {
        a.iter().map(|v| v.abs()).fold(0.0, f64::max)
    } else {
        a.iter().zip(mu).map(|(v, m)| v.abs().powf(q) * m).sum::<f64>().powf(1.0 / q)
    };
    if norm > 0.0 {
        let inv_q = if q.is_infinite() { 0.0 } else { 1.0 / q };
        let target = s.ball_measure(x, r).powf(inv_q - 1.0 / p);
        a.iter_mut().for_each(|v| *v *= target / norm);
    }
}

fn item_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64 + 1);
    rng
}

/// Seeded input suite. Kinds repeat in blocks following `mix`; item `i` draws
/// from its own stream, so the suite does not depend on evaluation order.
pub fn build_suite(s: &QuasiMetricSpace, smoother: &OperatorFamily, cfg: &SuiteConfig, p: f64) -> Result<Vec<SuiteItem>> {
    if cfg.size == 0 || cfg.mix.iter().sum::<usize>() == 0 {
        return Err(HardyError::EmptySuite);
    }
    let pattern: Vec<InputKind> = [InputKind::Smooth, InputKind::Atom, InputKind::Molecule, InputKind::Spike]
        .iter()
        .zip(cfg.mix)
        .flat_map(|(&k, c)| std::iter::repeat_n(k, c))
        .collect();
    let n = s.n();
    let mu = s.masses();
    let smooth_level = smoother.levels() / 2;
    (0..cfg.size)
        .map(|i| {
            let kind = pattern[i % pattern.len()];
            let mut rng = item_rng(cfg.seed, i);
            let f = match kind {
                InputKind::Smooth => {
                    let noise: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
                    smoother.apply_p(smooth_level, &noise)?
                }
                InputKind::Atom => random_local_atom(s, &mut rng, p, f64::INFINITY).0,
                InputKind::Molecule => {
                    let (x, r) = random_ball(s, &mut rng);
                    let r = r.min(s.diameter().max(f64::MIN_POSITIVE));
                    let mut m: Vec<f64> = (0..n)
                        .map(|y| rng.sample::<f64, _>(StandardNormal) * (-2.0 * s.d(x, y) / r).exp())
                        .collect();
                    if r <= 1.0 {
                        let mean = m.iter().zip(mu).map(|(v, w)| v * w).sum::<f64>() / s.total_mass();
                        m.iter_mut().for_each(|v| *v -= mean);
                    }
                    m
                }
                InputKind::Spike | InputKind::Custom => {
                    let x = rng.random_range(0..n);
                    let mut f = vec![0.0; n];
                    f[x] = rng.random_range(0.5..2.0) / mu[x];
                    f
                }
            };
            Ok(SuiteItem { index: i, kind, f })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atoms::validate_local_atom;
    use crate::dyadic::DyadicSystem;
    use crate::kernels::build_haar_family;

    #[test]
    fn atoms_are_valid_and_suite_is_reproducible() {
        let s = QuasiMetricSpace::from_fn(32, vec![1.0; 32], 1.0, |i, j| (i as f64 - j as f64).abs() / 8.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let (a, x, r) = random_local_atom(&s, &mut rng, 0.8, f64::INFINITY);
            assert!(validate_local_atom(&s, &a, x, r, 0.8, f64::INFINITY).is_empty());
            let (a, x, r) = random_local_atom(&s, &mut rng, 0.8, 1.0);
            assert!(validate_local_atom(&s, &a, x, r, 0.8, 1.0).is_empty());
        }
        let dys = DyadicSystem::build(&s, None, None).unwrap();
        let fam = build_haar_family(&s, &dys).unwrap();
        let cfg = SuiteConfig { size: 20, ..Default::default() };
        let a = build_suite(&s, &fam, &cfg, 0.9).unwrap();
        let b = build_suite(&s, &fam, &cfg, 0.9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.iter().filter(|i| i.kind == InputKind::Smooth).count(), 8);
        assert!(build_suite(&s, &fam, &SuiteConfig { size: 0, ..cfg }, 0.9).is_err());
    }
}
