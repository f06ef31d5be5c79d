//! Calderón reproducing identities with `Q̃_k = D_k` for the Haar family.
//!
//! The continuous form `f = Σ_k D_k D_k f` holds exactly at full depth. The
//! discrete form replaces the low levels by subcube averages and the high levels
//! by sampled values; its residual is a measured diagnostic.

use crate::decompose::relative_residual;
use crate::dyadic::{DyadicSystem, SubcubeIndex};
use crate::error::{HardyError, Result};
use crate::kernels::{FamilyKind, OperatorFamily};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    ExactHaar,
    DiscreteSampled,
}

/// Choice of the sample points `y_α^{k,m} ∈ Q_α^{k,m}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampler {
    Center,
    /// The point where `Q_k f` is farthest from its subcube average.
    Worst,
    Random(u64),
}

impl fmt::Display for Sampler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sampler::Center => write!(f, "center"),
            Sampler::Worst => write!(f, "worst"),
            Sampler::Random(seed) => write!(f, "random:{seed}"),
        }
    }
}

impl FromStr for Sampler {
    type Err = HardyError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "center" => Ok(Sampler::Center),
            "worst" => Ok(Sampler::Worst),
            _ => s
                .strip_prefix("random:")
                .and_then(|seed| seed.parse().ok())
                .map(Sampler::Random)
                .ok_or_else(|| HardyError::Parameter(format!("unknown sampler {s:?}; use center, worst or random:SEED"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReproducingReport {
    pub route: Route,
    /// `residuals[K] = ‖f − Σ_{k ≤ K} (term k)‖_{L²} / ‖f‖_{L²}`.
    pub residuals: Vec<f64>,
    pub n_low: Option<usize>,
    pub j0: Option<usize>,
    pub sampler: Option<String>,
}

impl ReproducingReport {
    pub fn final_residual(&self) -> f64 {
        self.residuals.last().copied().unwrap_or(0.0)
    }
}

fn require_haar(fam: &OperatorFamily) -> Result<()> {
    if fam.kind != FamilyKind::HaarMartingale {
        return Err(HardyError::UnsupportedFamily("reproducing formulas need the haar family (Q̃_k = D_k)".into()));
    }
    Ok(())
}

/// `Σ_{k ≤ K} D_k D_k f` with the residual after every level.
pub fn reproduce_exact(fam: &OperatorFamily, f: &[f64], k_top: usize) -> Result<(Vec<f64>, ReproducingReport)> {
    require_haar(fam)?;
    if k_top >= fam.levels() {
        return Err(HardyError::Parameter(format!("K = {k_top} exceeds the last level {}", fam.levels() - 1)));
    }
    let mut approx = vec![0.0; f.len()];
    let mut residuals = Vec::with_capacity(k_top + 1);
    for k in 0..=k_top {
        let dkf = fam.apply_q(k, f)?;
        for (a, v) in approx.iter_mut().zip(fam.apply_q(k, &dkf)?) {
            *a += v;
        }
        residuals.push(relative_residual(f, &approx, fam.masses()));
    }
    Ok((approx, ReproducingReport { route: Route::ExactHaar, residuals, n_low: None, j0: None, sampler: None }))
}

/// The discrete identity: for `k ≤ N`, `Σ_{α,m} (∫_{Q_α^{k,m}} D_k(·, y) dμ(y)) · avg_{Q_α^{k,m}} Q_k f`;
/// for `k > N`, `Σ_{α,m} μ(Q_α^{k,m}) D_k(·, y_α^{k,m}) Q_k f(y_α^{k,m})`.
pub fn reproduce_discrete(
    fam: &OperatorFamily,
    dys: &DyadicSystem,
    subidx: &SubcubeIndex,
    f: &[f64],
    n_low: usize,
    sampler: Sampler,
) -> Result<(Vec<f64>, ReproducingReport)> {
    require_haar(fam)?;
    let n = f.len();
    if n != fam.n() {
        return Err(HardyError::Shape { expected: fam.n(), got: n });
    }
    let mu = fam.masses();
    let mut rng = match sampler {
        Sampler::Random(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
        _ => None,
    };
    let mut approx = vec![0.0; n];
    let mut residuals = Vec::with_capacity(fam.levels());
    for k in 0..fam.levels().min(dys.levels()) {
        let l = subidx.sub_level.get(k).copied().flatten().ok_or(HardyError::MissingSubcube(k))?;
        let qf = fam.apply_q(k, f)?;
        for (sub, members) in dys.cubes[l].iter().enumerate() {
            let mass: f64 = members.iter().map(|&y| mu[y]).sum();
            let avg = members.iter().map(|&y| qf[y] * mu[y]).sum::<f64>() / mass;
            if k <= n_low {
                for (x, a) in approx.iter_mut().enumerate() {
                    let w: f64 = members.iter().map(|&y| fam.q(k, x, y) * mu[y]).sum();
                    *a += w * avg;
                }
            } else {
                let y = match sampler {
                    Sampler::Center => dys.centers[l][sub],
                    Sampler::Worst => members
                        .iter()
                        .copied()
                        .max_by(|&a, &b| (qf[a] - avg).abs().total_cmp(&(qf[b] - avg).abs()).then(b.cmp(&a)))
                        .expect("cubes are nonempty"),
                    Sampler::Random(_) => {
                        let r = rng.as_mut().expect("seeded for random sampling");
                        members[r.random_range(0..members.len())]
                    }
                };
                for (x, a) in approx.iter_mut().enumerate() {
                    *a += mass * fam.q(k, x, y) * qf[y];
                }
            }
        }
        residuals.push(relative_residual(f, &approx, mu));
    }
    Ok((
        approx,
        ReproducingReport {
            route: Route::DiscreteSampled,
            residuals,
            n_low: Some(n_low),
            j0: Some(subidx.j0),
            sampler: Some(sampler.to_string()),
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::refine_subcubes;
    use crate::kernels::build_haar_family;
    use crate::space::QuasiMetricSpace;

    #[test]
    fn exact_route_on_four_points() {
        let s = QuasiMetricSpace::from_fn(4, vec![1.0; 4], 1.0, |i, j| (i as f64 - j as f64).abs() / 8.0).unwrap();
        let dys = DyadicSystem::build(&s, None, None).unwrap();
        let fam = build_haar_family(&s, &dys).unwrap();
        let e0 = [1.0, 0.0, 0.0, 0.0];
        let (approx, report) = reproduce_exact(&fam, &e0, fam.levels() - 1).unwrap();
        assert!(report.final_residual() < 1e-12);
        assert!(report.residuals.windows(2).all(|w| w[1] < w[0]));
        assert!((approx[0] - 1.0).abs() < 1e-12);
        let idx = refine_subcubes(&dys, dys.min_j0()).unwrap();
        for sampler in [Sampler::Center, Sampler::Worst, Sampler::Random(7)] {
            let (_, r) = reproduce_discrete(&fam, &dys, &idx, &e0, 1, sampler).unwrap();
            assert!(r.final_residual() < 1e-10);
        }
    }

    #[test]
    fn sampler_parsing() {
        assert_eq!("random:42".parse::<Sampler>().unwrap(), Sampler::Random(42));
        assert_eq!("center".parse::<Sampler>().unwrap(), Sampler::Center);
        assert!("random".parse::<Sampler>().is_err());
    }
}
