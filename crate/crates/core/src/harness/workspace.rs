use super::generators::{generate_space, SpaceKind};
use crate::dyadic::{refine_subcubes, DyadicSystem, SubcubeIndex};
use crate::error::Result;
use crate::kernels::{build_gauss_sinkhorn_family, build_haar_family, verify_iati, IATIDiagnostics, OperatorFamily};
use crate::maximal::TestDictionary;
use crate::space::{doubling_profile, DoublingProfile, QuasiMetricSpace};
use serde::{Deserialize, Serialize};

/// Knobs shared by every experiment on one space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelParams {
    pub nu: f64,
    pub a: f64,
    pub delta: Option<f64>,
    pub k_max: Option<usize>,
    /// Threshold level `N` of the radial maximal function, `g` and the discrete formula.
    pub n_low: usize,
    pub j0: Option<usize>,
    /// Deepest dictionary level; `None` uses `min(K_max, 4)`.
    pub dict_levels: Option<usize>,
    /// Overrides `β = γ = min(0.49, 0.9 η_eff)`.
    pub beta: Option<f64>,
    pub diagnostics_seed: u64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            nu: 1.0,
            a: 1.0,
            delta: None,
            k_max: None,
            n_low: 1,
            j0: None,
            dict_levels: None,
            beta: None,
            diagnostics_seed: 0,
        }
    }
}

/// Fallback test-function exponent when the measured regularity is zero.
pub const FALLBACK_BETA: f64 = 0.1;

/// Everything built once per space: dyadic system, both families, the dictionary.
#[derive(Debug, Clone)]
pub struct Workspace {
    /// Human-readable name of the space.
    pub label: String,
    pub space: QuasiMetricSpace,
    pub doubling: DoublingProfile,
    pub params: ModelParams,
    pub dys: DyadicSystem,
    pub subidx: SubcubeIndex,
    pub haar: OperatorFamily,
    pub gauss: OperatorFamily,
    pub gauss_diagnostics: IATIDiagnostics,
    pub beta: f64,
    pub gamma: f64,
    pub omega: f64,
    pub dict: TestDictionary,
}

impl Workspace {
    pub fn build(kind: &SpaceKind, params: &ModelParams) -> Result<Self> {
        let g = generate_space(kind)?;
        Self::assemble(kind.name(), g.space, g.doubling, params)
    }

    /// Workspace on an already built space (e.g. loaded from a file).
    pub fn from_space(label: impl Into<String>, space: QuasiMetricSpace, params: &ModelParams) -> Result<Self> {
        let doubling = doubling_profile(&space);
        Self::assemble(label.into(), space, doubling, params)
    }

    fn assemble(label: String, space: QuasiMetricSpace, doubling: DoublingProfile, params: &ModelParams) -> Result<Self> {
        let s = &space;
        let dys = DyadicSystem::build(s, params.delta, params.k_max)?;
        let subidx = refine_subcubes(&dys, params.j0.unwrap_or_else(|| dys.min_j0()))?;
        let haar = build_haar_family(s, &dys)?;
        let mut gauss = build_gauss_sinkhorn_family(s, &dys, params.nu, params.a)?;
        let gauss_diagnostics = verify_iati(&gauss, s, params.diagnostics_seed);
        gauss.diagnostics = Some(gauss_diagnostics);
        let beta = params.beta.unwrap_or_else(|| {
            let b = (0.9 * gauss_diagnostics.eta_eff).min(0.49);
            if b > 0.0 {
                b
            } else {
                FALLBACK_BETA
            }
        });
        let omega = doubling.omega;
        let levels = params.dict_levels.unwrap_or(dys.k_max.min(4));
        let dict = TestDictionary::build(s, &gauss, &dys, beta, beta, levels)?;
        Ok(Self {
            params: params.clone(),
            dys,
            subidx,
            haar,
            gauss,
            gauss_diagnostics,
            beta,
            gamma: beta,
            omega,
            dict,
            label,
            space,
            doubling,
        })
    }

    pub fn space(&self) -> &crate::space::QuasiMetricSpace {
        &self.space
    }

    /// Lower end `ω / (ω + β ∧ γ)` of the admissible `p` range.
    pub fn p_threshold(&self) -> f64 {
        let m = self.beta.min(self.gamma);
        if self.omega <= 0.0 {
            0.0
        } else {
            self.omega / (self.omega + m)
        }
    }

    /// The grid values strictly above [`p_threshold`](Self::p_threshold).
    pub fn admissible_p(&self, grid: &[f64]) -> Vec<f64> {
        let t = self.p_threshold();
        grid.iter().copied().filter(|&p| p > t && p <= 1.0).collect()
    }

    /// `ε_m = δ^{m(γ′ − ω(1/p − 1))}` with `γ′` halfway between `ω(1/p − 1)` and `γ`.
    pub fn default_eps(&self, p: f64, count: usize) -> Vec<f64> {
        let lo = self.omega * (1.0 / p - 1.0);
        let gamma_prime = 0.5 * (lo + self.gamma.max(lo));
        crate::atoms::default_eps(self.dys.delta, gamma_prime, self.omega, p, count)
    }
}
