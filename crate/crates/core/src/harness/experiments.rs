use super::generators::SpaceKind;
use super::suite::{build_suite, normalize_atom, InputKind, random_ball, random_local_atom, SuiteConfig, SuiteItem};
use super::workspace::{ModelParams, Workspace};
use crate::atoms::{enclosing_radius, global_atom_ball, validate_global_atom, validate_local_atom};
use crate::decompose::{atomic_decompose_maximal, atomic_decompose_wavelet, AtomicDecomposition};
use crate::error::{HardyError, Result};
use crate::maximal::{grand_maximal_dict, lp_quasinorm, nontangential_from_pf, radial_from_pf};
use crate::par;
use crate::square::{g_from_qf, gstar_from_qf, lusin_from_qf, significant_levels};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub space: SpaceKind,
    pub model: ModelParams,
    pub p_grid: Vec<f64>,
    pub theta: f64,
    /// `g*_λ` exponent; `None` uses `2ω/p + 1`.
    pub lambda: Option<f64>,
    pub suite: SuiteConfig,
    /// Apertures for the θ-monotonicity check.
    pub thetas: Vec<f64>,
    /// Extra exponents for the λ-monotonicity check, added to the default λ.
    pub lambda_offsets: Vec<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            space: SpaceKind::Grid1d { n: 64, spacing: 1.0 / 32.0 },
            model: ModelParams::default(),
            p_grid: vec![0.7, 0.8, 0.9, 1.0],
            theta: 1.0,
            lambda: None,
            suite: SuiteConfig::default(),
            thetas: vec![0.5, 1.0, 2.0],
            lambda_offsets: vec![0.0, 1.0, 3.0],
        }
    }
}

/// Names of the tabulated quasi-norms, in table order.
pub const NORM_NAMES: [&str; 9] = [
    "radial",
    "nontangential",
    "grand_dict",
    "lusin",
    "g",
    "gstar",
    "lusin_gauss",
    "atomic_maximal",
    "atomic_wavelet",
];

/// The norms whose pairwise ratios the equivalence tables are judged on.
pub const EQUIVALENCE_SET: [&str; 7] = ["radial", "nontangential", "lusin", "g", "gstar", "atomic_maximal", "atomic_wavelet"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioRow {
    pub numerator: String,
    pub denominator: String,
    pub min: f64,
    pub max: f64,
    pub median: f64,
    pub count: usize,
}

impl RatioRow {
    /// `max / min`.
    pub fn spread(&self) -> f64 {
        self.max / self.min
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceTable {
    pub p: f64,
    pub lambda: f64,
    pub rows: Vec<RatioRow>,
}

impl EquivalenceTable {
    pub fn row(&self, a: &str, b: &str) -> Option<&RatioRow> {
        self.rows.iter().find(|r| r.numerator == a && r.denominator == b)
    }

    /// Largest `max/min` over pairs drawn from `names`.
    pub fn worst_spread(&self, names: &[&str]) -> f64 {
        self.rows
            .iter()
            .filter(|r| names.contains(&r.numerator.as_str()) && names.contains(&r.denominator.as_str()))
            .map(RatioRow::spread)
            .fold(1.0, f64::max)
    }
}

/// Per-`p` constants realized by the two decomposition routes over the suite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RouteStats {
    pub p: f64,
    /// Max of `Σ|λ|^p / ‖f*_{0,dict}‖_p^p`.
    pub maximal_ratio: f64,
    pub maximal_max_residual: f64,
    pub maximal_invalid_atoms: usize,
    pub maximal_atoms: usize,
    pub c_tilde_max: f64,
    /// `max ‖g^j‖_∞ / 2^j`.
    pub good_ratio_max: f64,
    pub cz_identity_error: f64,
    pub cz_reconstruction_error: f64,
    pub cz_cancellation_error: f64,
    pub correction_error: f64,
    /// Max of `Σ(λ^{j,i})^p / ‖S_0 f‖_p^p`.
    pub wavelet_ratio: f64,
    /// Max of the emitted atoms' `Σ|λ|^p / ‖S_0 f‖_p^p`.
    pub wavelet_atom_ratio: f64,
    pub wavelet_max_residual: f64,
    pub wavelet_piece_residual: f64,
    pub wavelet_invalid_atoms: usize,
    pub wavelet_atoms: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub config: ExperimentConfig,
    pub space: String,
    pub n: usize,
    pub omega: f64,
    pub beta: f64,
    pub p_threshold: f64,
    pub tables: Vec<EquivalenceTable>,
    pub routes: Vec<RouteStats>,
    /// Points where `M_{θ1,0} f > M_{θ2,0} f` for some `θ1 < θ2`.
    pub theta_violations: usize,
    /// Points where `g*_{λ2,0} f > g*_{λ1,0} f` for some `λ1 < λ2`.
    pub lambda_violations: usize,
    /// Per input and `p`, the values in [`NORM_NAMES`] order.
    pub values: Vec<NormRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormRecord {
    pub p: f64,
    pub index: usize,
    pub kind: super::suite::InputKind,
    pub norms: Vec<f64>,
}

struct ItemResult {
    norms: Vec<f64>,
    maximal: crate::decompose::MaximalRouteInfo,
    maximal_residual: f64,
    maximal_atoms: usize,
    wavelet: crate::decompose::WaveletRouteInfo,
    wavelet_residual: f64,
    wavelet_atoms: usize,
    theta_violations: usize,
    lambda_violations: usize,
}

fn evaluate(ws: &Workspace, cfg: &ExperimentConfig, item: &SuiteItem, p: f64, lambda: f64) -> Result<ItemResult> {
    let s = ws.space();
    let f = &item.f;
    let n_low = ws.params.n_low;
    let pf = ws.gauss.apply_all_p(f)?;
    let radial = radial_from_pf(&pf, &ws.dys, &ws.subidx, n_low)?;
    let nontan = nontangential_from_pf(&pf, &ws.gauss, s, cfg.theta);
    let mut theta_violations = 0;
    let mut thetas = cfg.thetas.clone();
    thetas.sort_by(f64::total_cmp);
    let per_theta: Vec<Vec<f64>> = thetas.iter().map(|&t| nontangential_from_pf(&pf, &ws.gauss, s, t)).collect();
    for w in per_theta.windows(2) {
        theta_violations += w[0].iter().zip(&w[1]).filter(|(a, b)| a > b).count();
    }
    let grand = grand_maximal_dict(&ws.dict, f)?;
    let qf = significant_levels(&ws.haar, f)?;
    let lusin = lusin_from_qf(&qf, &ws.haar, s, cfg.theta);
    let g = g_from_qf(&qf, s, &ws.dys, &ws.subidx, Some(n_low))?;
    let gstar = gstar_from_qf(&qf, &ws.haar, s, lambda);
    let mut lambda_violations = 0;
    let per_lambda: Vec<Vec<f64>> = cfg.lambda_offsets.iter().map(|&o| gstar_from_qf(&qf, &ws.haar, s, lambda + o.abs())).collect();
    let mut order: Vec<usize> = (0..per_lambda.len()).collect();
    order.sort_by(|&a, &b| cfg.lambda_offsets[a].abs().total_cmp(&cfg.lambda_offsets[b].abs()));
    for w in order.windows(2) {
        lambda_violations += per_lambda[w[0]].iter().zip(&per_lambda[w[1]]).filter(|(a, b)| b > a).count();
    }
    let qg = significant_levels(&ws.gauss, f)?;
    let lusin_gauss = lusin_from_qf(&qg, &ws.gauss, s, cfg.theta);
    let (mdec, maximal) = atomic_decompose_maximal(s, &ws.dict, f, p)?;
    let eps = ws.default_eps(p, 64);
    let (wdec, wavelet) = atomic_decompose_wavelet(s, &ws.dys, &ws.haar, f, p, n_low, &eps)?;
    let mut norms = Vec::with_capacity(NORM_NAMES.len());
    for v in [&radial, &nontan, &grand, &lusin, &g, &gstar, &lusin_gauss] {
        norms.push(lp_quasinorm(s, v, p)?);
    }
    norms.push(mdec.coefficient_norm());
    norms.push(wdec.coefficient_norm());
    Ok(ItemResult {
        norms,
        maximal_residual: mdec.residual,
        maximal_atoms: mdec.len(),
        maximal,
        wavelet_residual: wdec.residual,
        wavelet_atoms: wdec.len(),
        wavelet,
        theta_violations,
        lambda_violations,
    })
}

fn median(sorted: &[f64]) -> f64 {
    let m = sorted.len();
    if m == 0 {
        f64::NAN
    } else if m % 2 == 1 {
        sorted[m / 2]
    } else {
        0.5 * (sorted[m / 2 - 1] + sorted[m / 2])
    }
}

fn ratio_rows(values: &[Vec<f64>]) -> Vec<RatioRow> {
    let mut rows = Vec::new();
    for a in 0..NORM_NAMES.len() {
        for b in 0..NORM_NAMES.len() {
            if a == b {
                continue;
            }
            let mut r: Vec<f64> = values
                .iter()
                .filter(|v| v[a] > 0.0 && v[b] > 0.0)
                .map(|v| v[a] / v[b])
                .collect();
            r.sort_by(f64::total_cmp);
            rows.push(RatioRow {
                numerator: NORM_NAMES[a].into(),
                denominator: NORM_NAMES[b].into(),
                min: r.first().copied().unwrap_or(f64::NAN),
                max: r.last().copied().unwrap_or(f64::NAN),
                median: median(&r),
                count: r.len(),
            });
        }
    }
    rows
}

/// Default `g*_λ` exponent `2ω/p + 1`.
pub fn default_lambda(omega: f64, p: f64) -> f64 {
    2.0 * omega / p + 1.0
}

/// Tabulate all pairwise ratios of the quasi-norms over a seeded suite, for
/// every admissible `p` of the grid.
pub fn run_equivalence_experiment(cfg: &ExperimentConfig) -> Result<EquivalenceReport> {
    let ws = Workspace::build(&cfg.space, &cfg.model)?;
    run_equivalence_on(&ws, cfg)
}

pub fn run_equivalence_on(ws: &Workspace, cfg: &ExperimentConfig) -> Result<EquivalenceReport> {
    if cfg.suite.size == 0 {
        return Err(HardyError::EmptySuite);
    }
    equivalence(ws, cfg, None)
}

/// The same tables over explicit inputs instead of the seeded suite.
pub fn run_equivalence_on_inputs(ws: &Workspace, cfg: &ExperimentConfig, inputs: &[Vec<f64>]) -> Result<EquivalenceReport> {
    if inputs.is_empty() {
        return Err(HardyError::EmptySuite);
    }
    if let Some(f) = inputs.iter().find(|f| f.len() != ws.space().n()) {
        return Err(HardyError::Shape { expected: ws.space().n(), got: f.len() });
    }
    equivalence(ws, cfg, Some(inputs))
}

fn equivalence(ws: &Workspace, cfg: &ExperimentConfig, inputs: Option<&[Vec<f64>]>) -> Result<EquivalenceReport> {
    let s = ws.space();
    let ps = ws.admissible_p(&cfg.p_grid);
    if ps.is_empty() {
        return Err(HardyError::Parameter(format!(
            "no p of the grid lies above the admissible threshold {:.4}",
            ws.p_threshold()
        )));
    }
    let mut tables = Vec::new();
    let mut routes = Vec::new();
    let mut values = Vec::new();
    let (mut theta_violations, mut lambda_violations) = (0, 0);
    for &p in &ps {
        let lambda = cfg.lambda.unwrap_or_else(|| default_lambda(ws.omega, p));
        let suite: Vec<SuiteItem> = match inputs {
            Some(fs) => fs
                .iter()
                .enumerate()
                .map(|(index, f)| SuiteItem { index, kind: InputKind::Custom, f: f.clone() })
                .collect(),
            None => build_suite(s, &ws.gauss, &cfg.suite, p)?,
        };
        // f = 0 has every norm 0 and no ratio
        let suite: Vec<SuiteItem> = suite.into_iter().filter(|it| it.f.iter().any(|&v| v != 0.0)).collect();
        let results: Vec<ItemResult> =
            par::map_slice(&suite, |item| evaluate(ws, cfg, item, p, lambda)).into_iter().collect::<Result<_>>()?;
        let mut stats = RouteStats {
            p,
            maximal_ratio: 0.0,
            maximal_max_residual: 0.0,
            maximal_invalid_atoms: 0,
            maximal_atoms: 0,
            c_tilde_max: 0.0,
            good_ratio_max: 0.0,
            cz_identity_error: 0.0,
            cz_reconstruction_error: 0.0,
            cz_cancellation_error: 0.0,
            correction_error: 0.0,
            wavelet_ratio: 0.0,
            wavelet_atom_ratio: 0.0,
            wavelet_max_residual: 0.0,
            wavelet_piece_residual: 0.0,
            wavelet_invalid_atoms: 0,
            wavelet_atoms: 0,
        };
        for (item, r) in suite.iter().zip(&results) {
            let m = &r.maximal;
            stats.maximal_ratio = stats.maximal_ratio.max(m.coefficient_ratio);
            stats.maximal_max_residual = stats.maximal_max_residual.max(r.maximal_residual);
            stats.maximal_invalid_atoms += m.invalid_atoms;
            stats.maximal_atoms += r.maximal_atoms;
            stats.c_tilde_max = stats.c_tilde_max.max(m.c_tilde);
            stats.good_ratio_max = stats.good_ratio_max.max(m.good_ratio);
            stats.cz_identity_error = stats.cz_identity_error.max(m.cz_identity_error);
            stats.cz_reconstruction_error = stats.cz_reconstruction_error.max(m.cz_reconstruction_error);
            stats.cz_cancellation_error = stats.cz_cancellation_error.max(m.cz_cancellation_error);
            stats.correction_error = stats.correction_error.max(m.correction_error);
            let w = &r.wavelet;
            stats.wavelet_ratio = stats.wavelet_ratio.max(w.coefficient_ratio);
            stats.wavelet_atom_ratio = stats.wavelet_atom_ratio.max(w.atom_ratio);
            stats.wavelet_max_residual = stats.wavelet_max_residual.max(r.wavelet_residual);
            stats.wavelet_piece_residual = stats.wavelet_piece_residual.max(w.piece_residual);
            stats.wavelet_invalid_atoms += w.invalid_atoms;
            stats.wavelet_atoms += r.wavelet_atoms;
            theta_violations += r.theta_violations;
            lambda_violations += r.lambda_violations;
            values.push(NormRecord { p, index: item.index, kind: item.kind, norms: r.norms.clone() });
        }
        let norms: Vec<Vec<f64>> = results.iter().map(|r| r.norms.clone()).collect();
        tables.push(EquivalenceTable { p, lambda, rows: ratio_rows(&norms) });
        routes.push(stats);
    }
    Ok(EquivalenceReport {
        config: cfg.clone(),
        space: cfg.space.name(),
        n: s.n(),
        omega: ws.omega,
        beta: ws.beta,
        p_threshold: ws.p_threshold(),
        tables,
        routes,
        theta_violations,
        lambda_violations,
        values,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GlobalLocalReport {
    pub config: ExperimentConfig,
    pub space: String,
    pub p: Vec<f64>,
    /// Inputs with `Σ f μ ≠ 0` sent through the maximal route.
    pub nonzero_mean_inputs: usize,
    pub decompositions_ok: usize,
    pub max_residual: f64,
    /// `max |Σ (f − P_0 f) μ|` over the suite, haar family (exactly conservative).
    pub conservation_error: f64,
    /// `max |Σ (f − P_0 f) μ| / ‖f‖_{L^1}` over the suite, gauss family; bounded by its marginal error.
    pub gauss_conservation_error: f64,
    pub global_atoms: usize,
    /// Global atoms rejected by the local validator (expected 0).
    pub global_not_local: usize,
    /// Global atoms rejected by the global validator (generator sanity, expected 0).
    pub global_invalid: usize,
    pub local_atoms_split: usize,
    /// `max |Σ a_1 μ|` over the split parts `a_1 = a − m_X(a)`.
    pub split_mean_error: f64,
    /// Splits with `|m_X(a)| > μ(X)^{-1/p}`.
    pub literal_mean_violations: usize,
    /// Largest `|m_X(a)| / μ(X)^{-1/p}`.
    pub worst_literal_ratio: f64,
    /// Splits with `|m_X(a)| > μ(B)^{1−1/p} / μ(X)`, the bound implied by the atom's size (expected 0).
    pub exact_mean_violations: usize,
    /// Largest `‖a_1‖_q / μ(X)^{1/q−1/p}`: the constant making `a_1` a global atom.
    pub split_constant: f64,
}

/// A random global atom: mean-zero on a random ball, normalized on its least
/// enclosing ball.
pub fn random_global_atom(ws: &Workspace, rng: &mut ChaCha8Rng, p: f64, q: f64) -> Vec<f64> {
    let s = ws.space();
    let (x, r) = random_ball(s, rng);
    let members: Vec<usize> = s.ball_members(x, r).iter().map(|&y| y as usize).collect();
    let mu = s.masses();
    let mut a = vec![0.0; s.n()];
    for &y in &members {
        a[y] = StandardNormal.sample(rng);
    }
    let mass: f64 = members.iter().map(|&y| mu[y]).sum();
    let mean = members.iter().map(|&y| a[y] * mu[y]).sum::<f64>() / mass;
    for &y in &members {
        a[y] -= mean;
    }
    if let Some((c, rad)) = global_atom_ball(s, &a) {
        normalize_atom(s, &mut a, c, rad, p, q);
    }
    a
}

/// The local/global bridge on a finite space: local decompositions of inputs
/// with nonzero mean, conservation of `P_0`, global atoms as local atoms, and
/// the split `a = (a − m_X(a)) + m_X(a)` of local atoms.
pub fn global_vs_local_experiment(ws: &Workspace, cfg: &ExperimentConfig, atoms: usize) -> Result<GlobalLocalReport> {
    let s = ws.space();
    let mu = s.masses();
    let total = s.total_mass();
    let ps = ws.admissible_p(&cfg.p_grid);
    let mut rep = GlobalLocalReport {
        config: cfg.clone(),
        space: cfg.space.name(),
        p: ps.clone(),
        nonzero_mean_inputs: 0,
        decompositions_ok: 0,
        max_residual: 0.0,
        conservation_error: 0.0,
        gauss_conservation_error: 0.0,
        global_atoms: 0,
        global_not_local: 0,
        global_invalid: 0,
        local_atoms_split: 0,
        split_mean_error: 0.0,
        literal_mean_violations: 0,
        worst_literal_ratio: 0.0,
        exact_mean_violations: 0,
        split_constant: 0.0,
    };
    for &p in &ps {
        let suite = build_suite(s, &ws.gauss, &cfg.suite, p)?;
        let outcomes = par::map_slice(&suite, |item| {
            let f = &item.f;
            let defect = |p0: Vec<f64>| f.iter().zip(&p0).zip(mu).map(|((a, b), m)| (a - b) * m).sum::<f64>().abs();
            let cons = defect(ws.haar.apply_p(0, f)?);
            let l1: f64 = f.iter().zip(mu).map(|(a, m)| a.abs() * m).sum();
            let gauss_cons = if l1 > 0.0 { defect(ws.gauss.apply_p(0, f)?) / l1 } else { 0.0 };
            let mean: f64 = f.iter().zip(mu).map(|(a, m)| a * m).sum();
            let dec = if mean.abs() > 1e-12 { Some(atomic_decompose_maximal(s, &ws.dict, f, p)) } else { None };
            Ok::<_, HardyError>((cons, gauss_cons, dec))
        });
        for o in outcomes {
            let (cons, gauss_cons, dec) = o?;
            rep.conservation_error = rep.conservation_error.max(cons);
            rep.gauss_conservation_error = rep.gauss_conservation_error.max(gauss_cons);
            if let Some(dec) = dec {
                rep.nonzero_mean_inputs += 1;
                if let Ok((d, info)) = dec {
                    if info.invalid_atoms == 0 {
                        rep.decompositions_ok += 1;
                    }
                    rep.max_residual = rep.max_residual.max(d.residual);
                }
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.suite.seed ^ 0x61_746f_6d73);
        for q in [2.0, f64::INFINITY] {
            let constant = vec![total.powf(-1.0 / p); s.n()];
            let mut globals = vec![constant];
            globals.extend((0..atoms).map(|_| random_global_atom(ws, &mut rng, p, q)));
            for a in &globals {
                rep.global_atoms += 1;
                if !validate_global_atom(s, a, p, q).is_empty() {
                    rep.global_invalid += 1;
                }
                let (c, r) = if crate::atoms::is_constant_atom(s, a, p) {
                    (0, s.diameter() + 1.0)
                } else {
                    global_atom_ball(s, a).unwrap_or((0, s.diameter() + 1.0))
                };
                if !validate_local_atom(s, a, c, r, p, q).is_empty() {
                    rep.global_not_local += 1;
                }
            }
            // random atoms, then the extremal ones: μ(B)^{-1/p} 1_B on the least big ball about each point
            let mut locals: Vec<(Vec<f64>, usize, f64)> = (0..atoms).map(|_| random_local_atom(s, &mut rng, p, q)).collect();
            let big = crate::kernels::next_up(1.0);
            locals.extend((0..s.n()).map(|x| {
                let height = s.ball_measure(x, big).powf(-1.0 / p);
                let mut a = vec![0.0; s.n()];
                for &y in s.ball_members(x, big) {
                    a[y as usize] = height;
                }
                (a, x, big)
            }));
            for (a, x, r) in locals {
                let m_x: f64 = a.iter().zip(mu).map(|(v, m)| v * m).sum::<f64>() / total;
                if r <= 1.0 || m_x == 0.0 {
                    continue;
                }
                rep.local_atoms_split += 1;
                let a1: Vec<f64> = a.iter().map(|v| v - m_x).collect();
                let err = a1.iter().zip(mu).map(|(v, m)| v * m).sum::<f64>().abs();
                rep.split_mean_error = rep.split_mean_error.max(err);
                let literal = total.powf(-1.0 / p);
                rep.worst_literal_ratio = rep.worst_literal_ratio.max(m_x.abs() / literal);
                if m_x.abs() > literal {
                    rep.literal_mean_violations += 1;
                }
                let exact = s.ball_measure(x, r).powf(1.0 - 1.0 / p) / total;
                if m_x.abs() > exact * (1.0 + 1e-12) {
                    rep.exact_mean_violations += 1;
                }
                let inv_q = if q.is_infinite() { 0.0 } else { 1.0 / q };
                let norm = if q.is_infinite() {
                    a1.iter().map(|v| v.abs()).fold(0.0, f64::max)
                } else {
                    a1.iter().zip(mu).map(|(v, m)| v.abs().powf(q) * m).sum::<f64>().powf(inv_q)
                };
                rep.split_constant = rep.split_constant.max(norm / total.powf(inv_q - 1.0 / p));
            }
        }
    }
    Ok(rep)
}

/// `max ‖a*_{0,dict}‖_p` over `count` random local `(p, ∞)`-atoms.
pub fn atom_maximal_bound(ws: &Workspace, p: f64, count: usize, seed: u64) -> Result<f64> {
    let s = ws.space();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let atoms: Vec<Vec<f64>> = (0..count).map(|_| random_local_atom(s, &mut rng, p, f64::INFINITY).0).collect();
    par::map_slice(&atoms, |a| lp_quasinorm(s, &grand_maximal_dict(&ws.dict, a)?, p))
        .into_iter()
        .try_fold(0.0f64, |m, v| Ok(m.max(v?)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DualityReport {
    pub p: f64,
    pub pairs: usize,
    /// Pairs with `|Σ f a μ| > ‖f‖_{ℓ_{1/p−1}} (1 + 1e-12)`.
    pub violations: usize,
    /// Largest `|Σ f a μ| / ‖f‖_{ℓ_{1/p−1}}`.
    pub worst_ratio: f64,
}

/// Pairs random Gaussian `f` against random local `(p, ∞)`-atoms and checks
/// `|⟨f, a⟩| ≤ ‖f‖_{ℓ_{1/p−1}}`.
pub fn duality_check(ws: &Workspace, p: f64, pairs: usize, seed: u64) -> Result<DualityReport> {
    let s = ws.space();
    let alpha = 1.0 / p - 1.0;
    let balls = crate::atoms::BallFamily::new(s);
    let mu = s.masses();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws: Vec<(Vec<f64>, Vec<f64>)> = (0..pairs)
        .map(|_| {
            let f: Vec<f64> = (0..s.n()).map(|_| StandardNormal.sample(&mut rng)).collect();
            let (a, _, _) = random_local_atom(s, &mut rng, p, f64::INFINITY);
            (f, a)
        })
        .collect();
    let ratios = par::map_slice(&draws, |(f, a)| {
        let pairing: f64 = f.iter().zip(a).zip(mu).map(|((u, v), m)| u * v * m).sum();
        let norm = balls.lipschitz(s, f, alpha);
        (pairing.abs(), norm)
    });
    let mut rep = DualityReport { p, pairs, violations: 0, worst_ratio: 0.0 };
    for (pairing, norm) in ratios {
        if pairing > norm * (1.0 + 1e-12) {
            rep.violations += 1;
        }
        if norm > 0.0 {
            rep.worst_ratio = rep.worst_ratio.max(pairing / norm);
        }
    }
    Ok(rep)
}

/// Upper bounds of the finite atomic norm from the three finite decompositions
/// available: `f` as one atom, the maximal route and the square-function route.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FiniteAtomicBound {
    pub single_atom: f64,
    pub maximal: f64,
    pub wavelet: f64,
    pub best: f64,
}

/// `‖f‖` as a single `(p, ∞)`-atom: the least `λ = ‖f‖_∞ μ(B)^{1/p}` over balls
/// about every center holding the support (radius pushed above 1 when `∫f ≠ 0`).
pub fn single_atom_coefficient(ws: &Workspace, f: &[f64], p: f64) -> f64 {
    let s = ws.space();
    let sup = f.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if sup == 0.0 {
        return 0.0;
    }
    let mu = s.masses();
    let integral: f64 = f.iter().zip(mu).map(|(v, m)| v * m).sum();
    let l1: f64 = f.iter().zip(mu).map(|(v, m)| v.abs() * m).sum();
    let cancels = integral.abs() <= crate::atoms::CANCEL_TOL * l1.max(1.0);
    (0..s.n())
        .map(|x| {
            let reach = (0..s.n()).filter(|&y| f[y] != 0.0).map(|y| s.d(x, y)).fold(0.0, f64::max);
            let mut r = enclosing_radius(reach);
            if r <= 1.0 && !cancels {
                r = crate::kernels::next_up(1.0).max(r);
            }
            sup * s.ball_measure(x, r).powf(1.0 / p)
        })
        .fold(f64::INFINITY, f64::min)
}

pub fn finite_atomic_upper_bound(ws: &Workspace, f: &[f64], p: f64) -> Result<FiniteAtomicBound> {
    let s = ws.space();
    let single_atom = single_atom_coefficient(ws, f, p);
    let (mdec, _) = atomic_decompose_maximal(s, &ws.dict, f, p)?;
    let eps = ws.default_eps(p, 64);
    let (wdec, _) = atomic_decompose_wavelet(s, &ws.dys, &ws.haar, f, p, ws.params.n_low, &eps)?;
    let maximal = mdec.coefficient_norm();
    let wavelet = wdec.coefficient_norm();
    Ok(FiniteAtomicBound { single_atom, maximal, wavelet, best: single_atom.min(maximal).min(wavelet) })
}

/// Convenience: the decomposition of `f` by the maximal route on a workspace.
pub fn decompose_maximal(ws: &Workspace, f: &[f64], p: f64) -> Result<AtomicDecomposition> {
    Ok(atomic_decompose_maximal(ws.space(), &ws.dict, f, p)?.0)
}
