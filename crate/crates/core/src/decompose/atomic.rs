use super::cz::{correction_coefficients, correction_sum_error, cz_from_fstar, level_set, CZParts};
use super::{AtomEntry, AtomicDecomposition};
use crate::atoms::validate_local_atom;
use crate::error::{HardyError, Result};
use crate::maximal::{grand_maximal_dict, lp_quasinorm, TestDictionary};
use crate::space::QuasiMetricSpace;
use serde::Serialize;

/// Pieces with `‖h‖_∞ ≤ NEGLIGIBLE · ‖f‖_∞` are rounding noise of an exact zero
/// (e.g. `(f − m_k)φ_k` on a one-point support) and are dropped.
pub const NEGLIGIBLE: f64 = 1e-12;

/// Realized constants of one maximal-route run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaximalRouteInfo {
    pub j0: i32,
    /// First `j` with `Ω_j = ∅`.
    pub j_top: i32,
    /// `max ‖h^j_k‖_∞ / 2^j`.
    pub c_tilde: f64,
    /// `‖f*_{0,dict}‖_p`.
    pub fstar_norm: f64,
    /// `Σ|λ|^p / ‖f*_{0,dict}‖_p^p`.
    pub coefficient_ratio: f64,
    /// `max_j ‖g^j‖_∞ / 2^j`.
    pub good_ratio: f64,
    pub cz_identity_error: f64,
    /// `max_j ‖f − g^j − Σ_k b^j_k‖_∞ / ‖f‖_∞`.
    pub cz_reconstruction_error: f64,
    pub cz_cancellation_error: f64,
    /// Worst pointwise value of `Σ_k Σ_l L_{k,l} φ_l`.
    pub correction_error: f64,
    /// Atoms failing [`validate_local_atom`]; zero on a correct run.
    pub invalid_atoms: usize,
}

/// Atomic decomposition through the level sets of `f*_{0,dict}` (finite-measure
/// branch): `f = g^{j0} + Σ_{j ≥ j0} Σ_k h^j_k` with
/// `h^j_k = b^j_k − φ^j_k b^{j+1} + Σ_{l ∈ I*_{j+1}} L_{k,l} φ^{j+1}_l`,
/// every piece normalized into a `(p, ∞)`-atom on `B(x_k, 48 A0⁵ r_k)`.
pub fn atomic_decompose_maximal(
    s: &QuasiMetricSpace,
    dict: &TestDictionary,
    f: &[f64],
    p: f64,
) -> Result<(AtomicDecomposition, MaximalRouteInfo)> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(HardyError::Parameter(format!("p must lie in (0, 1], got {p}")));
    }
    if f.len() != s.n() {
        return Err(HardyError::Shape { expected: s.n(), got: f.len() });
    }
    let mut dec = AtomicDecomposition::empty(p, f64::INFINITY);
    let mut info = MaximalRouteInfo {
        j0: 0,
        j_top: 0,
        c_tilde: 0.0,
        fstar_norm: 0.0,
        coefficient_ratio: 0.0,
        good_ratio: 0.0,
        cz_identity_error: 0.0,
        cz_reconstruction_error: 0.0,
        cz_cancellation_error: 0.0,
        correction_error: 0.0,
        invalid_atoms: 0,
    };
    if f.iter().all(|&v| v == 0.0) {
        return Ok((dec, info));
    }
    let fstar = grand_maximal_dict(dict, f)?;
    let norm = lp_quasinorm(s, &fstar, p)?;
    if !(norm > 0.0) {
        return Err(HardyError::Parameter("the dictionary does not see f (f* vanishes)".into()));
    }
    let total = s.total_mass();
    let mut j0 = (norm / total.powf(1.0 / p)).log2().ceil() as i32;
    while 2f64.powi(j0) * total.powf(1.0 / p) < norm {
        j0 += 1;
    }
    while level_set(&fstar, j0).iter().all(|&b| b) {
        j0 += 1;
    }
    let mut j_top = j0;
    while level_set(&fstar, j_top).iter().any(|&b| b) {
        j_top += 1;
    }
    info.j0 = j0;
    info.j_top = j_top;
    info.fstar_norm = norm;

    let parts: Vec<CZParts> = (j0..j_top).map(|j| cz_from_fstar(s, &fstar, f, j)).collect::<Result<_>>()?;
    for cz in &parts {
        info.good_ratio = info.good_ratio.max(cz.good_ratio);
        info.cz_identity_error = info.cz_identity_error.max(cz.identity_error);
        info.cz_reconstruction_error = info.cz_reconstruction_error.max(cz.reconstruction_error);
        info.cz_cancellation_error = info.cz_cancellation_error.max(cz.cancellation_error);
    }
    let mu = s.masses();
    let n = s.n();
    let a0 = s.a0();
    let dilation = 48.0 * a0.powi(5);

    // raw pieces (j, k, h) before normalization
    let mut pieces: Vec<(i32, usize, Vec<f64>)> = Vec::new();
    for (i, cur) in parts.iter().enumerate() {
        let next = parts.get(i + 1);
        let next_bad = next.map(CZParts::bad_total);
        let coeffs = next.map(|nx| correction_coefficients(cur, nx, f, mu));
        if let (Some(nx), Some(c)) = (next, &coeffs) {
            info.correction_error = info.correction_error.max(correction_sum_error(nx, c));
        }
        for k in 0..cur.len() {
            let phi = &cur.partition.phi[k];
            let mut h = cur.bad[k].clone();
            if let (Some(nx), Some(nb), Some(c)) = (next, &next_bad, &coeffs) {
                for y in 0..n {
                    h[y] -= phi[y] * nb[y];
                }
                for (l, &cl) in c[k].iter().enumerate() {
                    if cl != 0.0 {
                        for (hy, pl) in h.iter_mut().zip(&nx.partition.phi[l]) {
                            *hy += cl * pl;
                        }
                    }
                }
            }
            pieces.push((cur.j, k, h));
        }
    }
    let floor = NEGLIGIBLE * f.iter().map(|v| v.abs()).fold(0.0, f64::max);
    pieces.retain(|(_, _, h)| h.iter().any(|&v| v.abs() > floor));
    let c_tilde = pieces
        .iter()
        .map(|(j, _, h)| h.iter().map(|v| v.abs()).fold(0.0, f64::max) / 2f64.powi(*j))
        .fold(0.0, f64::max);
    info.c_tilde = c_tilde;
    for (j, k, h) in pieces {
        let cover = &parts[(j - j0) as usize].cover;
        let (center, radius) = (cover.centers[k], dilation * cover.radii[k]);
        let lambda = c_tilde * 2f64.powi(j) * s.ball_measure(center, radius).powf(1.0 / p);
        let atom: Vec<f64> = h.iter().map(|v| v / lambda).collect();
        dec.entries.push(AtomEntry { lambda, center, radius, level: j as i64, index: k, atom });
    }

    // the coarse piece g^{j0}: g^{j0} = f when Ω_{j0} is empty
    let g0 = parts.first().map_or_else(|| f.to_vec(), |cz| cz.good.clone());
    let sup = g0.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if sup > 0.0 {
        let lambda = sup * total.powf(1.0 / p);
        let radius = s.diameter() + 1.0;
        dec.entries.push(AtomEntry {
            lambda,
            center: 0,
            radius,
            level: j0 as i64 - 1,
            index: 0,
            atom: g0.iter().map(|v| v / lambda).collect(),
        });
        info.good_ratio = info.good_ratio.max(sup / 2f64.powi(j0));
    }
    info.invalid_atoms = dec
        .entries
        .iter()
        .filter(|e| !validate_local_atom(s, &e.atom, e.center, e.radius, p, f64::INFINITY).is_empty())
        .count();
    dec.finish(f, mu);
    info.coefficient_ratio = dec.lp_sum / norm.powf(p);
    log::debug!(
        "maximal route: j0 = {j0}, j_top = {j_top}, {} atoms, C~ = {c_tilde:.4e}, ratio = {:.4e}",
        dec.len(),
        info.coefficient_ratio
    );
    Ok((dec, info))
}
