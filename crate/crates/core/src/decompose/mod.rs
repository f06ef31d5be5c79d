//! Whitney covers, partitions of unity, Calderón–Zygmund pieces and the two
//! atomic decomposition algorithms (maximal-function route and square-function
//! route).

mod atomic;
mod cz;
mod wavelet;
mod whitney;

pub use atomic::{atomic_decompose_maximal, MaximalRouteInfo};
pub use cz::{correction_coefficients, correction_sum_error, cz_decompose, CZParts, IndexClass};
pub use wavelet::{atomic_decompose_wavelet, WaveletRouteInfo};
pub use whitney::{
    default_dilation, partition_holder_constant, partition_of_unity, verify_partition, verify_whitney, whitney_cover,
    PartitionOfUnity, WhitneyCover,
};

use serde::{Deserialize, Serialize};

/// One term `λ · a` of an atomic decomposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomEntry {
    pub lambda: f64,
    pub center: usize,
    pub radius: f64,
    /// Height index `j` (maximal route), the level of the maximal cube (square-function
    /// route) or the annulus index (molecule conversion).
    pub level: i64,
    pub index: usize,
    pub atom: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomicDecomposition {
    pub p: f64,
    #[serde(with = "crate::io::extended_f64")]
    pub q: f64,
    pub entries: Vec<AtomEntry>,
    /// `‖f − Σ λ a‖_{L²} / ‖f‖_{L²}` (0 when `f = 0`).
    pub residual: f64,
    /// `Σ |λ|^p`.
    pub lp_sum: f64,
}

impl AtomicDecomposition {
    pub fn empty(p: f64, q: f64) -> Self {
        Self { p, q, entries: Vec::new(), residual: 0.0, lp_sum: 0.0 }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `(Σ |λ|^p)^{1/p}`.
    pub fn coefficient_norm(&self) -> f64 {
        self.lp_sum.powf(1.0 / self.p)
    }

    pub(crate) fn finish(&mut self, f: &[f64], mu: &[f64]) {
        self.lp_sum = self.entries.iter().map(|e| e.lambda.abs().powf(self.p)).sum();
        self.residual = relative_residual(f, &reconstruct_len(self, f.len()), mu);
    }
}

/// `Σ λ a` pointwise.
pub fn reconstruct(dec: &AtomicDecomposition) -> Vec<f64> {
    let n = dec.entries.first().map_or(0, |e| e.atom.len());
    reconstruct_len(dec, n)
}

fn reconstruct_len(dec: &AtomicDecomposition, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for e in &dec.entries {
        for (o, v) in out.iter_mut().zip(&e.atom) {
            *o += e.lambda * v;
        }
    }
    out
}

/// `‖f − g‖_{L²(μ)} / ‖f‖_{L²(μ)}`, or the absolute error when `f = 0`.
pub fn relative_residual(f: &[f64], g: &[f64], mu: &[f64]) -> f64 {
    let num: f64 = f.iter().zip(g).zip(mu).map(|((a, b), m)| (a - b) * (a - b) * m).sum();
    let den: f64 = f.iter().zip(mu).map(|(a, m)| a * a * m).sum();
    if den > 0.0 {
        (num / den).sqrt()
    } else {
        num.sqrt()
    }
}
