//! Local Hardy spaces `h^p` on finite spaces of homogeneous type.
//!
//! The crate is organised bottom-up:
//!
//! - [`space`]: finite quasi-metric measure spaces, ball queries, doubling data;
//! - [`dyadic`]: nested nets, dyadic cubes and their refinement subcubes;
//! - [`kernels`]: approximation-of-identity operator families and their diagnostics;
//! - [`maximal`] and [`square`]: the maximal and Littlewood–Paley functionals;
//! - [`decompose`]: Whitney covers, Calderón–Zygmund pieces and atomic decompositions;
//! - [`atoms`]: atom/molecule validation and the dual Campanato/Lipschitz norms;
//! - [`reproducing`]: Calderón reproducing identities;
//! - [`harness`]: space generators, experiment suites and report export.
//!
//! Functions on a space are plain `&[f64]` slices indexed by point.

pub mod atoms;
pub mod decompose;
pub mod dyadic;
pub mod error;
pub mod harness;
pub mod io;
pub mod kernels;
pub mod maximal;
pub mod par;
pub mod report;
pub mod reproducing;
pub mod space;
pub mod square;

pub use error::{HardyError, Result};
pub use report::{ValidationReport, Violation};
pub use space::{Ball, DoublingProfile, QuasiMetricSpace};
