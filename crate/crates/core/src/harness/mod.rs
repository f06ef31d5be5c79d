//! Space generators, seeded input suites, experiments and export.

pub mod experiments;
pub mod export;
pub mod generators;
pub mod suite;
pub mod workspace;

pub use experiments::{
    atom_maximal_bound, duality_check, finite_atomic_upper_bound, global_vs_local_experiment, run_equivalence_experiment, run_equivalence_on, run_equivalence_on_inputs,
    DualityReport, EquivalenceReport, EquivalenceTable, ExperimentConfig, FiniteAtomicBound, GlobalLocalReport, RatioRow, RouteStats,
};
pub use export::{export_global_local, export_report, read_ratio_csv, write_point_csv, write_ratio_csv};
pub use generators::{generate_space, GeneratedSpace, SpaceKind};
pub use suite::{build_suite, InputKind, SuiteConfig, SuiteItem};
pub use workspace::{ModelParams, Workspace, FALLBACK_BETA};
