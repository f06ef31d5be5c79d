use thiserror::Error;

pub type Result<T> = std::result::Result<T, HardyError>;

#[derive(Debug, Error)]
pub enum HardyError {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("shape mismatch: expected length {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("space has {n} points, above the configured cap of {cap}")]
    TooLarge { n: usize, cap: usize },

    #[error("deepest dyadic level {level} is not made of singletons; rebuild with a deeper K_max")]
    ShallowDyadic { level: usize },

    #[error("sinkhorn scaling at level {level} did not converge: residual {residual:e} after {iterations} iterations")]
    SinkhornDiverged {
        level: usize,
        residual: f64,
        iterations: usize,
    },

    #[error("no subcube index for level {0}")]
    MissingSubcube(usize),

    #[error("level set at j = {0} is empty (level too high for a decomposition)")]
    EmptyLevelSet(i32),

    #[error("level too low: level set at j = {0} is the whole space")]
    FullLevelSet(i32),

    #[error("whitney cover needs a nonempty proper subset, got {0}")]
    CoverDomain(&'static str),

    #[error("partition of unity: point {0} of the open set is not covered")]
    Uncovered(usize),

    #[error("unsupported operator family: {0}")]
    UnsupportedFamily(String),

    #[error("unsupported molecule: {0}")]
    UnsupportedMolecule(String),

    #[error("test dictionary is empty")]
    EmptyDictionary,

    #[error("experiment suite is empty")]
    EmptySuite,

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
