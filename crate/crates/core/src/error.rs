use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown drum id `{0}` (expected drum1 or drum2)")]
    UnknownDrum(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("point ({0}, {1}) lies outside the domain")]
    OutsideDomain(f64, f64),

    #[error("eigensolver did not converge: {converged} of {requested} modes after {iterations} iterations (worst residual {residual:.3e})")]
    NonConvergence {
        requested: usize,
        converged: usize,
        iterations: usize,
        residual: f64,
    },

    #[error("factorization failed: matrix not positive definite at pivot {0}")]
    NotPositiveDefinite(usize),

    #[error("spectral truncation too short: tail bound {tail:.3e} exceeds {limit:.3e}")]
    TailBound { tail: f64, limit: f64 },

    #[error("kernel value {value:.6e} exceeds normalization constant {k:.6e}")]
    KernelExceedsNormalization { value: f64, k: f64 },

    #[error("kernel clipping of {magnitude:.3e} exceeds the budget {budget:.1e}; refine the mesh or raise t0")]
    ClipBudget { magnitude: f64, budget: f64 },

    #[error("heat kernel {heat:.3e} is below the cancellation floor {floor:.3e} of its expansion; raise t")]
    Cancellation { heat: f64, floor: f64 },

    #[error("heat kernel is non-positive ({0:.3e}); raise the number of modes or t")]
    NonPositiveKernel(f64),

    #[error("size cap exceeded: {0}")]
    SizeCap(String),

    #[error("incompatible graphons: {0}")]
    Incompatible(String),

    #[error("non-finite state at t = {0}")]
    NonFinite(f64),

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
