use std::path::PathBuf;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("{path}: unsupported matrix field '{field}' (only real-valued data is accepted)")]
    UnsupportedField { path: PathBuf, field: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("shifted matrix iωI - A is numerically singular at ω = {omega:e}")]
    SingularShift { omega: f64 },

    #[error("gamma = {gamma:e} outside [{floor:e}, 1]")]
    GammaDomain { gamma: f64, floor: f64 },

    #[error("singular value computation failed: {0}")]
    Computation(String),

    #[error("σ₂ is not simple at ω = {omega:e}: gap {gap:e} below {tol:e}·σ₁")]
    NonsmoothPoint { omega: f64, gap: f64, tol: f64 },

    #[error("reduced resolvent numerically singular at ω = {omega:e} (σ_min = {sigma_min:e})")]
    DegenerateReduction { omega: f64, sigma_min: f64 },

    #[error("ω = {0:e} is not an interpolation point of the basis")]
    NotInterpolationPoint(f64),

    #[error("every frequency sample hit a degenerate reduction; nothing to maximize")]
    OptimizerStarved,

    #[error("termination check requires positive radii, got r_k = {r_k:e}, r_prev = {r_prev:e}")]
    ContractMisuse { r_k: f64, r_prev: f64 },

    #[error("n = {n} exceeds the dense-computation guard ({max}); raise the guard to override")]
    SizeGuard { n: usize, max: usize },

    #[error("system is not Hurwitz stable: spectral abscissa = {0:e}")]
    Unstable(f64),
}
