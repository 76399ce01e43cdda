use thiserror::Error;

/// Errors produced by mesh construction, fitting and the solver.
#[derive(Debug, Error)]
pub enum Error {
    #[error("mesh construction failed: {0}")]
    MeshConstruction(String),

    #[error("degenerate tetrahedron (volume {volume:.3e})")]
    DegenerateTet { volume: f64 },

    #[error("point with zero norm cannot be projected onto a shell layer")]
    ZeroNormBlend,

    #[error("surrogate fit failed: {0}")]
    Fit(String),

    #[error("smoother encountered a non-positive center weight at node {node:?}")]
    ZeroCenterWeight { node: (u32, u32, u32) },

    #[error("solver diverged: residual grew over {cycles} consecutive cycles")]
    Divergence {
        cycles: usize,
        history: crate::multigrid::SolveHistory,
    },

    #[error("invalid configuration: {0}")]
    Validation(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}
