//! Matrix-free geometric multigrid for the Laplacian on a spherical shell.
//!
//! The coarse input mesh is a small unstructured set of tetrahedral macro
//! elements. Each macro element carries a structured refinement lattice, so
//! the interior of a macro element is a regular 15-point stencil region.
//! On curved geometry the stencil varies from node to node; instead of
//! re-assembling it from local stiffness matrices at every node, the interior
//! stencil function can be replaced by low-degree surrogate polynomials fitted
//! per macro element and per level, either by interpolation ([`surrogate::FitMethod::Interpolation`])
//! or by a discrete least-squares fit ([`surrogate::FitMethod::LeastSquares`]).
//!
//! The crate provides:
//! - [`mesh`]: shell macro-mesh generation, structured blocks, blending map
//! - [`fem`]: on-the-fly finite element stencil assembly, grid functions,
//!   operator application and residuals
//! - [`surrogate`]: polynomial fitting, direct and incremental evaluation
//! - [`multigrid`]: hybrid Gauss-Seidel smoothers, transfers, V-cycles
//! - [`analysis`]: manufactured solution, error norms, fit/symmetry metrics,
//!   and the arithmetic cost model

pub mod analysis;
pub mod fem;
pub mod mesh;
pub mod multigrid;
pub mod oracle;
pub mod surrogate;
pub mod vec3;

mod error;

pub use error::Error;
pub use fem::{GridFunction, LevelTopology, Stencil15};
pub use mesh::{CardinalDirection, MacroMesh, NodeIndex, StructuredBlock};
pub use multigrid::{CycleSpec, Hierarchy, OperatorMode, SolveHistory};
pub use surrogate::{FitMethod, SurrogateCoeffs};

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, Error>;
