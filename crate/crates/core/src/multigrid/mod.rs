//! Geometric multigrid: operator hierarchy, hybrid Gauss-Seidel smoothers,
//! grid transfers and V-cycles.

mod cycle;
mod smooth;
mod transfer;

pub use cycle::{solve, vcycle, CycleSpec, SmootherVariant, SolveHistory};
pub use smooth::{gs_sweep_naive, gs_sweep_naive_with, gs_sweep_split, gs_sweep_split_with};
pub use transfer::{prolongate, restrict};

use crate::fem::{
    CenterRule, ConstantProvider, FemProvider, InterfaceRows, LevelTopology, StencilProvider,
};
use crate::mesh::{Geometry, MacroMesh};
use crate::surrogate::{FitMethod, SurrogateProvider, SurrogateStore};
use crate::{Error, Result};
use std::sync::Arc;

/// Which operator drives smoothing and residuals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OperatorMode {
    /// Constant per-macro stencils on affine geometry; exact only when the
    /// blending map is the identity (polyhedral test meshes).
    ConstAffine,
    /// True finite element stencils on projected (blended) geometry.
    FemProjected,
    /// Constant per-macro stencils of the unprojected geometry used on a
    /// curved domain; the cheap baseline that loses geometric accuracy.
    ConsUnprojected,
    /// Fitted surrogate polynomials approximating the projected stencils.
    Surrogate {
        method: FitMethod,
        degree: u32,
        sampling_j: u32,
    },
}

impl OperatorMode {
    /// Geometry the discrete problem lives on (right-hand side quadrature
    /// and nodal interpolation).
    pub fn problem_geometry(self) -> Geometry {
        match self {
            OperatorMode::ConstAffine => Geometry::Affine,
            _ => Geometry::Projected,
        }
    }

    pub fn short_name(self) -> String {
        match self {
            OperatorMode::ConstAffine => "const".into(),
            OperatorMode::FemProjected => "fem".into(),
            OperatorMode::ConsUnprojected => "cons".into(),
            OperatorMode::Surrogate {
                method,
                degree,
                sampling_j,
            } => format!("{}-q{}-j{}", method.short_name(), degree, sampling_j),
        }
    }
}

/// Stencil source of one level, borrowing the hierarchy.
pub enum LevelProvider<'a> {
    Fem(FemProvider<'a>),
    Constant(&'a ConstantProvider),
    Surrogate(SurrogateProvider<'a>),
}

impl StencilProvider for LevelProvider<'_> {
    #[inline]
    fn stencil(&self, macro_id: u32, i: u32, j: u32, k: u32) -> crate::fem::Stencil15 {
        match self {
            LevelProvider::Fem(p) => p.stencil(macro_id, i, j, k),
            LevelProvider::Constant(p) => p.stencil(macro_id, i, j, k),
            LevelProvider::Surrogate(p) => p.stencil(macro_id, i, j, k),
        }
    }

    fn geometry(&self) -> Geometry {
        match self {
            LevelProvider::Fem(p) => p.geometry(),
            LevelProvider::Constant(p) => p.geometry(),
            LevelProvider::Surrogate(p) => p.geometry(),
        }
    }
}

/// Mesh, level topologies and per-level operators for one configuration.
pub struct Hierarchy {
    pub mesh: Arc<MacroMesh>,
    pub max_level: u8,
    pub topos: Vec<Arc<LevelTopology>>,
    pub mode: OperatorMode,
    pub store: Option<SurrogateStore>,
    constants: Vec<ConstantProvider>,
}

impl Hierarchy {
    /// Build topologies for levels `0..=max_level` and run the operator
    /// setup phase (constant stencils or surrogate fitting).
    pub fn build(mesh: Arc<MacroMesh>, max_level: u8, mode: OperatorMode) -> Result<Self> {
        let topos: Vec<Arc<LevelTopology>> = (0..=max_level)
            .map(|l| LevelTopology::build(mesh.clone(), l))
            .collect();
        Self::from_topos(mesh, topos, mode)
    }

    /// Like [`Hierarchy::build`] but reusing already-built topologies
    /// (they are mode independent).
    pub fn from_topos(
        mesh: Arc<MacroMesh>,
        topos: Vec<Arc<LevelTopology>>,
        mode: OperatorMode,
    ) -> Result<Self> {
        let max_level = (topos.len() - 1) as u8;
        let mut constants = Vec::new();
        let mut store = None;
        match mode {
            OperatorMode::ConstAffine | OperatorMode::ConsUnprojected => {
                for topo in &topos {
                    constants.push(ConstantProvider::from_blocks(
                        &topo.blocks,
                        Geometry::Affine,
                        CenterRule::Direct,
                    ));
                }
            }
            OperatorMode::Surrogate {
                method,
                degree,
                sampling_j,
            } => {
                store = Some(SurrogateStore::fit(
                    &topos,
                    method,
                    degree,
                    Some(sampling_j),
                    max_level,
                )?);
            }
            OperatorMode::FemProjected => {}
        }
        Ok(Self {
            mesh,
            max_level,
            topos,
            mode,
            store,
            constants,
        })
    }

    #[inline]
    pub fn topo(&self, level: u8) -> &Arc<LevelTopology> {
        &self.topos[level as usize]
    }

    /// Pre-assembled macro-boundary rows of a level, built on first use and
    /// shared across hierarchies on the same topology.
    pub fn interface_rows(&self, level: u8, geometry: Geometry) -> Arc<InterfaceRows> {
        self.topo(level).interface_rows(geometry)
    }

    /// Operator used for smoothing on `level`. Surrogates exist on levels
    /// `>= 1`; the coarsest level falls back to true stencils.
    pub fn smoothing_provider(&self, level: u8) -> LevelProvider<'_> {
        match self.mode {
            OperatorMode::ConstAffine | OperatorMode::ConsUnprojected => {
                LevelProvider::Constant(&self.constants[level as usize])
            }
            OperatorMode::FemProjected => LevelProvider::Fem(FemProvider {
                blocks: &self.topo(level).blocks,
                geometry: Geometry::Projected,
                center: CenterRule::Direct,
            }),
            OperatorMode::Surrogate { .. } => {
                if level == 0 {
                    LevelProvider::Fem(FemProvider {
                        blocks: &self.topo(0).blocks,
                        geometry: Geometry::Projected,
                        center: CenterRule::Direct,
                    })
                } else {
                    LevelProvider::Surrogate(SurrogateProvider {
                        store: self.store.as_ref().expect("surrogate store"),
                        level,
                        center: CenterRule::Direct,
                    })
                }
            }
        }
    }

    /// Operator used for residuals and coarse-grid defects. With double
    /// discretization this is the exact projected-geometry operator.
    pub fn residual_provider(&self, level: u8, dd: bool) -> LevelProvider<'_> {
        if dd {
            LevelProvider::Fem(FemProvider {
                blocks: &self.topo(level).blocks,
                geometry: Geometry::Projected,
                center: CenterRule::Direct,
            })
        } else {
            self.smoothing_provider(level)
        }
    }

    pub fn surrogate_coeffs(
        &self,
        level: u8,
        macro_id: u32,
    ) -> Result<&crate::surrogate::SurrogateCoeffs> {
        self.store
            .as_ref()
            .filter(|s| s.has_level(level))
            .map(|s| s.coeffs(level, macro_id))
            .ok_or_else(|| Error::Validation("no surrogate coefficients at this level".into()))
    }
}
