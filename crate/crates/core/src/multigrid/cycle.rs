//! V-cycles and the outer solver loop.

use super::{
    gs_sweep_naive_with, gs_sweep_split_with, prolongate, restrict, Hierarchy, OperatorMode,
};
use crate::fem::{residual_with, GridFunction, StencilProvider};
use crate::{Error, Result};

/// Which smoother kernel runs the relaxation sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmootherVariant {
    Naive,
    /// Line-split kernel; requires a surrogate operator mode.
    Split,
}

/// Cycle shape and iteration counts.
#[derive(Debug, Clone, Copy)]
pub struct CycleSpec {
    pub pre_smooth: u32,
    pub post_smooth: u32,
    pub coarse_sweeps: u32,
    pub cycles: u32,
    pub smoother: SmootherVariant,
    /// Double discretization: smooth with the mode's (cheap) operator but
    /// compute defects with the exact projected-geometry operator.
    pub dd: bool,
}

impl Default for CycleSpec {
    fn default() -> Self {
        Self {
            pre_smooth: 3,
            post_smooth: 3,
            coarse_sweeps: 50,
            cycles: 10,
            smoother: SmootherVariant::Naive,
            dd: false,
        }
    }
}

impl CycleSpec {
    pub fn validate(&self, mode: OperatorMode) -> Result<()> {
        if self.smoother == SmootherVariant::Split
            && !matches!(mode, OperatorMode::Surrogate { .. })
        {
            return Err(Error::Validation(
                "the split smoother requires a surrogate operator mode".into(),
            ));
        }
        if self.cycles == 0 {
            return Err(Error::Validation("cycle count must be positive".into()));
        }
        Ok(())
    }
}

/// Convergence record of a solve: per-cycle residual norms (with respect to
/// the residual operator) and, when an error metric was supplied, the
/// per-cycle discretization errors.
#[derive(Debug, Clone, Default)]
pub struct SolveHistory {
    pub residual_norms: Vec<f64>,
    pub errors: Vec<f64>,
}

impl SolveHistory {
    /// Residual reduction factor between consecutive cycles.
    pub fn reduction_factors(&self) -> Vec<f64> {
        self.residual_norms
            .windows(2)
            .map(|w| w[1] / w[0])
            .collect()
    }
}

fn smooth(hier: &Hierarchy, spec: &CycleSpec, level: u8, u: &mut GridFunction, f: &GridFunction) -> Result<()> {
    let use_split = spec.smoother == SmootherVariant::Split
        && matches!(hier.mode, OperatorMode::Surrogate { .. })
        && level >= 1;
    if use_split {
        let rows = hier.interface_rows(level, crate::mesh::Geometry::Projected);
        gs_sweep_split_with(
            hier.store.as_ref().expect("surrogate store"),
            level,
            &rows,
            u,
            f,
        )
    } else {
        let provider = hier.smoothing_provider(level);
        let rows = hier.interface_rows(level, provider.geometry());
        gs_sweep_naive_with(&provider, &rows, u, f)
    }
}

/// One V-cycle on `level`; the coarsest level is solved by repeated sweeps.
pub fn vcycle(
    hier: &Hierarchy,
    spec: &CycleSpec,
    level: u8,
    u: &mut GridFunction,
    f: &GridFunction,
) -> Result<()> {
    if level == 0 {
        for _ in 0..spec.coarse_sweeps {
            smooth(hier, spec, 0, u, f)?;
        }
        return Ok(());
    }
    for _ in 0..spec.pre_smooth {
        smooth(hier, spec, level, u, f)?;
    }
    let rp = hier.residual_provider(level, spec.dd);
    let rows = hier.interface_rows(level, rp.geometry());
    let r = residual_with(&rp, &rows, u, f);
    let rc = restrict(&r, hier.topo(level - 1));
    let mut ec = GridFunction::zeros(hier.topo(level - 1).clone());
    vcycle(hier, spec, level - 1, &mut ec, &rc)?;
    let ef = prolongate(&ec, hier.topo(level));
    u.add_scaled(&ef, 1.0);
    for _ in 0..spec.post_smooth {
        smooth(hier, spec, level, u, f)?;
    }
    Ok(())
}

/// Run `spec.cycles` V-cycles from a seeded random initial guess, recording
/// the residual norm (and optionally an error metric) after every cycle.
///
/// Sustained residual growth well above the best value seen is reported as
/// divergence with the history attached; plain stagnation, the expected
/// behaviour of double discretization, is not.
pub fn solve(
    hier: &Hierarchy,
    spec: &CycleSpec,
    f: &GridFunction,
    seed: u64,
    mut error_metric: Option<&mut dyn FnMut(&GridFunction) -> f64>,
) -> Result<(GridFunction, SolveHistory)> {
    spec.validate(hier.mode)?;
    let level = hier.max_level;
    let mut u = GridFunction::zeros(hier.topo(level).clone());
    u.fill_random(seed);

    let mut history = SolveHistory::default();
    let mut growth_streak = 0u32;
    let mut best = f64::MAX;
    let rp = hier.residual_provider(level, spec.dd);
    let rows = hier.interface_rows(level, rp.geometry());
    for _cycle in 0..spec.cycles {
        vcycle(hier, spec, level, &mut u, f)?;
        let r = residual_with(&rp, &rows, &u, f).norm();
        if let Some(metric) = error_metric.as_deref_mut() {
            history.errors.push(metric(&u));
        }
        let grew = history
            .residual_norms
            .last()
            .map(|&prev| r > prev)
            .unwrap_or(false);
        growth_streak = if grew { growth_streak + 1 } else { 0 };
        history.residual_norms.push(r);
        best = best.min(r);
        if growth_streak >= 3 && r > 10.0 * best {
            return Err(Error::Divergence {
                cycles: growth_streak as usize,
                history,
            });
        }
    }
    Ok((u, history))
}
