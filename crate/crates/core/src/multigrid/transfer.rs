//! Grid transfers on the structured lattice: linear interpolation and its
//! transpose (full weighting up to scaling).

use crate::fem::{GridFunction, LevelTopology};
use rayon::prelude::*;
use std::sync::Arc;

/// Edge direction whose midpoint a fine node with parity `(pi, pj, pk)` is.
/// Even nodes coincide with coarse nodes; odd parities bisect one coarse
/// lattice edge, the all-odd case being the cell diagonal.
#[inline]
fn parity_edge(pi: u32, pj: u32, pk: u32) -> (i64, i64, i64) {
    match (pi, pj, pk) {
        (1, 0, 0) => (1, 0, 0),
        (0, 1, 0) => (0, 1, 0),
        (0, 0, 1) => (0, 0, 1),
        (1, 1, 0) => (1, -1, 0),
        (1, 0, 1) => (1, 0, -1),
        (0, 1, 1) => (0, 1, -1),
        (1, 1, 1) => (1, -1, 1),
        _ => unreachable!("even parity handled separately"),
    }
}

/// Linear interpolation from `coarse` onto the next finer level.
pub fn prolongate(coarse: &GridFunction, fine_topo: &Arc<LevelTopology>) -> GridFunction {
    assert_eq!(coarse.topo.level + 1, fine_topo.level);
    let mut fine = GridFunction::zeros(fine_topo.clone());
    let clat = coarse.topo.lattice.clone();
    let flat = fine_topo.lattice.clone();
    fine.blocks_mut()
        .par_iter_mut()
        .enumerate()
        .for_each(|(b, dst)| {
            let src = coarse.block(b);
            for (i, j, k) in flat.all_nodes() {
                let idx = flat.linear(i, j, k);
                let (pi, pj, pk) = (i & 1, j & 1, k & 1);
                dst[idx] = if pi == 0 && pj == 0 && pk == 0 {
                    src[clat.linear(i / 2, j / 2, k / 2)]
                } else {
                    let d = parity_edge(pi, pj, pk);
                    let p = (i as i64, j as i64, k as i64);
                    let a = clat.linear(
                        ((p.0 - d.0) / 2) as u32,
                        ((p.1 - d.1) / 2) as u32,
                        ((p.2 - d.2) / 2) as u32,
                    );
                    let bidx = clat.linear(
                        ((p.0 + d.0) / 2) as u32,
                        ((p.1 + d.1) / 2) as u32,
                        ((p.2 + d.2) / 2) as u32,
                    );
                    0.5 * (src[a] + src[bidx])
                };
            }
        });
    fine.sync_copy();
    fine.set_dirichlet_zero();
    fine
}

/// Transpose of [`prolongate`]: every uniquely-owned fine node scatters its
/// value to the coarse endpoints of its edge; cross-block pieces are summed
/// through the shared-node table. Dirichlet rows are zeroed.
pub fn restrict(fine: &GridFunction, coarse_topo: &Arc<LevelTopology>) -> GridFunction {
    assert_eq!(coarse_topo.level + 1, fine.topo.level);
    let mut coarse = GridFunction::zeros(coarse_topo.clone());
    let clat = coarse_topo.lattice.clone();
    let ftopo = fine.topo.clone();
    let flat = ftopo.lattice.clone();
    coarse
        .blocks_mut()
        .par_iter_mut()
        .enumerate()
        .for_each(|(b, dst)| {
            let src = fine.block(b);
            for (i, j, k) in flat.all_nodes() {
                let idx = flat.linear(i, j, k);
                if !ftopo.is_owned(b, idx) {
                    continue;
                }
                let v = src[idx];
                let (pi, pj, pk) = (i & 1, j & 1, k & 1);
                if pi == 0 && pj == 0 && pk == 0 {
                    dst[clat.linear(i / 2, j / 2, k / 2)] += v;
                } else {
                    let d = parity_edge(pi, pj, pk);
                    let p = (i as i64, j as i64, k as i64);
                    dst[clat.linear(
                        ((p.0 - d.0) / 2) as u32,
                        ((p.1 - d.1) / 2) as u32,
                        ((p.2 - d.2) / 2) as u32,
                    )] += 0.5 * v;
                    dst[clat.linear(
                        ((p.0 + d.0) / 2) as u32,
                        ((p.1 + d.1) / 2) as u32,
                        ((p.2 + d.2) / 2) as u32,
                    )] += 0.5 * v;
                }
            }
        });
    coarse.sync_add();
    coarse.set_dirichlet_zero();
    coarse
}
