//! Hybrid lexicographic Gauss-Seidel smoothers.
//!
//! Interior nodes of every macro element are relaxed in strict `(k, j, i)`
//! order with already-updated in-block values. Macro-boundary nodes are
//! relaxed once per sweep afterwards, from their full on-the-fly assembled
//! rows, reading pre-sweep values of the other boundary nodes; the update is
//! Jacobi-like across element interfaces and makes sweeps independent of the
//! macro processing order.

use crate::fem::{interface_row, GridFunction, InterfaceRows, StencilProvider};
use crate::mesh::CardinalDirection as Dir;
use crate::surrogate::{Axis, LineEvalState, SurrogateStore};
use crate::{Error, Result};
use rayon::prelude::*;

/// One sweep of the stencil-based smoother.
pub fn gs_sweep_naive(
    provider: &(impl StencilProvider + ?Sized),
    u: &mut GridFunction,
    f: &GridFunction,
) -> Result<()> {
    interior_sweep_only(provider, u, f)?;
    interface_sweep(provider, None, u, f)
}

/// [`gs_sweep_naive`] with pre-assembled macro-boundary rows.
pub fn gs_sweep_naive_with(
    provider: &(impl StencilProvider + ?Sized),
    rows: &InterfaceRows,
    u: &mut GridFunction,
    f: &GridFunction,
) -> Result<()> {
    interior_sweep_only(provider, u, f)?;
    interface_sweep(provider, Some(rows), u, f)
}

fn interior_sweep_only(
    provider: &(impl StencilProvider + ?Sized),
    u: &mut GridFunction,
    f: &GridFunction,
) -> Result<()> {
    let topo = u.topo.clone();
    let mc = Dir::Center.index();
    u.blocks_mut()
        .par_iter_mut()
        .enumerate()
        .try_for_each(|(b, dst)| -> Result<()> {
            let lat = &topo.lattice;
            let src_f = f.block(b);
            let n = lat.n;
            for k in 1..=n - 3 {
                for j in 1..=n - 2 - k {
                    let offs = lat.neighbor_offsets_for_line(j, k);
                    let base = lat.linear(1, j, k) as isize;
                    for i in 1..=n - 1 - k - j {
                        let idx = base + (i - 1) as isize;
                        let s = provider.stencil(b as u32, i, j, k);
                        let center = s.0[mc];
                        if center == 0.0 {
                            return Err(Error::ZeroCenterWeight { node: (i, j, k) });
                        }
                        let mut acc = src_f[idx as usize];
                        for w in 0..15 {
                            if w != mc {
                                acc -= s.0[w] * dst[(idx + offs[w]) as usize];
                            }
                        }
                        dst[idx as usize] = acc / center;
                    }
                }
            }
            Ok(())
        })
}

/// Relax the macro-boundary nodes once per sweep, after the interiors.
///
/// Shared nodes are processed color group by color group; nodes inside a
/// group do not couple, so each group is a parallel Jacobi step and the
/// group ordering makes the whole pass a Gauss-Seidel relaxation in a fixed
/// node order, independent of macro ordering and worker count.
fn interface_sweep(
    provider: &(impl StencilProvider + ?Sized),
    rows: Option<&InterfaceRows>,
    u: &mut GridFunction,
    f: &GridFunction,
) -> Result<()> {
    let topo = u.topo.clone();
    let geometry = provider.geometry();
    for group in topo.interface_color_groups() {
        let updates: Vec<f64> = group
            .par_iter()
            .map(|&slot| {
                let slot = slot as usize;
                let (offdiag, diag) = match rows {
                    Some(r) => r.offdiag_diag(&topo, slot, u),
                    None => interface_row(&topo, geometry, slot, u),
                };
                let (b0, i0) = topo.copies_of(slot)[0];
                let rhs = f.value(b0 as usize, i0 as usize);
                (rhs - offdiag) / diag
            })
            .collect();
        for (&slot, v) in group.iter().zip(updates) {
            for &(b, idx) in topo.copies_of(slot as usize) {
                u.set(b as usize, idx as usize, v);
            }
        }
    }
    Ok(())
}

/// One sweep of the split (line-vectorizable) smoother for surrogate
/// operators.
///
/// Per lattice line the update is reorganized into a non-recursive part,
/// accumulated over two register sets with incrementally generated stencil
/// weights and finished by a division, and a short recursive loop applying
/// the west coupling. The center weight is the negated sum of the other 14
/// weights, which the fits preserve up to roundoff.
pub fn gs_sweep_split(
    store: &SurrogateStore,
    level: u8,
    u: &mut GridFunction,
    f: &GridFunction,
) -> Result<()> {
    gs_sweep_split_impl(store, level, None, u, f)
}

/// [`gs_sweep_split`] with pre-assembled macro-boundary rows.
pub fn gs_sweep_split_with(
    store: &SurrogateStore,
    level: u8,
    rows: &InterfaceRows,
    u: &mut GridFunction,
    f: &GridFunction,
) -> Result<()> {
    gs_sweep_split_impl(store, level, Some(rows), u, f)
}

fn gs_sweep_split_impl(
    store: &SurrogateStore,
    level: u8,
    rows: Option<&InterfaceRows>,
    u: &mut GridFunction,
    f: &GridFunction,
) -> Result<()> {
    if !store.has_level(level) {
        return Err(Error::Validation(format!(
            "split smoother needs surrogate coefficients on level {level}"
        )));
    }
    let topo = u.topo.clone();
    let mw = Dir::MiddleWest.index();
    let set1: [usize; 6] = Dir::SET_ONE.map(|d| d.index());
    let set2: [usize; 7] = Dir::SET_TWO.map(|d| d.index());

    u.blocks_mut()
        .par_iter_mut()
        .enumerate()
        .try_for_each(|(b, dst)| -> Result<()> {
            let lat = &topo.lattice;
            let src_f = f.block(b);
            let n = lat.n;
            let coeffs = store.coeffs(level, b as u32);

            let max_len = (n - 3) as usize;
            let mut weights = vec![[0.0f64; 15]; max_len];
            let mut tmp = vec![0.0f64; max_len];
            let mut tmp_mw = vec![0.0f64; max_len];

            // line states advance by forward differences; one anchor per
            // plane, cloned and advanced per line
            let mut plane = LineEvalState::init(coeffs, 0, 0);
            plane.advance(Axis::K);
            for k in 1..=n - 3 {
                let mut row = plane.clone();
                row.advance(Axis::J);
                for j in 1..=n - 2 - k {
                    let len = (n - 1 - k - j) as usize;
                    let offs = lat.neighbor_offsets_for_line(j, k);
                    let base = lat.linear(1, j, k) as isize;

                    // generate the line's stencils incrementally (i = 0 is
                    // the macro boundary; discard it)
                    let mut st = row.clone();
                    let _ = st.step();
                    for w in weights.iter_mut().take(len) {
                        *w = st.step().0;
                    }

                    // loop 1: first register set
                    for d in 0..len {
                        let idx = base + d as isize;
                        let s = &weights[d];
                        let mut acc = src_f[idx as usize];
                        let mut acc_mc = 0.0;
                        for w in set1 {
                            acc -= s[w] * dst[(idx + offs[w]) as usize];
                            acc_mc -= s[w];
                        }
                        tmp[d] = acc;
                        tmp_mw[d] = acc_mc;
                    }
                    // loop 2: second register set, west weight and division
                    for d in 0..len {
                        let idx = base + d as isize;
                        let s = &weights[d];
                        let mut acc = tmp[d];
                        let mut acc_mc = tmp_mw[d];
                        for w in set2 {
                            acc -= s[w] * dst[(idx + offs[w]) as usize];
                            acc_mc -= s[w];
                        }
                        acc_mc -= s[mw];
                        if acc_mc == 0.0 {
                            return Err(Error::ZeroCenterWeight { node: (1 + d as u32, j, k) });
                        }
                        let s0 = 1.0 / acc_mc;
                        tmp_mw[d] = s0 * s[mw];
                        tmp[d] = acc * s0;
                    }
                    // loop 3: recursive west coupling
                    for d in 0..len {
                        let idx = (base + d as isize) as usize;
                        let west = dst[idx - 1];
                        dst[idx] = tmp[d] - tmp_mw[d] * west;
                    }

                    row.advance(Axis::J);
                }
                plane.advance(Axis::K);
            }
            Ok(())
        })?;

    // interface rows are true stencils, same as in the naive sweep
    let provider = crate::surrogate::SurrogateProvider {
        store,
        level,
        center: crate::fem::CenterRule::RowSum,
    };
    interface_sweep(&provider, rows, u, f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{assemble_rhs, CenterRule, FemProvider, GridFunction, LevelTopology};
    use crate::mesh::{generate_shell_mesh, single_tet_mesh, Geometry};
    use crate::oracle;
    use std::sync::Arc;

    #[test]
    fn naive_sweep_matches_reference_gs_on_a_single_macro() {
        let mesh = Arc::new(single_tet_mesh());
        let topo = LevelTopology::build(mesh, 1);
        let provider = FemProvider {
            blocks: &topo.blocks,
            geometry: Geometry::Affine,
            center: CenterRule::Direct,
        };
        let f = assemble_rhs(&topo, Geometry::Affine, |p| p[0] + 2.0 * p[1] - p[2]);
        let mut u = GridFunction::zeros(topo.clone());
        u.fill_random(3);

        let numbering = oracle::global_numbering(&topo);
        let matrix = oracle::assemble_global(&topo, &numbering, Geometry::Affine);
        let mut u_ref = oracle::gather(&topo, &numbering, &u);
        let f_ref = oracle::gather(&topo, &numbering, &f);
        // reference sweep visits interior nodes in the same traversal order
        let lat = &topo.lattice;
        let order: Vec<u32> = lat
            .interior_nodes()
            .map(|(i, j, k)| numbering.ids[0][lat.linear(i, j, k)])
            .collect();

        for _ in 0..3 {
            gs_sweep_naive(&provider, &mut u, &f).unwrap();
            oracle::reference_gs_sweep(&matrix, &order, &mut u_ref, &f_ref);
        }
        let ours = oracle::gather(&topo, &numbering, &u);
        let scale = ours.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (a, b) in ours.iter().zip(&u_ref) {
            assert!((a - b).abs() <= 1e-12 * scale.max(1.0));
        }
    }

    #[test]
    fn exact_solution_is_a_fixed_point() {
        let mesh = Arc::new(single_tet_mesh());
        let topo = LevelTopology::build(mesh, 1);
        let provider = FemProvider {
            blocks: &topo.blocks,
            geometry: Geometry::Affine,
            center: CenterRule::Direct,
        };
        let f = assemble_rhs(&topo, Geometry::Affine, |p| p[0] * p[1] + 0.3);
        let numbering = oracle::global_numbering(&topo);
        let matrix = oracle::assemble_global(&topo, &numbering, Geometry::Affine);
        let f_ref = oracle::gather(&topo, &numbering, &f);
        let exact = oracle::dense_solve(&matrix, &f_ref);
        let mut u = oracle::scatter(&topo, &numbering, &exact);
        let before = u.clone();
        gs_sweep_naive(&provider, &mut u, &f).unwrap();
        let scale = u.max_abs().max(1.0);
        assert!(u.max_abs_diff(&before) <= 1e-12 * scale);
    }

    #[test]
    fn split_sweep_matches_naive_sweep_with_rowsum_center() {
        let mesh = Arc::new(generate_shell_mesh(0.5, 1.0, 0, 1).unwrap());
        let topos: Vec<_> = (0..=3u8)
            .map(|l| LevelTopology::build(mesh.clone(), l))
            .collect();
        let store = crate::surrogate::SurrogateStore::fit(
            &topos,
            crate::surrogate::FitMethod::LeastSquares,
            2,
            Some(2),
            3,
        )
        .unwrap();
        for level in [1u8, 3] {
            let topo = topos[level as usize].clone();
            let f = assemble_rhs(&topo, Geometry::Projected, |p| p[0] * p[1] - p[2]);
            let mut u_naive = GridFunction::zeros(topo.clone());
            u_naive.fill_random(23);
            let mut u_split = u_naive.clone();

            let provider = crate::surrogate::SurrogateProvider {
                store: &store,
                level,
                center: CenterRule::RowSum,
            };
            for _ in 0..2 {
                gs_sweep_naive(&provider, &mut u_naive, &f).unwrap();
                gs_sweep_split(&store, level, &mut u_split, &f).unwrap();
            }
            let scale = u_naive.max_abs().max(1.0);
            let diff = u_naive.max_abs_diff(&u_split);
            assert!(
                diff <= 1e-11 * scale,
                "level {level}: split deviates by {diff:.3e} (scale {scale:.3e})"
            );
        }
    }

    #[test]
    fn split_update_is_tau_plus_rho() {
        // one-node algebra: the split accumulation (non-recursive part plus
        // the west coupling) reproduces the plain update formula
        let s: [f64; 15] = [
            -0.11, -0.21, -0.03, -0.17, -0.19, -0.05, -0.23, 1.86, -0.25, -0.07, -0.13, -0.09,
            -0.02, -0.15, -0.16,
        ];
        let u: [f64; 15] = [
            0.3, -0.2, 0.7, 0.1, -0.5, 0.9, 0.4, 0.0, -0.8, 0.2, 0.6, -0.3, 0.5, -0.1, 0.8,
        ];
        let f = 1.7;
        let mc = Dir::Center.index();
        let mw = Dir::MiddleWest.index();
        // direct update
        let mut acc = f;
        for w in 0..15 {
            if w != mc {
                acc -= s[w] * u[w];
            }
        }
        let direct = acc / s[mc];
        // split: loops accumulate everything except mw, then the recursion
        let mut tau = f;
        let mut center = 0.0;
        for w in Dir::SET_ONE.into_iter().chain(Dir::SET_TWO) {
            tau -= s[w.index()] * u[w.index()];
            center -= s[w.index()];
        }
        center -= s[mw];
        // row-sum center convention: this test uses weights that satisfy it
        assert!((center - s[mc]).abs() < 1e-12);
        let s0 = 1.0 / center;
        let rho = -(s0 * s[mw]) * u[mw];
        let split = tau * s0 + rho;
        assert!((split - direct).abs() < 1e-14);
    }

    #[test]
    fn residual_decreases_over_sweeps() {
        let mesh = Arc::new(generate_shell_mesh(0.5, 1.0, 0, 1).unwrap());
        let topo = LevelTopology::build(mesh, 2);
        let provider = FemProvider {
            blocks: &topo.blocks,
            geometry: Geometry::Projected,
            center: CenterRule::Direct,
        };
        let f = assemble_rhs(&topo, Geometry::Projected, |p| p[0] - p[2]);
        let mut u = GridFunction::zeros(topo.clone());
        u.fill_random(11);
        let mut last = crate::fem::residual(&provider, &u, &f).norm();
        for _ in 0..5 {
            gs_sweep_naive(&provider, &mut u, &f).unwrap();
            let r = crate::fem::residual(&provider, &u, &f).norm();
            assert!(r < last, "residual must strictly decrease: {r} vs {last}");
            last = r;
        }
    }
}
