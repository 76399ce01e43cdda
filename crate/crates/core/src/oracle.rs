//! Reference implementations for validation.
//!
//! Everything here goes through an explicit global matrix assembled by a
//! plain element loop, deliberately independent of the stencil code paths it
//! is used to check. Only suitable for small meshes and levels.

use crate::fem::{local_stiffness, GridFunction, LevelTopology};
use crate::mesh::{cells, Geometry};
use std::collections::HashMap;
use std::sync::Arc;

/// Per-block global node ids plus the unique node count.
pub struct GlobalNumbering {
    pub ids: Vec<Vec<u32>>,
    pub len: usize,
    pub dirichlet: Vec<bool>,
}

pub fn global_numbering(topo: &LevelTopology) -> GlobalNumbering {
    let mut ids = vec![vec![u32::MAX; topo.lattice.len()]; topo.block_count()];
    let mut dirichlet = Vec::new();
    let mut next = 0u32;
    for b in 0..topo.block_count() {
        for idx in 0..topo.lattice.len() {
            if !topo.is_shared(b, idx) {
                ids[b][idx] = next;
                dirichlet.push(false);
                next += 1;
            }
        }
    }
    for slot in 0..topo.shared_count() {
        for &(b, idx) in topo.copies_of(slot) {
            ids[b as usize][idx as usize] = next;
        }
        dirichlet.push(topo.shared_is_dirichlet(slot));
        next += 1;
    }
    GlobalNumbering {
        ids,
        len: next as usize,
        dirichlet,
    }
}

/// Sparse matrix held as a coordinate map; fine at oracle scale.
pub struct SparseMatrix {
    pub n: usize,
    pub entries: HashMap<(u32, u32), f64>,
}

impl SparseMatrix {
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for (&(r, c), &v) in &self.entries {
            y[r as usize] += v * x[c as usize];
        }
        y
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.n, self.n);
        for (&(r, c), &v) in &self.entries {
            m[(r as usize, c as usize)] += v;
        }
        m
    }
}

/// Assemble the global stiffness matrix by looping every implicit cell of
/// every block. Dirichlet rows are identity; columns are kept.
pub fn assemble_global(
    topo: &LevelTopology,
    numbering: &GlobalNumbering,
    geometry: Geometry,
) -> SparseMatrix {
    let mut entries: HashMap<(u32, u32), f64> = HashMap::new();
    let lat = &topo.lattice;
    for (b, block) in topo.blocks.iter().enumerate() {
        cells::for_each_cell(lat.n, |cell| {
            let p = cell.map(|(i, j, k)| block.coord(geometry, i as u32, j as u32, k as u32));
            let gid = cell.map(|(i, j, k)| {
                numbering.ids[b][lat.linear(i as u32, j as u32, k as u32)]
            });
            let k = local_stiffness(p[0], p[1], p[2], p[3])
                .expect("non-degenerate lattice cell")
                .0;
            for (a, &ra) in gid.iter().enumerate() {
                if numbering.dirichlet[ra as usize] {
                    continue;
                }
                for (c, &rc) in gid.iter().enumerate() {
                    *entries.entry((ra, rc)).or_insert(0.0) += k[a][c];
                }
            }
        });
    }
    for (g, &d) in numbering.dirichlet.iter().enumerate() {
        if d {
            entries.insert((g as u32, g as u32), 1.0);
        }
    }
    SparseMatrix {
        n: numbering.len,
        entries,
    }
}

/// Gather owner values of a grid function into a global vector.
pub fn gather(topo: &LevelTopology, numbering: &GlobalNumbering, u: &GridFunction) -> Vec<f64> {
    let mut x = vec![0.0; numbering.len];
    for b in 0..topo.block_count() {
        for idx in 0..topo.lattice.len() {
            if topo.is_owned(b, idx) {
                x[numbering.ids[b][idx] as usize] = u.value(b, idx);
            }
        }
    }
    x
}

/// Scatter a global vector into all copies of a grid function.
pub fn scatter(
    topo: &Arc<LevelTopology>,
    numbering: &GlobalNumbering,
    x: &[f64],
) -> GridFunction {
    let mut u = GridFunction::zeros(topo.clone());
    for b in 0..topo.block_count() {
        for idx in 0..topo.lattice.len() {
            u.set(b, idx, x[numbering.ids[b][idx] as usize]);
        }
    }
    u
}

/// Dense LU solve of the assembled system; the "exact discrete solution"
/// oracle for coarse levels.
pub fn dense_solve(matrix: &SparseMatrix, rhs: &[f64]) -> Vec<f64> {
    let a = matrix.to_dense();
    let b = nalgebra::DVector::from_column_slice(rhs);
    let x = a.lu().solve(&b).expect("oracle system must be solvable");
    x.as_slice().to_vec()
}

/// One plain lexicographic Gauss-Seidel sweep on the global system, visiting
/// the rows in the given order.
pub fn reference_gs_sweep(matrix: &SparseMatrix, order: &[u32], u: &mut [f64], f: &[f64]) {
    // row-compressed view for the sweep
    let mut rows: HashMap<u32, Vec<(u32, f64)>> = HashMap::new();
    for (&(r, c), &v) in &matrix.entries {
        rows.entry(r).or_default().push((c, v));
    }
    for &r in order {
        let row = &rows[&r];
        let mut acc = f[r as usize];
        let mut diag = 0.0;
        for &(c, v) in row {
            if c == r {
                diag = v;
            } else {
                acc -= v * u[c as usize];
            }
        }
        u[r as usize] = acc / diag;
    }
}
