//! Implicit tetrahedral cells of the structured lattice.
//!
//! The refined mesh inside a macro element is never stored. Successive
//! regular refinement produces a translation-invariant pattern on the index
//! lattice consisting of three cell families per unit sub-cube slot:
//!
//! - "up" tetrahedra `{b, b+e1, b+e2, b+e3}`,
//! - octahedra with vertices `b + {e1, e2, e3, e12, e13, e23}`, split into
//!   four tetrahedra along the diagonal `(b+e2) -- (b+e13)`,
//! - "down" tetrahedra `{b+e12, b+e13, b+e23, b+(1,1,1)}`.
//!
//! A recursive-refinement oracle in the test suite checks that this is
//! exactly the cell set obtained by refining the macro tetrahedron with the
//! standard eight-child rule.

use std::sync::OnceLock;

use super::lattice::Lattice;

pub type CellVerts = [(i64, i64, i64); 4];

const E1: (i64, i64, i64) = (1, 0, 0);
const E2: (i64, i64, i64) = (0, 1, 0);
const E3: (i64, i64, i64) = (0, 0, 1);
const E12: (i64, i64, i64) = (1, 1, 0);
const E13: (i64, i64, i64) = (1, 0, 1);
const E23: (i64, i64, i64) = (0, 1, 1);
const E123: (i64, i64, i64) = (1, 1, 1);

#[inline]
fn shift(b: (i64, i64, i64), d: (i64, i64, i64)) -> (i64, i64, i64) {
    (b.0 + d.0, b.1 + d.1, b.2 + d.2)
}

/// The 6 tetrahedra anchored at lattice slot `b` (1 up, 4 octahedral, 1 down).
/// Callers must filter by lattice membership of all four vertices.
pub fn slot_cells(b: (i64, i64, i64)) -> [CellVerts; 6] {
    [
        [b, shift(b, E1), shift(b, E2), shift(b, E3)],
        [shift(b, E1), shift(b, E2), shift(b, E3), shift(b, E13)],
        [shift(b, E1), shift(b, E2), shift(b, E12), shift(b, E13)],
        [shift(b, E2), shift(b, E3), shift(b, E13), shift(b, E23)],
        [shift(b, E2), shift(b, E12), shift(b, E13), shift(b, E23)],
        [shift(b, E12), shift(b, E13), shift(b, E23), shift(b, E123)],
    ]
}

/// Visit every cell of the lattice of size `n` exactly once.
pub fn for_each_cell(n: u32, mut f: impl FnMut(CellVerts)) {
    let n = n as i64;
    for k in 0..n {
        for j in 0..n - k {
            for i in 0..n - k - j {
                let b = (i, j, k);
                let s = i + j + k;
                f(slot_cells(b)[0]);
                if s <= n - 2 {
                    let cells = slot_cells(b);
                    for c in &cells[1..5] {
                        f(*c);
                    }
                }
                if s <= n - 3 {
                    f(slot_cells(b)[5]);
                }
            }
        }
    }
}

/// Total number of cells in a lattice of size `n` (equals `n^3`).
pub fn cell_count(n: u32) -> u64 {
    let n = n as u64;
    n * n * n
}

/// One tetrahedron adjacent to a lattice node, in node-relative coordinates.
#[derive(Debug, Clone, Copy)]
pub struct AdjacentCell {
    /// Vertex offsets from the node; entry `center` is `(0,0,0)`.
    pub verts: [(i8, i8, i8); 4],
    /// Local index of the node within the cell.
    pub center: u8,
    /// For each vertex, the cardinal-direction index of its offset.
    pub dir: [u8; 4],
}

/// The 24 cells adjacent to an interior node, as offsets from the node.
pub fn adjacent_cells() -> &'static [AdjacentCell] {
    static CELLS: OnceLock<Vec<AdjacentCell>> = OnceLock::new();
    CELLS.get_or_init(|| {
        use super::direction::CardinalDirection as Dir;
        let mut out = Vec::new();
        for bi in -1..=0i64 {
            for bj in -1..=0i64 {
                for bk in -1..=0i64 {
                    for cell in slot_cells((bi, bj, bk)) {
                        if let Some(center) = cell.iter().position(|&v| v == (0, 0, 0)) {
                            let mut verts = [(0i8, 0i8, 0i8); 4];
                            let mut dir = [0u8; 4];
                            for (v, off) in cell.iter().enumerate() {
                                verts[v] = (off.0 as i8, off.1 as i8, off.2 as i8);
                                let d = Dir::ALL
                                    .iter()
                                    .find(|d| {
                                        let (di, dj, dk) = d.offset();
                                        (di as i64, dj as i64, dk as i64) == *off
                                    })
                                    .expect("cell vertex offset must be a stencil direction");
                                dir[v] = d.index() as u8;
                            }
                            out.push(AdjacentCell {
                                verts,
                                center: center as u8,
                                dir,
                            });
                        }
                    }
                }
            }
        }
        assert_eq!(out.len(), 24, "an interior node touches 24 cells");
        out
    })
}

/// Cells adjacent to node `(i, j, k)` that lie fully inside the lattice.
/// For interior nodes this is all 24; near the macro boundary it is the
/// block-local part of the fan.
pub fn adjacent_cells_in_lattice(
    lat: &Lattice,
    i: u32,
    j: u32,
    k: u32,
    mut f: impl FnMut(&AdjacentCell),
) {
    let p = (i as i64, j as i64, k as i64);
    for cell in adjacent_cells() {
        let mut ok = true;
        for v in 0..4 {
            let (di, dj, dk) = cell.verts[v];
            if !lat.contains(p.0 + di as i64, p.1 + dj as i64, p.2 + dk as i64) {
                ok = false;
                break;
            }
        }
        if ok {
            f(cell);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::direction::CardinalDirection as Dir;
    use std::collections::BTreeSet;

    fn canon(cell: CellVerts) -> [(i64, i64, i64); 4] {
        let mut c = cell;
        c.sort_unstable();
        c
    }

    /// Recursive eight-child refinement of a tetrahedron given by its index
    /// coordinates; the independent oracle for the implicit cell pattern.
    fn refine_recursive(tet: CellVerts, depth: u32, out: &mut Vec<CellVerts>) {
        if depth == 0 {
            out.push(tet);
            return;
        }
        let [x0, x1, x2, x3] = tet;
        let mid = |a: (i64, i64, i64), b: (i64, i64, i64)| {
            ((a.0 + b.0) / 2, (a.1 + b.1) / 2, (a.2 + b.2) / 2)
        };
        let x01 = mid(x0, x1);
        let x02 = mid(x0, x2);
        let x03 = mid(x0, x3);
        let x12 = mid(x1, x2);
        let x13 = mid(x1, x3);
        let x23 = mid(x2, x3);
        let children: [CellVerts; 8] = [
            [x0, x01, x02, x03],
            [x01, x1, x12, x13],
            [x02, x12, x2, x23],
            [x03, x13, x23, x3],
            [x01, x02, x03, x13],
            [x01, x02, x12, x13],
            [x02, x03, x13, x23],
            [x02, x12, x13, x23],
        ];
        for c in children {
            refine_recursive(c, depth - 1, out);
        }
    }

    #[test]
    fn cell_pattern_matches_recursive_refinement() {
        for depth in 1..=3u32 {
            let n = 1i64 << depth;
            let macro_tet: CellVerts = [(0, 0, 0), (n, 0, 0), (0, n, 0), (0, 0, n)];
            let mut oracle = Vec::new();
            refine_recursive(macro_tet, depth, &mut oracle);
            let oracle: BTreeSet<_> = oracle.into_iter().map(canon).collect();

            let mut ours = BTreeSet::new();
            for_each_cell(n as u32, |c| {
                assert!(ours.insert(canon(c)), "duplicate cell {c:?}");
            });

            assert_eq!(ours.len() as u64, cell_count(n as u32));
            assert_eq!(ours, oracle, "depth {depth}");
        }
    }

    #[test]
    fn interior_node_fan_has_24_cells_and_14_neighbors() {
        let cells = adjacent_cells();
        assert_eq!(cells.len(), 24);
        let mut neighbors = BTreeSet::new();
        for c in cells {
            assert_eq!(c.verts[c.center as usize], (0, 0, 0));
            assert_eq!(c.dir[c.center as usize] as usize, Dir::Center.index());
            for v in c.verts {
                if v != (0, 0, 0) {
                    neighbors.insert(v);
                }
            }
        }
        let expected: BTreeSet<_> = Dir::ALL
            .iter()
            .filter(|d| **d != Dir::Center)
            .map(|d| {
                let (i, j, k) = d.offset();
                (i as i8, j as i8, k as i8)
            })
            .collect();
        assert_eq!(neighbors, expected);
    }

    #[test]
    fn edge_multiplicities_match_the_fan_structure() {
        // 6 directions see 4 cells, 8 directions see 6 cells.
        let mut counts = std::collections::HashMap::new();
        for c in adjacent_cells() {
            for v in 0..4 {
                if v != c.center as usize {
                    *counts.entry(c.dir[v]).or_insert(0usize) += 1;
                }
            }
        }
        let mut by_mult = std::collections::HashMap::new();
        for (_, m) in counts {
            *by_mult.entry(m).or_insert(0usize) += 1;
        }
        assert_eq!(by_mult.get(&4), Some(&6));
        assert_eq!(by_mult.get(&6), Some(&8));
    }

    #[test]
    fn boundary_fan_is_a_subset() {
        let lat = Lattice::new(0); // n = 4
        let mut count = 0;
        adjacent_cells_in_lattice(&lat, 1, 1, 1, |_| count += 1);
        assert_eq!(count, 24);
        let mut corner = 0;
        adjacent_cells_in_lattice(&lat, 0, 0, 0, |_| corner += 1);
        assert_eq!(corner, 1, "macro corner touches exactly the corner cell");
    }
}
