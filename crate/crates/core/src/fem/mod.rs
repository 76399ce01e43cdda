//! On-the-fly finite element assembly for the Laplacian.

mod grid;
mod operator;

pub use grid::{GridFunction, LevelTopology};
pub use operator::{
    apply_operator, apply_operator_with, assemble_rhs, interface_row, residual, residual_with,
    InterfaceRows,
};

use crate::mesh::{cells, CardinalDirection, Geometry, StructuredBlock};
use crate::vec3::{cross, dot, sub, Point3};
use crate::{Error, Result};

/// Element stiffness matrix of a linear tetrahedron: `|T| * grad(l_a) . grad(l_b)`.
#[derive(Debug, Clone, Copy)]
pub struct LocalStiffness(pub [[f64; 4]; 4]);

/// Gradients of the four barycentric basis functions and the unsigned volume.
#[inline]
fn tet_gradients(p: [Point3; 4]) -> ([Point3; 4], f64) {
    let a = sub(p[1], p[0]);
    let b = sub(p[2], p[0]);
    let c = sub(p[3], p[0]);
    let bc = cross(b, c);
    let det = dot(a, bc);
    let inv = 1.0 / det;
    let g1 = [bc[0] * inv, bc[1] * inv, bc[2] * inv];
    let ca = cross(c, a);
    let g2 = [ca[0] * inv, ca[1] * inv, ca[2] * inv];
    let ab = cross(a, b);
    let g3 = [ab[0] * inv, ab[1] * inv, ab[2] * inv];
    let g0 = [-g1[0] - g2[0] - g3[0], -g1[1] - g2[1] - g3[1], -g1[2] - g2[2] - g3[2]];
    ([g0, g1, g2, g3], det.abs() / 6.0)
}

/// Element stiffness matrix of the tetrahedron `(p0, p1, p2, p3)`.
pub fn local_stiffness(p0: Point3, p1: Point3, p2: Point3, p3: Point3) -> Result<LocalStiffness> {
    let vol = crate::vec3::signed_volume(p0, p1, p2, p3);
    if vol.abs() <= 1e-14 {
        return Err(Error::DegenerateTet { volume: vol });
    }
    let (g, v) = tet_gradients([p0, p1, p2, p3]);
    let mut m = [[0.0; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            m[a][b] = v * dot(g[a], g[b]);
        }
    }
    Ok(LocalStiffness(m))
}

/// One matrix row in stencil form: 15 weights indexed by cardinal direction.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Stencil15(pub [f64; 15]);

impl Stencil15 {
    #[inline]
    pub fn get(&self, w: CardinalDirection) -> f64 {
        self.0[w.index()]
    }

    #[inline]
    pub fn set(&mut self, w: CardinalDirection, v: f64) {
        self.0[w.index()] = v;
    }

    pub fn row_sum(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0f64, |m, w| m.max(w.abs()))
    }
}

/// How the center weight of an assembled stencil is produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CenterRule {
    /// Assemble the diagonal entry directly from the element matrices.
    Direct,
    /// Use the negated sum of the 14 off-center weights.
    RowSum,
}

/// Row of the discrete operator at any lattice node in stencil form: the
/// fan of adjacent cells that lie fully inside this block, accumulated by
/// direction. For volume-interior nodes this is the full 24-cell fan; for
/// macro-boundary nodes it is the block-local part of the row.
pub(crate) fn node_row(
    block: &StructuredBlock,
    i: u32,
    j: u32,
    k: u32,
    geometry: Geometry,
) -> Stencil15 {
    let lat = &block.lattice;
    // coordinates of the node and its in-lattice neighbours plus a validity
    // mask over the 15 directions
    let mut coords = [[0.0f64; 3]; 15];
    let mut valid = 0u16;
    for w in CardinalDirection::ALL {
        let (di, dj, dk) = w.offset();
        let (ni, nj, nk) = (
            i as i64 + di as i64,
            j as i64 + dj as i64,
            k as i64 + dk as i64,
        );
        if lat.contains(ni, nj, nk) {
            valid |= 1 << w.index();
            coords[w.index()] = block.coord(geometry, ni as u32, nj as u32, nk as u32);
        }
    }
    let mut s = Stencil15::default();
    for cell in cells::adjacent_cells() {
        let mask = (1u16 << cell.dir[0]) | (1 << cell.dir[1]) | (1 << cell.dir[2]) | (1 << cell.dir[3]);
        if valid & mask != mask {
            continue;
        }
        let p = [
            coords[cell.dir[0] as usize],
            coords[cell.dir[1] as usize],
            coords[cell.dir[2] as usize],
            coords[cell.dir[3] as usize],
        ];
        let (g, vol) = tet_gradients(p);
        let c = cell.center as usize;
        let gc = g[c];
        for v in 0..4 {
            s.0[cell.dir[v] as usize] += vol * dot(gc, g[v]);
        }
    }
    s
}

/// Assemble the 15-point stencil of a volume-interior node from the 24
/// adjacent implicit cells.
///
/// Panics if `(i, j, k)` is not volume-interior; boundary rows have partial
/// fans and are handled by [`interface_row`].
pub fn assemble_node_stencil(
    block: &StructuredBlock,
    i: u32,
    j: u32,
    k: u32,
    geometry: Geometry,
    center: CenterRule,
) -> Stencil15 {
    assert!(
        block.lattice.is_interior(i, j, k),
        "stencil assembly requires a volume-interior node"
    );
    let mut s = node_row(block, i, j, k, geometry);
    if center == CenterRule::RowSum {
        let mc = CardinalDirection::Center.index();
        let mut acc = 0.0;
        for (w, &val) in s.0.iter().enumerate() {
            if w != mc {
                acc += val;
            }
        }
        s.0[mc] = -acc;
    }
    s
}

/// Source of interior-node stencils for operator application and smoothing.
pub trait StencilProvider: Sync {
    fn stencil(&self, macro_id: u32, i: u32, j: u32, k: u32) -> Stencil15;

    /// Geometry used for interface rows and quadrature tied to this operator.
    fn geometry(&self) -> Geometry;
}

/// Assembles true finite element stencils on demand.
pub struct FemProvider<'a> {
    pub blocks: &'a [StructuredBlock],
    pub geometry: Geometry,
    pub center: CenterRule,
}

impl StencilProvider for FemProvider<'_> {
    #[inline]
    fn stencil(&self, macro_id: u32, i: u32, j: u32, k: u32) -> Stencil15 {
        assemble_node_stencil(
            &self.blocks[macro_id as usize],
            i,
            j,
            k,
            self.geometry,
            self.center,
        )
    }

    fn geometry(&self) -> Geometry {
        self.geometry
    }
}

/// One fixed stencil per macro element; exact for affine geometry where the
/// interior stencil function is constant.
pub struct ConstantProvider {
    pub stencils: Vec<Stencil15>,
    pub geometry: Geometry,
}

impl ConstantProvider {
    /// Sample the stencil at one interior node of every macro element.
    pub fn from_blocks(blocks: &[StructuredBlock], geometry: Geometry, center: CenterRule) -> Self {
        let stencils = blocks
            .iter()
            .map(|b| assemble_node_stencil(b, 1, 1, 1, geometry, center))
            .collect();
        Self { stencils, geometry }
    }
}

impl StencilProvider for ConstantProvider {
    #[inline]
    fn stencil(&self, macro_id: u32, _i: u32, _j: u32, _k: u32) -> Stencil15 {
        self.stencils[macro_id as usize]
    }

    fn geometry(&self) -> Geometry {
        self.geometry
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_block, generate_shell_mesh, two_tet_mesh};

    #[test]
    fn reference_tet_stiffness_oracle() {
        // hand-computed: gradients (-1,-1,-1), e1, e2, e3 and volume 1/6
        let k = local_stiffness(
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
        )
        .unwrap()
        .0;
        let expect = [
            [0.5, -1.0 / 6.0, -1.0 / 6.0, -1.0 / 6.0],
            [-1.0 / 6.0, 1.0 / 6.0, 0.0, 0.0],
            [-1.0 / 6.0, 0.0, 1.0 / 6.0, 0.0],
            [-1.0 / 6.0, 0.0, 0.0, 1.0 / 6.0],
        ];
        for a in 0..4 {
            for b in 0..4 {
                assert!(
                    (k[a][b] - expect[a][b]).abs() < 1e-15,
                    "entry ({a},{b}) = {}",
                    k[a][b]
                );
            }
        }
    }

    #[test]
    fn stiffness_rows_sum_to_zero_and_symmetric() {
        let p = [
            [0.1, 0.2, -0.3],
            [1.3, 0.1, 0.2],
            [0.3, 1.1, -0.1],
            [0.4, 0.3, 1.2],
        ];
        let k = local_stiffness(p[0], p[1], p[2], p[3]).unwrap().0;
        for a in 0..4 {
            let row: f64 = k[a].iter().sum();
            assert!(row.abs() < 1e-13);
            for b in 0..4 {
                assert!((k[a][b] - k[b][a]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn congruent_tets_have_identical_matrices() {
        let p = [
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
        ];
        let shift = [5.0, -2.0, 3.0];
        let q: Vec<_> = p.iter().map(|v| crate::vec3::add(*v, shift)).collect();
        let k1 = local_stiffness(p[0], p[1], p[2], p[3]).unwrap().0;
        let k2 = local_stiffness(q[0], q[1], q[2], q[3]).unwrap().0;
        for a in 0..4 {
            for b in 0..4 {
                assert!((k1[a][b] - k2[a][b]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn degenerate_tet_is_rejected() {
        assert!(matches!(
            local_stiffness(
                [0.0, 0.0, 0.0],
                [1.0, 0.0, 0.0],
                [0.0, 1.0, 0.0],
                [0.5, 0.5, 0.0],
            ),
            Err(Error::DegenerateTet { .. })
        ));
    }

    #[test]
    fn affine_stencils_are_constant_within_a_macro() {
        let mesh = two_tet_mesh();
        let block = build_block(&mesh, 0, 2);
        let s0 = assemble_node_stencil(&block, 1, 1, 1, Geometry::Affine, CenterRule::Direct);
        let s1 = assemble_node_stencil(&block, 3, 5, 2, Geometry::Affine, CenterRule::Direct);
        let s2 = assemble_node_stencil(&block, 7, 2, 4, Geometry::Affine, CenterRule::Direct);
        let scale = s0.max_abs();
        for w in 0..15 {
            assert!((s0.0[w] - s1.0[w]).abs() <= 1e-14 * scale);
            assert!((s0.0[w] - s2.0[w]).abs() <= 1e-14 * scale);
        }
    }

    #[test]
    fn affine_stencils_halve_per_level() {
        let mesh = two_tet_mesh();
        let b0 = build_block(&mesh, 0, 0);
        let s_hat = assemble_node_stencil(&b0, 1, 1, 1, Geometry::Affine, CenterRule::Direct);
        for level in 1..=3u8 {
            let b = build_block(&mesh, 0, level);
            let s = assemble_node_stencil(&b, 1, 1, 1, Geometry::Affine, CenterRule::Direct);
            let factor = 0.5f64.powi(level as i32);
            let scale = s_hat.max_abs() * factor;
            for w in 0..15 {
                assert!(
                    (s.0[w] - s_hat.0[w] * factor).abs() <= 1e-14 * scale,
                    "level {level} dir {w}"
                );
            }
        }
    }

    #[test]
    fn projected_stencil_rowsum_and_positive_center() {
        let mesh = generate_shell_mesh(0.5, 1.0, 0, 1).unwrap();
        let block = build_block(&mesh, 3, 2);
        for &(i, j, k) in &[(1u32, 1u32, 1u32), (4, 5, 3), (2, 7, 2)] {
            let s = assemble_node_stencil(&block, i, j, k, Geometry::Projected, CenterRule::Direct);
            assert!(s.row_sum().abs() <= 1e-12 * s.max_abs());
            assert!(s.get(CardinalDirection::Center) > 0.0);
        }
    }

    #[test]
    fn galerkin_symmetry_of_projected_stencils() {
        let mesh = generate_shell_mesh(0.5, 1.0, 0, 1).unwrap();
        let block = build_block(&mesh, 11, 2);
        let lat = block.lattice.clone();
        for &(i, j, k) in &[(2u32, 2u32, 2u32), (3, 4, 5), (6, 3, 2)] {
            let s = assemble_node_stencil(&block, i, j, k, Geometry::Projected, CenterRule::Direct);
            for w in CardinalDirection::ALL {
                if w == CardinalDirection::Center {
                    continue;
                }
                let idx = crate::mesh::NodeIndex::new(i, j, k, 2);
                let nb = lat.neighbor(idx, w).unwrap();
                if !lat.is_interior(nb.i, nb.j, nb.k) {
                    continue;
                }
                let back = assemble_node_stencil(
                    &block,
                    nb.i,
                    nb.j,
                    nb.k,
                    Geometry::Projected,
                    CenterRule::Direct,
                );
                let scale = s.max_abs();
                assert!(
                    (s.get(w) - back.get(w.opposite())).abs() <= 1e-12 * scale,
                    "direction {w:?}"
                );
            }
        }
    }

    #[test]
    #[should_panic(expected = "volume-interior")]
    fn non_interior_node_is_a_contract_violation() {
        let mesh = two_tet_mesh();
        let block = build_block(&mesh, 0, 1);
        let _ = assemble_node_stencil(&block, 0, 1, 1, Geometry::Affine, CenterRule::Direct);
    }
}
