//! Macro meshes, structured blocks and the shell blending map.

pub mod cells;
mod direction;
mod io;
mod lattice;
mod shell;

pub use direction::CardinalDirection;
pub use io::{read_mesh, write_mesh};
pub use lattice::{
    index_set, interior_node_count, lattice_size, total_node_count, Lattice, NodeClass, NodeIndex,
};
pub use shell::generate_shell_mesh;

use crate::vec3::{norm, scale, signed_volume, Point3};
use crate::{Error, Result};
use std::collections::HashMap;

/// Classification of a macro-element face.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryTag {
    Interior,
    /// Face on the inner shell surface (radius `r1`).
    InnerBoundary,
    /// Face on the outer shell surface (radius `r2`).
    OuterBoundary,
    /// Face on the domain boundary of a non-shell test mesh.
    DomainBoundary,
}

impl BoundaryTag {
    #[inline]
    pub fn is_boundary(self) -> bool {
        !matches!(self, BoundaryTag::Interior)
    }
}

/// Unstructured coarse tetrahedral mesh with per-vertex shell radii.
#[derive(Debug, Clone)]
pub struct MacroMesh {
    pub vertices: Vec<Point3>,
    /// Shell-layer radius associated with each vertex.
    pub vertex_radius: Vec<f64>,
    pub tets: Vec<[u32; 4]>,
    /// `face_tags[t][f]` tags the face of tet `t` opposite its vertex `f`.
    pub face_tags: Vec<[BoundaryTag; 4]>,
    pub r1: f64,
    pub r2: f64,
}

impl MacroMesh {
    /// Assemble a mesh from raw parts, derive face tags and run the
    /// conformity checks.
    ///
    /// Faces shared by two tets are interior. Faces owned by a single tet
    /// are boundary: a shell surface when all three vertex radii equal `r1`
    /// or `r2`, a generic domain boundary otherwise.
    pub fn from_parts(
        vertices: Vec<Point3>,
        vertex_radius: Vec<f64>,
        tets: Vec<[u32; 4]>,
        r1: f64,
        r2: f64,
    ) -> Result<Self> {
        if vertices.len() != vertex_radius.len() {
            return Err(Error::MeshConstruction(
                "vertex and radius counts differ".into(),
            ));
        }
        let mut tets = tets;
        for tet in &mut tets {
            for &v in tet.iter() {
                if v as usize >= vertices.len() {
                    return Err(Error::MeshConstruction(format!(
                        "tet references missing vertex {v}"
                    )));
                }
            }
            let vol = signed_volume(
                vertices[tet[0] as usize],
                vertices[tet[1] as usize],
                vertices[tet[2] as usize],
                vertices[tet[3] as usize],
            );
            if vol.abs() < 1e-14 {
                return Err(Error::DegenerateTet { volume: vol });
            }
            if vol < 0.0 {
                tet.swap(2, 3);
            }
        }

        // face -> owning tets
        let mut face_use: HashMap<[u32; 3], Vec<(u32, u8)>> = HashMap::new();
        for (t, tet) in tets.iter().enumerate() {
            for f in 0..4u8 {
                let mut face: Vec<u32> = (0..4)
                    .filter(|&v| v != f as usize)
                    .map(|v| tet[v])
                    .collect();
                face.sort_unstable();
                face_use
                    .entry([face[0], face[1], face[2]])
                    .or_default()
                    .push((t as u32, f));
            }
        }

        let mut face_tags = vec![[BoundaryTag::Interior; 4]; tets.len()];
        for (face, users) in &face_use {
            match users.len() {
                2 => {}
                1 => {
                    let radii: Vec<f64> = face.iter().map(|&v| vertex_radius[v as usize]).collect();
                    let uniform =
                        |r: f64| radii.iter().all(|&x| (x - r).abs() <= 1e-12 * r.max(1.0));
                    let tag = if uniform(r1) {
                        BoundaryTag::InnerBoundary
                    } else if uniform(r2) {
                        BoundaryTag::OuterBoundary
                    } else {
                        BoundaryTag::DomainBoundary
                    };
                    let (t, f) = users[0];
                    face_tags[t as usize][f as usize] = tag;
                }
                n => {
                    return Err(Error::MeshConstruction(format!(
                        "non-conforming mesh: face {face:?} shared by {n} tets"
                    )));
                }
            }
        }

        for &r in &vertex_radius {
            if r < r1 - 1e-12 || r > r2 + 1e-12 {
                return Err(Error::MeshConstruction(format!(
                    "vertex radius {r} outside [{r1}, {r2}]"
                )));
            }
        }

        Ok(Self {
            vertices,
            vertex_radius,
            tets,
            face_tags,
            r1,
            r2,
        })
    }

    pub fn tet_count(&self) -> usize {
        self.tets.len()
    }

    /// Vertex coordinates of macro element `macro_id`.
    pub fn tet_vertices(&self, macro_id: u32) -> [Point3; 4] {
        let t = self.tets[macro_id as usize];
        [
            self.vertices[t[0] as usize],
            self.vertices[t[1] as usize],
            self.vertices[t[2] as usize],
            self.vertices[t[3] as usize],
        ]
    }

    /// Vertex radii of macro element `macro_id`.
    pub fn tet_radii(&self, macro_id: u32) -> [f64; 4] {
        let t = self.tets[macro_id as usize];
        [
            self.vertex_radius[t[0] as usize],
            self.vertex_radius[t[1] as usize],
            self.vertex_radius[t[2] as usize],
            self.vertex_radius[t[3] as usize],
        ]
    }

    /// Longest macro edge.
    pub fn max_edge_length(&self) -> f64 {
        let mut h = 0.0f64;
        for tet in &self.tets {
            for a in 0..4 {
                for b in a + 1..4 {
                    let d = crate::vec3::sub(
                        self.vertices[tet[a] as usize],
                        self.vertices[tet[b] as usize],
                    );
                    h = h.max(norm(d));
                }
            }
        }
        h
    }

    /// Mean length over the unique macro edges; the reference macro mesh
    /// size for error scalings. Shell macros are strongly anisotropic, so
    /// the mean is a far better single length scale than the longest edge.
    pub fn mean_edge_length(&self) -> f64 {
        let mut seen = std::collections::HashSet::new();
        let mut total = 0.0;
        for tet in &self.tets {
            for a in 0..4 {
                for b in a + 1..4 {
                    let key = (tet[a].min(tet[b]), tet[a].max(tet[b]));
                    if seen.insert(key) {
                        let d = crate::vec3::sub(
                            self.vertices[key.0 as usize],
                            self.vertices[key.1 as usize],
                        );
                        total += norm(d);
                    }
                }
            }
        }
        total / seen.len() as f64
    }
}

/// Blending map: rescale an affine point radially so that it lands on the
/// barycentric interpolation of the macro vertex radii. Macro vertices are
/// fixed points; interior level sets become spherical layers.
pub fn blend_point(
    mesh: &MacroMesh,
    macro_id: u32,
    p_affine: Point3,
    bary: [f64; 4],
) -> Result<Point3> {
    let radii = mesh.tet_radii(macro_id);
    let rho = bary[0] * radii[0] + bary[1] * radii[1] + bary[2] * radii[2] + bary[3] * radii[3];
    let len = norm(p_affine);
    if len == 0.0 {
        return Err(Error::ZeroNormBlend);
    }
    Ok(scale(p_affine, rho / len))
}

/// Geometry used for node coordinates and element assembly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Geometry {
    /// Plain affine image of the reference lattice (unprojected).
    Affine,
    /// Affine image followed by the shell blending map (projected).
    Projected,
}

/// Structured node lattice of one macro element at a fixed level.
///
/// Coordinates are computed on demand; storing them for fine levels would
/// dominate memory without saving meaningful work.
#[derive(Debug, Clone)]
pub struct StructuredBlock {
    pub macro_id: u32,
    pub level: u8,
    pub lattice: Lattice,
    verts: [Point3; 4],
    radii: [f64; 4],
}

impl StructuredBlock {
    /// Barycentric weights of lattice node `(i, j, k)`.
    #[inline]
    pub fn barycentric(&self, i: u32, j: u32, k: u32) -> [f64; 4] {
        let n = self.lattice.n as f64;
        [
            (self.lattice.n - i - j - k) as f64 / n,
            i as f64 / n,
            j as f64 / n,
            k as f64 / n,
        ]
    }

    /// Node coordinate under the affine map.
    #[inline]
    pub fn affine_coord(&self, i: u32, j: u32, k: u32) -> Point3 {
        let w = self.barycentric(i, j, k);
        let mut p = [0.0; 3];
        for d in 0..3 {
            p[d] = w[0] * self.verts[0][d]
                + w[1] * self.verts[1][d]
                + w[2] * self.verts[2][d]
                + w[3] * self.verts[3][d];
        }
        p
    }

    /// Node coordinate under the blending map.
    #[inline]
    pub fn blended_coord(&self, i: u32, j: u32, k: u32) -> Point3 {
        let w = self.barycentric(i, j, k);
        let p = self.affine_coord(i, j, k);
        let rho = w[0] * self.radii[0] + w[1] * self.radii[1] + w[2] * self.radii[2] + w[3] * self.radii[3];
        let len = norm(p);
        debug_assert!(len > 0.0, "shell lattice node at the origin");
        scale(p, rho / len)
    }

    #[inline]
    pub fn coord(&self, geometry: Geometry, i: u32, j: u32, k: u32) -> Point3 {
        match geometry {
            Geometry::Affine => self.affine_coord(i, j, k),
            Geometry::Projected => self.blended_coord(i, j, k),
        }
    }

    #[inline]
    pub fn node_class(&self, i: u32, j: u32, k: u32) -> NodeClass {
        self.lattice.node_class(i, j, k)
    }

    pub fn interior_count(&self) -> u64 {
        interior_node_count(self.level)
    }
}

/// Build the structured block of `macro_id` at refinement level `level`.
pub fn build_block(mesh: &MacroMesh, macro_id: u32, level: u8) -> StructuredBlock {
    StructuredBlock {
        macro_id,
        level,
        lattice: Lattice::new(level),
        verts: mesh.tet_vertices(macro_id),
        radii: mesh.tet_radii(macro_id),
    }
}

/// Whether lattice node `(i,j,k)` of `macro_id` lies on a Dirichlet face.
pub fn on_dirichlet_face(mesh: &MacroMesh, macro_id: u32, lat: &Lattice, i: u32, j: u32, k: u32) -> bool {
    let tags = mesh.face_tags[macro_id as usize];
    let w0 = lat.n - i - j - k;
    // face f is opposite vertex f, i.e. the set where weight f vanishes
    (w0 == 0 && tags[0].is_boundary())
        || (i == 0 && tags[1].is_boundary())
        || (j == 0 && tags[2].is_boundary())
        || (k == 0 && tags[3].is_boundary())
}

/// A single reference tetrahedron with all faces on the domain boundary.
pub fn single_tet_mesh() -> MacroMesh {
    let vertices = vec![
        [0.0, 0.0, 0.0],
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
    ];
    let radius = vec![1.0; 4];
    MacroMesh::from_parts(vertices, radius, vec![[0, 1, 2, 3]], 0.0, 2.0)
        .expect("valid single-tet mesh")
}

/// A minimal two-tet mesh (unit-ish tets sharing a face); used with
/// [`Geometry::Affine`] in equivalence tests.
pub fn two_tet_mesh() -> MacroMesh {
    let vertices = vec![
        [0.0, 0.0, 0.0],
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
        [1.0, 1.0, 0.9],
    ];
    let radius = vec![1.0; 5];
    let tets = vec![[0, 1, 2, 3], [1, 2, 3, 4]];
    MacroMesh::from_parts(vertices, radius, tets, 0.0, 2.0).expect("valid two-tet mesh")
}
