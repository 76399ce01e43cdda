//! Spherical-shell macro mesh: an icosahedral surface triangulation extruded
//! into radial layers, every prism split into three tetrahedra.

use super::MacroMesh;
use crate::vec3::{add, norm, scale, Point3};
use crate::{Error, Result};
use std::collections::HashMap;

/// Unit icosahedron surface, subdivided `t` times with new vertices pushed
/// onto the unit sphere.
fn unit_icosphere(t: u32) -> (Vec<Point3>, Vec<[u32; 3]>) {
    let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
    let raw: [Point3; 12] = [
        [-1.0, phi, 0.0],
        [1.0, phi, 0.0],
        [-1.0, -phi, 0.0],
        [1.0, -phi, 0.0],
        [0.0, -1.0, phi],
        [0.0, 1.0, phi],
        [0.0, -1.0, -phi],
        [0.0, 1.0, -phi],
        [phi, 0.0, -1.0],
        [phi, 0.0, 1.0],
        [-phi, 0.0, -1.0],
        [-phi, 0.0, 1.0],
    ];
    let mut vertices: Vec<Point3> = raw.iter().map(|&v| scale(v, 1.0 / norm(v))).collect();
    let mut faces: Vec<[u32; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];

    for _ in 0..t {
        let mut midpoint: HashMap<(u32, u32), u32> = HashMap::new();
        let mut next: Vec<[u32; 3]> = Vec::with_capacity(faces.len() * 4);
        for &[a, b, c] in &faces {
            let mut mid = |p: u32, q: u32, verts: &mut Vec<Point3>| -> u32 {
                let key = (p.min(q), p.max(q));
                *midpoint.entry(key).or_insert_with(|| {
                    let m = scale(add(verts[p as usize], verts[q as usize]), 0.5);
                    verts.push(scale(m, 1.0 / norm(m)));
                    (verts.len() - 1) as u32
                })
            };
            let ab = mid(a, b, &mut vertices);
            let bc = mid(b, c, &mut vertices);
            let ca = mid(c, a, &mut vertices);
            next.push([a, ab, ca]);
            next.push([b, bc, ab]);
            next.push([c, ca, bc]);
            next.push([ab, bc, ca]);
        }
        faces = next;
    }
    (vertices, faces)
}

/// Generate the shell macro mesh: `20 * 4^t` spherical triangles times `n_r`
/// radial slabs, each prism cut into 3 tetrahedra. Prism diagonals are chosen
/// from the global surface-vertex ordering, which makes the split conforming
/// across neighbouring prisms.
pub fn generate_shell_mesh(r1: f64, r2: f64, t: u32, n_r: u32) -> Result<MacroMesh> {
    if !(r1 > 0.0 && r2 > r1) {
        return Err(Error::Validation(format!(
            "shell radii must satisfy 0 < r1 < r2, got ({r1}, {r2})"
        )));
    }
    if n_r == 0 {
        return Err(Error::Validation("need at least one radial layer".into()));
    }

    let (surf, faces) = unit_icosphere(t);
    let n_surf = surf.len() as u32;

    let mut vertices = Vec::with_capacity(surf.len() * (n_r as usize + 1));
    let mut radius = Vec::with_capacity(vertices.capacity());
    for layer in 0..=n_r {
        let rho = r1 + (r2 - r1) * layer as f64 / n_r as f64;
        for dir in &surf {
            vertices.push(scale(*dir, rho));
            radius.push(rho);
        }
    }

    let vid = |layer: u32, s: u32| layer * n_surf + s;
    let mut tets = Vec::with_capacity(faces.len() * n_r as usize * 3);
    for &face in &faces {
        // order prism columns by surface vertex id so that shared quad faces
        // get the same diagonal from either side
        let mut cols = face;
        cols.sort_unstable();
        let [s0, s1, s2] = cols;
        for layer in 0..n_r {
            let (p0, p1, p2) = (vid(layer, s0), vid(layer, s1), vid(layer, s2));
            let (q0, q1, q2) = (vid(layer + 1, s0), vid(layer + 1, s1), vid(layer + 1, s2));
            tets.push([p0, p1, p2, q0]);
            tets.push([p1, p2, q0, q1]);
            tets.push([p2, q0, q1, q2]);
        }
    }

    let mesh = MacroMesh::from_parts(vertices, radius, tets, r1, r2)?;

    // every boundary face must sit on one of the two shell surfaces
    for tags in &mesh.face_tags {
        for tag in tags {
            if matches!(tag, super::BoundaryTag::DomainBoundary) {
                return Err(Error::MeshConstruction(
                    "prism split left a boundary face off the shell surfaces".into(),
                ));
            }
        }
    }
    let expected = 60 * 4usize.pow(t) * n_r as usize / 3 * 3;
    debug_assert_eq!(mesh.tet_count(), expected);
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn icosphere_counts() {
        let (v, f) = unit_icosphere(0);
        assert_eq!((v.len(), f.len()), (12, 20));
        let (v, f) = unit_icosphere(1);
        assert_eq!((v.len(), f.len()), (42, 80));
        for p in v {
            assert!((norm(p) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_invalid_parameters() {
        assert!(generate_shell_mesh(1.0, 0.5, 0, 1).is_err());
        assert!(generate_shell_mesh(0.0, 1.0, 0, 1).is_err());
        assert!(generate_shell_mesh(0.5, 1.0, 0, 0).is_err());
    }
}
