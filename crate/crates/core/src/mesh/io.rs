//! Plain-text serialization of a [`MacroMesh`].
//!
//! Format:
//! ```text
//! shellmesh v1 <r1> <r2>
//! v <x> <y> <z> <radius>
//! ...
//! t <a> <b> <c> <d>
//! ...
//! ```

use super::MacroMesh;
use crate::{Error, Result};
use std::io::{BufRead, Write};

pub fn write_mesh(mesh: &MacroMesh, out: &mut impl Write) -> Result<()> {
    writeln!(out, "shellmesh v1 {} {}", mesh.r1, mesh.r2)?;
    for (v, r) in mesh.vertices.iter().zip(&mesh.vertex_radius) {
        writeln!(out, "v {} {} {} {}", v[0], v[1], v[2], r)?;
    }
    for t in &mesh.tets {
        writeln!(out, "t {} {} {} {}", t[0], t[1], t[2], t[3])?;
    }
    Ok(())
}

pub fn read_mesh(input: &mut impl BufRead) -> Result<MacroMesh> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty mesh file".into()))??;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 4 || parts[0] != "shellmesh" || parts[1] != "v1" {
        return Err(Error::Parse(format!("bad mesh header: {header}")));
    }
    let r1: f64 = parts[2]
        .parse()
        .map_err(|e| Error::Parse(format!("bad r1: {e}")))?;
    let r2: f64 = parts[3]
        .parse()
        .map_err(|e| Error::Parse(format!("bad r2: {e}")))?;

    let mut vertices = Vec::new();
    let mut radius = Vec::new();
    let mut tets = Vec::new();
    for line in lines {
        let line = line?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields.first() {
            Some(&"v") if fields.len() == 5 => {
                let mut vals = [0.0f64; 4];
                for (slot, s) in vals.iter_mut().zip(&fields[1..]) {
                    *slot = s
                        .parse()
                        .map_err(|e| Error::Parse(format!("bad vertex field: {e}")))?;
                }
                vertices.push([vals[0], vals[1], vals[2]]);
                radius.push(vals[3]);
            }
            Some(&"t") if fields.len() == 5 => {
                let mut ids = [0u32; 4];
                for (slot, s) in ids.iter_mut().zip(&fields[1..]) {
                    *slot = s
                        .parse()
                        .map_err(|e| Error::Parse(format!("bad tet field: {e}")))?;
                }
                tets.push(ids);
            }
            Some(_) => return Err(Error::Parse(format!("unrecognized line: {line}"))),
            None => {}
        }
    }
    MacroMesh::from_parts(vertices, radius, tets, r1, r2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate_shell_mesh;

    #[test]
    fn roundtrip_preserves_everything() {
        let mesh = generate_shell_mesh(0.5, 1.0, 0, 2).unwrap();
        let mut buf = Vec::new();
        write_mesh(&mesh, &mut buf).unwrap();
        let back = read_mesh(&mut buf.as_slice()).unwrap();
        assert_eq!(back.tets, mesh.tets);
        assert_eq!(back.vertices, mesh.vertices);
        assert_eq!(back.vertex_radius, mesh.vertex_radius);
        assert_eq!((back.r1, back.r2), (mesh.r1, mesh.r2));
    }

    #[test]
    fn rejects_garbage() {
        assert!(read_mesh(&mut "not a mesh".as_bytes()).is_err());
    }
}
