// scratch diagnostics for the V-cycle; not part of the deliverable
use shellmg::fem::assemble_rhs;
use shellmg::mesh::{generate_shell_mesh, Geometry, MacroMesh};
use shellmg::multigrid::{solve, CycleSpec, Hierarchy, OperatorMode};
use std::sync::Arc;

fn main() {
    // one macro element of the shell, isolated (all faces Dirichlet)
    let shell = generate_shell_mesh(0.5, 1.0, 0, 1).unwrap();
    let tet = shell.tets[7];
    let verts: Vec<[f64; 3]> = tet.iter().map(|&v| shell.vertices[v as usize]).collect();
    let radii: Vec<f64> = tet.iter().map(|&v| shell.vertex_radius[v as usize]).collect();
    let single = MacroMesh::from_parts(verts, radii, vec![[0, 1, 2, 3]], 0.5, 1.0).unwrap();
    let mesh = Arc::new(single);
    for max_level in [3u8, 4] {
        let hier = Hierarchy::build(mesh.clone(), max_level, OperatorMode::FemProjected).unwrap();
        let topo = hier.topo(max_level).clone();
        let f = assemble_rhs(&topo, Geometry::Projected, |p| (4.0 * p[0]).sin() + p[1]);
        let spec = CycleSpec {
            cycles: 12,
            ..CycleSpec::default()
        };
        let (_, history) = solve(&hier, &spec, &f, 17, None).unwrap();
        let factors: Vec<String> = history
            .reduction_factors()
            .iter()
            .map(|f| format!("{f:.3}"))
            .collect();
        println!("single shell macro L={max_level}: {}", factors.join(" "));
    }
}
