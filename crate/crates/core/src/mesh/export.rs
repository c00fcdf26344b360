use std::fmt::Write;

use crate::mesh::TriMesh;

/// ASCII OFF with `z = 0`.
pub fn mesh_to_off(mesh: &TriMesh) -> String {
    let mut s = String::new();
    writeln!(s, "OFF").unwrap();
    writeln!(s, "{} {} 0", mesh.num_vertices(), mesh.num_triangles()).unwrap();
    for p in &mesh.vertices {
        writeln!(s, "{} {} 0", p[0], p[1]).unwrap();
    }
    for t in &mesh.triangles {
        writeln!(s, "3 {} {} {}", t[0], t[1], t[2]).unwrap();
    }
    s
}

/// SVG line drawing of the mesh edges over the image extent (y grows downward, as in the image).
pub fn mesh_to_svg(mesh: &TriMesh) -> String {
    let (ex, ey) = mesh.extent();
    let stroke = (ex.max(ey) / 1000.0).max(0.1);
    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="-0.5 -0.5 {} {}" width="{}" height="{}">"#,
        ex + 1.0,
        ey + 1.0,
        ex + 1.0,
        ey + 1.0
    )
    .unwrap();
    writeln!(s, r#"<rect x="-0.5" y="-0.5" width="{}" height="{}" fill="white"/>"#, ex + 1.0, ey + 1.0).unwrap();
    writeln!(s, r#"<g stroke="black" stroke-width="{stroke}" fill="none">"#).unwrap();
    for (a, b) in mesh.edges() {
        let (p, q) = (mesh.vertices[a], mesh.vertices[b]);
        writeln!(
            s,
            r#"<line x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}"/>"#,
            p[0], p[1], q[0], q[1]
        )
        .unwrap();
    }
    writeln!(s, "</g>\n</svg>").unwrap();
    s
}
