//! Legacy ASCII VTK output (UNSTRUCTURED_GRID) for meshes and vertex data.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::Error;
use crate::mesh::TriMesh;
use crate::Result;

/// Fields attached to mesh vertices: one value per vertex for scalars, two
/// interleaved per vertex for vectors (a zero z component is added on
/// write). For P2 fields pass the leading vertex block.
#[derive(Default)]
pub struct VertexFields<'a> {
    pub scalars: Vec<(&'a str, &'a [f64])>,
    pub vectors: Vec<(&'a str, &'a [f64])>,
}

/// Euclidean magnitude per vertex of an interleaved vector field; accepts
/// fields with trailing non-vertex dofs (P2) and uses the first 2 nv values.
pub fn vertex_magnitudes(field: &[f64], nv: usize) -> Vec<f64> {
    assert!(field.len() >= 2 * nv);
    (0..nv)
        .map(|v| (field[2 * v] * field[2 * v] + field[2 * v + 1] * field[2 * v + 1]).sqrt())
        .collect()
}

pub fn vtk_string(mesh: &TriMesh, fields: &VertexFields) -> Result<String> {
    let nv = mesh.n_vertices();
    let nc = mesh.n_cells();
    for (name, data) in &fields.scalars {
        check_field(name, data.len(), nv, 1)?;
    }
    for (name, data) in &fields.vectors {
        check_field(name, data.len(), nv, 2)?;
    }

    let mut s = String::new();
    s.push_str("# vtk DataFile Version 3.0\n");
    s.push_str("flowshape snapshot\n");
    s.push_str("ASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(s, "POINTS {nv} double");
    for v in 0..nv {
        let p = mesh.vertex(v);
        let _ = writeln!(s, "{} {} 0", p[0], p[1]);
    }
    let _ = writeln!(s, "CELLS {nc} {}", 4 * nc);
    for c in 0..nc {
        let [a, b, d] = mesh.cell(c);
        let _ = writeln!(s, "3 {a} {b} {d}");
    }
    let _ = writeln!(s, "CELL_TYPES {nc}");
    for _ in 0..nc {
        s.push_str("5\n");
    }

    if !fields.scalars.is_empty() || !fields.vectors.is_empty() {
        let _ = writeln!(s, "POINT_DATA {nv}");
    }
    for (name, data) in &fields.scalars {
        let _ = writeln!(s, "SCALARS {name} double 1");
        s.push_str("LOOKUP_TABLE default\n");
        for v in data.iter() {
            let _ = writeln!(s, "{v}");
        }
    }
    for (name, data) in &fields.vectors {
        let _ = writeln!(s, "VECTORS {name} double");
        for v in 0..nv {
            let _ = writeln!(s, "{} {} 0", data[2 * v], data[2 * v + 1]);
        }
    }
    Ok(s)
}

pub fn write_vtk(mesh: &TriMesh, fields: &VertexFields, path: &Path) -> Result<()> {
    let text = vtk_string(mesh, fields)?;
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })
}

fn check_field(name: &str, len: usize, nv: usize, comps: usize) -> Result<()> {
    if name.is_empty() || name.contains(char::is_whitespace) {
        return Err(Error::Input(format!("invalid vtk field name {name:?}")));
    }
    if len != comps * nv {
        return Err(Error::Input(format!(
            "field {name} has {len} values, expected {}",
            comps * nv
        )));
    }
    Ok(())
}
