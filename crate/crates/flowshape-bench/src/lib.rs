//! Shared fixtures for the benchmark targets.

use flowshape::mesh::generate_channel_mesh;
use flowshape::{Rect, TriMesh};

/// Benchmark channel geometry; `resolution` is the obstacle-loop segment
/// count, so cell counts grow roughly with its square.
pub fn channel(resolution: usize) -> TriMesh {
    generate_channel_mesh(
        Rect::new(-7.0, 7.0, -3.0, 3.0),
        Rect::new(-0.5, 0.5, -0.5, 0.5),
        resolution,
        None,
    )
    .expect("benchmark mesh generation")
}

/// Smooth divergence-free-ish vertex field, zero on the outer boundary,
/// used as a stand-in descent direction.
pub fn synthetic_field(mesh: &TriMesh) -> Vec<f64> {
    let outer = mesh.marked_vertex_flags(|m| m.is_outer());
    let mut u = vec![0.0; 2 * mesh.n_vertices()];
    for (v, p) in mesh.vertices().iter().enumerate() {
        if outer[v] {
            continue;
        }
        let (x, y) = (p[0], p[1]);
        u[2 * v] = 0.05 * (0.7 * x).sin() * (1.3 * y).cos();
        u[2 * v + 1] = 0.05 * (0.9 * x).cos() * (1.1 * y).sin();
    }
    u
}
