//! Element geometry, P1/P2 basis evaluation, and the P1/P0 kernels shared
//! by the descent modules. Taylor-Hood kernels live in `flow`.

use crate::mesh::TriMesh;

use super::quadrature::quad_rule;
use super::space::{build_space, SpaceKind};
use super::sparse::{Pattern, SparseMatrix};

/// Affine geometry of one triangle: coordinates, area, and the (constant)
/// gradients of the three barycentric coordinates.
#[derive(Debug, Clone, Copy)]
pub struct CellGeom {
    pub coords: [[f64; 2]; 3],
    pub area: f64,
    pub grads: [[f64; 2]; 3],
}

impl CellGeom {
    pub fn new(mesh: &TriMesh, c: usize) -> CellGeom {
        let [a, b, d] = mesh.cell(c);
        CellGeom::from_coords([mesh.vertex(a), mesh.vertex(b), mesh.vertex(d)])
    }

    pub fn from_coords(coords: [[f64; 2]; 3]) -> CellGeom {
        let d1 = [coords[1][0] - coords[0][0], coords[1][1] - coords[0][1]];
        let d2 = [coords[2][0] - coords[0][0], coords[2][1] - coords[0][1]];
        let det = d1[0] * d2[1] - d1[1] * d2[0];
        let g1 = [d2[1] / det, -d2[0] / det];
        let g2 = [-d1[1] / det, d1[0] / det];
        let g0 = [-g1[0] - g2[0], -g1[1] - g2[1]];
        CellGeom {
            coords,
            area: 0.5 * det,
            grads: [g0, g1, g2],
        }
    }

    pub fn point(&self, bary: [f64; 3]) -> [f64; 2] {
        let mut p = [0.0, 0.0];
        for (l, c) in bary.iter().zip(&self.coords) {
            p[0] += l * c[0];
            p[1] += l * c[1];
        }
        p
    }
}

/// P2 basis values at a barycentric point; local nodes are the three
/// vertices followed by the midpoints opposite them.
pub fn p2_values(bary: [f64; 3]) -> [f64; 6] {
    let [l0, l1, l2] = bary;
    [
        l0 * (2.0 * l0 - 1.0),
        l1 * (2.0 * l1 - 1.0),
        l2 * (2.0 * l2 - 1.0),
        4.0 * l1 * l2,
        4.0 * l2 * l0,
        4.0 * l0 * l1,
    ]
}

/// P2 basis gradients at a barycentric point, given the cell's barycentric
/// gradients.
pub fn p2_gradients(bary: [f64; 3], grads: &[[f64; 2]; 3]) -> [[f64; 2]; 6] {
    let [l0, l1, l2] = bary;
    let [g0, g1, g2] = *grads;
    let lin = |c0: f64, c1: f64, c2: f64| {
        [
            c0 * g0[0] + c1 * g1[0] + c2 * g2[0],
            c0 * g0[1] + c1 * g1[1] + c2 * g2[1],
        ]
    };
    [
        lin(4.0 * l0 - 1.0, 0.0, 0.0),
        lin(0.0, 4.0 * l1 - 1.0, 0.0),
        lin(0.0, 0.0, 4.0 * l2 - 1.0),
        lin(0.0, 4.0 * l2, 4.0 * l1),
        lin(4.0 * l2, 0.0, 4.0 * l0),
        lin(4.0 * l1, 4.0 * l0, 0.0),
    ]
}

/// Gradient of a P1 vector field on one cell from its six local dof values
/// (interleaved). Du[a][b] = d u_a / d x_b.
pub fn p1_vector_gradient(geom: &CellGeom, local: &[f64; 6]) -> [[f64; 2]; 2] {
    let mut du = [[0.0; 2]; 2];
    for i in 0..3 {
        for a in 0..2 {
            for b in 0..2 {
                du[a][b] += local[2 * i + a] * geom.grads[i][b];
            }
        }
    }
    du
}

/// Scalar P1 mass matrix, degree-2 quadrature (exact).
pub fn p1_mass(mesh: &TriMesh) -> SparseMatrix {
    let space = build_space(mesh, SpaceKind::P1Scalar, &[]);
    let pattern = Pattern::build(space.n_dofs, &space.cell_dofs, 3);
    let mut mat = pattern.zeros();
    let rule = quad_rule(2);
    let mut local = [0.0; 9];
    for c in 0..mesh.n_cells() {
        let geom = CellGeom::new(mesh, c);
        local.fill(0.0);
        for q in rule.points {
            let w = q.weight * geom.area;
            for i in 0..3 {
                for j in 0..3 {
                    local[3 * i + j] += w * q.bary[i] * q.bary[j];
                }
            }
        }
        pattern.scatter_add(mat.values_mut(), c, &local);
    }
    mat
}

/// Scalar P1 stiffness matrix (exact, piecewise-constant gradients).
pub fn p1_stiffness(mesh: &TriMesh) -> SparseMatrix {
    let space = build_space(mesh, SpaceKind::P1Scalar, &[]);
    let pattern = Pattern::build(space.n_dofs, &space.cell_dofs, 3);
    let mut mat = pattern.zeros();
    let mut local = [0.0; 9];
    for c in 0..mesh.n_cells() {
        let geom = CellGeom::new(mesh, c);
        for i in 0..3 {
            for j in 0..3 {
                local[3 * i + j] = geom.area
                    * (geom.grads[i][0] * geom.grads[j][0] + geom.grads[i][1] * geom.grads[j][1]);
            }
        }
        pattern.scatter_add(mat.values_mut(), c, &local);
    }
    mat
}

/// Vector P1 stiffness K with K[(i,a),(j,b)] = delta_ab int grad(l_i).grad(l_j):
/// the bilinear form (Du, Dv) on P1 vector fields.
pub fn p1_vector_stiffness(mesh: &TriMesh) -> SparseMatrix {
    let space = build_space(mesh, SpaceKind::P1Vector, &[]);
    let pattern = Pattern::build(space.n_dofs, &space.cell_dofs, 6);
    let mut mat = pattern.zeros();
    let mut local = [0.0; 36];
    for c in 0..mesh.n_cells() {
        let geom = CellGeom::new(mesh, c);
        local.fill(0.0);
        for i in 0..3 {
            for j in 0..3 {
                let k = geom.area
                    * (geom.grads[i][0] * geom.grads[j][0] + geom.grads[i][1] * geom.grads[j][1]);
                for a in 0..2 {
                    local[6 * (2 * i + a) + (2 * j + a)] = k;
                }
            }
        }
        pattern.scatter_add(mat.values_mut(), c, &local);
    }
    mat
}

/// Dual vector of a cellwise-constant 2x2 tensor field against P1 vector
/// gradients: out[(i,a)] = sum_T area_T * (T, D(l_i e_a))_F. The tensor
/// field is row-major, four entries per cell.
pub fn p0_dual_gradient(mesh: &TriMesh, tensor: &[f64]) -> Vec<f64> {
    assert_eq!(tensor.len(), 4 * mesh.n_cells());
    let mut out = vec![0.0; 2 * mesh.n_vertices()];
    for c in 0..mesh.n_cells() {
        let geom = CellGeom::new(mesh, c);
        let t = &tensor[4 * c..4 * c + 4];
        for (i, &v) in mesh.cell(c).iter().enumerate() {
            let g = geom.grads[i];
            for a in 0..2 {
                out[2 * v + a] += geom.area * (t[2 * a] * g[0] + t[2 * a + 1] * g[1]);
            }
        }
    }
    out
}

/// Squared L2 norm of a P1 vector field (exact).
pub fn p1_vector_l2_norm_sq(mesh: &TriMesh, u: &[f64]) -> f64 {
    assert_eq!(u.len(), 2 * mesh.n_vertices());
    let mut total = 0.0;
    for c in 0..mesh.n_cells() {
        let [v0, v1, v2] = mesh.cell(c);
        let area = mesh.cell_area(c);
        for a in 0..2 {
            let (w0, w1, w2) = (u[2 * v0 + a], u[2 * v1 + a], u[2 * v2 + a]);
            total +=
                area / 6.0 * (w0 * w0 + w1 * w1 + w2 * w2 + w0 * w1 + w1 * w2 + w2 * w0);
        }
    }
    total
}

/// Squared L2 norm of a cellwise-constant tensor field (row-major, four
/// entries per cell).
pub fn p0_tensor_l2_norm_sq(mesh: &TriMesh, tensor: &[f64]) -> f64 {
    assert_eq!(tensor.len(), 4 * mesh.n_cells());
    (0..mesh.n_cells())
        .map(|c| {
            let t = &tensor[4 * c..4 * c + 4];
            mesh.cell_area(c) * t.iter().map(|x| x * x).sum::<f64>()
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_rectangle_mesh, Rect, RectMarkers, TriMesh};

    fn two_cell_square() -> TriMesh {
        TriMesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            vec![[0, 1, 2], [0, 2, 3]],
            vec![
                (0, 1, crate::Marker::Wall),
                (1, 2, crate::Marker::Wall),
                (2, 3, crate::Marker::Wall),
                (3, 0, crate::Marker::Wall),
            ],
        )
        .unwrap()
    }

    #[test]
    fn mass_entries_sum_to_area() {
        let mesh = two_cell_square();
        let m = p1_mass(&mesh);
        let total: f64 = m.values().iter().sum();
        assert!((total - 1.0).abs() < 1e-13);
        assert!(m.asymmetry() < 1e-15);
    }

    #[test]
    fn stiffness_rows_sum_to_zero() {
        let mesh = generate_rectangle_mesh(Rect::new(0.0, 1.0, 0.0, 1.0), 3, 3, RectMarkers::AllWall)
            .unwrap();
        let k = p1_stiffness(&mesh);
        let ones = vec![1.0; k.nrows()];
        for r in k.matvec(&ones) {
            assert!(r.abs() < 1e-13);
        }
        assert!(k.asymmetry() < 1e-13);
    }

    #[test]
    fn stiffness_matches_cotangent_formula() {
        let mesh = two_cell_square();
        let k = p1_stiffness(&mesh);
        // off-diagonal entry for edge (i,j): -(cot a + cot b)/2 over the
        // angles opposite the edge in its adjacent cells
        let cot_weight = |i: usize, j: usize| {
            let mut w = 0.0;
            for cell in mesh.cells() {
                if cell.contains(&i) && cell.contains(&j) {
                    let &opp = cell.iter().find(|&&v| v != i && v != j).unwrap();
                    let p = mesh.vertex(opp);
                    let a = mesh.vertex(i);
                    let b = mesh.vertex(j);
                    let ea = [a[0] - p[0], a[1] - p[1]];
                    let eb = [b[0] - p[0], b[1] - p[1]];
                    let cross = ea[0] * eb[1] - ea[1] * eb[0];
                    let dot = ea[0] * eb[0] + ea[1] * eb[1];
                    w += 0.5 * dot / cross.abs();
                }
            }
            -w
        };
        for (i, j) in [(0, 1), (0, 2), (0, 3), (1, 2), (2, 3)] {
            assert!(
                (k.get(i, j) - cot_weight(i, j)).abs() < 1e-13,
                "edge ({i},{j}): {} vs {}",
                k.get(i, j),
                cot_weight(i, j)
            );
        }
    }

    #[test]
    fn vector_stiffness_applied_to_identity_map() {
        // frozen by hand: u(x) = x on the 2-cell square gives
        // (K u)[v] = sum_cells area * grad(l_v)
        let mesh = two_cell_square();
        let k = p1_vector_stiffness(&mesh);
        assert!(k.asymmetry() < 1e-13);
        let mut u = vec![0.0; 8];
        for v in 0..4 {
            u[2 * v] = mesh.vertex(v)[0];
            u[2 * v + 1] = mesh.vertex(v)[1];
        }
        let ku = k.matvec(&u);
        let expect = [-0.5, -0.5, 0.5, -0.5, 0.5, 0.5, -0.5, 0.5];
        for (a, b) in ku.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-13, "{ku:?}");
        }
        // constants are in the kernel
        let ones = vec![1.0; 8];
        for r in k.matvec(&ones) {
            assert!(r.abs() < 1e-13);
        }
    }

    #[test]
    fn p0_dual_of_identity_tensor_matches_stiffness_action() {
        let mesh = generate_rectangle_mesh(Rect::new(0.0, 2.0, 0.0, 1.0), 3, 2, RectMarkers::AllWall)
            .unwrap();
        let mut tensor = vec![0.0; 4 * mesh.n_cells()];
        for c in 0..mesh.n_cells() {
            tensor[4 * c] = 1.0;
            tensor[4 * c + 3] = 1.0;
        }
        // (identity, D(phi))_F = (Dx, D(phi))_F, so the dual equals K
        // applied to the coordinate field
        let m = p0_dual_gradient(&mesh, &tensor);
        let k = p1_vector_stiffness(&mesh);
        let mut x = vec![0.0; 2 * mesh.n_vertices()];
        for v in 0..mesh.n_vertices() {
            x[2 * v] = mesh.vertex(v)[0];
            x[2 * v + 1] = mesh.vertex(v)[1];
        }
        let kx = k.matvec(&x);
        for (a, b) in m.iter().zip(&kx) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn l2_norms_of_simple_fields() {
        let mesh = two_cell_square();
        let mut u = vec![0.0; 8];
        for v in 0..4 {
            u[2 * v] = 1.0;
            u[2 * v + 1] = 2.0;
        }
        assert!((p1_vector_l2_norm_sq(&mesh, &u) - 5.0).abs() < 1e-13);
        // u = (x, 0): integral of x^2 over the unit square is 1/3
        for v in 0..4 {
            u[2 * v] = mesh.vertex(v)[0];
            u[2 * v + 1] = 0.0;
        }
        assert!((p1_vector_l2_norm_sq(&mesh, &u) - 1.0 / 3.0).abs() < 1e-13);

        let t = vec![1.0, 2.0, 3.0, 4.0, 0.0, 0.0, 0.0, 1.0];
        // areas are 1/2 each: 0.5*30 + 0.5*1
        assert!((p0_tensor_l2_norm_sq(&mesh, &t) - 15.5).abs() < 1e-13);
    }

    #[test]
    fn p2_basis_is_nodal_and_partitions_unity() {
        let nodes = [
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
            [0.0, 0.5, 0.5],
            [0.5, 0.0, 0.5],
            [0.5, 0.5, 0.0],
        ];
        for (j, node) in nodes.iter().enumerate() {
            let vals = p2_values(*node);
            for (i, v) in vals.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((v - expect).abs() < 1e-14, "phi_{i} at node {j}: {v}");
            }
        }
        let geom = CellGeom::from_coords([[0.2, 0.1], [1.3, 0.4], [0.6, 1.5]]);
        let bary = [0.23, 0.41, 0.36];
        let vals = p2_values(bary);
        assert!((vals.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        let grads = p2_gradients(bary, &geom.grads);
        for b in 0..2 {
            let s: f64 = grads.iter().map(|g| g[b]).sum();
            assert!(s.abs() < 1e-13);
        }
    }

    #[test]
    fn p2_gradient_reproduces_quadratic() {
        // interpolate f(x,y) = x^2 + 3xy at the six nodes and check the
        // gradient at an interior point
        let geom = CellGeom::from_coords([[0.0, 0.0], [1.0, 0.2], [0.3, 1.1]]);
        let f = |p: [f64; 2]| p[0] * p[0] + 3.0 * p[0] * p[1];
        let df = |p: [f64; 2]| [2.0 * p[0] + 3.0 * p[1], 3.0 * p[0]];
        let node_bary = [
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
            [0.0, 0.5, 0.5],
            [0.5, 0.0, 0.5],
            [0.5, 0.5, 0.0],
        ];
        let coeffs: Vec<f64> = node_bary.iter().map(|&b| f(geom.point(b))).collect();
        let bary = [0.3, 0.45, 0.25];
        let grads = p2_gradients(bary, &geom.grads);
        let mut g = [0.0, 0.0];
        for i in 0..6 {
            g[0] += coeffs[i] * grads[i][0];
            g[1] += coeffs[i] * grads[i][1];
        }
        let exact = df(geom.point(bary));
        assert!((g[0] - exact[0]).abs() < 1e-12);
        assert!((g[1] - exact[1]).abs() < 1e-12);
    }

    #[test]
    fn p1_gradient_of_linear_field() {
        let geom = CellGeom::from_coords([[0.0, 0.0], [2.0, 0.0], [0.0, 1.0]]);
        // u = (x + 2y, 3x - y)
        let coords = geom.coords;
        let mut local = [0.0; 6];
        for i in 0..3 {
            local[2 * i] = coords[i][0] + 2.0 * coords[i][1];
            local[2 * i + 1] = 3.0 * coords[i][0] - coords[i][1];
        }
        let du = p1_vector_gradient(&geom, &local);
        assert!((du[0][0] - 1.0).abs() < 1e-14);
        assert!((du[0][1] - 2.0).abs() < 1e-14);
        assert!((du[1][0] - 3.0).abs() < 1e-14);
        assert!((du[1][1] + 1.0).abs() < 1e-14);
    }
}
