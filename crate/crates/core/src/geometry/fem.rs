//! Finite-element matrices for piecewise-linear basis functions: lumped
//! mass and stiffness, the two ingredients of the SPDE precision.

use super::mesh::Mesh;
use super::point::Point;
use crate::sparse::SparseMatrix;

/// Lumped mass matrix `C` (diagonal, km²) and stiffness matrix `G`
/// (dimensionless) on a mesh.
#[derive(Debug, Clone)]
pub struct FemMatrices {
    pub c: SparseMatrix,
    pub g: SparseMatrix,
}

impl FemMatrices {
    /// Diagonal of the lumped mass matrix.
    pub fn mass_diagonal(&self) -> Vec<f64> {
        (0..self.c.nrows()).map(|i| self.c.get(i, i)).collect()
    }
}

/// Assemble mass and stiffness.
///
/// Per triangle with area `A` and vertices `p_0, p_1, p_2`, the edge vector
/// opposite vertex `a` is `e_a = p_{a+2} − p_{a+1}`; then
/// `G_local[a][b] = (e_a · e_b) / (4A)` and each vertex receives `A/3` of
/// lumped mass. Row sums of `G` vanish because `e_0 + e_1 + e_2 = 0`.
pub fn fem_matrices(mesh: &Mesh) -> FemMatrices {
    let n = mesh.n_vertices();
    let mut mass = vec![0.0f64; n];
    let mut triplets: Vec<(usize, usize, f64)> = Vec::with_capacity(9 * mesh.n_triangles());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let area = mesh.triangle_area(t);
        let p: [Point; 3] = [
            mesh.vertices()[tri[0]],
            mesh.vertices()[tri[1]],
            mesh.vertices()[tri[2]],
        ];
        let e: [(f64, f64); 3] = [
            (p[2].x - p[1].x, p[2].y - p[1].y),
            (p[0].x - p[2].x, p[0].y - p[2].y),
            (p[1].x - p[0].x, p[1].y - p[0].y),
        ];
        let scale = 1.0 / (4.0 * area);
        for a in 0..3 {
            mass[tri[a]] += area / 3.0;
            for b in 0..3 {
                let dot = e[a].0 * e[b].0 + e[a].1 * e[b].1;
                triplets.push((tri[a], tri[b], dot * scale));
            }
        }
    }
    let g = SparseMatrix::from_triplets(n, n, &triplets);
    FemMatrices {
        c: SparseMatrix::diagonal(&mass),
        g: g.symmetrize_from_upper(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::mesh::Mesh;
    use crate::geometry::point::Point;

    fn reference_triangle() -> Mesh {
        Mesh::from_parts(
            vec![
                Point::new(0.0, 0.0),
                Point::new(1.0, 0.0),
                Point::new(0.0, 1.0),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap()
    }

    #[test]
    fn reference_triangle_matrices() {
        let fem = fem_matrices(&reference_triangle());
        for i in 0..3 {
            assert!((fem.c.get(i, i) - 1.0 / 6.0).abs() < 1e-15);
        }
        let expect = [
            [1.0, -0.5, -0.5],
            [-0.5, 0.5, 0.0],
            [-0.5, 0.0, 0.5],
        ];
        for i in 0..3 {
            for j in 0..3 {
                assert!(
                    (fem.g.get(i, j) - expect[i][j]).abs() < 1e-15,
                    "G[{i}][{j}] = {}",
                    fem.g.get(i, j)
                );
            }
        }
    }

    #[test]
    fn mass_sums_to_total_area() {
        let mesh = Mesh::structured(7, 5, 3.0, 2.0).unwrap();
        let fem = fem_matrices(&mesh);
        let total: f64 = fem.mass_diagonal().iter().sum();
        assert!((total - mesh.total_area()).abs() <= 1e-10 * mesh.total_area());
        assert!(fem.mass_diagonal().iter().all(|&m| m > 0.0));
    }

    #[test]
    fn stiffness_rows_sum_to_zero() {
        let mesh = Mesh::structured(6, 6, 2.0, 2.0).unwrap();
        let fem = fem_matrices(&mesh);
        let ones = vec![1.0; mesh.n_vertices()];
        for (i, row_sum) in fem.g.mul_vec(&ones).iter().enumerate() {
            assert!(row_sum.abs() <= 1e-10, "row {i} sums to {row_sum}");
        }
        assert!(fem.g.is_symmetric());
    }

    #[test]
    fn stiffness_positive_semidefinite() {
        let mesh = Mesh::structured(5, 5, 1.0, 1.0).unwrap();
        let fem = fem_matrices(&mesh);
        // Gram-type local matrices keep x' G x ≥ 0 for arbitrary x.
        let mut state = 99u64;
        for _ in 0..20 {
            let x: Vec<f64> = (0..mesh.n_vertices())
                .map(|_| {
                    state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
                    ((state >> 33) as f64 / (1u64 << 31) as f64) - 1.0
                })
                .collect();
            assert!(fem.g.quad_form(&x) >= -1e-12);
        }
    }

    #[test]
    fn permutation_equivariance() {
        let mesh = Mesh::structured(4, 3, 1.5, 1.0).unwrap();
        let fem = fem_matrices(&mesh);
        // Relabel vertices with a fixed shuffle and rebuild.
        let n = mesh.n_vertices();
        let perm: Vec<usize> = (0..n).map(|i| (i * 5 + 3) % n).collect(); // bijection since gcd(5, 12) = 1
        let vertices: Vec<Point> = {
            let mut v = vec![Point::new(0.0, 0.0); n];
            for i in 0..n {
                v[perm[i]] = mesh.vertices()[i];
            }
            v
        };
        let triangles: Vec<[usize; 3]> = mesh
            .triangles()
            .iter()
            .map(|t| [perm[t[0]], perm[t[1]], perm[t[2]]])
            .collect();
        let mesh2 = Mesh::from_parts(vertices, triangles).unwrap();
        let fem2 = fem_matrices(&mesh2);
        for i in 0..n {
            assert!((fem.c.get(i, i) - fem2.c.get(perm[i], perm[i])).abs() < 1e-15);
            for j in 0..n {
                assert!((fem.g.get(i, j) - fem2.g.get(perm[i], perm[j])).abs() < 1e-15);
            }
        }
    }
}
