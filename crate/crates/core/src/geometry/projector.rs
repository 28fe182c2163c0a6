//! Barycentric observation projector: the sparse matrix `A` mapping mesh
//! vertex values to values at observation locations.

use super::mesh::Mesh;
use super::point::{cross, Point};
use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

/// Weights below this (relative to 1) are snapped to zero so that points on
/// edges and vertices produce exact rows.
const SNAP: f64 = 1e-13;

/// Sparse interpolation matrix, one row per observation location.
#[derive(Debug, Clone)]
pub struct Projector {
    a: SparseMatrix,
}

impl Projector {
    pub fn matrix(&self) -> &SparseMatrix {
        &self.a
    }

    pub fn n_observations(&self) -> usize {
        self.a.nrows()
    }

    /// Evaluate a vertex field at the observation locations.
    pub fn interpolate(&self, field: &[f64]) -> Vec<f64> {
        self.a.mul_vec(field)
    }
}

/// Build the projector for a list of locations.
///
/// Each location is assigned to the lowest-index triangle containing it
/// (deterministic on shared edges and vertices) and its row holds the
/// barycentric coordinates there. Locations outside the mesh coverage are
/// an error naming the offending index.
pub fn projector(mesh: &Mesh, locations: &[Point]) -> Result<Projector> {
    let n = mesh.n_vertices();
    let mut triplets = Vec::with_capacity(3 * locations.len());
    for (row, &p) in locations.iter().enumerate() {
        if !p.x.is_finite() || !p.y.is_finite() {
            return Err(Error::InvalidCoordinate(format!(
                "location {row} has non-finite coordinates"
            )));
        }
        let (tri, weights) = locate(mesh, p).ok_or(Error::OutOfDomain {
            index: row,
            x: p.x,
            y: p.y,
        })?;
        for (k, &w) in weights.iter().enumerate() {
            if w != 0.0 {
                triplets.push((row, mesh.triangles()[tri][k], w));
            }
        }
    }
    Ok(Projector {
        a: SparseMatrix::from_triplets(locations.len(), n, &triplets),
    })
}

/// Lowest-index triangle containing `p` and the snapped, renormalized
/// barycentric weights there.
fn locate(mesh: &Mesh, p: Point) -> Option<(usize, [f64; 3])> {
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let a = mesh.vertices()[tri[0]];
        let b = mesh.vertices()[tri[1]];
        let c = mesh.vertices()[tri[2]];
        let det = cross(a, b, c); // 2·area > 0
        let wa = cross(p, b, c);
        let wb = cross(a, p, c);
        let wc = cross(a, b, p);
        let slack = SNAP * det;
        if wa >= -slack && wb >= -slack && wc >= -slack {
            let mut w = [wa / det, wb / det, wc / det];
            for v in w.iter_mut() {
                if v.abs() < SNAP {
                    *v = 0.0;
                }
            }
            let sum: f64 = w.iter().sum();
            for v in w.iter_mut() {
                *v /= sum;
            }
            return Some((t, w));
        }
    }
    None
}
