//! Planar geometry for the SPDE approach: projection, triangulation,
//! finite-element assembly, and observation projectors.

mod delaunay;
mod fem;
pub mod hull;
mod mesh;
mod point;
mod projector;

pub use fem::{fem_matrices, FemMatrices};
pub use mesh::{build_mesh, build_mesh_with, Mesh, MeshSettings};
pub use point::{project_lonlat, Point, KM_PER_DEGREE};
pub use projector::{projector, Projector};
