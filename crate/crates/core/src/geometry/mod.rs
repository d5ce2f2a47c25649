//! Mesh ingestion, convex hulls, oriented bounding boxes, convex
//! decomposition, and mass properties.

pub mod decompose;
pub mod hull;
pub mod io;
pub mod massprops;
pub mod mesh;
pub mod obb;

pub use decompose::{convex_decompose, coverage_fraction, decomposition_metrics, ConvexPieceSet};
pub use hull::{convex_hull, convex_hull_points};
pub use io::{load_mesh, save_obj};
pub use massprops::{box_mass_props, capsule_mass_props, mass_properties, MassProps};
pub use mesh::{cuboid, uv_sphere, Aabb, TriMesh};
pub use obb::{minimum_obb, obb_transform, ObbTransform, OrientedBox};
