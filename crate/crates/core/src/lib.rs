pub mod error;
pub mod folding;
pub mod fusion;
pub mod geometry;
pub mod io;
pub mod metrics;
pub mod segmentation;
pub mod templates;

pub use error::{Error, Result};
pub use geometry::{CameraModel, ComponentId, NearestNeighborIndex, Point3, PointCloud, RigidTransform, Vector3};
