//! Point-cloud container, neighborhoods and local fits.

mod cloud;
pub mod eigen;
mod fit;
mod knn;
mod vec3;

pub use cloud::{Normalization, PointCloud};
pub use fit::{
    build_frame, curvature_normal, fit_line2d, fit_plane, project_to_plane, FittedLine2D,
    FittedPlane, LocalFrame,
};
pub use knn::{knn, KdTree, NeighborGraph};
pub use vec3::Vec3;
