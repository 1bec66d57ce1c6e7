//! Curvature smoothing of point clouds and smoothing-based saliency maps.
//!
//! The pipeline has three layers:
//!
//! * [`smoother`] morphs a cloud toward a constant-curvature shape and
//!   records a [`smoother::SmoothSequence`] of increasingly smoothed levels
//!   with 1-1 point correspondence.
//! * [`saliency`] uses that sequence as a differentiable masking operator and
//!   optimizes a per-point mask against a [`classifier::Classifier`].
//! * [`eval`] scores masks with deletion/insertion curves; [`metrics`]
//!   scores the smoothing itself.

pub mod classifier;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod io;
pub mod metrics;
pub mod saliency;
pub mod smoother;

pub use error::{Error, Result};
pub use geometry::{PointCloud, Vec3};
