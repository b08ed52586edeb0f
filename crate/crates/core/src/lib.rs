//! Principal manifolds: a two-dimensional grid of cubic smoothing splines
//! fitted through sliced sub-clusters of a point cloud, with signed-arc-length
//! embedding, inversion, an adjacency-distance quality metric, and an Isomap
//! baseline.

pub mod cli;
pub mod datasets;
pub mod error;
pub mod geometry;
pub mod io;
pub mod isomap;
pub mod manifold;
pub mod metrics;
pub mod slicing;
pub mod spline;
pub mod sweep;

pub use error::{Error, Result};
pub use geometry::{PointCloud, ReferenceFrame};
pub use manifold::{build_manifold, BuildConfig, FrameSpec, ManifoldConfig, PrincipalManifold};
pub use slicing::SliceConfig;
pub use spline::{fit_smoothing_spline, SmoothingSpline};
