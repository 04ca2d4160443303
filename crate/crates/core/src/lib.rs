//! Open-world object detection and grasp planning on tabletop point clouds.
//!
//! Per-point class scores are reduced to a foreground mask, foreground
//! points are clustered geometrically into proposals, each proposal gets a
//! confidence from its size, feature score and height, and the most
//! confident proposal is turned into a top-down grasp.

pub mod cloud;
pub mod cluster;
pub mod config;
pub mod error;
pub mod eval;
pub mod grasp;
pub mod index;
pub mod io;
pub mod pipeline;
pub mod score;
pub mod segment;
pub mod sim;
pub mod voxel;

pub use cloud::{Point3, PointCloud};
pub use error::{Error, Result};
