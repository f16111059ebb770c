//! Replay engine for 4D surgical scenes.
//!
//! A scene is a sequence of point-cloud frames (the surgeon), a set of rigid
//! meshes (room, table, anatomy) and an instrument trajectory. This crate
//! parses scene manifests, ingests and encodes point clouds, interpolates
//! instrument poses, renders frames with packed 32-bit depth/color splatting
//! over rasterized geometry, and drives playback with a two-slot prefetcher.

pub mod playback;
pub mod pointcloud;
pub mod pose;
pub mod render;
pub mod replay;
pub mod scene;
pub mod synthetic;

pub use pointcloud::{Aabb, PointCloudFrame, VoxelGridParams};
pub use pose::{PoseDelta, RigidPose, Trajectory};
pub use scene::{EntityKind, SceneManifest};
