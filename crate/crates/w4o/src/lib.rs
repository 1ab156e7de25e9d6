//! Hierarchical subgoal-image manipulation pipeline.
//!
//! The crate wires together five layers:
//!
//! - [`geometry`]: pinhole cameras, depth maps, point clouds, SE(3)
//!   transforms and Umeyama rigid alignment.
//! - [`scene`]: a deterministic synthetic tabletop simulator (primitive
//!   objects, ray-cast RGB-D + segmentation rendering, collision checks,
//!   ground-truth future scenes).
//! - [`agents`]: the task planner, the reflective subgoal-image loop
//!   (dreamer + critic) and the lifting of accepted subgoal images into
//!   calibrated depth maps and point clouds.
//! - [`gateway`]: a uniform HTTP wire protocol for the five model slots,
//!   with a scripted local mock server for integration tests.
//! - [`policy`]: the low-level policy: correspondence matching, goal
//!   transform estimation, grasp proposal/filtering and collision-aware
//!   trajectory planning.
//!
//! [`orchestrator`] composes the layers into reproducible episodes and
//! benchmark sweeps. The `w4o` binary is a thin front end over it; the
//! `examples/` directory shows each capability in isolation.

pub mod agents;
pub mod gateway;
pub mod orchestrator;
pub mod geometry;
pub mod policy;
pub mod scene;

pub use geometry::{CameraModel, DepthMap, PixelMask, PointCloud, RigidTransform};
pub use scene::{SceneObject, SceneState};
