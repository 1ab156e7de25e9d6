//! Synthetic tabletop world: primitive rigid objects on a table, ray-cast
//! RGB-D and segmentation rendering, collision queries, seeded layout
//! sampling, and analytic "future scene" computation for subtask strings.
//!
//! Scenes are immutable values; every operation returns a new scene.

mod collision;
mod config;
mod image;
mod layout;
mod observe;
mod registry;
mod render;
mod shape;
mod subtask;

pub use collision::{check_collision, check_collision_with_tol, clearance, gjk_distance, Collider};
pub use config::{load_scene_config, save_scene_config, SceneConfig};
pub use image::RgbImage;
pub use layout::{default_camera, sample_layout, template_names};
pub use observe::{observe, Observation};
pub use registry::SceneRegistry;
pub use render::{render, RenderedView};
pub use shape::Shape;
pub use subtask::{
    oracle_future_scene, oracle_future_scene_with, parse_subtask, MotionParams, SubtaskMotion,
};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{GeometryError, RigidTransform};

/// Interpenetration allowance for collision checks and layout sampling.
pub const DEFAULT_COLLISION_TOL: f64 = 0.001;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("unknown scene template '{0}'")]
    UnknownTemplate(String),
    #[error("could not place objects after {attempts} attempts in template '{template}'")]
    PlacementFailure { template: String, attempts: u32 },
    #[error("unknown object '{0}'")]
    UnknownObject(String),
    #[error("cannot parse subtask '{0}'")]
    UnparsableSubtask(String),
    #[error("invalid scene: {0}")]
    InvalidScene(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("scene config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Rectangular table slab. `height` is the z coordinate of the top surface;
/// the slab extends [`Table::THICKNESS`] below it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Table {
    /// Full horizontal extents (x, y) in meters, centered on the origin.
    pub size: [f64; 2],
    pub height: f64,
}

impl Table {
    pub const THICKNESS: f64 = 0.05;

    /// The slab as a box shape with its pose, for rendering and collision.
    pub fn as_body(&self) -> (Shape, RigidTransform) {
        let shape = Shape::Box {
            size: Vector3::new(self.size[0], self.size[1], Self::THICKNESS),
        };
        let pose = RigidTransform::from_translation(Vector3::new(
            0.0,
            0.0,
            self.height - Self::THICKNESS / 2.0,
        ));
        (shape, pose)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    pub id: String,
    pub shape: Shape,
    pub pose: RigidTransform,
    pub color: [u8; 3],
}

impl SceneObject {
    /// World z of the object's lowest surface point.
    pub fn bottom_z(&self) -> f64 {
        let down_local = self.pose.rotation().transpose() * Vector3::new(0.0, 0.0, -1.0);
        self.pose.apply(&self.shape.support_local(&down_local)).z
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneState {
    pub objects: Vec<SceneObject>,
    pub table: Option<Table>,
    /// Unit vector pointing up (against gravity).
    pub gravity_axis: Vector3<f64>,
}

impl SceneState {
    pub fn new(objects: Vec<SceneObject>, table: Option<Table>) -> Result<Self, SceneError> {
        let scene = Self {
            objects,
            table,
            gravity_axis: Vector3::z(),
        };
        scene.validate()?;
        Ok(scene)
    }

    fn validate(&self) -> Result<(), SceneError> {
        for (i, a) in self.objects.iter().enumerate() {
            a.shape.validate().map_err(SceneError::InvalidScene)?;
            if self.objects[i + 1..].iter().any(|b| b.id == a.id) {
                return Err(SceneError::InvalidScene(format!(
                    "duplicate object id '{}'",
                    a.id
                )));
            }
        }
        if (self.gravity_axis.norm() - 1.0).abs() > 1e-9 {
            return Err(SceneError::InvalidScene("gravity axis not unit".into()));
        }
        Ok(())
    }

    pub fn object(&self, id: &str) -> Result<&SceneObject, SceneError> {
        self.objects
            .iter()
            .find(|o| o.id == id)
            .ok_or_else(|| SceneError::UnknownObject(id.to_string()))
    }

    pub fn object_index(&self, id: &str) -> Result<usize, SceneError> {
        self.objects
            .iter()
            .position(|o| o.id == id)
            .ok_or_else(|| SceneError::UnknownObject(id.to_string()))
    }

    /// Segmentation label of an object: its index + 1 (0 is background).
    pub fn seg_label(&self, id: &str) -> Result<u32, SceneError> {
        Ok(self.object_index(id)? as u32 + 1)
    }

    /// New scene with one object's pose left-multiplied by `motion`.
    pub fn apply_object_motion(
        &self,
        object_id: &str,
        motion: &RigidTransform,
    ) -> Result<SceneState, SceneError> {
        let idx = self.object_index(object_id)?;
        let mut next = self.clone();
        next.objects[idx].pose = motion.compose(&next.objects[idx].pose);
        Ok(next)
    }

    /// New scene with one object's pose replaced.
    pub fn with_object_pose(
        &self,
        object_id: &str,
        pose: RigidTransform,
    ) -> Result<SceneState, SceneError> {
        let idx = self.object_index(object_id)?;
        let mut next = self.clone();
        next.objects[idx].pose = pose;
        Ok(next)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn sphere_scene() -> SceneState {
        SceneState::new(
            vec![SceneObject {
                id: "ball".into(),
                shape: Shape::Sphere { radius: 0.05 },
                pose: RigidTransform::from_translation(Vector3::new(0.1, 0.2, 0.05)),
                color: [200, 30, 30],
            }],
            Some(Table {
                size: [0.9, 0.9],
                height: 0.0,
            }),
        )
        .unwrap()
    }

    #[test]
    fn identity_motion_leaves_scene_unchanged() {
        let scene = sphere_scene();
        let moved = scene
            .apply_object_motion("ball", &RigidTransform::identity())
            .unwrap();
        assert_eq!(scene, moved);
    }

    #[test]
    fn translation_motion_shifts_pose() {
        let scene = sphere_scene();
        let motion = RigidTransform::from_translation(Vector3::new(0.0, 0.0, 0.1));
        let moved = scene.apply_object_motion("ball", &motion).unwrap();
        assert_abs_diff_eq!(moved.objects[0].pose.translation().z, 0.15, epsilon = 1e-15);
    }

    #[test]
    fn motion_then_inverse_round_trips() {
        let scene = sphere_scene();
        let motion = RigidTransform::from_axis_angle(
            Vector3::new(0.3, -1.0, 0.2),
            0.8,
            Vector3::new(0.05, -0.02, 0.1),
        );
        let back = scene
            .apply_object_motion("ball", &motion)
            .unwrap()
            .apply_object_motion("ball", &motion.inverse())
            .unwrap();
        let (t_err, r_err) = back.objects[0].pose.pose_error(&scene.objects[0].pose);
        assert!(t_err < 1e-12 && r_err < 1e-10);
    }

    #[test]
    fn unknown_object_is_rejected() {
        let scene = sphere_scene();
        assert!(matches!(
            scene.apply_object_motion("ghost", &RigidTransform::identity()),
            Err(SceneError::UnknownObject(_))
        ));
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let mut scene = sphere_scene();
        let dup = scene.objects[0].clone();
        scene.objects.push(dup);
        assert!(SceneState::new(scene.objects, scene.table).is_err());
    }

    #[test]
    fn bottom_z_accounts_for_rotation() {
        let obj = SceneObject {
            id: "slab".into(),
            shape: Shape::Box {
                size: Vector3::new(0.2, 0.1, 0.02),
            },
            pose: RigidTransform::from_axis_angle(
                Vector3::y(),
                std::f64::consts::FRAC_PI_2,
                Vector3::new(0.0, 0.0, 0.5),
            ),
            color: [0, 0, 0],
        };
        // After a 90° pitch the 0.2 m extent is vertical.
        assert_abs_diff_eq!(obj.bottom_z(), 0.4, epsilon = 1e-12);
    }
}
