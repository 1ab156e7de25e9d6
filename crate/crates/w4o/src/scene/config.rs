use std::fs;
use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::subtask::MotionParams;
use super::{SceneError, SceneObject, SceneState, Shape, Table};
use crate::geometry::{CameraModel, RigidTransform};

/// On-disk scene description. Shapes are stored as a name plus a dims
/// array ("box" [sx,sy,sz], "sphere" [r], "cylinder" [r,h]).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    pub table: Option<Table>,
    pub objects: Vec<ObjectConfig>,
    pub camera: CameraModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub motion: Option<MotionParams>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectConfig {
    pub id: String,
    pub shape: String,
    pub dims: Vec<f64>,
    pub pose: RigidTransform,
    pub color: [u8; 3],
}

impl SceneConfig {
    pub fn from_scene(scene: &SceneState, camera: &CameraModel) -> Self {
        let objects = scene
            .objects
            .iter()
            .map(|o| {
                let (shape, dims) = shape_to_parts(&o.shape);
                ObjectConfig {
                    id: o.id.clone(),
                    shape,
                    dims,
                    pose: o.pose,
                    color: o.color,
                }
            })
            .collect();
        Self {
            table: scene.table,
            objects,
            camera: *camera,
            motion: None,
        }
    }

    pub fn to_scene(&self) -> Result<(SceneState, CameraModel), SceneError> {
        let objects = self
            .objects
            .iter()
            .map(|o| {
                Ok(SceneObject {
                    id: o.id.clone(),
                    shape: shape_from_parts(&o.shape, &o.dims)?,
                    pose: o.pose,
                    color: o.color,
                })
            })
            .collect::<Result<Vec<_>, SceneError>>()?;
        let scene = SceneState::new(objects, self.table)?;
        // The derive skips constructor checks, so re-validate intrinsics.
        let c = &self.camera;
        let camera = CameraModel::new(c.fx, c.fy, c.cx, c.cy, c.width, c.height, c.pose)?;
        Ok((scene, camera))
    }
}

fn shape_to_parts(shape: &Shape) -> (String, Vec<f64>) {
    match shape {
        Shape::Box { size } => ("box".into(), vec![size.x, size.y, size.z]),
        Shape::Sphere { radius } => ("sphere".into(), vec![*radius]),
        Shape::Cylinder { radius, height } => ("cylinder".into(), vec![*radius, *height]),
    }
}

fn shape_from_parts(shape: &str, dims: &[f64]) -> Result<Shape, SceneError> {
    let built = match (shape, dims) {
        ("box", [sx, sy, sz]) => Shape::Box {
            size: Vector3::new(*sx, *sy, *sz),
        },
        ("sphere", [r]) => Shape::Sphere { radius: *r },
        ("cylinder", [r, h]) => Shape::Cylinder {
            radius: *r,
            height: *h,
        },
        ("box" | "sphere" | "cylinder", _) => {
            return Err(SceneError::Config(format!(
                "shape '{shape}' takes a different number of dims, got {}",
                dims.len()
            )))
        }
        _ => return Err(SceneError::Config(format!("unknown shape '{shape}'"))),
    };
    built.validate().map_err(SceneError::Config)?;
    Ok(built)
}

pub fn load_scene_config(path: impl AsRef<Path>) -> Result<SceneConfig, SceneError> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn save_scene_config(path: impl AsRef<Path>, config: &SceneConfig) -> Result<(), SceneError> {
    let mut text = serde_json::to_string_pretty(config)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}
