use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::{GeometryError, RigidTransform, ROTATION_TOL};

/// Pinhole camera intrinsics plus the camera-to-world pose.
///
/// +z points forward, +x right, +y down; pixel `u` runs along the width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
    /// Maps camera-frame coordinates into the world frame.
    pub pose: RigidTransform,
}

impl CameraModel {
    pub fn new(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        width: u32,
        height: u32,
        pose: RigidTransform,
    ) -> Result<Self, GeometryError> {
        if !(fx > 0.0 && fy > 0.0) {
            return Err(GeometryError::InvalidCamera(format!(
                "focal lengths must be positive (fx={fx}, fy={fy})"
            )));
        }
        if !(0.0..width as f64).contains(&cx) || !(0.0..height as f64).contains(&cy) {
            return Err(GeometryError::InvalidCamera(format!(
                "principal point ({cx}, {cy}) outside {width}x{height} image"
            )));
        }
        let r = pose.rotation();
        let ortho = (r.transpose() * r - nalgebra::Matrix3::identity()).abs().max();
        if ortho > ROTATION_TOL || (r.determinant() - 1.0).abs() > ROTATION_TOL {
            return Err(GeometryError::InvalidCamera("pose rotation invalid".into()));
        }
        Ok(Self {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
            pose,
        })
    }

    /// Projects a camera-frame point to pixel coordinates and depth.
    pub fn project(&self, point_cam: &Vector3<f64>) -> Result<(f64, f64, f64), GeometryError> {
        if point_cam.z <= 0.0 {
            return Err(GeometryError::NonPositiveDepth(point_cam.z));
        }
        let u = self.fx * point_cam.x / point_cam.z + self.cx;
        let v = self.fy * point_cam.y / point_cam.z + self.cy;
        Ok((u, v, point_cam.z))
    }

    /// Camera-frame point for pixel (u, v) at depth `d`.
    pub fn unproject(&self, u: f64, v: f64, d: f64) -> Vector3<f64> {
        Vector3::new((u - self.cx) * d / self.fx, (v - self.cy) * d / self.fy, d)
    }

    /// World-frame position of the camera center.
    pub fn center(&self) -> Vector3<f64> {
        *self.pose.translation()
    }

    /// World-frame direction of the ray through pixel (u, v).
    pub fn ray_direction(&self, u: f64, v: f64) -> Vector3<f64> {
        let dir_cam = Vector3::new((u - self.cx) / self.fx, (v - self.cy) / self.fy, 1.0);
        self.pose.apply_vector(&dir_cam)
    }

    /// Transforms a world point into the camera frame.
    pub fn world_to_camera(&self, point_world: &Vector3<f64>) -> Vector3<f64> {
        self.pose.inverse().apply(point_world)
    }
}
