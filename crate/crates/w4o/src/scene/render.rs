use nalgebra::Vector3;

use super::{RgbImage, SceneState, Shape};
use crate::geometry::{CameraModel, DepthMap, PixelMask, RigidTransform};

const TABLE_COLOR: [u8; 3] = [176, 176, 176];

/// One rendered camera frame: flat-shaded RGB, metric depth, and a per-pixel
/// object-id map (0 = background or table, i+1 = scene object i).
#[derive(Debug, Clone, PartialEq)]
pub struct RenderedView {
    pub image: RgbImage,
    pub depth: DepthMap,
    pub seg: Vec<u32>,
}

impl RenderedView {
    pub fn seg_at(&self, u: u32, v: u32) -> u32 {
        self.seg[(v * self.depth.width() + u) as usize]
    }

    /// Mask of pixels carrying the given segmentation label.
    pub fn seg_mask(&self, label: u32) -> PixelMask {
        PixelMask::from_fn(self.depth.width(), self.depth.height(), |u, v| {
            self.seg_at(u, v) == label
        })
    }

    /// Mask of pixels not covered by any object (label 0), regardless of
    /// whether they hit the table or empty space.
    pub fn background_mask(&self) -> PixelMask {
        self.seg_mask(0)
    }
}

/// Ray-casts the scene through a pinhole camera. Depth is the camera-frame
/// z of the nearest hit, which makes `back_project` an exact inverse of the
/// ray parameterization. Deterministic for identical inputs.
pub fn render(scene: &SceneState, cam: &CameraModel) -> RenderedView {
    let mut image = RgbImage::new(cam.width, cam.height);
    let mut depth = DepthMap::new(cam.width, cam.height);
    let mut seg = vec![0u32; (cam.width * cam.height) as usize];

    // Bodies with the camera origin pre-transformed into their local frames.
    struct Body {
        shape: Shape,
        origin_local: Vector3<f64>,
        inv_pose_rot: nalgebra::Matrix3<f64>,
        color: [u8; 3],
        label: u32,
    }
    let origin = cam.center();
    let make_body = |shape: Shape, pose: &RigidTransform, color: [u8; 3], label: u32| {
        let rot_t = pose.rotation().transpose();
        Body {
            shape,
            origin_local: rot_t * (origin - pose.translation()),
            inv_pose_rot: rot_t,
            color,
            label,
        }
    };

    let mut bodies: Vec<Body> = scene
        .objects
        .iter()
        .enumerate()
        .map(|(i, o)| make_body(o.shape.clone(), &o.pose, o.color, i as u32 + 1))
        .collect();
    if let Some(table) = &scene.table {
        let (shape, pose) = table.as_body();
        bodies.push(make_body(shape, &pose, TABLE_COLOR, 0));
    }

    for v in 0..cam.height {
        for u in 0..cam.width {
            // Camera-frame direction with z = 1, so the hit parameter t is
            // exactly the camera-frame depth.
            let dir_cam = Vector3::new(
                (u as f64 - cam.cx) / cam.fx,
                (v as f64 - cam.cy) / cam.fy,
                1.0,
            );
            let dir_world = cam.pose.apply_vector(&dir_cam);

            let mut nearest: Option<(f64, usize)> = None;
            for (i, body) in bodies.iter().enumerate() {
                let d_local = body.inv_pose_rot * dir_world;
                if let Some(t) = body.shape.ray_local(&body.origin_local, &d_local) {
                    if nearest.is_none_or(|(best, _)| t < best) {
                        nearest = Some((t, i));
                    }
                }
            }
            if let Some((t, i)) = nearest {
                depth.set(u, v, t);
                image.set(u, v, bodies[i].color);
                seg[(v * cam.width + u) as usize] = bodies[i].label;
            }
        }
    }

    RenderedView { image, depth, seg }
}
