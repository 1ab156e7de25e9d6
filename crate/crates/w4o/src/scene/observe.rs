use std::collections::BTreeMap;

use super::{render, RgbImage, SceneError, SceneState};
use crate::geometry::{back_project_labeled, CameraModel, DepthMap, PixelMask, PointCloud};

/// One camera view of the scene: RGB, metric depth, the back-projected
/// labeled cloud, per-pixel segmentation, and the id to label table.
#[derive(Debug, Clone)]
pub struct Observation {
    pub image: RgbImage,
    pub depth: DepthMap,
    pub cloud: PointCloud,
    pub seg: Vec<u32>,
    pub camera: CameraModel,
    pub labels: BTreeMap<String, u32>,
}

impl Observation {
    /// Label of an object id, if the id exists in this view's table.
    pub fn label_of(&self, object_id: &str) -> Option<u32> {
        self.labels.get(object_id).copied()
    }

    /// Binary mask of one label's pixels.
    pub fn object_mask(&self, label: u32) -> PixelMask {
        let w = self.camera.width;
        PixelMask::from_fn(w, self.camera.height, |u, v| {
            self.seg[(v * w + u) as usize] == label
        })
    }

    /// Pixels not covered by any object (table or empty space).
    pub fn background_mask(&self) -> PixelMask {
        self.object_mask(0)
    }
}

/// Renders the scene and assembles the full observation. The cloud holds
/// every valid-depth pixel, labeled by the segmentation map.
pub fn observe(scene: &SceneState, camera: &CameraModel) -> Result<Observation, SceneError> {
    let view = render(scene, camera);
    let all = PixelMask::filled(camera.width, camera.height);
    let cloud = back_project_labeled(&view.depth, camera, Some(&all), &view.seg)?;
    let labels = scene
        .objects
        .iter()
        .enumerate()
        .map(|(i, o)| (o.id.clone(), i as u32 + 1))
        .collect();
    Ok(Observation {
        image: view.image,
        depth: view.depth,
        cloud,
        seg: view.seg,
        camera: *camera,
        labels,
    })
}
