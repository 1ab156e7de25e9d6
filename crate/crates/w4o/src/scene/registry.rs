use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use super::{RgbImage, SceneState};

/// Shared map from rendered images to the scenes behind them, keyed by raw
/// pixel bytes. Oracle components use it to recover ground truth for any
/// image the simulator produced; cloning shares the same map.
#[derive(Debug, Clone, Default)]
pub struct SceneRegistry {
    inner: Arc<Mutex<HashMap<Vec<u8>, SceneState>>>,
}

impl SceneRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&self, image: &RgbImage, scene: &SceneState) {
        self.inner
            .lock()
            .unwrap()
            .insert(image.raw_bytes().to_vec(), scene.clone());
    }

    pub fn lookup(&self, image: &RgbImage) -> Option<SceneState> {
        self.inner.lock().unwrap().get(&image.raw_bytes()).cloned()
    }

    pub fn len(&self) -> usize {
        self.inner.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{default_camera, render, sample_layout};

    #[test]
    fn clones_share_recordings() {
        let registry = SceneRegistry::new();
        let twin = registry.clone();

        let scene = sample_layout("pick-place", 1).unwrap();
        let cam = default_camera("pick-place").unwrap();
        let view = render(&scene, &cam);
        registry.record(&view.image, &scene);

        assert_eq!(twin.lookup(&view.image).unwrap(), scene);
    }

    #[test]
    fn unknown_image_is_absent() {
        let registry = SceneRegistry::new();
        let img = RgbImage::new(4, 4);
        assert!(registry.lookup(&img).is_none());
    }
}
