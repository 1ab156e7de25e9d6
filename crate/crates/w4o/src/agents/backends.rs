use std::sync::Arc;

use super::{BackendError, ReflectionVerdict};
use crate::geometry::{DepthMap, PixelMask};
use crate::scene::RgbImage;

/// Segmentation label for everything that is not an object.
pub const BACKGROUND_LABEL: &str = "background";

/// Raw planner output before validation into a [`SubtaskPlan`].
///
/// `targets[i]` is the object id subtask `i` manipulates; downstream
/// stages never re-derive grounding from the subtask text.
///
/// [`SubtaskPlan`]: super::SubtaskPlan
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanResponse {
    pub subtasks: Vec<String>,
    pub targets: Vec<String>,
}

/// Decomposes a free-text task into ordered subtasks.
pub trait PlannerBackend: Send + Sync {
    fn plan(&self, task: &str, image: &RgbImage) -> Result<PlanResponse, BackendError>;
}

/// Generates a subgoal image showing the scene after one subtask.
pub trait DreamerBackend: Send + Sync {
    fn dream(&self, image: &RgbImage, prompt: &str) -> Result<RgbImage, BackendError>;
}

/// Judges whether a candidate subgoal image fulfils the subtask.
pub trait CriticBackend: Send + Sync {
    fn critique(
        &self,
        image: &RgbImage,
        candidate: &RgbImage,
        subtask: &str,
    ) -> Result<ReflectionVerdict, BackendError>;
}

/// Monocular depth prediction. Output scale may be arbitrary; callers
/// calibrate against a metric reference before use.
pub trait DepthBackend: Send + Sync {
    fn estimate_depth(&self, image: &RgbImage) -> Result<DepthMap, BackendError>;
}

/// Open-vocabulary segmentation. `label` is an object id, or
/// [`BACKGROUND_LABEL`] for the non-object complement. Unknown labels
/// yield an empty mask, not an error.
pub trait SegmenterBackend: Send + Sync {
    fn segment(&self, image: &RgbImage, label: &str) -> Result<PixelMask, BackendError>;
}

/// The five model slots one episode needs. Cloning shares the backends.
#[derive(Clone)]
pub struct BackendSuite {
    pub planner: Arc<dyn PlannerBackend>,
    pub dreamer: Arc<dyn DreamerBackend>,
    pub critic: Arc<dyn CriticBackend>,
    pub depth: Arc<dyn DepthBackend>,
    pub segmenter: Arc<dyn SegmenterBackend>,
}
