use std::collections::VecDeque;
use std::sync::Mutex;

use super::backends::{
    CriticBackend, DepthBackend, DreamerBackend, PlanResponse, PlannerBackend, SegmenterBackend,
};
use super::{BackendError, ReflectionVerdict};
use crate::geometry::{DepthMap, PixelMask};
use crate::scene::RgbImage;

/// One scripted reply: a canned success or a canned failure message.
pub type Scripted<T> = Result<T, String>;

fn next<T>(queue: &Mutex<VecDeque<Scripted<T>>>, who: &str) -> Result<T, BackendError> {
    match queue.lock().unwrap().pop_front() {
        Some(Ok(value)) => Ok(value),
        Some(Err(message)) => Err(BackendError::Other(message)),
        None => Err(BackendError::Other(format!("{who} script exhausted"))),
    }
}

/// Plays back canned plans and records `(task, image)` per call.
pub struct ScriptedPlanner {
    script: Mutex<VecDeque<Scripted<PlanResponse>>>,
    calls: Mutex<Vec<(String, RgbImage)>>,
}

impl ScriptedPlanner {
    pub fn new(outputs: impl IntoIterator<Item = Scripted<PlanResponse>>) -> Self {
        Self {
            script: Mutex::new(outputs.into_iter().collect()),
            calls: Mutex::new(Vec::new()),
        }
    }

    pub fn calls(&self) -> Vec<(String, RgbImage)> {
        self.calls.lock().unwrap().clone()
    }
}

impl PlannerBackend for ScriptedPlanner {
    fn plan(&self, task: &str, image: &RgbImage) -> Result<PlanResponse, BackendError> {
        self.calls.lock().unwrap().push((task.to_string(), image.clone()));
        next(&self.script, "planner")
    }
}

/// Plays back canned images and records `(image, prompt)` per call.
pub struct ScriptedDreamer {
    script: Mutex<VecDeque<Scripted<RgbImage>>>,
    calls: Mutex<Vec<(RgbImage, String)>>,
}

impl ScriptedDreamer {
    pub fn new(outputs: impl IntoIterator<Item = Scripted<RgbImage>>) -> Self {
        Self {
            script: Mutex::new(outputs.into_iter().collect()),
            calls: Mutex::new(Vec::new()),
        }
    }

    pub fn calls(&self) -> Vec<(RgbImage, String)> {
        self.calls.lock().unwrap().clone()
    }
}

impl DreamerBackend for ScriptedDreamer {
    fn dream(&self, image: &RgbImage, prompt: &str) -> Result<RgbImage, BackendError> {
        self.calls.lock().unwrap().push((image.clone(), prompt.to_string()));
        next(&self.script, "dreamer")
    }
}

/// Plays back canned verdicts and records `(image, candidate, subtask)`.
pub struct ScriptedCritic {
    script: Mutex<VecDeque<Scripted<ReflectionVerdict>>>,
    calls: Mutex<Vec<(RgbImage, RgbImage, String)>>,
}

impl ScriptedCritic {
    pub fn new(outputs: impl IntoIterator<Item = Scripted<ReflectionVerdict>>) -> Self {
        Self {
            script: Mutex::new(outputs.into_iter().collect()),
            calls: Mutex::new(Vec::new()),
        }
    }

    pub fn calls(&self) -> Vec<(RgbImage, RgbImage, String)> {
        self.calls.lock().unwrap().clone()
    }
}

impl CriticBackend for ScriptedCritic {
    fn critique(
        &self,
        image: &RgbImage,
        candidate: &RgbImage,
        subtask: &str,
    ) -> Result<ReflectionVerdict, BackendError> {
        self.calls
            .lock()
            .unwrap()
            .push((image.clone(), candidate.clone(), subtask.to_string()));
        next(&self.script, "critic")
    }
}

/// Plays back canned depth maps and records the queried images.
pub struct ScriptedDepth {
    script: Mutex<VecDeque<Scripted<DepthMap>>>,
    calls: Mutex<Vec<RgbImage>>,
}

impl ScriptedDepth {
    pub fn new(outputs: impl IntoIterator<Item = Scripted<DepthMap>>) -> Self {
        Self {
            script: Mutex::new(outputs.into_iter().collect()),
            calls: Mutex::new(Vec::new()),
        }
    }

    pub fn calls(&self) -> Vec<RgbImage> {
        self.calls.lock().unwrap().clone()
    }
}

impl DepthBackend for ScriptedDepth {
    fn estimate_depth(&self, image: &RgbImage) -> Result<DepthMap, BackendError> {
        self.calls.lock().unwrap().push(image.clone());
        next(&self.script, "depth")
    }
}

/// Plays back canned masks and records `(image, label)` per call.
pub struct ScriptedSegmenter {
    script: Mutex<VecDeque<Scripted<PixelMask>>>,
    calls: Mutex<Vec<(RgbImage, String)>>,
}

impl ScriptedSegmenter {
    pub fn new(outputs: impl IntoIterator<Item = Scripted<PixelMask>>) -> Self {
        Self {
            script: Mutex::new(outputs.into_iter().collect()),
            calls: Mutex::new(Vec::new()),
        }
    }

    pub fn calls(&self) -> Vec<(RgbImage, String)> {
        self.calls.lock().unwrap().clone()
    }
}

impl SegmenterBackend for ScriptedSegmenter {
    fn segment(&self, image: &RgbImage, label: &str) -> Result<PixelMask, BackendError> {
        self.calls.lock().unwrap().push((image.clone(), label.to_string()));
        next(&self.script, "segmenter")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scripts_replay_in_order_then_exhaust() {
        let a = RgbImage::new(2, 2);
        let mut b = RgbImage::new(2, 2);
        b.set(0, 0, [255, 0, 0]);
        let dreamer = ScriptedDreamer::new([Ok(a.clone()), Ok(b.clone()), Err("flaky".into())]);

        let input = RgbImage::new(2, 2);
        assert_eq!(dreamer.dream(&input, "one").unwrap(), a);
        assert_eq!(dreamer.dream(&input, "two").unwrap(), b);

        let err = dreamer.dream(&input, "three").unwrap_err();
        assert!(err.to_string().contains("flaky"));
        let err = dreamer.dream(&input, "four").unwrap_err();
        assert!(err.to_string().contains("script exhausted"));

        let calls = dreamer.calls();
        assert_eq!(calls.len(), 4);
        assert_eq!(calls[1].1, "two");
    }

    #[test]
    fn recorded_inputs_are_faithful_copies() {
        let seg = ScriptedSegmenter::new([Ok(PixelMask::filled(3, 3))]);
        let mut img = RgbImage::new(3, 3);
        img.set(1, 2, [9, 8, 7]);
        seg.segment(&img, "tomato").unwrap();
        let calls = seg.calls();
        assert_eq!(calls[0].0, img);
        assert_eq!(calls[0].1, "tomato");
    }
}
