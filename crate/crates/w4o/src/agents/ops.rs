use super::backends::{BackendSuite, BACKGROUND_LABEL};
use super::{
    AgentError, BackendError, ReflectionVerdict, SubgoalPrediction, SubtaskPlan,
    SUBGOAL_OBJECT_LABEL,
};
use crate::geometry::{back_project_labeled, DepthMap, PixelMask, PointCloud};
use crate::scene::{Observation, RgbImage};

/// Reflection attempts before giving up on a subtask.
pub const DEFAULT_MAX_ITERS: usize = 3;

/// Minimum shared-background pixel count for scale calibration.
const MIN_SHARED_BACKGROUND: usize = 100;

fn backend_err(stage: &'static str, iteration: usize) -> impl FnOnce(BackendError) -> AgentError {
    move |source| AgentError::Backend {
        stage,
        iteration,
        source,
    }
}

/// Decomposes a task instruction into a validated subtask plan.
pub fn plan_subtasks(
    suite: &BackendSuite,
    task: &str,
    image: &RgbImage,
) -> Result<SubtaskPlan, AgentError> {
    if task.trim().is_empty() {
        return Err(AgentError::EmptyTask);
    }
    let response = suite
        .planner
        .plan(task, image)
        .map_err(backend_err("planner", 0))?;
    SubtaskPlan::new(task.to_string(), response.subtasks, response.targets)
}

/// Generate-review loop for one subtask. The dreamer proposes a subgoal
/// image from `current_image`; the critic either accepts it or supplies a
/// revised prompt for the next attempt. An accepted image is lifted into
/// metric geometry against `reference`. Every iteration costs exactly one
/// dreamer call and one critic call, and a rejected candidate is never
/// returned.
pub fn reflective_generate(
    suite: &BackendSuite,
    reference: &Observation,
    current_image: &RgbImage,
    subtask: &str,
    object_id: &str,
    max_iters: usize,
) -> Result<SubgoalPrediction, AgentError> {
    assert!(max_iters >= 1, "reflection needs at least one iteration");
    let mut prompt = subtask.to_string();
    let mut prompt_history = Vec::new();
    let mut verdicts = Vec::new();
    let mut last_candidate = None;

    for iteration in 0..max_iters {
        let candidate = suite
            .dreamer
            .dream(current_image, &prompt)
            .map_err(backend_err("dreamer", iteration))?;
        let verdict = suite
            .critic
            .critique(current_image, &candidate, subtask)
            .map_err(backend_err("critic", iteration))?;
        prompt_history.push(std::mem::take(&mut prompt));
        match verdict {
            ReflectionVerdict::Accept { .. } => {
                let (depth, object_mask, cloud) =
                    lift_subgoal(suite, &candidate, object_id, reference)?;
                return Ok(SubgoalPrediction {
                    image: candidate,
                    depth,
                    cloud,
                    object_mask,
                    iterations_used: iteration + 1,
                    prompt_history,
                });
            }
            ReflectionVerdict::Revise {
                ref revised_prompt, ..
            } => {
                prompt = revised_prompt.clone();
                verdicts.push(verdict);
                last_candidate = Some(candidate);
            }
        }
    }

    Err(AgentError::ReflectionBudgetExhausted {
        max_iters,
        last_candidate: last_candidate.expect("at least one iteration ran"),
        verdicts,
    })
}

/// Lifts a subgoal image to a metric depth map, the moved object's mask,
/// and a labeled point cloud. Predicted depth has arbitrary scale; the
/// median metric-to-predicted ratio over pixels that are background in
/// both the reference view and the subgoal image calibrates it. The cloud
/// covers object plus background pixels, the object labeled
/// [`SUBGOAL_OBJECT_LABEL`] and everything else 0.
pub fn lift_subgoal(
    suite: &BackendSuite,
    image: &RgbImage,
    object_id: &str,
    reference: &Observation,
) -> Result<(DepthMap, PixelMask, PointCloud), AgentError> {
    let (w, h) = (reference.camera.width, reference.camera.height);

    let raw = suite
        .depth
        .estimate_depth(image)
        .map_err(backend_err("depth", 0))?;
    if raw.width() != w || raw.height() != h {
        return Err(AgentError::Backend {
            stage: "depth",
            iteration: 0,
            source: BackendError::Other(format!(
                "predicted depth is {}x{}, camera is {w}x{h}",
                raw.width(),
                raw.height()
            )),
        });
    }
    let sub_bg = suite
        .segmenter
        .segment(image, BACKGROUND_LABEL)
        .map_err(backend_err("segmenter", 0))?;
    let ref_bg = reference.background_mask();

    let mut ratios = Vec::new();
    for v in 0..h {
        for u in 0..w {
            if !(sub_bg.get(u, v) && ref_bg.get(u, v)) {
                continue;
            }
            let (Some(predicted), Some(metric)) = (raw.get(u, v), reference.depth.get(u, v))
            else {
                continue;
            };
            ratios.push(metric / predicted);
        }
    }
    if ratios.len() < MIN_SHARED_BACKGROUND {
        return Err(AgentError::ScaleCalibrationFailure {
            shared: ratios.len(),
            required: MIN_SHARED_BACKGROUND,
        });
    }
    ratios.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mid = ratios.len() / 2;
    let s = if ratios.len() % 2 == 0 {
        0.5 * (ratios[mid - 1] + ratios[mid])
    } else {
        ratios[mid]
    };
    let mut depth = raw;
    depth.scale(s);

    let object_mask = segment_object(suite, image, object_id)?;
    let lift_mask = object_mask.union(&sub_bg);
    let mut labels = vec![0u32; (w * h) as usize];
    for v in 0..h {
        for u in 0..w {
            if object_mask.get(u, v) {
                labels[(v * w + u) as usize] = SUBGOAL_OBJECT_LABEL;
            }
        }
    }
    let cloud = back_project_labeled(&depth, &reference.camera, Some(&lift_mask), &labels)?;
    Ok((depth, object_mask, cloud))
}

/// Segments one object, treating an empty mask as absence.
pub fn segment_object(
    suite: &BackendSuite,
    image: &RgbImage,
    object_id: &str,
) -> Result<PixelMask, AgentError> {
    let mask = suite
        .segmenter
        .segment(image, object_id)
        .map_err(backend_err("segmenter", 0))?;
    if mask.is_empty() {
        return Err(AgentError::ObjectNotFound(object_id.to_string()));
    }
    Ok(mask)
}

/// Runs the reflective loop over a whole plan, feeding each accepted
/// subgoal image in as the next subtask's current view. A failure at
/// subtask `index` preserves the predictions already completed.
pub fn chain_subgoals(
    suite: &BackendSuite,
    reference: &Observation,
    plan: &SubtaskPlan,
    max_iters: usize,
) -> Result<Vec<SubgoalPrediction>, AgentError> {
    let mut completed: Vec<SubgoalPrediction> = Vec::with_capacity(plan.len());
    let mut current = reference.image.clone();
    for (index, (subtask, target)) in plan.subtasks.iter().zip(&plan.targets).enumerate() {
        match reflective_generate(suite, reference, &current, subtask, target, max_iters) {
            Ok(prediction) => {
                current = prediction.image.clone();
                completed.push(prediction);
            }
            Err(source) => {
                return Err(AgentError::Chain {
                    index,
                    completed,
                    source: Box::new(source),
                });
            }
        }
    }
    Ok(completed)
}
