use std::sync::Arc;

use super::backends::{
    BackendSuite, CriticBackend, DepthBackend, DreamerBackend, PlanResponse, PlannerBackend,
    SegmenterBackend, BACKGROUND_LABEL,
};
use super::{BackendError, ReflectionVerdict};
use crate::geometry::{CameraModel, DepthMap, PixelMask};
use crate::scene::{oracle_future_scene, parse_subtask, render, RgbImage, SceneRegistry, SceneState};

/// Per-object accept window for the oracle critic.
const ACCEPT_POS_TOL: f64 = 0.02;
const ACCEPT_ROT_TOL_DEG: f64 = 10.0;

fn lookup(
    registry: &SceneRegistry,
    image: &RgbImage,
    role: &str,
) -> Result<SceneState, BackendError> {
    registry.lookup(image).ok_or_else(|| {
        BackendError::Other(format!("{role} image matches no recorded scene"))
    })
}

/// Strips leading articles from a token stream slice.
fn noun_after<'a>(tokens: &[&'a str], start: usize) -> Option<&'a str> {
    tokens[start..]
        .iter()
        .find(|t| !matches!(**t, "the" | "a" | "an" | "of"))
        .copied()
}

/// Ground-truth planner. Expands container tasks into the canonical
/// three-step decomposition; anything directly parsable as a single
/// motion passes through unchanged.
pub struct OraclePlanner {
    registry: SceneRegistry,
}

impl OraclePlanner {
    pub fn new(registry: SceneRegistry) -> Self {
        Self { registry }
    }
}

impl PlannerBackend for OraclePlanner {
    fn plan(&self, task: &str, image: &RgbImage) -> Result<PlanResponse, BackendError> {
        let scene = lookup(&self.registry, image, "task")?;
        let lowered = task.to_lowercase();
        let tokens: Vec<&str> = lowered
            .split(|c: char| c.is_whitespace() || c == ',' || c == '.')
            .filter(|t| !t.is_empty())
            .collect();

        let known = |name: &str| scene.objects.iter().any(|o| o.id == name);

        let expansion = match tokens.first().copied() {
            Some("put") | Some("place") => {
                let prep = tokens
                    .iter()
                    .position(|t| matches!(*t, "in" | "into" | "inside" | "on" | "onto"));
                prep.and_then(|p| {
                    let object = noun_after(&tokens, 1)?;
                    let target = noun_after(&tokens, p + 1)?;
                    if !known(object) || !known(target) {
                        return None;
                    }
                    let last = if matches!(tokens[p], "on" | "onto") {
                        format!("Move the {object} downward onto the {target}")
                    } else {
                        format!("Move the {object} downward into the {target}")
                    };
                    Some((
                        vec![
                            format!("Move the {object} vertically upward"),
                            format!("Move the {object} horizontally, positioning it above the {target}"),
                            last,
                        ],
                        object.to_string(),
                    ))
                })
            }
            Some("take") | Some("remove") | Some("lift") => {
                let prep = tokens.iter().position(|t| matches!(*t, "off" | "from"));
                prep.and_then(|p| {
                    let object = noun_after(&tokens, 1)?;
                    let source = noun_after(&tokens, p + 1)?;
                    if !known(object) || !known(source) {
                        return None;
                    }
                    Some((
                        vec![
                            format!("Move the {object} vertically upward"),
                            format!("Move the {object} horizontally away from the {source}"),
                            format!("Move the {object} downward onto the table"),
                        ],
                        object.to_string(),
                    ))
                })
            }
            _ => None,
        };

        if let Some((subtasks, object)) = expansion {
            let targets = vec![object; subtasks.len()];
            return Ok(PlanResponse { subtasks, targets });
        }

        // Single-motion fallback: the task itself is already a subtask.
        match parse_subtask(&scene, task) {
            Ok((object, _)) => Ok(PlanResponse {
                subtasks: vec![task.trim().to_string()],
                targets: vec![object],
            }),
            Err(e) => Err(BackendError::Other(format!(
                "cannot decompose task '{task}': {e}"
            ))),
        }
    }
}

/// Ground-truth dreamer: renders the analytic future scene and records
/// the result so later oracle lookups recognize the image.
pub struct OracleDreamer {
    registry: SceneRegistry,
    camera: CameraModel,
}

impl OracleDreamer {
    pub fn new(registry: SceneRegistry, camera: CameraModel) -> Self {
        Self { registry, camera }
    }
}

impl DreamerBackend for OracleDreamer {
    fn dream(&self, image: &RgbImage, prompt: &str) -> Result<RgbImage, BackendError> {
        let scene = lookup(&self.registry, image, "current")?;
        let future = oracle_future_scene(&scene, prompt)?;
        let view = render(&future, &self.camera);
        self.registry.record(&view.image, &future);
        Ok(view.image)
    }
}

/// Ground-truth critic: accepts a candidate iff every object sits within
/// the accept window of its analytic future pose.
pub struct OracleCritic {
    registry: SceneRegistry,
}

impl OracleCritic {
    pub fn new(registry: SceneRegistry) -> Self {
        Self { registry }
    }
}

impl CriticBackend for OracleCritic {
    fn critique(
        &self,
        image: &RgbImage,
        candidate: &RgbImage,
        subtask: &str,
    ) -> Result<ReflectionVerdict, BackendError> {
        let scene = lookup(&self.registry, image, "current")?;
        let want = oracle_future_scene(&scene, subtask)?;
        let Some(got) = self.registry.lookup(candidate) else {
            return Ok(ReflectionVerdict::revise(
                subtask,
                "candidate image matches no recorded scene",
            ));
        };
        for target in &want.objects {
            let Ok(actual) = got.object(&target.id) else {
                return Ok(ReflectionVerdict::revise(
                    subtask,
                    format!("object '{}' is missing from the candidate", target.id),
                ));
            };
            let (t_err, r_err) = actual.pose.pose_error(&target.pose);
            if t_err > ACCEPT_POS_TOL || r_err > ACCEPT_ROT_TOL_DEG {
                return Ok(ReflectionVerdict::revise(
                    subtask,
                    format!(
                        "object '{}' is {t_err:.3} m and {r_err:.1} deg off its subgoal pose",
                        target.id
                    ),
                ));
            }
        }
        Ok(ReflectionVerdict::Accept {
            rationale: "every object is within tolerance of its subgoal pose".to_string(),
        })
    }
}

/// Ground-truth depth: the simulator's own metric depth render.
pub struct OracleDepth {
    registry: SceneRegistry,
    camera: CameraModel,
}

impl OracleDepth {
    pub fn new(registry: SceneRegistry, camera: CameraModel) -> Self {
        Self { registry, camera }
    }
}

impl DepthBackend for OracleDepth {
    fn estimate_depth(&self, image: &RgbImage) -> Result<DepthMap, BackendError> {
        let scene = lookup(&self.registry, image, "depth query")?;
        Ok(render(&scene, &self.camera).depth)
    }
}

/// Ground-truth segmentation from the simulator's label buffer.
pub struct OracleSegmenter {
    registry: SceneRegistry,
    camera: CameraModel,
}

impl OracleSegmenter {
    pub fn new(registry: SceneRegistry, camera: CameraModel) -> Self {
        Self { registry, camera }
    }
}

impl SegmenterBackend for OracleSegmenter {
    fn segment(&self, image: &RgbImage, label: &str) -> Result<PixelMask, BackendError> {
        let scene = lookup(&self.registry, image, "segmentation query")?;
        let view = render(&scene, &self.camera);
        if label == BACKGROUND_LABEL {
            return Ok(view.background_mask());
        }
        match scene.seg_label(label) {
            Ok(l) => Ok(view.seg_mask(l)),
            Err(_) => Ok(PixelMask::new(self.camera.width, self.camera.height)),
        }
    }
}

/// Wires all five oracle backends over one shared registry and camera.
pub fn oracle_suite(registry: SceneRegistry, camera: CameraModel) -> BackendSuite {
    BackendSuite {
        planner: Arc::new(OraclePlanner::new(registry.clone())),
        dreamer: Arc::new(OracleDreamer::new(registry.clone(), camera)),
        critic: Arc::new(OracleCritic::new(registry.clone())),
        depth: Arc::new(OracleDepth::new(registry.clone(), camera)),
        segmenter: Arc::new(OracleSegmenter::new(registry, camera)),
    }
}
