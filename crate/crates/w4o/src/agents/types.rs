use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{DepthMap, GeometryError, PixelMask, PointCloud};
use crate::scene::{RgbImage, SceneError};

/// Ordered subtask decomposition of one task instruction. `targets[i]` is
/// the id of the object subtask i moves; downstream stages rely on this
/// tagging instead of re-grounding free text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubtaskPlan {
    pub task: String,
    pub subtasks: Vec<String>,
    pub targets: Vec<String>,
}

impl SubtaskPlan {
    pub fn new(
        task: String,
        subtasks: Vec<String>,
        targets: Vec<String>,
    ) -> Result<Self, AgentError> {
        if subtasks.is_empty() || subtasks.iter().any(|s| s.is_empty()) {
            return Err(AgentError::EmptyPlan);
        }
        if targets.len() != subtasks.len() || targets.iter().any(|t| t.is_empty()) {
            return Err(AgentError::MalformedPlan(format!(
                "{} targets for {} subtasks",
                targets.len(),
                subtasks.len()
            )));
        }
        Ok(Self {
            task,
            subtasks,
            targets,
        })
    }

    pub fn len(&self) -> usize {
        self.subtasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subtasks.is_empty()
    }
}

/// The critic's answer for one candidate subgoal image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReflectionVerdict {
    Accept { rationale: String },
    Revise { revised_prompt: String, rationale: String },
}

impl ReflectionVerdict {
    pub fn revise(prompt: impl Into<String>, rationale: impl Into<String>) -> Self {
        let revised_prompt = prompt.into();
        assert!(!revised_prompt.is_empty(), "revision needs a prompt");
        Self::Revise {
            revised_prompt,
            rationale: rationale.into(),
        }
    }

    pub fn is_accept(&self) -> bool {
        matches!(self, Self::Accept { .. })
    }
}

/// Label carried by the moved object's points in a subgoal cloud; all
/// other points carry 0.
pub const SUBGOAL_OBJECT_LABEL: u32 = 1;

/// An accepted subgoal image lifted into metric geometry, plus the
/// reflection history that produced it.
#[derive(Debug, Clone)]
pub struct SubgoalPrediction {
    pub image: RgbImage,
    pub depth: DepthMap,
    pub cloud: PointCloud,
    pub object_mask: PixelMask,
    pub iterations_used: usize,
    pub prompt_history: Vec<String>,
}

/// Failure inside one backend call. Oracle backends surface simulator
/// errors, remote backends wire errors, and scripted backends strings.
#[derive(Debug, Error)]
pub enum BackendError {
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Gateway(#[from] crate::gateway::GatewayError),
    #[error("{0}")]
    Other(String),
}

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("task string is empty")]
    EmptyTask,
    #[error("planner produced no subtasks")]
    EmptyPlan,
    #[error("malformed plan: {0}")]
    MalformedPlan(String),
    #[error("{stage} backend failed at iteration {iteration}: {source}")]
    Backend {
        stage: &'static str,
        iteration: usize,
        source: BackendError,
    },
    #[error("no accepted subgoal within {max_iters} iterations")]
    ReflectionBudgetExhausted {
        max_iters: usize,
        last_candidate: RgbImage,
        verdicts: Vec<ReflectionVerdict>,
    },
    #[error("scale calibration needs {required} shared background pixels, found {shared}")]
    ScaleCalibrationFailure { shared: usize, required: usize },
    #[error("object '{0}' not found in image")]
    ObjectNotFound(String),
    #[error("subtask {index} failed: {source}")]
    Chain {
        index: usize,
        completed: Vec<SubgoalPrediction>,
        source: Box<AgentError>,
    },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}
