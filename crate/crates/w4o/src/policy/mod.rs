//! Low-level policy: dense correspondence matching between the current
//! view and a subgoal prediction, rigid goal-transform estimation, grasp
//! proposal and filtering, and collision-aware trajectory planning.

mod execute;
mod grasp;
mod matcher;
mod trajectory;

pub use execute::{execute_subtask, ActionRecord, ExecuteConfig, Outcome};
pub use grasp::{filter_grasps, propose_grasps, GraspPose, MAX_GRIPPER_WIDTH};
pub use matcher::{estimate_goal_transform, match_correspondences, Matcher};
pub use trajectory::{
    plan_trajectory, plan_trajectory_optimized, trajectory_cost, GripperCommand, Trajectory,
    DEFAULT_STEP,
};

pub use crate::scene::{observe, Observation};

use thiserror::Error;

use crate::geometry::GeometryError;
use crate::scene::SceneError;

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("object '{object}' missing from the {view} view")]
    ObjectMissing { object: String, view: &'static str },
    #[error("only {0} correspondences, need at least 3")]
    TooFewMatches(usize),
    #[error("point cloud is empty")]
    EmptyCloud,
    #[error("no grasp candidates: {0}")]
    NoCandidates(String),
    #[error("no grasp within the distance threshold of the target points")]
    NoFeasibleGrasp,
    #[error("goal pose is in collision")]
    GoalInCollision,
    #[error("no collision-free path within the retry budget")]
    PlanningFailure,
    #[error("no ground truth recorded for the {0} image")]
    UnknownImage(&'static str),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Scene(#[from] SceneError),
}
