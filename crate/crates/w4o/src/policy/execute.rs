use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::{
    estimate_goal_transform, filter_grasps, match_correspondences, plan_trajectory_optimized,
    propose_grasps, GraspPose, GripperCommand, Matcher, Observation, Trajectory,
};
use crate::agents::SubgoalPrediction;
use crate::geometry::RigidTransform;
use crate::scene::SceneState;

/// Knobs for executing one subtask as a pick-and-place action.
#[derive(Debug, Clone)]
pub struct ExecuteConfig {
    pub object_id: String,
    pub subtask_index: usize,
    pub matcher: Matcher,
    /// Largest allowed gap between a grasp center and the object's points.
    pub grasp_threshold: f64,
    pub max_grasps: usize,
    pub planner_seed: u64,
    pub plan_candidates: usize,
    /// The straight-down approach starts this far above the grasp.
    pub pre_grasp_height: f64,
}

impl ExecuteConfig {
    pub fn new(object_id: impl Into<String>, subtask_index: usize, matcher: Matcher) -> Self {
        Self {
            object_id: object_id.into(),
            subtask_index,
            matcher,
            grasp_threshold: 0.05,
            max_grasps: 10,
            planner_seed: 0,
            plan_candidates: 1,
            pre_grasp_height: 0.10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "reason", rename_all = "snake_case")]
pub enum Outcome {
    Succeeded,
    Failed(String),
}

impl Outcome {
    pub fn is_success(&self) -> bool {
        matches!(self, Outcome::Succeeded)
    }
}

/// What one `execute_subtask` call did. Failed actions keep the partial
/// evidence fields at `None`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ActionRecord {
    pub subtask_index: usize,
    pub object_id: String,
    pub outcome: Outcome,
    /// Rigid motion the action applies to the object.
    pub estimated_motion: Option<RigidTransform>,
    pub registration_rmse: Option<f64>,
    pub grasp: Option<GraspPose>,
    pub trajectory: Option<Trajectory>,
}

/// Runs the full low-level pipeline for one subtask: match the current
/// view against the subgoal, register the object's rigid motion, pick a
/// grasp, plan the approach and the transport, and apply the motion.
///
/// Never panics on pipeline failures: any stage error comes back as a
/// `Failed` outcome with the scene returned unchanged.
pub fn execute_subtask(
    scene: &SceneState,
    now: &Observation,
    goal: &SubgoalPrediction,
    config: &ExecuteConfig,
) -> (SceneState, ActionRecord) {
    match try_execute(scene, now, goal, config) {
        Ok(done) => done,
        Err(reason) => (
            scene.clone(),
            ActionRecord {
                subtask_index: config.subtask_index,
                object_id: config.object_id.clone(),
                outcome: Outcome::Failed(reason),
                estimated_motion: None,
                registration_rmse: None,
                grasp: None,
                trajectory: None,
            },
        ),
    }
}

fn try_execute(
    scene: &SceneState,
    now: &Observation,
    goal: &SubgoalPrediction,
    config: &ExecuteConfig,
) -> Result<(SceneState, ActionRecord), String> {
    let corr = match_correspondences(now, goal, &config.object_id, &config.matcher)
        .map_err(|e| format!("correspondence matching: {e}"))?;
    let (motion, rmse) = estimate_goal_transform(&corr, &now.cloud, &goal.cloud)
        .map_err(|e| format!("goal registration: {e}"))?;

    let label = now.label_of(&config.object_id).expect("matched above");
    let object_points = now.cloud.filter_label(label);
    let grasps = propose_grasps(&object_points, config.max_grasps)
        .map_err(|e| format!("grasp proposal: {e}"))?;
    let grasp = filter_grasps(&grasps, &object_points, config.grasp_threshold)
        .map_err(|e| format!("grasp filtering: {e}"))?;

    // Empty-handed descent onto the object.
    let pre_grasp = RigidTransform::from_quaternion(
        grasp.pose.quaternion(),
        grasp.pose.translation() + Vector3::new(0.0, 0.0, config.pre_grasp_height),
    );
    let mut approach = plan_trajectory_optimized(
        &pre_grasp,
        &grasp.pose,
        scene,
        None,
        config.plan_candidates,
        config.planner_seed,
    )
    .map_err(|e| format!("approach planning: {e}"))?;
    for cmd in approach.gripper_commands.iter_mut() {
        *cmd = GripperCommand::Open;
    }
    *approach.gripper_commands.last_mut().expect("non-empty") = GripperCommand::Close;

    // Carry the object along the registered motion, then release.
    let target = motion.compose(&grasp.pose);
    let mut transport = plan_trajectory_optimized(
        &grasp.pose,
        &target,
        scene,
        Some(&config.object_id),
        config.plan_candidates,
        config.planner_seed,
    )
    .map_err(|e| format!("transport planning: {e}"))?;
    *transport.gripper_commands.last_mut().expect("non-empty") = GripperCommand::Open;

    let next = scene
        .apply_object_motion(&config.object_id, &motion)
        .map_err(|e| format!("scene update: {e}"))?;

    let mut waypoints = approach.waypoints;
    let mut commands = approach.gripper_commands;
    waypoints.extend(transport.waypoints.into_iter().skip(1));
    commands.extend(transport.gripper_commands.into_iter().skip(1));

    Ok((
        next,
        ActionRecord {
            subtask_index: config.subtask_index,
            object_id: config.object_id.clone(),
            outcome: Outcome::Succeeded,
            estimated_motion: Some(motion),
            registration_rmse: Some(rmse),
            grasp: Some(grasp),
            trajectory: Some(Trajectory {
                waypoints,
                gripper_commands: commands,
            }),
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::SUBGOAL_OBJECT_LABEL;
    use crate::geometry::{back_project_labeled, CameraModel};
    use crate::policy::{observe, DEFAULT_STEP};
    use crate::scene::{oracle_future_scene, render, SceneObject, SceneRegistry};
    use crate::scene::{SceneState, Shape, Table};
    use approx::assert_abs_diff_eq;

    fn overhead_camera() -> CameraModel {
        let pose = RigidTransform::from_axis_angle(
            Vector3::x(),
            std::f64::consts::PI,
            Vector3::new(0.0, 0.0, 1.2),
        );
        CameraModel::new(280.0, 280.0, 160.0, 120.0, 320, 240, pose).unwrap()
    }

    fn tomato_pan_scene() -> SceneState {
        SceneState::new(
            vec![
                SceneObject {
                    id: "tomato".into(),
                    shape: Shape::Sphere { radius: 0.03 },
                    pose: RigidTransform::from_translation(Vector3::new(-0.15, 0.10, 0.03)),
                    color: [204, 41, 36],
                },
                SceneObject {
                    id: "pan".into(),
                    shape: Shape::Cylinder {
                        radius: 0.075,
                        height: 0.03,
                    },
                    pose: RigidTransform::from_translation(Vector3::new(0.10, -0.05, 0.015)),
                    color: [92, 92, 102],
                },
            ],
            Some(Table {
                size: [0.9, 0.9],
                height: 0.0,
            }),
        )
        .unwrap()
    }

    fn oracle_prediction(
        scene: &SceneState,
        cam: &CameraModel,
        object_id: &str,
    ) -> SubgoalPrediction {
        let view = render(scene, cam);
        let label = scene.seg_label(object_id).unwrap_or(u32::MAX);
        let object_mask = view.seg_mask(label);
        let lift_mask = object_mask.union(&view.background_mask());
        let labels: Vec<u32> = view
            .seg
            .iter()
            .map(|&l| if l == label { SUBGOAL_OBJECT_LABEL } else { 0 })
            .collect();
        let cloud = back_project_labeled(&view.depth, cam, Some(&lift_mask), &labels).unwrap();
        SubgoalPrediction {
            image: view.image,
            depth: view.depth,
            cloud,
            object_mask,
            iterations_used: 1,
            prompt_history: vec!["test".into()],
        }
    }

    #[test]
    fn pick_and_place_reaches_the_subgoal() {
        let scene = tomato_pan_scene();
        let cam = overhead_camera();
        let registry = SceneRegistry::new();

        let now = observe(&scene, &cam).unwrap();
        registry.record(&now.image, &scene);
        let goal_scene = oracle_future_scene(&scene, "put the tomato into the pan").unwrap();
        let goal = oracle_prediction(&goal_scene, &cam, "tomato");
        registry.record(&goal.image, &goal_scene);

        let config = ExecuteConfig::new("tomato", 0, Matcher::Oracle(registry));
        let (next, record) = execute_subtask(&scene, &now, &goal, &config);
        assert!(record.outcome.is_success(), "{:?}", record.outcome);

        // The object lands on the goal pose up to pixel-resampling error.
        let want = goal_scene.object("tomato").unwrap().pose;
        let got = next.object("tomato").unwrap().pose;
        let (t_err, _) = got.pose_error(&want);
        assert!(t_err < 5e-3, "tomato off by {t_err} m");
        assert_eq!(
            next.object("pan").unwrap().pose,
            scene.object("pan").unwrap().pose
        );
        assert!(record.registration_rmse.unwrap() < 5e-3);

        let traj = record.trajectory.as_ref().unwrap();
        let grasp = record.grasp.as_ref().unwrap();
        let motion = record.estimated_motion.unwrap();

        // Approach starts above the grasp and the path ends at the
        // transported grasp pose.
        assert_abs_diff_eq!(
            *traj.waypoints[0].translation(),
            grasp.pose.translation() + Vector3::new(0.0, 0.0, 0.10),
            epsilon = 1e-12
        );
        let last = *traj.waypoints.last().unwrap().translation();
        let want_last = *motion.compose(&grasp.pose).translation();
        assert_abs_diff_eq!(last, want_last, epsilon = 1e-12);
        assert!(traj.max_step() <= DEFAULT_STEP + 1e-12);

        // Command profile: open on approach, one close at the grasp,
        // open again at release.
        assert_eq!(traj.gripper_commands[0], GripperCommand::Open);
        assert_eq!(*traj.gripper_commands.last().unwrap(), GripperCommand::Open);
        let closes = traj
            .gripper_commands
            .iter()
            .filter(|c| **c == GripperCommand::Close)
            .count();
        assert_eq!(closes, 1);
        assert_eq!(traj.gripper_commands.len(), traj.waypoints.len());
    }

    #[test]
    fn unknown_object_fails_and_preserves_the_scene() {
        let scene = tomato_pan_scene();
        let cam = overhead_camera();
        let registry = SceneRegistry::new();
        let now = observe(&scene, &cam).unwrap();
        registry.record(&now.image, &scene);
        let goal = oracle_prediction(&scene, &cam, "tomato");

        let config = ExecuteConfig::new("bottle", 3, Matcher::Oracle(registry));
        let (next, record) = execute_subtask(&scene, &now, &goal, &config);

        assert_eq!(next, scene);
        assert_eq!(record.subtask_index, 3);
        let Outcome::Failed(reason) = &record.outcome else {
            panic!("expected failure");
        };
        assert!(!reason.is_empty());
        assert!(record.estimated_motion.is_none());
        assert!(record.grasp.is_none());
        assert!(record.trajectory.is_none());
    }

    #[test]
    fn too_wide_object_fails_at_grasp_proposal() {
        let scene = SceneState::new(
            vec![SceneObject {
                id: "crate".into(),
                shape: Shape::Box {
                    size: Vector3::new(0.2, 0.12, 0.1),
                },
                pose: RigidTransform::from_translation(Vector3::new(0.0, 0.0, 0.05)),
                color: [146, 108, 70],
            }],
            Some(Table {
                size: [0.9, 0.9],
                height: 0.0,
            }),
        )
        .unwrap();
        let cam = overhead_camera();
        let registry = SceneRegistry::new();

        let now = observe(&scene, &cam).unwrap();
        registry.record(&now.image, &scene);
        let goal_scene = oracle_future_scene(&scene, "move the crate up").unwrap();
        let goal = oracle_prediction(&goal_scene, &cam, "crate");
        registry.record(&goal.image, &goal_scene);

        let config = ExecuteConfig::new("crate", 0, Matcher::Oracle(registry));
        let (next, record) = execute_subtask(&scene, &now, &goal, &config);

        assert_eq!(next, scene);
        let Outcome::Failed(reason) = &record.outcome else {
            panic!("expected failure");
        };
        assert!(reason.contains("grasp proposal"), "{reason}");
    }

    #[test]
    fn colliding_goal_fails_transport_planning() {
        let scene = tomato_pan_scene();
        let cam = overhead_camera();
        let registry = SceneRegistry::new();

        let now = observe(&scene, &cam).unwrap();
        registry.record(&now.image, &scene);
        // Subgoal buries the tomato inside the pan body and the table.
        let goal_scene = scene
            .with_object_pose(
                "tomato",
                RigidTransform::from_translation(Vector3::new(0.10, -0.05, 0.015)),
            )
            .unwrap();
        let goal = oracle_prediction(&goal_scene, &cam, "tomato");
        registry.record(&goal.image, &goal_scene);

        let config = ExecuteConfig::new("tomato", 0, Matcher::Oracle(registry));
        let (next, record) = execute_subtask(&scene, &now, &goal, &config);

        assert_eq!(next, scene);
        let Outcome::Failed(reason) = &record.outcome else {
            panic!("expected failure");
        };
        assert!(reason.contains("transport planning"), "{reason}");
    }
}
