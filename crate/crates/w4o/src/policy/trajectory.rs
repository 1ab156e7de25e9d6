use nalgebra::{UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::PolicyError;
use crate::geometry::RigidTransform;
use crate::scene::{check_collision, clearance, SceneState};

/// Largest translation gap between consecutive waypoints.
pub const DEFAULT_STEP: f64 = 0.02;

const VIA_ATTEMPTS: usize = 50;
const CLEARANCE_WEIGHT: f64 = 0.01;
const CLEARANCE_FLOOR: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GripperCommand {
    Open,
    Close,
    Hold,
}

/// End-effector path with a gripper command per waypoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub waypoints: Vec<RigidTransform>,
    pub gripper_commands: Vec<GripperCommand>,
}

impl Trajectory {
    fn holding(waypoints: Vec<RigidTransform>) -> Self {
        let gripper_commands = vec![GripperCommand::Hold; waypoints.len()];
        Self {
            waypoints,
            gripper_commands,
        }
    }

    pub fn len(&self) -> usize {
        self.waypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.waypoints.is_empty()
    }

    pub fn path_length(&self) -> f64 {
        self.waypoints
            .windows(2)
            .map(|w| (w[1].translation() - w[0].translation()).norm())
            .sum()
    }

    /// Largest translation gap between consecutive waypoints.
    pub fn max_step(&self) -> f64 {
        self.waypoints
            .windows(2)
            .map(|w| (w[1].translation() - w[0].translation()).norm())
            .fold(0.0, f64::max)
    }

    /// Waypoint rows as CSV: index, position, quaternion, command.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,x,y,z,qw,qx,qy,qz,gripper\n");
        for (i, (w, c)) in self.waypoints.iter().zip(&self.gripper_commands).enumerate() {
            let t = w.translation();
            let q = w.quaternion();
            let cmd = match c {
                GripperCommand::Open => "open",
                GripperCommand::Close => "close",
                GripperCommand::Hold => "hold",
            };
            out.push_str(&format!(
                "{i},{},{},{},{},{},{},{},{cmd}\n",
                t.x, t.y, t.z, q.w, q.i, q.j, q.k
            ));
        }
        out
    }
}

/// How an object rides the gripper: its pose when the gripper is at `g` is
/// `g ∘ grip_start⁻¹ ∘ object_start`.
struct Attached<'a> {
    object_id: &'a str,
    offset: RigidTransform,
}

impl Attached<'_> {
    fn object_pose(&self, gripper: &RigidTransform) -> RigidTransform {
        gripper.compose(&self.offset)
    }
}

fn pose_collides(
    scene: &SceneState,
    attached: Option<&Attached>,
    gripper: &RigidTransform,
) -> Result<bool, PolicyError> {
    match attached {
        // The gripper itself is a bare frame with no collision body.
        None => Ok(false),
        Some(a) => Ok(check_collision(
            scene,
            a.object_id,
            &a.object_pose(gripper),
        )?),
    }
}

fn path_is_free(
    scene: &SceneState,
    attached: Option<&Attached>,
    waypoints: &[RigidTransform],
) -> Result<bool, PolicyError> {
    for w in waypoints {
        if pose_collides(scene, attached, w)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Geodesic interpolation from `start` to `goal` with translation steps
/// capped at `DEFAULT_STEP`. Endpoints are exactly the inputs.
fn interpolate(start: &RigidTransform, goal: &RigidTransform) -> Vec<RigidTransform> {
    let gap = (goal.translation() - start.translation()).norm();
    let rel = start.quaternion().rotation_to(&goal.quaternion());
    if gap < 1e-15 && rel.angle() < 1e-12 {
        return vec![*start];
    }
    let steps = ((gap / DEFAULT_STEP).ceil() as usize).max(1);
    let mut waypoints = Vec::with_capacity(steps + 1);
    waypoints.push(*start);
    for k in 1..steps {
        let s = k as f64 / steps as f64;
        let t = start.translation() + (goal.translation() - start.translation()) * s;
        let q = UnitQuaternion::from_scaled_axis(rel.scaled_axis() * s) * start.quaternion();
        waypoints.push(RigidTransform::from_quaternion(q, t));
    }
    waypoints.push(*goal);
    waypoints
}

/// Two-leg path through a via pose, without duplicating the via point.
fn via_path(
    start: &RigidTransform,
    via: &RigidTransform,
    goal: &RigidTransform,
) -> Vec<RigidTransform> {
    let mut path = interpolate(start, via);
    path.extend(interpolate(via, goal).into_iter().skip(1));
    path
}

fn sample_via(
    rng: &mut ChaCha8Rng,
    start: &RigidTransform,
    goal: &RigidTransform,
) -> RigidTransform {
    let mid = (start.translation() + goal.translation()) / 2.0;
    let gap = (goal.translation() - start.translation()).norm();
    let span = gap.max(0.2);
    let offset = Vector3::new(
        rng.random_range(-span..span),
        rng.random_range(-span..span),
        rng.random_range(0.0..span),
    );
    let rel = start.quaternion().rotation_to(&goal.quaternion());
    let q = UnitQuaternion::from_scaled_axis(rel.scaled_axis() * 0.5) * start.quaternion();
    RigidTransform::from_quaternion(q, mid + offset)
}

fn build_attached<'a>(
    scene: &SceneState,
    object_id: Option<&'a str>,
    start: &RigidTransform,
) -> Result<Option<Attached<'a>>, PolicyError> {
    match object_id {
        None => Ok(None),
        Some(id) => {
            let obj = scene.object(id)?;
            Ok(Some(Attached {
                object_id: id,
                offset: start.inverse().compose(&obj.pose),
            }))
        }
    }
}

/// First collision-free interpolated path: the straight path, then up to
/// fifty seeded via-point detours.
pub fn plan_trajectory(
    start: &RigidTransform,
    goal: &RigidTransform,
    scene: &SceneState,
    attached_object: Option<&str>,
    seed: u64,
) -> Result<Trajectory, PolicyError> {
    plan_trajectory_optimized(start, goal, scene, attached_object, 1, seed)
}

/// Collects up to `candidates` collision-free paths in the same seeded
/// order `plan_trajectory` searches, then returns the one minimizing
/// path length plus a clearance penalty.
pub fn plan_trajectory_optimized(
    start: &RigidTransform,
    goal: &RigidTransform,
    scene: &SceneState,
    attached_object: Option<&str>,
    candidates: usize,
    seed: u64,
) -> Result<Trajectory, PolicyError> {
    let wanted = candidates.max(1);
    let attached = build_attached(scene, attached_object, start)?;

    if pose_collides(scene, attached.as_ref(), goal)? {
        return Err(PolicyError::GoalInCollision);
    }
    if pose_collides(scene, attached.as_ref(), start)? {
        return Err(PolicyError::PlanningFailure);
    }

    let mut free: Vec<Vec<RigidTransform>> = Vec::new();
    let straight = interpolate(start, goal);
    if path_is_free(scene, attached.as_ref(), &straight)? {
        free.push(straight);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..VIA_ATTEMPTS {
        if free.len() >= wanted {
            break;
        }
        let via = sample_via(&mut rng, start, goal);
        let path = via_path(start, &via, goal);
        if path_is_free(scene, attached.as_ref(), &path)? {
            free.push(path);
        }
    }
    if free.is_empty() {
        return Err(PolicyError::PlanningFailure);
    }

    let mut best: Option<(f64, Vec<RigidTransform>)> = None;
    for path in free {
        let cost = path_cost(scene, attached.as_ref(), &path)?;
        if best.as_ref().is_none_or(|(c, _)| cost < *c) {
            best = Some((cost, path));
        }
    }
    Ok(Trajectory::holding(best.unwrap().1))
}

fn path_cost(
    scene: &SceneState,
    attached: Option<&Attached>,
    waypoints: &[RigidTransform],
) -> Result<f64, PolicyError> {
    let length: f64 = waypoints
        .windows(2)
        .map(|w| (w[1].translation() - w[0].translation()).norm())
        .sum();
    let Some(a) = attached else {
        return Ok(length);
    };
    let mut min_clearance = f64::INFINITY;
    for w in waypoints {
        let c = clearance(scene, a.object_id, &a.object_pose(w))?;
        min_clearance = min_clearance.min(c);
    }
    Ok(length + CLEARANCE_WEIGHT / min_clearance.max(CLEARANCE_FLOOR))
}

/// Cost the optimizer assigns a trajectory in `scene` with
/// `attached_object` riding the gripper from the first waypoint.
pub fn trajectory_cost(
    trajectory: &Trajectory,
    scene: &SceneState,
    attached_object: Option<&str>,
) -> Result<f64, PolicyError> {
    let attached = match trajectory.waypoints.first() {
        Some(first) => build_attached(scene, attached_object, first)?,
        None => None,
    };
    path_cost(scene, attached.as_ref(), &trajectory.waypoints)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{SceneObject, Shape, Table};
    use approx::assert_abs_diff_eq;

    fn pose_at(x: f64, y: f64, z: f64) -> RigidTransform {
        RigidTransform::from_translation(Vector3::new(x, y, z))
    }

    fn free_scene() -> SceneState {
        SceneState::new(
            vec![SceneObject {
                id: "ball".into(),
                shape: Shape::Sphere { radius: 0.02 },
                pose: pose_at(0.0, 0.0, 0.3),
                color: [200, 40, 40],
            }],
            Some(Table {
                size: [2.0, 2.0],
                height: 0.0,
            }),
        )
        .unwrap()
    }

    /// A wall splitting the table, with the ball on one side.
    fn wall_scene() -> SceneState {
        SceneState::new(
            vec![
                SceneObject {
                    id: "ball".into(),
                    shape: Shape::Sphere { radius: 0.02 },
                    pose: pose_at(-0.2, 0.0, 0.1),
                    color: [200, 40, 40],
                },
                SceneObject {
                    id: "wall".into(),
                    shape: Shape::Box {
                        size: Vector3::new(0.02, 0.6, 0.25),
                    },
                    pose: pose_at(0.0, 0.0, 0.125),
                    color: [90, 90, 90],
                },
            ],
            Some(Table {
                size: [2.0, 2.0],
                height: 0.0,
            }),
        )
        .unwrap()
    }

    #[test]
    fn identical_endpoints_yield_one_waypoint() {
        let p = pose_at(0.1, 0.2, 0.3);
        let traj = plan_trajectory(&p, &p, &free_scene(), None, 0).unwrap();
        assert_eq!(traj.len(), 1);
        assert_eq!(traj.waypoints[0], p);
        assert_eq!(traj.gripper_commands, vec![GripperCommand::Hold]);
    }

    #[test]
    fn straight_forty_centimeters_is_twenty_one_waypoints() {
        let start = pose_at(0.0, 0.0, 0.3);
        let goal = pose_at(0.4, 0.0, 0.3);
        let traj = plan_trajectory(&start, &goal, &free_scene(), None, 0).unwrap();
        assert_eq!(traj.len(), 21);
        assert_eq!(traj.waypoints[0], start);
        assert_eq!(*traj.waypoints.last().unwrap(), goal);
        assert!(traj.max_step() <= DEFAULT_STEP + 1e-12);
        assert_abs_diff_eq!(traj.path_length(), 0.4, epsilon = 1e-12);
    }

    #[test]
    fn goal_inside_table_is_rejected() {
        let scene = free_scene();
        let start = pose_at(0.0, 0.0, 0.3);
        // Carrying the ball down into the table slab.
        let goal = pose_at(0.3, 0.0, -0.02);
        assert!(matches!(
            plan_trajectory(&start, &goal, &scene, Some("ball"), 0),
            Err(PolicyError::GoalInCollision)
        ));
    }

    #[test]
    fn wall_forces_a_detour() {
        let scene = wall_scene();
        // Gripper holds the ball at its current pose; goal mirrors it
        // across the wall.
        let start = pose_at(-0.2, 0.0, 0.1);
        let goal = pose_at(0.2, 0.0, 0.1);
        let traj = plan_trajectory(&start, &goal, &scene, Some("ball"), 7).unwrap();

        assert_eq!(traj.waypoints[0], start);
        assert_eq!(*traj.waypoints.last().unwrap(), goal);
        assert!(traj.max_step() <= DEFAULT_STEP + 1e-12);
        assert!(traj.len() > 21, "must detour, not cut through the wall");

        // Independent re-check: every waypoint collision-free.
        for w in &traj.waypoints {
            let obj_pose = w.compose(&start.inverse()).compose(&scene.object("ball").unwrap().pose);
            assert!(!check_collision(&scene, "ball", &obj_pose).unwrap());
        }
    }

    #[test]
    fn rotation_only_move_interpolates() {
        let start = pose_at(0.1, 0.0, 0.3);
        let goal = RigidTransform::from_axis_angle(
            Vector3::z(),
            1.0,
            Vector3::new(0.1, 0.0, 0.3),
        );
        let traj = plan_trajectory(&start, &goal, &free_scene(), None, 0).unwrap();
        assert!(traj.len() >= 2);
        assert_eq!(*traj.waypoints.last().unwrap(), goal);
    }

    #[test]
    fn optimizer_prefers_straight_line_in_free_space() {
        let start = pose_at(-0.2, 0.1, 0.3);
        let goal = pose_at(0.2, -0.1, 0.4);
        let plain = plan_trajectory(&start, &goal, &free_scene(), None, 3).unwrap();
        let optimized =
            plan_trajectory_optimized(&start, &goal, &free_scene(), None, 5, 3).unwrap();
        assert_eq!(optimized, plain);
        assert_abs_diff_eq!(
            optimized.path_length(),
            (goal.translation() - start.translation()).norm(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn single_candidate_equals_plain_planner() {
        let scene = wall_scene();
        let start = pose_at(-0.2, 0.0, 0.1);
        let goal = pose_at(0.2, 0.0, 0.1);
        let plain = plan_trajectory(&start, &goal, &scene, Some("ball"), 42).unwrap();
        let optimized =
            plan_trajectory_optimized(&start, &goal, &scene, Some("ball"), 1, 42).unwrap();
        assert_eq!(plain, optimized);
    }

    #[test]
    fn optimizer_beats_or_matches_first_feasible_path() {
        let scene = wall_scene();
        let start = pose_at(-0.2, 0.0, 0.1);
        let goal = pose_at(0.2, 0.0, 0.1);
        let first = plan_trajectory_optimized(&start, &goal, &scene, Some("ball"), 1, 9).unwrap();
        let tuned = plan_trajectory_optimized(&start, &goal, &scene, Some("ball"), 8, 9).unwrap();

        let c_first = trajectory_cost(&first, &scene, Some("ball")).unwrap();
        let c_tuned = trajectory_cost(&tuned, &scene, Some("ball")).unwrap();
        assert!(c_tuned <= c_first);

        // The winning path keeps positive clearance along the way.
        let offset = start.inverse().compose(&scene.object("ball").unwrap().pose);
        for w in &tuned.waypoints {
            let pose = w.compose(&offset);
            assert!(clearance(&scene, "ball", &pose).unwrap() > 0.0);
        }
    }

    #[test]
    fn unreachable_goal_exhausts_the_budget() {
        // A box fully enclosing the ball's goal region: table below,
        // walls all around, lid above.
        let mut objects = vec![SceneObject {
            id: "ball".into(),
            shape: Shape::Sphere { radius: 0.02 },
            pose: pose_at(-0.4, 0.0, 0.1),
            color: [200, 40, 40],
        }];
        let walls = [
            (Vector3::new(0.02, 0.3, 0.3), pose_at(0.15, 0.0, 0.15)),
            (Vector3::new(0.02, 0.3, 0.3), pose_at(-0.15, 0.0, 0.15)),
            (Vector3::new(0.3, 0.02, 0.3), pose_at(0.0, 0.15, 0.15)),
            (Vector3::new(0.3, 0.02, 0.3), pose_at(0.0, -0.15, 0.15)),
            (Vector3::new(0.3, 0.3, 0.02), pose_at(0.0, 0.0, 0.3)),
        ];
        for (i, (size, pose)) in walls.into_iter().enumerate() {
            objects.push(SceneObject {
                id: format!("wall{i}"),
                shape: Shape::Box { size },
                pose,
                color: [90, 90, 90],
            });
        }
        let scene = SceneState::new(
            objects,
            Some(Table {
                size: [2.0, 2.0],
                height: 0.0,
            }),
        )
        .unwrap();

        let start = pose_at(-0.4, 0.0, 0.1);
        let goal = pose_at(0.0, 0.0, 0.1);
        assert!(matches!(
            plan_trajectory(&start, &goal, &scene, Some("ball"), 1),
            Err(PolicyError::PlanningFailure)
        ));
    }

    #[test]
    fn csv_export_lists_every_waypoint() {
        let start = pose_at(0.0, 0.0, 0.3);
        let goal = pose_at(0.1, 0.0, 0.3);
        let traj = plan_trajectory(&start, &goal, &free_scene(), None, 0).unwrap();
        let csv = traj.to_csv();
        let lines: Vec<&str> = csv.trim_end().lines().collect();
        assert_eq!(lines.len(), traj.len() + 1);
        assert!(lines[0].starts_with("index,x,y,z"));
        assert!(lines[1].starts_with("0,"));
    }
}
