//! Plans a collision-free transport of a grasped plate from above a rack
//! to a hover pose past it: the straight line clips the rack, forcing a
//! detour, and the optimizer ranks feasible detours by cost.

use nalgebra::Vector3;
use w4o::geometry::RigidTransform;
use w4o::policy::{plan_trajectory, plan_trajectory_optimized, trajectory_cost, DEFAULT_STEP};
use w4o::scene::sample_layout;

fn main() {
    let scene = sample_layout("take-off-rack", 3).unwrap();
    let plate = scene.object("plate").unwrap().pose.translation();
    // Post-grasp: lifted just off the rack. Pre-place: hovering past it.
    let start = RigidTransform::from_translation(plate + Vector3::new(0.0, 0.0, 0.02));
    let goal = RigidTransform::from_translation(plate + Vector3::new(-0.26, 0.0, -0.04));
    let straight = (goal.translation() - start.translation()).norm();

    let path = plan_trajectory(&start, &goal, &scene, Some("plate"), 0).unwrap();
    let cost = trajectory_cost(&path, &scene, Some("plate")).unwrap();
    println!(
        "first feasible: {} waypoints, length {:.3} m (straight line {:.3} m), max step {:.3} m (cap {DEFAULT_STEP})",
        path.len(),
        path.path_length(),
        straight,
        path.max_step()
    );
    println!(
        "cost {:.4} = {:.3} m length + {:.4} clearance penalty",
        cost,
        path.path_length(),
        cost - path.path_length()
    );

    let best = plan_trajectory_optimized(&start, &goal, &scene, Some("plate"), 8, 0).unwrap();
    let best_cost = trajectory_cost(&best, &scene, Some("plate")).unwrap();
    println!(
        "best of 8: {} waypoints, length {:.3} m, cost {:.4}",
        best.len(),
        best.path_length(),
        best_cost
    );
    assert!(best_cost <= cost + 1e-12);

    let first = best.waypoints.first().unwrap().translation();
    let last = best.waypoints.last().unwrap().translation();
    println!(
        "endpoints: ({:+.3}, {:+.3}, {:+.3}) -> ({:+.3}, {:+.3}, {:+.3})",
        first.x, first.y, first.z, last.x, last.y, last.z
    );
}
