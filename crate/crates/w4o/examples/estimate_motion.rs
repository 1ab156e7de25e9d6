//! Registers the current object points against a subgoal prediction and
//! recovers the commanded rigid motion, with both correspondence
//! backends side by side.

use w4o::agents::{oracle_suite, reflective_generate};
use w4o::policy::{estimate_goal_transform, match_correspondences, Matcher};
use w4o::scene::{default_camera, observe, oracle_future_scene, sample_layout, SceneRegistry};

fn main() {
    let scene = sample_layout("pick-place", 8).unwrap();
    let camera = default_camera("pick-place").unwrap();
    let registry = SceneRegistry::new();
    let suite = oracle_suite(registry.clone(), camera);

    let obs = observe(&scene, &camera).unwrap();
    registry.record(&obs.image, &scene);

    let subtask = "Move the tomato vertically upward";
    let goal = reflective_generate(&suite, &obs, &obs.image, subtask, "tomato", 3).unwrap();

    let truth_scene = oracle_future_scene(&scene, subtask).unwrap();
    let truth = truth_scene
        .object("tomato")
        .unwrap()
        .pose
        .translation()
        - scene.object("tomato").unwrap().pose.translation();
    println!("commanded motion: ({:+.3}, {:+.3}, {:+.3}) m", truth.x, truth.y, truth.z);

    for (name, matcher) in [
        ("oracle  ", Matcher::Oracle(registry.clone())),
        ("fallback", Matcher::Fallback),
    ] {
        let corr = match_correspondences(&obs, &goal, "tomato", &matcher).unwrap();
        let (motion, rmse) = estimate_goal_transform(&corr, &obs.cloud, &goal.cloud).unwrap();
        let t = motion.translation();
        println!(
            "{name} matcher: {} pairs  ->  ({:+.4}, {:+.4}, {:+.4}) m  rmse {:.2e}",
            corr.len(),
            t.x,
            t.y,
            t.z,
            rmse
        );
    }
}
