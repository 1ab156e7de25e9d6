//! Decomposes a task into subtasks and chains subgoal generation across
//! the whole plan, each generated image seeding the next.

use w4o::agents::{chain_subgoals, oracle_suite, plan_subtasks};
use w4o::scene::{default_camera, observe, sample_layout, SceneRegistry};

fn main() {
    let scene = sample_layout("pick-place", 1).unwrap();
    let camera = default_camera("pick-place").unwrap();
    let registry = SceneRegistry::new();
    let suite = oracle_suite(registry.clone(), camera);

    let obs = observe(&scene, &camera).unwrap();
    registry.record(&obs.image, &scene);

    let plan = plan_subtasks(&suite, "Put the tomato in the pan", &obs.image).unwrap();
    println!("plan for \"Put the tomato in the pan\":");
    for (subtask, target) in plan.subtasks.iter().zip(&plan.targets) {
        println!("  [{target}] {subtask}");
    }

    let predictions = chain_subgoals(&suite, &obs, &plan, 3).unwrap();
    println!("\nchained subgoals:");
    for (i, p) in predictions.iter().enumerate() {
        let c = p.cloud.filter_label(1).centroid().unwrap();
        println!(
            "  step {}: object at ({:+.3}, {:+.3}, {:+.3}) after {} iteration(s)",
            i + 1,
            c.x,
            c.y,
            c.z,
            p.iterations_used
        );
    }
    let pan = scene.object("pan").unwrap().pose.translation();
    let last = predictions.last().unwrap().cloud.filter_label(1).centroid().unwrap();
    println!(
        "\nfinal object centroid is {:.3} m from the pan axis",
        ((last.x - pan.x).powi(2) + (last.y - pan.y).powi(2)).sqrt()
    );
}
