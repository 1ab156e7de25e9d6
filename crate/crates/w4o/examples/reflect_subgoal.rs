//! Generates one subgoal image through the propose-critique-revise loop
//! and lifts it to a metric point cloud.

use std::sync::Arc;

use w4o::agents::{oracle_suite, reflective_generate, ScriptedCritic, ReflectionVerdict};
use w4o::scene::{default_camera, observe, sample_layout, SceneRegistry};

fn main() {
    let scene = sample_layout("pick-place", 2).unwrap();
    let camera = default_camera("pick-place").unwrap();
    let registry = SceneRegistry::new();
    let mut suite = oracle_suite(registry.clone(), camera);

    let obs = observe(&scene, &camera).unwrap();
    registry.record(&obs.image, &scene);

    let subtask = "Move the tomato vertically upward";
    let prediction = reflective_generate(&suite, &obs, &obs.image, subtask, "tomato", 3).unwrap();
    let before = obs.cloud.filter_label(obs.labels["tomato"]).centroid().unwrap();
    let after = prediction.cloud.filter_label(1).centroid().unwrap();
    println!("oracle critic accepted in {} iteration(s)", prediction.iterations_used);
    println!("object centroid rose {:.3} m (cloud: {} points)", after.z - before.z, prediction.cloud.len());

    // A critic that rejects the first candidate forces a second dreamer
    // call carrying the revised prompt.
    suite.critic = Arc::new(ScriptedCritic::new([
        Ok(ReflectionVerdict::revise(subtask, "pose is off, regenerate")),
        Ok(ReflectionVerdict::Accept {
            rationale: "matches the instruction".into(),
        }),
    ]));
    let retried = reflective_generate(&suite, &obs, &obs.image, subtask, "tomato", 3).unwrap();
    println!(
        "scripted revise-then-accept took {} iterations; prompts used: {:?}",
        retried.iterations_used, retried.prompt_history
    );
}
