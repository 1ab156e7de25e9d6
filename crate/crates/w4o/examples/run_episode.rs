//! Runs one full episode: plan, generate subgoals, register, grasp,
//! transport, and score against the goal tolerances.

use w4o::orchestrator::{run_episode, EpisodeConfig, Mode};
use w4o::policy::Outcome;

fn main() {
    let mut config = EpisodeConfig::new("take-off-rack", 2, "Take the plate off the rack");
    config.mode = Mode::OpenLoop;

    let report = run_episode(&config);

    let plan = report.plan.as_ref().expect("planning succeeded");
    println!("plan:");
    for (s, t) in plan.subtasks.iter().zip(&plan.targets) {
        println!("  [{t}] {s}");
    }

    println!("\nexecution:");
    for r in &report.records {
        match &r.outcome {
            Outcome::Succeeded => {
                let motion = r.estimated_motion.as_ref().unwrap().translation();
                println!(
                    "  step {}: ok  motion ({:+.3}, {:+.3}, {:+.3}) m  rmse {:.2e}  {} waypoints",
                    r.subtask_index + 1,
                    motion.x,
                    motion.y,
                    motion.z,
                    r.registration_rmse.unwrap(),
                    r.trajectory.as_ref().unwrap().len()
                );
            }
            Outcome::Failed(reason) => println!("  step {}: FAILED: {reason}", r.subtask_index + 1),
        }
    }

    println!(
        "\nsuccess: {}  (subgoal iterations {:?}, total {:.2} s)",
        report.success, report.subgoal_iterations, report.timings.total_s
    );
    if let Some(reason) = &report.failure {
        println!("failure: {reason}");
    }
}
