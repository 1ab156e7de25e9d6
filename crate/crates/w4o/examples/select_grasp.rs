//! Proposes antipodal grasp candidates on an observed object and picks
//! the best one near the matched contact points.

use w4o::policy::{filter_grasps, observe, propose_grasps};
use w4o::scene::{default_camera, sample_layout};

fn main() {
    let scene = sample_layout("pick-place", 5).unwrap();
    let camera = default_camera("pick-place").unwrap();
    let obs = observe(&scene, &camera).unwrap();

    let tomato = obs.cloud.filter_label(obs.labels["tomato"]);
    println!("tomato cloud: {} points", tomato.len());

    let grasps = propose_grasps(&tomato, 10).unwrap();
    println!("{} candidates:", grasps.len());
    for (i, g) in grasps.iter().enumerate() {
        let t = g.pose.translation();
        println!(
            "  #{i}: score {:.3}  width {:.3} m  at ({:+.3}, {:+.3}, {:+.3})",
            g.score, g.width, t.x, t.y, t.z
        );
    }

    let chosen = filter_grasps(&grasps, &tomato, 0.05).unwrap();
    println!(
        "\nchosen grasp: score {:.3}, width {:.3} m, {:.3} m above the table",
        chosen.score,
        chosen.width,
        chosen.pose.translation().z
    );

    // Tightening the threshold until nothing qualifies is reported, not
    // silently tolerated.
    match filter_grasps(&grasps, &tomato, 1e-9) {
        Err(e) => println!("threshold 1e-9 m: {e}"),
        Ok(_) => unreachable!("no grasp can sit within a nanometer of the cloud"),
    }
}
