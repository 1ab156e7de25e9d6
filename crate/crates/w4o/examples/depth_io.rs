//! Round-trips a rendered depth map through the binary file format and
//! confirms back-projection inverts the pinhole projection exactly.

use std::fs;

use w4o::geometry::DepthMap;
use w4o::scene::{default_camera, render, sample_layout};

fn main() {
    let scene = sample_layout("take-off-rack", 4).unwrap();
    let camera = default_camera("take-off-rack").unwrap();
    let depth = render(&scene, &camera).depth;

    fs::create_dir_all("out").unwrap();
    fs::write("out/depth.bin", depth.to_binary()).unwrap();
    let restored = DepthMap::read_binary(fs::File::open("out/depth.bin").unwrap()).unwrap();
    // The file stores f32, so one write quantizes; after that the bytes
    // are a fixed point.
    assert_eq!(restored.to_binary(), depth.to_binary());
    assert_eq!(restored.valid_count(), depth.valid_count());
    println!(
        "depth round trip stable: {}x{}, {} valid px, file {} bytes",
        depth.width(),
        depth.height(),
        depth.valid_count(),
        8 + 4 * (depth.width() * depth.height()) as usize,
    );

    let mut worst = 0.0f64;
    let mut lifted = 0usize;
    for v in 0..restored.height() {
        for u in 0..restored.width() {
            let Some(d) = restored.get(u, v) else { continue };
            let world = camera.pose.apply(&camera.unproject(u as f64, v as f64, d));
            let (pu, pv, pd) = camera.project(&camera.world_to_camera(&world)).unwrap();
            worst = worst
                .max((pu - u as f64).abs())
                .max((pv - v as f64).abs())
                .max((pd - d).abs());
            lifted += 1;
        }
    }
    println!("lifted and reprojected {lifted} pixels, worst residual {worst:.2e}");
}
