//! Recovers a known rigid motion between two point clouds, first from
//! clean correspondences, then from noisy and uniformly rescaled ones.

use nalgebra::Vector3;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use w4o::geometry::{umeyama_align, PointCloud, RigidTransform};

fn scatter(rng: &mut StdRng, n: usize) -> PointCloud {
    PointCloud::new(
        (0..n)
            .map(|_| {
                Vector3::new(
                    rng.random_range(-0.3..0.3),
                    rng.random_range(-0.3..0.3),
                    rng.random_range(0.0..0.2),
                )
            })
            .collect(),
    )
}

fn main() {
    let mut rng = StdRng::seed_from_u64(7);
    let truth = RigidTransform::from_axis_angle(
        Vector3::new(0.2, 1.0, -0.3).normalize(),
        0.8,
        Vector3::new(0.05, -0.12, 0.30),
    );

    let src = scatter(&mut rng, 400);
    let dst = PointCloud::new(src.points.iter().map(|p| truth.apply(p)).collect());

    let clean = umeyama_align(&src, &dst, false).unwrap();
    let (t_err, r_err) = clean.transform.pose_error(&truth);
    println!("clean fit:  rmse {:.2e}  translation err {:.2e} m  rotation err {:.2e} deg", clean.rmse, t_err, r_err);

    let noisy_dst = PointCloud::new(
        dst.points
            .iter()
            .map(|p| {
                p + 0.002
                    * Vector3::new(
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1.0..1.0),
                    )
            })
            .collect(),
    );
    let noisy = umeyama_align(&src, &noisy_dst, false).unwrap();
    let (t_err, r_err) = noisy.transform.pose_error(&truth);
    println!("noisy fit:  rmse {:.2e}  translation err {:.2e} m  rotation err {:.2e} deg", noisy.rmse, t_err, r_err);

    // A depth estimator that is off by a constant factor shrinks the
    // whole cloud; estimating scale recovers the factor alongside the pose.
    let shrunk_src = PointCloud::new(src.points.iter().map(|p| 0.6 * p).collect());
    let scaled = umeyama_align(&shrunk_src, &dst, true).unwrap();
    println!("scaled fit: recovered scale {:.6} (true 1/0.6 = {:.6})", scaled.scale, 1.0 / 0.6);
}
