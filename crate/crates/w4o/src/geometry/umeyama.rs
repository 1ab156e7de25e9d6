use nalgebra::{Matrix3, Vector3};

use super::{GeometryError, PointCloud, RigidTransform};

/// Singular values below this fraction of the largest are treated as zero
/// when deciding whether the source covariance is degenerate.
const RANK_TOL: f64 = 1e-9;

/// Index pairs declaring which source point matches which destination point,
/// with optional non-negative per-pair weights.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CorrespondenceSet {
    pairs: Vec<(usize, usize)>,
    weights: Option<Vec<f64>>,
}

impl CorrespondenceSet {
    /// Unweighted pairs. Source indices must be unique.
    pub fn new(pairs: Vec<(usize, usize)>) -> Result<Self, GeometryError> {
        check_unique_sources(&pairs)?;
        Ok(Self {
            pairs,
            weights: None,
        })
    }

    pub fn with_weights(
        pairs: Vec<(usize, usize)>,
        weights: Vec<f64>,
    ) -> Result<Self, GeometryError> {
        check_unique_sources(&pairs)?;
        if weights.len() != pairs.len() {
            return Err(GeometryError::InvalidCorrespondences(format!(
                "{} weights for {} pairs",
                weights.len(),
                pairs.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(GeometryError::InvalidCorrespondences(
                "weights must be finite and non-negative".into(),
            ));
        }
        Ok(Self {
            pairs,
            weights: Some(weights),
        })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    pub fn validate(&self, src_len: usize, dst_len: usize) -> Result<(), GeometryError> {
        for &(s, d) in &self.pairs {
            if s >= src_len || d >= dst_len {
                return Err(GeometryError::InvalidCorrespondences(format!(
                    "pair ({s}, {d}) out of bounds for clouds of {src_len} and {dst_len} points"
                )));
            }
        }
        Ok(())
    }

    /// Gathers the paired points into two index-aligned clouds ready for
    /// [`umeyama_align`].
    pub fn gather(
        &self,
        src: &PointCloud,
        dst: &PointCloud,
    ) -> Result<(PointCloud, PointCloud), GeometryError> {
        self.validate(src.len(), dst.len())?;
        let mut a = Vec::with_capacity(self.pairs.len());
        let mut b = Vec::with_capacity(self.pairs.len());
        for &(s, d) in &self.pairs {
            a.push(src.points[s]);
            b.push(dst.points[d]);
        }
        Ok((PointCloud::new(a), PointCloud::new(b)))
    }
}

fn check_unique_sources(pairs: &[(usize, usize)]) -> Result<(), GeometryError> {
    let mut seen: Vec<usize> = pairs.iter().map(|(s, _)| *s).collect();
    seen.sort_unstable();
    if seen.windows(2).any(|w| w[0] == w[1]) {
        return Err(GeometryError::InvalidCorrespondences(
            "duplicate source index".into(),
        ));
    }
    Ok(())
}

/// Result of a least-squares alignment: `dst ≈ scale · R · src + t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Alignment {
    pub transform: RigidTransform,
    pub scale: f64,
    pub rmse: f64,
}

/// Closed-form least-squares estimate of the rigid motion (optionally with a
/// uniform scale) mapping `src` onto `dst`. Points are index-paired.
///
/// Minimizes Σᵢ ‖dstᵢ − (c·R·srcᵢ + t)‖² over proper rotations R. The SVD
/// sign correction guarantees det(R) = +1 even when the unconstrained
/// optimum is a reflection.
pub fn umeyama_align(
    src: &PointCloud,
    dst: &PointCloud,
    estimate_scale: bool,
) -> Result<Alignment, GeometryError> {
    let ones = vec![1.0; src.len()];
    umeyama_align_weighted(src, dst, &ones, estimate_scale)
}

/// Weighted variant of [`umeyama_align`]. Weights must be finite and
/// non-negative with a positive sum; centroids and the cross-covariance are
/// weight-averaged.
pub fn umeyama_align_weighted(
    src: &PointCloud,
    dst: &PointCloud,
    weights: &[f64],
    estimate_scale: bool,
) -> Result<Alignment, GeometryError> {
    let n = src.len();
    if dst.len() != n || weights.len() != n {
        return Err(GeometryError::DimensionMismatch(format!(
            "src {} / dst {} / weights {}",
            n,
            dst.len(),
            weights.len()
        )));
    }
    if n < 3 {
        return Err(GeometryError::TooFewPoints(n));
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(GeometryError::InvalidCorrespondences(
            "weights must be finite and non-negative".into(),
        ));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(GeometryError::InvalidCorrespondences(
            "weights sum to zero".into(),
        ));
    }

    let mut mu_src = Vector3::zeros();
    let mut mu_dst = Vector3::zeros();
    for i in 0..n {
        mu_src += weights[i] * src.points[i];
        mu_dst += weights[i] * dst.points[i];
    }
    mu_src /= total;
    mu_dst /= total;

    // Cross-covariance Σ = (1/W)·Σ wᵢ·(dstᵢ−μ_dst)(srcᵢ−μ_src)ᵀ and the
    // source variance σ² = (1/W)·Σ wᵢ‖srcᵢ−μ_src‖².
    let mut sigma = Matrix3::zeros();
    let mut src_var = 0.0;
    for i in 0..n {
        let ds = src.points[i] - mu_src;
        let dd = dst.points[i] - mu_dst;
        sigma += weights[i] * dd * ds.transpose();
        src_var += weights[i] * ds.norm_squared();
    }
    sigma /= total;
    src_var /= total;

    let svd = sigma.svd(true, true);
    let u = svd.u.expect("svd requested u");
    let v_t = svd.v_t.expect("svd requested v_t");
    let d = svd.singular_values;
    if d[0] <= 0.0 || d[1] < RANK_TOL * d[0] {
        return Err(GeometryError::DegenerateConfiguration);
    }

    let sign = (u.determinant() * v_t.determinant()).signum();
    let rotation = u * Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, sign)) * v_t;
    let scale = if estimate_scale {
        (d[0] + d[1] + sign * d[2]) / src_var
    } else {
        1.0
    };
    let translation = mu_dst - scale * rotation * mu_src;

    let mut sq_err = 0.0;
    for i in 0..n {
        let residual = dst.points[i] - (scale * rotation * src.points[i] + translation);
        sq_err += weights[i] * residual.norm_squared();
    }
    let rmse = (sq_err / total).sqrt();

    let transform = RigidTransform::new(rotation, translation)?;
    Ok(Alignment {
        transform,
        scale,
        rmse,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::RigidTransform;
    use approx::assert_abs_diff_eq;
    use nalgebra::UnitQuaternion;
    use proptest::prelude::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_rotation(rng: &mut ChaCha8Rng) -> Matrix3<f64> {
        let q = UnitQuaternion::new_normalize(nalgebra::Quaternion::new(
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        ));
        q.to_rotation_matrix().into_inner()
    }

    fn random_cloud(rng: &mut ChaCha8Rng, n: usize) -> PointCloud {
        PointCloud::new(
            (0..n)
                .map(|_| {
                    Vector3::new(
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1.0..1.0),
                    )
                })
                .collect(),
        )
    }

    fn transformed(cloud: &PointCloud, t: &RigidTransform, scale: f64) -> PointCloud {
        PointCloud::new(
            cloud
                .points
                .iter()
                .map(|p| scale * t.rotation() * p + t.translation())
                .collect(),
        )
    }

    fn tripod() -> PointCloud {
        PointCloud::new(vec![
            Vector3::new(0.0, 0.0, 0.0),
            Vector3::new(1.0, 0.0, 0.0),
            Vector3::new(0.0, 1.0, 0.0),
            Vector3::new(0.0, 0.0, 1.0),
        ])
    }

    #[test]
    fn identity_alignment() {
        let cloud = tripod();
        let a = umeyama_align(&cloud, &cloud, false).unwrap();
        assert_abs_diff_eq!(*a.transform.rotation(), Matrix3::identity(), epsilon = 1e-12);
        assert_abs_diff_eq!(*a.transform.translation(), Vector3::zeros(), epsilon = 1e-12);
        assert_eq!(a.scale, 1.0);
        assert!(a.rmse < 1e-12);
    }

    #[test]
    fn pure_translation() {
        let src = tripod();
        let shift = Vector3::new(1.0, 2.0, 3.0);
        let dst = PointCloud::new(src.points.iter().map(|p| p + shift).collect());
        let a = umeyama_align(&src, &dst, false).unwrap();
        assert_abs_diff_eq!(*a.transform.rotation(), Matrix3::identity(), epsilon = 1e-12);
        assert_abs_diff_eq!(*a.transform.translation(), shift, epsilon = 1e-12);
        assert!(a.rmse < 1e-12);
    }

    #[test]
    fn construct_then_recover_100_random_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let src = random_cloud(&mut rng, 10);
            let truth = RigidTransform::new(
                random_rotation(&mut rng),
                Vector3::new(
                    rng.random_range(-2.0..2.0),
                    rng.random_range(-2.0..2.0),
                    rng.random_range(-2.0..2.0),
                ),
            )
            .unwrap();
            let dst = transformed(&src, &truth, 1.0);
            let a = umeyama_align(&src, &dst, false).unwrap();
            let (t_err, r_err) = a.transform.pose_error(&truth);
            assert!(r_err < 1e-6, "rotation error {r_err} deg");
            assert!(t_err < 1e-9, "translation error {t_err} m");
            assert!(a.rmse < 1e-9);
        }
    }

    #[test]
    fn scale_recovery() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let src = random_cloud(&mut rng, 20);
        let truth = RigidTransform::new(
            random_rotation(&mut rng),
            Vector3::new(0.3, -0.1, 0.7),
        )
        .unwrap();
        let dst = transformed(&src, &truth, 2.0);
        let with_scale = umeyama_align(&src, &dst, true).unwrap();
        assert_abs_diff_eq!(with_scale.scale, 2.0, epsilon = 1e-9);
        assert!(with_scale.rmse < 1e-9);
        let rigid_only = umeyama_align(&src, &dst, false).unwrap();
        assert_eq!(rigid_only.scale, 1.0);
        assert!(rigid_only.rmse > 0.1);
    }

    /// Residual of `dst ≈ R·src + t` with the translation chosen optimally
    /// for the given rotation. Independent of the estimator under test.
    fn best_residual_for_rotation(src: &PointCloud, dst: &PointCloud, r: &Matrix3<f64>) -> f64 {
        let n = src.len() as f64;
        let mu_src = src.centroid().unwrap();
        let mu_dst = dst.centroid().unwrap();
        let t = mu_dst - r * mu_src;
        let sq: f64 = src
            .points
            .iter()
            .zip(&dst.points)
            .map(|(s, d)| (d - (r * s + t)).norm_squared())
            .sum();
        (sq / n).sqrt()
    }

    #[test]
    fn planar_mirror_keeps_rotation_proper() {
        // A mirrored planar cloud lures the unconstrained optimum into a
        // reflection; the sign correction must pick a proper rotation that
        // still reproduces the in-plane mirror exactly.
        let src = PointCloud::new(vec![
            Vector3::new(0.0, 0.0, 0.0),
            Vector3::new(1.0, 0.0, 0.0),
            Vector3::new(0.0, 0.5, 0.0),
            Vector3::new(1.0, 0.5, 0.0),
            Vector3::new(0.3, 0.2, 0.0),
        ]);
        let dst = PointCloud::new(
            src.points
                .iter()
                .map(|p| Vector3::new(-p.x, p.y, p.z))
                .collect(),
        );
        let a = umeyama_align(&src, &dst, false).unwrap();
        assert_abs_diff_eq!(a.transform.rotation().determinant(), 1.0, epsilon = 1e-9);
        assert!(a.rmse < 1e-12, "mirror about y is a 180° y-rotation on z=0 points");

        // Exhaustive grid search over single-axis rotations confirms no
        // better proper rotation exists in that family.
        let axes = [Vector3::x_axis(), Vector3::y_axis(), Vector3::z_axis()];
        let mut grid_best = f64::INFINITY;
        for axis in axes {
            for k in 0..1440 {
                let angle = k as f64 * std::f64::consts::PI / 720.0;
                let r = nalgebra::Rotation3::from_axis_angle(&axis, angle).into_inner();
                grid_best = grid_best.min(best_residual_for_rotation(&src, &dst, &r));
            }
        }
        assert!(a.rmse <= grid_best + 1e-9);
    }

    #[test]
    fn planar_in_plane_rotation_matches_grid_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let src = PointCloud::new(
            (0..40)
                .map(|_| Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), 0.0))
                .collect(),
        );
        let truth_angle = 0.6111_f64;
        let r_true = nalgebra::Rotation3::from_axis_angle(&Vector3::z_axis(), truth_angle).into_inner();
        let dst = PointCloud::new(
            src.points
                .iter()
                .map(|p| {
                    r_true * p
                        + Vector3::new(
                            0.1 + 0.002 * rng.random_range(-1.0..1.0),
                            -0.2 + 0.002 * rng.random_range(-1.0..1.0),
                            0.0,
                        )
                })
                .collect(),
        );
        let a = umeyama_align(&src, &dst, false).unwrap();
        assert_abs_diff_eq!(a.transform.rotation().determinant(), 1.0, epsilon = 1e-9);

        // Brute-force sweep of in-plane angles at 0.25° resolution.
        let mut best_angle = 0.0;
        let mut best = f64::INFINITY;
        for k in 0..2880 {
            let angle = -std::f64::consts::PI + k as f64 * std::f64::consts::PI / 1440.0;
            let r = nalgebra::Rotation3::from_axis_angle(&Vector3::z_axis(), angle).into_inner();
            let res = best_residual_for_rotation(&src, &dst, &r);
            if res < best {
                best = res;
                best_angle = angle;
            }
        }
        let recovered = UnitQuaternion::from_matrix(a.transform.rotation()).angle();
        assert_abs_diff_eq!(recovered, best_angle.abs(), epsilon = 0.005);
        assert!(a.rmse <= best + 1e-9);
    }

    #[test]
    fn monte_carlo_optimality_under_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let src = random_cloud(&mut rng, 50);
        let truth = RigidTransform::new(
            random_rotation(&mut rng),
            Vector3::new(0.4, 0.1, -0.3),
        )
        .unwrap();
        let dst = PointCloud::new(
            src.points
                .iter()
                .map(|p| {
                    truth.apply(p)
                        + 0.005
                            * Vector3::new(
                                rng.sample::<f64, _>(StandardNormal),
                                rng.sample::<f64, _>(StandardNormal),
                                rng.sample::<f64, _>(StandardNormal),
                            )
                })
                .collect(),
        );
        let a = umeyama_align(&src, &dst, false).unwrap();
        for _ in 0..1000 {
            let axis = Vector3::new(
                rng.sample::<f64, _>(StandardNormal),
                rng.sample::<f64, _>(StandardNormal),
                rng.sample::<f64, _>(StandardNormal),
            );
            let nudge_r = nalgebra::Rotation3::from_scaled_axis(
                axis.normalize() * rng.random_range(1e-4..0.1),
            )
            .into_inner();
            let nudge_t = Vector3::new(
                rng.random_range(-0.02..0.02),
                rng.random_range(-0.02..0.02),
                rng.random_range(-0.02..0.02),
            );
            let r = nudge_r * a.transform.rotation();
            let perturbed =
                best_residual_for_rotation(&src, &dst, &r).min({
                    let t = a.transform.translation() + nudge_t;
                    let sq: f64 = src
                        .points
                        .iter()
                        .zip(&dst.points)
                        .map(|(s, d)| (d - (r * s + t)).norm_squared())
                        .sum();
                    (sq / src.len() as f64).sqrt()
                });
            assert!(
                perturbed + 1e-12 >= a.rmse,
                "perturbed residual {perturbed} beat rmse {}",
                a.rmse
            );
        }
    }

    #[test]
    fn too_few_points() {
        let two = PointCloud::new(vec![Vector3::zeros(), Vector3::x()]);
        assert!(matches!(
            umeyama_align(&two, &two, false),
            Err(GeometryError::TooFewPoints(2))
        ));
    }

    #[test]
    fn collinear_points_are_degenerate() {
        let line = PointCloud::new(vec![
            Vector3::new(0.0, 0.0, 0.0),
            Vector3::new(1.0, 1.0, 1.0),
            Vector3::new(2.0, 2.0, 2.0),
            Vector3::new(3.0, 3.0, 3.0),
        ]);
        assert!(matches!(
            umeyama_align(&line, &line, false),
            Err(GeometryError::DegenerateConfiguration)
        ));
    }

    #[test]
    fn zero_weight_pairs_are_ignored() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let src = random_cloud(&mut rng, 12);
        let truth = RigidTransform::new(
            random_rotation(&mut rng),
            Vector3::new(-0.2, 0.5, 0.1),
        )
        .unwrap();
        let mut dst = transformed(&src, &truth, 1.0);
        // Corrupt two destination points and zero out their weights.
        dst.points[3] += Vector3::new(5.0, -5.0, 5.0);
        dst.points[8] += Vector3::new(-9.0, 0.0, 2.0);
        let mut weights = vec![1.0; 12];
        weights[3] = 0.0;
        weights[8] = 0.0;
        let a = umeyama_align_weighted(&src, &dst, &weights, false).unwrap();
        let (t_err, r_err) = a.transform.pose_error(&truth);
        assert!(t_err < 1e-9 && r_err < 1e-6);
        assert!(a.rmse < 1e-9);
    }

    #[test]
    fn correspondence_validation() {
        assert!(CorrespondenceSet::new(vec![(0, 1), (0, 2)]).is_err());
        assert!(CorrespondenceSet::with_weights(vec![(0, 0)], vec![-1.0]).is_err());
        assert!(CorrespondenceSet::with_weights(vec![(0, 0), (1, 1)], vec![1.0]).is_err());

        let cs = CorrespondenceSet::new(vec![(0, 1), (1, 0)]).unwrap();
        let cloud = PointCloud::new(vec![Vector3::zeros(), Vector3::x()]);
        assert!(cs.validate(2, 2).is_ok());
        assert!(cs.validate(1, 2).is_err());
        let (a, b) = cs.gather(&cloud, &cloud).unwrap();
        assert_eq!(a.points[0], cloud.points[0]);
        assert_eq!(b.points[0], cloud.points[1]);
    }

    proptest! {
        /// Applying one rigid motion G to both clouds conjugates the
        /// estimate: align(G·src, G·dst) = G · align(src, dst) · G⁻¹.
        #[test]
        fn conjugation_invariance(
            seed in 0u64..1000,
            axis_x in -1.0f64..1.0,
            axis_y in -1.0f64..1.0,
            axis_z in -1.0f64..1.0,
            angle in -3.0f64..3.0,
            tx in -2.0f64..2.0,
            ty in -2.0f64..2.0,
            tz in -2.0f64..2.0,
        ) {
            let axis = Vector3::new(axis_x, axis_y, axis_z);
            prop_assume!(axis.norm() > 1e-3);
            let g = RigidTransform::from_axis_angle(axis, angle, Vector3::new(tx, ty, tz));

            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let src = random_cloud(&mut rng, 15);
            let truth = RigidTransform::new(
                random_rotation(&mut rng),
                Vector3::new(0.2, -0.4, 0.6),
            ).unwrap();
            let dst = PointCloud::new(
                src.points
                    .iter()
                    .map(|p| truth.apply(p) + 0.003 * Vector3::new(
                        rng.sample::<f64, _>(StandardNormal),
                        rng.sample::<f64, _>(StandardNormal),
                        rng.sample::<f64, _>(StandardNormal),
                    ))
                    .collect(),
            );

            let base = umeyama_align(&src, &dst, false).unwrap();
            let moved_src = PointCloud::new(src.points.iter().map(|p| g.apply(p)).collect());
            let moved_dst = PointCloud::new(dst.points.iter().map(|p| g.apply(p)).collect());
            let moved = umeyama_align(&moved_src, &moved_dst, false).unwrap();

            let expected = g.compose(&base.transform).compose(&g.inverse());
            let (t_err, r_err) = moved.transform.pose_error(&expected);
            prop_assert!(t_err < 1e-6, "translation error {t_err}");
            prop_assert!(r_err < 1e-6, "rotation error {r_err} deg");
        }
    }
}
