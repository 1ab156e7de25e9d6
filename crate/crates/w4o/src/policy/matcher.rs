use nalgebra::{Matrix3, SymmetricEigen, Vector3};

use super::{Observation, PolicyError};
use crate::agents::{SubgoalPrediction, SUBGOAL_OBJECT_LABEL};
use crate::geometry::{umeyama_align, CorrespondenceSet, PointCloud, RigidTransform};
use crate::scene::SceneRegistry;

/// Matched points farther apart than this (after ground-truth or
/// pre-aligned transport) are treated as having no counterpart.
const ORACLE_MATCH_RADIUS: f64 = 0.01;
const FALLBACK_MATCH_RADIUS: f64 = 0.02;

/// Pixel-correspondence backend between the current view and a subgoal.
#[derive(Debug, Clone)]
pub enum Matcher {
    /// Pairs points through the simulator's known object motion, looked
    /// up from the registry by image identity.
    Oracle(SceneRegistry),
    /// Self-contained: nearest neighbor after centroid plus
    /// principal-axes pre-alignment.
    Fallback,
}

/// Index pairs between the object's points in `now.cloud` and
/// `goal.cloud`. Indices refer to the full clouds.
pub fn match_correspondences(
    now: &Observation,
    goal: &SubgoalPrediction,
    object_id: &str,
    matcher: &Matcher,
) -> Result<CorrespondenceSet, PolicyError> {
    let missing = |view| PolicyError::ObjectMissing {
        object: object_id.to_string(),
        view,
    };
    let now_label = now.label_of(object_id).ok_or_else(|| missing("current"))?;
    let now_idx = now.cloud.label_indices(now_label);
    if now_idx.len() < 3 {
        return Err(if now_idx.is_empty() {
            missing("current")
        } else {
            PolicyError::TooFewMatches(now_idx.len())
        });
    }
    let goal_idx = goal.cloud.label_indices(SUBGOAL_OBJECT_LABEL);
    if goal_idx.len() < 3 {
        return Err(if goal_idx.is_empty() {
            missing("subgoal")
        } else {
            PolicyError::TooFewMatches(goal_idx.len())
        });
    }

    let (transport, radius) = match matcher {
        Matcher::Oracle(registry) => {
            let now_scene = registry
                .lookup(&now.image)
                .ok_or(PolicyError::UnknownImage("current"))?;
            let goal_scene = registry
                .lookup(&goal.image)
                .ok_or(PolicyError::UnknownImage("subgoal"))?;
            let p_now = now_scene.object(object_id).map_err(|_| missing("current"))?;
            let p_goal = goal_scene
                .object(object_id)
                .map_err(|_| missing("subgoal"))?;
            (p_goal.pose.compose(&p_now.pose.inverse()), ORACLE_MATCH_RADIUS)
        }
        Matcher::Fallback => {
            let p: Vec<Vector3<f64>> = now_idx.iter().map(|&i| now.cloud.points[i]).collect();
            let q: Vec<Vector3<f64>> = goal_idx.iter().map(|&j| goal.cloud.points[j]).collect();
            (pre_align(&p, &q), FALLBACK_MATCH_RADIUS)
        }
    };

    let mut pairs = Vec::new();
    for &i in &now_idx {
        let carried = transport.apply(&now.cloud.points[i]);
        let mut best = (f64::INFINITY, 0usize);
        for &j in &goal_idx {
            let d2 = (goal.cloud.points[j] - carried).norm_squared();
            if d2 < best.0 {
                best = (d2, j);
            }
        }
        if best.0.sqrt() <= radius {
            pairs.push((i, best.1));
        }
    }
    if pairs.len() < 3 {
        return Err(PolicyError::TooFewMatches(pairs.len()));
    }
    Ok(CorrespondenceSet::new(pairs)?)
}

/// Rigid pre-alignment of two clouds: centroids plus covariance principal
/// axes, with the sign ambiguity settled by nearest-neighbor cost.
fn pre_align(p: &[Vector3<f64>], q: &[Vector3<f64>]) -> RigidTransform {
    let cp = p.iter().sum::<Vector3<f64>>() / p.len() as f64;
    let cq = q.iter().sum::<Vector3<f64>>() / q.len() as f64;
    let ap = principal_axes(p, &cp);
    let aq = principal_axes(q, &cq);

    // Eigenvector signs are arbitrary; try the four proper sign flips and
    // keep the one whose transported subsample lands closest to q.
    let flips = [
        Vector3::new(1.0, 1.0, 1.0),
        Vector3::new(1.0, -1.0, -1.0),
        Vector3::new(-1.0, 1.0, -1.0),
        Vector3::new(-1.0, -1.0, 1.0),
    ];
    let stride = (p.len() / 200).max(1);
    let mut best: Option<(f64, RigidTransform)> = None;
    for flip in flips {
        let rotation = aq * Matrix3::from_diagonal(&flip) * ap.transpose();
        let transform = RigidTransform::new(rotation, cq - rotation * cp)
            .expect("product of orthonormal bases");
        let mut cost = 0.0;
        for point in p.iter().step_by(stride) {
            let carried = transform.apply(point);
            cost += q
                .iter()
                .map(|t| (t - carried).norm_squared())
                .fold(f64::INFINITY, f64::min);
        }
        if best.as_ref().is_none_or(|(c, _)| cost < *c) {
            best = Some((cost, transform));
        }
    }
    best.unwrap().1
}

/// Orthonormal covariance eigenbasis, columns sorted by descending
/// eigenvalue, right-handed.
fn principal_axes(points: &[Vector3<f64>], centroid: &Vector3<f64>) -> Matrix3<f64> {
    let mut cov = Matrix3::zeros();
    for point in points {
        let d = point - centroid;
        cov += d * d.transpose();
    }
    cov /= points.len() as f64;
    let eig = SymmetricEigen::new(cov);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let mut axes = Matrix3::from_columns(&[
        eig.eigenvectors.column(order[0]).into_owned(),
        eig.eigenvectors.column(order[1]).into_owned(),
        eig.eigenvectors.column(order[2]).into_owned(),
    ]);
    if axes.determinant() < 0.0 {
        let flipped = -axes.column(2).into_owned();
        axes.set_column(2, &flipped);
    }
    axes
}

/// Rigid transform carrying the matched now-points onto the goal points,
/// with one trimmed re-fit when the first fit is poor.
pub fn estimate_goal_transform(
    corr: &CorrespondenceSet,
    now_cloud: &PointCloud,
    goal_cloud: &PointCloud,
) -> Result<(RigidTransform, f64), PolicyError> {
    const TRIM_TRIGGER_RMSE: f64 = 0.005;
    const TRIM_KEEP: f64 = 0.8;

    let (src, dst) = corr.gather(now_cloud, goal_cloud)?;
    let fit = umeyama_align(&src, &dst, false)?;
    if fit.rmse <= TRIM_TRIGGER_RMSE || src.len() < 5 {
        return Ok((fit.transform, fit.rmse));
    }

    let mut order: Vec<usize> = (0..src.len()).collect();
    let residual = |i: &usize| (fit.transform.apply(&src.points[*i]) - dst.points[*i]).norm();
    order.sort_by(|a, b| residual(a).partial_cmp(&residual(b)).unwrap());
    let keep = ((src.len() as f64 * TRIM_KEEP).ceil() as usize).max(3);
    let kept_src = PointCloud::new(order[..keep].iter().map(|&i| src.points[i]).collect());
    let kept_dst = PointCloud::new(order[..keep].iter().map(|&i| dst.points[i]).collect());
    let refit = umeyama_align(&kept_src, &kept_dst, false)?;
    Ok((refit.transform, refit.rmse))
}
